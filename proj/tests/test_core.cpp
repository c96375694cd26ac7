#include <doctest.h>
#include <functional>

#include "nsopt/feasible_set.hpp"
#include "nsopt/lp.hpp"
#include "nsopt/min_norm_point.hpp"
#include "nsopt/rng.hpp"

using namespace nsopt;

namespace {

// Brute-force projection onto the probability simplex by enumerating support
// sets: on each face the minimizer is the shifted mean of the active block.
Vec simplex_projection_brute(const Vec& y, double s = 1.0) {
    const std::size_t n = y.size();
    Vec best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<std::size_t> S;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) S.push_back(i);
        double sum = 0.0;
        for (std::size_t i : S) sum += y[i];
        double shift = (sum - s) / double(S.size());
        Vec x = zeros(n);
        bool ok = true;
        for (std::size_t i : S) {
            x[i] = y[i] - shift;
            if (x[i] < -1e-12) ok = false;
        }
        if (!ok) continue;
        double d = norm2_sq(sub(x, y));
        if (d < best_d) {
            best_d = d;
            best = x;
        }
    }
    return best;
}

// All basic feasible points of {Ax <= b, lo <= x <= hi} by enumerating
// n-subsets of tight constraints.
std::vector<Vec> enumerate_vertices(const LpProblem& p) {
    const std::size_t n = p.c.size();
    std::vector<Vec> rows;
    Vec rhs;
    for (std::size_t i = 0; i < p.A.rows; ++i) {
        rows.push_back(p.A.row(i));
        rhs.push_back(p.b[i]);
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (std::isfinite(p.lo[j])) {
            Vec r = zeros(n);
            r[j] = -1.0;
            rows.push_back(r);
            rhs.push_back(-p.lo[j]);
        }
        if (std::isfinite(p.hi[j])) {
            Vec r = zeros(n);
            r[j] = 1.0;
            rows.push_back(r);
            rhs.push_back(p.hi[j]);
        }
    }
    std::vector<Vec> vertices;
    std::vector<std::size_t> pick(n);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t got) {
        if (got == n) {
            Mat M(n, n);
            Vec d(n);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) M(i, j) = rows[pick[i]][j];
                d[i] = rhs[pick[i]];
            }
            try {
                Vec x = solve_dense(M, d, 1e-9);
                bool feas = true;
                for (std::size_t i = 0; i < rows.size() && feas; ++i)
                    if (dot(rows[i], x) > rhs[i] + 1e-7) feas = false;
                if (feas) vertices.push_back(x);
            } catch (const std::runtime_error&) {
            }
            return;
        }
        for (std::size_t i = start; i < rows.size(); ++i) {
            pick[got] = i;
            rec(i + 1, got + 1);
        }
    };
    rec(0, 0);
    return vertices;
}

// Facial enumeration for the minimum-norm point of a convex hull (exact for
// small point sets): try every subset's affine minimizer, keep the feasible
// candidates.
Vec min_norm_brute(const std::vector<Vec>& pts) {
    const std::size_t m = pts.size();
    Vec best;
    double best_n = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 1; mask < (1u << m); ++mask) {
        std::vector<std::size_t> S;
        for (std::size_t i = 0; i < m; ++i)
            if (mask & (1u << i)) S.push_back(i);
        const std::size_t k = S.size();
        Mat M(k + 1, k + 1);
        Vec rhs(k + 1, 0.0);
        rhs[0] = 1.0;
        for (std::size_t i = 0; i < k; ++i) {
            M(0, i + 1) = 1.0;
            M(i + 1, 0) = 1.0;
            for (std::size_t j = 0; j < k; ++j) M(i + 1, j + 1) = dot(pts[S[i]], pts[S[j]]);
        }
        Vec sol;
        try {
            sol = solve_dense(M, rhs, 1e-12);
        } catch (const std::runtime_error&) {
            continue;
        }
        bool feas = true;
        for (std::size_t i = 0; i < k; ++i)
            if (sol[i + 1] < -1e-10) feas = false;
        if (!feas) continue;
        Vec x = zeros(pts[0].size());
        for (std::size_t i = 0; i < k; ++i) axpy(sol[i + 1], pts[S[i]], x);
        if (norm2_sq(x) < best_n) {
            best_n = norm2_sq(x);
            best = x;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("rng: counter-based streams replay and split independently") {
    Rng a = Rng::for_run(42, 0);
    Rng b = Rng::for_run(42, 0);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c = Rng::for_run(42, 1);
    CHECK(Rng::for_run(42, 0).next_u64() != c.next_u64());
    // split does not disturb the parent stream
    Rng d = Rng::for_run(7, 0);
    std::uint64_t before = Rng::for_run(7, 0).next_u64();
    (void)d.split(3);
    CHECK(d.next_u64() == before);
    // uniform stays in range, ball samples stay in the ball
    Rng r = Rng::for_run(9, 0);
    for (int i = 0; i < 1000; ++i) {
        double u = r.uniform(-2.0, 3.0);
        CHECK(u >= -2.0);
        CHECK(u < 3.0);
    }
    Vec center{1.0, -1.0, 0.5};
    for (int i = 0; i < 500; ++i)
        CHECK(norm2(sub(r.uniform_ball(center, 0.7), center)) <= 0.7 + 1e-12);
}

TEST_CASE("normal quantile inverts the cdf") {
    for (double p : {0.001, 0.01, 0.3, 0.5, 0.9, 0.999})
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-7));
}

TEST_CASE("project: named examples") {
    auto box = FeasibleSet::box(Vec{0, 0}, Vec{1, 1});
    CHECK(box.project(Vec{2, -1}) == Vec{1, 0});

    auto ball = FeasibleSet::ball(Vec{0, 0}, 1.0);
    Vec p = ball.project(Vec{3, 4});
    CHECK(p[0] == doctest::Approx(0.6));
    CHECK(p[1] == doctest::Approx(0.8));

    auto sx = FeasibleSet::simplex(2);
    Vec q = sx.project(Vec{0.8, 0.8});
    Vec brute = simplex_projection_brute(Vec{0.8, 0.8});
    CHECK(norm2(sub(q, brute)) < 1e-12);
    CHECK(q[0] == doctest::Approx(0.5));
}

TEST_CASE("project: simplex matches face enumeration on random points") {
    Rng rng = Rng::for_run(11, 0);
    for (int t = 0; t < 300; ++t) {
        Vec y = rng.uniform_box(4, -1.0, 2.0);
        Vec a = FeasibleSet::simplex(4).project(y);
        Vec b = simplex_projection_brute(y);
        CHECK(norm2(sub(a, b)) < 1e-9);
    }
}

TEST_CASE("project: idempotent and non-expansive on random pairs") {
    Rng rng = Rng::for_run(13, 0);
    Mat A(3, 3);
    Vec b{1.0, 1.5, 2.0};
    A(0, 0) = 1;
    A(0, 1) = 1;
    A(0, 2) = 1;
    A(1, 0) = -1;
    A(2, 2) = 1;
    std::vector<FeasibleSet> sets{FeasibleSet::box(Vec{-1, -1, -1}, Vec{1, 2, 3}),
                                  FeasibleSet::ball(Vec{0.5, 0, 0}, 1.5),
                                  FeasibleSet::simplex(3), FeasibleSet::polytope(A, b)};
    for (const auto& set : sets) {
        for (int t = 0; t < 200; ++t) {
            Vec y1 = rng.uniform_box(3, -3.0, 3.0), y2 = rng.uniform_box(3, -3.0, 3.0);
            Vec p1 = set.project(y1), p2 = set.project(y2);
            CHECK(set.contains(p1, 1e-8));
            CHECK(norm2(sub(set.project(p1), p1)) < 1e-9);                    // idempotent
            CHECK(norm2(sub(p1, p2)) <= norm2(sub(y1, y2)) + 1e-9);           // non-expansive
        }
    }
}

TEST_CASE("project: equality manifold and rank errors") {
    Mat N(1, 2);
    N(0, 0) = 1;
    N(0, 1) = 1;
    auto mani = FeasibleSet::equality_manifold(N, Vec{1.0});
    Vec p = mani.project(Vec{1.0, 1.0});
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));
    CHECK(mani.contains(p, 1e-12));

    Mat bad(2, 2);
    bad(0, 0) = 1;
    bad(0, 1) = 1;
    bad(1, 0) = 2;
    bad(1, 1) = 2;
    CHECK_THROWS_AS(FeasibleSet::equality_manifold(bad, Vec{1.0, 2.0}), RankError);
}

TEST_CASE("dimension mismatches are structured errors") {
    auto box = FeasibleSet::box(Vec{0, 0}, Vec{1, 1});
    CHECK_THROWS_AS(box.project(Vec{1.0, 2.0, 3.0}), DimensionError);
    CHECK_THROWS_AS(box.linmin(Vec{1.0}), DimensionError);
    CHECK_THROWS_AS(box.max_step(Vec{0.5, 0.5}, Vec{1.0}), DimensionError);
    CHECK_THROWS_AS(dot(Vec{1.0}, Vec{1.0, 2.0}), DimensionError);
}

TEST_CASE("project: empty polytope reports a structured error") {
    Mat A(2, 1);
    A(0, 0) = 1;
    A(1, 0) = -1;
    Vec b{-1.0, -1.0};  // x <= -1 and x >= 1
    auto set = FeasibleSet::polytope(A, b);
    CHECK_THROWS_AS(set.project(Vec{0.0}), FeasibilityError);
}

TEST_CASE("linmin: named examples and random domination") {
    auto box = FeasibleSet::box(Vec{-1, -1}, Vec{1, 1});
    CHECK(box.linmin(Vec{1, -2}) == Vec{-1, 1});

    auto sx = FeasibleSet::simplex(3);
    CHECK(sx.linmin(Vec{3, 1, 2}) == Vec{0, 1, 0});

    auto ball = FeasibleSet::ball(Vec{0, 0}, 2.0);
    Vec m = ball.linmin(Vec{1, 0});
    CHECK(m[0] == doctest::Approx(-2.0));
    CHECK(m[1] == doctest::Approx(0.0));

    CHECK_THROWS_AS(FeasibleSet::box(Vec{0.0}, Vec(1, std::numeric_limits<double>::infinity()))
                        .linmin(Vec{-1.0}),
                    UnboundedError);

    Rng rng = Rng::for_run(17, 0);
    for (const auto& set : {box, ball}) {
        for (int t = 0; t < 1000; ++t) {
            Vec c = rng.uniform_box(2, -1.0, 1.0);
            Vec star = set.linmin(c);
            Vec x = set.project(rng.uniform_box(2, -2.0, 2.0));
            CHECK(dot(c, star) <= dot(c, x) + 1e-9);
        }
    }
    for (int t = 0; t < 1000; ++t) {
        Vec c = rng.uniform_box(3, -1.0, 1.0);
        Vec star = sx.linmin(c);
        Vec x = sx.project(rng.uniform_box(3, -1.0, 1.0));
        CHECK(dot(c, star) <= dot(c, x) + 1e-9);
    }
}

TEST_CASE("max_step: named examples and boundary property") {
    auto box = FeasibleSet::box(Vec{0, 0}, Vec{1, 1});
    MaxStep s = box.max_step(Vec{0.5, 0.5}, Vec{1, 0});
    CHECK(s.finite);
    CHECK(s.value == doctest::Approx(0.5));

    auto nonneg = FeasibleSet::box(zeros(3), Vec(3, std::numeric_limits<double>::infinity()));
    MaxStep s2 = nonneg.max_step(Vec{0.5, 0.3, 0.2}, Vec{0.7, -0.3, -0.4});
    CHECK(s2.finite);
    CHECK(s2.value == doctest::Approx(0.5));

    MaxStep s3 = box.max_step(Vec{0.5, 0.5}, zeros(2));
    CHECK_FALSE(s3.finite);

    CHECK_THROWS_AS(box.max_step(Vec{2.0, 0.5}, Vec{1, 0}), FeasibilityError);

    Rng rng = Rng::for_run(19, 0);
    std::vector<FeasibleSet> sets{box, FeasibleSet::ball(Vec{0, 0}, 1.0), FeasibleSet::simplex(2)};
    for (const auto& set : sets) {
        for (int t = 0; t < 300; ++t) {
            Vec x = set.project(rng.uniform_box(2, -1.0, 1.0));
            Vec d = rng.uniform_box(2, -1.0, 1.0);
            if (set.kind() == FeasibleSet::Kind::simplex) {
                // keep the direction on the simplex plane
                double m = (d[0] + d[1]) / 2.0;
                d[0] -= m;
                d[1] -= m;
            }
            MaxStep ms = set.max_step(x, d);
            if (!ms.finite || norm2(d) < 1e-9) continue;
            Vec inside = x, outside = x;
            axpy(std::max(ms.value - 1e-12, 0.0), d, inside);
            axpy(ms.value + 1e-6, d, outside);
            CHECK(set.contains(inside, 1e-9));
            if (ms.value > 1e-9) CHECK_FALSE(set.contains(outside, 1e-12));
        }
    }
}

TEST_CASE("lp_solve: named examples") {
    {
        LpProblem p;
        p.A = Mat(1, 1);
        p.A(0, 0) = 1;
        p.b = Vec{1.0};
        p.c = Vec{-1.0};
        p.lo = Vec{0.0};
        p.hi = Vec{std::numeric_limits<double>::infinity()};
        LpResult r = lp_solve(p);
        REQUIRE(r.status == LpStatus::optimal);
        CHECK(r.x[0] == doctest::Approx(1.0));
    }
    {
        // min sigma s.t. d - sigma <= 0, -d - sigma <= 0, -1 <= d <= 1
        LpProblem p;
        p.A = Mat(2, 2);
        p.A(0, 0) = 1;
        p.A(0, 1) = -1;
        p.A(1, 0) = -1;
        p.A(1, 1) = -1;
        p.b = Vec{0.0, 0.0};
        p.c = Vec{0.0, 1.0};
        p.lo = Vec{-1.0, -std::numeric_limits<double>::infinity()};
        p.hi = Vec{1.0, std::numeric_limits<double>::infinity()};
        LpResult r = lp_solve(p);
        REQUIRE(r.status == LpStatus::optimal);
        CHECK(std::abs(r.x[0]) < 1e-9);
        CHECK(std::abs(r.x[1]) < 1e-9);
    }
    {
        LpProblem p;  // infeasible
        p.A = Mat(2, 1);
        p.A(0, 0) = 1;
        p.A(1, 0) = -1;
        p.b = Vec{-1.0, -1.0};
        p.c = Vec{1.0};
        p.lo = Vec{-std::numeric_limits<double>::infinity()};
        p.hi = Vec{std::numeric_limits<double>::infinity()};
        CHECK(lp_solve(p).status == LpStatus::infeasible);
    }
    {
        LpProblem p;  // unbounded
        p.A = Mat(0, 1);
        p.b = {};
        p.c = Vec{1.0};
        p.lo = Vec{-std::numeric_limits<double>::infinity()};
        p.hi = Vec{std::numeric_limits<double>::infinity()};
        CHECK(lp_solve(p).status == LpStatus::unbounded);
    }
}

TEST_CASE("lp_solve: random instances match vertex enumeration") {
    Rng rng = Rng::for_run(23, 0);
    int solved = 0;
    for (int t = 0; t < 120; ++t) {
        LpProblem p;
        std::size_t n = 3 + t % 3;  // up to 5 variables
        p.A = Mat(3, n);
        p.b = Vec(3);
        p.c = Vec(n);
        p.lo = Vec(n, -1.0);
        p.hi = Vec(n, 2.0);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < n; ++j) p.A(i, j) = rng.uniform(-1.0, 1.0);
            p.b[i] = rng.uniform(-0.5, 1.5);
        }
        for (std::size_t j = 0; j < n; ++j) p.c[j] = rng.uniform(-1.0, 1.0);
        LpResult r = lp_solve(p);
        std::vector<Vec> verts = enumerate_vertices(p);
        if (verts.empty()) {
            CHECK(r.status != LpStatus::optimal);
            continue;
        }
        REQUIRE(r.status == LpStatus::optimal);
        double best = std::numeric_limits<double>::infinity();
        for (const Vec& v : verts) best = std::min(best, dot(p.c, v));
        CHECK(r.value == doctest::Approx(best).epsilon(1e-6));
        ++solved;
    }
    CHECK(solved > 60);  // the random family must actually exercise the solver
}

TEST_CASE("equality_projector: hand example and defining identities") {
    Mat N(1, 2);
    N(0, 0) = 1;
    N(0, 1) = 1;
    Mat P = equality_projector(N);
    Vec g = matvec(P, Vec{1.0, 0.0});
    CHECK(g[0] == doctest::Approx(0.5));
    CHECK(g[1] == doctest::Approx(-0.5));

    CHECK(equality_projector(Mat(0, 3)).a == Mat::identity(3).a);

    // row-space input maps to zero
    Vec row = matvec_t(N, Vec{2.5});
    CHECK(norm2(matvec(P, row)) < 1e-12);

    // P^2 = P and N P = 0 within 1e-10 on a random full-rank N
    Rng rng = Rng::for_run(31, 0);
    Mat M(2, 5);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 5; ++j) M(i, j) = rng.uniform(-1.0, 1.0);
    Mat Q = equality_projector(M);
    Mat QQ = matmul(Q, Q);
    double err = 0.0;
    for (std::size_t i = 0; i < QQ.a.size(); ++i) err = std::max(err, std::abs(QQ.a[i] - Q.a[i]));
    CHECK(err < 1e-10);
    Mat NP = matmul(M, Q);
    double err2 = 0.0;
    for (double v : NP.a) err2 = std::max(err2, std::abs(v));
    CHECK(err2 < 1e-10);

    Mat bad(2, 3);
    for (std::size_t j = 0; j < 3; ++j) {
        bad(0, j) = 1.0;
        bad(1, j) = 2.0;
    }
    CHECK_THROWS_AS(equality_projector(bad), RankError);
}

TEST_CASE("min_norm_point: symmetry, singleton, and facial enumeration") {
    CHECK(norm2(min_norm_point({Vec{1, 0}, Vec{-1, 0}})) < 1e-10);
    CHECK(min_norm_point({Vec{1, 0}}) == Vec{1, 0});

    Rng rng = Rng::for_run(37, 0);
    for (int t = 0; t < 200; ++t) {
        std::size_t m = 2 + t % 5;  // up to 6 points in E3
        std::vector<Vec> pts;
        for (std::size_t i = 0; i < m; ++i) pts.push_back(rng.uniform_box(3, -1.0, 1.0));
        Vec fast = min_norm_point(pts, 1e-10);
        Vec brute = min_norm_brute(pts);
        CHECK(std::abs(norm2(fast) - norm2(brute)) < 1e-8);
    }
}

TEST_CASE("min_norm_point: result norm dominated by inputs and mean") {
    Rng rng = Rng::for_run(41, 0);
    for (int t = 0; t < 100; ++t) {
        std::vector<Vec> pts;
        Vec mean = zeros(4);
        for (int i = 0; i < 5; ++i) {
            pts.push_back(rng.uniform_box(4, -2.0, 2.0));
            axpy(0.2, pts.back(), mean);
        }
        double n = norm2(min_norm_point(pts));
        for (const Vec& p : pts) CHECK(n <= norm2(p) + 1e-9);
        CHECK(n <= norm2(mean) + 1e-9);
    }
}
