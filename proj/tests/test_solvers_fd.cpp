#include <doctest.h>

#include <algorithm>

#include "nsopt/problems.hpp"
#include "nsopt/solvers_fd.hpp"

using namespace nsopt;

namespace {

SolverConfig fd_cfg(std::uint64_t iters) {
    SolverConfig cfg;
    cfg.schedule.rho_c = 1.0;
    cfg.schedule.rho_exp = 1.0;
    cfg.schedule.alpha_c = 1.0;
    cfg.schedule.alpha_exp = 1.0 / 3.0;
    cfg.max_iter = iters;
    cfg.log_every = 0;
    return cfg;
}

FunctionOracle linear(Vec a, double b = 0.0) {
    FunctionOracle f;
    f.dim = a.size();
    f.value = [a, b](const Vec& x) { return dot(a, x) + b; };
    f.pseudogradient = [a](const Vec&) { return a; };
    return f;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

}  // namespace

TEST_CASE("fd_solve: exact estimates on a linear objective reach the vertex") {
    FdProblem p;
    p.f = linear(Vec{1.0, -2.0});
    p.set = FeasibleSet::box(Vec{0, 0}, Vec{1, 1});
    p.x0 = Vec{0.5, 0.5};
    SolverConfig cfg = fd_cfg(2000);
    cfg.seed = 5;
    RunTrace t = fd_solve(p, {}, cfg);
    CHECK(norm2(sub(t.final_x(), Vec{0.0, 1.0})) < 1e-6);
}

TEST_CASE("fd_solve: linear objective follows the projected-gradient recursion exactly") {
    // central quotients of a linear function equal its gradient, so the path
    // must coincide with x <- project(x - rho c) step for step
    Vec c{1.0, -2.0};
    FdProblem p;
    p.f = linear(c);
    p.set = FeasibleSet::box(Vec{0, 0}, Vec{1, 1});
    p.x0 = Vec{0.5, 0.5};
    SolverConfig cfg = fd_cfg(200);
    cfg.seed = 31;
    Vec x = p.x0;
    for (std::uint64_t K = 1; K <= 40; ++K) {
        SolverConfig one = cfg;
        one.max_iter = K;
        Vec got = fd_solve(p, {}, one).final_x();
        Vec expect = x;
        axpy(-cfg.schedule.rho(K - 1), c, expect);
        expect = p.set->project(expect);
        CHECK(norm2(sub(got, expect)) == 0.0);
        x = expect;
    }
}

TEST_CASE("fd_solve: abs_sum(5) medians under the basic schedule") {
    ProblemSpec spec = make_abs_sum(5);
    FdProblem p;
    p.f = *spec.objective;
    p.x0 = Vec(5, 0.5);
    std::vector<double> finals, stay;
    for (std::uint64_t s = 0; s < 7; ++s) {
        SolverConfig cfg = fd_cfg(100000);
        cfg.seed = s;
        finals.push_back(fd_solve(p, {}, cfg).final_f());
        FdProblem at0 = p;
        at0.x0 = zeros(5);  // started at the minimizer, the walk must not wander
        stay.push_back(norm2(fd_solve(at0, {}, cfg).final_x()));
    }
    CHECK(median(finals) <= 0.05);
    CHECK(median(stay) <= 0.05);
}

TEST_CASE("fd_solve: direction averaging window still converges") {
    ProblemSpec spec = make_abs_sum(3);
    FdProblem p;
    p.f = *spec.objective;
    p.x0 = Vec(3, 0.5);
    FdOptions opts;
    opts.averaging_window = 4;
    SolverConfig cfg = fd_cfg(50000);
    cfg.schedule.rho_c = 0.25;  // the window sums up to 4 estimates per step
    cfg.seed = 2;
    RunTrace t = fd_solve(p, opts, cfg);
    CHECK(t.final_f() <= 0.1);
    FdOptions bad;
    bad.averaging_window = 0;
    CHECK_THROWS(fd_solve(p, bad, fd_cfg(5)));
}

TEST_CASE("fd_solve: forward and random-direction estimators also minimize") {
    ProblemSpec spec = make_abs_sum(3);
    FdProblem p;
    p.f = *spec.objective;
    p.x0 = Vec(3, 0.5);
    for (FdMode mode : {FdMode::forward, FdMode::random_dirs}) {
        FdOptions opts;
        opts.mode = mode;
        opts.random_p = 3;
        SolverConfig cfg = fd_cfg(60000);
        cfg.seed = 3;
        RunTrace t = fd_solve(p, opts, cfg);
        CHECK(t.final_f() <= 0.1);
    }
}

TEST_CASE("fd_minimax: single component equals projected fd descent") {
    ProblemSpec spec = make_abs_sum(2);
    FeasibleSet box = FeasibleSet::box(Vec{-1, -1}, Vec{1, 1});
    FdProblem p;
    p.f = *spec.objective;
    p.set = box;
    p.x0 = Vec{0.7, -0.4};
    SolverConfig cfg = fd_cfg(5000);
    cfg.log_every = 100;
    cfg.seed = 9;
    RunTrace plain = fd_solve(p, {}, cfg);
    RunTrace mm = fd_minimax_solve({*spec.objective}, box, p.x0, {}, cfg);
    CHECK(plain.same_path(mm));
}

TEST_CASE("fd_minimax: |x| on an interval and max on the simplex") {
    FunctionOracle id = linear(Vec{1.0});
    FunctionOracle neg = linear(Vec{-1.0});
    FeasibleSet seg = FeasibleSet::box(Vec{-1.0}, Vec{1.0});
    std::vector<double> finals;
    for (std::uint64_t s = 0; s < 5; ++s) {
        SolverConfig cfg = fd_cfg(100000);
        cfg.seed = s;
        RunTrace t = fd_minimax_solve({id, neg}, seg, Vec{0.8}, {}, cfg);
        finals.push_back(std::abs(t.final_x()[0]));
    }
    CHECK(median(finals) <= 0.05);

    FunctionOracle c0 = linear(Vec{1.0, 0.0});
    FunctionOracle c1 = linear(Vec{0.0, 1.0});
    SolverConfig cfg = fd_cfg(100000);
    cfg.seed = 17;
    RunTrace t = fd_minimax_solve({c0, c1}, FeasibleSet::simplex(2), Vec{1.0, 0.0}, {}, cfg);
    CHECK(std::max(t.final_x()[0], t.final_x()[1]) <= 0.5 + 0.05);
}

TEST_CASE("penalty_fd: inactive constraints reduce to projected descent on f0") {
    ProblemSpec spec = make_abs_sum(2);
    FeasibleSet box = FeasibleSet::box(Vec{-1, -1}, Vec{1, 1});
    FunctionOracle satisfied = linear(zeros(2), -5.0);  // always -5 <= 0
    Vec x0{0.6, -0.2};
    SolverConfig cfg = fd_cfg(3000);
    cfg.log_every = 100;
    cfg.seed = 21;
    FdProblem p;
    p.f = *spec.objective;
    p.set = box;
    p.x0 = x0;
    RunTrace plain = fd_solve(p, {}, cfg);
    RunTrace pen = penalty_fd_solve(*spec.objective, {satisfied}, Vec{2.0}, box, x0, {}, cfg);
    CHECK(plain.same_path(pen));
}

TEST_CASE("penalty_fd: exact penalty pins min x subject to x >= 0 on [-2,2]") {
    FunctionOracle f0 = linear(Vec{1.0});
    FunctionOracle g = linear(Vec{-1.0});  // -x <= 0
    FeasibleSet seg = FeasibleSet::box(Vec{-2.0}, Vec{2.0});
    std::vector<double> finals;
    for (std::uint64_t s = 0; s < 7; ++s) {
        SolverConfig cfg = fd_cfg(100000);
        cfg.seed = s;
        RunTrace t = penalty_fd_solve(f0, {g}, Vec{2.0}, seg, Vec{1.0}, {}, cfg);
        finals.push_back(t.final_x()[0]);
    }
    double m = median(finals);
    CHECK(m >= -0.05);
    CHECK(m <= 0.05);
}

TEST_CASE("exact-penalty sweep: grid argmin enters the solution set at finite weight") {
    // P(x, lambda) = x + lambda max(0, -x) on [-2, 2], solution set Y = {0}
    auto P = [](double x, double lam) { return x + lam * std::max(0.0, -x); };
    const double step = 1e-3;
    auto grid_argmin = [&](double lam) {
        double best_x = -2.0, best_v = P(-2.0, lam);
        for (double x = -2.0; x <= 2.0 + 1e-12; x += step) {
            double v = P(x, lam);
            if (v < best_v - 1e-15) {
                best_v = v;
                best_x = x;
            }
        }
        return best_x;
    };
    CHECK(std::abs(grid_argmin(2.0)) <= step);
    CHECK(std::abs(grid_argmin(4.0)) <= step);
    CHECK(std::abs(grid_argmin(0.5)) > 1.0);  // outside Y: slides to the left edge
    // at the threshold weight the minimum value is already attained on Y
    double vmin = P(grid_argmin(1.0), 1.0);
    CHECK(vmin == doctest::Approx(P(0.0, 1.0)).epsilon(1e-9));
}

TEST_CASE("analytic penalty direction: hand values and the linearized KKT identity") {
    auto pd = analytic_penalty_direction(Vec{1, 0}, Vec{0, 1}, 2.0);
    CHECK(pd.u == doctest::Approx(2.0));
    CHECK(pd.d[0] == doctest::Approx(-1.0));
    CHECK(pd.d[1] == doctest::Approx(-2.0));

    auto un = analytic_penalty_direction(Vec{1, 0}, Vec{0, 1}, -0.5);
    CHECK(un.u == 0.0);
    CHECK(un.d == Vec{-1.0, 0.0});

    auto par = analytic_penalty_direction(Vec{0, 1}, Vec{0, 1}, -1.0);
    CHECK(par.d == Vec{0.0, -1.0});

    CHECK_THROWS_AS(analytic_penalty_direction(Vec{1, 0}, Vec{0, 0}, 0.5), OracleError);

    Rng rng = Rng::for_run(401, 0);
    for (int t = 0; t < 50; ++t) {
        Vec zf = rng.uniform_box(3, -2.0, 2.0);
        Vec zh = rng.uniform_box(3, -2.0, 2.0);
        if (norm2(zh) < 0.1) continue;
        double h = rng.uniform(-1.0, 2.0);
        auto r = analytic_penalty_direction(zf, zh, h);
        if (h >= 0.0) {
            double u = std::max(0.0, (h - dot(zf, zh)) / norm2_sq(zh));
            CHECK(r.u == doctest::Approx(u).epsilon(1e-12));
            Vec d = scaled(zf, -1.0);
            axpy(-u, zh, d);
            CHECK(norm2(sub(r.d, d)) < 1e-12);
            // active linearization holds with equality whenever u > 0
            if (r.u > 0.0) CHECK(dot(zh, r.d) + h == doctest::Approx(0.0).epsilon(1e-9));
        } else {
            CHECK(norm2(sub(r.d, scaled(zf, -1.0))) == 0.0);
        }
    }
}

TEST_CASE("analytic_penalty_solve drives the circle-constrained linear problem to KKT") {
    ProblemSpec spec = make_circle_linear();
    AnalyticPenaltyOptions opts;
    SolverConfig cfg = fd_cfg(100000);
    cfg.schedule.rho_c = 0.2;
    cfg.schedule.rho_exp = 0.8;
    cfg.schedule.alpha_exp = 0.25;
    cfg.schedule.a_c = 1.0;
    cfg.schedule.a_exp = 0.6;
    cfg.seed = 3;
    auto res =
        analytic_penalty_solve(*spec.objective, *spec.constraint_h, Vec{0.5, 0.5}, opts, cfg);
    const Vec& x = res.trace.final_x();
    double lam = res.final_multiplier;
    Vec grad_l = spec.objective->pseudogradient(x);
    axpy(lam, spec.constraint_h->pseudogradient(x), grad_l);
    double resid = norm2(grad_l) + std::max(0.0, spec.constraint_h->value(x)) +
                   std::abs(lam * spec.constraint_h->value(x));
    CHECK(resid <= 0.05);
}

TEST_CASE("arrow_hurwicz: saddle averages on the circle problem") {
    FunctionOracle f0 = linear(Vec{1.0});
    FunctionOracle h;
    h.dim = 1;
    h.value = [](const Vec& x) { return x[0] * x[0] - 1.0; };
    h.pseudogradient = [](const Vec& x) { return Vec{2.0 * x[0]}; };
    FeasibleSet X = FeasibleSet::box(Vec{-2.0}, Vec{2.0});
    FeasibleSet U = FeasibleSet::box(Vec{0.0}, Vec{10.0});
    std::vector<double> xs, us;
    for (std::uint64_t s = 0; s < 5; ++s) {
        SolverConfig cfg = fd_cfg(100000);
        cfg.schedule.rho_c = 0.5;
        cfg.schedule.rho_exp = 0.7;
        cfg.schedule.alpha_c = 0.3;
        cfg.schedule.alpha_exp = 0.5;
        cfg.seed = s;
        SaddleResult r = arrow_hurwicz_solve(f0, {h}, X, U, Vec{0.0}, {}, cfg);
        xs.push_back(r.x_hat[0]);
        us.push_back(r.u_hat[0]);
        CHECK(X.contains(r.trace.final_x(), 1e-9));
    }
    CHECK(std::abs(median(xs) + 1.0) <= 0.05);
    CHECK(std::abs(median(us) - 0.5) <= 0.1);
}

TEST_CASE("arrow_hurwicz: inactive constraints leave the dual average near zero") {
    FunctionOracle f0;  // (x - 0.2)^2, interior optimum
    f0.dim = 1;
    f0.value = [](const Vec& x) { return (x[0] - 0.2) * (x[0] - 0.2); };
    f0.pseudogradient = [](const Vec& x) { return Vec{2.0 * (x[0] - 0.2)}; };
    FunctionOracle g = linear(Vec{1.0}, -0.9);  // x - 0.9 <= 0, inactive at 0.2
    FeasibleSet X = FeasibleSet::box(Vec{-1.0}, Vec{1.0});
    FeasibleSet U = FeasibleSet::box(Vec{0.0}, Vec{10.0});
    SolverConfig cfg = fd_cfg(50000);
    cfg.schedule.rho_c = 0.5;
    cfg.schedule.rho_exp = 0.7;
    cfg.schedule.alpha_c = 0.3;
    cfg.schedule.alpha_exp = 0.5;
    cfg.seed = 11;
    SaddleResult r = arrow_hurwicz_solve(f0, {g}, X, U, Vec{-0.8}, {}, cfg);
    CHECK(std::abs(r.u_hat[0]) <= 0.05);
    CHECK(std::abs(r.x_hat[0] - 0.2) <= 0.05);

    // constant objective: the primal average stays feasible, dual decays
    FunctionOracle c0 = linear(zeros(1), 3.0);
    SaddleResult r2 = arrow_hurwicz_solve(c0, {g}, X, U, Vec{0.0}, {}, cfg);
    CHECK(X.contains(r2.x_hat, 1e-9));
    CHECK(std::abs(r2.u_hat[0]) <= 0.1);
}

TEST_CASE("envelope_value: single-cone formula") {
    // one sample (0, 1) with L = 1: phi(x) = 1 - |x|
    std::vector<std::pair<double, double>> pts{{0.0, 1.0}};
    CHECK(envelope_value(pts, 1.0, EnvelopeMode::cone, {}, 2.0) == doctest::Approx(-1.0));
    CHECK(envelope_value(pts, 1.0, EnvelopeMode::cone, {}, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("piyavskii: a line of slope exactly L is certified after the endpoints") {
    FunctionOracle f = linear(Vec{6.0}, 1.0);
    GlobalOptions opts;
    opts.eps_gap = 1e-9;
    GlobalResult g = piyavskii_solve(f, 0.0, 1.0, 6.0, opts);
    CHECK(g.evals <= 3);
    CHECK(g.gap <= 1e-9);
    CHECK(g.f_best == doctest::Approx(1.0));
}

TEST_CASE("piyavskii: certified gap on the standard two-sine curve") {
    ProblemSpec spec = make_sin_sum();
    GlobalOptions opts;
    opts.eps_gap = 1e-3;
    opts.max_evals = 300;
    GlobalResult g = piyavskii_solve(*spec.objective, 2.7, 7.5, 6.0, opts);
    CHECK(g.evals <= 300);
    CHECK(g.gap <= 1e-3);

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= 1000000; ++i) {
        double x = 2.7 + (7.5 - 2.7) * double(i) / 1000000.0;
        best = std::min(best, spec.objective->value(Vec{x}));
    }
    CHECK(g.f_best - best <= 1e-3);
    CHECK(g.f_best + 1e-9 >= best);
    // the certificate really bounds the distance to the dense-grid optimum
    CHECK(g.f_best - best <= g.gap + 1e-12);
}

TEST_CASE("piyavskii: envelope is a lower bound and grows pointwise") {
    ProblemSpec spec = make_sin_sum();
    GlobalOptions opts;
    opts.eps_gap = 1e-4;
    opts.max_evals = 120;
    GlobalResult g = piyavskii_solve(*spec.objective, 2.7, 7.5, 6.0, opts);
    Rng rng = Rng::for_run(431, 0);
    for (int i = 0; i < 1000; ++i) {
        double x = rng.uniform(2.7, 7.5);
        double phi = envelope_value(g.points, 6.0, EnvelopeMode::cone, {}, x);
        CHECK(phi <= spec.objective->value(Vec{x}) + 1e-9);
    }
    // prefix envelopes are pointwise nondecreasing in the number of samples
    std::vector<std::pair<double, double>> prefix(g.points.begin(), g.points.begin() + 10);
    std::vector<std::pair<double, double>> more(g.points.begin(), g.points.begin() + 40);
    for (int i = 0; i < 200; ++i) {
        double x = rng.uniform(2.7, 7.5);
        CHECK(envelope_value(prefix, 6.0, EnvelopeMode::cone, {}, x) <=
              envelope_value(more, 6.0, EnvelopeMode::cone, {}, x) + 1e-12);
    }
}

TEST_CASE("piyavskii: paraboloid envelope with a gradient oracle") {
    FunctionOracle f;  // smooth multiextremal curve
    f.dim = 1;
    f.value = [](const Vec& x) { return std::sin(x[0]) + 0.3 * std::sin(3.0 * x[0]); };
    f.pseudogradient = [](const Vec& x) {
        return Vec{std::cos(x[0]) + 0.9 * std::cos(3.0 * x[0])};
    };
    GlobalOptions opts;
    opts.mode = EnvelopeMode::paraboloid;
    opts.eps_gap = 1e-4;
    opts.max_evals = 200;
    // gradient Lipschitz constant: |f''| <= 1 + 2.7 < 4
    GlobalResult g = piyavskii_solve(f, 0.0, 6.28, 4.0, opts);
    CHECK(g.gap <= 1e-4);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= 400000; ++i) {
        double x = 6.28 * double(i) / 400000.0;
        best = std::min(best, f.value(Vec{x}));
    }
    CHECK(std::abs(g.f_best - best) <= 1e-3);
}

TEST_CASE("piyavskii constrained: feasible carving and infeasibility report") {
    FunctionOracle f = linear(Vec{1.0});  // minimize x
    GlobalConstraint con;
    FunctionOracle hcon;
    hcon.dim = 1;
    hcon.value = [](const Vec& x) { return 0.5 - x[0]; };  // feasible iff x >= 0.5
    hcon.pseudogradient = [](const Vec&) { return Vec{-1.0}; };
    con.h = hcon;
    con.lipschitz = 1.0;
    GlobalOptions opts;
    opts.eps_gap = 1e-6;
    opts.max_evals = 200;
    GlobalResult g = piyavskii_solve(f, 0.0, 1.0, 1.0, opts, con);
    CHECK_FALSE(g.infeasible);
    CHECK(g.x_best == doctest::Approx(0.5).epsilon(1e-3));

    GlobalConstraint never;
    never.h = linear(Vec{0.0}, 1.0);  // h == 1 > 0 everywhere
    never.lipschitz = 1.0;
    GlobalResult g2 = piyavskii_solve(f, 0.0, 1.0, 1.0, opts, never);
    CHECK(g2.infeasible);
}
