#include <doctest.h>

#include "nsopt/problems.hpp"
#include "nsopt/solvers_det.hpp"

using namespace nsopt;

namespace {

SolverConfig quiet(std::uint64_t iters, double rho_c = 1.0, double rho_exp = 1.0) {
    SolverConfig cfg;
    cfg.schedule.rho_c = rho_c;
    cfg.schedule.rho_exp = rho_exp;
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

}  // namespace

TEST_CASE("ggd: zero pseudogradient keeps the iterate fixed") {
    FunctionOracle quad;
    quad.dim = 2;
    quad.value = [](const Vec& x) { return 0.5 * norm2_sq(x); };
    quad.pseudogradient = [](const Vec& x) { return x; };
    DetProblem p;
    p.f = quad;
    p.x0 = zeros(2);
    RunTrace t = ggd_solve(p, quiet(1000));
    CHECK(norm2(t.final_x()) == 0.0);
    CHECK(t.final_f() == 0.0);
}

TEST_CASE("ggd: max_abs(10) normalized reaches 1e-2 from random starts") {
    ProblemSpec spec = make_max_abs(10);
    DetProblem p;
    p.f = *spec.objective;
    Rng rng = Rng::for_run(301, 0);
    for (int s = 0; s < 3; ++s) {
        p.x0 = rng.uniform_box(10, -1.0, 1.0);
        SolverConfig cfg = quiet(200000);
        cfg.normalize = true;
        RunTrace t = ggd_solve(p, cfg);
        CHECK(t.final_f() <= 1e-2);
    }
}

TEST_CASE("ggd: normalized steps move exactly rho_k") {
    ProblemSpec spec = make_max_abs(4);
    DetProblem p;
    p.f = *spec.objective;
    p.x0 = Vec{0.9, -0.7, 0.2, 0.4};
    Vec prev = p.x0;
    for (std::uint64_t K = 1; K <= 6; ++K) {
        SolverConfig cfg = quiet(K);
        cfg.normalize = true;
        RunTrace t = ggd_solve(p, cfg);
        double step_len = norm2(sub(t.final_x(), prev));
        CHECK(step_len == doctest::Approx(cfg.schedule.rho(K - 1)).epsilon(1e-12));
        prev = t.final_x();
    }
}

TEST_CASE("ggd single_h: constraint pseudogradient drives infeasible iterates back") {
    ProblemSpec spec = make_circle_linear();
    DetProblem p;
    p.f = *spec.objective;
    p.h = spec.constraint_h;
    p.x0 = Vec{1.5, 1.5};  // outside the disc
    SolverConfig cfg = quiet(100000);
    cfg.normalize = true;
    GgdOptions o;
    o.mode = ConstraintMode::single_h;
    RunTrace t = ggd_solve(p, cfg, o);
    CHECK(spec.constraint_h->value(t.final_x()) <= 1e-2);
    CHECK(t.final_x()[0] == doctest::Approx(-1.0).epsilon(0.05));
}

TEST_CASE("ggd leading mode: constraint level first, then the objective") {
    ProblemSpec spec = make_circle_linear();
    DetProblem p;
    p.f = *spec.objective;
    p.leading = {{*spec.constraint_h, 0.0}};
    p.x0 = zeros(2);
    SolverConfig cfg = quiet(100000);
    cfg.normalize = true;
    GgdOptions o;
    o.mode = ConstraintMode::leading_list;
    RunTrace t = ggd_solve(p, cfg, o);
    CHECK(t.final_x()[0] == doctest::Approx(-1.0).epsilon(0.05));
    CHECK(std::abs(t.final_x()[1]) < 0.05);
}

TEST_CASE("leading index map is upper semicontinuous under tiny perturbations") {
    ProblemSpec spec = make_circle_linear();
    std::vector<std::pair<FunctionOracle, double>> leading{{*spec.constraint_h, 0.0}};
    auto index_of = [&](const Vec& x) {
        for (std::size_t j = 0; j < leading.size(); ++j)
            if (leading[j].first.value(x) > leading[j].second) return j;
        return leading.size();  // objective slot
    };
    Rng rng = Rng::for_run(307, 0);
    for (int t = 0; t < 500; ++t) {
        Vec x = rng.uniform_box(2, -1.5, 1.5);
        std::size_t base = index_of(x);
        for (int rep = 0; rep < 4; ++rep) {
            Vec y = x;
            for (double& c : y) c += rng.uniform(-1e-12, 1e-12);
            CHECK(index_of(y) <= base);
        }
    }
}

TEST_CASE("ggd equality mode: iterates stay on the manifold") {
    Mat N(1, 3);
    N(0, 0) = 1;
    N(0, 1) = 1;
    N(0, 2) = 1;
    DetProblem p;
    p.f = linear(Vec{1.0, 2.0, 3.0});
    p.N = N;
    p.b = Vec{1.0};
    p.x0 = Vec{1.0, 0.0, 0.0};
    SolverConfig cfg = quiet(100);
    GgdOptions o;
    o.mode = ConstraintMode::equality_projected;
    RunTrace t = ggd_solve(p, cfg, o);
    Vec r = sub(matvec(N, t.final_x()), p.b);
    CHECK(norm_inf(r) < 1e-9);
    // projected gradient of a linear objective is constant: descent continues
    CHECK(t.final_f() < p.f.value(p.x0));
}

TEST_CASE("ggd: divergence guard and return-to-start") {
    DetProblem p;
    p.f = linear(Vec{1.0});  // unbounded below
    p.x0 = Vec{0.0};
    SolverConfig cfg = quiet(100000, 10.0, 0.0);  // constant big step
    cfg.divergence_bound = 100.0;
    cfg.validation = ValidationMode::off;
    RunTrace t = ggd_solve(p, cfg);
    CHECK(t.stop_reason() == StopReason::diverged);

    cfg.return_to_start.enabled = true;
    cfg.return_to_start.max_returns = 8;
    RunTrace t2 = ggd_solve(p, cfg);
    CHECK(t2.return_to_start_count > 0);

    // on a bounded catalog problem returns stay below the cap
    ProblemSpec spec = make_abs_sum(3);
    DetProblem q;
    q.f = *spec.objective;
    q.x0 = Vec(3, 0.5);
    SolverConfig cfg2 = quiet(20000);
    cfg2.return_to_start.enabled = true;
    cfg2.return_to_start.level_d = 10.0;
    cfg2.return_to_start.max_returns = 64;
    RunTrace t3 = ggd_solve(q, cfg2);
    CHECK(t3.return_to_start_count < 64);
    CHECK(t3.stop_reason() != StopReason::diverged);
}

TEST_CASE("ggd strict validation refuses a non-vanishing step") {
    DetProblem p;
    p.f = linear(Vec{1.0});
    p.x0 = Vec{0.0};
    SolverConfig cfg = quiet(10, 1.0, 0.0);
    cfg.validation = ValidationMode::strict;
    CHECK_THROWS_AS(ggd_solve(p, cfg), ScheduleError);
}

TEST_CASE("relaxation: immediate certificate at a smooth minimizer with loose accuracy") {
    FunctionOracle quad;
    quad.dim = 2;
    quad.value = [](const Vec& x) { return 0.5 * norm2_sq(x); };
    quad.pseudogradient = [](const Vec& x) { return x; };
    RelaxParams prm;
    prm.eps = 0.5;
    prm.delta = 0.5;
    prm.Lambda = 0.5;
    prm.Delta = 0.5;
    RelaxResult r = relaxation_solve(quad, zeros(2), RelaxVariant::A1, DirectionRuleKind::L1, prm);
    CHECK(r.certified);
    CHECK(r.oracle_calls < 10);
}

TEST_CASE("relaxation A1 and A3 terminate on the nonsmooth catalog at 1e-3") {
    RelaxParams prm;  // eps = delta = 1e-3 within 1e5 oracle calls
    for (const ProblemSpec& spec : {make_abs_sum(3), make_max_abs(3)}) {
        for (RelaxVariant v : {RelaxVariant::A1, RelaxVariant::A3}) {
            RelaxResult r = relaxation_solve(*spec.objective, Vec{0.7, -0.4, 0.2}, v,
                                             DirectionRuleKind::L3, prm);
            CHECK(r.certified);
            CHECK(r.oracle_calls <= 100000);
            CHECK(norm_inf(r.trace.final_x()) <= 1e-2);
        }
    }
    // weighted variant f = |x1| + 2 |x2| via A1+L3
    FunctionOracle f;
    f.dim = 2;
    f.value = [](const Vec& x) { return std::abs(x[0]) + 2.0 * std::abs(x[1]); };
    f.pseudogradient = [](const Vec& x) {
        return Vec{x[0] >= 0.0 ? 1.0 : -1.0, x[1] >= 0.0 ? 2.0 : -2.0};
    };
    RelaxResult r =
        relaxation_solve(f, Vec{0.3, -0.8}, RelaxVariant::A1, DirectionRuleKind::L3, prm);
    CHECK(r.certified);
    CHECK(norm_inf(r.trace.final_x()) <= 1e-2);
}

TEST_CASE("relaxation: descent test never fires on convex piecewise-linear instances") {
    Rng rng = Rng::for_run(311, 0);
    RelaxParams prm;
    for (int inst = 0; inst < 20; ++inst) {
        // random coercive max of affine pieces
        std::vector<FunctionOracle> pieces;
        std::size_t n = 2 + inst % 3;
        for (int j = 0; j < 6; ++j) {
            Vec a = rng.uniform_box(n, -1.0, 1.0);
            pieces.push_back(linear(a, rng.uniform(-0.3, 0.3)));
        }
        for (std::size_t i = 0; i < n; ++i) {
            pieces.push_back(linear(scaled(unit(n, i), 3.0), -1.0));
            pieces.push_back(linear(scaled(unit(n, i), -3.0), -1.0));
        }
        FunctionOracle f;
        f.dim = n;
        f.value = [pieces](const Vec& x) {
            double v = pieces[0].value(x);
            for (std::size_t j = 1; j < pieces.size(); ++j) v = std::max(v, pieces[j].value(x));
            return v;
        };
        f.pseudogradient = [pieces](const Vec& x) {
            std::size_t arg = 0;
            double v = pieces[0].value(x);
            for (std::size_t j = 1; j < pieces.size(); ++j) {
                double vj = pieces[j].value(x);
                if (vj > v) {
                    v = vj;
                    arg = j;
                }
            }
            return pieces[arg].pseudogradient(x);
        };
        RelaxResult r = relaxation_solve(f, rng.uniform_box(n, -0.5, 0.5), RelaxVariant::A1,
                                         DirectionRuleKind::L2, prm);
        CHECK(r.step8_events == 0);
    }
}

TEST_CASE("heavy ball with gamma == 1 collapses to plain descent, bit for bit") {
    ProblemSpec spec = make_abs_sum(4);
    DetProblem p;
    p.f = *spec.objective;
    p.x0 = Vec{0.8, -0.3, 0.1, 0.6};
    SolverConfig cfg = quiet(5000);
    cfg.log_every = 100;
    RunTrace plain = ggd_solve(p, cfg);
    AveragedPolicy pol;
    pol.kind = AveragedPolicyKind::heavy_ball;
    pol.gamma_c = 1.0;
    RunTrace hb = averaged_gradient_solve(p, pol, cfg);
    CHECK(plain.same_path(hb));
}

TEST_CASE("gully with lambda == 0 equals the plain gradient step") {
    ProblemSpec spec = make_abs_sum(3);
    DetProblem p;
    p.f = *spec.objective;
    p.x0 = Vec{0.5, -0.9, 0.2};
    SolverConfig cfg = quiet(3000);
    cfg.log_every = 50;
    RunTrace plain = ggd_solve(p, cfg);
    AveragedPolicy pol;
    pol.kind = AveragedPolicyKind::gully;
    pol.lambda = 0.0;
    RunTrace gl = averaged_gradient_solve(p, pol, cfg);
    CHECK(plain.same_path(gl));
}

TEST_CASE("heavy ball crosses the ravine within the iteration budget") {
    ProblemSpec spec = make_ravine(100);
    DetProblem p;
    p.f = *spec.objective;
    p.x0 = Vec{1.0, 1.0};
    AveragedPolicy pol;
    pol.kind = AveragedPolicyKind::heavy_ball;
    pol.gamma_c = 0.1;
    const double gamma = 0.1;
    const double rho_star = 2.0 * (2.0 - gamma) / (gamma * 100.0);
    SolverConfig cfg = quiet(5000, 0.9 * rho_star, 0.0);
    cfg.validation = ValidationMode::off;
    cfg.target_f = 1e-6;
    RunTrace t = averaged_gradient_solve(p, pol, cfg);
    CHECK(t.stop_reason() == StopReason::target_value);
    CHECK(t.final_f() <= 1e-6);
}

TEST_CASE("gully step with momentum still minimizes the ravine") {
    ProblemSpec spec = make_ravine(50);
    DetProblem p;
    p.f = *spec.objective;
    p.x0 = Vec{1.0, 1.0};
    AveragedPolicy pol;
    pol.kind = AveragedPolicyKind::gully;
    pol.lambda = 0.5;
    SolverConfig cfg = quiet(20000, 0.01, 0.0);
    cfg.validation = ValidationMode::off;
    RunTrace t = averaged_gradient_solve(p, pol, cfg);
    CHECK(t.final_f() < 1e-4);

    AveragedPolicy bad;
    bad.kind = AveragedPolicyKind::gully;
    bad.lambda = 1.0;  // needs recovery points
    CHECK_THROWS(averaged_gradient_solve(p, bad, quiet(10)));
}

TEST_CASE("averaged policy P3/R1 minimizes the ravine with a windowed mean") {
    ProblemSpec spec = make_ravine(100);
    DetProblem p;
    p.f = *spec.objective;
    p.x0 = Vec{1.0, 1.0};
    AveragedPolicy pol;
    pol.kind = AveragedPolicyKind::averaged;
    pol.avg_rule = DirectionRuleKind::P3;
    pol.window_cap = 8;
    SolverConfig cfg = quiet(20000, 0.05, 0.5);
    cfg.validation = ValidationMode::off;
    RunTrace t = averaged_gradient_solve(p, pol, cfg);
    CHECK(t.final_f() < 1e-2);
}

TEST_CASE("averaged policy with R2 adapts the level downward") {
    ProblemSpec spec = make_abs_sum(2);
    DetProblem p;
    p.f = *spec.objective;
    p.x0 = Vec{0.4, -0.3};
    AveragedPolicy pol;
    pol.kind = AveragedPolicyKind::averaged;
    pol.avg_rule = DirectionRuleKind::P3;
    pol.step_rule = AveragedPolicy::StepRule::R2;
    pol.M0 = 0.05;
    pol.theta0 = 0.5;
    SolverConfig cfg = quiet(30000);
    cfg.validation = ValidationMode::off;
    RunTrace t = averaged_gradient_solve(p, pol, cfg);
    CHECK(t.final_f() < 0.2);  // shrinking levels keep the walk near the kink
}

TEST_CASE("stall and target stops are reported") {
    ProblemSpec spec = make_abs_sum(2);
    DetProblem p;
    p.f = *spec.objective;
    p.x0 = Vec{0.5, 0.5};
    SolverConfig cfg = quiet(100000);
    cfg.target_f = 0.2;
    RunTrace t = ggd_solve(p, cfg);
    CHECK(t.stop_reason() == StopReason::target_value);
    CHECK(t.final_f() <= 0.2);

    SolverConfig cfg2 = quiet(2000000, 1e-9, 0.0);  // frozen steps cannot improve
    cfg2.validation = ValidationMode::off;
    cfg2.stall.window = 50;
    cfg2.stall.tol = 1e-6;
    RunTrace t2 = ggd_solve(p, cfg2);
    CHECK(t2.stop_reason() == StopReason::stalled);
}

TEST_CASE("residual stop certifies stationarity at the kink") {
    ProblemSpec spec = make_abs_sum(2);
    DetProblem p;
    p.f = *spec.objective;
    p.x0 = Vec{0.4, 0.4};
    SolverConfig cfg = quiet(200000);
    cfg.normalize = true;
    ResidualStopRule r;
    r.eps = 0.05;
    r.delta = 0.05;
    r.samples = 64;
    r.every = 500;
    cfg.residual_stop = r;
    RunTrace t = ggd_solve(p, cfg);
    CHECK(t.stop_reason() == StopReason::residual_below);
    CHECK(norm_inf(t.final_x()) < 0.1);
}
