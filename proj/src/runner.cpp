#include "nsopt/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "nsopt/problems.hpp"
#include "nsopt/solvers_det.hpp"
#include "nsopt/solvers_fd.hpp"
#include "nsopt/solvers_sto.hpp"

namespace nsopt {

namespace fs = std::filesystem;

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run_index) {
    Rng r = Rng::for_run(master, run_index);
    return r.next_u64();
}

namespace {

struct RunnerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Schedule schedule_from(const Config& c) {
    Schedule s;
    s.rho_c = c.get_real_or("schedule", "rho_c", 1.0);
    s.rho_exp = c.get_real_or("schedule", "rho_exp", 1.0);
    s.alpha_c = c.get_real_or("schedule", "alpha_c", 1.0);
    s.alpha_exp = c.get_real_or("schedule", "alpha_exp", 1.0 / 3.0);
    s.delta_c = c.get_real_or("schedule", "delta_c", 0.0);
    s.delta_exp = c.get_real_or("schedule", "delta_exp", 0.0);
    s.a_c = c.get_real_or("schedule", "a_c", 1.0);
    s.a_exp = c.get_real_or("schedule", "a_exp", 2.0 / 3.0);
    s.k0 = c.get_real_or("schedule", "k0", 1.0);
    s.rho_cap = c.get_real_or("schedule", "rho_cap", std::numeric_limits<double>::infinity());
    return s;
}

ValidationMode validation_from(const Config& c) {
    std::string v = c.get_string_or("experiment", "validation", "warn");
    if (v == "strict") return ValidationMode::strict;
    if (v == "warn") return ValidationMode::warn;
    if (v == "off") return ValidationMode::off;
    throw RunnerError("unknown validation mode: " + v);
}

SolverConfig solver_config_from(const Config& c) {
    SolverConfig cfg;
    cfg.schedule = schedule_from(c);
    cfg.normalize = c.get_bool_or("solver", "normalize", false);
    cfg.max_iter = std::uint64_t(c.get_int_or("stop", "max_iter", 1000));
    if (c.has("stop", "target_f")) cfg.target_f = c.get_real("stop", "target_f");
    if (c.has("stop", "stall_window")) {
        cfg.stall.window = std::uint64_t(c.get_int("stop", "stall_window"));
        cfg.stall.tol = c.get_real_or("stop", "stall_tol", 1e-12);
    }
    if (c.has("stop", "residual_eps")) {
        ResidualStopRule r;
        r.eps = c.get_real("stop", "residual_eps");
        r.delta = c.get_real_or("stop", "residual_delta", r.eps);
        r.samples = std::size_t(c.get_int_or("stop", "residual_samples", 64));
        r.every = std::uint64_t(c.get_int_or("stop", "residual_every", 1000));
        cfg.residual_stop = r;
    }
    cfg.return_to_start.enabled = c.get_bool_or("solver", "return_to_start", false);
    cfg.return_to_start.level_d =
        c.get_real_or("solver", "return_level", std::numeric_limits<double>::infinity());
    cfg.return_to_start.shrink = c.get_real_or("solver", "return_shrink", 0.5);
    cfg.divergence_bound = c.get_real_or("solver", "divergence_bound", 1e6);
    cfg.log_every = std::uint64_t(c.get_int_or("output", "log_every", 1));
    cfg.validation = validation_from(c);
    return cfg;
}

ProblemSpec problem_from(const Config& c) {
    std::string name = c.get_string("problem", "name");
    ProblemSpec p;
    if (name == "newsvendor") {
        std::size_t products = std::size_t(c.get_int_or("problem", "products", 1));
        double alpha = c.get_real_or("problem", "alpha", 1.0);
        double beta = c.get_real_or("problem", "beta", 1.0);
        DemandLaw law = DemandLaw::parse(c.get_string_or("problem", "law", "uniform(0,1)"));
        std::vector<DemandLaw> laws(products, law);
        p = make_newsvendor(products, Vec(products, alpha), Vec(products, beta), laws);
    } else if (name == "sin_sum") {
        p = make_benchmark("sin_sum");
    } else if (name == "sign_game" || name == "mean_floor") {
        p.name = name;  // constructed by the solver binding
        p.dim = 1;
        p.x0 = Vec{0.0};
    } else {
        std::string args = c.get_string_or("problem", "args", "");
        p = make_benchmark(args.empty() ? name : name + "(" + args + ")");
    }
    if (c.has("problem", "box_lo") && c.has("problem", "box_hi")) {
        double lo = c.get_real("problem", "box_lo");
        double hi = c.get_real("problem", "box_hi");
        p.set = FeasibleSet::box(Vec(p.dim, lo), Vec(p.dim, hi));
    }
    if (c.has("problem", "x0")) {
        double v = c.get_real("problem", "x0");
        p.x0 = Vec(p.dim, v);
    }
    return p;
}

TheoremTag tag_for_solver(const std::string& solver) {
    if (solver == "fd" || solver == "penalty_fd") return TheoremTag::fd_basic;
    if (solver == "fd_minimax") return TheoremTag::fd_minimax;
    if (solver == "kw") return TheoremTag::kw;
    if (solver == "analytic_penalty" || solver == "sto_constrained_lipschitz")
        return TheoremTag::analytic_penalty;
    if (solver == "arrow_hurwicz" || solver == "sto_arrow_hurwicz") return TheoremTag::saddle;
    if (solver == "sto_cond_gradient" || solver == "sto_reduced_gradient" ||
        solver == "sto_feasible_directions" || solver == "averaged_direction")
        return TheoremTag::cond_gradient;
    return TheoremTag::ggd;
}

StoEstimator estimator_from(const Config& c) {
    StoEstimator e;
    std::string mode = c.get_string_or("solver", "fd_mode", "central");
    if (mode == "central")
        e.mode = FdMode::central;
    else if (mode == "forward")
        e.mode = FdMode::forward;
    else if (mode == "random_dirs")
        e.mode = FdMode::random_dirs;
    else if (mode == "quasigradient")
        e.quasigradient = true;
    else
        throw RunnerError("unknown fd_mode: " + mode);
    e.random_p = std::size_t(c.get_int_or("solver", "random_p", 1));
    e.normalize_random = c.get_bool_or("solver", "normalize_random", true);
    return e;
}

FdOptions fd_options_from(const StoEstimator& e, const Config& c) {
    FdOptions o;
    o.mode = e.mode;
    o.random_p = e.random_p;
    o.normalize_random = e.normalize_random;
    o.averaging_window = std::uint64_t(c.get_int_or("solver", "averaging_window", 1));
    return o;
}

// Bind the (problem, solver) pair into a per-seed callable.
std::function<RunTrace(std::uint64_t)> bind_solver(const Config& c, const ProblemSpec& spec) {
    std::string solver = c.get_string("experiment", "solver");
    SolverConfig base = solver_config_from(c);
    StoEstimator est = estimator_from(c);

    auto need_objective = [&]() -> const FunctionOracle& {
        if (!spec.objective)
            throw RunnerError("solver '" + solver + "' needs a deterministic objective on '" +
                              spec.name + "'");
        return *spec.objective;
    };
    auto need_stochastic = [&]() -> const StochasticOracle& {
        if (!spec.stochastic)
            throw RunnerError("solver '" + solver + "' needs a stochastic oracle on '" +
                              spec.name + "'");
        return *spec.stochastic;
    };

    if (solver == "ggd" || solver == "heavy_ball" || solver == "gully" || solver == "averaged") {
        DetProblem dp;
        dp.f = need_objective();
        dp.h = spec.constraint_h;
        dp.x0 = spec.x0;
        ConstraintMode mode =
            spec.constraint_h ? ConstraintMode::single_h : ConstraintMode::none;
        if (c.get_string_or("solver", "constraint_mode", "") == "none")
            mode = ConstraintMode::none;
        if (solver == "ggd") {
            return [dp, base, mode](std::uint64_t seed) {
                SolverConfig cfg = base;
                cfg.seed = seed;
                GgdOptions o;
                o.mode = mode;
                return ggd_solve(dp, cfg, o);
            };
        }
        AveragedPolicy pol;
        if (solver == "heavy_ball") {
            pol.kind = AveragedPolicyKind::heavy_ball;
            pol.gamma_c = c.get_real_or("solver", "gamma", 0.1);
        } else if (solver == "gully") {
            pol.kind = AveragedPolicyKind::gully;
            pol.lambda = c.get_real_or("solver", "lambda", 0.5);
            pol.recovery_every = std::uint64_t(c.get_int_or("solver", "recovery_every", 0));
        } else {
            pol.kind = AveragedPolicyKind::averaged;
            std::string rule = c.get_string_or("solver", "avg_rule", "P3");
            pol.avg_rule = rule == "P2" ? DirectionRuleKind::P2 : DirectionRuleKind::P3;
            std::string sr = c.get_string_or("solver", "step_rule", "R1");
            pol.step_rule = sr == "R2"   ? AveragedPolicy::StepRule::R2
                            : sr == "R4" ? AveragedPolicy::StepRule::R4
                                         : AveragedPolicy::StepRule::R1;
            pol.M0 = c.get_real_or("solver", "M0", 1.0);
            pol.theta0 = c.get_real_or("solver", "theta0", 0.5);
        }
        return [dp, base, pol, mode](std::uint64_t seed) {
            SolverConfig cfg = base;
            cfg.seed = seed;
            return averaged_gradient_solve(dp, pol, cfg, mode);
        };
    }
    if (solver == "fd") {
        FdProblem fp;
        fp.f = need_objective();
        fp.set = spec.set;
        fp.x0 = spec.x0;
        FdOptions o = fd_options_from(est, c);
        return [fp, o, base](std::uint64_t seed) {
            SolverConfig cfg = base;
            cfg.seed = seed;
            return fd_solve(fp, o, cfg);
        };
    }
    if (solver == "penalty_fd") {
        if (!spec.constraint_h) throw RunnerError("penalty_fd needs a problem with a constraint");
        if (!spec.set) throw RunnerError("penalty_fd needs projection geometry");
        std::vector<FunctionOracle> fi{*spec.constraint_h};
        Vec r{c.get_real_or("solver", "penalty_r", 2.0)};
        FunctionOracle f0 = need_objective();
        FdOptions o = fd_options_from(est, c);
        FeasibleSet X = *spec.set;
        Vec x0 = spec.x0;
        return [f0, fi, r, X, x0, o, base](std::uint64_t seed) {
            SolverConfig cfg = base;
            cfg.seed = seed;
            return penalty_fd_solve(f0, fi, r, X, x0, o, cfg);
        };
    }
    if (solver == "analytic_penalty") {
        if (!spec.constraint_h)
            throw RunnerError("analytic_penalty needs a problem with a constraint");
        FunctionOracle f = need_objective(), h = *spec.constraint_h;
        Vec x0 = spec.x0;
        AnalyticPenaltyOptions o;
        o.mode = est.mode;
        return [f, h, x0, o, base](std::uint64_t seed) {
            SolverConfig cfg = base;
            cfg.seed = seed;
            return analytic_penalty_solve(f, h, x0, o, cfg).trace;
        };
    }
    if (solver == "arrow_hurwicz") {
        if (!spec.constraint_h || !spec.set)
            throw RunnerError("arrow_hurwicz needs a constraint and bounded geometry");
        std::vector<FunctionOracle> fi{*spec.constraint_h};
        double umax = c.get_real_or("solver", "u_max", 10.0);
        FeasibleSet U = FeasibleSet::box(zeros(1), Vec{umax});
        FunctionOracle f0 = need_objective();
        FeasibleSet X = *spec.set;
        Vec x0 = spec.x0;
        FdOptions o = fd_options_from(est, c);
        return [f0, fi, X, U, x0, o, base](std::uint64_t seed) {
            SolverConfig cfg = base;
            cfg.seed = seed;
            return arrow_hurwicz_solve(f0, fi, X, U, x0, o, cfg).trace;
        };
    }
    if (solver == "piyavskii") {
        if (spec.dim != 1) throw RunnerError("piyavskii needs a one-dimensional problem");
        if (!spec.set || spec.set->kind() != FeasibleSet::Kind::box)
            throw RunnerError("piyavskii needs a box interval");
        GlobalOptions o;
        o.eps_gap = c.get_real_or("solver", "eps_gap", 1e-3);
        o.max_evals = std::uint64_t(c.get_int_or("stop", "max_iter", 300));
        o.mode = c.get_string_or("solver", "envelope", "cone") == "paraboloid"
                     ? EnvelopeMode::paraboloid
                     : EnvelopeMode::cone;
        double L = c.get_real_or("solver", "lipschitz",
                                 spec.lipschitz.value_or(1.0));
        FunctionOracle f = need_objective();
        double lo = spec.set->box_lo()[0], hi = spec.set->box_hi()[0];
        std::string env_csv = c.get_string_or("output", "envelope_csv", "");
        return [f, lo, hi, L, o, env_csv](std::uint64_t seed) {
            std::vector<std::pair<double, double>> polyline;
            GlobalResult g = piyavskii_solve(f, lo, hi, L, o, std::nullopt,
                                             env_csv.empty() ? nullptr : &polyline);
            if (!env_csv.empty()) {
                std::ofstream out(env_csv);
                out << "x,phi\n";
                char buf[64];
                for (auto [x, phi] : polyline) {
                    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", x, phi);
                    out << buf;
                }
            }
            RunTrace t(seed, "solver=piyavskii");
            for (std::size_t i = 0; i < g.points.size(); ++i)
                t.append(make_row(i, g.points[i].second, g.gap, 0.0, 0.0,
                                  Vec{g.points[i].first}));
            t.finish(g.gap <= o.eps_gap ? StopReason::target_value : StopReason::max_iter,
                     Vec{g.x_best}, g.f_best);
            return t;
        };
    }
    if (solver == "sqg") {
        StoProblem sp;
        sp.F = need_stochastic();
        sp.h = spec.constraint_h;
        sp.set = spec.set;
        sp.x0 = spec.x0;
        SqgPolicy pol;
        std::string kind = c.get_string_or("solver", "policy", "plain");
        pol.kind = kind == "averaged"     ? SqgPolicyKind::averaged
                   : kind == "heavy_ball" ? SqgPolicyKind::heavy_ball
                   : kind == "gully"      ? SqgPolicyKind::gully
                                          : SqgPolicyKind::plain;
        pol.iterate_avg = c.get_bool_or("solver", "iterate_avg", false);
        pol.gamma_c = c.get_real_or("solver", "gamma", 0.5);
        pol.lambda = c.get_real_or("solver", "lambda", 0.5);
        return [sp, pol, base](std::uint64_t seed) {
            SolverConfig cfg = base;
            cfg.seed = seed;
            return sqg_solve(sp, pol, cfg);
        };
    }
    if (solver == "kw" || solver == "averaged_direction" || solver == "sto_cond_gradient" ||
        solver == "sto_constrained_lipschitz") {
        StoProblem sp;
        sp.F = need_stochastic();
        sp.h = spec.constraint_h;
        sp.set = spec.set;
        sp.x0 = spec.x0;
        if (solver == "kw")
            return [sp, est, base](std::uint64_t seed) {
                SolverConfig cfg = base;
                cfg.seed = seed;
                return kw_solve(sp, est, cfg);
            };
        if (solver == "averaged_direction") {
            std::string v = c.get_string_or("solver", "variant", "fd");
            AvgDirVariant variant = v == "smooth" ? AvgDirVariant::smooth
                                    : v == "free" ? AvgDirVariant::unconstrained_lipschitz
                                                  : AvgDirVariant::fd;
            return [sp, est, base, variant](std::uint64_t seed) {
                SolverConfig cfg = base;
                cfg.seed = seed;
                return averaged_direction_solve(sp, variant, est, cfg);
            };
        }
        if (solver == "sto_cond_gradient") {
            if (!sp.set) throw RunnerError("sto_cond_gradient needs bounded geometry");
            FeasibleSet X = *sp.set;
            CgVariant v = c.get_string_or("solver", "variant", "lipschitz") == "smooth"
                              ? CgVariant::smooth
                              : CgVariant::lipschitz;
            return [sp, X, v, est, base](std::uint64_t seed) {
                SolverConfig cfg = base;
                cfg.seed = seed;
                return sto_conditional_gradient_solve(sp, X, v, est, cfg);
            };
        }
        if (!spec.constraint_h)
            throw RunnerError("sto_constrained_lipschitz needs a constraint");
        FunctionOracle h = *spec.constraint_h;
        return [sp, h, est, base](std::uint64_t seed) {
            SolverConfig cfg = base;
            cfg.seed = seed;
            return sto_constrained_lipschitz_solve(sp, h, est, cfg);
        };
    }
    if (solver == "relaxation") {
        RelaxParams prm;
        prm.eps = c.get_real_or("solver", "eps", 1e-3);
        prm.delta = c.get_real_or("solver", "delta", 1e-3);
        prm.Lambda = c.get_real_or("solver", "Lambda", std::max(1.0, prm.eps));
        prm.Delta = c.get_real_or("solver", "Delta", std::max(1.0, prm.delta));
        prm.max_oracle_calls = std::uint64_t(c.get_int_or("stop", "max_oracle_calls", 100000));
        std::string v = c.get_string_or("solver", "variant", "A1");
        RelaxVariant variant = v == "A2"   ? RelaxVariant::A2
                               : v == "A3" ? RelaxVariant::A3
                                           : RelaxVariant::A1;
        std::string r = c.get_string_or("solver", "rule", "L3");
        DirectionRuleKind rule = r == "L1"   ? DirectionRuleKind::L1
                                 : r == "L2" ? DirectionRuleKind::L2
                                 : r == "L4" ? DirectionRuleKind::L4
                                             : DirectionRuleKind::L3;
        FunctionOracle f = need_objective();
        Vec x0 = spec.x0;
        return [f, x0, variant, rule, prm](std::uint64_t seed) {
            return relaxation_solve(f, x0, variant, rule, prm, seed).trace;
        };
    }
    if (solver == "fd_minimax") {
        if (spec.components.empty())
            throw RunnerError("fd_minimax needs a problem with max components");
        if (!spec.set) throw RunnerError("fd_minimax needs projection geometry");
        std::vector<FunctionOracle> comps = spec.components;
        FeasibleSet X = *spec.set;
        Vec x0 = spec.x0;
        FdOptions o = fd_options_from(est, c);
        return [comps, X, x0, o, base](std::uint64_t seed) {
            SolverConfig cfg = base;
            cfg.seed = seed;
            return fd_minimax_solve(comps, X, x0, o, cfg);
        };
    }
    if (solver == "sto_reduced_gradient") {
        if (spec.eq_A.rows == 0)
            throw RunnerError("sto_reduced_gradient needs a problem with Ax = b geometry");
        StoProblem sp;
        sp.F = need_stochastic();
        sp.x0 = spec.x0;
        Mat A = spec.eq_A;
        Vec b = spec.eq_b;
        return [sp, A, b, est, base](std::uint64_t seed) {
            SolverConfig cfg = base;
            cfg.seed = seed;
            return sto_reduced_gradient_solve(sp, A, b, est, cfg);
        };
    }
    if (solver == "sto_feasible_directions") {
        if (spec.constraint_list.empty())
            throw RunnerError("sto_feasible_directions needs smooth constraints");
        StoProblem sp;
        sp.F = need_stochastic();
        sp.x0 = spec.x0;
        std::vector<FunctionOracle> cons = spec.constraint_list;
        return [sp, cons, est, base](std::uint64_t seed) {
            SolverConfig cfg = base;
            cfg.seed = seed;
            return sto_feasible_directions_solve(sp, cons, est, cfg);
        };
    }
    if (solver == "sto_arrow_hurwicz") {
        if (spec.name != "mean_floor")
            throw RunnerError("sto_arrow_hurwicz is wired to the mean_floor problem");
        StoSaddleProblem sp;
        sp.dim = 1;
        sp.draw_theta = [](Rng& r) { return Theta{r.next_double()}; };
        sp.f = {[](const Vec& x, const Theta& th) {
                    double d = x[0] - th[0];
                    return d * d;
                },
                [](const Vec& x, const Theta& th) { return th[0] - x[0]; }};
        sp.X = FeasibleSet::box(Vec{0.0}, Vec{1.0});
        sp.U = FeasibleSet::box(Vec{0.0}, Vec{c.get_real_or("solver", "u_max", 10.0)});
        sp.x0 = Vec{0.1};
        FdMode mode = est.mode;
        return [sp, mode, base](std::uint64_t seed) {
            SolverConfig cfg = base;
            cfg.seed = seed;
            return sto_arrow_hurwicz_solve(sp, mode, cfg).trace;
        };
    }
    if (solver == "game") {
        if (spec.name != "sign_game")
            throw RunnerError("game is wired to the sign_game problem");
        GameProblem g;
        g.dim = 1;
        g.draw_theta = [](Rng& r) { return Theta{r.next_double()}; };
        g.payoff = [](const Vec& x, const Vec& y, const Theta& th) {
            return (x[0] - th[0]) * y[0];
        };
        g.best_response = [](const Vec& x, const Theta& th) {
            return Vec{x[0] - th[0] >= 0.0 ? 1.0 : -1.0};
        };
        g.X = FeasibleSet::box(Vec{-1.0}, Vec{1.0});
        g.x0 = Vec{0.0};
        return [g, est, base](std::uint64_t seed) {
            SolverConfig cfg = base;
            cfg.seed = seed;
            return game_solve(g, est, cfg);
        };
    }
    throw RunnerError("unknown solver: " + solver);
}

std::vector<std::uint64_t> seeds_from(const Config& c) {
    std::vector<std::uint64_t> seeds;
    if (c.has("seeds", "list")) {
        std::stringstream ss(c.get_string("seeds", "list"));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) seeds.push_back(std::stoull(tok));
        }
    } else {
        std::uint64_t master = std::uint64_t(c.get_int_or("seeds", "master", 1));
        std::uint64_t count = std::uint64_t(c.get_int_or("seeds", "count", 1));
        for (std::uint64_t i = 0; i < count; ++i) seeds.push_back(derive_seed(master, i));
    }
    if (seeds.empty()) throw RunnerError("no seeds configured");
    return seeds;
}

std::size_t worker_cap() {
    if (const char* env = std::getenv("NSOPT_WORKERS")) {
        long v = std::atol(env);
        if (v > 0) return std::size_t(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 4;
}

std::vector<RunTrace> run_all_seeds(const std::function<RunTrace(std::uint64_t)>& fn,
                                    const std::vector<std::uint64_t>& seeds) {
    std::vector<RunTrace> traces(seeds.size());
    std::vector<std::string> errors(seeds.size());
    std::atomic<std::size_t> next{0};
    std::size_t nworkers = std::min(worker_cap(), seeds.size());
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= seeds.size()) return;
            try {
                traces[i] = fn(seeds[i]);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    if (nworkers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < nworkers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const std::string& e : errors)
        if (!e.empty()) throw RunnerError(e);
    return traces;
}

void write_trace_csv(const fs::path& path, const RunTrace& t, bool timing) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw RunnerError("cannot write " + path.string());
        out << "k,f,residual,h_violation,step" << (timing ? ",wall_ns" : "") << "\n";
        char buf[256];
        for (const TraceRow& r : t.rows()) {
            std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g",
                          (unsigned long long)r.k, r.f, r.residual, r.h_violation, r.step);
            out << buf;
            if (timing) out << ",0";
            out << "\n";
        }
    }
    fs::rename(tmp, path);
}

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double quantile_of(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    double pos = q * double(v.size() - 1);
    std::size_t i = std::size_t(pos);
    double frac = pos - double(i);
    return i + 1 < v.size() ? v[i] * (1 - frac) + v[i + 1] * frac : v[i];
}

}  // namespace

namespace {

// Wrap the spec oracles so work across all seed runs is accounted for.
OracleCounter instrument(ProblemSpec& spec) {
    OracleCounter counter;
    if (spec.objective) spec.objective = counter.wrap(*spec.objective);
    if (spec.stochastic) spec.stochastic = counter.wrap(*spec.stochastic);
    return counter;
}

}  // namespace

std::vector<RunTrace> run_experiment_traces(const Config& cfg) {
    ProblemSpec spec = problem_from(cfg);
    auto fn = bind_solver(cfg, spec);
    return run_all_seeds(fn, seeds_from(cfg));
}

RunOutcome run_experiment(const Config& cfg, std::ostream& log) {
    RunOutcome out;
    try {
        ProblemSpec spec = problem_from(cfg);
        std::string solver = cfg.get_string("experiment", "solver");
        std::string name = cfg.get_string_or("experiment", "name", solver);

        // strict-mode gate before any work
        ScheduleReport rep = validate_schedule(schedule_from(cfg), tag_for_solver(solver));
        if (validation_from(cfg) == ValidationMode::strict && !rep.all_pass()) {
            out.exit_code = 2;
            out.message = "schedule validation failed: " + rep.first_failure();
            log << out.message << "\n";
            return out;
        }

        OracleCounter counter = instrument(spec);
        auto fn = bind_solver(cfg, spec);
        std::vector<std::uint64_t> seeds = seeds_from(cfg);
        std::vector<RunTrace> traces = run_all_seeds(fn, seeds);

        fs::path dir = cfg.get_string_or("output", "dir", "out");
        fs::create_directories(dir);
        bool timing = cfg.get_bool_or("output", "timing", false);

        std::vector<double> finals;
        std::map<std::string, int> reasons;
        for (std::size_t i = 0; i < traces.size(); ++i) {
            fs::path file = dir / (name + "_seed" + std::to_string(seeds[i]) + ".csv");
            write_trace_csv(file, traces[i], timing);
            out.trace_files.push_back(file.string());
            finals.push_back(traces[i].final_f());
            reasons[to_string(traces[i].stop_reason())]++;
        }

        fs::path summary = dir / (name + "_summary.txt");
        {
            std::ofstream s(summary);
            char buf[256];
            s << "experiment: " << name << "\nsolver: " << solver
              << "\nproblem: " << spec.name << "\nseeds: " << seeds.size() << "\n";
            std::snprintf(buf, sizeof buf,
                          "final_f median: %.17g\nfinal_f q25: %.17g\nfinal_f q75: %.17g\n",
                          median_of(finals), quantile_of(finals, 0.25),
                          quantile_of(finals, 0.75));
            s << buf;
            s << "stop_reasons:";
            for (auto& [r, n] : reasons) s << " " << r << "=" << n;
            s << "\noracle_calls: values=" << counter.values->load()
              << " gradients=" << counter.gradients->load()
              << " theta_draws=" << counter.thetas->load();
            s << "\nschedule_validation (" << to_string(tag_for_solver(solver)) << "):\n";
            for (const auto& c : rep.conditions)
                s << "  " << (c.pass ? "pass" : "FAIL") << "  " << c.name << "   [" << c.inequality
                  << "]\n";
        }
        out.summary_file = summary.string();
        log << "wrote " << out.trace_files.size() << " trace(s) and " << out.summary_file
            << "\n";
    } catch (const std::exception& e) {
        out.exit_code = 1;
        out.message = e.what();
        log << "error: " << e.what() << "\n";
    }
    return out;
}

RunOutcome compare_experiments(const std::vector<Config>& cfgs, std::ostream& os) {
    RunOutcome out;
    if (cfgs.empty()) {
        out.exit_code = 1;
        out.message = "usage error: compare needs at least one config";
        os << out.message << "\n";
        return out;
    }
    try {
        for (std::size_t i = 1; i < cfgs.size(); ++i)
            if (!cfgs[i].section_equal(cfgs[0], "problem"))
                throw RunnerError("mismatched problems: configs must share the [problem] section");

        std::optional<double> threshold;
        if (cfgs[0].has("compare", "threshold"))
            threshold = cfgs[0].get_real("compare", "threshold");

        os << "name,median_final_f,iters_to_threshold,oracle_values,oracle_gradients,theta_draws"
           << "\n";
        for (const Config& c : cfgs) {
            ProblemSpec spec = problem_from(c);
            OracleCounter counter = instrument(spec);
            auto fn = bind_solver(c, spec);
            std::vector<RunTrace> traces = run_all_seeds(fn, seeds_from(c));
            std::vector<double> finals, iters;
            for (const RunTrace& t : traces) {
                finals.push_back(t.final_f());
                if (threshold) {
                    double reached = std::numeric_limits<double>::quiet_NaN();
                    for (const TraceRow& r : t.rows())
                        if (r.f <= *threshold) {
                            reached = double(r.k);
                            break;
                        }
                    iters.push_back(reached);
                }
            }
            char buf[256];
            std::snprintf(buf, sizeof buf, "%.17g", median_of(finals));
            os << c.get_string_or("experiment", "name", c.get_string("experiment", "solver"))
               << "," << buf << ",";
            if (threshold)
                os << median_of(iters);
            else
                os << "-";
            os << "," << counter.values->load() << "," << counter.gradients->load() << ","
               << counter.thetas->load() << "\n";
        }
    } catch (const std::exception& e) {
        out.exit_code = 1;
        out.message = e.what();
        os << "error: " << e.what() << "\n";
    }
    return out;
}

int validate_config(const Config& cfg, std::ostream& os) {
    try {
        std::string solver = cfg.get_string("experiment", "solver");
        TheoremTag tag = tag_for_solver(solver);
        ScheduleReport rep = validate_schedule(schedule_from(cfg), tag);
        os << "schedule validation against " << to_string(tag) << ":\n";
        for (const auto& c : rep.conditions)
            os << "  " << (c.pass ? "pass" : "FAIL") << "  " << c.name << "   [" << c.inequality
               << "]\n";
        return rep.all_pass() ? 0 : 2;
    } catch (const std::exception& e) {
        os << "error: " << e.what() << "\n";
        return 1;
    }
}

void print_catalog(std::ostream& os) {
    for (const std::string& n : catalog_names()) os << n << "\n";
}

}  // namespace nsopt
