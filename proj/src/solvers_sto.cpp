#include "nsopt/solvers_sto.hpp"

#include <deque>
#include <sstream>

#include "nsopt/direction_rules.hpp"
#include "nsopt/lp.hpp"
#include "nsopt/solvers_fd.hpp"

namespace nsopt {

namespace {

std::string sto_snapshot(const char* solver, const SolverConfig& cfg, const std::string& extra) {
    std::ostringstream os;
    os << "solver=" << solver << ";seed=" << cfg.seed << ";max_iter=" << cfg.max_iter
       << ";rho=" << cfg.schedule.rho_c << "/(k+" << cfg.schedule.k0 << ")^"
       << cfg.schedule.rho_exp << ";a=" << cfg.schedule.a_c << "^" << cfg.schedule.a_exp;
    if (!extra.empty()) os << ";" << extra;
    return os.str();
}

// Mean objective for trace rows: closed form when available, otherwise a
// sample value drawn from a dedicated diagnostics stream.
struct MeanLogger {
    const StochasticOracle& o;
    Rng diag;
    MeanLogger(const StochasticOracle& oracle, std::uint64_t seed)
        : o(oracle), diag(Rng::for_run(seed, 0x10c).split(0xF00D)) {}
    double value(const Vec& x) {
        if (o.mean_oracle) return o.mean_oracle->checked_value(x);
        Theta th = o.draw_theta(diag);
        return o.checked_value(x, th);
    }
};

}  // namespace

Vec StoEstimator::estimate(const StochasticOracle& o, const Vec& x, double alpha, double delta,
                           Rng& rng) const {
    if (quasigradient) {
        Vec base = rng.uniform_cube(x, alpha);
        Theta th = o.draw_theta(rng);
        return o.checked_gradient(base, th);
    }
    EstimatorConfig e;
    e.mode = mode;
    e.alpha = alpha;
    e.delta = delta;
    e.p = random_p;
    e.normalize_random = normalize_random;
    return fd_estimate(o, x, e, rng);
}

Vec StoEstimator::estimate(const FunctionOracle& o, const Vec& x, double alpha, double delta,
                           Rng& rng) const {
    if (quasigradient) {
        Vec base = rng.uniform_cube(x, alpha);
        return o.checked_gradient(base);
    }
    EstimatorConfig e;
    e.mode = mode;
    e.alpha = alpha;
    e.delta = delta;
    e.p = random_p;
    e.normalize_random = normalize_random;
    return fd_estimate(o, x, e, rng);
}

RunTrace sqg_solve(const StoProblem& problem, const SqgPolicy& policy, const SolverConfig& cfg) {
    if (policy.kind == SqgPolicyKind::gully && policy.lambda >= 1.0 && policy.recovery_every == 0)
        throw std::invalid_argument("sqg_solve: gully needs lambda < 1 or recovery points");
    if (policy.normalizer != SqgNormalizer::none && policy.nu <= 0.0)
        throw std::invalid_argument("sqg_solve: normalizer floor nu must be positive");
    if (policy.kind == SqgPolicyKind::heavy_ball &&
        (policy.gamma_c <= 0.0 || (policy.gamma_exp == 0.0 && policy.gamma_c > 1.0)))
        throw std::invalid_argument("sqg_solve: heavy ball needs gamma in (0, 1]");
    if (policy.kind == SqgPolicyKind::averaged &&
        (policy.window_beta <= 0.0 || policy.window_beta >= 1.0))
        throw std::invalid_argument("sqg_solve: window exponent must lie in (0, 1)");
    std::ostringstream extra;
    extra << "policy=" << int(policy.kind);
    RunTrace trace(cfg.seed, sto_snapshot("sqg", cfg, extra.str()));
    Rng rng = Rng::for_run(cfg.seed, 0);
    MeanLogger logger(problem.F, cfg.seed);

    Vec x = problem.x0;
    if (problem.set) x = problem.set->project(x);
    double fx = logger.value(x);
    StopReason reason = StopReason::max_iter;
    double scale_mult = 1.0;

    // policy state
    std::deque<Vec> window;  // normalized stochastic gradients g^r / H_r
    Vec momentum;            // heavy ball P^{k-1}
    Vec prev_dir;            // for the prev_dir normalizer
    Vec x_prev, g_prev;
    double rho_prev = 0.0;
    bool have_prev = false;
    CesaroAverager iterate_avg;

    auto normalizer = [&]() -> double {
        if (policy.normalizer == SqgNormalizer::none) return 1.0;
        if (prev_dir.empty()) return 1.0;  // H_0 = const
        return norm2(prev_dir) + policy.nu;
    };

    for (std::uint64_t k = 0; k < cfg.max_iter; ++k) {
        // feasibility switch: stochastic objective gradient inside, exact
        // constraint pseudogradient outside
        double hv = problem.h ? problem.h->checked_value(x) : -1.0;
        Vec g;
        if (problem.h && hv >= 0.0) {
            g = problem.h->checked_gradient(x);
        } else {
            Theta th = problem.F.draw_theta(rng);
            ++trace.theta_draws;
            g = problem.F.checked_gradient(x, th);
        }
        if (cfg.normalize) {
            double n = norm2(g);
            if (n > 0.0) scale(g, 1.0 / n);
        }

        Vec dir;
        double rho = scale_mult * cfg.schedule.rho(k);
        switch (policy.kind) {
            case SqgPolicyKind::plain: {
                dir = scaled(g, 1.0 / normalizer());
                break;
            }
            case SqgPolicyKind::averaged: {
                window.push_back(scaled(g, 1.0 / normalizer()));
                std::uint64_t wlen =
                    1 + std::min<std::uint64_t>(k, std::uint64_t(std::ceil(
                                                       std::pow(double(k), policy.window_beta))));
                while (window.size() > wlen) window.pop_front();
                dir = zeros(x.size());
                for (const Vec& w : window) axpy(1.0 / double(window.size()), w, dir);
                break;
            }
            case SqgPolicyKind::heavy_ball: {
                double gamma = std::min(
                    1.0, policy.gamma_c * std::pow(double(k) + 1.0, -policy.gamma_exp));
                Vec gn = scaled(g, 1.0 / normalizer());
                if (momentum.empty()) {
                    momentum = gn;
                } else {
                    scale(momentum, 1.0 - gamma);
                    axpy(gamma, gn, momentum);
                }
                dir = momentum;
                break;
            }
            case SqgPolicyKind::gully:
                break;  // direct update below
        }

        if (policy.kind == SqgPolicyKind::gully) {
            double lambda = policy.lambda;
            if (policy.recovery_every > 0 && k % policy.recovery_every == 0) lambda = 0.0;
            Vec xn = x;
            axpy(-(1.0 + lambda) * rho, g, xn);
            if (have_prev) {
                axpy(lambda * rho_prev, g_prev, xn);
                axpy(lambda, sub(x, x_prev), xn);
            }
            x_prev = x;
            g_prev = g;
            have_prev = true;
            x = xn;
        } else {
            prev_dir = dir;
            axpy(-rho, dir, x);
        }
        if (problem.set) x = problem.set->project(x);
        rho_prev = rho;
        if (policy.iterate_avg) iterate_avg.update(x, rho);

        fx = logger.value(x);
        if (norm2(x) > cfg.divergence_bound) {
            if (cfg.return_to_start.enabled &&
                trace.return_to_start_count < cfg.return_to_start.max_returns) {
                ++trace.return_to_start_count;
                scale_mult *= cfg.return_to_start.shrink;
                x = problem.x0;
                if (problem.set) x = problem.set->project(x);
                window.clear();
                momentum.clear();
                prev_dir.clear();
                have_prev = false;
                continue;
            }
            reason = StopReason::diverged;
            trace.append(make_row(k, fx, std::numeric_limits<double>::quiet_NaN(), std::max(0.0, hv),
                          rho, x));
            break;
        }
        if (cfg.log_every > 0 && k % cfg.log_every == 0)
            trace.append(make_row(k, fx, std::numeric_limits<double>::quiet_NaN(), std::max(0.0, hv),
                          rho, x));
    }
    if (policy.iterate_avg) trace.aux_x = iterate_avg.average();
    trace.finish(reason, x, fx);
    return trace;
}

RunTrace kw_solve(const StoProblem& problem, const StoEstimator& est, const SolverConfig& cfg) {
    enforce_schedule(cfg.schedule, TheoremTag::kw, cfg.validation);
    RunTrace trace(cfg.seed, sto_snapshot("kw", cfg, "est=" + std::to_string(int(est.mode))));
    Rng rng = Rng::for_run(cfg.seed, 0);
    MeanLogger logger(problem.F, cfg.seed);

    Vec x = problem.x0;
    if (problem.set) x = problem.set->project(x);
    double fx = logger.value(x);
    StopReason reason = StopReason::max_iter;
    for (std::uint64_t k = 0; k < cfg.max_iter; ++k) {
        Vec xi = est.estimate(problem.F, x, cfg.schedule.alpha(k), cfg.schedule.delta(k), rng);
        ++trace.theta_draws;
        double rho = cfg.schedule.rho(k);
        axpy(-rho, xi, x);
        if (problem.set) x = problem.set->project(x);
        fx = logger.value(x);
        if (norm2(x) > cfg.divergence_bound) {
            reason = StopReason::diverged;
            trace.append(make_row(k, fx, std::numeric_limits<double>::quiet_NaN(), 0.0, rho, x));
            break;
        }
        if (cfg.log_every > 0 && k % cfg.log_every == 0)
            trace.append(make_row(k, fx, std::numeric_limits<double>::quiet_NaN(), 0.0, rho, x));
    }
    trace.finish(reason, x, fx);
    return trace;
}

RunTrace game_solve(const GameProblem& problem, const StoEstimator& est,
                    const SolverConfig& cfg) {
    RunTrace trace(cfg.seed, sto_snapshot("game", cfg, ""));
    Rng rng = Rng::for_run(cfg.seed, 0);

    Vec x = problem.X.project(problem.x0);
    StopReason reason = StopReason::max_iter;
    double last_loss = 0.0;
    for (std::uint64_t k = 0; k < cfg.max_iter; ++k) {
        Theta th = problem.draw_theta(rng);
        ++trace.theta_draws;
        Vec y = problem.best_response(x, th);
        // FD estimate of x -> f(x, y, theta) with this iteration's sample
        StochasticOracle view;
        view.dim = problem.dim;
        view.draw_theta = [&th](Rng&) { return th; };
        view.sample_value = [&](const Vec& z, const Theta& t) {
            return problem.payoff(z, y, t);
        };
        view.sample_gradient = [](const Vec&, const Theta&) -> Vec {
            throw OracleError("game_solve: gradient not available");
        };
        Vec eta = est.estimate(view, x, cfg.schedule.alpha(k), cfg.schedule.delta(k), rng);
        double rho = cfg.schedule.rho(k);
        Vec xn = x;
        axpy(-rho, eta, xn);
        x = problem.X.project(xn);
        last_loss = problem.payoff(x, y, th);
        if (cfg.log_every > 0 && k % cfg.log_every == 0)
            trace.append(make_row(k, last_loss, std::numeric_limits<double>::quiet_NaN(), 0.0, rho, x));
    }
    trace.finish(reason, x, last_loss);
    return trace;
}

namespace {

// Shared conditional-gradient loop; `Estimate` supplies the averager input so
// the deterministic and stochastic drives share one code path.
template <typename Estimate, typename Log>
RunTrace run_conditional_gradient(const Vec& x0, const FeasibleSet& X, Estimate&& next_estimate,
                                  Log&& log_value, const SolverConfig& cfg, const char* name) {
    enforce_schedule(cfg.schedule, TheoremTag::cond_gradient, cfg.validation);
    RunTrace trace(cfg.seed, sto_snapshot(name, cfg, ""));
    Vec x = X.project(x0);
    Averager dir(x.size());
    StopReason reason = StopReason::max_iter;
    double fx = log_value(x);
    for (std::uint64_t k = 0; k < cfg.max_iter; ++k) {
        dir.update(next_estimate(x, k), cfg.schedule.a(k));
        Vec target = X.linmin(dir.state());
        double rho = std::min(1.0, cfg.schedule.rho(k));
        // x stays feasible: convex combination of two points of X
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += rho * (target[i] - x[i]);
        fx = log_value(x);
        if (cfg.log_every > 0 && k % cfg.log_every == 0)
            trace.append(make_row(k, fx, std::numeric_limits<double>::quiet_NaN(), 0.0, rho, x));
    }
    trace.finish(reason, x, fx);
    return trace;
}

}  // namespace

RunTrace sto_conditional_gradient_solve(const StoProblem& problem, const FeasibleSet& X,
                                        CgVariant variant, const StoEstimator& est,
                                        const SolverConfig& cfg) {
    Rng rng = Rng::for_run(cfg.seed, 0);
    auto logger = std::make_shared<MeanLogger>(problem.F, cfg.seed);
    auto theta_count = std::make_shared<std::uint64_t>(0);
    RunTrace trace;
    if (variant == CgVariant::smooth) {
        // exact per-sample gradients feed the averager
        trace = run_conditional_gradient(
            problem.x0, X,
            [&](const Vec& x, std::uint64_t) {
                Theta th = problem.F.draw_theta(rng);
                ++*theta_count;
                return problem.F.checked_gradient(x, th);
            },
            [&](const Vec& x) { return logger->value(x); }, cfg, "sto_cond_gradient");
    } else {
        trace = run_conditional_gradient(
            problem.x0, X,
            [&](const Vec& x, std::uint64_t k) {
                ++*theta_count;
                return est.estimate(problem.F, x, cfg.schedule.alpha(k), cfg.schedule.delta(k),
                                    rng);
            },
            [&](const Vec& x) { return logger->value(x); }, cfg, "sto_cond_gradient");
    }
    trace.theta_draws = *theta_count;
    return trace;
}

RunTrace conditional_gradient_solve(const FunctionOracle& f, const FeasibleSet& X, const Vec& x0,
                                    const StoEstimator& est, const SolverConfig& cfg) {
    Rng rng = Rng::for_run(cfg.seed, 0);
    return run_conditional_gradient(
        x0, X,
        [&](const Vec& x, std::uint64_t k) {
            return est.estimate(f, x, cfg.schedule.alpha(k), cfg.schedule.delta(k), rng);
        },
        [&](const Vec& x) { return f.checked_value(x); }, cfg, "sto_cond_gradient");
}

ReducedGradientStep reduced_gradient_direction(const Mat& A, const Vec& x, const Vec& g) {
    const std::size_t m = A.rows, n = A.cols;
    check_dim(x, n, "reduced_gradient_direction x");
    check_dim(g, n, "reduced_gradient_direction g");
    if (m == 0 || m > n) throw DimensionError("reduced_gradient_direction: bad constraint shape");

    ReducedGradientStep out;
    // basis: indices of the m largest components, ties to the lowest index
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t bx) { return x[a] > x[bx]; });
    out.basis.assign(idx.begin(), idx.begin() + std::ptrdiff_t(m));
    std::sort(out.basis.begin(), out.basis.end());
    std::vector<std::size_t> nonbasic;
    for (std::size_t j = 0; j < n; ++j)
        if (std::find(out.basis.begin(), out.basis.end(), j) == out.basis.end())
            nonbasic.push_back(j);

    Mat B(m, m), N(m, nonbasic.size());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) B(i, j) = A(i, out.basis[j]);
        for (std::size_t j = 0; j < nonbasic.size(); ++j) N(i, j) = A(i, nonbasic[j]);
    }
    Vec gB(m);
    for (std::size_t j = 0; j < m; ++j) gB[j] = g[out.basis[j]];

    // w = B^{-T} g_B, r_N = g_N - N^T w
    Mat Bt(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) Bt(i, j) = B(j, i);
    Vec w;
    try {
        w = solve_dense(Bt, gB, 1e-12);
    } catch (const std::runtime_error&) {
        std::string msg = "reduced gradient: singular basis {";
        for (std::size_t j : out.basis) msg += std::to_string(j) + ",";
        throw RankError(msg + "}");
    }
    out.reduced_gradient.resize(nonbasic.size());
    for (std::size_t j = 0; j < nonbasic.size(); ++j) {
        double s = g[nonbasic[j]];
        for (std::size_t i = 0; i < m; ++i) s -= N(i, j) * w[i];
        out.reduced_gradient[j] = s;
    }

    // d_N: -r_j when r_j <= 0 (increase allowed), else -x_j r_j
    Vec dN(nonbasic.size());
    for (std::size_t j = 0; j < nonbasic.size(); ++j) {
        double r = out.reduced_gradient[j];
        dN[j] = r <= 0.0 ? -r : -x[nonbasic[j]] * r;
    }
    // d_B = -B^{-1} N d_N
    Vec NdN = matvec(N, dN);
    Vec dB = solve_dense(B, NdN, 1e-12);
    scale(dB, -1.0);

    out.direction = zeros(n);
    for (std::size_t j = 0; j < nonbasic.size(); ++j) out.direction[nonbasic[j]] = dN[j];
    for (std::size_t i = 0; i < m; ++i) out.direction[out.basis[i]] = dB[i];

    double lam = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
        if (out.direction[j] < 0.0) lam = std::min(lam, -x[j] / out.direction[j]);
    out.lambda = std::isfinite(lam) ? MaxStep::of(lam) : MaxStep::infinite();
    return out;
}

namespace {

// Shared reduced-gradient loop; Estimate feeds the averager, Log the trace.
template <typename Estimate, typename Log>
RunTrace run_reduced_gradient(const Vec& x0, const Mat& A, const Vec& b, Estimate&& next_estimate,
                              Log&& log_value, const SolverConfig& cfg, const char* name) {
    enforce_schedule(cfg.schedule, TheoremTag::cond_gradient, cfg.validation);
    RunTrace trace(cfg.seed, sto_snapshot(name, cfg, ""));
    Vec x = x0;
    if (norm_inf(sub(matvec(A, x), b)) > 1e-9)
        throw FeasibilityError(std::string(name) + ": x0 violates Ax=b");
    Averager v(x.size());
    StopReason reason = StopReason::max_iter;
    double fx = log_value(x);
    for (std::uint64_t k = 0; k < cfg.max_iter; ++k) {
        v.update(next_estimate(x, k), cfg.schedule.a(k));
        ReducedGradientStep rg = reduced_gradient_direction(A, x, v.state());
        double sigma = rg.lambda.clipped(cfg.schedule.rho(k));
        axpy(sigma, rg.direction, x);
        for (double& c : x) c = std::max(c, 0.0);  // clip roundoff at the bound
        fx = log_value(x);
        if (cfg.log_every > 0 && k % cfg.log_every == 0) {
            TraceRow row = make_row(k, fx, std::numeric_limits<double>::quiet_NaN(),
                                    norm_inf(sub(matvec(A, x), b)), sigma, x);
            row.dir_norm = norm2(rg.direction);
            trace.append(row);
        }
    }
    trace.finish(reason, x, fx);
    return trace;
}

// Shared feasible-directions loop over smooth constraints.
template <typename Estimate, typename Log>
RunTrace run_feasible_directions(const Vec& x0, const std::vector<FunctionOracle>& constraints,
                                 Estimate&& next_estimate, Log&& log_value,
                                 const SolverConfig& cfg, const char* name) {
    enforce_schedule(cfg.schedule, TheoremTag::cond_gradient, cfg.validation);
    RunTrace trace(cfg.seed, sto_snapshot(name, cfg, ""));
    const std::size_t n = x0.size(), m = constraints.size();
    Vec x = x0;
    for (const auto& c : constraints)
        if (c.checked_value(x) > 1e-9)
            throw FeasibilityError(std::string(name) + ": x0 infeasible");
    Averager y(n);
    StopReason reason = StopReason::max_iter;
    double fx = log_value(x);

    for (std::uint64_t k = 0; k < cfg.max_iter; ++k) {
        y.update(next_estimate(x, k), cfg.schedule.a(k));

        // LP in (d, sigma): min sigma s.t. <y,d> - sigma <= 0,
        // f_i + <grad f_i, d> - sigma <= 0, -1 <= d <= 1.
        LpProblem lp;
        lp.A = Mat(1 + m, n + 1);
        lp.b = Vec(1 + m, 0.0);
        for (std::size_t j = 0; j < n; ++j) lp.A(0, j) = y.state()[j];
        lp.A(0, n) = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
            Vec gi = constraints[i].checked_gradient(x);
            for (std::size_t j = 0; j < n; ++j) lp.A(i + 1, j) = gi[j];
            lp.A(i + 1, n) = -1.0;
            lp.b[i + 1] = -constraints[i].checked_value(x);
        }
        lp.c = zeros(n + 1);
        lp.c[n] = 1.0;
        lp.lo = Vec(n + 1, -1.0);
        lp.hi = Vec(n + 1, 1.0);
        lp.lo[n] = -std::numeric_limits<double>::infinity();
        lp.hi[n] = std::numeric_limits<double>::infinity();
        LpResult sol = lp_solve(lp);
        if (sol.status != LpStatus::optimal)
            throw FeasibilityError(std::string(name) + ": direction LP " +
                                   std::string(to_string(sol.status)) +
                                   " (regularity violated)");
        Vec d(sol.x.begin(), sol.x.begin() + std::ptrdiff_t(n));
        double sigma = sol.x[n];

        double rho = cfg.schedule.rho(k);
        double gamma = rho;
        if (sigma >= 0.0) {
            gamma = 0.0;  // no strictly feasible descent direction certified
        } else {
            // largest feasible multiple of d up to rho, kept strictly feasible
            auto feasible_at = [&](double t) {
                Vec z = x;
                axpy(t, d, z);
                for (const auto& c : constraints)
                    if (c.checked_value(z) > 0.0) return false;
                return true;
            };
            if (!feasible_at(rho)) {
                double lo = 0.0, hi = rho;
                for (int it = 0; it < 64; ++it) {
                    double mid = 0.5 * (lo + hi);
                    (feasible_at(mid) ? lo : hi) = mid;
                }
                gamma = lo;
            }
        }
        axpy(gamma, d, x);
        fx = log_value(x);
        double viol = 0.0;
        for (const auto& c : constraints) viol = std::max(viol, c.checked_value(x));
        if (cfg.log_every > 0 && k % cfg.log_every == 0)
            trace.append(make_row(k, fx, std::numeric_limits<double>::quiet_NaN(), std::max(0.0, viol),
                          gamma, x));
    }
    trace.finish(reason, x, fx);
    return trace;
}

}  // namespace

RunTrace sto_reduced_gradient_solve(const StoProblem& problem, const Mat& A, const Vec& b,
                                    const StoEstimator& est, const SolverConfig& cfg) {
    Rng rng = Rng::for_run(cfg.seed, 0);
    MeanLogger logger(problem.F, cfg.seed);
    std::uint64_t thetas = 0;
    RunTrace t = run_reduced_gradient(
        problem.x0, A, b,
        [&](const Vec& x, std::uint64_t k) {
            ++thetas;
            return est.estimate(problem.F, x, cfg.schedule.alpha(k), cfg.schedule.delta(k), rng);
        },
        [&](const Vec& x) { return logger.value(x); }, cfg, "sto_reduced_gradient");
    t.theta_draws = thetas;
    return t;
}

RunTrace reduced_gradient_solve(const FunctionOracle& f, const Mat& A, const Vec& b,
                                const Vec& x0, const StoEstimator& est, const SolverConfig& cfg) {
    Rng rng = Rng::for_run(cfg.seed, 0);
    return run_reduced_gradient(
        x0, A, b,
        [&](const Vec& x, std::uint64_t k) {
            return est.estimate(f, x, cfg.schedule.alpha(k), cfg.schedule.delta(k), rng);
        },
        [&](const Vec& x) { return f.checked_value(x); }, cfg, "sto_reduced_gradient");
}

RunTrace sto_feasible_directions_solve(const StoProblem& problem,
                                       const std::vector<FunctionOracle>& constraints,
                                       const StoEstimator& est, const SolverConfig& cfg) {
    Rng rng = Rng::for_run(cfg.seed, 0);
    MeanLogger logger(problem.F, cfg.seed);
    std::uint64_t thetas = 0;
    RunTrace t = run_feasible_directions(
        problem.x0, constraints,
        [&](const Vec& x, std::uint64_t k) {
            ++thetas;
            return est.estimate(problem.F, x, cfg.schedule.alpha(k), cfg.schedule.delta(k), rng);
        },
        [&](const Vec& x) { return logger.value(x); }, cfg, "sto_feasible_directions");
    t.theta_draws = thetas;
    return t;
}

RunTrace feasible_directions_solve(const FunctionOracle& f,
                                   const std::vector<FunctionOracle>& constraints, const Vec& x0,
                                   const StoEstimator& est, const SolverConfig& cfg) {
    Rng rng = Rng::for_run(cfg.seed, 0);
    return run_feasible_directions(
        x0, constraints,
        [&](const Vec& x, std::uint64_t k) {
            return est.estimate(f, x, cfg.schedule.alpha(k), cfg.schedule.delta(k), rng);
        },
        [&](const Vec& x) { return f.checked_value(x); }, cfg, "sto_feasible_directions");
}

RunTrace sto_constrained_lipschitz_solve(const StoProblem& problem, const FunctionOracle& h,
                                         const StoEstimator& est, const SolverConfig& cfg,
                                         double eps_div) {
    enforce_schedule(cfg.schedule, TheoremTag::analytic_penalty, cfg.validation);
    RunTrace trace(cfg.seed, sto_snapshot("sto_constrained_lipschitz", cfg, ""));
    Rng rng = Rng::for_run(cfg.seed, 0);
    MeanLogger logger(problem.F, cfg.seed);

    Vec x = problem.x0;
    Averager zF(x.size()), zh(x.size());
    StopReason reason = StopReason::max_iter;
    double fx = logger.value(x);
    for (std::uint64_t k = 0; k < cfg.max_iter; ++k) {
        double alpha = cfg.schedule.alpha(k), delta = cfg.schedule.delta(k);
        zF.update(est.estimate(problem.F, x, alpha, delta, rng), cfg.schedule.a(k));
        ++trace.theta_draws;
        zh.update(est.estimate(h, x, alpha, delta, rng), cfg.schedule.a(k));

        double hv = h.checked_value(x);
        PenaltyDirection pd;
        try {
            pd = analytic_penalty_direction(zF.state(), zh.state(), hv, eps_div);
        } catch (const OracleError&) {
            throw OracleError("sto_constrained_lipschitz: regularity violated at iterate " +
                              std::to_string(k));
        }
        double rho = cfg.schedule.rho(k);
        axpy(rho, pd.d, x);
        fx = logger.value(x);
        if (cfg.log_every > 0 && k % cfg.log_every == 0)
            trace.append(make_row(k, fx, std::numeric_limits<double>::quiet_NaN(), std::max(0.0, hv),
                          rho, x));
    }
    trace.finish(reason, x, fx);
    return trace;
}

StoSaddleResult sto_arrow_hurwicz_solve(const StoSaddleProblem& problem, FdMode mode,
                                        const SolverConfig& cfg) {
    if (problem.f.empty()) throw std::invalid_argument("sto_arrow_hurwicz: no objective");
    enforce_schedule(cfg.schedule, TheoremTag::saddle, cfg.validation);
    StoSaddleResult res;
    res.trace = RunTrace(cfg.seed, sto_snapshot("sto_arrow_hurwicz", cfg, ""));
    Rng rng = Rng::for_run(cfg.seed, 0);
    const std::size_t m = problem.f.size() - 1;

    Vec x = problem.X.project(problem.x0);
    Vec u = problem.U.project(zeros(m));
    CesaroAverager xhat, uhat;

    for (std::uint64_t k = 0; k < cfg.max_iter; ++k) {
        double alpha = cfg.schedule.alpha(k), delta = cfg.schedule.delta(k);
        Theta th = problem.draw_theta(rng);  // one sample drives the whole iteration
        ++res.trace.theta_draws;

        EstimatorConfig e;
        e.mode = mode;
        e.alpha = alpha;
        e.delta = delta;
        auto component = [&](std::size_t nu) {
            return detail::fd_estimate_fn(
                [&](const Vec& z) { return problem.f[nu](z, th); }, x, e, rng);
        };
        Vec v = component(0);
        for (std::size_t i = 0; i < m; ++i)
            if (u[i] != 0.0) axpy(u[i], component(i + 1), v);

        Vec lu(m);
        for (std::size_t i = 0; i < m; ++i) lu[i] = problem.f[i + 1](x, th);

        double rho = cfg.schedule.rho(k);
        Vec xn = x;
        axpy(-rho, v, xn);
        x = problem.X.project(xn);
        Vec un = u;
        axpy(rho, lu, un);
        u = problem.U.project(un);
        xhat.update(x, rho);
        uhat.update(u, rho);

        if (cfg.log_every > 0 && k % cfg.log_every == 0)
            res.trace.append(make_row(k, problem.f[0](x, th), std::numeric_limits<double>::quiet_NaN(),
                              norm_inf(lu), rho, x));
    }
    res.x_hat = xhat.average();
    res.u_hat = uhat.average();
    res.trace.aux_x = res.x_hat;
    res.trace.aux_u = res.u_hat;
    res.trace.finish(StopReason::max_iter, x, 0.0);
    return res;
}

RunTrace averaged_direction_solve(const StoProblem& problem, AvgDirVariant variant,
                                  const StoEstimator& est, const SolverConfig& cfg) {
    enforce_schedule(cfg.schedule,
                     variant == AvgDirVariant::smooth ? TheoremTag::averaged_smooth
                                                      : TheoremTag::cond_gradient,
                     cfg.validation);
    std::ostringstream extra;
    extra << "variant=" << int(variant);
    RunTrace trace(cfg.seed, sto_snapshot("averaged_direction", cfg, extra.str()));
    Rng rng = Rng::for_run(cfg.seed, 0);
    MeanLogger logger(problem.F, cfg.seed);

    Vec x = problem.x0;
    const bool project = variant != AvgDirVariant::unconstrained_lipschitz && problem.set;
    if (project) x = problem.set->project(x);
    Averager dir(x.size());
    StopReason reason = StopReason::max_iter;
    double fx = logger.value(x);
    for (std::uint64_t k = 0; k < cfg.max_iter; ++k) {
        Vec xi;
        if (variant == AvgDirVariant::smooth) {
            Theta th = problem.F.draw_theta(rng);
            xi = problem.F.checked_gradient(x, th);
        } else {
            xi = est.estimate(problem.F, x, cfg.schedule.alpha(k), cfg.schedule.delta(k), rng);
        }
        ++trace.theta_draws;
        dir.update(xi, cfg.schedule.a(k));
        double rho = cfg.schedule.rho(k);
        axpy(-rho, dir.state(), x);
        if (project) x = problem.set->project(x);
        fx = logger.value(x);
        if (norm2(x) > cfg.divergence_bound) {
            reason = StopReason::diverged;
            trace.append(make_row(k, fx, std::numeric_limits<double>::quiet_NaN(), 0.0, rho, x));
            break;
        }
        if (cfg.log_every > 0 && k % cfg.log_every == 0)
            trace.append(make_row(k, fx, std::numeric_limits<double>::quiet_NaN(), 0.0, rho, x));
    }
    trace.finish(reason, x, fx);
    return trace;
}

}  // namespace nsopt
