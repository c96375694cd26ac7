#include "nsopt/solvers_fd.hpp"

#include <algorithm>
#include <sstream>

#include "nsopt/calculus.hpp"
#include "nsopt/direction_rules.hpp"

namespace nsopt {

namespace {

EstimatorConfig estimator_at(const FdOptions& opts, const Schedule& s, std::uint64_t k) {
    EstimatorConfig e;
    e.mode = opts.mode;
    e.alpha = s.alpha(k);
    e.delta = s.delta(k);
    e.p = opts.random_p;
    e.normalize_random = opts.normalize_random;
    return e;
}

std::string fd_snapshot(const char* solver, const SolverConfig& cfg, const FdOptions& opts) {
    std::ostringstream os;
    os << "solver=" << solver << ";seed=" << cfg.seed << ";max_iter=" << cfg.max_iter
       << ";fd_mode=" << int(opts.mode) << ";rho=" << cfg.schedule.rho_c << "/(k+"
       << cfg.schedule.k0 << ")^" << cfg.schedule.rho_exp << ";alpha=" << cfg.schedule.alpha_c
       << "^" << cfg.schedule.alpha_exp;
    return os.str();
}

}  // namespace

RunTrace fd_solve(const FdProblem& problem, const FdOptions& opts, const SolverConfig& cfg) {
    enforce_schedule(cfg.schedule, TheoremTag::fd_basic, cfg.validation);
    if (opts.averaging_window < 1)
        throw std::invalid_argument("fd_solve: averaging window must be >= 1");
    RunTrace trace(cfg.seed, fd_snapshot("fd", cfg, opts));
    Rng rng = Rng::for_run(cfg.seed, 0);

    Vec x = problem.x0;
    if (problem.set) x = problem.set->project(x);
    double fx = problem.f.checked_value(x);
    StopReason reason = StopReason::max_iter;
    std::optional<double> best;
    std::uint64_t since_best = 0;

    Vec window_sum;
    for (std::uint64_t k = 0; k < cfg.max_iter; ++k) {
        if (opts.averaging_window > 1 && k % opts.averaging_window == 0) window_sum.clear();
        Vec h = fd_estimate(problem.f, x, estimator_at(opts, cfg.schedule, k), rng);
        if (opts.averaging_window > 1) {
            if (window_sum.empty())
                window_sum = h;
            else
                axpy(1.0, h, window_sum);
        } else {
            window_sum = h;
        }

        double rho = cfg.schedule.rho(k);
        axpy(-rho, window_sum, x);
        if (problem.set) x = problem.set->project(x);
        fx = problem.f.checked_value(x);

        if (norm2(x) > cfg.divergence_bound) {
            reason = StopReason::diverged;
            trace.append(make_row(k, fx, norm2(window_sum), 0.0, rho, x));
            break;
        }
        bool stop = false;
        if (cfg.target_f && fx <= *cfg.target_f) {
            reason = StopReason::target_value;
            stop = true;
        }
        if (!best || fx < *best - cfg.stall.tol) {
            best = fx;
            since_best = 0;
        } else if (cfg.stall.window > 0 && ++since_best >= cfg.stall.window) {
            reason = StopReason::stalled;
            stop = true;
        }
        TraceRow row = make_row(k, fx, std::numeric_limits<double>::quiet_NaN(), 0.0, rho, x);
        row.dir_norm = norm2(window_sum);
        if (cfg.log_every > 0 && (k % cfg.log_every == 0 || stop)) trace.append(row);
        if (stop) break;
    }
    trace.finish(reason, x, fx);
    return trace;
}

RunTrace fd_minimax_solve(const std::vector<FunctionOracle>& components, const FeasibleSet& X,
                          const Vec& x0, const FdOptions& opts, const SolverConfig& cfg) {
    if (components.empty()) throw std::invalid_argument("fd_minimax_solve: no components");
    enforce_schedule(cfg.schedule, TheoremTag::fd_minimax, cfg.validation);
    RunTrace trace(cfg.seed, fd_snapshot("fd_minimax", cfg, opts));
    Rng rng = Rng::for_run(cfg.seed, 0);

    auto max_value = [&](const Vec& x, std::size_t& arg) {
        double v = components[0].checked_value(x);
        arg = 0;
        for (std::size_t i = 1; i < components.size(); ++i) {
            double vi = components[i].checked_value(x);
            if (vi > v) {
                v = vi;
                arg = i;
            }
        }
        return v;
    };

    Vec x = X.project(x0);
    std::size_t j = 0;
    double fx = max_value(x, j);
    StopReason reason = StopReason::max_iter;
    for (std::uint64_t k = 0; k < cfg.max_iter; ++k) {
        max_value(x, j);  // active component, lowest index on ties
        Vec h = fd_estimate(components[j], x, estimator_at(opts, cfg.schedule, k), rng);
        double rho = cfg.schedule.rho(k);
        Vec y = x;
        axpy(-rho, h, y);
        x = X.project(y);
        fx = max_value(x, j);
        if (cfg.target_f && fx <= *cfg.target_f) {
            reason = StopReason::target_value;
            trace.append(make_row(k, fx, std::numeric_limits<double>::quiet_NaN(), 0.0, rho, x));
            break;
        }
        if (cfg.log_every > 0 && k % cfg.log_every == 0)
            trace.append(make_row(k, fx, std::numeric_limits<double>::quiet_NaN(), 0.0, rho, x));
    }
    trace.finish(reason, x, fx);
    return trace;
}

RunTrace penalty_fd_solve(const FunctionOracle& f0, const std::vector<FunctionOracle>& fi,
                          const Vec& penalty_r, const FeasibleSet& X, const Vec& x0,
                          const FdOptions& opts, const SolverConfig& cfg) {
    check_dim(penalty_r, fi.size(), "penalty_fd_solve weights");
    for (double r : penalty_r)
        if (r <= 0.0) throw std::invalid_argument("penalty_fd_solve: weights must be positive");
    enforce_schedule(cfg.schedule, TheoremTag::fd_basic, cfg.validation);
    RunTrace trace(cfg.seed, fd_snapshot("penalty_fd", cfg, opts));
    Rng rng = Rng::for_run(cfg.seed, 0);

    auto penalty_value = [&](const Vec& x, double& viol) {
        double v = f0.checked_value(x);
        viol = 0.0;
        for (std::size_t i = 0; i < fi.size(); ++i) {
            double c = fi[i].checked_value(x);
            viol = std::max(viol, c);
            v += penalty_r[i] * std::max(0.0, c);
        }
        viol = std::max(0.0, viol);
        return v;
    };

    Vec x = X.project(x0);
    double viol = 0.0;
    double phi = penalty_value(x, viol);
    StopReason reason = StopReason::max_iter;
    for (std::uint64_t k = 0; k < cfg.max_iter; ++k) {
        EstimatorConfig est = estimator_at(opts, cfg.schedule, k);
        Vec h = fd_estimate(f0, x, est, rng);
        for (std::size_t i = 0; i < fi.size(); ++i) {
            // r_i^+ = r_i exactly when constraint i is violated, else 0
            if (fi[i].checked_value(x) > 0.0)
                axpy(penalty_r[i], fd_estimate(fi[i], x, est, rng), h);
        }
        double rho = cfg.schedule.rho(k);
        Vec y = x;
        axpy(-rho, h, y);
        x = X.project(y);
        phi = penalty_value(x, viol);
        if (cfg.log_every > 0 && k % cfg.log_every == 0)
            trace.append(make_row(k, phi, std::numeric_limits<double>::quiet_NaN(), viol, rho, x));
    }
    trace.finish(reason, x, phi);
    return trace;
}

AnalyticPenaltyResult analytic_penalty_solve(const FunctionOracle& f, const FunctionOracle& h,
                                             const Vec& x0, const AnalyticPenaltyOptions& opts,
                                             const SolverConfig& cfg) {
    enforce_schedule(cfg.schedule, TheoremTag::analytic_penalty, cfg.validation);
    FdOptions fdo;
    fdo.mode = opts.mode;
    AnalyticPenaltyResult res;
    res.trace = RunTrace(cfg.seed, fd_snapshot("analytic_penalty", cfg, fdo));
    Rng rng = Rng::for_run(cfg.seed, 0);

    Vec x = x0;
    Averager zf(x.size()), zh(x.size());
    double fx = f.checked_value(x);
    StopReason reason = StopReason::max_iter;
    for (std::uint64_t k = 0; k < cfg.max_iter; ++k) {
        EstimatorConfig est = estimator_at(fdo, cfg.schedule, k);
        zf.update(fd_estimate(f, x, est, rng), cfg.schedule.a(k));
        zh.update(fd_estimate(h, x, est, rng), cfg.schedule.a(k));

        double hv = h.checked_value(x);
        PenaltyDirection pd;
        try {
            pd = analytic_penalty_direction(zf.state(), zh.state(), hv, opts.eps_div);
        } catch (const OracleError&) {
            throw OracleError("analytic_penalty: regularity violated at iterate " +
                              std::to_string(k) + " (||z_h|| ~ 0 while infeasible)");
        }
        res.final_multiplier = pd.u;
        double rho = cfg.schedule.rho(k);
        axpy(rho, pd.d, x);
        fx = f.checked_value(x);
        if (norm2(x) > cfg.divergence_bound) {
            reason = StopReason::diverged;
            res.trace.append(make_row(k, fx, std::numeric_limits<double>::quiet_NaN(),
                              std::max(0.0, hv), rho, x));
            break;
        }
        if (cfg.log_every > 0 && k % cfg.log_every == 0)
            res.trace.append(make_row(k, fx, std::numeric_limits<double>::quiet_NaN(), std::max(0.0, hv),
                              rho, x));
    }
    res.trace.finish(reason, x, fx);
    return res;
}

SaddleResult arrow_hurwicz_solve(const FunctionOracle& f0, const std::vector<FunctionOracle>& fi,
                                 const FeasibleSet& X, const FeasibleSet& U, const Vec& x0,
                                 const FdOptions& opts, const SolverConfig& cfg) {
    if (U.dim() != fi.size())
        throw DimensionError("arrow_hurwicz_solve: dual set dimension != number of constraints");
    enforce_schedule(cfg.schedule, TheoremTag::saddle, cfg.validation);
    SaddleResult res;
    res.trace = RunTrace(cfg.seed, fd_snapshot("arrow_hurwicz", cfg, opts));
    Rng rng = Rng::for_run(cfg.seed, 0);

    Vec x = X.project(x0);
    Vec u = U.project(zeros(fi.size()));
    CesaroAverager xhat, uhat;
    StopReason reason = StopReason::max_iter;
    double fx = f0.checked_value(x);

    for (std::uint64_t k = 0; k < cfg.max_iter; ++k) {
        EstimatorConfig est = estimator_at(opts, cfg.schedule, k);
        Vec v = fd_estimate(f0, x, est, rng);
        for (std::size_t i = 0; i < fi.size(); ++i)
            if (u[i] != 0.0) axpy(u[i], fd_estimate(fi[i], x, est, rng), v);

        Vec lu(fi.size());  // exact dual gradient: the constraint values
        double viol = 0.0;
        for (std::size_t i = 0; i < fi.size(); ++i) {
            lu[i] = fi[i].checked_value(x);
            viol = std::max(viol, lu[i]);
        }

        double rho = cfg.schedule.rho(k);
        Vec xn = x;
        axpy(-rho, v, xn);
        x = X.project(xn);
        Vec un = u;
        axpy(rho, lu, un);
        u = U.project(un);

        xhat.update(x, rho);
        uhat.update(u, rho);
        fx = f0.checked_value(x);
        if (cfg.log_every > 0 && k % cfg.log_every == 0)
            res.trace.append(make_row(k, fx, std::numeric_limits<double>::quiet_NaN(),
                              std::max(0.0, viol), rho, x));
    }
    res.x_hat = xhat.average();
    res.u_hat = uhat.average();
    res.trace.aux_x = res.x_hat;
    res.trace.aux_u = res.u_hat;
    res.trace.finish(reason, x, fx);
    return res;
}

// ---------------------------------------------------------------------------
// 1-D lower-approximation global method.

namespace {

struct SamplePoint {
    double x, f;
    double slope = 0.0;  // gradient at x, paraboloid mode only
};

struct EnvelopeState {
    double L = 1.0;
    EnvelopeMode mode = EnvelopeMode::cone;
    std::vector<SamplePoint> pts;  // kept sorted by x

    double value(double x) const {
        double best = -std::numeric_limits<double>::infinity();
        for (const SamplePoint& p : pts) {
            double v;
            if (mode == EnvelopeMode::cone) {
                v = p.f - L * std::abs(x - p.x);
            } else {
                double c = p.x + p.slope / L;
                double peak = p.f + p.slope * p.slope / (2.0 * L);
                v = peak - 0.5 * L * (x - c) * (x - c);
            }
            best = std::max(best, v);
        }
        return best;
    }

    void insert(SamplePoint p) {
        auto it = std::lower_bound(pts.begin(), pts.end(), p.x,
                                   [](const SamplePoint& a, double v) { return a.x < v; });
        pts.insert(it, p);
    }

    // Candidate abscissas where the envelope can attain its minimum on [a,b]:
    // the interval edges plus every valley/breakpoint of adjacent pieces.
    std::vector<double> candidates(double a, double b) const {
        std::vector<double> cs{a, b};
        if (mode == EnvelopeMode::cone) {
            for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
                const SamplePoint &p = pts[i], &q = pts[i + 1];
                double xi = (p.f - q.f + L * (p.x + q.x)) / (2.0 * L);
                if (xi > a && xi < b) cs.push_back(std::clamp(xi, p.x, q.x));
            }
        } else {
            // Same-curvature caps: the pairwise switch points are where the
            // linear parts cross; pieces are concave so minima sit on edges.
            for (std::size_t i = 0; i < pts.size(); ++i)
                for (std::size_t j = i + 1; j < pts.size(); ++j) {
                    double ci = pts[i].x + pts[i].slope / L;
                    double cj = pts[j].x + pts[j].slope / L;
                    if (std::abs(ci - cj) < 1e-15) continue;
                    double vi = pts[i].f + pts[i].slope * pts[i].slope / (2.0 * L);
                    double vj = pts[j].f + pts[j].slope * pts[j].slope / (2.0 * L);
                    // peak_i - L/2 (x-ci)^2 = peak_j - L/2 (x-cj)^2
                    double xi = (vi - vj) / (L * (ci - cj)) + 0.5 * (ci + cj);
                    if (xi > a && xi < b) cs.push_back(xi);
                }
        }
        return cs;
    }
};

}  // namespace

double envelope_value(const std::vector<std::pair<double, double>>& points, double lipschitz,
                      EnvelopeMode mode, const std::vector<double>& slopes, double x) {
    EnvelopeState env;
    env.L = lipschitz;
    env.mode = mode;
    for (std::size_t i = 0; i < points.size(); ++i) {
        double s = mode == EnvelopeMode::paraboloid ? slopes.at(i) : 0.0;
        env.insert({points[i].first, points[i].second, s});
    }
    return env.value(x);
}

GlobalResult piyavskii_solve(const FunctionOracle& f, double lo, double hi, double lipschitz,
                             const GlobalOptions& opts,
                             const std::optional<GlobalConstraint>& constraint,
                             std::vector<std::pair<double, double>>* envelope_csv) {
    if (!(hi > lo)) throw std::invalid_argument("piyavskii_solve: empty interval");
    if (lipschitz <= 0.0) throw std::invalid_argument("piyavskii_solve: Lipschitz constant <= 0");
    if (opts.eps_gap <= 0.0) throw std::invalid_argument("piyavskii_solve: eps_gap <= 0");
    if (f.dim != 1) throw DimensionError("piyavskii_solve: oracle must be one-dimensional");

    GlobalResult res;
    EnvelopeState env;
    env.L = lipschitz;
    env.mode = opts.mode;
    // Constraint lower approximations, accumulated only at infeasible samples.
    EnvelopeState cenv;
    if (constraint) {
        cenv.L = constraint->lipschitz;
        cenv.mode = EnvelopeMode::cone;
    }

    auto eval = [&](double x) {
        Vec xv{x};
        SamplePoint p{x, f.checked_value(xv)};
        if (opts.mode == EnvelopeMode::paraboloid) p.slope = f.checked_gradient(xv)[0];
        env.insert(p);
        res.points.emplace_back(x, p.f);
        ++res.evals;
        bool feasible = true;
        if (constraint) {
            double hv = constraint->h.checked_value(xv);
            if (hv > 0.0) {
                cenv.insert({x, hv, 0.0});
                feasible = false;
            }
        }
        if (feasible && p.f < res.f_best) {
            res.f_best = p.f;
            res.x_best = x;
        }
        return p.f;
    };

    res.f_best = std::numeric_limits<double>::infinity();
    eval(lo);
    if (res.evals < opts.max_evals) eval(hi);

    while (res.evals < opts.max_evals) {
        // Feasible sub-intervals: [lo,hi] minus the certified-infeasible balls
        // |x - x_i| < h(x_i)/L_h around infeasible samples.
        std::vector<std::pair<double, double>> allowed{{lo, hi}};
        for (const SamplePoint& p : cenv.pts) {
            double r = p.f / cenv.L;
            std::vector<std::pair<double, double>> next;
            for (auto [a, b] : allowed) {
                if (p.x - r > a) next.emplace_back(a, std::min(b, p.x - r));
                if (p.x + r < b) next.emplace_back(std::max(a, p.x + r), b);
            }
            allowed.swap(next);
        }
        if (allowed.empty()) {
            res.infeasible = true;  // approximating problem has no feasible point
            break;
        }

        double phi_min = std::numeric_limits<double>::infinity();
        double x_next = lo;
        for (auto [a, b] : allowed) {
            for (double c : env.candidates(a, b)) {
                double v = env.value(c);
                if (v < phi_min) {
                    phi_min = v;
                    x_next = c;
                }
            }
        }

        double fx = eval(x_next);
        res.gap = std::max(0.0, res.f_best - phi_min);
        if (fx - phi_min <= opts.eps_gap) break;
    }

    if (envelope_csv) {
        envelope_csv->clear();
        std::vector<double> cs = env.candidates(lo, hi);
        for (const SamplePoint& p : env.pts) cs.push_back(p.x);
        std::sort(cs.begin(), cs.end());
        cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
        for (double c : cs) envelope_csv->emplace_back(c, env.value(c));
    }
    return res;
}

}  // namespace nsopt
