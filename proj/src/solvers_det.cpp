#include "nsopt/solvers_det.hpp"

#include <sstream>

namespace nsopt {

namespace {

// Active-boundary tolerance for the h(x) = 0 branch of the constraint switch;
// exact zero never fires in floating point.
double eq_tol(double hv) { return 1e-9 * (1.0 + std::abs(hv)); }

struct Selection {
    Vec g;
    double h_violation = 0.0;
};

// The switched mapping G(x): objective inside, constraint outside, a fixed
// admissible hull element (midpoint) on the boundary.
Selection select_gradient(const DetProblem& p, ConstraintMode mode, const Vec& x,
                          const Mat* projector) {
    Selection sel;
    switch (mode) {
        case ConstraintMode::none: {
            sel.g = p.f.checked_gradient(x);
            break;
        }
        case ConstraintMode::single_h: {
            if (!p.h) throw std::invalid_argument("single_h mode requires an h oracle");
            double hv = p.h->checked_value(x);
            sel.h_violation = std::max(0.0, hv);
            double tol = eq_tol(hv);
            if (hv > tol) {
                sel.g = p.h->checked_gradient(x);
            } else if (hv >= -tol) {
                sel.g = p.f.checked_gradient(x);
                Vec gh = p.h->checked_gradient(x);
                scale(sel.g, 0.5);
                axpy(0.5, gh, sel.g);
            } else {
                sel.g = p.f.checked_gradient(x);
            }
            break;
        }
        case ConstraintMode::leading_list: {
            bool found = false;
            for (const auto& [fj, cj] : p.leading) {
                double v = fj.checked_value(x);
                sel.h_violation = std::max(sel.h_violation, v - cj);
                if (!found && v > cj) {
                    sel.g = fj.checked_gradient(x);
                    found = true;
                }
            }
            sel.h_violation = std::max(0.0, sel.h_violation);
            if (!found) sel.g = p.f.checked_gradient(x);
            break;
        }
        case ConstraintMode::equality_projected: {
            sel.g = matvec(*projector, p.f.checked_gradient(x));
            break;
        }
    }
    return sel;
}

void maybe_normalize(Vec& g, bool normalize) {
    if (!normalize) return;
    double n = norm2(g);
    if (n > 0.0) scale(g, 1.0 / n);
}

std::string snapshot(const char* solver, const SolverConfig& cfg, const std::string& extra) {
    std::ostringstream os;
    os << "solver=" << solver << ";seed=" << cfg.seed << ";max_iter=" << cfg.max_iter
       << ";normalize=" << (cfg.normalize ? 1 : 0) << ";rho=" << cfg.schedule.rho_c << "/(k+"
       << cfg.schedule.k0 << ")^" << cfg.schedule.rho_exp;
    if (!extra.empty()) os << ";" << extra;
    return os.str();
}

// Shared stop logic driven once per iteration after the step.
struct StopWatcher {
    const SolverConfig& cfg;
    Rng diag;
    double best_f = std::numeric_limits<double>::infinity();
    std::uint64_t since_best = 0;

    explicit StopWatcher(const SolverConfig& c)
        : cfg(c), diag(Rng::for_run(c.seed, 0x5724).split(0xD1A6)) {}

    // Returns true and sets `reason` when a stop rule fires at iteration k.
    bool fires(const FunctionOracle& f, const Vec& x, double fx, std::uint64_t k,
               StopReason& reason, double& residual_out) {
        residual_out = std::numeric_limits<double>::quiet_NaN();
        if (cfg.target_f && fx <= *cfg.target_f) {
            reason = StopReason::target_value;
            return true;
        }
        if (fx < best_f - cfg.stall.tol) {
            best_f = fx;
            since_best = 0;
        } else if (cfg.stall.window > 0 && ++since_best >= cfg.stall.window) {
            reason = StopReason::stalled;
            return true;
        }
        if (cfg.residual_stop && cfg.residual_stop->every > 0 &&
            (k + 1) % cfg.residual_stop->every == 0) {
            residual_out = stationarity_residual(f, x, cfg.residual_stop->delta,
                                                 cfg.residual_stop->samples, diag);
            if (residual_out <= cfg.residual_stop->eps) {
                reason = StopReason::residual_below;
                return true;
            }
        }
        return false;
    }
};

}  // namespace

RunTrace ggd_solve(const DetProblem& problem, const SolverConfig& cfg, const GgdOptions& opts) {
    enforce_schedule(cfg.schedule, TheoremTag::ggd, cfg.validation);
    std::ostringstream extra;
    extra << "mode=" << int(opts.mode);
    RunTrace trace(cfg.seed, snapshot("ggd", cfg, extra.str()));

    Mat projector;
    Vec x = problem.x0;
    if (opts.mode == ConstraintMode::equality_projected) {
        projector = equality_projector(problem.N);
        x = FeasibleSet::equality_manifold(problem.N, problem.b).project(x);
    }

    StopWatcher watcher(cfg);
    double scale_mult = 1.0;
    StopReason reason = StopReason::max_iter;
    double fx = problem.f.checked_value(x);

    for (std::uint64_t k = 0; k < cfg.max_iter; ++k) {
        Selection sel = select_gradient(problem, opts.mode, x, &projector);
        maybe_normalize(sel.g, cfg.normalize);
        double rho = scale_mult * cfg.schedule.rho(k);
        axpy(-rho, sel.g, x);
        fx = problem.f.checked_value(x);

        double level = opts.mode == ConstraintMode::none ? fx : sel.h_violation;
        bool blew_up = norm2(x) > cfg.divergence_bound;
        if (blew_up || (cfg.return_to_start.enabled && level > cfg.return_to_start.level_d)) {
            if (!cfg.return_to_start.enabled ||
                trace.return_to_start_count >= cfg.return_to_start.max_returns) {
                reason = StopReason::diverged;
                trace.append(make_row(k, fx, std::numeric_limits<double>::quiet_NaN(), sel.h_violation,
                              rho, x));
                break;
            }
            ++trace.return_to_start_count;
            scale_mult *= cfg.return_to_start.shrink;
            x = problem.x0;
            if (opts.mode == ConstraintMode::equality_projected)
                x = FeasibleSet::equality_manifold(problem.N, problem.b).project(x);
            fx = problem.f.checked_value(x);
            continue;
        }

        double residual;
        bool stop = watcher.fires(problem.f, x, fx, k, reason, residual);
        if (cfg.log_every > 0 && (k % cfg.log_every == 0 || stop))
            trace.append(make_row(k, fx, residual, sel.h_violation, rho, x));
        if (stop) break;
    }
    trace.finish(reason, x, fx);
    return trace;
}

RelaxResult relaxation_solve(const FunctionOracle& f, const Vec& x0, RelaxVariant variant,
                             DirectionRuleKind rule, const RelaxParams& prm, std::uint64_t seed) {
    if (!(prm.alpha > 0 && prm.alpha < 1 && prm.beta > 0 && prm.beta < 1 && prm.theta > 0 &&
          prm.theta < 1))
        throw std::invalid_argument("relaxation_solve: alpha, beta, theta must lie in (0,1)");
    if (!(prm.eps > 0 && prm.delta > 0 && prm.Lambda >= prm.eps && prm.Delta >= prm.delta))
        throw std::invalid_argument("relaxation_solve: need eps,delta > 0, Lambda >= eps, Delta >= delta");
    if (variant == RelaxVariant::A3 && rule != DirectionRuleKind::L2 &&
        rule != DirectionRuleKind::L3)
        throw std::invalid_argument("relaxation_solve: A3 requires rule L2 or L3");

    RelaxResult res;
    OracleCounter counter;
    FunctionOracle fc = counter.wrap(f);
    std::ostringstream cfg;
    cfg << "solver=relaxation;variant=" << int(variant) << ";rule=" << int(rule)
        << ";eps=" << prm.eps << ";delta=" << prm.delta;
    res.trace = RunTrace(seed, cfg.str());

    Vec x = x0;
    double fx = fc.checked_value(x);
    auto calls = [&] { return *counter.values + *counter.gradients; };
    const bool normalize_inputs = variant == RelaxVariant::A2;

    std::uint64_t k = 0;
    bool budget_hit = false;
    while (!budget_hit) {
        // step 1: trial accuracy for this outer iteration
        double eps_i = prm.Lambda, delta_i = prm.Delta;
        bool descent_found = false;
        while (!descent_found && !budget_hit) {
            // step 2: fresh direction accumulation at radius delta_i
            DirectionRule dir(rule);
            Vec l0 = fc.checked_gradient(x);
            if (norm2(l0) == 0.0) l0 = unit(x.size(), 0);
            Vec y = x;
            axpy(-delta_i / norm2(l0), l0, y);
            Vec g = fc.checked_gradient(y);
            Vec g_for_rule = g;
            maybe_normalize(g_for_rule, normalize_inputs);

            for (;;) {  // loop over j
                if (calls() > prm.max_oracle_calls) {
                    budget_hit = true;
                    break;
                }
                // step 3
                const Vec& l = dir.update(g_for_rule);
                double ln = norm2(l);
                // step 4: stationarity certificate
                if (ln <= prm.eps && delta_i <= prm.delta) {
                    res.certified = true;
                    res.final_eps = eps_i;
                    res.final_delta = delta_i;
                    res.trace.oracle_values = *counter.values;
                    res.trace.oracle_gradients = *counter.gradients;
                    res.oracle_calls = calls();
                    res.trace.finish(StopReason::residual_below, x, fx);
                    res.trace.append(make_row(k, fx, ln, 0.0, delta_i, x));
                    return res;
                }
                // step 5: direction small at this scale -> sharpen both radii
                if (ln <= eps_i) {
                    eps_i = std::max(prm.alpha * eps_i, 0.0);
                    delta_i = prm.beta * delta_i;
                    break;  // back to step 2
                }
                // step 6: probe along l
                y = x;
                axpy(-delta_i / ln, l, y);
                g = fc.checked_gradient(y);
                g_for_rule = g;
                maybe_normalize(g_for_rule, normalize_inputs);
                // step 7: not yet an ascent certificate -> refine direction
                double ip = variant == RelaxVariant::A3 ? dot(g, l) : dot(g_for_rule, l);
                double bound = variant == RelaxVariant::A3 ? 0.5 * ln * ln
                                                           : 0.5 * prm.theta * eps_i * eps_i;
                if (ip < bound) continue;
                // step 8: descent test on f
                double fy = fc.checked_value(y);
                double needed;
                switch (variant) {
                    case RelaxVariant::A1:
                        needed = fx - prm.theta * delta_i * eps_i * eps_i / (4.0 * ln);
                        break;
                    case RelaxVariant::A2:
                        needed = fx - prm.theta * delta_i * eps_i * eps_i * norm2(g) / (4.0 * ln);
                        break;
                    case RelaxVariant::A3: needed = fx - delta_i * ln / 4.0; break;
                }
                if (fy > needed) {
                    ++res.step8_events;
                    delta_i = prm.beta * delta_i;
                    break;  // back to step 2, eps_i unchanged
                }
                // step 9: accept
                x = y;
                fx = fy;
                res.trace.append(make_row(k, fx, ln, 0.0, delta_i, x));
                ++k;
                descent_found = true;
                break;
            }
        }
    }
    res.final_eps = prm.Lambda;
    res.final_delta = prm.Delta;
    res.trace.oracle_values = *counter.values;
    res.trace.oracle_gradients = *counter.gradients;
    res.oracle_calls = calls();
    res.trace.finish(StopReason::max_iter, x, fx);  // budget exhausted, reported not silent
    return res;
}

RunTrace averaged_gradient_solve(const DetProblem& problem, const AveragedPolicy& policy,
                                 const SolverConfig& cfg, ConstraintMode mode) {
    if (mode != ConstraintMode::none && mode != ConstraintMode::single_h)
        throw std::invalid_argument("averaged_gradient_solve: mode must be none or single_h");
    if (policy.kind == AveragedPolicyKind::gully && policy.lambda >= 1.0 &&
        policy.recovery_every == 0)
        throw std::invalid_argument("averaged_gradient_solve: gully needs lambda < 1 or recovery");
    if (policy.kind == AveragedPolicyKind::heavy_ball && cfg.validation != ValidationMode::off) {
        // momentum admissibility: rho_k / gamma_k -> 0
        bool ok = cfg.schedule.rho_exp > policy.gamma_exp;
        if (!ok && cfg.validation == ValidationMode::strict)
            throw ScheduleError("heavy ball requires rho_k/gamma_k -> 0 (rho_exp > gamma_exp)");
    }

    std::ostringstream extra;
    extra << "policy=" << int(policy.kind);
    RunTrace trace(cfg.seed, snapshot("averaged", cfg, extra.str()));

    Vec x = problem.x0;
    double fx = problem.f.checked_value(x);
    StopWatcher watcher(cfg);
    StopReason reason = StopReason::max_iter;
    double scale_mult = 1.0;

    // averaged policy state
    DirectionRule dir(policy.avg_rule);
    AdaptiveStep r2(AdaptiveStepRule::R2, policy.M0, policy.theta0);
    AdaptiveStep r4(AdaptiveStepRule::R4, policy.M0, policy.theta0);
    double window_rho_sum = 0.0;
    std::uint64_t window_start = 0;

    // heavy-ball / gully state
    Vec momentum;  // P^{k-1}
    Vec x_prev, g_prev;
    double rho_prev = 0.0;
    bool have_prev = false;

    auto restart_memory = [&](std::uint64_t k) {
        dir.restart();
        window_rho_sum = 0.0;
        window_start = k;
        momentum.clear();
        have_prev = false;
    };

    for (std::uint64_t k = 0; k < cfg.max_iter; ++k) {
        Selection sel = select_gradient(problem, mode, x, nullptr);
        Vec g = sel.g;
        maybe_normalize(g, cfg.normalize);

        double rho = scale_mult * cfg.schedule.rho(k);
        Vec step_dir;
        switch (policy.kind) {
            case AveragedPolicyKind::averaged: {
                std::uint64_t wlen = k - window_start + 1;
                switch (policy.step_rule) {
                    case AveragedPolicy::StepRule::R1: break;  // programmed rho
                    case AveragedPolicy::StepRule::R2:
                        rho = scale_mult * r2.step_r2(k, g, wlen);
                        break;
                    case AveragedPolicy::StepRule::R4:
                        rho = scale_mult * r4.step_r4(k, x, rho_prev, wlen);
                        break;
                }
                bool restart_now;
                if (policy.step_rule == AveragedPolicy::StepRule::R1) {
                    // programmed steps carry no shrinking level, so the window
                    // is bounded by count and its travel vanishes with rho_k
                    restart_now = k - window_start >= policy.window_cap;
                } else {
                    double budget = policy.step_rule == AveragedPolicy::StepRule::R4
                                        ? r4.level_scale()
                                        : r2.level_scale();
                    restart_now = window_rho_sum + rho > budget;
                }
                if (restart_now) {
                    dir.restart();
                    window_rho_sum = 0.0;
                    window_start = k;
                }
                window_rho_sum += rho;
                step_dir = dir.update(g);
                if (policy.nu_eps > 0.0) {
                    double nu = 1.0 / (norm2(step_dir) + policy.nu_eps);
                    step_dir = scaled(step_dir, nu);
                }
                break;
            }
            case AveragedPolicyKind::heavy_ball: {
                double gamma = std::min(1.0, policy.gamma_c * std::pow(double(k) + 1.0,
                                                                       -policy.gamma_exp));
                if (momentum.empty()) {
                    momentum = g;
                } else {
                    scale(momentum, 1.0 - gamma);
                    axpy(gamma, g, momentum);
                }
                step_dir = momentum;
                break;
            }
            case AveragedPolicyKind::gully:
                break;  // handled below; the update mixes three terms
        }

        if (policy.kind == AveragedPolicyKind::gully) {
            double lambda = policy.lambda;
            if (policy.recovery_every > 0 && k % policy.recovery_every == 0) lambda = 0.0;
            // single-sequence form: a gradient step plus an inertial term along
            // the latest displacement, corrected by the previous gradient
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
            axpy(-rho, step_dir, x);
        }
        rho_prev = rho;
        fx = problem.f.checked_value(x);

        double level = mode == ConstraintMode::none ? fx : sel.h_violation;
        bool blew_up = norm2(x) > cfg.divergence_bound;
        if (blew_up || (cfg.return_to_start.enabled && level > cfg.return_to_start.level_d)) {
            if (!cfg.return_to_start.enabled ||
                trace.return_to_start_count >= cfg.return_to_start.max_returns) {
                reason = StopReason::diverged;
                trace.append(make_row(k, fx, std::numeric_limits<double>::quiet_NaN(), sel.h_violation,
                              rho, x));
                break;
            }
            ++trace.return_to_start_count;
            scale_mult *= cfg.return_to_start.shrink;
            x = problem.x0;
            fx = problem.f.checked_value(x);
            restart_memory(k + 1);
            continue;
        }

        double residual;
        bool stop = watcher.fires(problem.f, x, fx, k, reason, residual);
        if (cfg.log_every > 0 && (k % cfg.log_every == 0 || stop))
            trace.append(make_row(k, fx, residual, sel.h_violation, rho, x));
        if (stop) break;
    }
    trace.finish(reason, x, fx);
    return trace;
}

}  // namespace nsopt
