#pragma once

#include "nsopt/calculus.hpp"
#include "nsopt/direction_rules.hpp"
#include "nsopt/feasible_set.hpp"
#include "nsopt/solver_config.hpp"

namespace nsopt {

enum class ConstraintMode { none, single_h, leading_list, equality_projected };

// Deterministic problem: objective plus whichever constraint block the mode
// selects.
struct DetProblem {
    FunctionOracle f;
    std::optional<FunctionOracle> h;  // single inequality h(x) <= 0
    // Importance-ordered levels (f_j, c_j), j = 1..m; the objective is always
    // minimized last with level -inf.
    std::vector<std::pair<FunctionOracle, double>> leading;
    Mat N;  // equality manifold N x = b
    Vec b;
    Vec x0;
};

struct GgdOptions {
    ConstraintMode mode = ConstraintMode::none;
};

// Generalized gradient descent x_{k+1} = x_k - rho_k g_k with g_k selected by
// the constraint mode.
RunTrace ggd_solve(const DetProblem& problem, const SolverConfig& cfg,
                   const GgdOptions& opts = {});

enum class RelaxVariant { A1, A2, A3 };

struct RelaxParams {
    double eps = 1e-3;
    double delta = 1e-3;
    double Lambda = 1.0;   // initial eps_0 (>= eps)
    double Delta = 1.0;    // initial delta_0 (>= delta)
    double alpha = 0.5;    // eps shrink at step 5
    double beta = 0.5;     // delta shrink
    double theta = 0.5;    // descent-test parameter in (0,1)
    std::uint64_t max_oracle_calls = 100000;
};

struct RelaxResult {
    RunTrace trace;
    bool certified = false;  // stopped at step 4 with ||l|| <= eps at radius <= delta
    double final_eps = 0.0;
    double final_delta = 0.0;
    std::uint64_t step8_events = 0;
    std::uint64_t oracle_calls = 0;
};

// Finite relaxation algorithm with trial directions built by an L-rule.
// Variant A2 feeds normalized gradients; A3 uses the stronger step-7/8 tests
// available for rules L2/L3.
RelaxResult relaxation_solve(const FunctionOracle& f, const Vec& x0, RelaxVariant variant,
                             DirectionRuleKind rule, const RelaxParams& params,
                             std::uint64_t seed = 0);

enum class AveragedPolicyKind { averaged, heavy_ball, gully };

struct AveragedPolicy {
    AveragedPolicyKind kind = AveragedPolicyKind::averaged;

    // averaged: direction from P2/P3 with a step rule. Of the adjustment
    // family R1-R5, the programmed rule R1, the hull-distance trigger R2 and
    // the full-window displacement-ratio trigger R4 are provided; R3 and R5
    // are reduced-memory variants of R4's ratio and are not implemented.
    DirectionRuleKind avg_rule = DirectionRuleKind::P3;
    enum class StepRule { R1, R2, R4 } step_rule = StepRule::R1;
    double M0 = 1.0;      // R2/R4 level scale and restart budget sum(rho) <= M_t
    double theta0 = 0.5;  // R2/R4 trigger threshold
    std::uint64_t window_cap = 16;  // R1 restart cadence: k - r_k < cap
    double nu_eps = 1e-8;  // normalizer nu_k = 1/(||P^k|| + nu_eps); <=0 turns it off

    // heavy_ball: gamma_k = gamma_c (k+1)^{-gamma_exp}
    double gamma_c = 0.1;
    double gamma_exp = 0.0;

    // gully: lambda_k = lambda constant in [0,1), recovery every K_rec steps
    double lambda = 0.5;
    std::uint64_t recovery_every = 0;  // 0 -> never
};

RunTrace averaged_gradient_solve(const DetProblem& problem, const AveragedPolicy& policy,
                                 const SolverConfig& cfg,
                                 ConstraintMode mode = ConstraintMode::none);

}  // namespace nsopt
