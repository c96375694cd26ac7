#pragma once

#include "nsopt/feasible_set.hpp"
#include "nsopt/smoothing.hpp"
#include "nsopt/solver_config.hpp"

namespace nsopt {

struct FdProblem {
    FunctionOracle f;
    std::optional<FeasibleSet> set;  // projected when present
    Vec x0;
};

struct FdOptions {
    FdMode mode = FdMode::central;
    std::size_t random_p = 1;
    bool normalize_random = true;
    std::uint64_t averaging_window = 1;  // M; 1 recovers the single-estimate step
};

// Gradient-free descent on smoothed finite differences, optionally averaging
// the last estimates within an iterate window of size <= M.
RunTrace fd_solve(const FdProblem& problem, const FdOptions& opts, const SolverConfig& cfg);

// min max_i f_i over X; the finite difference is taken on the active maximum
// component (lowest index on ties).
RunTrace fd_minimax_solve(const std::vector<FunctionOracle>& components, const FeasibleSet& X,
                          const Vec& x0, const FdOptions& opts, const SolverConfig& cfg);

// Nonsmooth penalty descent for f0 s.t. f_i <= 0 over X; each penalty weight
// activates exactly when its constraint is violated.
RunTrace penalty_fd_solve(const FunctionOracle& f0, const std::vector<FunctionOracle>& fi,
                          const Vec& penalty_r, const FeasibleSet& X, const Vec& x0,
                          const FdOptions& opts, const SolverConfig& cfg);

struct AnalyticPenaltyOptions {
    FdMode mode = FdMode::central;
    double eps_div = 1e-8;  // regularity proxy: ||z_h|| must exceed this when infeasible
};

struct AnalyticPenaltyResult {
    RunTrace trace;
    double final_multiplier = 0.0;  // u_k at exit
};

struct PenaltyDirection {
    Vec d;
    double u = 0.0;
};

// d = -z_f - u z_h with u = max{0, (h - <z_f, z_h>) / ||z_h||^2} when the
// constraint estimate is active (h >= 0), else d = -z_f.
inline PenaltyDirection analytic_penalty_direction(const Vec& z_f, const Vec& z_h, double h,
                                                   double eps_div = 1e-8) {
    PenaltyDirection out;
    out.d = scaled(z_f, -1.0);
    if (h < 0.0) return out;
    double zh_sq = norm2_sq(z_h);
    if (zh_sq <= eps_div * eps_div)
        throw OracleError("analytic penalty: regularity violated (||z_h|| ~ 0 while infeasible)");
    out.u = std::max(0.0, (h - dot(z_f, z_h)) / zh_sq);
    axpy(-out.u, z_h, out.d);
    return out;
}

// Closed-form direction d = -z_f - u z_h with the analytically computed
// penalty coefficient u; both estimate averagers refresh every step.
AnalyticPenaltyResult analytic_penalty_solve(const FunctionOracle& f, const FunctionOracle& h,
                                             const Vec& x0, const AnalyticPenaltyOptions& opts,
                                             const SolverConfig& cfg);

struct SaddleResult {
    RunTrace trace;
    Vec x_hat;  // Cesaro primal average
    Vec u_hat;  // Cesaro dual average
};

// Primal-dual steps with finite-difference primal estimates and exact dual
// gradients; outputs are the step-weighted averages.
SaddleResult arrow_hurwicz_solve(const FunctionOracle& f0, const std::vector<FunctionOracle>& fi,
                                 const FeasibleSet& X, const FeasibleSet& U, const Vec& x0,
                                 const FdOptions& opts, const SolverConfig& cfg);

// ---------------------------------------------------------------------------
// 1-D global minimization by a growing max-of-lower-bounds envelope.

enum class EnvelopeMode { cone, paraboloid };

struct GlobalOptions {
    EnvelopeMode mode = EnvelopeMode::cone;
    double eps_gap = 1e-3;
    std::uint64_t max_evals = 1000;
};

struct GlobalConstraint {
    FunctionOracle h;  // feasible iff h(x) <= 0
    double lipschitz = 1.0;
};

struct GlobalResult {
    double x_best = 0.0;
    double f_best = 0.0;
    double gap = std::numeric_limits<double>::infinity();  // certified accuracy bound
    std::uint64_t evals = 0;
    bool infeasible = false;  // constrained subproblem became empty
    std::vector<std::pair<double, double>> points;  // evaluated (x, f)
};

struct Envelope1D;  // audit access for tests and CSV export

GlobalResult piyavskii_solve(const FunctionOracle& f, double lo, double hi, double lipschitz,
                             const GlobalOptions& opts,
                             const std::optional<GlobalConstraint>& constraint = std::nullopt,
                             std::vector<std::pair<double, double>>* envelope_csv = nullptr);

// Pointwise value of the envelope built from the returned sample set; exposed
// so audits can check phi <= f independently of the solver loop.
double envelope_value(const std::vector<std::pair<double, double>>& points, double lipschitz,
                      EnvelopeMode mode, const std::vector<double>& slopes, double x);

}  // namespace nsopt
