#pragma once

#include "nsopt/feasible_set.hpp"
#include "nsopt/smoothing.hpp"
#include "nsopt/solver_config.hpp"

namespace nsopt {

struct StoProblem {
    StochasticOracle F;               // F(x) = E f(x, theta)
    std::optional<FunctionOracle> h;  // deterministic constraint h(x) <= 0
    std::optional<FeasibleSet> set;   // projection geometry when present
    Vec x0;
};

// How a stochastic solver turns oracle samples into a descent estimate.
struct StoEstimator {
    bool quasigradient = false;  // g(x~, theta) at a random cube point instead of FD quotients
    FdMode mode = FdMode::central;
    std::size_t random_p = 1;
    bool normalize_random = true;

    Vec estimate(const StochasticOracle& o, const Vec& x, double alpha, double delta,
                 Rng& rng) const;
    // Deterministic twin used by the noise-free ancestors; consumes the rng
    // stream identically to the call above on a degenerate oracle.
    Vec estimate(const FunctionOracle& o, const Vec& x, double alpha, double delta,
                 Rng& rng) const;
};

enum class SqgPolicyKind { plain, averaged, heavy_ball, gully };
enum class SqgNormalizer { none, prev_dir };  // H_r = 1 or ||P^{r-1}|| + nu

struct SqgPolicy {
    SqgPolicyKind kind = SqgPolicyKind::plain;
    SqgNormalizer normalizer = SqgNormalizer::none;
    double nu = 1e-6;          // normalizer floor
    double window_beta = 0.3;  // averaged window r_k = k - min(k, ceil(k^beta))
    double gamma_c = 0.5, gamma_exp = 0.0;  // heavy ball gamma_k
    double lambda = 0.5;                    // gully step multiplier, < 1
    std::uint64_t recovery_every = 0;       // gully recovery cadence; 0 = never
    bool iterate_avg = false;               // Cesaro average of iterates as aux output
};

// Stochastic quasi-gradient family: one fresh theta per gradient call, the
// deterministic h drives the feasibility switch.
RunTrace sqg_solve(const StoProblem& problem, const SqgPolicy& policy, const SolverConfig& cfg);

// Projected gradient-free stochastic approximation; the estimator mode picks
// which finite-difference generalization is used.
RunTrace kw_solve(const StoProblem& problem, const StoEstimator& est, const SolverConfig& cfg);

struct GameProblem {
    std::size_t dim = 0;
    std::function<Theta(Rng&)> draw_theta;
    std::function<double(const Vec& x, const Vec& y, const Theta&)> payoff;
    std::function<Vec(const Vec& x, const Theta&)> best_response;  // exact inner argmax
    FeasibleSet X = FeasibleSet::whole_space(0);
    Vec x0;
};

// Minimax expected-loss play: FD step on x -> f(x, y(x_k, theta_k), theta_k).
RunTrace game_solve(const GameProblem& problem, const StoEstimator& est, const SolverConfig& cfg);

enum class CgVariant { smooth, lipschitz };

// Projection-free method: the averager feeds the linear-minimization
// subproblem and the iterate moves along the segment to its solution.
RunTrace sto_conditional_gradient_solve(const StoProblem& problem, const FeasibleSet& X,
                                        CgVariant variant, const StoEstimator& est,
                                        const SolverConfig& cfg);

// Deterministic ancestors: the same recursions driven by the deterministic
// estimator. A noise-free stochastic oracle replays these bit for bit.
RunTrace conditional_gradient_solve(const FunctionOracle& f, const FeasibleSet& X, const Vec& x0,
                                    const StoEstimator& est, const SolverConfig& cfg);
RunTrace reduced_gradient_solve(const FunctionOracle& f, const Mat& A, const Vec& b,
                                const Vec& x0, const StoEstimator& est, const SolverConfig& cfg);
RunTrace feasible_directions_solve(const FunctionOracle& f,
                                   const std::vector<FunctionOracle>& constraints, const Vec& x0,
                                   const StoEstimator& est, const SolverConfig& cfg);

struct ReducedGradientStep {
    std::vector<std::size_t> basis;
    Vec reduced_gradient;  // r_N over nonbasic indices, in index order
    Vec direction;
    MaxStep lambda = MaxStep::infinite();
};

// One deterministic reduced-gradient direction computation (basis = largest
// components, ties to the lowest index). Exposed for the worked-example test.
ReducedGradientStep reduced_gradient_direction(const Mat& A, const Vec& x, const Vec& g);

RunTrace sto_reduced_gradient_solve(const StoProblem& problem, const Mat& A, const Vec& b,
                                    const StoEstimator& est, const SolverConfig& cfg);

RunTrace sto_feasible_directions_solve(const StoProblem& problem,
                                       const std::vector<FunctionOracle>& constraints,
                                       const StoEstimator& est, const SolverConfig& cfg);

// Constrained Lipschitz minimization with the analytic penalty coefficient;
// z_F comes from the stochastic averager, z_h from the deterministic one.
RunTrace sto_constrained_lipschitz_solve(const StoProblem& problem, const FunctionOracle& h,
                                         const StoEstimator& est, const SolverConfig& cfg,
                                         double eps_div = 1e-8);

struct StoSaddleProblem {
    std::size_t dim = 0;
    std::function<Theta(Rng&)> draw_theta;
    // f[0] is the objective, f[1..m] the expectation constraints <= 0.
    std::vector<std::function<double(const Vec&, const Theta&)>> f;
    FeasibleSet X = FeasibleSet::whole_space(0);
    FeasibleSet U = FeasibleSet::whole_space(0);
    Vec x0;
};

struct StoSaddleResult {
    RunTrace trace;
    Vec x_hat;
    Vec u_hat;
};

// Sampled primal-dual steps, one theta per iteration shared by every
// component estimate; outputs are Cesaro averages.
StoSaddleResult sto_arrow_hurwicz_solve(const StoSaddleProblem& problem, FdMode mode,
                                        const SolverConfig& cfg);

enum class AvgDirVariant { smooth, fd, unconstrained_lipschitz };

// Averaged-direction methods: the averager state drives a projected (or free)
// step; both are refreshed once per iteration.
RunTrace averaged_direction_solve(const StoProblem& problem, AvgDirVariant variant,
                                  const StoEstimator& est, const SolverConfig& cfg);

}  // namespace nsopt
