#pragma once

#include <string>

#include "nsopt/feasible_set.hpp"
#include "nsopt/oracle.hpp"

namespace nsopt {

// Demand distribution, inverse-CDF sampled so quantile solutions are exact.
struct DemandLaw {
    enum class Kind { uniform, discrete, truncnormal };
    Kind kind = Kind::uniform;
    double a = 0.0, b = 1.0;      // support bounds (uniform, truncnormal)
    double mu = 0.0, sigma = 1.0; // truncnormal base parameters
    Vec values, probs;            // discrete atoms

    static DemandLaw uniform(double a, double b);
    static DemandLaw discrete(Vec values, Vec probs);
    static DemandLaw truncnormal(double mu, double sigma, double a, double b);
    static DemandLaw parse(const std::string& text);  // e.g. "uniform(0,1)"
    std::string to_string() const;

    double quantile(double q) const;
    double sample(Rng& rng) const { return quantile(rng.next_double()); }
    double cdf(double t) const;
    double mean() const;
    double mean_below(double t) const;  // E[theta * 1{theta <= t}]

    // E max{alpha (x - theta), beta (theta - x)} and its derivative in x.
    double expected_loss(double x, double alpha, double beta) const;
    double expected_loss_grad(double x, double alpha, double beta) const;
};

struct KnownSolution {
    Vec x;
    double f = 0.0;
    std::string provenance;  // closed form / quantile / lp / grid
};

struct ProblemSpec {
    std::string name;
    std::size_t dim = 0;
    std::optional<FunctionOracle> objective;
    std::optional<FunctionOracle> constraint_h;          // single h(x) <= 0
    std::vector<FunctionOracle> constraint_list;         // smooth f_i <= 0
    std::vector<FunctionOracle> components;              // minimax pieces, when the problem is a max
    std::optional<StochasticOracle> stochastic;
    std::optional<FeasibleSet> set;
    std::optional<KnownSolution> known_solution;
    std::string brute_force_oracle;  // how to regenerate the solution independently
    std::optional<double> lipschitz;  // on the unit box around the solution
    Vec x0;
    Mat eq_A;  // reduced-gradient geometry Ax = b, when the problem carries one
    Vec eq_b;
};

// Deterministic catalog.
ProblemSpec make_abs_sum(std::size_t n);
ProblemSpec make_max_abs(std::size_t n);
ProblemSpec make_max_linear(std::size_t m, std::size_t n, std::uint64_t seed = 7);
ProblemSpec make_ravine(double kappa);
ProblemSpec make_circle_linear();  // min x1 s.t. ||x||^2 - 1 <= 0
ProblemSpec make_sin_sum();        // 1-d multiextremal test curve on [2.7, 7.5]
ProblemSpec make_resource_split();   // stochastic quadratic on the probability simplex (Ax=b)
ProblemSpec make_quantile_floor();   // min E(x-theta)^2 with the smooth floor constraint x >= 0.7

// Stochastic catalog.
ProblemSpec make_newsvendor(std::size_t products, Vec alpha, Vec beta,
                            std::vector<DemandLaw> laws, Mat interchange = {},
                            double capacity = std::numeric_limits<double>::infinity(),
                            Vec unit_volume = {});
ProblemSpec make_transport(std::size_t warehouses, std::size_t markets, Mat cost, Vec capacity,
                           std::vector<DemandLaw> laws, Vec alpha, Vec beta);
ProblemSpec make_crop_allocation(std::size_t crops, std::size_t plots, Mat mean_yield,
                                 Vec gamma, Vec plot_area);

// Name-with-args construction, e.g. "abs_sum(3)" or "ravine(100)"; the full
// typed constructors remain available for everything the string form cannot
// express.
ProblemSpec make_benchmark(const std::string& name_with_args);

std::vector<std::string> catalog_names();

}  // namespace nsopt
