#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>

#include "nsopt/rng.hpp"
#include "nsopt/vector_ops.hpp"

namespace nsopt {

struct OracleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministic oracle: value and one pseudogradient selection g in G_f(x).
// Calls must be pure; repeated calls at the same point return identical results.
struct FunctionOracle {
    std::size_t dim = 0;
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> pseudogradient;
    std::optional<double> lipschitz_bound;  // on a compact box, when known

    double operator()(const Vec& x) const { return value(x); }

    double checked_value(const Vec& x) const {
        check_dim(x, dim, "FunctionOracle::value");
        double v = value(x);
        if (!std::isfinite(v)) throw OracleError("oracle returned non-finite value");
        return v;
    }

    Vec checked_gradient(const Vec& x) const {
        check_dim(x, dim, "FunctionOracle::pseudogradient");
        Vec g = pseudogradient(x);
        check_dim(g, dim, "FunctionOracle::pseudogradient result");
        if (!all_finite(g)) throw OracleError("oracle returned non-finite pseudogradient");
        return g;
    }
};

// A realization of the random parameter. Catalog problems only need a flat
// list of reals; an empty Theta denotes a degenerate (noise-free) oracle.
using Theta = std::vector<double>;

// Stochastic oracle: per-sample value f(x,theta) and a pseudogradient selection
// of G_f(x,theta). One theta is drawn per estimate and reused for every
// evaluation inside it, so the draw is explicit.
struct StochasticOracle {
    std::size_t dim = 0;
    std::function<Theta(Rng&)> draw_theta;
    std::function<double(const Vec&, const Theta&)> sample_value;
    std::function<Vec(const Vec&, const Theta&)> sample_gradient;
    std::optional<FunctionOracle> mean_oracle;  // F(x) = E f(x,theta) when closed form exists

    double checked_value(const Vec& x, const Theta& th) const {
        check_dim(x, dim, "StochasticOracle::sample_value");
        double v = sample_value(x, th);
        if (!std::isfinite(v)) throw OracleError("stochastic oracle returned non-finite value");
        return v;
    }

    Vec checked_gradient(const Vec& x, const Theta& th) const {
        check_dim(x, dim, "StochasticOracle::sample_gradient");
        Vec g = sample_gradient(x, th);
        check_dim(g, dim, "StochasticOracle::sample_gradient result");
        if (!all_finite(g)) throw OracleError("stochastic oracle returned non-finite gradient");
        return g;
    }
};

// Noise-free wrap: theta is empty and consumes no rng state, so a stochastic
// solver driven by it replays the matching deterministic method exactly.
inline StochasticOracle degenerate_oracle(const FunctionOracle& f) {
    StochasticOracle s;
    s.dim = f.dim;
    s.draw_theta = [](Rng&) { return Theta{}; };
    s.sample_value = [f](const Vec& x, const Theta&) { return f.value(x); };
    s.sample_gradient = [f](const Vec& x, const Theta&) { return f.pseudogradient(x); };
    s.mean_oracle = f;
    return s;
}

// Counts value/gradient/theta calls; used by tests to audit the
// one-theta-per-estimate discipline and by the CLI for work accounting.
struct OracleCounter {
    std::shared_ptr<std::atomic<std::size_t>> values =
        std::make_shared<std::atomic<std::size_t>>(0);
    std::shared_ptr<std::atomic<std::size_t>> gradients =
        std::make_shared<std::atomic<std::size_t>>(0);
    std::shared_ptr<std::atomic<std::size_t>> thetas =
        std::make_shared<std::atomic<std::size_t>>(0);

    FunctionOracle wrap(const FunctionOracle& f) const {
        FunctionOracle w = f;
        auto nv = values;
        auto ng = gradients;
        w.value = [f, nv](const Vec& x) {
            ++*nv;
            return f.value(x);
        };
        w.pseudogradient = [f, ng](const Vec& x) {
            ++*ng;
            return f.pseudogradient(x);
        };
        return w;
    }

    StochasticOracle wrap(const StochasticOracle& s) const {
        StochasticOracle w = s;
        auto nv = values;
        auto ng = gradients;
        auto nt = thetas;
        w.draw_theta = [s, nt](Rng& rng) {
            ++*nt;
            return s.draw_theta(rng);
        };
        w.sample_value = [s, nv](const Vec& x, const Theta& th) {
            ++*nv;
            return s.sample_value(x, th);
        };
        w.sample_gradient = [s, ng](const Vec& x, const Theta& th) {
            ++*ng;
            return s.sample_gradient(x, th);
        };
        return w;
    }
};

}  // namespace nsopt
