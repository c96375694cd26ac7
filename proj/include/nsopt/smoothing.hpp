#pragma once

#include "nsopt/oracle.hpp"

namespace nsopt {

enum class FdMode { central, forward, random_dirs };

struct EstimatorConfig {
    FdMode mode = FdMode::central;
    double alpha = 0.1;          // smoothing radius
    double delta = 0.0;          // shift for forward/random modes; 0 -> alpha^2
    std::size_t p = 1;           // direction count, random mode
    bool normalize_random = true;  // rescale random-dirs estimate to target grad f(x,alpha)

    double shift() const { return delta > 0.0 ? delta : alpha * alpha; }

    void validate() const {
        if (alpha <= 0.0) throw std::invalid_argument("EstimatorConfig: alpha must be > 0");
        if (mode != FdMode::central && shift() <= 0.0)
            throw std::invalid_argument("EstimatorConfig: shift must be > 0");
        if (mode == FdMode::random_dirs && p < 1)
            throw std::invalid_argument("EstimatorConfig: p must be >= 1");
    }
};

struct SmoothedValue {
    double estimate = 0.0;
    double stderr_ = 0.0;
};

// Monte Carlo estimate of the cube-averaged value f(x, alpha) with its sample
// standard error.
template <typename ValueFn>
SmoothedValue smoothed_value_fn(ValueFn&& f, const Vec& x, double alpha, std::size_t n_samples,
                                Rng& rng) {
    if (alpha <= 0.0) throw std::invalid_argument("smoothed_value: alpha must be > 0");
    if (n_samples < 2) throw std::invalid_argument("smoothed_value: need at least 2 samples");
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        double v = f(rng.uniform_cube(x, alpha));
        double d = v - mean;
        mean += d / double(i + 1);
        m2 += d * (v - mean);
    }
    double var = m2 / double(n_samples - 1);
    return {mean, std::sqrt(std::max(var, 0.0) / double(n_samples))};
}

inline SmoothedValue smoothed_value(const FunctionOracle& oracle, const Vec& x, double alpha,
                                    std::size_t n_samples, Rng& rng) {
    return smoothed_value_fn([&](const Vec& y) { return oracle.checked_value(y); }, x, alpha,
                             n_samples, rng);
}

inline SmoothedValue smoothed_value(const StochasticOracle& oracle, const Vec& x, double alpha,
                                    std::size_t n_samples, Rng& rng) {
    return smoothed_value_fn(
        [&](const Vec& y) {
            Theta th = oracle.draw_theta(rng);
            return oracle.checked_value(y, th);
        },
        x, alpha, n_samples, rng);
}

namespace detail {

// Core randomized finite-difference estimate over a plain value callback.
// One random base point per estimate; each coordinate quotient perturbs its
// own coordinate of the unperturbed center.
template <typename ValueFn>
Vec fd_estimate_fn(ValueFn&& f, const Vec& x, const EstimatorConfig& cfg, Rng& rng) {
    cfg.validate();
    const std::size_t n = x.size();
    Vec h = zeros(n);
    switch (cfg.mode) {
        case FdMode::central: {
            Vec base = rng.uniform_cube(x, cfg.alpha);
            for (std::size_t i = 0; i < n; ++i) {
                Vec hi = base, lo = base;
                hi[i] = x[i] + cfg.alpha;
                lo[i] = x[i] - cfg.alpha;
                h[i] = (f(hi) - f(lo)) / (2.0 * cfg.alpha);
            }
            break;
        }
        case FdMode::forward: {
            Vec base = rng.uniform_cube(x, cfg.alpha);
            const double d = cfg.shift();
            double f0 = f(base);
            for (std::size_t i = 0; i < n; ++i) {
                Vec hi = base;
                hi[i] += d;
                h[i] = (f(hi) - f0) / d;
            }
            break;
        }
        case FdMode::random_dirs: {
            Vec base = rng.uniform_cube(x, cfg.alpha);
            const double d = cfg.shift();
            double f0 = f(base);
            for (std::size_t j = 0; j < cfg.p; ++j) {
                Vec mu(n);
                for (std::size_t i = 0; i < n; ++i) mu[i] = rng.uniform(-1.0, 1.0);
                Vec y = base;
                axpy(d, mu, y);
                axpy((f(y) - f0) / d, mu, h);
            }
            // E[mu mu^T] = I/3 for uniform [-1,1] coordinates, so the raw sum
                // targets (p/3) grad f(x,alpha); 3/p removes the scale
                if (cfg.normalize_random) scale(h, 3.0 / double(cfg.p));
            break;
        }
    }
    if (!all_finite(h)) throw OracleError("fd_estimate: non-finite estimate");
    return h;
}

}  // namespace detail

inline Vec fd_estimate(const FunctionOracle& oracle, const Vec& x, const EstimatorConfig& cfg,
                       Rng& rng) {
    check_dim(x, oracle.dim, "fd_estimate");
    return detail::fd_estimate_fn([&](const Vec& y) { return oracle.checked_value(y); }, x, cfg,
                                  rng);
}

// Stochastic variant: one theta per estimate, reused across every evaluation
// inside it.
inline Vec fd_estimate(const StochasticOracle& oracle, const Vec& x, const EstimatorConfig& cfg,
                       Rng& rng) {
    check_dim(x, oracle.dim, "fd_estimate");
    Theta th = oracle.draw_theta(rng);
    return detail::fd_estimate_fn([&](const Vec& y) { return oracle.checked_value(y, th); }, x,
                                  cfg, rng);
}

// Streaming average z <- z + a_k (sample - z). With a_k = 1/(k+1) from z = 0
// the state is exactly the running arithmetic mean.
class Averager {
  public:
    Averager() = default;
    explicit Averager(std::size_t dim) : z_(dim, 0.0) {}
    explicit Averager(Vec init) : z_(std::move(init)) {}

    void update(const Vec& sample, double a_k) {
        if (!(a_k > 0.0 && a_k <= 1.0))
            throw std::invalid_argument("Averager: need 0 < a_k <= 1");
        if (z_.empty()) z_ = zeros(sample.size());
        check_dim(sample, z_.size(), "Averager::update");
        for (std::size_t i = 0; i < z_.size(); ++i) z_[i] += a_k * (sample[i] - z_[i]);
        ++k_;
    }

    void reset(const Vec& to) {
        z_ = to;
        k_ = 0;
    }

    const Vec& state() const { return z_; }
    std::size_t count() const { return k_; }

  private:
    Vec z_;
    std::size_t k_ = 0;
};

class ScalarAverager {
  public:
    void update(double sample, double a_k) {
        if (!(a_k > 0.0 && a_k <= 1.0))
            throw std::invalid_argument("ScalarAverager: need 0 < a_k <= 1");
        z_ += a_k * (sample - z_);
        ++k_;
    }
    double state() const { return z_; }
    std::size_t count() const { return k_; }

  private:
    double z_ = 0.0;
    std::size_t k_ = 0;
};

}  // namespace nsopt
