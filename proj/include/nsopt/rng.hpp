#pragma once

#include <cmath>
#include <cstdint>

#include "nsopt/vector_ops.hpp"

namespace nsopt {

// Counter-based splittable generator. The state is (key, counter); output k of
// stream `key` is a stateless hash of key + k, so copies replay identically and
// independent streams are derived by hashing, never by sharing state.
class Rng {
  public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    // Stream for run `run_index` of a master seed.
    static Rng for_run(std::uint64_t master_seed, std::uint64_t run_index) {
        return Rng(mix(mix(master_seed + GOLDEN) ^ run_index));
    }

    // Derive an independent substream; does not advance this stream.
    Rng split(std::uint64_t stream) const { return Rng(mix(key_ ^ mix(stream + GOLDEN))); }

    std::uint64_t next_u64() { return mix(key_ + GOLDEN * ++ctr_); }

    // Uniform on [0,1).
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * next_double(); }

    // Uniform on the cube [x - alpha, x + alpha]^n.
    Vec uniform_cube(const Vec& x, double alpha) {
        Vec y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = uniform(x[i] - alpha, x[i] + alpha);
        return y;
    }

    Vec uniform_box(std::size_t n, double lo, double hi) {
        Vec y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = uniform(lo, hi);
        return y;
    }

    // Standard normal (Box-Muller; spare discarded so counter use is uniform).
    double normal() {
        double u1 = next_double(), u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Uniform in the closed Euclidean ball of radius `r` around `c`.
    Vec uniform_ball(const Vec& c, double r) {
        const std::size_t n = c.size();
        Vec d(n);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = normal();
            s += d[i] * d[i];
        }
        double nrm = std::sqrt(s);
        double radius = r * std::pow(next_double(), 1.0 / double(n));
        Vec y = c;
        if (nrm > 0.0) axpy(radius / nrm, d, y);
        return y;
    }

    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return ctr_; }

  private:
    static constexpr std::uint64_t GOLDEN = 0x9E3779B97F4A7C15ull;

    // SplitMix64 finalizer.
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

// Inverse standard normal CDF (Acklam's rational approximation, |rel err| < 1.2e-9).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > phigh) {
        q = std::sqrt(-2 * std::log(1 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730950488016887242097); }

}  // namespace nsopt
