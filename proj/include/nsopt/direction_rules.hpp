#pragma once

#include <cstdint>
#include <deque>
#include <limits>

#include "nsopt/min_norm_point.hpp"
#include "nsopt/vector_ops.hpp"

namespace nsopt {

enum class DirectionRuleKind { L1, L2, L3, L4, P2, P3 };

// Minimizer of ||(1-a) l + a g|| over a in [0,1], returned as (a, point).
inline std::pair<double, Vec> min_norm_on_segment(const Vec& l, const Vec& g) {
    Vec diff = sub(l, g);
    double denom = norm2_sq(diff);
    double a = denom > 0.0 ? std::clamp(dot(l, diff) / denom, 0.0, 1.0) : 0.0;
    Vec r = scaled(l, 1.0 - a);
    axpy(a, g, r);
    return {a, r};
}

// Trial-direction builders. Every rule keeps its output in the convex hull of
// the gradients seen since the last restart (condition Y1).
class DirectionRule {
  public:
    explicit DirectionRule(DirectionRuleKind kind, std::size_t l4_window = 8)
        : kind_(kind), l4_window_(l4_window) {}

    DirectionRuleKind kind() const { return kind_; }

    void restart() {
        history_.clear();
        weights_sum_ = 0.0;
        have_dir_ = false;
    }

    // Feed the next gradient; weight is the rho_r of rule L1 (ignored by the
    // other rules). Returns the new trial direction l^j.
    const Vec& update(const Vec& g_new, double weight = 1.0) {
        switch (kind_) {
            case DirectionRuleKind::L1: {
                if (!have_dir_) {
                    dir_ = g_new;
                    weights_sum_ = weight;
                    have_dir_ = true;
                } else {
                    weights_sum_ += weight;
                    double a = weight / weights_sum_;
                    for (std::size_t i = 0; i < dir_.size(); ++i)
                        dir_[i] += a * (g_new[i] - dir_[i]);
                }
                break;
            }
            case DirectionRuleKind::L2:
            case DirectionRuleKind::P2: {
                if (!have_dir_) {
                    dir_ = g_new;
                    have_dir_ = true;
                } else {
                    dir_ = min_norm_on_segment(dir_, g_new).second;
                }
                break;
            }
            case DirectionRuleKind::L3: {
                history_.push_back(g_new);
                dir_ = min_norm_point({history_.begin(), history_.end()}, 1e-10);
                have_dir_ = true;
                break;
            }
            case DirectionRuleKind::L4: {
                history_.push_back(g_new);
                while (history_.size() > l4_window_) history_.pop_front();
                std::vector<Vec> pts{history_.begin(), history_.end()};
                if (have_dir_) pts.push_back(dir_);
                dir_ = min_norm_point(pts, 1e-10);
                have_dir_ = true;
                break;
            }
            case DirectionRuleKind::P3: {
                ++count_;
                if (!have_dir_) {
                    dir_ = g_new;
                    have_dir_ = true;
                } else {
                    double a = 1.0 / double(count_);
                    for (std::size_t i = 0; i < dir_.size(); ++i)
                        dir_[i] += a * (g_new[i] - dir_[i]);
                }
                break;
            }
        }
        return dir_;
    }

    const Vec& direction() const { return dir_; }
    bool has_direction() const { return have_dir_; }

  private:
    DirectionRuleKind kind_;
    std::size_t l4_window_;
    Vec dir_;
    bool have_dir_ = false;
    double weights_sum_ = 0.0;
    std::deque<Vec> history_;
    std::size_t count_ = 0;
};

// Step-weighted running average of iterates, x_hat = sum rho_s x_s / sum rho_s,
// maintained incrementally.
class CesaroAverager {
  public:
    void update(const Vec& x_k, double rho_k) {
        if (rho_k <= 0.0) throw std::invalid_argument("CesaroAverager: rho_k must be > 0");
        if (hat_.empty()) hat_ = zeros(x_k.size());
        check_dim(x_k, hat_.size(), "CesaroAverager::update");
        weight_ += rho_k;
        double a = rho_k / weight_;
        for (std::size_t i = 0; i < hat_.size(); ++i) hat_[i] += a * (x_k[i] - hat_[i]);
    }

    const Vec& average() const { return hat_; }
    double total_weight() const { return weight_; }

  private:
    Vec hat_;
    double weight_ = 0.0;
};

enum class AdaptiveStepRule { R2, R4 };

// Stepwise adjustment rho_k = M_{t_k} u_k with geometric level sequences
// M_t = M0 2^{-t}, theta_t = theta0 2^{-t} and u_k = (k - r_k + 1)^{1/2}.
// R2 fires when the min-norm point of the gradients stored since the anchor
// drops below theta_t; R4 fires when the displacement-per-step ratio
// R_k = min_t ||x_k - x_t|| / sum rho does.
class AdaptiveStep {
  public:
    AdaptiveStep(AdaptiveStepRule rule, double M0, double theta0, std::size_t window_cap = 64)
        : rule_(rule), M0_(M0), theta0_(theta0), cap_(window_cap) {}

    double level_scale() const { return M0_ * std::pow(2.0, -double(level_)); }
    double threshold() const { return theta0_ * std::pow(2.0, -double(level_)); }
    std::size_t level() const { return level_; }

    // R2: feed the gradient observed at iteration k, get rho_k. The factor
    // u_k = sqrt(window_len) uses the caller's averaging window k - r_k + 1;
    // pass 0 to anchor u at the rule's own trigger index instead.
    double step_r2(std::uint64_t k, const Vec& g_k, std::uint64_t window_len = 0) {
        grads_.push_back(g_k);
        while (grads_.size() > cap_) grads_.pop_front();
        double dist = norm2(min_norm_point({grads_.begin(), grads_.end()}, 1e-10));
        if (dist < threshold()) {
            ++level_;
            anchor_ = k;
            grads_.clear();
            grads_.push_back(g_k);
        }
        return level_scale() * u(k, window_len);
    }

    // R4: feed the iterate and the rho spent reaching it.
    double step_r4(std::uint64_t k, const Vec& x_k, double rho_prev,
                   std::uint64_t window_len = 0) {
        if (!points_.empty()) rho_partials_.push_back(rho_partials_.back() + rho_prev);
        else rho_partials_.push_back(0.0);
        points_.push_back(x_k);
        while (points_.size() > cap_) {
            points_.pop_front();
            rho_partials_.pop_front();
        }
        if (points_.size() >= 2) {
            double ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
                double denom = rho_partials_.back() - rho_partials_[i];
                if (denom <= 0.0) continue;
                ratio = std::min(ratio, norm2(sub(points_.back(), points_[i])) / denom);
            }
            if (ratio < threshold()) {
                ++level_;
                anchor_ = k;
                Vec last = points_.back();
                points_.clear();
                rho_partials_.clear();
                points_.push_back(last);
                rho_partials_.push_back(0.0);
            }
        }
        return level_scale() * u(k, window_len);
    }

  private:
    double u(std::uint64_t k, std::uint64_t window_len) const {
        if (window_len > 0) return std::sqrt(double(window_len));
        return std::sqrt(double(k - anchor_ + 1));
    }

    AdaptiveStepRule rule_;
    double M0_, theta0_;
    std::size_t cap_;
    std::size_t level_ = 0;
    std::uint64_t anchor_ = 0;
    std::deque<Vec> grads_;
    std::deque<Vec> points_;
    std::deque<double> rho_partials_;
};

}  // namespace nsopt
