#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nsopt/vector_ops.hpp"

namespace nsopt {

enum class StopReason { max_iter, target_value, residual_below, stalled, diverged };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::max_iter: return "max_iter";
        case StopReason::target_value: return "target_value";
        case StopReason::residual_below: return "residual_below";
        case StopReason::stalled: return "stalled";
        case StopReason::diverged: return "diverged";
    }
    return "?";
}

struct TraceRow {
    std::uint64_t k = 0;
    double f = 0.0;
    double residual = 0.0;     // NaN when not evaluated at this row
    double h_violation = 0.0;  // max(0, h(x)) or constraint violation measure
    double step = 0.0;         // rho_k actually applied
    double dir_norm = 0.0;     // norm of the applied direction, when a solver logs it
    double x_norm = 0.0;       // Euclidean norm of the iterate (its summary statistic)
};

inline TraceRow make_row(std::uint64_t k, double f, double residual, double h_violation,
                         double step, const Vec& x) {
    TraceRow r{k, f, residual, h_violation, step};
    r.x_norm = norm2(x);
    return r;
}

// Reproducibility unit of one solver run: seed, config snapshot, append-only
// history, stop reason. Replay with the same seed/config reproduces it bit
// for bit.
class RunTrace {
  public:
    RunTrace() = default;
    RunTrace(std::uint64_t seed, std::string config_snapshot)
        : seed_(seed), config_(std::move(config_snapshot)) {}

    void append(TraceRow row) { rows_.push_back(row); }

    void finish(StopReason reason, Vec final_x, double final_f) {
        stop_ = reason;
        final_x_ = std::move(final_x);
        final_f_ = final_f;
        finished_ = true;
    }

    std::uint64_t seed() const { return seed_; }
    const std::string& config_snapshot() const { return config_; }
    const std::vector<TraceRow>& rows() const { return rows_; }
    StopReason stop_reason() const { return stop_; }
    bool finished() const { return finished_; }
    const Vec& final_x() const { return final_x_; }
    double final_f() const { return final_f_; }

    // Auxiliary outputs some solvers attach (Cesaro averages, multipliers, ...).
    Vec aux_x;
    Vec aux_u;
    std::uint64_t oracle_values = 0;
    std::uint64_t oracle_gradients = 0;
    std::uint64_t theta_draws = 0;
    std::uint64_t return_to_start_count = 0;

    bool same_path(const RunTrace& other) const {
        if (rows_.size() != other.rows_.size()) return false;
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const TraceRow &a = rows_[i], &b = other.rows_[i];
            if (a.k != b.k || a.f != b.f || a.step != b.step) return false;
        }
        return final_x_ == other.final_x_;
    }

  private:
    std::uint64_t seed_ = 0;
    std::string config_;
    std::vector<TraceRow> rows_;
    StopReason stop_ = StopReason::max_iter;
    bool finished_ = false;
    Vec final_x_;
    double final_f_ = 0.0;
};

}  // namespace nsopt
