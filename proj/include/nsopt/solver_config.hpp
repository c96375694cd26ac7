#pragma once

#include <optional>

#include "nsopt/run_trace.hpp"
#include "nsopt/schedule.hpp"

namespace nsopt {

struct ScheduleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ValidationMode { strict, warn, off };

// Stop when the sampled stationarity residual at radius delta falls to eps.
struct ResidualStopRule {
    double eps = 1e-3;
    double delta = 1e-3;
    std::size_t samples = 64;
    std::uint64_t every = 1000;  // evaluation cadence (the check is costly)
};

// Stop when the best f seen stops improving over a window.
struct StallStopRule {
    std::uint64_t window = 0;  // 0 disables
    double tol = 1e-12;
};

// Restart from x0 with shrunk step scale whenever the monitored level is
// exceeded; the books' boundedness mechanism.
struct ReturnToStart {
    bool enabled = false;
    double level_d = std::numeric_limits<double>::infinity();
    double shrink = 0.5;  // multiplies the step scale on each return
    std::size_t max_returns = 64;
};

struct SolverConfig {
    Schedule schedule;
    bool normalize = false;  // use g/||g|| (0 at 0) as the step direction
    std::uint64_t max_iter = 1000;
    std::optional<double> target_f;
    std::optional<ResidualStopRule> residual_stop;
    StallStopRule stall;
    ReturnToStart return_to_start;
    double divergence_bound = 1e6;
    std::uint64_t log_every = 1;
    ValidationMode validation = ValidationMode::warn;
    std::uint64_t seed = 0;
};

// Enforce a theorem's schedule conditions according to the validation mode.
inline void enforce_schedule(const Schedule& s, TheoremTag tag, ValidationMode mode) {
    if (mode == ValidationMode::off) return;
    ScheduleReport rep = validate_schedule(s, tag);
    if (rep.all_pass()) return;
    if (mode == ValidationMode::strict)
        throw ScheduleError(std::string("schedule fails ") + to_string(tag) + ": " +
                            rep.first_failure());
    // warn mode: callers run anyway; the CLI surfaces the report.
}

}  // namespace nsopt
