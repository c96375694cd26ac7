#pragma once

#include <iosfwd>

#include "nsopt/config.hpp"
#include "nsopt/run_trace.hpp"

namespace nsopt {

struct RunOutcome {
    int exit_code = 0;  // 0 ok, 1 runtime error, 2 validation failure (strict)
    std::string message;
    std::vector<std::string> trace_files;
    std::string summary_file;
};

// Execute one experiment config: run every seed (in parallel up to the
// NSOPT_WORKERS cap), write per-seed trace CSVs and a summary.
RunOutcome run_experiment(const Config& cfg, std::ostream& log);

// Align several configs over one shared problem into a comparison table.
RunOutcome compare_experiments(const std::vector<Config>& cfgs, std::ostream& out);

// Print the schedule-validation report for the config's solver; exit code 2
// when a condition fails.
int validate_config(const Config& cfg, std::ostream& out);

void print_catalog(std::ostream& out);

// In-process run used by tests: all seeds, traces returned instead of written.
std::vector<RunTrace> run_experiment_traces(const Config& cfg);

// Derive the per-run seed from (master seed, run index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run_index);

}  // namespace nsopt
