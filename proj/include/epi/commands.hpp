// The solve / simulate / sweep / calibrate jobs behind the command-line tool.
#pragma once

#include <functional>
#include <iosfwd>
#include <string>

#include "epi/config.hpp"

namespace epi {

namespace exit_code {
constexpr int ok = 0;
constexpr int config = 2;
constexpr int data = 3;
constexpr int solver = 4;
}  // namespace exit_code

/// Solves every configured allocation and writes <name>_policy.csv,
/// <name>_value.csv, <name>_report.txt and manifest.txt to output_dir.
int cmd_solve(const RunConfig& cfg, std::ostream& log);

/// Simulates the configured allocations from the policies that cmd_solve
/// wrote to input_dir. Writes <name>_path.csv, <name>_metrics.txt and
/// <name>_trace.csv (other allocations' activity along the path).
int cmd_simulate(const RunConfig& cfg, const std::string& input_dir, std::ostream& log);

/// One row per (sweep value, allocation) in sweep.csv.
int cmd_sweep(const RunConfig& cfg, std::ostream& log);

/// Fits u_D to the peak prevalence estimated from a case/death CSV.
int cmd_calibrate(const RunConfig& cfg, const std::string& data_path, std::ostream& log);

/// Runs a job, mapping exceptions to exit codes and messages on err.
int run_guarded(const std::function<int()>& job, std::ostream& err);

/// Solves one allocation; `pbe` (may be null) is reused by static_efficient.
AllocationResult solve_allocation(Allocation a, const ModelParams& p, const StateGrid& grid,
                                  const SolveOptions& opt, const AllocationResult* pbe = nullptr);

}  // namespace epi
