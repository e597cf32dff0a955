// Epidemic trajectories under a policy, and the welfare, death and
// herd-immunity metrics computed from them.
#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "epi/grid.hpp"
#include "epi/model.hpp"
#include "epi/solvers.hpp"

namespace epi {

/// The state left [0, 1] during integration.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// difference: the per-period law of motion with period dt (dt = 1 day is
/// the model's own time step). rk4: classical Runge-Kutta on the
/// continuous-time limit.
enum class Scheme { difference, rk4 };

const char* to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

struct PathOptions {
  Scheme scheme = Scheme::difference;
  double dt = 1.0;
  double horizon = 3650.0;
  /// Stop once prevalence falls below this (after it has started falling).
  double stop_below = 1e-12;
};

struct InitialState {
  double S = 1.0 - 1e-6;
  double I = 1e-6;
  double D = 0.0;
};

using ActivityRule = std::function<double(double S, double I)>;

/// Activity of unknown agents and of known infected along the path.
struct PathPolicy {
  ActivityRule a_U;
  ActivityRule a_Ik;  // empty: the parameters' a_Ik
};

ActivityRule constant_rule(double a);
/// Interpolates the field at (S, I), clamping outside the grid.
ActivityRule field_rule(const StateGrid& grid, Field field);

struct PathSeries {
  std::vector<double> t, S, I, D, a_U, R_eff;
  double cumulative_I = 0;   // integral of I over the path
  bool stopped_early = false;

  std::size_t size() const { return t.size(); }
};

PathSeries simulate_path(const PathPolicy& policy, const InitialState& z0, const ModelParams& p,
                         const PathOptions& opt = {});

struct PathMetrics {
  double peak_prevalence = 0;
  double peak_day = 0;
  std::optional<double> herd_immunity_day;
  double welfare_cost = 0;
  double expected_deaths_per_100k = 0;
  double terminal_day = 0;
  std::string warning;
};

std::optional<double> herd_immunity_day(const PathSeries& path, const ModelParams& p);

struct ExpectedDeaths {
  double per_100k = 0;
  /// Upper bound on the error from truncating the path; 0 if the tail is negligible.
  double truncation_bound = 0;
};

/// Deaths per 100k when the vaccine arrives at an exponential time with
/// rate nu: at arrival t the toll settles at D_t + delta sigma I_t.
ExpectedDeaths expected_deaths(const PathSeries& path, const ModelParams& p);

/// Aggregate welfare at (S, I, D) from the allocation's value fields.
double aggregate_welfare(const AllocationResult& result, const StateGrid& grid,
                         const InitialState& z, const ModelParams& p);
/// 1 - u^{-1}(W(z)): permanent consumption share lost to the epidemic.
double welfare_cost(const AllocationResult& result, const StateGrid& grid, const InitialState& z,
                    const ModelParams& p);

PathMetrics path_metrics(const PathSeries& path, const ModelParams& p);

/// Each named policy field evaluated along the path's (S_t, I_t).
struct PolicyTrace {
  std::vector<std::string> names;
  std::vector<std::vector<double>> series;  // series[k][n]: policy k at sample n
};
PolicyTrace policy_along_path(const PathSeries& path, const StateGrid& grid,
                              const std::vector<std::pair<std::string, const Field*>>& policies);

void write_path_csv(std::ostream& os, const PathSeries& path);
void write_metrics(std::ostream& os, const PathMetrics& m);

}  // namespace epi
