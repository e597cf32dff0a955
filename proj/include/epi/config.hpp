// Run configuration: flat "key = value" text with # comments. Command-line
// flags set the same keys.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "epi/calibration.hpp"
#include "epi/grid.hpp"
#include "epi/model.hpp"
#include "epi/pathsim.hpp"
#include "epi/solvers.hpp"

namespace epi {

enum class SweepAxis { none, sigma, T_vaccine, a_Ik };

const char* to_string(SweepAxis a);
SweepAxis parse_sweep_axis(const std::string& s);

struct RunConfig {
  ModelParams params;
  GridSpec grid = [] {
    GridSpec g;
    g.n_mu = 51;
    return g;
  }();
  std::vector<Allocation> allocations{Allocation::pbe};
  SweepAxis sweep = SweepAxis::none;
  std::vector<double> sweep_values;
  std::string output_dir = "out";
  PathOptions path;
  InitialState z0;
  SolveOptions solve;
  double population = 10.38e6;
  double uD_lo = -40.0, uD_hi = -0.5;
  int jobs = 1;

  /// Sets one key; throws ConfigError naming the key on a bad key or value.
  void set(const std::string& key, const std::string& value);
  /// Reads "key = value" lines; blank lines and # comments are skipped.
  void read(std::istream& is, const std::string& source = "config");
  void read_file(const std::string& path);
  void validate() const;
  /// Canonical key=value listing of every field.
  std::string canonical() const;
  std::string hash() const;
};

/// Every key accepted by RunConfig::set.
const std::vector<std::string>& config_keys();

}  // namespace epi
