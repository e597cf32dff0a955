// Case/death data ingestion, prevalence reconstruction and the fit of the
// utility of death to an observed prevalence peak.
#pragma once

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "epi/grid.hpp"
#include "epi/model.hpp"
#include "epi/pathsim.hpp"
#include "epi/solvers.hpp"

namespace epi {

/// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpidemicSeries {
  std::vector<std::string> dates;
  std::vector<double> cum_cases;   // per capita
  std::vector<double> cum_deaths;  // per capita
  double population = 0;

  std::size_t size() const { return dates.size(); }
};

/// Reads "date,cum_cases,cum_deaths" with ISO dates and nonnegative integer counts.
EpidemicSeries load_epidemic_csv(std::istream& is, double population);
EpidemicSeries load_epidemic_csv(const std::string& path, double population);

struct RatioPoint {
  std::size_t index;
  double value;
};
/// D_t / C_t wherever C_t > 0.
std::vector<RatioPoint> case_fatality_series(const EpidemicSeries& s);

/// I_t = (D_{t+1} - D_t) / (gamma delta0), smoothed by a centred 7-day
/// moving average truncated at the ends. One value per day except the last.
std::vector<double> prevalence_estimate(const EpidemicSeries& s, const ModelParams& p);

std::vector<double> centered_moving_average(const std::vector<double>& x, int window);

/// -rate * v: the value-of-statistical-life utility of death.
double vsl_uD(double v, double annual_discount);

struct CalibrationOptions {
  double lo = -40.0;  // u_D search bracket
  double hi = -0.5;
  double tolerance = 1e-3;  // on peak prevalence
  int max_evaluations = 40;
  SolveOptions solve;
  PathOptions path;
  InitialState z0;
};

struct CalibrationProbe {
  double u_D;
  double peak;
};

struct CalibrationReport {
  double target = 0;
  double lo = 0, hi = 0;
  double u_D = 0;
  double achieved_peak = 0;
  int evaluations = 0;
  bool converged = false;
  std::vector<CalibrationProbe> probes;
};

/// Model peak prevalence of the PBE path at the given parameters.
double pbe_peak(const ModelParams& p, const StateGrid& grid, const CalibrationOptions& opt);

/// Bisection on u_D so the PBE peak prevalence matches target_peak. `peak`
/// defaults to pbe_peak; tests may substitute a cheaper model.
CalibrationReport calibrate_uD(double target_peak, const ModelParams& p, const StateGrid& grid,
                               const CalibrationOptions& opt = {},
                               std::function<double(const ModelParams&)> peak = {});

void write_calibration_report(std::ostream& os, const CalibrationReport& r);

}  // namespace epi
