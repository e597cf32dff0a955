#include "epi/calibration.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace epi {

namespace {

bool iso_date(const std::string& d) {
  if (d.size() != 10 || d[4] != '-' || d[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (!std::isdigit(static_cast<unsigned char>(d[i]))) return false;
  const int month = std::stoi(d.substr(5, 2)), day = std::stoi(d.substr(8, 2));
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

double count(const std::string& tok, std::size_t line, const char* column) {
  std::size_t used = 0;
  long long v = -1;
  try {
    v = std::stoll(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size() || tok.empty() || v < 0)
    throw DataError("line " + std::to_string(line) + ": " + column +
                    " is not a nonnegative integer: '" + tok + "'");
  return static_cast<double>(v);
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  while (!s.empty() && s.front() == ' ') s.erase(s.begin());
  return s;
}

}  // namespace

EpidemicSeries load_epidemic_csv(std::istream& is, double population) {
  if (!(population > 0)) throw DataError("population must be positive");
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty file");
  if (trim(line) != "date,cum_cases,cum_deaths")
    throw DataError("line 1: expected header 'date,cum_cases,cum_deaths', got '" + trim(line) + "'");
  EpidemicSeries s;
  s.population = population;
  std::size_t lineno = 1;
  double last_cases = 0, last_deaths = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(trim(tok));
    if (cols.size() != 3)
      throw DataError("line " + std::to_string(lineno) + ": expected 3 columns, got " +
                      std::to_string(cols.size()));
    if (!iso_date(cols[0]))
      throw DataError("line " + std::to_string(lineno) + ": bad ISO date '" + cols[0] + "'");
    if (!s.dates.empty() && cols[0] <= s.dates.back())
      throw DataError("line " + std::to_string(lineno) + ": dates not increasing");
    const double cases = count(cols[1], lineno, "cum_cases");
    const double deaths = count(cols[2], lineno, "cum_deaths");
    if (cases < last_cases)
      throw DataError("line " + std::to_string(lineno) + ": cum_cases decreases");
    if (deaths < last_deaths)
      throw DataError("line " + std::to_string(lineno) + ": cum_deaths decreases");
    if (cases > 0 && deaths > cases)
      throw DataError("line " + std::to_string(lineno) + ": cum_deaths exceeds cum_cases");
    last_cases = cases;
    last_deaths = deaths;
    s.dates.push_back(cols[0]);
    s.cum_cases.push_back(cases / population);
    s.cum_deaths.push_back(deaths / population);
  }
  if (s.size() == 0) throw DataError("no data rows");
  return s;
}

EpidemicSeries load_epidemic_csv(const std::string& path, double population) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path);
  return load_epidemic_csv(is, population);
}

std::vector<RatioPoint> case_fatality_series(const EpidemicSeries& s) {
  std::vector<RatioPoint> out;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.cum_cases[i] > 0) out.push_back({i, s.cum_deaths[i] / s.cum_cases[i]});
  return out;
}

std::vector<double> centered_moving_average(const std::vector<double>& x, int window) {
  const long n = static_cast<long>(x.size()), half = window / 2;
  std::vector<double> out(x.size());
  for (long i = 0; i < n; ++i) {
    const long a = std::max(0L, i - half), b = std::min(n - 1, i + half);
    double sum = 0;
    for (long j = a; j <= b; ++j) sum += x[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = sum / static_cast<double>(b - a + 1);
  }
  return out;
}

std::vector<double> prevalence_estimate(const EpidemicSeries& s, const ModelParams& p) {
  if (s.size() < 8) throw DataError("prevalence estimate needs at least 8 days of data");
  std::vector<double> raw(s.size() - 1);
  for (std::size_t t = 0; t + 1 < s.size(); ++t)
    raw[t] = (s.cum_deaths[t + 1] - s.cum_deaths[t]) / (p.gamma * p.delta0);
  return centered_moving_average(raw, 7);
}

double vsl_uD(double v, double annual_discount) {
  if (!(v >= 0)) throw DomainError("vsl_uD: value of life must be nonnegative");
  if (!(annual_discount > 0 && annual_discount < 1))
    throw DomainError("vsl_uD: annual discount must lie in (0,1)");
  return -annual_discount * v;
}

double pbe_peak(const ModelParams& p, const StateGrid& grid, const CalibrationOptions& opt) {
  const auto eq = solve_pbe(p, grid, opt.solve);
  if (!eq.report.converged) throw SolverError("calibration: PBE solve did not converge");
  const auto path = simulate_path({field_rule(grid, eq.policy), {}}, opt.z0, p, opt.path);
  return *std::max_element(path.I.begin(), path.I.end());
}

CalibrationReport calibrate_uD(double target_peak, const ModelParams& p, const StateGrid& grid,
                               const CalibrationOptions& opt,
                               std::function<double(const ModelParams&)> peak) {
  if (!(target_peak > 0 && target_peak < 1)) throw DomainError("target peak must lie in (0,1)");
  if (!(opt.lo < opt.hi && opt.hi < 0)) throw ConfigError("calibration bracket must satisfy lo < hi < 0");
  if (!peak) peak = [&](const ModelParams& q) { return pbe_peak(q, grid, opt); };

  CalibrationReport rep;
  rep.target = target_peak;
  rep.lo = opt.lo;
  rep.hi = opt.hi;
  auto eval = [&](double u) {
    ModelParams q = p;
    q.u_D = u;
    q.validate();
    const double pk = peak(q);
    rep.probes.push_back({u, pk});
    ++rep.evaluations;
    return pk - target_peak;
  };
  // The peak rises as death becomes less costly (u_D toward 0).
  double lo = opt.lo, hi = opt.hi;
  const double f_lo = eval(lo), f_hi = eval(hi);
  if (f_lo > 0 || f_hi < 0) {
    std::ostringstream os;
    os << "calibration bracket does not straddle the target " << target_peak << ": peak "
       << f_lo + target_peak << " at u_D = " << lo << ", " << f_hi + target_peak
       << " at u_D = " << hi;
    throw SolverError(os.str());
  }
  auto settle = [&](double u, double f) {
    rep.u_D = u;
    rep.achieved_peak = f + target_peak;
    rep.converged = std::abs(f) <= opt.tolerance;
  };
  if (std::abs(f_lo) <= std::abs(f_hi))
    settle(lo, f_lo);
  else
    settle(hi, f_hi);
  while (!rep.converged && rep.evaluations < opt.max_evaluations) {
    const double mid = 0.5 * (lo + hi);
    const double f = eval(mid);
    settle(mid, f);
    if (f < 0)
      lo = mid;
    else
      hi = mid;
  }
  return rep;
}

void write_calibration_report(std::ostream& os, const CalibrationReport& r) {
  os << std::setprecision(17);
  os << "target_peak=" << r.target << '\n';
  os << "bracket=" << r.lo << ',' << r.hi << '\n';
  os << "evaluations=" << r.evaluations << '\n';
  os << "u_D=" << r.u_D << '\n';
  os << "achieved_peak=" << r.achieved_peak << '\n';
  os << "converged=" << (r.converged ? "yes" : "no") << '\n';
  for (const auto& pr : r.probes) os << "probe=" << pr.u_D << ',' << pr.peak << '\n';
}

}  // namespace epi
