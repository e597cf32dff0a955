#include "epi/pathsim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace epi {

const char* to_string(Scheme s) { return s == Scheme::rk4 ? "rk4" : "difference"; }

Scheme parse_scheme(const std::string& s) {
  if (s == "difference") return Scheme::difference;
  if (s == "rk4") return Scheme::rk4;
  throw ConfigError("unknown scheme '" + s + "' (difference | rk4)");
}

ActivityRule constant_rule(double a) {
  return [a](double, double) { return a; };
}

ActivityRule field_rule(const StateGrid& grid, Field field) {
  return [&grid, f = std::move(field)](double S, double I) {
    return interpolate(grid, f, S, I).value;
  };
}

namespace {

struct Rates {
  double dS, dI, a, a_Ik;
};

Rates rates(const PathPolicy& pol, const ModelParams& p, double S, double I) {
  const double a = pol.a_U(S, I);
  const double aIk = pol.a_Ik ? pol.a_Ik(S, I) : p.a_Ik;
  const double inf = p.beta * a * S * (p.sigma * aIk + (1.0 - p.sigma) * a) * I;
  return {-inf, inf - p.gamma * I, a, aIk};
}

void check_share(double x, const char* name, double t) {
  if (!(x >= -1e-10 && x <= 1.0 + 1e-10)) {
    std::ostringstream os;
    os << "path left [0,1]: " << name << " = " << x << " at t = " << t
       << " (use a smaller dt)";
    throw IntegrationError(os.str());
  }
}

}  // namespace

PathSeries simulate_path(const PathPolicy& policy, const InitialState& z0, const ModelParams& p,
                         const PathOptions& opt) {
  if (!(opt.dt > 0) || !(opt.horizon > 0)) throw ConfigError("path: need dt > 0 and horizon > 0");
  if (!policy.a_U) throw ConfigError("path: no activity rule for unknown agents");
  for (double x : {z0.S, z0.I, z0.D})
    if (!(x >= 0 && x <= 1)) throw ConfigError("path: initial shares must lie in [0,1]");
  if (z0.S + z0.I + z0.D > 1.0 + 1e-12) throw ConfigError("path: initial shares sum above 1");

  const double death = p.gamma * p.delta() * p.sigma;
  PathSeries out;
  double S = z0.S, I = z0.I, D = z0.D, cum = 0.0, t = 0.0;
  auto record = [&](const Rates& k) {
    out.t.push_back(t);
    out.S.push_back(S);
    out.I.push_back(I);
    out.D.push_back(D);
    out.a_U.push_back(k.a);
    out.R_eff.push_back(p.beta / p.gamma * k.a * S * (p.sigma * k.a_Ik + (1 - p.sigma) * k.a));
  };
  const auto steps = static_cast<long>(std::ceil(opt.horizon / opt.dt - 1e-9));
  Rates k1 = rates(policy, p, S, I);
  record(k1);
  double prev_I = I;
  for (long n = 1; n <= steps; ++n) {
    const double h = opt.dt;
    if (opt.scheme == Scheme::difference) {
      S += h * k1.dS;
      cum += h * I;
      I += h * k1.dI;
    } else {
      const Rates k2 = rates(policy, p, S + 0.5 * h * k1.dS, I + 0.5 * h * k1.dI);
      const Rates k3 = rates(policy, p, S + 0.5 * h * k2.dS, I + 0.5 * h * k2.dI);
      const Rates k4 = rates(policy, p, S + h * k3.dS, I + h * k3.dI);
      const double I2 = I + 0.5 * h * k1.dI, I3 = I + 0.5 * h * k2.dI, I4 = I + h * k3.dI;
      cum += h / 6.0 * (I + 2 * I2 + 2 * I3 + I4);
      S += h / 6.0 * (k1.dS + 2 * k2.dS + 2 * k3.dS + k4.dS);
      I += h / 6.0 * (k1.dI + 2 * k2.dI + 2 * k3.dI + k4.dI);
    }
    t = n * h;
    check_share(S, "S", t);
    check_share(I, "I", t);
    S = std::clamp(S, 0.0, 1.0);
    I = std::clamp(I, 0.0, 1.0);
    D = z0.D + death * cum;
    k1 = rates(policy, p, S, I);
    record(k1);
    if (I < opt.stop_below && I <= prev_I) {
      out.stopped_early = true;
      break;
    }
    prev_I = I;
  }
  out.cumulative_I = cum;
  return out;
}

std::optional<double> herd_immunity_day(const PathSeries& path, const ModelParams& p) {
  const double threshold = p.gamma / p.beta;
  for (std::size_t n = 0; n < path.size(); ++n)
    if (path.S[n] <= threshold) return path.t[n];
  return std::nullopt;
}

ExpectedDeaths expected_deaths(const PathSeries& path, const ModelParams& p) {
  if (path.size() == 0) throw ConfigError("expected_deaths: empty path");
  const double ds = p.delta() * p.sigma;
  auto toll = [&](std::size_t n) { return path.D[n] + ds * path.I[n]; };
  const std::size_t last = path.size() - 1;
  ExpectedDeaths out;
  if (p.nu == 0) {
    // No vaccine: the terminal toll.
    out.per_100k = 1e5 * toll(last);
  } else {
    double sum = 0;
    for (std::size_t n = 0; n < last; ++n) {
      const double f0 = p.nu * std::exp(-p.nu * path.t[n]) * toll(n);
      const double f1 = p.nu * std::exp(-p.nu * path.t[n + 1]) * toll(n + 1);
      sum += 0.5 * (f0 + f1) * (path.t[n + 1] - path.t[n]);
    }
    sum += std::exp(-p.nu * path.t[last]) * toll(last);
    out.per_100k = 1e5 * sum;
  }
  if (path.I[last] > 1e-10) {
    // Beyond the horizon the toll can still grow by at most delta sigma S.
    const double weight = p.nu == 0 ? 1.0 : std::exp(-p.nu * path.t[last]);
    out.truncation_bound = 1e5 * weight * ds * path.S[last];
  }
  return out;
}

double aggregate_welfare(const AllocationResult& result, const StateGrid& grid,
                         const InitialState& z, const ModelParams& p) {
  if (z.I <= 0 && z.D <= 0) return 0.0;  // no epidemic
  const double v = interpolate(grid, result.value, z.S, z.I).value;
  if (result.allocation == Allocation::spp) return z.D * p.u_D - v;
  return (p.sigma * z.S + 1.0 - p.sigma) * v + p.sigma * z.I * result.V_Ik + z.D * p.u_D;
}

double welfare_cost(const AllocationResult& result, const StateGrid& grid, const InitialState& z,
                    const ModelParams& p) {
  const double W = aggregate_welfare(result, grid, z, p);
  if (W > 1e-14) {
    std::ostringstream os;
    os << "welfare_cost: aggregate welfare " << W << " is positive";
    throw DomainError(os.str());
  }
  return 1.0 - inverse_utility(std::min(W, 0.0), p.alpha);
}

PathMetrics path_metrics(const PathSeries& path, const ModelParams& p) {
  PathMetrics m;
  const auto it = std::max_element(path.I.begin(), path.I.end());
  m.peak_prevalence = *it;
  m.peak_day = path.t[static_cast<std::size_t>(it - path.I.begin())];
  m.herd_immunity_day = herd_immunity_day(path, p);
  const auto d = expected_deaths(path, p);
  m.expected_deaths_per_100k = d.per_100k;
  m.terminal_day = path.t.back();
  if (d.truncation_bound > 0) {
    std::ostringstream os;
    os << "path truncated with I = " << path.I.back()
       << "; expected deaths may be understated by up to " << d.truncation_bound << " per 100k";
    m.warning = os.str();
  }
  return m;
}

PolicyTrace policy_along_path(const PathSeries& path, const StateGrid& grid,
                              const std::vector<std::pair<std::string, const Field*>>& policies) {
  PolicyTrace tr;
  for (const auto& [name, field] : policies) {
    tr.names.push_back(name);
    std::vector<double> s(path.size());
    for (std::size_t n = 0; n < path.size(); ++n)
      s[n] = interpolate(grid, *field, path.S[n], path.I[n]).value;
    tr.series.push_back(std::move(s));
  }
  return tr;
}

void write_path_csv(std::ostream& os, const PathSeries& path) {
  os << "t,S,I,D,a_U,R_eff\n" << std::setprecision(17);
  for (std::size_t n = 0; n < path.size(); ++n)
    os << path.t[n] << ',' << path.S[n] << ',' << path.I[n] << ',' << path.D[n] << ','
       << path.a_U[n] << ',' << path.R_eff[n] << '\n';
}

void write_metrics(std::ostream& os, const PathMetrics& m) {
  os << std::setprecision(17);
  os << "peak_prevalence=" << m.peak_prevalence << '\n';
  os << "peak_day=" << m.peak_day << '\n';
  os << "herd_immunity_day=";
  if (m.herd_immunity_day)
    os << *m.herd_immunity_day;
  else
    os << "none";
  os << '\n';
  os << "welfare_cost=" << m.welfare_cost << '\n';
  os << "expected_deaths_per_100k=" << m.expected_deaths_per_100k << '\n';
  os << "terminal_day=" << m.terminal_day << '\n';
  if (!m.warning.empty()) os << "warning=" << m.warning << '\n';
}

}  // namespace epi
