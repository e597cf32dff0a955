#include "epi/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace epi {

const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::none: return "none";
    case SweepAxis::sigma: return "sigma";
    case SweepAxis::T_vaccine: return "T_vaccine";
    case SweepAxis::a_Ik: return "a_Ik";
  }
  return "?";
}

SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "none") return SweepAxis::none;
  if (s == "sigma") return SweepAxis::sigma;
  if (s == "T_vaccine") return SweepAxis::T_vaccine;
  if (s == "a_Ik") return SweepAxis::a_Ik;
  throw ConfigError("unknown sweep axis '" + s + "' (none | sigma | T_vaccine | a_Ik)");
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end || !std::isfinite(x))
    throw ConfigError(key + ": expected a finite number, got '" + v + "'");
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  int x = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

std::vector<std::string> split(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

template <class M>
Setter number(M member) {
  return [member](RunConfig& c, const std::string& k, const std::string& v) {
    c.*member = to_double(k, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto param = [&](const char* name, double ModelParams::*m) {
      t[name] = [m](RunConfig& c, const std::string& k, const std::string& v) {
        c.params.*m = to_double(k, v);
      };
    };
    param("r", &ModelParams::r);
    param("nu", &ModelParams::nu);
    param("beta", &ModelParams::beta);
    param("gamma", &ModelParams::gamma);
    param("sigma", &ModelParams::sigma);
    param("delta0", &ModelParams::delta0);
    param("alpha", &ModelParams::alpha);
    param("a_min", &ModelParams::a_min);
    param("u_D", &ModelParams::u_D);
    param("a_Ik", &ModelParams::a_Ik);
    param("uIk_flow", &ModelParams::uIk_flow);
    t["annual_discount"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.params.r = to_double(k, v) / 365.25;
    };
    t["T_vaccine"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      const double T = to_double(k, v);
      if (!(T > 0)) throw ConfigError("T_vaccine: must be positive (years)");
      c.params.nu = 1.0 / (365.25 * T);
    };
    auto grid_int = [&](const char* name, int GridSpec::*m) {
      t[name] = [m](RunConfig& c, const std::string& k, const std::string& v) {
        c.grid.*m = to_int(k, v);
      };
    };
    auto grid_num = [&](const char* name, double GridSpec::*m) {
      t[name] = [m](RunConfig& c, const std::string& k, const std::string& v) {
        c.grid.*m = to_double(k, v);
      };
    };
    grid_int("n_S", &GridSpec::n_S);
    grid_int("n_I", &GridSpec::n_I);
    grid_int("n_mu", &GridSpec::n_mu);
    grid_num("S_lo", &GridSpec::S_lo);
    grid_num("S_hi", &GridSpec::S_hi);
    grid_num("I_lo", &GridSpec::I_lo);
    grid_num("I_hi", &GridSpec::I_hi);
    grid_num("I_median", &GridSpec::I_median);
    t["allocation"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.allocations.clear();
      for (const auto& a : split(v)) {
        if (a == "all") {
          c.allocations = {Allocation::myopic, Allocation::spp, Allocation::pbe, Allocation::prme,
                           Allocation::static_efficient};
          return;
        }
        c.allocations.push_back(parse_allocation(a));
      }
      if (c.allocations.empty()) throw ConfigError("allocation: empty list");
    };
    t["sweep"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.sweep = parse_sweep_axis(v);
    };
    t["sweep_values"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.sweep_values.clear();
      for (const auto& x : split(v)) c.sweep_values.push_back(to_double(k, x));
    };
    t["output_dir"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.output_dir = v;
    };
    t["scheme"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.path.scheme = parse_scheme(v);
    };
    t["wiring"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.solve.agent_wiring = parse_wiring(v);
    };
    t["dt"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.path.dt = to_double(k, v);
    };
    t["horizon"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.path.horizon = to_double(k, v);
    };
    t["S0"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.z0.S = to_double(k, v); };
    t["I0"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.z0.I = to_double(k, v); };
    t["D0"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.z0.D = to_double(k, v); };
    t["tolerance"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.solve.iteration.tolerance = to_double(k, v);
    };
    t["max_iterations"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.solve.iteration.max_iterations = to_int(k, v);
    };
    t["linear_tolerance"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.solve.linear_tolerance = to_double(k, v);
    };
    t["prme_inner_iterations"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.solve.prme_inner_iterations = to_int(k, v);
    };
    t["population"] = number(&RunConfig::population);
    t["uD_lo"] = number(&RunConfig::uD_lo);
    t["uD_hi"] = number(&RunConfig::uD_hi);
    t["jobs"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.jobs = to_int(k, v); };
    return t;
  }();
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, fn] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
  try {
    it->second(*this, key, trim(value));
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind(key + ":", 0) == 0) throw;
    throw ConfigError(key + ": " + msg);
  }
}

void RunConfig::read(std::istream& is, const std::string& source) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  read(is, path);
}

void RunConfig::validate() const {
  params.validate();
  grid.validate();
  if (!(path.dt > 0)) throw ConfigError("dt: must be positive");
  if (!(path.horizon >= path.dt)) throw ConfigError("horizon: must be at least dt");
  for (double x : {z0.S, z0.I, z0.D})
    if (!(x >= 0 && x <= 1)) throw ConfigError("S0, I0, D0: must lie in [0,1]");
  if (z0.S + z0.I + z0.D > 1 + 1e-12) throw ConfigError("S0 + I0 + D0: must not exceed 1");
  if (!(solve.iteration.tolerance > 0)) throw ConfigError("tolerance: must be positive");
  if (solve.iteration.max_iterations < 1) throw ConfigError("max_iterations: must be >= 1");
  if (!(solve.linear_tolerance > 0)) throw ConfigError("linear_tolerance: must be positive");
  if (solve.prme_inner_iterations < 1) throw ConfigError("prme_inner_iterations: must be >= 1");
  if (!(population > 0)) throw ConfigError("population: must be positive");
  if (!(uD_lo < uD_hi && uD_hi < 0)) throw ConfigError("uD_lo, uD_hi: need uD_lo < uD_hi < 0");
  if (jobs < 1) throw ConfigError("jobs: must be >= 1");
  for (auto a : allocations)
    if (a == Allocation::prme && grid.n_mu < 2)
      throw ConfigError("n_mu: the prme allocation needs n_mu >= 2");
  if (sweep != SweepAxis::none && sweep_values.empty())
    throw ConfigError("sweep_values: required when sweep is set");
  for (double v : sweep_values) {
    if (sweep == SweepAxis::sigma && !(v > 0 && v <= 1))
      throw ConfigError("sweep_values: sigma values must lie in (0,1]");
    if (sweep == SweepAxis::T_vaccine && !(v > 0))
      throw ConfigError("sweep_values: T_vaccine values must be positive (years)");
    if (sweep == SweepAxis::a_Ik && !(v >= params.a_min && v <= 1))
      throw ConfigError("sweep_values: a_Ik values must lie in [a_min, 1]");
  }
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  const auto& p = params;
  os << "r=" << p.r << "\nnu=" << p.nu << "\nbeta=" << p.beta << "\ngamma=" << p.gamma
     << "\nsigma=" << p.sigma << "\ndelta0=" << p.delta0 << "\nalpha=" << p.alpha
     << "\na_min=" << p.a_min << "\nu_D=" << p.u_D << "\na_Ik=" << p.a_Ik
     << "\nuIk_flow=" << p.uIk_flow << '\n';
  os << "n_S=" << grid.n_S << "\nS_lo=" << grid.S_lo << "\nS_hi=" << grid.S_hi
     << "\nn_I=" << grid.n_I << "\nI_lo=" << grid.I_lo << "\nI_hi=" << grid.I_hi
     << "\nI_median=" << grid.I_median << "\nn_mu=" << grid.n_mu << '\n';
  os << "allocation=";
  for (std::size_t i = 0; i < allocations.size(); ++i)
    os << (i ? "," : "") << to_string(allocations[i]);
  os << "\nsweep=" << to_string(sweep) << "\nsweep_values=";
  for (std::size_t i = 0; i < sweep_values.size(); ++i) os << (i ? "," : "") << sweep_values[i];
  os << "\nscheme=" << to_string(path.scheme) << "\nwiring=" << to_string(solve.agent_wiring)
     << "\ndt=" << path.dt << "\nhorizon=" << path.horizon << "\nS0=" << z0.S << "\nI0=" << z0.I
     << "\nD0=" << z0.D << "\ntolerance=" << solve.iteration.tolerance
     << "\nmax_iterations=" << solve.iteration.max_iterations
     << "\nlinear_tolerance=" << solve.linear_tolerance
     << "\nprme_inner_iterations=" << solve.prme_inner_iterations
     << "\npopulation=" << population << "\nuD_lo=" << uD_lo << "\nuD_hi=" << uD_hi << '\n';
  return os.str();
}

std::string RunConfig::hash() const { return hex_digest(fnv1a(canonical())); }

}  // namespace epi
