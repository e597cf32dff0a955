#include "epi/commands.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace epi {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  return os;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// The timestamp is the only line that differs between identical runs.
void write_manifest(const fs::path& path, const RunConfig& cfg, const std::string& command,
                    const std::vector<std::string>& files) {
  auto os = open_out(path);
  os << "# written " << timestamp() << '\n';
  os << "command=" << command << '\n';
  os << "config_hash=" << cfg.hash() << '\n';
  os << "grid_hash=" << cfg.grid.hash() << '\n';
  os << "params_hash=" << params_digest(cfg.params) << '\n';
  for (const auto& f : files) os << "file=" << f << " config_hash=" << cfg.hash() << '\n';
  os << "# config\n" << cfg.canonical();
}

std::map<std::string, std::string> read_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("no manifest at " + path.string() + " (run solve first)");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq != std::string::npos && !kv.count(line.substr(0, eq)))
      kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

void write_report(std::ostream& os, const AllocationResult& r) {
  os << std::setprecision(17);
  os << "allocation=" << to_string(r.allocation) << '\n';
  os << "converged=" << (r.report.converged ? "yes" : "no") << '\n';
  os << "outer_iterations=" << r.report.outer_iterations << '\n';
  os << "policy_change=" << r.report.policy_change << '\n';
  os << "linear_residual=" << r.report.linear_residual << '\n';
  os << "damped=" << (r.report.damped ? "yes" : "no") << '\n';
  os << "V_Ik=" << r.V_Ik << '\n';
  os << "params_hash=" << r.params_hash << '\n';
}

bool converged(const AllocationResult& r) {
  return r.report.converged || r.allocation == Allocation::myopic;
}

ModelParams at_sweep_value(ModelParams p, SweepAxis axis, double v) {
  switch (axis) {
    case SweepAxis::sigma: p.sigma = v; break;
    case SweepAxis::T_vaccine: p.nu = 1.0 / (365.25 * v); break;
    case SweepAxis::a_Ik: p.a_Ik = v; break;
    case SweepAxis::none: break;
  }
  return p;
}

}  // namespace

AllocationResult solve_allocation(Allocation a, const ModelParams& p, const StateGrid& grid,
                                  const SolveOptions& opt, const AllocationResult* pbe) {
  switch (a) {
    case Allocation::myopic: return solve_myopic(p, grid, opt);
    case Allocation::spp: return solve_spp(p, grid, opt);
    case Allocation::pbe: return solve_pbe(p, grid, opt);
    case Allocation::prme: return solve_prme(p, grid, opt);
    case Allocation::static_efficient:
      if (pbe) return solve_static_efficient(*pbe, p, grid);
      return solve_static_efficient(solve_pbe(p, grid, opt), p, grid);
  }
  throw ConfigError("unknown allocation");
}

int cmd_solve(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const StateGrid grid(cfg.grid);
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  std::vector<std::string> files;
  std::optional<AllocationResult> pbe;
  bool all_converged = true;
  for (const auto a : cfg.allocations) {
    const std::string name = to_string(a);
    log << "solving " << name << "...\n";
    if (a == Allocation::static_efficient && !pbe)
      pbe = solve_allocation(Allocation::pbe, cfg.params, grid, cfg.solve);
    AllocationResult r = solve_allocation(a, cfg.params, grid, cfg.solve, pbe ? &*pbe : nullptr);
    if (a == Allocation::pbe) pbe = r;
    auto emit = [&](const std::string& file, const Field& f) {
      write_field_csv((dir / file).string(), grid, f);
      files.push_back(file);
    };
    emit(name + "_policy.csv", r.policy);
    emit(name + "_value.csv", r.value);
    if (r.quarantine_policy) emit(name + "_quarantine.csv", *r.quarantine_policy);
    if (r.belief_policy) emit(name + "_belief_policy.csv", *r.belief_policy);
    if (r.belief_value) emit(name + "_belief_value.csv", *r.belief_value);
    {
      auto os = open_out(dir / (name + "_report.txt"));
      write_report(os, r);
      files.push_back(name + "_report.txt");
    }
    log << "  " << name << ": " << (converged(r) ? "converged" : "NOT converged") << " after "
        << r.report.outer_iterations << " iterations, residual " << r.report.linear_residual
        << '\n';
    all_converged = all_converged && converged(r);
  }
  write_manifest(dir / "manifest.txt", cfg, "solve", files);
  return all_converged ? exit_code::ok : exit_code::solver;
}

int cmd_simulate(const RunConfig& cfg, const std::string& input_dir, std::ostream& log) {
  cfg.validate();
  const fs::path in(input_dir), out(cfg.output_dir);
  const auto manifest = read_manifest(in / "manifest.txt");
  const std::string want = cfg.grid.hash();
  const auto it = manifest.find("grid_hash");
  if (it == manifest.end() || it->second != want)
    throw ConfigError("policy artifacts in " + input_dir + " were computed on grid " +
                      (it == manifest.end() ? std::string("<unknown>") : it->second) +
                      " but the current config describes grid " + want +
                      "; re-run solve with this grid or pass the matching grid settings");
  const StateGrid grid(cfg.grid);
  fs::create_directories(out);

  std::map<std::string, Field> fields;
  for (const auto* name : {"pbe", "spp", "static_efficient", "prme", "myopic"}) {
    const fs::path f = in / (std::string(name) + "_policy.csv");
    if (fs::exists(f)) fields.emplace(name, read_field_csv(f.string(), grid));
  }
  std::vector<std::string> files;
  for (const auto a : cfg.allocations) {
    const std::string name = to_string(a);
    const auto pf = fields.find(name);
    if (pf == fields.end())
      throw ConfigError("no " + name + "_policy.csv in " + input_dir + " (solve it first)");
    const auto path = simulate_path({field_rule(grid, pf->second), {}}, cfg.z0, cfg.params, cfg.path);
    PathMetrics m = path_metrics(path, cfg.params);
    const fs::path vf = in / (name + "_value.csv");
    if (fs::exists(vf)) {
      AllocationResult r;
      r.allocation = a;
      r.value = read_field_csv(vf.string(), grid);
      r.V_Ik = value_known_infected(cfg.params);
      m.welfare_cost = welfare_cost(r, grid, cfg.z0, cfg.params);
    }
    {
      auto os = open_out(out / (name + "_path.csv"));
      write_path_csv(os, path);
    }
    {
      auto os = open_out(out / (name + "_metrics.txt"));
      write_metrics(os, m);
    }
    files.push_back(name + "_path.csv");
    files.push_back(name + "_metrics.txt");

    std::vector<std::pair<std::string, const Field*>> trace_fields;
    for (const auto* other : {"pbe", "spp", "static_efficient"})
      if (const auto f = fields.find(other); f != fields.end())
        trace_fields.emplace_back(other, &f->second);
    const auto trace = policy_along_path(path, grid, trace_fields);
    {
      auto os = open_out(out / (name + "_trace.csv"));
      os << "t";
      for (const auto& n : trace.names) os << ',' << n;
      os << '\n' << std::setprecision(17);
      for (std::size_t k = 0; k < path.size(); ++k) {
        os << path.t[k];
        for (const auto& s : trace.series) os << ',' << s[k];
        os << '\n';
      }
    }
    files.push_back(name + "_trace.csv");
    log << name << ": peak prevalence " << m.peak_prevalence << " on day " << m.peak_day
        << ", welfare cost " << m.welfare_cost << ", deaths per 100k "
        << m.expected_deaths_per_100k << '\n';
    if (!m.warning.empty()) log << "  warning: " << m.warning << '\n';
  }
  write_manifest(out / "simulate_manifest.txt", cfg, "simulate", files);
  return exit_code::ok;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.sweep == SweepAxis::none) throw ConfigError("sweep: no sweep axis set");
  const StateGrid grid(cfg.grid);
  struct Row {
    double value;
    Allocation allocation;
    PathMetrics metrics;
    std::string status = "ok";
  };
  std::vector<Row> rows;
  for (double v : cfg.sweep_values)
    for (auto a : cfg.allocations) rows.push_back({v, a, {}, "ok"});

  // Points are independent; each job keeps its own solver state.
  const long n = static_cast<long>(rows.size());
#pragma omp parallel for schedule(dynamic) num_threads(cfg.jobs)
  for (long k = 0; k < n; ++k) {
    Row& row = rows[static_cast<std::size_t>(k)];
    try {
      const ModelParams p = at_sweep_value(cfg.params, cfg.sweep, row.value);
      p.validate();
      const auto r = solve_allocation(row.allocation, p, grid, cfg.solve);
      const auto path = simulate_path({field_rule(grid, r.policy), {}}, cfg.z0, p, cfg.path);
      row.metrics = path_metrics(path, p);
      row.metrics.welfare_cost = welfare_cost(r, grid, cfg.z0, p);
      if (!converged(r)) row.status = "not_converged";
      if (!row.metrics.warning.empty()) row.status += ";truncated";
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
  }

  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  auto os = open_out(dir / "sweep.csv");
  os << "axis,value,allocation,welfare_cost,expected_deaths_per_100k,peak_prevalence,"
        "herd_immunity_day,status\n"
     << std::setprecision(17);
  bool clean = true;
  for (const auto& r : rows) {
    os << to_string(cfg.sweep) << ',' << r.value << ',' << to_string(r.allocation) << ','
       << r.metrics.welfare_cost << ',' << r.metrics.expected_deaths_per_100k << ','
       << r.metrics.peak_prevalence << ',';
    if (r.metrics.herd_immunity_day)
      os << *r.metrics.herd_immunity_day;
    else
      os << "none";
    std::string status = r.status;
    for (auto& ch : status)
      if (ch == ',' || ch == '\n') ch = ' ';
    os << ',' << status << '\n';
    log << to_string(cfg.sweep) << '=' << r.value << ' ' << to_string(r.allocation)
        << ": welfare cost " << r.metrics.welfare_cost << ", deaths "
        << r.metrics.expected_deaths_per_100k << " (" << r.status << ")\n";
    clean = clean && r.status == "ok";
  }
  write_manifest(dir / "sweep_manifest.txt", cfg, "sweep", {"sweep.csv"});
  return clean ? exit_code::ok : exit_code::solver;
}

int cmd_calibrate(const RunConfig& cfg, const std::string& data_path, std::ostream& log) {
  cfg.validate();
  const auto series = load_epidemic_csv(data_path, cfg.population);
  const auto cfr = case_fatality_series(series);
  const auto prevalence = prevalence_estimate(series, cfg.params);
  const double target = *std::max_element(prevalence.begin(), prevalence.end());
  const double vsl = vsl_uD(238.7, 0.05);

  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  {
    auto os = open_out(dir / "cfr.csv");
    os << "date,cfr\n" << std::setprecision(17);
    for (const auto& pt : cfr) os << series.dates[pt.index] << ',' << pt.value << '\n';
  }
  {
    auto os = open_out(dir / "prevalence.csv");
    os << "date,prevalence\n" << std::setprecision(17);
    for (std::size_t t = 0; t < prevalence.size(); ++t)
      os << series.dates[t] << ',' << prevalence[t] << '\n';
  }
  log << "estimated peak prevalence " << target << '\n';
  log << "vsl_uD(238.7, 0.05) = " << vsl << '\n';

  const StateGrid grid(cfg.grid);
  CalibrationOptions opt;
  opt.lo = cfg.uD_lo;
  opt.hi = cfg.uD_hi;
  opt.solve = cfg.solve;
  opt.path = cfg.path;
  opt.z0 = cfg.z0;
  const auto rep = calibrate_uD(target, cfg.params, grid, opt);
  {
    auto os = open_out(dir / "calibration.txt");
    write_calibration_report(os, rep);
    os << "vsl_uD=" << vsl << '\n';
  }
  log << "calibrated u_D = " << rep.u_D << " (model peak " << rep.achieved_peak << ", "
      << rep.evaluations << " evaluations)\n";
  write_manifest(dir / "calibrate_manifest.txt", cfg, "calibrate",
                 {"cfr.csv", "prevalence.csv", "calibration.txt"});
  return rep.converged ? exit_code::ok : exit_code::solver;
}

int run_guarded(const std::function<int()>& job, std::ostream& err) {
  try {
    return job();
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return exit_code::data;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_code::config;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << '\n';
    return exit_code::config;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return exit_code::solver;
  } catch (const IntegrationError& e) {
    err << "integration error: " << e.what() << '\n';
    return exit_code::solver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace epi
