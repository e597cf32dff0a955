// Command-line front end: epictl solve | simulate | sweep | calibrate.
#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "epi/commands.hpp"

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_file, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.sets, "override a config key: --set key=value (repeatable)");
  for (const auto& key : epi::config_keys())
    cmd->add_option_function<std::string>(
           "--" + key, [&c, key](const std::string& v) { c.flags[key] = v; },
           "config key " + key)
        ->group("Config keys");
}

epi::RunConfig build_config(const Common& c) {
  epi::RunConfig cfg;
  if (!c.config_file.empty()) cfg.read_file(c.config_file);
  for (const auto& [k, v] : c.flags) cfg.set(k, v);
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw epi::ConfigError("--set expects key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Epidemic lockdown and quarantine solver"};
  app.require_subcommand(1);

  Common solve_opts, sim_opts, sweep_opts, cal_opts;
  std::string input_dir = "out", data_path;

  auto* solve = app.add_subcommand("solve", "solve allocations and write policy/value fields");
  add_common(solve, solve_opts);
  auto* simulate = app.add_subcommand("simulate", "simulate paths from solved policies");
  add_common(simulate, sim_opts);
  simulate->add_option("-i,--input", input_dir, "directory written by solve");
  auto* sweep = app.add_subcommand("sweep", "welfare, deaths and peak over a parameter sweep");
  add_common(sweep, sweep_opts);
  auto* calibrate = app.add_subcommand("calibrate", "fit u_D to case/death data");
  add_common(calibrate, cal_opts);
  calibrate->add_option("data", data_path, "CSV with header date,cum_cases,cum_deaths")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : epi::exit_code::config;
  }

  int rc = 0;
  if (*solve)
    rc = epi::run_guarded([&] { return epi::cmd_solve(build_config(solve_opts), std::cout); }, std::cerr);
  else if (*simulate)
    rc = epi::run_guarded(
        [&] { return epi::cmd_simulate(build_config(sim_opts), input_dir, std::cout); }, std::cerr);
  else if (*sweep)
    rc = epi::run_guarded([&] { return epi::cmd_sweep(build_config(sweep_opts), std::cout); }, std::cerr);
  else if (*calibrate)
    rc = epi::run_guarded(
        [&] { return epi::cmd_calibrate(build_config(cal_opts), data_path, std::cout); }, std::cerr);
  if (rc == epi::exit_code::config) std::cerr << "see '" << argv[0] << " --help'\n";
  return rc;
}
