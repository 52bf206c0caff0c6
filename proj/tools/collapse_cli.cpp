// collapse: front end for the dust, hierarchy, residual and hydro stages.
//   collapse <command> [--config PATH] [--out DIR] [--threads K]
//   collapse --print-defaults
// Exit status: 0 when every check passes, 1 when a check fails, 2 on errors.

#include <CLI11.hpp>
#include <iostream>
#include <map>

#include "collapse/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Gravitational collapse of a gaseous star: dust, expansion hierarchy and hydro checks"};
  app.require_subcommand(0, 1);
  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults, "print the default configuration as JSON and exit");

  const std::map<std::string, std::string> about{
      {"validate-profile", "profile, gravity and operator identities"},
      {"dust", "pressureless collapse: exponents, ODE fidelity, mass"},
      {"build-hierarchy", "expansion iterates phi_j and their gains"},
      {"residual-scan", "residual of the truncated expansion in eps and tau"},
      {"simulate", "Lagrangian hydro run (needs build-hierarchy)"},
      {"compare", "compare a simulate run with dust and the expansion"},
      {"suite", "every stage, with simulate / compare for each suite.eps_runs"},
  };
  std::string config_path, out_dir;
  int threads = -1;
  for (const auto& name : collapse::command_names()) {
    auto* sub = app.add_subcommand(name, about.count(name) ? about.at(name) : "");
    sub->add_option("--config", config_path, "JSON configuration; missing keys keep their defaults");
    sub->add_option("--out", out_dir, "output directory (default: out_dir from the config)");
    sub->add_option("--threads", threads, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
  }
  CLI11_PARSE(app, argc, argv);

  if (print_defaults) {
    std::cout << collapse::to_json(collapse::Config{}).dump(2) << '\n';
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    collapse::Config cfg = config_path.empty() ? collapse::Config{} : collapse::load_config(config_path);
    if (threads >= 0) cfg.threads = threads;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    const auto m = collapse::run_command(command, cfg, cfg.out_dir);
    for (const auto& c : m.checks)
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    return m.all_pass() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "collapse " << command << ": " << e.what() << '\n';
    return 2;
  }
}
