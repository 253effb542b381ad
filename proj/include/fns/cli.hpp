#ifndef FNS_CLI_HPP
#define FNS_CLI_HPP

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fns/experiments.hpp"

namespace fns {

/** Command-line front end. Exit status: 0 success, 2 configuration or usage
 *  error, 3 numerical failure. Kept callable in-process for the tests. */
inline int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"insensitizing controls for the fourth-order Schrodinger equation"};
  app.require_subcommand(1);

  struct SubOpts {
    CLI::App* sub = nullptr;
    std::string config;
    std::string out;
    long long seed = -1;
  };
  const std::vector<std::pair<std::string, std::string>> names = {
      {"simulate", "forward solve with trajectory and conservation report"},
      {"control", "penalized HUM control synthesis over an epsilon sweep"},
      {"insensitize-check", "sentinel-derivative audit of a computed control"},
      {"carleman-scan", "empirical Carleman/observability constant tables"},
      {"convergence", "manufactured-solution convergence study"}};
  std::vector<SubOpts> opts(names.size());
  for (size_t i = 0; i < names.size(); ++i) {
    opts[i].sub = app.add_subcommand(names[i].first, names[i].second);
    opts[i].sub->add_option("--config", opts[i].config, "path to the JSON run configuration")
        ->required();
    opts[i].sub->add_option("--out", opts[i].out, "output directory (overrides config)");
    opts[i].sub->add_option("--seed", opts[i].seed, "seed override (nonnegative integer)");
  }

  std::vector<std::string> argv_store = args;
  std::vector<char*> argv;
  std::string prog = "fns";
  argv.push_back(prog.data());
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (size_t i = 0; i < names.size(); ++i) {
      if (!opts[i].sub->parsed()) continue;
      RunConfig c = load_config(opts[i].config);
      if (opts[i].seed >= 0) c.seed = static_cast<std::uint64_t>(opts[i].seed);
      std::string outdir = opts[i].out.empty() ? c.output : opts[i].out;
      const std::string& cmd = names[i].first;
      if (cmd == "simulate")
        cmd_simulate(c, outdir);
      else if (cmd == "control")
        cmd_control(c, outdir);
      else if (cmd == "insensitize-check")
        cmd_insensitize_check(c, outdir);
      else if (cmd == "carleman-scan")
        cmd_carleman_scan(c, outdir);
      else
        cmd_convergence(c, outdir);
      return 0;
    }
    return 2;
  } catch (const config_error& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}

}  // namespace fns

#endif
