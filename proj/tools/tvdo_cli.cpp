// Batch CLI: validate graphs, compute bound reports, run ensembles and
// reproduce the bundled benchmark scenarios.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "tvdo/reproduce.hpp"
#include "tvdo/runner.hpp"
#include "tvdo/version.hpp"

#ifndef TVDO_DATA_DIR
#define TVDO_DATA_DIR "data"
#endif

int main(int argc, char** argv) {
  CLI::App app{"time-varying distributed optimization simulator for stochastic multi-agent "
               "systems"};
  app.set_version_flag("--version", std::string("tvdo ") + tvdo::kVersion);
  app.require_subcommand(1);

  tvdo::runner::CliOptions opt;
  opt.data_dir = TVDO_DATA_DIR;

  std::uint64_t seed = 0;
  double dt = 0, boundary_layer = 0;
  int realizations = 0;
  std::string balance_mode;

  const auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opt.config_path, "run configuration (JSON)");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--data-dir", opt.data_dir, "bundled data directory");
    sub->add_option("--threads", opt.threads, "worker threads (0 = hardware)");
    sub->add_option("--seed", seed, "override ensemble.root_seed");
    sub->add_option("--dt", dt, "override sde.dt");
    sub->add_option("--realizations", realizations, "override ensemble.realizations");
    sub->add_option("--balance-mode", balance_mode,
                    "override graph.balance_mode (strict|least-squares|symmetrize)");
    sub->add_option("--boundary-layer", boundary_layer, "override sde.boundary_layer");
  };

  auto* check = app.add_subcommand("check-graph", "connectivity, detail balance and spectrum");
  add_common(check, true);
  auto* bounds = app.add_subcommand("bounds", "closed-form bound report");
  add_common(bounds, true);
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo ensemble run");
  add_common(simulate, true);
  auto* deriv = app.add_subcommand("derivative-check", "finite-difference validation");
  add_common(deriv, true);
  auto* repro = app.add_subcommand("reproduce", "run a bundled benchmark scenario");
  std::string which;
  repro->add_option("example", which, "example1 or example2")->required();
  add_common(repro, false);

  CLI11_PARSE(app, argc, argv);

  CLI::App* active = app.get_subcommands().front();
  if (active->count("--seed")) opt.seed = seed;
  if (active->count("--dt")) opt.dt = dt;
  if (active->count("--realizations")) opt.realizations = realizations;
  if (active->count("--balance-mode")) opt.balance_mode = balance_mode;
  if (active->count("--boundary-layer")) opt.boundary_layer = boundary_layer;

  try {
    int rc = 0;
    if (repro->parsed()) {
      rc = tvdo::runner::reproduce_example(which, opt);
    } else {
      const std::string sub = app.get_subcommands().front()->get_name();
      rc = tvdo::runner::dispatch(sub, opt);
    }
    if (rc == 0)
      std::cout << "ok: outputs in " << opt.out_dir << "\n";
    else
      std::cerr << "hard checks failed: see " << opt.out_dir << "/summary.json\n";
    return rc;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tvdo::runner::exit_code_for(e);
  }
}
