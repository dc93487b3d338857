#pragma once

// Batch front-end behind the CLI: graph checks, bound reports, ensemble runs
// and the two bundled reproduction scenarios. Every output file embeds the
// resolved config and the toolkit version; no timestamps or environment state,
// so identical runs produce identical bytes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "tvdo/analysis.hpp"
#include "tvdo/config.hpp"
#include "tvdo/errors.hpp"
#include "tvdo/graph.hpp"
#include "tvdo/montecarlo.hpp"
#include "tvdo/objectives.hpp"
#include "tvdo/trajectory.hpp"
#include "tvdo/version.hpp"

namespace tvdo::runner {

using json = nlohmann::ordered_json;

struct CliOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::string data_dir;  // bundled configs and matrices
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<int> realizations;
  std::optional<std::string> balance_mode;
  std::optional<double> boundary_layer;
  int threads = 0;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

inline std::string csv_preamble(const json& resolved, const char* columns) {
  std::string s;
  s += std::string("# tvdo ") + kVersion + "\n";
  s += "# config: " + resolved.dump() + "\n";
  s += std::string("# columns: ") + columns + "\n";
  s += std::string(columns) + "\n";
  return s;
}

}  // namespace detail

inline void apply_overrides(config::RunConfig& cfg, const CliOptions& opt) {
  if (opt.seed) {
    cfg.root_seed = *opt.seed;
    cfg.resolved["ensemble"]["root_seed"] = *opt.seed;
  }
  if (opt.dt) {
    cfg.dt = *opt.dt;
    cfg.resolved["sde"]["dt"] = *opt.dt;
  }
  if (opt.realizations) {
    cfg.realizations = *opt.realizations;
    cfg.resolved["ensemble"]["realizations"] = *opt.realizations;
  }
  if (opt.balance_mode) {
    cfg.balance_mode = config::parse_balance_mode(*opt.balance_mode, "/graph/balance_mode");
    cfg.resolved["graph"]["balance_mode"] = *opt.balance_mode;
  }
  if (opt.boundary_layer) {
    cfg.boundary_layer = *opt.boundary_layer;
    cfg.resolved["sde"]["boundary_layer"] = *opt.boundary_layer;
  }
  cfg.threads = opt.threads;
}

// ---------------------------------------------------------------------------
// Constant estimation on the configured grids

struct ResolvedConstants {
  objectives::ConstantEstimates sampled;
  // values actually used by the bound report (sampled unless overridden)
  double l1, l2, h, L1, L2, L3, L4, L5, h_d, L_H;
};

inline ResolvedConstants resolve_constants(const config::RunConfig& cfg) {
  std::vector<double> tgrid;
  for (double t = 0.0; t <= cfg.grid_t_max + 1e-12; t += cfg.grid_t_step) tgrid.push_back(t);
  std::vector<Eigen::VectorXd> xgrid;
  const int n = cfg.models.front().dimension;
  if (n <= 2) {
    const int m = int(cfg.grid_x_max / cfg.grid_x_step);
    if (n == 1) {
      for (int i = -m; i <= m; ++i)
        xgrid.push_back(Eigen::VectorXd::Constant(1, i * cfg.grid_x_step));
    } else {
      for (int i = -m; i <= m; ++i)
        for (int j = -m; j <= m; ++j) {
          Eigen::VectorXd x(2);
          x << i * cfg.grid_x_step, j * cfg.grid_x_step;
          xgrid.push_back(x);
        }
    }
  } else {
    xgrid = objectives::default_x_grid(n);
  }
  ResolvedConstants rc{objectives::estimate_constants(cfg.models, tgrid, xgrid),
                       0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  const auto& ov = cfg.overrides;
  const auto pick = [&](const char* key, double sampled) {
    const auto it = ov.find(key);
    return it == ov.end() ? sampled : it->second;
  };
  rc.l1 = pick("l1", rc.sampled.l1_hat);
  rc.l2 = pick("l2", rc.sampled.l2_hat);
  rc.h = pick("h", rc.sampled.h_hat);
  rc.L1 = pick("L1", rc.sampled.l1_hat);
  rc.L2 = pick("L2", rc.sampled.L2_hat);
  rc.L3 = pick("L3", rc.sampled.L3_hat);
  rc.L4 = pick("L4", rc.sampled.L4_hat);
  rc.L5 = pick("L5", rc.sampled.L5_hat);
  rc.h_d = pick("h_d", rc.sampled.h_hat);
  rc.L_H = pick("L_H", rc.sampled.LH_hat);
  return rc;
}

inline json constants_json(const ResolvedConstants& rc) {
  const auto& s = rc.sampled;
  json j;
  j["sampled"] = {{"l1_hat", s.l1_hat},   {"h_hat", s.h_hat},
                  {"l2_hat", s.l2_hat},   {"L2_hat", s.L2_hat},
                  {"L3_hat", s.L3_hat},   {"L4_hat", s.L4_hat},
                  {"L5_hat", s.L5_hat},   {"LH_hat", s.LH_hat},
                  {"hess_sum_defect", s.hess_sum_defect},
                  {"sample_count", s.sample_count},
                  {"note", "sample lower/upper bounds on the assumption constants"}};
  j["used"] = {{"l1", rc.l1}, {"l2", rc.l2}, {"h", rc.h},     {"L1", rc.L1},
               {"L2", rc.L2}, {"L3", rc.L3}, {"L4", rc.L4},   {"L5", rc.L5},
               {"h_d", rc.h_d}, {"L_H", rc.L_H}};
  return j;
}

inline analysis::BoundReport build_bound_report(const config::RunConfig& cfg,
                                                const ResolvedConstants& rc,
                                                const graph::BalancedGraph* balanced) {
  analysis::BoundInputs in;
  in.gamma1 = cfg.has_centralized_gains ? cfg.cgains.gamma1 : 0.0;
  if (cfg.has_estimator_gains) {
    in.alpha1 = cfg.egains.alpha1;
    in.beta1 = cfg.egains.beta1;
    in.gamma2 = cfg.egains.gamma2;
  }
  if (cfg.has_distributed_gains) {
    in.alpha2 = cfg.dgains.alpha2;
    in.beta2 = cfg.dgains.beta2;
    in.gamma3 = cfg.dgains.gamma3;
    in.gamma4 = cfg.dgains.gamma4;
    in.p = cfg.dgains.p;
    in.q = cfg.dgains.q;
  } else if (cfg.has_estimator_gains) {
    in.p = cfg.egains.p;
    in.q = cfg.egains.q;
  }
  in.l1 = rc.l1;
  in.l2 = rc.l2;
  in.h = rc.h;
  in.L1 = rc.L1;
  in.L2 = rc.L2;
  in.L3 = rc.L3;
  in.L4 = rc.L4;
  in.L5 = rc.L5;
  in.h_d = rc.h_d;
  in.L_H = rc.L_H;
  in.sigma_bar = cfg.sigma_bar;
  in.theta = cfg.theta;
  in.n = cfg.models.front().dimension;
  in.N = static_cast<int>(cfg.models.size());
  if (balanced && in.p > 0.0) {
    in.lambda2_Lp = graph::reweighted_laplacian(*balanced, 2.0 / (in.p + 1.0)).lambda2;
    in.lambda2_Lq = graph::reweighted_laplacian(*balanced, 2.0 / (in.q + 1.0)).lambda2;
    in.lambda2_L2 = graph::reweighted_laplacian(*balanced, 2.0).lambda2;
    in.lambda2_L1 = graph::reweighted_laplacian(*balanced, 1.0).lambda2;
  }
  return analysis::make_bound_report(in);
}

// T1 evaluated under every balance mode that applies to the configured graph.
inline json t1_by_balance_mode(const config::RunConfig& cfg) {
  json out = json::object();
  if (!cfg.has_graph || !cfg.has_estimator_gains) return out;
  using graph::BalanceMode;
  for (BalanceMode mode :
       {BalanceMode::strict, BalanceMode::least_squares, BalanceMode::symmetrize}) {
    const char* name = graph::to_string(mode);
    try {
      const auto b = graph::detail_balance(cfg.digraph, mode);
      const double l2p =
          graph::reweighted_laplacian(b, 2.0 / (cfg.egains.p + 1.0)).lambda2;
      const double l2q =
          graph::reweighted_laplacian(b, 2.0 / (cfg.egains.q + 1.0)).lambda2;
      out[name] = analysis::fixed_time_T1(cfg.egains.alpha1, cfg.egains.beta1, cfg.egains.p,
                                          cfg.egains.q, l2p, l2q,
                                          cfg.models.front().dimension,
                                          int(cfg.models.size()));
    } catch (const Error& e) {
      out[name] = std::string("error: ") + e.what();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output writers

inline void write_metrics_csv(const std::filesystem::path& path,
                              const montecarlo::MetricSeries& s, const json& resolved) {
  std::string text = detail::csv_preamble(
      resolved, "t,ms_tracking,ms_tracking_se,ms_consensus,ms_consensus_se,estimator_err_p95");
  for (size_t i = 0; i < s.times.size(); ++i) {
    text += detail::fmt(s.times[i]) + "," + detail::fmt(s.ms_tracking[i]) + "," +
            detail::fmt(s.ms_tracking_se[i]) + "," + detail::fmt(s.ms_consensus[i]) + "," +
            detail::fmt(s.ms_consensus_se[i]) + "," + detail::fmt(s.estimator_err_p95[i]) +
            "\n";
  }
  detail::write_file(path, text);
}

inline void write_trajectory_csv(const std::filesystem::path& path,
                                 const config::RunConfig& cfg,
                                 const montecarlo::MetricSeries& s, const json& resolved) {
  const int n = cfg.models.front().dimension;
  std::string cols = "t";
  for (int k = 1; k <= n; ++k) cols += ",xstar_" + std::to_string(k);
  cols += ",residual";
  std::string text = detail::csv_preamble(resolved, cols.c_str());
  for (size_t i = 0; i < s.times.size(); ++i) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (const auto& m : cfg.models) g += m.grad(s.times[i], s.x_star[i]);
    text += detail::fmt(s.times[i]);
    for (int k = 0; k < n; ++k) text += "," + detail::fmt(s.x_star[i](k));
    text += "," + detail::fmt(g.norm()) + "\n";
  }
  detail::write_file(path, text);
}

inline void write_figure_data(const std::filesystem::path& dir,
                              const montecarlo::MetricSeries& s, const json& resolved,
                              int agents, int n) {
  // per-coordinate agent means next to the reference trajectory
  for (int k = 0; k < n; ++k) {
    std::string cols = "t";
    for (int i = 1; i <= agents; ++i) cols += ",mean_x" + std::to_string(i);
    cols += ",xstar";
    std::string text = detail::csv_preamble(resolved, cols.c_str());
    for (size_t ti = 0; ti < s.times.size(); ++ti) {
      text += detail::fmt(s.times[ti]);
      for (int i = 0; i < agents; ++i) text += "," + detail::fmt(s.mean_states[ti](i, k));
      text += "," + detail::fmt(s.x_star[ti](k)) + "\n";
    }
    detail::write_file(dir / ("fig_states_x" + std::to_string(k + 1) + ".dat"), text);
  }
  {
    std::string text = detail::csv_preamble(resolved, "t,ms_tracking,ms_tracking_se");
    for (size_t ti = 0; ti < s.times.size(); ++ti)
      text += detail::fmt(s.times[ti]) + "," + detail::fmt(s.ms_tracking[ti]) + "," +
              detail::fmt(s.ms_tracking_se[ti]) + "\n";
    detail::write_file(dir / "fig_error.dat", text);
  }
  {
    std::string text = detail::csv_preamble(resolved, "t,ms_consensus,ms_consensus_se");
    for (size_t ti = 0; ti < s.times.size(); ++ti)
      text += detail::fmt(s.times[ti]) + "," + detail::fmt(s.ms_consensus[ti]) + "," +
              detail::fmt(s.ms_consensus_se[ti]) + "\n";
    detail::write_file(dir / "fig_consensus.dat", text);
  }
  {
    std::string text = detail::csv_preamble(resolved, "t,mean_cost,mean_grad_norm");
    for (size_t ti = 0; ti < s.times.size(); ++ti)
      text += detail::fmt(s.times[ti]) + "," + detail::fmt(s.mean_cost[ti]) + "," +
              detail::fmt(s.mean_grad_norm[ti]) + "\n";
    detail::write_file(dir / "fig_cost.dat", text);
  }
}

inline void write_gnuplot_script(const std::filesystem::path& dir, int agents, int n) {
  std::string g;
  g += "set datafile separator ','\nset key outside\nset grid\n";
  for (int k = 1; k <= n; ++k) {
    g += "set terminal pngcairo size 900,600\nset output 'states_x" + std::to_string(k) +
         ".png'\n";
    g += "set title 'agent states, coordinate " + std::to_string(k) + "'\n";
    g += "plot ";
    for (int i = 1; i <= agents; ++i)
      g += "'fig_states_x" + std::to_string(k) + ".dat' using 1:" + std::to_string(i + 1) +
           " with lines notitle lc rgb '#667788', ";
    g += "'fig_states_x" + std::to_string(k) + ".dat' using 1:" + std::to_string(agents + 2) +
         " with lines title 'x*' lc rgb 'red' lw 2\n";
  }
  g += "set output 'tracking_error.png'\nset title 'mean-square tracking error'\n";
  g += "plot 'fig_error.dat' using 1:2 with lines title 'E[(1/N) sum |x_i-x*|^2]'\n";
  g += "set output 'consensus_error.png'\nset title 'mean-square consensus error'\n";
  g += "plot 'fig_consensus.dat' using 1:2 with lines title 'E[(1/N) sum |x_i-xbar|^2]'\n";
  g += "set output 'cost_gradient.png'\nset title 'cost and gradient norm'\n";
  g += "plot 'fig_cost.dat' using 1:2 with lines title 'cost', "
       "'fig_cost.dat' using 1:3 with lines title '|grad|'\n";
  detail::write_file(dir / "plots.gp", g);
}

// ---------------------------------------------------------------------------
// Subcommands

struct Verdict {
  std::string name;
  bool hard = true;
  bool pass = false;
  double value = 0.0;
  double limit = 0.0;
};

inline json verdicts_json(const std::vector<Verdict>& vs) {
  json arr = json::array();
  for (const auto& v : vs)
    arr.push_back({{"name", v.name},
                   {"hard", v.hard},
                   {"pass", v.pass},
                   {"value", analysis::json_number(v.value)},
                   {"limit", analysis::json_number(v.limit)}});
  return arr;
}

inline json summary_skeleton(const config::RunConfig& cfg, const std::string& command) {
  json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = cfg.resolved;
  j["metadata"] = {{"dt", cfg.dt},
                   {"realizations", cfg.realizations},
                   {"boundary_layer", cfg.boundary_layer},
                   {"note",
                    "step size, ensemble size and boundary layer are toolkit choices; the "
                    "benchmark statements do not fix them"}};
  return j;
}

inline int check_graph_cmd(config::RunConfig& cfg, const std::filesystem::path& out_dir) {
  if (!cfg.has_graph) throw ConfigInvalid("check-graph needs a graph section", "/graph");
  json j = summary_skeleton(cfg, "check-graph");
  const bool sc = graph::is_strongly_connected(cfg.digraph);
  j["strongly_connected"] = sc;
  json modes = json::object();
  using graph::BalanceMode;
  for (BalanceMode mode :
       {BalanceMode::strict, BalanceMode::least_squares, BalanceMode::symmetrize}) {
    const char* name = graph::to_string(mode);
    try {
      const auto b = graph::detail_balance(cfg.digraph, mode);
      const auto spec = graph::laplacian_and_spectrum(b.a_tilde);
      std::vector<double> xi(b.xi.data(), b.xi.data() + b.xi.size());
      modes[name] = {{"xi", xi},
                     {"detail_balance_residual", b.residual},
                     {"lambda2", spec.lambda2},
                     {"lambda_max", spec.lambda_max}};
    } catch (const Error& e) {
      modes[name] = {{"error", e.what()}};
    }
  }
  j["balance_modes"] = modes;
  j["selected_mode"] = graph::to_string(cfg.balance_mode);
  detail::write_file(out_dir / "graph.json", j.dump(2) + "\n");
  return 0;
}

inline int bounds_cmd(config::RunConfig& cfg, const std::filesystem::path& out_dir) {
  const auto rc = resolve_constants(cfg);
  std::optional<graph::BalancedGraph> balanced;
  if (cfg.has_graph) balanced = graph::detail_balance(cfg.digraph, cfg.balance_mode);
  const auto report = build_bound_report(cfg, rc, balanced ? &*balanced : nullptr);
  json j = summary_skeleton(cfg, "bounds");
  if (balanced)
    j["graph"] = {{"detail_balance_residual", balanced->residual},
                  {"balance_mode", graph::to_string(balanced->mode)}};
  j["constants"] = constants_json(rc);
  j["bound_report"] = analysis::to_json(report);
  j["T1_by_balance_mode"] = t1_by_balance_mode(cfg);
  detail::write_file(out_dir / "bounds.json", j.dump(2) + "\n");
  return 0;
}

inline int derivative_check_cmd(config::RunConfig& cfg, const std::filesystem::path& out_dir) {
  json rows = json::array();
  double worst = 0.0;
  std::uint64_t ctr = 0;
  rng::UniformStream uni(rng::derive_stream(0xD317Full, 0));
  for (const auto& m : cfg.models) {
    double entry_worst = 0.0;
    for (int s = 0; s < 100; ++s) {
      const double t = 10.0 * uni(ctr++);
      Eigen::VectorXd x(m.dimension);
      for (int k = 0; k < m.dimension; ++k) x(k) = -10.0 + 20.0 * uni(ctr++);
      entry_worst = std::max(entry_worst, objectives::check_derivatives(m, t, x, 1e-5));
    }
    rows.push_back({{"name", m.name}, {"max_rel_error", entry_worst}});
    worst = std::max(worst, entry_worst);
  }
  json j = summary_skeleton(cfg, "derivative-check");
  j["entries"] = rows;
  j["max_rel_error"] = worst;
  j["pass"] = worst <= 1e-6;
  detail::write_file(out_dir / "derivative_check.json", j.dump(2) + "\n");
  return worst <= 1e-6 ? 0 : 6;
}

struct RunArtifacts {
  montecarlo::MetricSeries series;
  ResolvedConstants constants;
  analysis::BoundReport report;
  std::optional<graph::BalancedGraph> balanced;
};

inline RunArtifacts run_and_report(config::RunConfig& cfg) {
  RunArtifacts a;
  a.constants = resolve_constants(cfg);
  if (cfg.has_graph) a.balanced = graph::detail_balance(cfg.digraph, cfg.balance_mode);
  a.report = build_bound_report(cfg, a.constants, a.balanced ? &*a.balanced : nullptr);
  auto ens = cfg.to_ensemble();
  if (a.balanced) ens.balanced = *a.balanced;
  a.series = montecarlo::run_ensemble(ens);
  return a;
}

inline void write_realization_states(const std::filesystem::path& dir,
                                     const montecarlo::MetricSeries& s, const json& resolved,
                                     int agents, int n) {
  std::string cols = "t";
  for (int i = 1; i <= agents; ++i)
    for (int k = 1; k <= n; ++k)
      cols += ",x" + std::to_string(i) + "_" + std::to_string(k);
  for (size_t r = 0; r < s.realization_states.size(); ++r) {
    char name[48];
    std::snprintf(name, sizeof(name), "realization_%03zu.csv", r);
    std::string text = detail::csv_preamble(resolved, cols.c_str());
    for (size_t ti = 0; ti < s.times.size(); ++ti) {
      text += detail::fmt(s.times[ti]);
      const auto& st = s.realization_states[r][ti];
      for (int i = 0; i < agents; ++i)
        for (int k = 0; k < n; ++k) text += "," + detail::fmt(st(i, k));
      text += "\n";
    }
    detail::write_file(dir / name, text);
  }
}

inline void write_run_outputs(const config::RunConfig& cfg, const RunArtifacts& a,
                              const std::filesystem::path& out_dir, json& summary) {
  write_metrics_csv(out_dir / "metrics.csv", a.series, cfg.resolved);
  write_trajectory_csv(out_dir / "trajectory.csv", cfg, a.series, cfg.resolved);
  write_figure_data(out_dir, a.series, cfg.resolved, int(cfg.models.size()),
                    cfg.models.front().dimension);
  write_gnuplot_script(out_dir, int(cfg.models.size()), cfg.models.front().dimension);
  if (cfg.save_states)
    write_realization_states(out_dir, a.series, cfg.resolved, int(cfg.models.size()),
                             cfg.models.front().dimension);
  summary["constants"] = constants_json(a.constants);
  summary["bound_report"] = analysis::to_json(a.report);
  summary["T1_by_balance_mode"] = t1_by_balance_mode(cfg);
  if (a.balanced) {
    summary["graph"] = {{"detail_balance_residual", a.balanced->residual},
                        {"balance_mode", graph::to_string(a.balanced->mode)}};
  }
}

inline int simulate_cmd(config::RunConfig& cfg, const std::filesystem::path& out_dir) {
  auto artifacts = run_and_report(cfg);
  json summary = summary_skeleton(cfg, "simulate");
  write_run_outputs(cfg, artifacts, out_dir, summary);
  // settling diagnostics for distributed runs
  if (cfg.mode == montecarlo::Mode::distributed) {
    const double delta = artifacts.report.consensus.delta;
    json settling;
    settling["delta"] = analysis::json_number(delta);
    if (std::isfinite(delta) && delta > 0.0) {
      const auto tau =
          montecarlo::settling_time(artifacts.series.times, artifacts.series.ms_consensus, delta);
      settling["tau"] = tau ? json(*tau) : json(nullptr);
    } else {
      settling["tau"] = 0.0;
    }
    summary["settling"] = settling;
  }
  detail::write_file(out_dir / "summary.json", summary.dump(2) + "\n");
  return 0;
}

}  // namespace tvdo::runner
