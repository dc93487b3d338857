#pragma once

// Reproduction of the two bundled benchmark scenarios. Hard checks gate the
// exit status; numeric targets that depend on under-determined inputs (the
// balance normalization behind T1, the unstated constants behind T2, the
// quoted closed form) are recorded as deviations, never failed.

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "tvdo/runner.hpp"

namespace tvdo::runner {

namespace detail {

// first recorded index with time >= t, clamped to the last index
inline size_t index_at(const std::vector<double>& times, double t) {
  for (size_t i = 0; i < times.size(); ++i)
    if (times[i] >= t - 1e-12) return i;
  return times.size() - 1;
}

}  // namespace detail

inline int reproduce_example(const std::string& which, const CliOptions& opt) {
  if (which != "example1" && which != "example2")
    throw ConfigInvalid("reproduce target must be example1 or example2", "/");
  const std::filesystem::path out_dir(opt.out_dir);
  std::filesystem::create_directories(out_dir);
  auto cfg = config::load_config(opt.data_dir + "/" + which + ".json");
  apply_overrides(cfg, opt);

  auto artifacts = run_and_report(cfg);
  const auto& s = artifacts.series;
  json summary = summary_skeleton(cfg, "reproduce " + which);
  write_run_outputs(cfg, artifacts, out_dir, summary);

  std::vector<Verdict> verdicts;
  json deviations = json::array();

  if (which == "example1") {
    const auto& cb = artifacts.report.centralized;
    verdicts.push_back({"bound offset equals 0.625 under the declared constants", true,
                        std::abs(cb.offset - 0.625) <= 1e-12 * 0.625, cb.offset, 0.625});
    // tail window: second half of the horizon
    bool tail_ok = true;
    double tail_worst = -analysis::kInf;
    for (size_t i = detail::index_at(s.times, 0.5 * cfg.horizon); i < s.times.size(); ++i) {
      const double v = s.ms_tracking[i] - 3.0 * s.ms_tracking_se[i];
      tail_worst = std::max(tail_worst, v);
      tail_ok = tail_ok && v <= 0.625;
    }
    verdicts.push_back({"tail mean-square tracking within the 0.625 bound (3 sigma)", true,
                        tail_ok, tail_worst, 0.625});
    const auto env = montecarlo::check_msgeub(s.times, s.ms_tracking, s.ms_tracking_se,
                                              cb.rate, cb.offset, s.ms_tracking[0]);
    verdicts.push_back({"mean-square tracking under the MS-GEUB envelope", true, env.pass,
                        env.min_margin, 0.0});
    // the declared l2 differs from the sampled estimate; report both outcomes
    const auto& sc = artifacts.constants.sampled;
    const auto sampled_bound = analysis::msgeub_centralized(
        cfg.cgains.gamma1, sc.l1_hat, sc.l2_hat, sc.h_hat, cfg.sigma_bar);
    deviations.push_back(
        {{"name", "declared l2 vs sampled mixed-partial Lipschitz estimate"},
         {"declared", artifacts.constants.l2},
         {"sampled", sc.l2_hat},
         {"offset_from_sampled_constants", analysis::json_number(sampled_bound.offset)},
         {"note", "under the sampled l2 the gain condition gamma1 > l2/(h*l1) fails; the "
                  "0.625 bound uses the declared constants"}});
  } else {
    const double T1 = artifacts.report.T1;
    const double delta = artifacts.report.consensus.delta;
    double tau = 0.0;
    if (std::isfinite(delta) && delta > 0.0) {
      const auto st = montecarlo::settling_time(s.times, s.ms_consensus, delta);
      if (st) tau = *st;
    }
    summary["settling"] = {{"T1", analysis::json_number(T1)},
                           {"delta", analysis::json_number(delta)},
                           {"tau", tau},
                           {"consensus_check_start", T1 + tau}};

    bool cons_ok = true;
    double cons_worst = -analysis::kInf;
    for (size_t i = detail::index_at(s.times, T1 + tau); i < s.times.size(); ++i) {
      const double v = s.ms_consensus[i] - 3.0 * s.ms_consensus_se[i];
      cons_worst = std::max(cons_worst, v);
      cons_ok = cons_ok && v <= 1.51;
    }
    verdicts.push_back({"mean-square consensus within 1.51 for t >= T1 + tau (3 sigma)", true,
                        cons_ok, cons_worst, 1.51});

    bool track_ok = true;
    double track_worst = -analysis::kInf;
    for (size_t i = detail::index_at(s.times, 0.8 * cfg.horizon); i < s.times.size(); ++i) {
      const double v = s.ms_tracking[i] - 3.0 * s.ms_tracking_se[i];
      track_worst = std::max(track_worst, v);
      track_ok = track_ok && v <= 3.94;
    }
    verdicts.push_back({"final-window mean-square tracking within 3.94 (3 sigma)", true,
                        track_ok, track_worst, 3.94});

    const size_t iT1 = detail::index_at(s.times, T1);
    verdicts.push_back({"estimator p95 error at T1 within 1e-2", true,
                        s.estimator_err_p95[iT1] <= 1e-2, s.estimator_err_p95[iT1], 1e-2});

    // agent means against the quoted closed form, final window
    const double offset_eff = std::isfinite(artifacts.report.tracking.asymptotic_bound)
                                  ? artifacts.report.tracking.asymptotic_bound
                                  : 3.94;
    double dev_acc = 0.0;
    size_t dev_count = 0;
    const int agents = int(cfg.models.size());
    for (size_t i = detail::index_at(s.times, 0.8 * cfg.horizon); i < s.times.size(); ++i) {
      const Eigen::VectorXd xq = objectives::example2_quoted_form(s.times[i]);
      double acc = 0.0;
      for (int a = 0; a < agents; ++a)
        acc += (s.mean_states[i].row(a).transpose() - xq).squaredNorm();
      dev_acc += acc / agents;
      ++dev_count;
    }
    const double mean_dev = dev_acc / double(dev_count);
    verdicts.push_back({"agent means track the quoted closed form within the tracking offset",
                        true, mean_dev <= offset_eff, mean_dev, offset_eff});

    // soft targets
    deviations.push_back({{"name", "T1 vs quoted 1.3596 s"},
                          {"computed", analysis::json_number(T1)},
                          {"reference", 1.3596},
                          {"note", "lambda2 scales with the balance normalization, which the "
                                   "benchmark does not pin down"}});
    deviations.push_back(
        {{"name", "T2 vs quoted 0.3491 s"},
         {"computed", analysis::json_number(artifacts.report.consensus.T2)},
         {"reference", 0.3491},
         {"note", "depends on L2..L5, h_d, L_H values the benchmark does not state; the "
                  "15-agent family has a zero Hessian-eigenvalue floor (agent 9)"}});
    double form_gap = 0.0;
    for (double t : s.times)
      form_gap = std::max(form_gap, (objectives::example2_closed_form(t) -
                                     objectives::example2_quoted_form(t))
                                        .norm());
    deviations.push_back(
        {{"name", "quoted closed form vs stationarity solution of the objective table"},
         {"max_gap", form_gap},
         {"note", "the quoted expressions are inconsistent with the objective table; the "
                  "toolkit tracks the table's true minimizer and reports the gap"}});
    deviations.push_back(
        {{"name", "quoted asymptotic tracking bound 3.94 vs computed"},
         {"computed", analysis::json_number(artifacts.report.tracking.asymptotic_bound)},
         {"reference", 3.94}});
  }

  bool all_hard_pass = true;
  for (const auto& v : verdicts) all_hard_pass = all_hard_pass && (!v.hard || v.pass);
  summary["verdicts"] = verdicts_json(verdicts);
  summary["deviations"] = deviations;
  summary["all_hard_checks_pass"] = all_hard_pass;
  detail::write_file(out_dir / "summary.json", summary.dump(2) + "\n");
  return all_hard_pass ? 0 : 6;
}

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigInvalid*>(&e)) return 2;
  if (dynamic_cast<const NotStronglyConnected*>(&e) ||
      dynamic_cast<const NotDetailBalanced*>(&e) || dynamic_cast<const AsymmetricInput*>(&e))
    return 3;
  if (dynamic_cast<const SingularHessian*>(&e) ||
      dynamic_cast<const SingularEstimatorMatrix*>(&e) ||
      dynamic_cast<const SingularSystem*>(&e) || dynamic_cast<const NoConvergence*>(&e) ||
      dynamic_cast<const InvalidExponents*>(&e) || dynamic_cast<const InvalidTheta*>(&e) ||
      dynamic_cast<const ShapeMismatch*>(&e) || dynamic_cast<const EmptySample*>(&e))
    return 4;
  if (dynamic_cast<const NonFiniteInput*>(&e) || dynamic_cast<const NonFiniteState*>(&e))
    return 5;
  return 1;
}

inline int dispatch(const std::string& subcommand, CliOptions& opt) {
  const std::filesystem::path out_dir(opt.out_dir);
  std::filesystem::create_directories(out_dir);
  auto cfg = config::load_config(opt.config_path);
  apply_overrides(cfg, opt);
  if (subcommand == "check-graph") return check_graph_cmd(cfg, out_dir);
  if (subcommand == "bounds") return bounds_cmd(cfg, out_dir);
  if (subcommand == "simulate") return simulate_cmd(cfg, out_dir);
  if (subcommand == "derivative-check") return derivative_check_cmd(cfg, out_dir);
  throw ConfigInvalid("unknown subcommand " + subcommand, "/");
}

}  // namespace tvdo::runner
