#pragma once

// Ensembles of coupled agent-SDE + estimator simulations with mean-square
// consensus/tracking metrics. Realization r and agent i draw from the
// counter-based stream keyed by (root_seed, r, i), and aggregation runs in
// realization-index order after all realizations finish, so results are
// byte-identical for any thread count.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tvdo/errors.hpp"
#include "tvdo/graph.hpp"
#include "tvdo/objectives.hpp"
#include "tvdo/protocols.hpp"
#include "tvdo/rng.hpp"
#include "tvdo/sde.hpp"
#include "tvdo/trajectory.hpp"

namespace tvdo::montecarlo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Mode { centralized, distributed };

struct EnsembleConfig {
  Mode mode = Mode::centralized;
  int realizations = 1;
  std::uint64_t root_seed = 0;
  double dt = 1e-3;
  double horizon = 1.0;
  long record_stride = 1;
  std::vector<VectorXd> initial_states;  // one per agent
  protocols::CentralizedGains cgains;
  protocols::EstimatorGains egains;
  protocols::DistributedGains dgains;
  graph::BalancedGraph balanced;  // distributed mode only
  std::vector<objectives::ObjectiveModel> models;
  sde::DiffusionSpec diffusion;
  int threads = 0;          // 0 = hardware concurrency
  bool keep_states = false; // expose per-realization state series

  int agents() const { return static_cast<int>(initial_states.size()); }
  int dim() const { return initial_states.empty() ? 0 : int(initial_states[0].size()); }

  long steps() const {
    const double raw = horizon / dt;
    const long s = std::lround(raw);
    if (s < 1 || std::abs(raw - double(s)) > 1e-9 * std::max(1.0, raw))
      throw Error("horizon must be an integral number of dt steps");
    return s;
  }

  void validate() const {
    if (realizations < 1) throw Error("ensemble needs at least one realization");
    if (initial_states.empty()) throw Error("ensemble needs initial states");
    if (models.empty()) throw Error("ensemble needs objectives");
    (void)steps();
    if (mode == Mode::centralized) {
      if (agents() != 1 || models.size() != 1)
        throw Error("centralized mode runs a single agent with a single objective");
      cgains.validate();
    } else {
      if (models.size() != initial_states.size())
        throw Error("distributed mode needs one objective per agent");
      if (balanced.n() != agents()) throw ShapeMismatch("graph size != agent count");
      egains.validate();
      dgains.validate();
    }
    for (const auto& x : initial_states)
      if (int(x.size()) != dim() || !x.allFinite()) throw Error("bad initial state");
  }
};

struct MetricSeries {
  std::vector<double> times;
  std::vector<double> ms_tracking, ms_tracking_se;    // E[(1/N) sum ||x_i - x*||^2]
  std::vector<double> ms_consensus, ms_consensus_se;  // E[(1/N) sum ||x_i - xbar||^2]
  std::vector<double> estimator_err_p95;  // p95 over realizations of max_i ||z_i - Hbar||_F
  std::vector<double> mean_cost;          // E[sum_i f_i(t, x_i)]
  std::vector<double> mean_grad_norm;     // E[||sum_i grad f_i(t, x_i)||]
  std::vector<VectorXd> x_star;           // reference trajectory at record times
  std::vector<MatrixXd> mean_states;      // per record time: agents x n ensemble means
  double zeta_sum_norm_final = 0.0;       // max over realizations of ||sum_i zeta_i||_F at the end
  int realizations = 0;
  // per realization, per record time: agents x n states (only with keep_states)
  std::vector<std::vector<MatrixXd>> realization_states;
};

namespace detail {

struct RealizationSeries {
  std::vector<double> tracking, consensus, est_err, cost, grad_norm;
  std::vector<MatrixXd> states;  // agents x n at each record time
  double zeta_sum_final = 0.0;   // ||sum_i zeta_i||_F after the last step
};

struct RecordGrid {
  std::vector<long> ks;
  std::vector<double> times;
};

inline RecordGrid record_grid(long steps, long stride, double dt) {
  RecordGrid g;
  for (long k = 0; k <= steps; k += stride) g.ks.push_back(k);
  if (g.ks.back() != steps) g.ks.push_back(steps);
  for (long k : g.ks) g.times.push_back(double(k) * dt);
  return g;
}

inline RealizationSeries simulate_realization(const EnsembleConfig& cfg, int realization,
                                              const RecordGrid& grid,
                                              const std::vector<VectorXd>& x_star) {
  const int agents = cfg.agents();
  const int n = cfg.dim();
  const long steps = cfg.steps();
  const double dt = cfg.dt;
  const double sdt = std::sqrt(dt);

  std::vector<rng::NormalStream> noise;
  noise.reserve(agents);
  for (int i = 0; i < agents; ++i)
    noise.emplace_back(rng::derive_stream(cfg.root_seed, std::uint64_t(realization), i));

  std::vector<VectorXd> x = cfg.initial_states;
  auto est = protocols::EstimatorState::zeros(agents, n);

  RealizationSeries out;
  const size_t nrec = grid.ks.size();
  out.tracking.reserve(nrec);
  out.consensus.reserve(nrec);
  out.est_err.reserve(nrec);
  out.cost.reserve(nrec);
  out.grad_norm.reserve(nrec);
  out.states.reserve(nrec);

  size_t rec = 0;
  const bool distributed = cfg.mode == Mode::distributed;
  std::vector<MatrixXd> hess_now(agents);
  VectorXd dW(n);

  for (long k = 0; k <= steps; ++k) {
    const double t = double(k) * dt;
    if (distributed) {
      for (int i = 0; i < agents; ++i) {
        hess_now[i] = cfg.models[i].hess(t, x[i]);
        est.z[i] = est.zeta[i] + hess_now[i];
      }
    }
    if (rec < grid.ks.size() && grid.ks[rec] == k) {
      VectorXd xbar = VectorXd::Zero(n);
      for (const auto& xi : x) xbar += xi;
      xbar /= double(agents);
      double track = 0.0, cons = 0.0, cost = 0.0;
      VectorXd gsum = VectorXd::Zero(n);
      for (int i = 0; i < agents; ++i) {
        track += (x[i] - x_star[rec]).squaredNorm();
        cons += (x[i] - xbar).squaredNorm();
        cost += cfg.models[i].f(t, x[i]);
        gsum += cfg.models[i].grad(t, x[i]);
      }
      out.tracking.push_back(track / agents);
      out.consensus.push_back(cons / agents);
      out.cost.push_back(cost);
      out.grad_norm.push_back(gsum.norm());
      double est_err = 0.0;
      if (distributed) {
        MatrixXd hbar = MatrixXd::Zero(n, n);
        for (const auto& h : hess_now) hbar += h;
        hbar /= double(agents);
        for (int i = 0; i < agents; ++i)
          est_err = std::max(est_err, (est.z[i] - hbar).norm());
      }
      out.est_err.push_back(est_err);
      MatrixXd snapshot(agents, n);
      for (int i = 0; i < agents; ++i) snapshot.row(i) = x[i].transpose();
      out.states.push_back(std::move(snapshot));
      ++rec;
    }
    if (k == steps) break;

    if (distributed) {
      std::vector<VectorXd> u(agents);
      for (int i = 0; i < agents; ++i)
        u[i] = protocols::distributed_control(i, t, x, est.z[i], cfg.models[i], cfg.balanced,
                                              cfg.dgains);
      const auto zdot = protocols::estimator_rate(est.z, cfg.balanced, cfg.egains);
      const MatrixXd sigma = cfg.diffusion.matrix(t);
      for (int i = 0; i < agents; ++i) {
        for (int d = 0; d < n; ++d) dW(d) = sdt * noise[i](std::uint64_t(k) * n + d);
        x[i] += u[i] * dt + sigma * dW;
        est.zeta[i] += dt * zdot[i];
        if (!x[i].allFinite())
          throw NonFiniteState("realization " + std::to_string(realization) +
                                   ": agent state diverged",
                               k + 1);
      }
    } else {
      const VectorXd u = protocols::centralized_control(t, x[0], cfg.models[0], cfg.cgains);
      const MatrixXd sigma = cfg.diffusion.matrix(t);
      for (int d = 0; d < n; ++d) dW(d) = sdt * noise[0](std::uint64_t(k) * n + d);
      x[0] += u * dt + sigma * dW;
      if (!x[0].allFinite())
        throw NonFiniteState("realization " + std::to_string(realization) +
                                 ": state diverged",
                             k + 1);
    }
  }
  if (distributed) {
    MatrixXd zsum = MatrixXd::Zero(n, n);
    for (const auto& zi : est.zeta) zsum += zi;
    out.zeta_sum_final = zsum.norm();
  }
  return out;
}

inline double percentile95(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t m = v.size();
  const size_t k = std::max<size_t>(1, size_t(std::ceil(0.95 * double(m))));
  return v[k - 1];
}

}  // namespace detail

inline MetricSeries run_ensemble(const EnsembleConfig& cfg) {
  cfg.validate();
  const long steps = cfg.steps();
  const auto grid = detail::record_grid(steps, std::max<long>(1, cfg.record_stride), cfg.dt);

  // Reference trajectory at the record times, Newton warm-started.
  std::vector<VectorXd> x_star;
  x_star.reserve(grid.times.size());
  VectorXd warm = VectorXd::Zero(cfg.dim());
  for (double t : grid.times) {
    warm = trajectory::newton_minimizer(cfg.models, t, warm).x_star;
    x_star.push_back(warm);
  }

  const int m = cfg.realizations;
  std::vector<detail::RealizationSeries> results(m);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int nthreads = std::min(cfg.threads > 0 ? cfg.threads : int(hw), m);
  std::vector<std::exception_ptr> errors(static_cast<size_t>(nthreads));
  std::vector<std::thread> pool;
  pool.reserve(size_t(nthreads));
  for (int w = 0; w < nthreads; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (int r = w; r < m; r += nthreads)
          results[r] = detail::simulate_realization(cfg, r, grid, x_star);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Ordered reduction.
  const size_t nrec = grid.times.size();
  MetricSeries s;
  s.times = grid.times;
  s.x_star = std::move(x_star);
  s.realizations = m;
  s.ms_tracking.resize(nrec);
  s.ms_tracking_se.resize(nrec);
  s.ms_consensus.resize(nrec);
  s.ms_consensus_se.resize(nrec);
  s.estimator_err_p95.resize(nrec);
  s.mean_cost.resize(nrec);
  s.mean_grad_norm.resize(nrec);
  s.mean_states.assign(nrec, MatrixXd::Zero(cfg.agents(), cfg.dim()));

  std::vector<double> buf(static_cast<size_t>(m));
  const auto mean_se = [&](auto&& get, double& mean, double& se) {
    double acc = 0.0;
    for (int r = 0; r < m; ++r) {
      buf[r] = get(r);
      acc += buf[r];
    }
    mean = acc / m;
    double var = 0.0;
    for (int r = 0; r < m; ++r) var += (buf[r] - mean) * (buf[r] - mean);
    se = m > 1 ? std::sqrt(var / double(m - 1)) / std::sqrt(double(m)) : 0.0;
  };

  std::vector<double> est(static_cast<size_t>(m));
  for (size_t ti = 0; ti < nrec; ++ti) {
    mean_se([&](int r) { return results[r].tracking[ti]; }, s.ms_tracking[ti],
            s.ms_tracking_se[ti]);
    mean_se([&](int r) { return results[r].consensus[ti]; }, s.ms_consensus[ti],
            s.ms_consensus_se[ti]);
    double cost = 0.0, gnorm = 0.0;
    for (int r = 0; r < m; ++r) {
      cost += results[r].cost[ti];
      gnorm += results[r].grad_norm[ti];
      s.mean_states[ti] += results[r].states[ti];
      est[r] = results[r].est_err[ti];
    }
    s.mean_cost[ti] = cost / m;
    s.mean_grad_norm[ti] = gnorm / m;
    s.mean_states[ti] /= double(m);
    s.estimator_err_p95[ti] = detail::percentile95(est);
  }
  for (int r = 0; r < m; ++r)
    s.zeta_sum_norm_final = std::max(s.zeta_sum_norm_final, results[r].zeta_sum_final);
  if (cfg.keep_states) {
    s.realization_states.reserve(m);
    for (int r = 0; r < m; ++r) s.realization_states.push_back(std::move(results[r].states));
  }
  return s;
}

// First recorded time at which the metric is <= threshold and stays <=
// 2*threshold for the rest of the horizon.
inline std::optional<double> settling_time(const std::vector<double>& times,
                                           const std::vector<double>& metric,
                                           double threshold) {
  if (!(threshold > 0.0)) throw Error("settling threshold must be positive");
  if (times.size() != metric.size()) throw ShapeMismatch("times/metric size mismatch");
  const size_t n = times.size();
  std::vector<char> suffix_ok(n, 0);
  bool ok = true;
  for (size_t i = n; i-- > 0;) {
    ok = ok && metric[i] <= 2.0 * threshold;
    suffix_ok[i] = ok;
  }
  for (size_t i = 0; i < n; ++i)
    if (metric[i] <= threshold && suffix_ok[i]) return times[i];
  return std::nullopt;
}

struct MsgeubCheck {
  bool pass = false;
  double min_margin = 0.0;  // min over t of envelope - metric
};

// metric(t) <= initial * exp(-rate t) + offset + 3 se(t) at every recorded t.
inline MsgeubCheck check_msgeub(const std::vector<double>& times,
                                const std::vector<double>& metric,
                                const std::vector<double>& se, double rate, double offset,
                                double initial_value) {
  if (!(rate > 0.0)) throw Error("check_msgeub needs a positive rate");
  MsgeubCheck c;
  c.min_margin = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < times.size(); ++i) {
    const double envelope =
        initial_value * std::exp(-rate * times[i]) + offset + 3.0 * se[i];
    c.min_margin = std::min(c.min_margin, envelope - metric[i]);
  }
  c.pass = c.min_margin >= 0.0;
  return c;
}

}  // namespace tvdo::montecarlo
