#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"
#include "tvdo/graph.hpp"
#include "tvdo/montecarlo.hpp"
#include "tvdo/objectives.hpp"

using namespace tvdo;
using namespace tvdo::montecarlo;
using Catch::Approx;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

EnsembleConfig centralized_tracking(int realizations, double sigma) {
  EnsembleConfig cfg;
  cfg.mode = Mode::centralized;
  cfg.realizations = realizations;
  cfg.root_seed = 555;
  cfg.dt = 1e-3;
  cfg.horizon = 10.0;
  cfg.record_stride = 100;
  cfg.initial_states = {vec2(1.0, 1.0)};
  cfg.cgains = {1.0};
  cfg.models = {objectives::make_tracking_quadratic(
      "tq", {TimeFn::constant(1), TimeFn::constant(1)},
      {TimeFn::linear(), TimeFn::constant(0)})};
  if (sigma > 0.0) {
    cfg.diffusion.name = "constant";
    cfg.diffusion.diag = {TimeFn::constant(sigma), TimeFn::constant(sigma)};
    cfg.diffusion.sigma_bar = sigma * std::sqrt(2.0);
  } else {
    cfg.diffusion = sde::DiffusionSpec::zero(2);
  }
  return cfg;
}

EnsembleConfig small_distributed(int realizations, double horizon, std::uint64_t seed) {
  EnsembleConfig cfg;
  cfg.mode = Mode::distributed;
  cfg.realizations = realizations;
  cfg.root_seed = seed;
  cfg.dt = 1e-3;
  cfg.horizon = horizon;
  cfg.record_stride = 50;
  cfg.initial_states = {vec2(1, 2), vec2(-1, 0), vec2(0.5, -1.5)};
  cfg.egains = {0.5, 0.5, 1.0, 0.8, 1.2, 0.05};
  cfg.dgains = {2.0, 2.0, 1.0, 2.0, 0.8, 1.2};
  MatrixXd w(3, 3);
  w << 0, 1, 0.5, 1, 0, 1, 0.5, 1, 0;
  cfg.balanced = graph::BalancedGraph::from_symmetric(w);
  cfg.models = {objectives::example2_model(3), objectives::example2_model(4),
                objectives::example2_model(12)};
  cfg.diffusion = sde::DiffusionSpec::example_trig();
  return cfg;
}

}  // namespace

TEST_CASE("noiseless centralized tracking decays to the floor", "[montecarlo]") {
  auto cfg = centralized_tracking(1, 0.0);
  const auto s = run_ensemble(cfg);
  // exact feed-forward: monotone decay, below 1e-6 by t = 10/gamma1
  for (size_t i = 1; i < s.times.size(); ++i)
    CHECK(s.ms_tracking[i] <= s.ms_tracking[i - 1] + 1e-15);
  CHECK(s.ms_tracking.back() <= 1e-6);
  CHECK(s.ms_consensus.back() == 0.0);
}

TEST_CASE("ensembles are deterministic and thread-invariant", "[montecarlo]") {
  auto cfg = small_distributed(6, 0.5, 77);
  cfg.threads = 1;
  const auto a = run_ensemble(cfg);
  cfg.threads = 2;
  const auto b = run_ensemble(cfg);
  const auto c = run_ensemble(cfg);
  CHECK(a.ms_tracking == b.ms_tracking);
  CHECK(a.ms_consensus == b.ms_consensus);
  CHECK(a.estimator_err_p95 == b.estimator_err_p95);
  CHECK(b.ms_tracking == c.ms_tracking);
  for (size_t i = 0; i < a.mean_states.size(); ++i)
    CHECK(a.mean_states[i] == b.mean_states[i]);
}

TEST_CASE("identical agents stay in exact consensus", "[montecarlo]") {
  EnsembleConfig cfg;
  cfg.mode = Mode::distributed;
  cfg.realizations = 1;
  cfg.root_seed = 3;
  cfg.dt = 1e-3;
  cfg.horizon = 0.5;
  cfg.record_stride = 50;
  cfg.initial_states = {vec2(0.3, -0.7), vec2(0.3, -0.7), vec2(0.3, -0.7)};
  cfg.egains = {0.5, 0.5, 1.0, 0.8, 1.2, 0.0};
  cfg.dgains = {2.0, 2.0, 1.0, 2.0, 0.8, 1.2};
  MatrixXd w(3, 3);
  w << 0, 1, 1, 1, 0, 1, 1, 1, 0;
  cfg.balanced = graph::BalancedGraph::from_symmetric(w);
  cfg.models = {objectives::example2_model(4), objectives::example2_model(4),
                objectives::example2_model(4)};
  cfg.diffusion = sde::DiffusionSpec::zero(2);  // same dynamics, same inputs
  const auto s = run_ensemble(cfg);
  for (const auto& states : s.mean_states) {  // states stay bitwise identical
    CHECK(states.row(0) == states.row(1));
    CHECK(states.row(0) == states.row(2));
  }
  // the metric itself only picks up rounding dust from the mean
  for (double v : s.ms_consensus) CHECK(v <= 1e-30);
}

TEST_CASE("estimator conservation over a long coupled run", "[montecarlo]") {
  auto cfg = small_distributed(1, 10.0, 9);  // 1e4 coupled steps, symmetric weights
  const auto s = run_ensemble(cfg);
  CHECK(s.zeta_sum_norm_final <= 1e-9);
}

TEST_CASE("standard errors scale like 1/sqrt(M)", "[montecarlo]") {
  auto cfg = centralized_tracking(64, 0.4);
  const auto full = run_ensemble(cfg);
  cfg.realizations = 32;  // same root seed: the first half of the same streams
  const auto half = run_ensemble(cfg);
  const size_t last = full.times.size() - 1;
  const double ratio = half.ms_tracking_se[last] / full.ms_tracking_se[last];
  CHECK(ratio == Approx(std::sqrt(2.0)).epsilon(0.20));
}

TEST_CASE("settling time definition", "[montecarlo]") {
  const std::vector<double> times{0, 1, 2, 3};
  const std::vector<double> metric{5, 2, 0.5, 0.3};
  const auto tau = settling_time(times, metric, 1.0);
  REQUIRE(tau.has_value());
  CHECK(*tau == 2.0);

  const std::vector<double> flat{5, 5, 5, 5};
  CHECK_FALSE(settling_time(times, flat, 1.0).has_value());

  // dips below but bounces above 2x threshold later: not settled at the dip
  const std::vector<double> bounce{5, 0.5, 3.0, 0.4};
  const auto tb = settling_time(times, bounce, 1.0);
  REQUIRE(tb.has_value());
  CHECK(*tb == 3.0);

  CHECK_THROWS_AS(settling_time(times, metric, 0.0), Error);
}

TEST_CASE("mean-square envelope check", "[montecarlo]") {
  const std::vector<double> times{0, 1, 2, 3, 4};
  const double rate = 0.5, offset = 0.2, initial = 3.0;
  std::vector<double> on_envelope, se(times.size(), 0.0);
  for (double t : times) on_envelope.push_back(initial * std::exp(-rate * t) + offset);
  const auto ok = check_msgeub(times, on_envelope, se, rate, offset, initial);
  CHECK(ok.pass);
  CHECK(ok.min_margin == Approx(0.0).margin(1e-12));

  auto exceed = on_envelope;
  exceed.back() += 0.5;  // well above the offset at late time, se = 0
  const auto bad = check_msgeub(times, exceed, se, rate, offset, initial);
  CHECK_FALSE(bad.pass);
  CHECK(bad.min_margin < 0.0);

  CHECK_THROWS_AS(check_msgeub(times, on_envelope, se, -0.1, offset, initial), Error);
}

TEST_CASE("halving the step leaves the ensemble statistics unchanged", "[montecarlo][sde]") {
  // weak-convergence sanity gate on the centralized benchmark system
  EnsembleConfig cfg;
  cfg.mode = Mode::centralized;
  cfg.realizations = 50;
  cfg.root_seed = 99;
  cfg.horizon = 5.0;
  cfg.initial_states = {vec2(-5.0, 5.0)};
  cfg.cgains = {0.7};
  cfg.models = {objectives::example1_model()};
  cfg.diffusion = sde::DiffusionSpec::example_trig();

  cfg.dt = 1e-3;
  cfg.record_stride = 5000;
  const auto coarse = run_ensemble(cfg);
  cfg.dt = 5e-4;
  cfg.record_stride = 10000;
  const auto fine = run_ensemble(cfg);

  const size_t ia = coarse.times.size() - 1, ib = fine.times.size() - 1;
  REQUIRE(coarse.times[ia] == Approx(5.0));
  REQUIRE(fine.times[ib] == Approx(5.0));
  const double gap = std::abs(coarse.ms_tracking[ia] - fine.ms_tracking[ib]);
  const double se = std::sqrt(coarse.ms_tracking_se[ia] * coarse.ms_tracking_se[ia] +
                              fine.ms_tracking_se[ib] * fine.ms_tracking_se[ib]);
  CHECK(gap <= 3.0 * se);
}

TEST_CASE("per-realization states are exposed on request", "[montecarlo]") {
  auto cfg = small_distributed(3, 0.2, 5);
  cfg.keep_states = true;
  const auto s = run_ensemble(cfg);
  REQUIRE(s.realization_states.size() == 3);
  REQUIRE(s.realization_states[0].size() == s.times.size());
  // the ensemble mean matches the stored realizations
  MatrixXd mean = MatrixXd::Zero(3, 2);
  for (int r = 0; r < 3; ++r) mean += s.realization_states[r].back();
  mean /= 3.0;
  CHECK((mean - s.mean_states.back()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("config validation catches structural errors", "[montecarlo]") {
  auto cfg = centralized_tracking(1, 0.0);
  cfg.horizon = 0.0105;  // not an integral number of steps
  CHECK_THROWS_AS(run_ensemble(cfg), Error);
  cfg = centralized_tracking(0, 0.0);
  CHECK_THROWS_AS(run_ensemble(cfg), Error);
  cfg = small_distributed(1, 0.5, 1);
  cfg.models.pop_back();
  CHECK_THROWS_AS(run_ensemble(cfg), Error);
}
