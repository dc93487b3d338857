#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"
#include "tvdo/rng.hpp"
#include "tvdo/sde.hpp"

using namespace tvdo;
using namespace tvdo::sde;
using Catch::Approx;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("philox matches the published test vectors", "[sde]") {
  // philox4x32-10 known answers (zero and all-ones counter/key)
  const auto w0 = rng::Philox4x32(0).block(0, 0);
  CHECK(w0[0] == 0x6627e8d5u);
  CHECK(w0[1] == 0xe169c58du);
  CHECK(w0[2] == 0xbc57ac4cu);
  CHECK(w0[3] == 0x9b00dbd8u);
  const auto w1 = rng::Philox4x32(~0ULL).block(~0ULL, ~0ULL);
  CHECK(w1[0] == 0x408f276du);
  CHECK(w1[1] == 0x41c83b0eu);
  CHECK(w1[2] == 0xa20bc7c6u);
  CHECK(w1[3] == 0x6d5451fdu);
}

TEST_CASE("brownian increments are deterministic in the seed", "[sde]") {
  const auto a = brownian_increments(42, 3, 1000, 1e-3);
  const auto b = brownian_increments(42, 3, 1000, 1e-3);
  CHECK(a.increments == b.increments);
  const auto c = brownian_increments(43, 3, 1000, 1e-3);
  CHECK(a.increments != c.increments);
}

TEST_CASE("brownian increments have the right moments", "[sde]") {
  const long n = 1000000;
  const double dt = 1e-3;
  const auto p = brownian_increments(7, 1, n, dt);
  const double mean = p.increments.col(0).mean();
  const double var =
      (p.increments.col(0).array() - mean).square().sum() / double(n - 1);
  // 5 sigma gates: sd(mean) = sqrt(dt/n), sd(var) ~ dt*sqrt(2/(n-1))
  CHECK(std::abs(mean) < 5.0 * std::sqrt(dt / double(n)));
  CHECK(std::abs(var - dt) < 5.0 * dt * std::sqrt(2.0 / double(n - 1)));
}

TEST_CASE("increments scale exactly with sqrt(dt)", "[sde]") {
  const auto a = brownian_increments(9, 2, 100, 1e-3);
  const auto b = brownian_increments(9, 2, 100, 4e-3);
  CHECK((b.increments - 2.0 * a.increments).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("euler_maruyama_step basics", "[sde]") {
  VectorXd x0 = VectorXd::Zero(2);
  VectorXd drift(2);
  drift << 3.0, -1.0;
  SdeState s{0.0, x0};
  const auto next = euler_maruyama_step(s, drift, MatrixXd::Zero(2, 2), 0.5,
                                        VectorXd::Ones(2));
  CHECK(next.x(0) == Approx(1.5).margin(0));
  CHECK(next.x(1) == Approx(-0.5).margin(0));
  CHECK(next.t == 0.5);

  VectorXd dw(2);
  dw << 0.3, -0.7;
  const auto n2 = euler_maruyama_step(s, VectorXd::Zero(2), MatrixXd::Identity(2, 2), 1e-3, dw);
  CHECK(n2.x == dw);
}

TEST_CASE("integrate: deterministic cases", "[sde]") {
  const auto zero_drift = [](double, const VectorXd& x) { return VectorXd::Zero(x.size()); };
  const auto zero_diff = [](double, const VectorXd& x) {
    return MatrixXd::Zero(x.size(), x.size()).eval();
  };
  VectorXd x0(2);
  x0 << 2.0, -1.0;
  const auto path = brownian_increments(1, 2, 1000, 1e-3);
  const auto series = integrate(zero_drift, zero_diff, x0, 1.0, 1e-3, path, 100);
  for (const auto& s : series) CHECK((s.x - x0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(series.back().t == Approx(1.0).margin(1e-12));

  const auto unit_drift = [](double, const VectorXd&) {
    VectorXd d(2);
    d << 1.0, 0.0;
    return d;
  };
  const auto s2 = integrate(unit_drift, zero_diff, x0, 1.0, 1e-3, path, 100);
  CHECK(std::abs(s2.back().x(0) - 3.0) < 1e-12);
  CHECK(s2.back().x(1) == -1.0);
}

TEST_CASE("integrate flags horizon mismatch and divergence", "[sde]") {
  const auto path = brownian_increments(1, 1, 10, 1e-3);
  const auto drift = [](double, const VectorXd& x) { return (x.array().pow(3)).matrix().eval(); };
  const auto diff = [](double, const VectorXd&) { return MatrixXd::Zero(1, 1).eval(); };
  CHECK_THROWS_AS(
      integrate(drift, diff, VectorXd::Ones(1), 2.0, 1e-3, path, 1), Error);
  const auto big = brownian_increments(1, 1, 20000, 1e-3);
  try {
    integrate(drift, diff, 30.0 * VectorXd::Ones(1), 20.0, 1e-3, big, 1);
    FAIL("expected NonFiniteState");
  } catch (const NonFiniteState& e) {
    CHECK(e.step > 0);
  }
}

TEST_CASE("Ornstein-Uhlenbeck moments", "[sde][slow]") {
  // dx = -x dt + dB from x0 = 1: E x(1) = e^{-1}, Var x(1) = (1 - e^{-2})/2
  const int paths = 2000;
  const double dt = 1e-3;
  const long steps = 1000;
  std::vector<double> xs(paths);
  for (int r = 0; r < paths; ++r) {
    rng::NormalStream normal(rng::derive_stream(2024, r));
    double x = 1.0;
    for (long k = 0; k < steps; ++k) x += -x * dt + std::sqrt(dt) * normal(k);
    xs[r] = x;
  }
  double mean = 0.0;
  for (double v : xs) mean += v;
  mean /= paths;
  double var = 0.0;
  for (double v : xs) var += (v - mean) * (v - mean);
  var /= (paths - 1);
  const double se_mean = std::sqrt(var / paths);
  const double se_var = var * std::sqrt(2.0 / (paths - 1));
  CHECK(std::abs(mean - std::exp(-1.0)) < 3.0 * se_mean);
  CHECK(std::abs(var - 0.5 * (1.0 - std::exp(-2.0))) < 3.0 * se_var);
}

TEST_CASE("diffusion specs", "[sde]") {
  const auto trig = DiffusionSpec::example_trig();
  for (double t = 0.0; t < 4.0; t += 0.1) {
    CHECK(trig.matrix(t).norm() <= trig.sigma_bar + 1e-12);
    CHECK(trig.matrix(t)(0, 1) == 0.0);
  }
  CHECK(trig.matrix(0.5)(0, 0) == Approx(0.5).epsilon(1e-12));  // 0.5 sin(pi/2)
  CHECK(DiffusionSpec::zero(3).is_zero());
  CHECK_FALSE(trig.is_zero());
}
