#pragma once

// Seeded Brownian increments and explicit Euler-Maruyama integration of
// dx = b dt + sigma dB. Strong order 0.5; the protocols carry discontinuous
// sign terms, which rules out higher-order smooth schemes.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "tvdo/errors.hpp"
#include "tvdo/rng.hpp"
#include "tvdo/timefn.hpp"

namespace tvdo::sde {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct BrownianPath {
  std::uint64_t seed = 0;
  double dt = 0.0;
  long steps = 0;
  int dim = 0;
  MatrixXd increments;  // steps x dim, each entry ~ N(0, dt)
};

inline BrownianPath brownian_increments(std::uint64_t seed, int dim, long steps, double dt) {
  if (!(dt > 0.0) || steps < 1 || dim < 1)
    throw Error("brownian_increments needs dt > 0, steps >= 1, dim >= 1");
  BrownianPath p{seed, dt, steps, dim, MatrixXd(steps, dim)};
  rng::NormalStream normal(seed);
  const double s = std::sqrt(dt);
  for (long k = 0; k < steps; ++k)
    for (int d = 0; d < dim; ++d)
      p.increments(k, d) = s * normal(std::uint64_t(k) * dim + d);
  return p;
}

struct SdeState {
  double t = 0.0;
  VectorXd x;
};

inline SdeState euler_maruyama_step(const SdeState& s, const VectorXd& drift,
                                    const MatrixXd& diffusion, double dt, const VectorXd& dW) {
  if (!(dt > 0.0)) throw Error("euler_maruyama_step needs dt > 0");
  SdeState next;
  next.t = s.t + dt;
  next.x = s.x + drift * dt + diffusion * dW;
  return next;
}

using DriftFn = std::function<VectorXd(double, const VectorXd&)>;
using DiffusionFn = std::function<MatrixXd(double, const VectorXd&)>;

// Records state 0, every record_stride-th state and the final one.
inline std::vector<SdeState> integrate(const DriftFn& drift, const DiffusionFn& diffusion,
                                       const VectorXd& x0, double horizon, double dt,
                                       const BrownianPath& path, long record_stride = 1) {
  const long steps = path.steps;
  if (std::abs(horizon - double(steps) * dt) > 1e-9 * std::max(1.0, horizon))
    throw Error("horizon does not match path length (steps * dt)");
  if (record_stride < 1) record_stride = 1;
  std::vector<SdeState> out;
  out.reserve(size_t(steps / record_stride) + 2);
  SdeState s{0.0, x0};
  out.push_back(s);
  for (long k = 0; k < steps; ++k) {
    s = euler_maruyama_step(s, drift(s.t, s.x), diffusion(s.t, s.x), dt,
                            path.increments.row(k).transpose());
    if (!s.x.allFinite())
      throw NonFiniteState("state diverged during integration", k + 1);
    if ((k + 1) % record_stride == 0 || k + 1 == steps) out.push_back(s);
  }
  return out;
}

// Diagonal diffusion with time-coefficient entries and a declared Frobenius
// bound sigma_bar.
struct DiffusionSpec {
  std::string name = "zero";
  std::vector<TimeFn> diag;
  double sigma_bar = 0.0;

  int dim() const { return static_cast<int>(diag.size()); }

  MatrixXd matrix(double t) const {
    const int n = dim();
    MatrixXd s = MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) s(k, k) = diag[k].value(t);
    return s;
  }

  bool is_zero() const {
    for (const auto& f : diag)
      if (!f.empty()) return false;
    return true;
  }

  // diag(0.5 sin(pi t), 0.5 cos(pi t)); ||sigma||_F = 0.5 for all t.
  static DiffusionSpec example_trig() {
    DiffusionSpec s;
    s.name = "example-trig";
    s.diag = {TimeFn::sin(0.5), TimeFn::cos(0.5)};
    s.sigma_bar = 0.5;
    return s;
  }

  static DiffusionSpec zero(int n) {
    DiffusionSpec s;
    s.name = "zero";
    s.diag.assign(n, TimeFn{});
    s.sigma_bar = 0.0;
    return s;
  }
};

}  // namespace tvdo::sde
