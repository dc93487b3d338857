#pragma once

// The three control laws: centralized protocol, fixed-time global-Hessian
// estimator, and distributed protocol, plus the sig^m / sign operators they
// are built from. The estimator state is matrix-valued (z_i estimates the
// mean Hessian); sig^p, sig^q and sign apply entrywise to matrix differences.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "tvdo/errors.hpp"
#include "tvdo/graph.hpp"
#include "tvdo/objectives.hpp"

namespace tvdo::protocols {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double sig_pow(double v, double m) {
  if (!(m > 0.0)) throw Error("sig exponent must be positive");
  if (m == 1.0) return v;  // identity case, exact
  if (v > 0.0) return std::pow(v, m);
  if (v < 0.0) return -std::pow(-v, m);
  return 0.0;
}

template <typename Derived>
auto sig_pow(const Eigen::MatrixBase<Derived>& v, double m) {
  if (!(m > 0.0)) throw Error("sig exponent must be positive");
  return v.unaryExpr([m](double e) { return sig_pow(e, m); }).eval();
}

// Entrywise sign with an optional boundary layer: eps <= 0 gives the exact
// discontinuous sign, eps > 0 replaces it by e / max(|e|, eps).
inline double bl_sign(double e, double eps) {
  if (eps > 0.0) return e / std::max(std::abs(e), eps);
  return e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0);
}

template <typename Derived>
auto bl_sign(const Eigen::MatrixBase<Derived>& v, double eps) {
  return v.unaryExpr([eps](double e) { return bl_sign(e, eps); }).eval();
}

struct CentralizedGains {
  double gamma1 = 0.0;

  void validate() const {
    if (!(gamma1 > 0.0)) throw Error("gamma1 must be positive");
  }
};

struct EstimatorGains {
  double alpha1 = 0.0, beta1 = 0.0, gamma2 = 0.0;
  double p = 0.0, q = 0.0;
  double boundary_layer = 0.0;  // 0 keeps the exact sign term

  void validate() const {
    if (!(alpha1 > 0.0 && beta1 > 0.0 && gamma2 > 0.0))
      throw Error("estimator gains must be positive");
    if (!(p > 0.0 && p < 1.0 && q > 1.0))
      throw InvalidExponents("estimator exponents need 0 < p < 1 < q");
  }
};

struct DistributedGains {
  double alpha2 = 0.0, beta2 = 0.0, gamma3 = 0.0, gamma4 = 0.0;
  double p = 0.0, q = 0.0;

  void validate() const {
    if (!(alpha2 > 0.0 && beta2 > 0.0 && gamma3 > 0.0 && gamma4 > 0.0))
      throw Error("distributed gains must be positive");
    if (!(p > 0.0 && p < 1.0 && q > 1.0))
      throw InvalidExponents("protocol exponents need 0 < p < 1 < q");
  }
};

// Per-agent auxiliary matrices zeta_i and outputs z_i = zeta_i + H_i(t, x_i).
struct EstimatorState {
  std::vector<MatrixXd> zeta;
  std::vector<MatrixXd> z;

  static EstimatorState zeros(int agents, int n) {
    EstimatorState s;
    s.zeta.assign(agents, MatrixXd::Zero(n, n));
    s.z.assign(agents, MatrixXd::Zero(n, n));
    return s;
  }
};

namespace detail {

inline double min_eigenvalue(const MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Solve a x = b for a symmetric near-PSD a. Falls back to a rank-revealing
// least-squares solve when a is numerically singular; a singular but
// consistent system (rhs in the range of a) is usable, an inconsistent one is
// not. The estimator output z_i can be exactly singular at t = 0 when an
// agent's Hessian has a zero eigenvalue and zeta starts at 0.
inline VectorXd solve_spd_or_consistent(const MatrixXd& a, const VectorXd& b,
                                        const char* who) {
  if (min_eigenvalue(a) >= 1e-10) return a.ldlt().solve(b);
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(a);
  const VectorXd x = cod.solve(b);
  if ((a * x - b).norm() > 1e-8 * std::max(1.0, b.norm()))
    throw SingularEstimatorMatrix(std::string(who) + ": singular and inconsistent system");
  return x;
}

}  // namespace detail

// u^c = -gamma1 grad - hess^{-1} grad_t, the inverse applied as a linear solve.
inline VectorXd centralized_control(double t, const VectorXd& x,
                                    const objectives::ObjectiveModel& model,
                                    const CentralizedGains& gains) {
  const MatrixXd h = model.hess(t, x);
  if (detail::min_eigenvalue(h) < 1e-10)
    throw SingularHessian("objective Hessian is numerically singular");
  return -gains.gamma1 * model.grad(t, x) - h.ldlt().solve(model.grad_t(t, x)).eval();
}

// zeta_dot_i = sum_j a~_ij (-alpha1 sig^p(z_i - z_j) - beta1 sig^q(z_i - z_j)
//                          - gamma2 sign(z_i - z_j)), entrywise on matrices.
inline std::vector<MatrixXd> estimator_rate(const std::vector<MatrixXd>& z,
                                            const graph::BalancedGraph& balanced,
                                            const EstimatorGains& gains) {
  const int agents = static_cast<int>(z.size());
  if (agents != balanced.n()) throw ShapeMismatch("estimator state count != graph size");
  for (const auto& zi : z)
    if (zi.rows() != z[0].rows() || zi.cols() != z[0].cols())
      throw ShapeMismatch("estimator matrices must share one shape");
  std::vector<MatrixXd> rate(agents, MatrixXd::Zero(z[0].rows(), z[0].cols()));
  for (int i = 0; i < agents; ++i) {
    for (int j = 0; j < agents; ++j) {
      const double w = balanced.a_tilde(i, j);
      if (w <= 0.0) continue;
      const MatrixXd d = z[i] - z[j];
      rate[i] -= w * (gains.alpha1 * sig_pow(d, gains.p) + gains.beta1 * sig_pow(d, gains.q) +
                      gains.gamma2 * bl_sign(d, gains.boundary_layer));
    }
  }
  return rate;
}

// u_i^d = sum_j a~_ij (-alpha2 sig^p(e_ij) - beta2 sig^q(e_ij) - gamma3 e_ij)
//         - gamma4 grad_i - z_i^{-1} grad_t_i,  e_ij = x_i - x_j.
// The gamma3 term uses sig = sig^1 = identity.
inline VectorXd distributed_control(int i, double t, const std::vector<VectorXd>& x,
                                    const MatrixXd& z_i,
                                    const objectives::ObjectiveModel& model,
                                    const graph::BalancedGraph& balanced,
                                    const DistributedGains& gains) {
  const int agents = static_cast<int>(x.size());
  if (agents != balanced.n()) throw ShapeMismatch("state count != graph size");
  VectorXd u = VectorXd::Zero(x[i].size());
  for (int j = 0; j < agents; ++j) {
    const double w = balanced.a_tilde(i, j);
    if (w <= 0.0) continue;
    const VectorXd e = x[i] - x[j];
    u -= w * (gains.alpha2 * sig_pow(e, gains.p) + gains.beta2 * sig_pow(e, gains.q) +
              gains.gamma3 * e);
  }
  u -= gains.gamma4 * model.grad(t, x[i]);
  u -= detail::solve_spd_or_consistent(z_i, model.grad_t(t, x[i]), "distributed_control");
  return u;
}

}  // namespace tvdo::protocols
