#pragma once

// Time-varying optimal trajectory x*_t of sum_i f_i(t, .): warm-started Newton
// on the stationarity condition sum grad_i = 0 (the reference), cross-checked
// by RK4 integration of dx*/dt = -(sum H_i)^{-1} sum grad_t_i.

#include <Eigen/Dense>
#include <vector>

#include "tvdo/errors.hpp"
#include "tvdo/objectives.hpp"

namespace tvdo::trajectory {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using objectives::ObjectiveModel;

struct TrajectoryPoint {
  double t = 0.0;
  VectorXd x_star;
  double gradient_residual = 0.0;  // || sum grad_i(t, x_star) ||
};

namespace detail {

inline VectorXd sum_grad(const std::vector<ObjectiveModel>& models, double t,
                         const VectorXd& x) {
  VectorXd g = VectorXd::Zero(x.size());
  for (const auto& m : models) g += m.grad(t, x);
  return g;
}

inline MatrixXd sum_hess(const std::vector<ObjectiveModel>& models, double t,
                         const VectorXd& x) {
  MatrixXd h = MatrixXd::Zero(x.size(), x.size());
  for (const auto& m : models) h += m.hess(t, x);
  return h;
}

inline VectorXd sum_grad_t(const std::vector<ObjectiveModel>& models, double t,
                           const VectorXd& x) {
  VectorXd g = VectorXd::Zero(x.size());
  for (const auto& m : models) g += m.grad_t(t, x);
  return g;
}

inline VectorXd solve_pd(const MatrixXd& h, const VectorXd& b) {
  Eigen::LDLT<MatrixXd> ldlt(h);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw SingularSystem("summed Hessian is not positive definite");
  return ldlt.solve(b);
}

}  // namespace detail

inline TrajectoryPoint newton_minimizer(const std::vector<ObjectiveModel>& models, double t,
                                        VectorXd guess, double tol = 1e-10,
                                        int max_iter = 50) {
  if (models.empty()) throw EmptySample("newton_minimizer needs at least one objective");
  VectorXd x = std::move(guess);
  double res = detail::sum_grad(models, t, x).norm();
  for (int it = 0; it < max_iter && res > tol; ++it) {
    x -= detail::solve_pd(detail::sum_hess(models, t, x), detail::sum_grad(models, t, x));
    res = detail::sum_grad(models, t, x).norm();
  }
  if (res > tol)
    throw NoConvergence("Newton did not reach the stationarity tolerance", res);
  return {t, std::move(x), res};
}

inline VectorXd trajectory_rate(const std::vector<ObjectiveModel>& models, double t,
                                const VectorXd& x_star) {
  if (detail::sum_grad(models, t, x_star).norm() > 1e-6)
    throw Error("trajectory_rate needs a stationary point (residual > 1e-6)");
  return -detail::solve_pd(detail::sum_hess(models, t, x_star),
                           detail::sum_grad_t(models, t, x_star))
              .eval();
}

struct TrackResult {
  std::vector<TrajectoryPoint> points;   // Newton series (the reference)
  std::vector<VectorXd> ode_points;      // RK4 series started at points[0]
  double max_divergence = 0.0;           // max || newton - ode || over the grid
};

inline TrackResult track_optimal(const std::vector<ObjectiveModel>& models,
                                 const std::vector<double>& t_grid,
                                 VectorXd initial_guess = VectorXd()) {
  if (t_grid.empty()) throw EmptySample("track_optimal needs a time grid");
  for (size_t k = 1; k < t_grid.size(); ++k)
    if (!(t_grid[k] > t_grid[k - 1])) throw Error("time grid must be increasing");

  const int n = models.front().dimension;
  if (initial_guess.size() == 0) initial_guess = VectorXd::Zero(n);

  TrackResult out;
  out.points.reserve(t_grid.size());
  VectorXd warm = initial_guess;
  for (double t : t_grid) {
    TrajectoryPoint p = newton_minimizer(models, t, warm);
    warm = p.x_star;
    out.points.push_back(std::move(p));
  }

  // Independent RK4 pass on the rate ODE; the right-hand side is evaluated
  // off the exact trajectory, so this drifts and only serves as a cross-check.
  const auto rhs = [&](double t, const VectorXd& x) {
    return (-detail::solve_pd(detail::sum_hess(models, t, x),
                              detail::sum_grad_t(models, t, x)))
        .eval();
  };
  out.ode_points.reserve(t_grid.size());
  VectorXd y = out.points.front().x_star;
  out.ode_points.push_back(y);
  for (size_t k = 1; k < t_grid.size(); ++k) {
    const double t0 = t_grid[k - 1];
    const double h = t_grid[k] - t0;
    const VectorXd k1 = rhs(t0, y);
    const VectorXd k2 = rhs(t0 + 0.5 * h, y + 0.5 * h * k1);
    const VectorXd k3 = rhs(t0 + 0.5 * h, y + 0.5 * h * k2);
    const VectorXd k4 = rhs(t0 + h, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.ode_points.push_back(y);
    out.max_divergence =
        std::max(out.max_divergence, (y - out.points[k].x_star).norm());
  }
  return out;
}

}  // namespace tvdo::trajectory
