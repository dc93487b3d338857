#pragma once

// Shared generators and property batteries for the unit and acceptance suites.
// Everything is driven by counter-based streams with fixed keys, so failures
// reproduce exactly.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tvdo/graph.hpp"
#include "tvdo/protocols.hpp"
#include "tvdo/rng.hpp"

namespace support {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class Rand {
 public:
  explicit Rand(std::uint64_t key) : u_(key) {}
  double uniform() { return u_(ctr_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int index(int n) { return std::min(n - 1, int(uniform() * n)); }
  double gauss() {
    // Box-Muller on two uniforms; fine for test generation
    const double u1 = std::max(uniform(), 1e-300);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * uniform());
  }
  VectorXd vector(int n, double scale = 1.0) {
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = scale * gauss();
    return v;
  }
  MatrixXd matrix(int r, int c, double scale = 1.0) {
    MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = scale * gauss();
    return m;
  }
  MatrixXd spd(int n) {
    const MatrixXd r = matrix(n, n);
    return r.transpose() * r + 0.1 * MatrixXd::Identity(n, n);
  }
  // connected symmetric weight matrix with zero diagonal
  MatrixXd connected_weights(int n, double wmax = 2.0) {
    MatrixXd w = MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {  // random spanning tree keeps it connected
      const int j = index(i);
      w(i, j) = w(j, i) = uniform(0.1, wmax);
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (w(i, j) == 0.0 && uniform() < 0.3) w(i, j) = w(j, i) = uniform(0.1, wmax);
    return w;
  }

 private:
  tvdo::rng::UniformStream u_;
  std::uint64_t ctr_ = 0;
};

// p-"norm" for any p > 0 (quasi-norm below 1)
inline double pnorm(const VectorXd& v, double p) {
  double acc = 0.0;
  for (int i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v(i)), p);
  return std::pow(acc, 1.0 / p);
}

inline double norm2(const MatrixXd& a) {
  return a.jacobiSvd().singularValues()(0);
}

// ---------------------------------------------------------------------------
// Property batteries (return the number of violations; 0 expected)

inline int laplacian_battery(int instances, std::uint64_t key) {
  Rand rnd(key);
  int bad = 0;
  for (int it = 0; it < instances; ++it) {
    const int n = 2 + rnd.index(10);
    const auto s = tvdo::graph::laplacian_and_spectrum(rnd.connected_weights(n));
    if (s.laplacian.rowwise().sum().cwiseAbs().maxCoeff() > 1e-12) ++bad;
    if (s.eigenvalues(0) < -1e-10 || s.eigenvalues(0) > 1e-10) ++bad;
    if (s.eigenvalues.minCoeff() < -1e-10) ++bad;
    if (!(s.lambda2 > 0.0)) ++bad;  // connected by construction
  }
  return bad;
}

inline int variational_battery(int vectors, std::uint64_t key) {
  Rand rnd(key);
  int bad = 0;
  const int graphs = 20;
  for (int g = 0; g < graphs; ++g) {
    const int n = 3 + rnd.index(8);
    const auto s = tvdo::graph::laplacian_and_spectrum(rnd.connected_weights(n));
    for (int it = 0; it < vectors / graphs; ++it) {
      VectorXd v = rnd.vector(n);
      v.array() -= v.mean();  // 1^T v = 0
      if (v.norm() < 1e-9) continue;
      const double q = v.dot(s.laplacian * v) / v.squaredNorm();
      if (q < s.lambda2 - 1e-9 || q > s.lambda_max + 1e-9) ++bad;
    }
  }
  return bad;
}

inline int weyl_battery(int instances, std::uint64_t key) {
  Rand rnd(key);
  int bad = 0;
  for (int it = 0; it < instances; ++it) {
    const int n = 2 + rnd.index(6);
    const MatrixXd a = rnd.spd(n), b = rnd.spd(n);
    Eigen::SelfAdjointEigenSolver<MatrixXd> ea(a, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eb(b, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eab(a + b, Eigen::EigenvaluesOnly);
    if (eab.eigenvalues()(0) < ea.eigenvalues()(0) + eb.eigenvalues()(0) - 1e-9) ++bad;
    if (eab.eigenvalues()(n - 1) >
        ea.eigenvalues()(n - 1) + eb.eigenvalues()(n - 1) + 1e-9)
      ++bad;
  }
  return bad;
}

inline int norm_inequality_battery(int instances, std::uint64_t key) {
  Rand rnd(key);
  int bad = 0;
  for (int it = 0; it < instances; ++it) {
    const int n = 1 + rnd.index(8);
    const VectorXd x = rnd.vector(n);
    const double p = rnd.uniform(0.2, 2.0);
    const double q = p + rnd.uniform(0.1, 2.0);
    const double np = pnorm(x, p), nq = pnorm(x, q);
    if (nq > np * (1.0 + 1e-12) + 1e-9) ++bad;
    if (np > std::pow(double(n), 1.0 / p - 1.0 / q) * nq * (1.0 + 1e-12) + 1e-9) ++bad;

    const MatrixXd a = rnd.matrix(n, n), b = rnd.matrix(n, n);
    const double a2 = norm2(a), af = a.norm();
    if (a2 > af + 1e-9) ++bad;
    if (af > std::sqrt(double(n)) * a2 + 1e-9) ++bad;
    if (norm2(a * b) > a2 * norm2(b) * (1.0 + 1e-12) + 1e-9) ++bad;

    // power sums over nonnegative entries
    const int m = 1 + rnd.index(8);
    VectorXd y(m);
    for (int i = 0; i < m; ++i) y(i) = std::abs(rnd.gauss());
    const double s = y.sum();
    double k = rnd.uniform(0.05, 0.95);
    double sk = 0.0;
    for (int i = 0; i < m; ++i) sk += std::pow(y(i), k);
    if (std::pow(s, k) > sk * (1.0 + 1e-12) + 1e-9) ++bad;
    if (sk > std::pow(double(m), 1.0 - k) * std::pow(s, k) * (1.0 + 1e-12) + 1e-9) ++bad;
    k = 1.0 + rnd.uniform(0.05, 3.0);
    sk = 0.0;
    for (int i = 0; i < m; ++i) sk += std::pow(y(i), k);
    if (sk > std::pow(s, k) * (1.0 + 1e-12) + 1e-9) ++bad;
    if (std::pow(s, k) > std::pow(double(m), k - 1.0) * sk * (1.0 + 1e-12) + 1e-9) ++bad;
  }
  return bad;
}

inline int zero_sum_battery(int instances, std::uint64_t key) {
  Rand rnd(key);
  int bad = 0;
  for (int it = 0; it < instances; ++it) {
    const int n = 2 + rnd.index(8);
    const MatrixXd w = rnd.connected_weights(n);
    std::vector<VectorXd> x;
    for (int i = 0; i < n; ++i) x.push_back(rnd.vector(2));
    for (const double m : {0.5, 1.2, -1.0, 1.0}) {  // -1 marks sign()
      VectorXd acc = VectorXd::Zero(2);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (w(i, j) <= 0.0) continue;
          const VectorXd d = x[i] - x[j];
          acc += w(i, j) * (m < 0.0 ? tvdo::protocols::bl_sign(d, 0.0)
                                    : tvdo::protocols::sig_pow(d, m));
        }
      if (acc.cwiseAbs().maxCoeff() > 1e-10) ++bad;
    }
  }
  return bad;
}

inline int sig_oddness_battery(int instances, std::uint64_t key) {
  Rand rnd(key);
  int bad = 0;
  for (int it = 0; it < instances; ++it) {
    const VectorXd v = rnd.vector(1 + rnd.index(6), rnd.uniform(0.1, 10.0));
    const double m = rnd.uniform(0.1, 3.0);
    const VectorXd a = tvdo::protocols::sig_pow(VectorXd(-v), m);
    const VectorXd b = -tvdo::protocols::sig_pow(v, m);
    if (a != b) ++bad;  // exact oddness
  }
  return bad;
}

inline int inverse_mean_hessian_battery(
    int instances, std::uint64_t key,
    const std::vector<tvdo::objectives::ObjectiveModel>& models) {
  Rand rnd(key);
  const int N = static_cast<int>(models.size());
  const int n = models.front().dimension;
  int bad = 0;
  for (int it = 0; it < instances; ++it) {
    const double t = rnd.uniform(0.0, 10.0);
    MatrixXd mean = MatrixXd::Zero(n, n);
    double lam_sum = 0.0;
    for (int i = 0; i < N; ++i) {
      const MatrixXd h = models[i].hess(t, rnd.vector(n, 5.0));
      mean += h;
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(h, Eigen::EigenvaluesOnly);
      lam_sum += es.eigenvalues().minCoeff();
    }
    mean /= double(N);
    const double inv_norm = norm2(mean.inverse());
    if (lam_sum > 0.0 && inv_norm > double(N) / lam_sum + 1e-9) ++bad;
  }
  return bad;
}

}  // namespace support
