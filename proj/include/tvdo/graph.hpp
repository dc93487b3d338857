#pragma once

// Communication topology: weighted digraphs, detail-balance reweighting and
// Laplacian spectra. Edge convention follows the adjacency matrix A = [a_ij]
// with a_ij > 0 iff agent i can receive from agent j, and a_ii = 0.

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tvdo/errors.hpp"

namespace tvdo::graph {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct WeightedDigraph {
  MatrixXd weights;  // N x N, nonnegative, zero diagonal

  int n() const { return static_cast<int>(weights.rows()); }

  static WeightedDigraph from_matrix(MatrixXd a) {
    if (a.rows() != a.cols() || a.rows() < 1)
      throw Error("adjacency matrix must be square and nonempty");
    for (int i = 0; i < a.rows(); ++i) {
      if (a(i, i) != 0.0) throw Error("adjacency diagonal must be zero (a_ii = 0)");
      for (int j = 0; j < a.cols(); ++j) {
        if (!(a(i, j) >= 0.0)) throw Error("adjacency weights must be nonnegative finite");
      }
    }
    return WeightedDigraph{std::move(a)};
  }
};

enum class BalanceMode { strict, least_squares, symmetrize };

inline const char* to_string(BalanceMode m) {
  switch (m) {
    case BalanceMode::strict: return "strict";
    case BalanceMode::least_squares: return "least-squares";
    default: return "symmetrize";
  }
}

// Detail-balance weights and the symmetrized matrix actually used by the
// protocols: a_tilde = (D A + (D A)^T)/2 with D = diag(xi). residual is the
// antisymmetric defect of D A before symmetrization, sqrt(sum_{i<j} (d_ij -
// d_ji)^2); it is 0 exactly when the graph is detail balanced under xi.
struct BalancedGraph {
  VectorXd xi;
  MatrixXd a_tilde;
  double residual = 0.0;
  BalanceMode mode = BalanceMode::strict;

  int n() const { return static_cast<int>(a_tilde.rows()); }

  // Wrap an already-symmetric weight matrix (xi = 1), for tests and synthetic runs.
  static BalancedGraph from_symmetric(MatrixXd w) {
    BalancedGraph b;
    b.xi = VectorXd::Ones(w.rows());
    b.a_tilde = std::move(w);
    b.residual = 0.0;
    b.mode = BalanceMode::symmetrize;
    return b;
  }
};

struct SpectralSummary {
  MatrixXd laplacian;
  VectorXd eigenvalues;  // ascending
  double lambda2 = 0.0;
  double lambda_max = 0.0;
};

inline bool is_strongly_connected(const WeightedDigraph& g) {
  const int n = g.n();
  const auto reach_all = [&](bool transpose) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        const double w = transpose ? g.weights(u, v) : g.weights(v, u);
        if (w > 0.0 && !seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == n;
  };
  return reach_all(false) && reach_all(true);
}

namespace detail {

// Minimizer of sum (xi_i a_ij - xi_j a_ji)^2 over the unit sphere: smallest
// eigenvector of the PSD defect form.
inline VectorXd least_squares_xi(const MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  MatrixXd m = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (a(i, j) > 0.0 || a(j, i) > 0.0) {
        m(i, i) += a(i, j) * a(i, j);
        m(j, j) += a(j, i) * a(j, i);
        m(i, j) -= a(i, j) * a(j, i);
        m(j, i) -= a(i, j) * a(j, i);
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  VectorXd xi = es.eigenvectors().col(0);
  if (xi.sum() < 0.0) xi = -xi;
  if (xi.minCoeff() > 0.0) return xi;

  // Degenerate eigenvector: fall back to the log-domain least-squares fit over
  // mutual edges, which is positive by construction.
  MatrixXd lap = MatrixXd::Zero(n, n);
  VectorXd rhs = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && a(i, j) > 0.0 && a(j, i) > 0.0) {
        lap(i, i) += 1.0;
        lap(i, j) -= 1.0;
        rhs(i) += std::log(a(j, i) / a(i, j));
      }
    }
  }
  lap.row(0).setZero();
  lap(0, 0) = 1.0;
  rhs(0) = 0.0;
  const VectorXd y = lap.colPivHouseholderQr().solve(rhs);
  return y.array().exp().matrix();
}

}  // namespace detail

inline BalancedGraph detail_balance(const WeightedDigraph& g, BalanceMode mode) {
  if (!is_strongly_connected(g))
    throw NotStronglyConnected("graph is not strongly connected");
  const int n = g.n();
  const MatrixXd& a = g.weights;
  BalancedGraph out;
  out.mode = mode;

  VectorXd xi = VectorXd::Ones(n);
  if (mode == BalanceMode::strict) {
    // xi_i a_ij = xi_j a_ji forces mutual edges.
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if ((a(i, j) > 0.0) != (a(j, i) > 0.0))
          throw NotDetailBalanced("one-directional edge breaks detail balance", i, j);
    // Propagate over a spanning tree of the (now symmetric) support graph.
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      for (int j = 0; j < n; ++j) {
        if (!seen[j] && a(i, j) > 0.0) {
          xi(j) = xi(i) * a(i, j) / a(j, i);
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    // Full consistency check across every edge.
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (a(i, j) > 0.0) {
          const double lhs = xi(i) * a(i, j);
          const double rhs = xi(j) * a(j, i);
          if (std::abs(lhs - rhs) > 1e-9 * std::max({1.0, lhs, rhs}))
            throw NotDetailBalanced("detail-balance propagation is inconsistent", i, j);
        }
      }
    }
  } else if (mode == BalanceMode::least_squares) {
    xi = detail::least_squares_xi(a);
  }
  // symmetrize mode keeps xi = 1.

  xi /= xi.minCoeff();
  out.xi = xi;
  const MatrixXd d = xi.asDiagonal() * a;
  out.residual = std::sqrt(0.5 * (d - d.transpose()).squaredNorm());
  out.a_tilde = 0.5 * (d + d.transpose());
  if (mode == BalanceMode::strict) out.residual = 0.0;
  return out;
}

inline SpectralSummary laplacian_and_spectrum(const MatrixXd& w) {
  const int n = static_cast<int>(w.rows());
  if (w.cols() != n || n < 2) throw Error("weight matrix must be square with n >= 2");
  const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
  if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw AsymmetricInput("laplacian_and_spectrum requires a symmetric weight matrix");
  MatrixXd lap = MatrixXd::Zero(n, n);
  lap.diagonal() = w.rowwise().sum();
  lap -= w;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(lap, Eigen::EigenvaluesOnly);
  SpectralSummary s;
  s.laplacian = std::move(lap);
  s.eigenvalues = es.eigenvalues();
  s.lambda2 = s.eigenvalues(1);
  s.lambda_max = s.eigenvalues(n - 1);
  return s;
}

// Laplacian of [a_tilde_ij^exponent] with 0^exponent = 0 so absent edges stay absent.
inline SpectralSummary reweighted_laplacian(const BalancedGraph& b, double exponent) {
  if (!(exponent > 0.0)) throw Error("reweighting exponent must be positive");
  const int n = b.n();
  MatrixXd w = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (b.a_tilde(i, j) > 0.0) w(i, j) = std::pow(b.a_tilde(i, j), exponent);
  return laplacian_and_spectrum(w);
}

inline MatrixXd load_adjacency_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open adjacency file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  const int n = static_cast<int>(rows.size());
  MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw Error("adjacency file is not square: " + path);
    for (int j = 0; j < n; ++j) a(i, j) = rows[i][j];
  }
  return a;
}

}  // namespace tvdo::graph
