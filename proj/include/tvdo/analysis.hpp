#pragma once

// Closed-form constants and bounds of the four convergence results, plus a
// numerical generator evaluation for quadratic Lyapunov functions. Failed gain
// conditions surface as flags and +inf bounds, never as negative numbers and
// never as aborts.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "tvdo/errors.hpp"

namespace tvdo::analysis {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct CentralizedBound {
  double rate = 0.0;    // 2 gamma1 l1 - 2 l2 / h
  double offset = 0.0;  // sigma_bar^2 h / (2 gamma1 l1 h - 2 l2)
  bool condition_ok = false;
};

inline CentralizedBound msgeub_centralized(double gamma1, double l1, double l2, double h,
                                           double sigma_bar) {
  CentralizedBound b;
  if (!(h > 0.0)) {
    b.rate = -kInf;
    b.offset = kInf;
    return b;
  }
  b.rate = 2.0 * gamma1 * l1 - 2.0 * l2 / h;
  b.condition_ok = b.rate > 0.0;
  b.offset = b.condition_ok ? sigma_bar * sigma_bar * h / (2.0 * gamma1 * l1 * h - 2.0 * l2)
                            : kInf;
  return b;
}

inline double fixed_time_T1(double alpha1, double beta1, double p, double q,
                            double lambda2_Lp, double lambda2_Lq, int n, int N) {
  if (!(p > 0.0 && p < 1.0 && q > 1.0))
    throw InvalidExponents("fixed_time_T1 needs 0 < p < 1 < q");
  if (!(alpha1 > 0.0 && beta1 > 0.0 && lambda2_Lp > 0.0 && lambda2_Lq > 0.0 && n >= 1 &&
        N >= 1))
    throw Error("fixed_time_T1 needs positive gains and eigenvalues");
  const double first =
      1.0 / (std::pow(2.0, p) * alpha1 * std::pow(lambda2_Lp, 0.5 * (p + 1.0)) * (1.0 - p));
  const double second = std::pow(double(n), 0.5 * (q - 1.0)) * std::pow(double(N), q - 1.0) /
                        (std::pow(2.0, q) * beta1 * std::pow(lambda2_Lq, 0.5 * (q + 1.0)) *
                         (q - 1.0));
  return first + second;
}

struct ConsensusConstants {
  double k1 = 0.0, k2 = 0.0, k3 = 0.0;
  double delta = 0.0;
  double m1 = 0.0, m2 = 0.0;
  double T2 = 0.0;
  bool applicable = false;  // m1 > 0 and m2 > 0 with finite k3
  std::vector<std::string> flags;
};

inline ConsensusConstants consensus_constants(double alpha2, double beta2, double gamma4,
                                              double p, double q, double lambda2_Lp,
                                              double lambda2_Lq, double L2, double L3,
                                              double L4, double L5, double h_d,
                                              double sigma_bar, double theta, int n, int N) {
  if (!(theta > 0.0 && theta < 1.0)) throw InvalidTheta("theta must lie in (0,1)");
  if (!(p > 0.0 && p < 1.0 && q > 1.0))
    throw InvalidExponents("consensus_constants needs 0 < p < 1 < q");
  ConsensusConstants c;
  c.k1 = std::pow(2.0, p) * alpha2 * std::pow(lambda2_Lp, 0.5 * (p + 1.0));
  c.k2 = std::pow(2.0, q) * beta2 * std::pow(double(n), 0.5 * (1.0 - q)) *
         std::pow(double(N), 1.0 - q) * std::pow(lambda2_Lq, 0.5 * (q + 1.0));

  // k3 = 2 gamma4 L3^2 / L2 + 2 L5^2 / (h_d L4) + sigma_bar^2, with the
  // zero-numerator limits taken as 0.
  double t1 = 0.0, t2 = 0.0;
  if (L3 > 0.0) {
    t1 = L2 > 0.0 ? 2.0 * gamma4 * L3 * L3 / L2 : kInf;
    if (!(L2 > 0.0)) c.flags.push_back("k3 infinite: L3 > 0 with L2 = 0");
  }
  if (L5 > 0.0) {
    t2 = (h_d > 0.0 && L4 > 0.0) ? 2.0 * L5 * L5 / (h_d * L4) : kInf;
    if (!(h_d > 0.0 && L4 > 0.0)) c.flags.push_back("k3 infinite: L5 > 0 with h_d*L4 = 0");
  }
  c.k3 = t1 + t2 + sigma_bar * sigma_bar;

  if (c.k3 == 0.0) {
    // exact fixed-time consensus limit
    c.delta = 0.0;
    c.m1 = c.k1;
    c.m2 = c.k2;
  } else if (!std::isfinite(c.k3)) {
    c.delta = kInf;
    c.m1 = c.m2 = std::numeric_limits<double>::quiet_NaN();
    c.T2 = kInf;
    c.flags.push_back("consensus settling-time bound inapplicable at these constants");
    return c;
  } else {
    c.delta = std::min(std::pow(c.k3 / ((1.0 - theta) * c.k1), 2.0 / (p + 1.0)),
                       std::pow(c.k3 / ((1.0 - theta) * c.k2), 2.0 / (q + 1.0)));
    c.m1 = c.k1 - c.k3 * std::pow(c.delta, -0.5 * (p + 1.0));
    c.m2 = c.k2 - c.k3 * std::pow(c.delta, -0.5 * (q + 1.0));
  }

  if (c.m1 > 0.0 && c.m2 > 0.0) {
    c.applicable = true;
    const double ratio = c.m1 / c.m2;
    c.T2 = 2.0 * std::pow(ratio, (1.0 - p) / (q - p)) / (c.m1 * (1.0 - p)) +
           2.0 * std::pow(ratio, (1.0 - q) / (q - p)) / (c.m2 * (q - 1.0));
  } else {
    c.T2 = kInf;
    c.flags.push_back("consensus settling-time bound inapplicable at these constants");
  }
  return c;
}

struct TrackingBound {
  double k4 = 0.0;  // L1 gamma4 - 4 L4 / h_d (the decay rate)
  double k5 = 0.0;  // 2 L5^2/(L4 h_d) + sigma_bar^2/2
  double asymptotic_bound = 0.0;  // 2 k5 / k4
  bool condition_ok = false;
};

inline TrackingBound msgeub_distributed(double gamma4, double L1, double L4, double L5,
                                        double h_d, double sigma_bar) {
  TrackingBound b;
  b.k4 = (h_d > 0.0) ? L1 * gamma4 - 4.0 * L4 / h_d : (L4 > 0.0 ? -kInf : L1 * gamma4);
  double t = 0.0;
  if (L5 > 0.0) t = (L4 > 0.0 && h_d > 0.0) ? 2.0 * L5 * L5 / (L4 * h_d) : kInf;
  b.k5 = t + 0.5 * sigma_bar * sigma_bar;
  b.condition_ok = b.k4 > 0.0 && std::isfinite(b.k5);
  b.asymptotic_bound = b.condition_ok ? 2.0 * b.k5 / b.k4 : kInf;
  return b;
}

// L V for V = 1/2 ||x - c||^2 along dx = b dt + sigma dB:
// (x-c)^T b + 1/2 ||sigma||_F^2 (dV/dt = 0 for this V).
inline double generator_quadratic(const VectorXd& drift, const MatrixXd& diffusion,
                                  const VectorXd& x, const VectorXd& center) {
  return (x - center).dot(drift) + 0.5 * diffusion.squaredNorm();
}

// ---------------------------------------------------------------------------
// Aggregated report

struct BoundInputs {
  // protocol gains
  double gamma1 = 0.0;
  double alpha1 = 0.0, beta1 = 0.0, gamma2 = 0.0;
  double alpha2 = 0.0, beta2 = 0.0, gamma3 = 0.0, gamma4 = 0.0;
  double p = 0.0, q = 0.0;
  // constants (sampled estimates or user overrides)
  double l1 = 0.0, l2 = 0.0, h = 0.0;
  double L1 = 0.0, L2 = 0.0, L3 = 0.0, L4 = 0.0, L5 = 0.0, h_d = 0.0, L_H = 0.0;
  double sigma_bar = 0.0;
  double theta = 0.01;
  // reweighted Laplacian spectra
  double lambda2_Lp = 0.0, lambda2_Lq = 0.0, lambda2_L2 = 0.0, lambda2_L1 = 0.0;
  int n = 0, N = 0;
};

struct BoundReport {
  BoundInputs inputs;
  CentralizedBound centralized;
  double T1 = 0.0;
  ConsensusConstants consensus;
  TrackingBound tracking;
  std::vector<std::string> gain_condition_flags;
};

inline BoundReport make_bound_report(const BoundInputs& in) {
  BoundReport r;
  r.inputs = in;
  r.centralized = msgeub_centralized(in.gamma1, in.l1, in.l2, in.h, in.sigma_bar);
  if (in.gamma1 > 0.0 && !r.centralized.condition_ok)
    r.gain_condition_flags.push_back("centralized gain condition gamma1 > l2/(h*l1) fails");

  if (in.alpha1 > 0.0 && in.lambda2_Lp > 0.0) {
    r.T1 = fixed_time_T1(in.alpha1, in.beta1, in.p, in.q, in.lambda2_Lp, in.lambda2_Lq, in.n,
                         in.N);
    const double gamma2_floor =
        in.lambda2_L2 > 0.0 ? in.L_H * std::sqrt(2.0 * in.N) / std::sqrt(in.lambda2_L2) : kInf;
    if (!(in.gamma2 >= gamma2_floor))
      r.gain_condition_flags.push_back(
          "estimator gain condition gamma2 >= L_H*sqrt(2N)/sqrt(lambda2[L2]) fails");
  }

  if (in.alpha2 > 0.0 && in.lambda2_Lp > 0.0) {
    r.consensus = consensus_constants(in.alpha2, in.beta2, in.gamma4, in.p, in.q,
                                      in.lambda2_Lp, in.lambda2_Lq, in.L2, in.L3, in.L4,
                                      in.L5, in.h_d, in.sigma_bar, in.theta, in.n, in.N);
    const double gamma3_floor =
        (in.h_d > 0.0 && in.lambda2_L1 > 0.0)
            ? (2.0 * in.gamma4 * in.L2 * in.h_d + 2.0 * in.L4) / (in.h_d * in.lambda2_L1)
            : kInf;
    if (!(in.gamma3 > gamma3_floor))
      r.gain_condition_flags.push_back(
          "consensus gain condition gamma3 > (2*gamma4*L2*h_d + 2*L4)/(h_d*lambda2[L1]) "
          "fails");
    r.tracking = msgeub_distributed(in.gamma4, in.L1, in.L4, in.L5, in.h_d, in.sigma_bar);
    const double gamma4_floor =
        (in.h_d > 0.0 && in.L1 > 0.0) ? 4.0 * in.L4 / (in.h_d * in.L1) : kInf;
    if (!(in.gamma4 > gamma4_floor))
      r.gain_condition_flags.push_back(
          "tracking gain condition gamma4 > 4*L4/(h_d*L1) fails");
  }
  return r;
}

// JSON view; +inf serializes as the string "inf" so the document stays valid.
inline nlohmann::ordered_json json_number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline nlohmann::ordered_json to_json(const BoundReport& r) {
  nlohmann::ordered_json j;
  j["centralized"] = {{"rate", json_number(r.centralized.rate)},
                      {"offset", json_number(r.centralized.offset)},
                      {"condition_ok", r.centralized.condition_ok}};
  j["estimator"] = {{"T1", json_number(r.T1)}};
  j["consensus"] = {{"k1", json_number(r.consensus.k1)},
                    {"k2", json_number(r.consensus.k2)},
                    {"k3", json_number(r.consensus.k3)},
                    {"delta", json_number(r.consensus.delta)},
                    {"m1", json_number(r.consensus.m1)},
                    {"m2", json_number(r.consensus.m2)},
                    {"T2", json_number(r.consensus.T2)},
                    {"applicable", r.consensus.applicable},
                    {"flags", r.consensus.flags}};
  j["tracking"] = {{"k4", json_number(r.tracking.k4)},
                   {"k5", json_number(r.tracking.k5)},
                   {"asymptotic_bound", json_number(r.tracking.asymptotic_bound)},
                   {"condition_ok", r.tracking.condition_ok}};
  j["gain_condition_flags"] = r.gain_condition_flags;
  nlohmann::ordered_json in;
  const BoundInputs& v = r.inputs;
  in["gamma1"] = v.gamma1;
  in["alpha1"] = v.alpha1;
  in["beta1"] = v.beta1;
  in["gamma2"] = v.gamma2;
  in["alpha2"] = v.alpha2;
  in["beta2"] = v.beta2;
  in["gamma3"] = v.gamma3;
  in["gamma4"] = v.gamma4;
  in["p"] = v.p;
  in["q"] = v.q;
  in["l1"] = v.l1;
  in["l2"] = v.l2;
  in["h"] = v.h;
  in["L1"] = v.L1;
  in["L2"] = v.L2;
  in["L3"] = v.L3;
  in["L4"] = v.L4;
  in["L5"] = v.L5;
  in["h_d"] = v.h_d;
  in["L_H"] = v.L_H;
  in["sigma_bar"] = v.sigma_bar;
  in["theta"] = v.theta;
  in["lambda2_Lp"] = v.lambda2_Lp;
  in["lambda2_Lq"] = v.lambda2_Lq;
  in["lambda2_L2"] = v.lambda2_L2;
  in["lambda2_L1"] = v.lambda2_L1;
  in["n"] = v.n;
  in["N"] = v.N;
  j["inputs"] = in;
  return j;
}

}  // namespace tvdo::analysis
