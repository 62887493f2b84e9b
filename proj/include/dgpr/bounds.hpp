#ifndef DGPR_BOUNDS_HPP
#define DGPR_BOUNDS_HPP

#include <cmath>
#include <fstream>
#include <vector>

#include "dgpr/eigensystem.hpp"

namespace dgpr {

enum class EstimatorKind { A, B };

struct BoundQuery {
  const EigenSystem* eigen = nullptr;
  int E = 1;
  long M = 1;
  double alpha = 0.05;
  double noise_variance = 0.01;

  BoundQuery(const EigenSystem& system, int terms, long samples, double alpha_,
             double noise_variance_)
      : eigen(&system), E(terms), M(samples), alpha(alpha_), noise_variance(noise_variance_) {
    require(E >= 1 && E <= system.max_terms(), "invalid-parameter",
            "E out of range of the eigensystem");
    require(M >= 1, "invalid-parameter", "M must be >= 1");
    require(alpha > 0 && alpha < 1, "invalid-parameter", "alpha must lie in (0,1)");
    require(noise_variance > 0, "invalid-parameter", "noise variance must be > 0");
  }
};

/// High-probability error bound, split into the terms it sums:
///   value = bias_tail + variance + tail (+ kappa_term for estimator B).
struct BoundReport {
  double value = 0.0;
  double epsilon = 1.0;
  bool feasible = false;
  double bias_tail = 0.0;
  double variance = 0.0;
  double tail = 0.0;
  double kappa_term = 0.0;
  // False when the spectrum's tail sums are truncated, which makes the bound
  // an under-estimate.
  bool tail_exact = true;
};

/// Error floor of any a-priori E-dimensional estimator: the spectrum mass
/// past the first E terms.
inline double lower_bound(const EigenSystem& eigen, int terms) {
  require(terms >= 0, "invalid-parameter", "E must be >= 0");
  return eigen.tail_sum(terms);
}

/// Left side of the concentration condition; strictly decreasing from 1 at
/// eps -> 0+ down to 0 at eps = 1.
inline double feasibility_lhs(double eps) {
  return 1.0 - eps + eps * std::log(eps);
}

inline double feasibility_rhs(const BoundQuery& query, EstimatorKind which) {
  const double scale = static_cast<double>(query.E) * query.eigen->k_bound() / query.M;
  const double ratio = (which == EstimatorKind::A ? 1.0 : 2.0) * query.E / query.alpha;
  return scale * std::log(ratio);
}

inline bool epsilon_feasible(const BoundQuery& query, double eps, EstimatorKind which) {
  require(eps > 0 && eps <= 1, "invalid-parameter", "epsilon must lie in (0,1]");
  return feasibility_lhs(eps) >= feasibility_rhs(query, which);
}

inline BoundReport bnd_A(const BoundQuery& query, double eps) {
  require(epsilon_feasible(query, eps, EstimatorKind::A), "infeasible-epsilon",
          "epsilon fails the concentration condition for estimator A");
  const EigenSystem& eigen = *query.eigen;
  const double sn = query.noise_variance;
  const double m = static_cast<double>(query.M);
  double bias_sum = 0.0, var_sum = 0.0;
  for (int e = 0; e < query.E; ++e) {
    const double lam = eigen.eigenvalue(e);
    const double den = eps * m * lam + sn;
    bias_sum += lam * lam / (den * den);
    var_sum += lam / den;
  }
  const double tail = eigen.tail_sum(query.E);
  BoundReport report;
  report.epsilon = eps;
  report.feasible = true;
  report.bias_tail = eigen.k_bound() * m / (1.0 - query.alpha) * bias_sum * tail;
  report.variance = sn / (1.0 - query.alpha) * var_sum;
  report.tail = tail;
  report.value = report.bias_tail + report.variance + report.tail;
  report.tail_exact = eigen.tail_exact();
  return report;
}

inline BoundReport bnd_B(const BoundQuery& query, double eps) {
  require(epsilon_feasible(query, eps, EstimatorKind::B), "infeasible-epsilon",
          "epsilon fails the concentration condition for estimator B");
  const EigenSystem& eigen = *query.eigen;
  const double sn = query.noise_variance;
  const double m = static_cast<double>(query.M);
  double bias_sum = 0.0, var_sum = 0.0, head_sum = 0.0;
  for (int e = 0; e < query.E; ++e) {
    const double lam = eigen.eigenvalue(e);
    const double den_bias = m * lam + sn;  // no epsilon in the bias denominators
    bias_sum += lam * lam / (den_bias * den_bias);
    var_sum += lam / (eps * m * lam + sn);
    head_sum += lam;
  }
  const double tail = eigen.tail_sum(query.E);
  const double kappa = 1.0 / (1.0 - query.alpha) *
                       std::pow(eps + sn / (eigen.eigenvalue(0) * m), -4.0) * (1.0 - eps) *
                       (1.0 - eps) * (2.0 - eps) * (2.0 - eps);
  BoundReport report;
  report.epsilon = eps;
  report.feasible = true;
  report.bias_tail = eigen.k_bound() * m / (1.0 - query.alpha) * bias_sum * tail;
  report.variance = sn / (1.0 - query.alpha) * var_sum;
  report.tail = tail;
  report.kappa_term = kappa * (query.E * sn / m + head_sum);
  report.value = report.bias_tail + report.variance + report.tail + report.kappa_term;
  report.tail_exact = eigen.tail_exact();
  return report;
}

inline BoundReport evaluate_bound(const BoundQuery& query, double eps, EstimatorKind which) {
  return which == EstimatorKind::A ? bnd_A(query, eps) : bnd_B(query, eps);
}

/// Candidate epsilons: 1000 values log-spaced in (1 - eps), which resolves
/// the sharp variation of the bounds near eps -> 1, plus eps = 1 itself.
inline std::vector<double> epsilon_grid(int points = 1000) {
  std::vector<double> grid;
  grid.reserve(points + 1);
  const double lo = std::log(1e-9), hi = std::log(1.0 - 1e-7);
  for (int i = 0; i < points; ++i) {
    const double u = std::exp(lo + (hi - lo) * i / (points - 1));
    grid.push_back(1.0 - u);
  }
  grid.push_back(1.0);
  return grid;
}

/// Largest feasible epsilon, by bisection on the strictly decreasing margin
/// 1 - eps + eps log eps. Throws when even eps -> 0 is infeasible.
inline double max_feasible_epsilon(const BoundQuery& query, EstimatorKind which) {
  const double rhs = feasibility_rhs(query, which);
  require(feasibility_lhs(1e-15) >= rhs, "infeasible-configuration",
          "no feasible epsilon: (Ek/M) log(E/alpha) exceeds 1");
  double lo = 1e-15, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasibility_lhs(mid) >= rhs ? lo : hi) = mid;
  }
  return lo;
}

/// Minimizes the bound over feasible epsilon. Every term of both bounds is
/// non-increasing in epsilon, so the constrained minimizer is the largest
/// feasible epsilon; the bisected boundary point is searched alongside the
/// grid so the result is stable under grid refinement.
inline BoundReport optimize_epsilon(const BoundQuery& query, EstimatorKind which,
                                    std::vector<double> grid = epsilon_grid()) {
  grid.push_back(max_feasible_epsilon(query, which));
  BoundReport best;
  bool found = false;
  for (const double eps : grid) {
    if (!epsilon_feasible(query, eps, which)) continue;
    const BoundReport report = evaluate_bound(query, eps, which);
    if (!found || report.value < best.value ||
        (report.value == best.value && report.epsilon > best.epsilon)) {
      best = report;
      found = true;
    }
  }
  require(found, "infeasible-configuration",
          "no feasible epsilon: (Ek/M) log(E/alpha) exceeds 1");
  return best;
}

struct BoundCurveRow {
  int E = 0;
  BoundReport report;
  double lower = 0.0;
};

inline std::vector<BoundCurveRow> bound_curve(const EigenSystem& eigen, long M, double alpha,
                                              double noise_variance, int e_min, int e_max,
                                              EstimatorKind which) {
  require(e_min >= 1 && e_min <= e_max && e_max <= eigen.max_terms(), "invalid-parameter",
          "E range outside eigensystem availability");
  std::vector<BoundCurveRow> rows;
  rows.reserve(e_max - e_min + 1);
  for (int e = e_min; e <= e_max; ++e) {
    BoundCurveRow row;
    row.E = e;
    row.report = optimize_epsilon(BoundQuery(eigen, e, M, alpha, noise_variance), which);
    row.lower = lower_bound(eigen, e);
    rows.push_back(row);
  }
  return rows;
}

/// Plot-ready CSV; normalization divides by the prior process variance
/// tail_sum(0).
inline void write_bound_curve_csv(const std::string& path, const std::vector<BoundCurveRow>& rows,
                                  double normalization) {
  require(normalization > 0, "invalid-parameter", "normalization must be > 0");
  std::ofstream out(path);
  require(out.good(), "parse-error", "cannot open CSV for writing: " + path);
  out.precision(12);
  out << "E,bnd_raw,bnd_normalized,lower_bound_normalized,epsilon,feasible\n";
  for (const auto& row : rows) {
    out << row.E << "," << row.report.value << "," << row.report.value / normalization << ","
        << row.lower / normalization << "," << row.report.epsilon << ","
        << (row.report.feasible ? 1 : 0) << "\n";
  }
}

}  // namespace dgpr

#endif
