#ifndef DGPR_SURE_HPP
#define DGPR_SURE_HPP

#include <fstream>
#include <optional>
#include <vector>

#include "dgpr/estimators.hpp"

namespace dgpr {

/// Hyperparameter candidates: scale factors gamma and, for estimator B,
/// truncation levels E'.
struct TuningGrid {
  std::vector<double> gammas;
  std::vector<int> truncations;

  /// Flattened (gamma, E') pair index; gamma-major, matching the layout of
  /// coefficient/prediction family matrices.
  int pair_index(int gamma_idx, int trunc_idx) const {
    return gamma_idx * static_cast<int>(truncations.size()) + trunc_idx;
  }

  int pairs() const {
    return static_cast<int>(gammas.size()) * static_cast<int>(truncations.size());
  }

  /// 50 log-spaced gammas in [1e-3, 1e3], the default search used by the
  /// synthetic studies.
  static std::vector<double> default_gammas(int count = 50, double lo = 1e-3, double hi = 1e3) {
    std::vector<double> g(count);
    for (int i = 0; i < count; ++i) {
      g[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (count - 1));
    }
    return g;
  }
};

/// One SURE objective evaluation: J = residual + dof where residual is
/// ||z - zhat||^2 and dof the (expected) equivalent-degrees-of-freedom term.
struct SureEvaluation {
  double objective = 0.0;
  double residual = 0.0;
  double dof = 0.0;
  double gamma = 0.0;
  int e_prime = 0;
};

/// SURE score for estimator A in the projected measurement model:
///   S = V (V + (gamma sigma^2/M) P)^-1,  Sigma = (sigma^2/M) V,
///   J_A = ||(I - S) z||^2 + 2 Tr(S Sigma).
inline SureEvaluation sure_risk_A(const SufficientStatistics& stats, const Matrix& prior,
                                  double noise_variance, double gamma) {
  require(gamma >= 0, "invalid-parameter", "gamma must be >= 0");
  const double m = static_cast<double>(stats.M);
  const double reg = gamma * noise_variance / m;
  Matrix lhs = stats.V;
  if (reg != 0.0) lhs += reg * prior;

  const int dim = stats.basis_dim();
  Matrix rhs(dim, dim + 1);
  rhs.leftCols(dim) = stats.V;
  rhs.col(dim) = stats.z;
  const Matrix solved = detail::spd_solve(lhs, rhs, "singular-normal-equations");

  SureEvaluation eval;
  eval.gamma = gamma;
  eval.e_prime = dim;
  eval.residual = (stats.z - stats.V * solved.col(dim)).squaredNorm();
  // Tr(S Sigma) = (sigma^2/M) Tr((V + reg P)^-1 V V); V is symmetric.
  eval.dof = 2.0 * noise_variance / m * solved.leftCols(dim).cwiseProduct(stats.V).sum();
  eval.objective = eval.residual + eval.dof;
  return eval;
}

/// argmin of J_A over the gamma grid; ties break toward larger gamma.
inline std::pair<double, SureEvaluation> tune_A(const SufficientStatistics& stats,
                                                const Matrix& prior, double noise_variance,
                                                const std::vector<double>& gammas) {
  require(!gammas.empty(), "invalid-parameter", "gamma grid is empty");
  std::optional<SureEvaluation> best;
  for (const double gamma : gammas) {
    SureEvaluation eval;
    try {
      eval = sure_risk_A(stats, prior, noise_variance, gamma);
    } catch (const Error&) {
      continue;
    }
    if (!best || eval.objective < best->objective ||
        (eval.objective == best->objective && eval.gamma > best->gamma)) {
      best = eval;
    }
  }
  require(best.has_value(), "tuning-failed", "every gamma evaluation failed");
  return {best->gamma, *best};
}

/// Diagonal-shrinkage coefficient family for estimator B: column p holds
/// a(gamma, E') for the grid pair p (gamma-major order).
inline Matrix b_coefficient_family(const Vector& z, const EigenSystem& eigen,
                                   double noise_variance, long M, const TuningGrid& grid) {
  const int dim = static_cast<int>(z.size());
  Matrix family = Matrix::Zero(dim, grid.pairs());
  for (std::size_t gi = 0; gi < grid.gammas.size(); ++gi) {
    const double c = grid.gammas[gi] * noise_variance / static_cast<double>(M);
    Vector full(dim);
    for (int e = 0; e < dim; ++e) full[e] = z[e] / (1.0 + c / eigen.eigenvalue(e));
    for (std::size_t ti = 0; ti < grid.truncations.size(); ++ti) {
      const int e_prime = grid.truncations[ti];
      require(e_prime >= 1 && e_prime <= dim, "invalid-parameter",
              "truncation level outside 1..E");
      family.col(grid.pair_index(static_cast<int>(gi), static_cast<int>(ti))).head(e_prime) =
          full.head(e_prime);
    }
  }
  return family;
}

/// Output predictions zhat = (G^T G / M) a for a family of coefficient
/// vectors; in distributed mode these columns arrive via consensus instead.
inline Matrix predicted_z(const Matrix& V, const Matrix& coefficient_family) {
  return V * coefficient_family;
}

/// SURE score for estimator B with the expected-dof surrogate:
///   J_B = ||z - zhat||^2 + 2 (sigma^2/M) sum_{e<=E'} lambda_e/(lambda_e + gamma sigma^2/M).
inline SureEvaluation sure_risk_B(const Vector& z, const Vector& zhat, const EigenSystem& eigen,
                                  double noise_variance, long M, double gamma, int e_prime) {
  require(e_prime >= 0 && e_prime <= z.size(), "invalid-parameter", "need 0 <= E' <= E");
  const double c = gamma * noise_variance / static_cast<double>(M);
  double trace = 0.0;
  for (int e = 0; e < e_prime; ++e) {
    const double lam = eigen.eigenvalue(e);
    trace += lam / (lam + c);
  }
  SureEvaluation eval;
  eval.gamma = gamma;
  eval.e_prime = e_prime;
  eval.residual = (z - zhat).squaredNorm();
  eval.dof = 2.0 * noise_variance / static_cast<double>(M) * trace;
  eval.objective = eval.residual + eval.dof;
  return eval;
}

struct TuneBResult {
  double gamma = 0.0;
  int e_prime = 0;
  SureEvaluation eval;
};

namespace detail {

// Joint argmin over the (gamma, E') grid given an evaluator for each pair;
// ties break toward smaller E', then larger gamma.
template <typename EvalFn>
TuneBResult argmin_pairs(const TuningGrid& grid, EvalFn&& evaluate) {
  require(!grid.gammas.empty() && !grid.truncations.empty(), "invalid-parameter",
          "tuning grid is empty");
  std::optional<TuneBResult> best;
  for (std::size_t gi = 0; gi < grid.gammas.size(); ++gi) {
    for (std::size_t ti = 0; ti < grid.truncations.size(); ++ti) {
      SureEvaluation eval;
      try {
        eval = evaluate(static_cast<int>(gi), static_cast<int>(ti));
      } catch (const Error&) {
        continue;
      }
      const bool better =
          !best || eval.objective < best->eval.objective ||
          (eval.objective == best->eval.objective &&
           (eval.e_prime < best->e_prime ||
            (eval.e_prime == best->e_prime && eval.gamma > best->gamma)));
      if (better) best = TuneBResult{eval.gamma, eval.e_prime, eval};
    }
  }
  require(best.has_value(), "tuning-failed", "every (gamma, E') evaluation failed");
  return *best;
}

}  // namespace detail

/// Joint SURE tuning of (gamma, E') for estimator B from precomputed
/// prediction columns (one per grid pair, e.g. from consensus).
inline TuneBResult tune_B(const Vector& z, const Matrix& zhat_family, const EigenSystem& eigen,
                          double noise_variance, long M, const TuningGrid& grid) {
  require(zhat_family.cols() == grid.pairs(), "invalid-input",
          "prediction family does not match the grid");
  return detail::argmin_pairs(grid, [&](int gi, int ti) {
    return sure_risk_B(z, zhat_family.col(grid.pair_index(gi, ti)), eigen, noise_variance, M,
                       grid.gammas[gi], grid.truncations[ti]);
  });
}

/// Centralized variant: computes the coefficient family from z and predicts
/// with V directly.
inline TuneBResult tune_B(const Vector& z, const Matrix& V, const EigenSystem& eigen,
                          double noise_variance, long M, const TuningGrid& grid,
                          Matrix* family_out) {
  const Matrix family = b_coefficient_family(z, eigen, noise_variance, M, grid);
  if (family_out) *family_out = family;
  return tune_B(z, predicted_z(V, family), eigen, noise_variance, M, grid);
}

/// Estimator-B SURE for non-orthonormal bases (kernel sections with prior K,
/// or Nystrom with prior D_E): coefficients use leading blocks of the
/// expected Gram and prior, and the dof trace runs over the first E'
/// diagonal entries of Egram (Egram + c * prior)^-1.
inline TuneBResult sure_kernel_sections_B(const Vector& z, const Matrix& zhat_family,
                                          const Matrix& expected_gram, const Matrix& prior,
                                          double noise_variance, long M, const TuningGrid& grid) {
  require(zhat_family.cols() == grid.pairs(), "invalid-input",
          "prediction family does not match the grid");
  return detail::argmin_pairs(grid, [&](int gi, int ti) {
    const double gamma = grid.gammas[gi];
    const int e_prime = grid.truncations[ti];
    const double c = gamma * noise_variance / static_cast<double>(M);
    Matrix lhs = expected_gram.topLeftCorner(e_prime, e_prime);
    if (c != 0.0) lhs += c * prior.topLeftCorner(e_prime, e_prime);
    const Matrix solved =
        detail::spd_solve(lhs, expected_gram.topLeftCorner(e_prime, e_prime),
                          "singular-normal-equations");
    SureEvaluation eval;
    eval.gamma = gamma;
    eval.e_prime = e_prime;
    eval.residual = (z - zhat_family.col(grid.pair_index(gi, ti))).squaredNorm();
    eval.dof = 2.0 * noise_variance / static_cast<double>(M) * solved.trace();
    eval.objective = eval.residual + eval.dof;
    return eval;
  });
}

/// Coefficient family for the non-orthonormal estimator B, one column per
/// grid pair, used to build the zhat family for sure_kernel_sections_B.
inline Matrix b_coefficient_family_general(const Vector& z, const Matrix& expected_gram,
                                           const Matrix& prior, double noise_variance, long M,
                                           const TuningGrid& grid) {
  const int dim = static_cast<int>(z.size());
  Matrix family = Matrix::Zero(dim, grid.pairs());
  for (std::size_t gi = 0; gi < grid.gammas.size(); ++gi) {
    for (std::size_t ti = 0; ti < grid.truncations.size(); ++ti) {
      const CoefficientEstimate est =
          estimate_B_general(z, expected_gram, prior, noise_variance, grid.gammas[gi],
                             grid.truncations[ti], M);
      family.col(grid.pair_index(static_cast<int>(gi), static_cast<int>(ti))) = est.a_hat;
    }
  }
  return family;
}

/// Noise variance from a calibration set: least squares on the first
/// `terms` basis functions (estimator A with gamma = 0), residual sum
/// divided by n - E.
inline double estimate_noise_variance(const Dataset& calibration, const Basis& basis, int terms) {
  const Index n = calibration.size();
  require(terms >= 1 && terms <= basis.dim(), "invalid-parameter", "terms outside 1..dim");
  require(n > terms, "insufficient-data",
          "calibration set must exceed the basis dimension");
  Matrix g(n, terms);
  RowVector row(basis.dim());
  for (Index m = 0; m < n; ++m) {
    basis.row_into(calibration.input(m), row);
    g.row(m) = row.head(terms);
  }
  const Matrix gtg = g.transpose() * g / static_cast<double>(n);
  const Vector gty = g.transpose() * calibration.y / static_cast<double>(n);
  const Vector coef = detail::spd_solve(gtg, gty, "singular-normal-equations");
  const double rss = (calibration.y - g * coef).squaredNorm();
  return rss / static_cast<double>(n - terms);
}

struct OracleSelectionA {
  double gamma = 0.0;
  double error = 0.0;
  CoefficientEstimate estimate;
};

struct OracleSelectionB {
  double gamma = 0.0;
  int e_prime = 0;
  double error = 0.0;
  CoefficientEstimate estimate;
};

/// Sum of squared coefficient differences, zero-padding the shorter vector;
/// equals the mu-norm error for orthonormal bases.
inline double coefficient_error(const Vector& truth, const Vector& estimate) {
  const Index n = std::max(truth.size(), estimate.size());
  double acc = 0.0;
  for (Index e = 0; e < n; ++e) {
    const double t = e < truth.size() ? truth[e] : 0.0;
    const double a = e < estimate.size() ? estimate[e] : 0.0;
    acc += (t - a) * (t - a);
  }
  return acc;
}

/// Oracle for estimator A in synthetic mode: picks the gamma minimizing the
/// true coefficient error. Not implementable in practice; benchmark only.
inline OracleSelectionA oracle_tune_A(const Vector& true_coeffs, const SufficientStatistics& stats,
                                      const Basis& basis, double noise_variance,
                                      const std::vector<double>& gammas) {
  require(!gammas.empty(), "invalid-parameter", "gamma grid is empty");
  std::optional<OracleSelectionA> best;
  for (const double gamma : gammas) {
    CoefficientEstimate est;
    try {
      est = estimate_A(stats, basis, noise_variance, gamma);
    } catch (const Error&) {
      continue;
    }
    const double err = coefficient_error(true_coeffs, est.a_hat);
    if (!best || err < best->error || (err == best->error && gamma > best->gamma)) {
      best = OracleSelectionA{gamma, err, est};
    }
  }
  require(best.has_value(), "tuning-failed", "every gamma evaluation failed");
  return *best;
}

/// Oracle for estimator B in synthetic mode over the (gamma, E') grid.
inline OracleSelectionB oracle_tune_B(const Vector& true_coeffs, const Vector& z,
                                      const EigenSystem& eigen, double noise_variance, long M,
                                      const TuningGrid& grid) {
  require(!grid.gammas.empty() && !grid.truncations.empty(), "invalid-parameter",
          "tuning grid is empty");
  const Matrix family = b_coefficient_family(z, eigen, noise_variance, M, grid);
  std::optional<OracleSelectionB> best;
  for (std::size_t gi = 0; gi < grid.gammas.size(); ++gi) {
    for (std::size_t ti = 0; ti < grid.truncations.size(); ++ti) {
      const int p = grid.pair_index(static_cast<int>(gi), static_cast<int>(ti));
      const double err = coefficient_error(true_coeffs, family.col(p));
      const double gamma = grid.gammas[gi];
      const int e_prime = grid.truncations[ti];
      const bool better = !best || err < best->error ||
                          (err == best->error &&
                           (e_prime < best->e_prime ||
                            (e_prime == best->e_prime && gamma > best->gamma)));
      if (better) {
        CoefficientEstimate est;
        est.a_hat = family.col(p);
        est.gamma = gamma;
        est.e_prime = e_prime;
        best = OracleSelectionB{gamma, e_prime, err, est};
      }
    }
  }
  require(best.has_value(), "tuning-failed", "empty oracle search");
  return *best;
}

/// Test-set oracles: pick hyperparameters minimizing prediction RSS on a
/// held-out set (field-data benchmarking).
inline OracleSelectionA oracle_tune_A_rss(const SufficientStatistics& stats, const Basis& basis,
                                          double noise_variance,
                                          const std::vector<double>& gammas, const Dataset& test) {
  require(!gammas.empty(), "invalid-parameter", "gamma grid is empty");
  const Matrix g_test = design_matrix(basis, test.x);
  std::optional<OracleSelectionA> best;
  for (const double gamma : gammas) {
    CoefficientEstimate est;
    try {
      est = estimate_A(stats, basis, noise_variance, gamma);
    } catch (const Error&) {
      continue;
    }
    const double rss =
        (g_test * est.a_hat - test.y).squaredNorm() / static_cast<double>(test.size());
    if (!best || rss < best->error || (rss == best->error && gamma > best->gamma)) {
      best = OracleSelectionA{gamma, rss, est};
    }
  }
  require(best.has_value(), "tuning-failed", "every gamma evaluation failed");
  return *best;
}

inline OracleSelectionB oracle_tune_B_rss(const Matrix& coefficient_family,
                                          const TuningGrid& grid, const Basis& basis,
                                          const Dataset& test) {
  const Matrix g_test = design_matrix(basis, test.x);
  std::optional<OracleSelectionB> best;
  for (std::size_t gi = 0; gi < grid.gammas.size(); ++gi) {
    for (std::size_t ti = 0; ti < grid.truncations.size(); ++ti) {
      const int p = grid.pair_index(static_cast<int>(gi), static_cast<int>(ti));
      const double rss =
          (g_test * coefficient_family.col(p) - test.y).squaredNorm() /
          static_cast<double>(test.size());
      const double gamma = grid.gammas[gi];
      const int e_prime = grid.truncations[ti];
      const bool better = !best || rss < best->error ||
                          (rss == best->error &&
                           (e_prime < best->e_prime ||
                            (e_prime == best->e_prime && gamma > best->gamma)));
      if (better) {
        CoefficientEstimate est;
        est.a_hat = coefficient_family.col(p);
        est.gamma = gamma;
        est.e_prime = e_prime;
        best = OracleSelectionB{gamma, e_prime, rss, est};
      }
    }
  }
  require(best.has_value(), "tuning-failed", "empty oracle search");
  return *best;
}

/// Plot-ready trace of SURE evaluations (risk-curve figures).
inline void write_tuning_trace_csv(const std::string& path,
                                   const std::vector<SureEvaluation>& trace) {
  std::ofstream out(path);
  require(out.good(), "parse-error", "cannot open CSV for writing: " + path);
  out.precision(12);
  out << "gamma,e_prime,residual,dof,J\n";
  for (const auto& eval : trace) {
    out << eval.gamma << "," << eval.e_prime << "," << eval.residual << "," << eval.dof << ","
        << eval.objective << "\n";
  }
}

}  // namespace dgpr

#endif
