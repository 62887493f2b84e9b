#ifndef DGPR_ESTIMATORS_HPP
#define DGPR_ESTIMATORS_HPP

#include <functional>
#include <utility>

#include <Eigen/Cholesky>

#include "dgpr/statistics.hpp"

namespace dgpr {

namespace detail {

/// LDLT solve for symmetric positive (semi)definite systems with a relative
/// pivot tolerance; throws `code` when the matrix is numerically singular.
inline Matrix spd_solve(const Matrix& lhs, const Matrix& rhs, const std::string& code) {
  Eigen::LDLT<Matrix> ldlt(lhs);
  require(ldlt.info() == Eigen::Success, code, "factorization failed");
  const Vector d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  require(dmax > 0 && d.minCoeff() > kSolveTol * dmax, code,
          "matrix is numerically singular (relative pivot below 1e-12)");
  return ldlt.solve(rhs);
}

}  // namespace detail

/// Basis coefficients of a fitted estimator. Entries past `e_prime` are
/// exactly zero (truncated estimators only; e_prime == dim otherwise).
struct CoefficientEstimate {
  Vector a_hat;
  double gamma = 0.0;
  int e_prime = 0;
};

/// Estimator A: a = (V + (gamma sigma^2 / M) P)^-1 z with P the basis prior
/// matrix. gamma = 0 is allowed and requires V itself to be invertible.
inline CoefficientEstimate estimate_A(const SufficientStatistics& stats, const Basis& basis,
                                      double noise_variance, double gamma) {
  require(gamma >= 0, "invalid-parameter", "gamma must be >= 0");
  require(stats.basis_dim() == basis.dim(), "invalid-input",
          "statistics and basis dimensions disagree");
  const double reg = gamma * noise_variance / static_cast<double>(stats.M);
  Matrix lhs = stats.V;
  if (reg != 0.0) lhs += reg * basis.prior_matrix();
  CoefficientEstimate est;
  est.a_hat = detail::spd_solve(lhs, stats.z, "singular-normal-equations");
  est.gamma = gamma;
  est.e_prime = basis.dim();
  return est;
}

/// Estimator B: a_e = z_e / (1 + gamma sigma^2 / (M lambda_e)) for e < E',
/// zero above. Uses only z; no matrix inversion.
inline CoefficientEstimate estimate_B(const SufficientStatistics& stats, const EigenSystem& eigen,
                                      double noise_variance, double gamma, int e_prime) {
  const int dim = stats.basis_dim();
  require(e_prime >= 0 && e_prime <= dim, "invalid-parameter", "need 0 <= E' <= E");
  require(gamma >= 0, "invalid-parameter", "gamma must be >= 0");
  CoefficientEstimate est;
  est.a_hat = Vector::Zero(dim);
  const double c = gamma * noise_variance / static_cast<double>(stats.M);
  for (int e = 0; e < e_prime; ++e) {
    est.a_hat[e] = stats.z[e] / (1.0 + c / eigen.eigenvalue(e));
  }
  est.gamma = gamma;
  est.e_prime = e_prime;
  return est;
}

/// Estimator B for non-orthonormal bases (kernel sections, Nystrom): the
/// identity is replaced by the leading E' x E' block of the expected Gram and
/// the prior by the matching block of the prior matrix.
inline CoefficientEstimate estimate_B_general(const Vector& z, const Matrix& expected_gram,
                                              const Matrix& prior, double noise_variance,
                                              double gamma, int e_prime, long M) {
  const int dim = static_cast<int>(z.size());
  require(e_prime >= 0 && e_prime <= dim, "invalid-parameter", "need 0 <= E' <= E");
  CoefficientEstimate est;
  est.a_hat = Vector::Zero(dim);
  est.gamma = gamma;
  est.e_prime = e_prime;
  if (e_prime == 0) return est;
  const double reg = gamma * noise_variance / static_cast<double>(M);
  Matrix lhs = expected_gram.topLeftCorner(e_prime, e_prime);
  if (reg != 0.0) lhs += reg * prior.topLeftCorner(e_prime, e_prime);
  est.a_hat.head(e_prime) =
      detail::spd_solve(lhs, z.head(e_prime), "singular-normal-equations");
  return est;
}

inline double predict(const Basis& basis, const CoefficientEstimate& est, const Vector& x) {
  RowVector row(basis.dim());
  basis.row_into(x, row);
  return row * est.a_hat;
}

/// Callable binding a basis and coefficients.
inline std::function<double(const Vector&)> predictor(Basis basis, CoefficientEstimate est) {
  return [basis = std::move(basis), est = std::move(est)](const Vector& x) {
    return predict(basis, est, x);
  };
}

/// Full Gaussian-process posterior mean with prior gamma^-1 K:
///   f(x) = [K(x, x_1) ... K(x, x_M)] (Kbar + gamma sigma^2 I)^-1 y.
/// O(M^3); the optimality baseline the finite-dimensional estimators chase.
inline std::function<double(const Vector&)> estimate_MAP(const Dataset& data, const Kernel& kernel,
                                                         double gamma = 1.0) {
  require(data.size() >= 1, "invalid-input", "empty dataset");
  Matrix gram = kernel_matrix(kernel, data.x);
  gram.diagonal().array() += gamma * data.noise_variance;
  Eigen::LDLT<Matrix> ldlt(gram);
  require(ldlt.info() == Eigen::Success, "numerical-failure", "MAP factorization failed");
  const Vector d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  require(dmax > 0 && d.minCoeff() > kSolveTol * dmax, "numerical-failure",
          "kernel-plus-noise matrix is numerically singular");
  Vector weights = ldlt.solve(data.y);
  Matrix train = data.x;
  return [kernel, train = std::move(train), weights = std::move(weights)](const Vector& x) {
    double acc = 0.0;
    for (Index m = 0; m < train.rows(); ++m) {
      acc += weights[m] * kernel(x, train.row(m).transpose());
    }
    return acc;
  };
}

}  // namespace dgpr

#endif
