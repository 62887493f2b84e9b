#ifndef DGPR_BASIS_HPP
#define DGPR_BASIS_HPP

#include <memory>
#include <optional>
#include <utility>

#include <Eigen/Eigenvalues>

#include "dgpr/eigensystem.hpp"
#include "dgpr/kernel.hpp"
#include "dgpr/measure.hpp"

namespace dgpr {

/// Finite basis used by the estimators, together with the prior matrix that
/// regularizes the coefficients:
///   kl_eigen        phi_e from a KL eigensystem, prior Lambda_E^-1 (diagonal)
///   kernel_sections phi_e(x) = K(anchor_e, x),   prior = kernel matrix at anchors
///   nystrom         rank-E functions from the top eigenvectors of a sampled
///                   kernel matrix, prior = D_E (diagonal)
/// The expected Gram E[G^T G / M] is exactly the identity for kl_eigen and
/// can be attached for the other kinds (see expected_gram()).
class Basis {
 public:
  enum class Kind { kl_eigen, kernel_sections, nystrom };

  using RowFn = std::function<void(const Vector&, RowRef)>;

  static Basis kl_eigen(std::shared_ptr<const EigenSystem> system, int dim) {
    require(dim >= 1 && dim <= system->max_terms(), "invalid-parameter",
            "basis dimension exceeds available eigenpairs");
    Basis b;
    b.kind_ = Kind::kl_eigen;
    b.dim_ = dim;
    b.system_ = std::move(system);
    b.prior_ = b.system_->eigenvalues().head(dim).cwiseInverse().asDiagonal();
    b.expected_gram_ = Matrix::Identity(dim, dim);
    auto sys = b.system_;
    b.row_ = [sys, dim](const Vector& x, RowRef out) {
      for (int e = 0; e < dim; ++e) out[e] = sys->phi(e, x);
    };
    return b;
  }

  static Basis kl_eigen(EigenSystem system, int dim) {
    return kl_eigen(std::make_shared<const EigenSystem>(std::move(system)), dim);
  }

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }

  double phi(int e, const Vector& x) const {
    RowVector row(dim_);
    row_(x, row);
    return row[e];
  }

  void row_into(const Vector& x, RowRef out) const { row_(x, out); }

  RowVector row(const Vector& x) const {
    RowVector out(dim_);
    row_(x, out);
    return out;
  }

  /// Prior matrix P entering the regularizer (gamma sigma^2 / M) * P.
  const Matrix& prior_matrix() const { return prior_; }

  bool has_expected_gram() const { return expected_gram_.has_value(); }

  const Matrix& expected_gram() const {
    require(expected_gram_.has_value(), "invalid-parameter",
            "expected Gram not attached to this basis");
    return *expected_gram_;
  }

  Basis with_expected_gram(Matrix gram) const {
    require(gram.rows() == dim_ && gram.cols() == dim_, "invalid-input",
            "expected Gram has wrong shape");
    Basis copy = *this;
    copy.expected_gram_ = std::move(gram);
    return copy;
  }

  /// kl_eigen only: the eigensystem behind the basis.
  const std::shared_ptr<const EigenSystem>& eigensystem() const { return system_; }

  const Matrix& anchors() const { return anchors_; }
  const std::optional<Kernel>& kernel() const { return kernel_; }
  const Matrix& nystrom_weights() const { return weights_; }

  friend Basis kernel_sections_basis(const Kernel&, const Matrix&);
  friend Basis nystrom_basis(const Kernel&, const Matrix&, int);

 private:
  Kind kind_ = Kind::kl_eigen;
  int dim_ = 0;
  RowFn row_;
  Matrix prior_;
  std::optional<Matrix> expected_gram_;
  std::shared_ptr<const EigenSystem> system_;
  Matrix anchors_;
  Matrix weights_;
  std::optional<Kernel> kernel_;
};

/// Design matrix G with G(m, e) = phi_e(x_m) for points given as rows.
inline Matrix design_matrix(const Basis& basis, const Matrix& points) {
  Matrix g(points.rows(), basis.dim());
  for (Index m = 0; m < points.rows(); ++m) {
    basis.row_into(points.row(m).transpose(), g.row(m));
  }
  return g;
}

/// Kernel-section basis phi_e = K(anchor_e, .) with prior given by the
/// anchor kernel matrix (the coefficient prior is N(0, gamma^-1 K^-1)).
inline Basis kernel_sections_basis(const Kernel& kernel, const Matrix& anchors) {
  const int dim = static_cast<int>(anchors.rows());
  require(dim >= 1, "invalid-parameter", "need at least one anchor");
  Matrix K = kernel_matrix(kernel, anchors);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(K);
  require(eig.info() == Eigen::Success, "degenerate-anchors", "anchor kernel eigensolve failed");
  const double top = eig.eigenvalues().maxCoeff();
  require(top > 0 && eig.eigenvalues().minCoeff() > kPsdTol * top, "degenerate-anchors",
          "anchor kernel matrix is singular (duplicate or degenerate anchors?)");

  Basis b;
  b.kind_ = Basis::Kind::kernel_sections;
  b.dim_ = dim;
  b.prior_ = std::move(K);
  b.anchors_ = anchors;
  b.kernel_ = kernel;
  Matrix pts = anchors;
  Kernel k = kernel;
  b.row_ = [k, pts, dim](const Vector& x, RowRef out) {
    for (int e = 0; e < dim; ++e) out[e] = k(pts.row(e).transpose(), x);
  };
  return b;
}

/// Nystrom basis from the best rank-E approximation of the anchor kernel
/// matrix K = V D V^T: phi_e(x) = sum_n v_e(n) K(anchor_n, x), prior D_E.
inline Basis nystrom_basis(const Kernel& kernel, const Matrix& anchors, int dim) {
  const int q = static_cast<int>(anchors.rows());
  require(q >= dim && dim >= 1, "invalid-parameter", "need q >= E >= 1");
  const Matrix K = kernel_matrix(kernel, anchors);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(K);
  require(eig.info() == Eigen::Success, "rank-deficient", "anchor kernel eigensolve failed");
  const double top = eig.eigenvalues().maxCoeff();
  require(top > 0, "rank-deficient", "anchor kernel matrix has no positive eigenvalue");

  Vector d(dim);
  Matrix w(q, dim);
  for (int e = 0; e < dim; ++e) {
    const double ell = eig.eigenvalues()[q - 1 - e];
    require(ell > kPsdTol * top, "rank-deficient",
            "fewer than E kernel-matrix eigenvalues above tolerance");
    d[e] = ell;
    w.col(e) = eig.eigenvectors().col(q - 1 - e);
  }

  Basis b;
  b.kind_ = Basis::Kind::nystrom;
  b.dim_ = dim;
  b.prior_ = d.asDiagonal();
  b.anchors_ = anchors;
  b.weights_ = w;
  b.kernel_ = kernel;
  Matrix pts = anchors;
  Kernel k = kernel;
  b.row_ = [k, pts, w, q, dim](const Vector& x, RowRef out) {
    Vector kx(q);
    for (int n = 0; n < q; ++n) kx[n] = k(pts.row(n).transpose(), x);
    out = (w.transpose() * kx).transpose();
  };
  return b;
}

struct GramMethod {
  enum class Type { closed_form, empirical, quadrature };
  Type type = Type::empirical;
  long n = 1000000;
  std::uint64_t seed = 0;

  static GramMethod closed_form() { return {Type::closed_form, 0, 0}; }
  static GramMethod empirical(long n, std::uint64_t seed = 0) {
    return {Type::empirical, n, seed};
  }
  static GramMethod quadrature(long nodes) { return {Type::quadrature, nodes, 0}; }
};

namespace detail {

// One-dimensional factor of E[K(x, u) K(x, v)] for the Gaussian kernel under
// x ~ N(mu0, a^2).
inline double gaussian_gram_entry_1d(double u, double v, double mu0, double a2, double eta) {
  const double star = eta * (u * u - 2 * mu0 * u + v * v - 2 * mu0 * v + 2 * mu0 * mu0) +
                      2 * a2 * (u - v) * (u - v);
  return std::sqrt(eta / (eta + 4 * a2)) * std::exp(-star / (eta * eta + 4 * eta * a2));
}

}  // namespace detail

/// E[G^T G / M] under the input measure. Closed form is available for
/// Gaussian kernel sections under a Gaussian-mixture measure (tensor products
/// across dimensions, convex combination across components); anything else
/// uses the empirical or quadrature estimate.
inline Matrix expected_gram(const Basis& basis, const InputMeasure& mu, const GramMethod& method) {
  const int dim = basis.dim();
  if (basis.kind() == Basis::Kind::kl_eigen) return Matrix::Identity(dim, dim);

  switch (method.type) {
    case GramMethod::Type::closed_form: {
      const bool supported = basis.kind() == Basis::Kind::kernel_sections && basis.kernel() &&
                             basis.kernel()->family() == Kernel::Family::gaussian &&
                             mu.kind() == InputMeasure::Kind::gaussian_mixture;
      require(supported, "unsupported-closed-form",
              "closed form needs Gaussian kernel sections and Gaussian-mixture measure");
      const double eta = basis.kernel()->eta();
      const Matrix& anchors = basis.anchors();
      Matrix gram = Matrix::Zero(dim, dim);
      for (Index c = 0; c < mu.weights().size(); ++c) {
        for (int e = 0; e < dim; ++e) {
          for (int f = e; f < dim; ++f) {
            double entry = 1.0;
            for (Index i = 0; i < anchors.cols(); ++i) {
              entry *= detail::gaussian_gram_entry_1d(anchors(e, i), anchors(f, i), mu.means()(c, i),
                                                      mu.variances()(c, i), eta);
            }
            gram(e, f) += mu.weights()[c] * entry;
            if (f != e) gram(f, e) = gram(e, f);
          }
        }
      }
      return gram;
    }
    case GramMethod::Type::empirical: {
      Rng rng(method.seed);
      Matrix gram = Matrix::Zero(dim, dim);
      RowVector row(dim);
      for (long s = 0; s < method.n; ++s) {
        basis.row_into(mu.sample(rng), row);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(row.transpose());
      }
      gram = gram.selfadjointView<Eigen::Lower>();
      return gram / static_cast<double>(method.n);
    }
    case GramMethod::Type::quadrature: {
      const int d = mu.dim();
      require(d <= 3, "invalid-parameter", "tensor quadrature supports d <= 3");
      const Domain box = mu.quadrature_box();
      const long per_axis = detail::nodes_per_axis(method.n, d);
      Vector h(d);
      double cell = 1.0;
      for (int i = 0; i < d; ++i) {
        h[i] = (box.upper[i] - box.lower[i]) / static_cast<double>(per_axis);
        cell *= h[i];
      }
      Matrix gram = Matrix::Zero(dim, dim);
      std::vector<long> idx(d, 0);
      Vector x(d);
      RowVector row(dim);
      while (true) {
        for (int i = 0; i < d; ++i) x[i] = box.lower[i] + (idx[i] + 0.5) * h[i];
        basis.row_into(x, row);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(row.transpose(), mu.density(x));
        int axis = 0;
        while (axis < d && ++idx[axis] == per_axis) {
          idx[axis] = 0;
          ++axis;
        }
        if (axis == d) break;
      }
      gram = gram.selfadjointView<Eigen::Lower>();
      return gram * cell;
    }
  }
  fail("invalid-parameter", "unknown Gram method");
}

}  // namespace dgpr

#endif
