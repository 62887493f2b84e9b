#ifndef DGPR_EIGENSYSTEM_HPP
#define DGPR_EIGENSYSTEM_HPP

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>

#include "dgpr/kernel.hpp"
#include "dgpr/measure.hpp"

namespace dgpr {

/// Karhunen-Loeve eigensystem of a kernel under an input measure: a
/// non-increasing positive spectrum, an eigenfunction evaluator orthonormal
/// w.r.t. the measure, the uniform bound k with sup|phi_e| <= sqrt(k), and
/// tail sums of the spectrum. Immutable; evaluators are pure.
class EigenSystem {
 public:
  /// phi(e, x) with zero-based index e.
  using PhiFn = std::function<double(int, const Vector&)>;
  /// tail(E) = sum of eigenvalues beyond the first E.
  using TailFn = std::function<double(int)>;

  /// Data needed to re-evaluate numerically obtained eigenfunctions:
  /// phi_e(x) = sum_n weights(n, e) * K(x, anchor_n).
  struct ExtensionData {
    Matrix anchors;
    Matrix weights;
    Kernel kernel = Kernel::custom(nullptr, "unset");
  };

  EigenSystem(Vector lambdas, PhiFn phi, double k_bound, TailFn analytic_tail = nullptr,
              std::string family = "custom", std::map<std::string, double> params = {})
      : lambdas_(std::move(lambdas)),
        phi_(std::move(phi)),
        k_bound_(k_bound),
        tail_(std::move(analytic_tail)),
        family_(std::move(family)),
        params_(std::move(params)) {
    require(lambdas_.size() >= 1, "invalid-parameter", "eigensystem needs at least one eigenvalue");
    for (Index e = 0; e + 1 < lambdas_.size(); ++e) {
      require(lambdas_[e] >= lambdas_[e + 1] - 1e-15 * std::abs(lambdas_[0]), "invalid-parameter",
              "eigenvalues must be non-increasing");
    }
  }

  int max_terms() const { return static_cast<int>(lambdas_.size()); }
  const Vector& eigenvalues() const { return lambdas_; }
  double eigenvalue(int e) const { return lambdas_[e]; }

  double phi(int e, const Vector& x) const { return phi_(e, x); }

  double phi(int e, double x) const {
    Vector v(1);
    v[0] = x;
    return phi_(e, v);
  }

  double k_bound() const { return k_bound_; }

  /// Sum of eigenvalues beyond the first `terms`. Analytic when the family
  /// provides a closed form; otherwise the truncated partial sum, which
  /// under-estimates the true tail (see tail_exact()).
  double tail_sum(int terms) const {
    if (tail_) return tail_(terms);
    double s = 0.0;
    for (Index e = lambdas_.size() - 1; e >= terms; --e) s += lambdas_[e];
    return s;
  }

  bool tail_exact() const { return static_cast<bool>(tail_); }

  const std::string& family() const { return family_; }
  const std::map<std::string, double>& params() const { return params_; }

  const std::shared_ptr<const ExtensionData>& extension() const { return extension_; }
  void attach_extension(std::shared_ptr<const ExtensionData> data) { extension_ = std::move(data); }

 private:
  Vector lambdas_;
  PhiFn phi_;
  double k_bound_;
  TailFn tail_;
  std::string family_;
  std::map<std::string, double> params_;
  std::shared_ptr<const ExtensionData> extension_;
};

namespace detail {

// First-order spline sinusoids on [0,1]: phi_e(x) = sqrt(2) sin(x w_e) with
// w_e = (e+1)pi - pi/2 for zero-based e. Orthonormal under uniform measure.
inline double spline_sinusoid(int e, double x) {
  const double w = (e + 1) * std::numbers::pi - std::numbers::pi / 2.0;
  return std::numbers::sqrt2 * std::sin(x * w);
}

inline EigenSystem::PhiFn spline_sinusoid_fn() {
  return [](int e, const Vector& x) {
    require(x.size() == 1, "invalid-parameter", "closed-form eigensystems are one-dimensional");
    return spline_sinusoid(e, x[0]);
  };
}

}  // namespace detail

/// Closed-form eigensystem of K(x,x') = min(x,x') under uniform measure on
/// [0,1]: lambda_e = ((e+1)pi - pi/2)^-2, k = 2, total spectrum mass 1/2.
inline EigenSystem spline_eigensystem(int max_terms) {
  require(max_terms >= 1, "invalid-parameter", "max_terms must be >= 1");
  Vector lambdas(max_terms);
  for (int e = 0; e < max_terms; ++e) {
    const double w = (e + 1) * std::numbers::pi - std::numbers::pi / 2.0;
    lambdas[e] = 1.0 / (w * w);
  }
  // Tail via total mass 1/2 = integral of min(x,x) on [0,1] minus the leading
  // partial sum; partial sums are recomputed fresh to keep tail(E) exact.
  auto tail = [](int terms) {
    double partial = 0.0;
    for (int e = terms - 1; e >= 0; --e) {
      const double w = (e + 1) * std::numbers::pi - std::numbers::pi / 2.0;
      partial += 1.0 / (w * w);
    }
    return 0.5 - partial;
  };
  return EigenSystem(std::move(lambdas), detail::spline_sinusoid_fn(), 2.0, tail, "spline",
                     {{"max_terms", static_cast<double>(max_terms)}});
}

/// Geometric spectrum lambda_e = exp(-rate*(e+1)) with the spline sinusoids
/// as eigenfunctions (the spectrum is the object of study; the sinusoids keep
/// the system orthonormal under uniform measure on [0,1]).
inline EigenSystem exponential_eigensystem(int max_terms, double rate) {
  require(max_terms >= 1, "invalid-parameter", "max_terms must be >= 1");
  require(rate > 0, "invalid-parameter", "decay rate must be > 0");
  Vector lambdas(max_terms);
  for (int e = 0; e < max_terms; ++e) lambdas[e] = std::exp(-rate * (e + 1));
  auto tail = [rate](int terms) {
    return std::exp(-rate * (terms + 1)) / (1.0 - std::exp(-rate));
  };
  return EigenSystem(std::move(lambdas), detail::spline_sinusoid_fn(), 2.0, tail, "exponential",
                     {{"max_terms", static_cast<double>(max_terms)}, {"rate", rate}});
}

/// Finite spectrum with sinusoid eigenfunctions; tail sums are exact (zero
/// beyond the stored terms). Used for custom-by-eigenvalues kernels.
inline EigenSystem custom_spectrum(Vector lambdas, double k_bound = 2.0) {
  Vector copy = lambdas;
  auto tail = [copy](int terms) {
    double s = 0.0;
    for (Index e = copy.size() - 1; e >= terms; --e) s += copy[e];
    return s;
  };
  return EigenSystem(std::move(lambdas), detail::spline_sinusoid_fn(), k_bound, tail,
                     "custom_spectrum");
}

/// Numerical KL expansion: draws q points from mu, eigendecomposes the q x q
/// kernel matrix, keeps the top E pairs with lambda_e = (matrix eigenvalue)/q
/// and extends eigenvectors to the whole domain with
///   phi_e(x) = (sqrt(q) / ell_e) * sum_n v_e(n) K(x, anchor_n),
/// which reproduces phi_e(anchor_n) = sqrt(q) v_e(n). k is estimated as the
/// max of phi_e^2 over a dense grid.
inline EigenSystem numerical_eigensystem(const Kernel& kernel, const InputMeasure& mu, int q,
                                         int terms, std::uint64_t seed) {
  require(q >= terms && terms >= 1, "invalid-parameter", "need q >= E >= 1");

  Rng rng(seed);
  Matrix anchors(q, mu.dim());
  for (int i = 0; i < q; ++i) anchors.row(i) = mu.sample(rng).transpose();

  const Matrix K = kernel_matrix(kernel, anchors);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(K);
  require(eig.info() == Eigen::Success, "degenerate-kernel", "kernel matrix eigensolve failed");

  // Ascending from Eigen; reorder descending and clip the numerical zeros.
  const Vector all = eig.eigenvalues().reverse();
  const double top = all[0];
  require(top > 0, "degenerate-kernel", "kernel matrix has no positive eigenvalue");
  require(all[all.size() - 1] >= -kPsdTol * top, "degenerate-kernel",
          "kernel matrix is indefinite beyond tolerance");

  Vector lambdas(terms);
  Matrix weights(q, terms);
  for (int e = 0; e < terms; ++e) {
    const double ell = all[e];
    require(ell > kPsdTol * top, "degenerate-kernel",
            "fewer than E numerically positive eigenvalues");
    lambdas[e] = ell / q;
    weights.col(e) = eig.eigenvectors().col(q - 1 - e) * (std::sqrt(static_cast<double>(q)) / ell);
  }

  auto data = std::make_shared<EigenSystem::ExtensionData>();
  data->anchors = anchors;
  data->weights = weights;
  data->kernel = kernel;

  auto phi = [data](int e, const Vector& x) {
    double acc = 0.0;
    for (Index n = 0; n < data->anchors.rows(); ++n) {
      acc += data->weights(n, e) * data->kernel(x, data->anchors.row(n).transpose());
    }
    return acc;
  };

  // k estimate: dense tensor grid over the quadrature box.
  const Domain box = mu.quadrature_box();
  const int d = mu.dim();
  const long per_axis = d == 1 ? 2048 : (d == 2 ? 64 : 24);
  std::vector<long> idx(d, 0);
  double k_est = 0.0;
  Vector x(d), kx(q);
  while (true) {
    for (int i = 0; i < d; ++i) {
      const double h = (box.upper[i] - box.lower[i]) / static_cast<double>(per_axis);
      x[i] = box.lower[i] + (idx[i] + 0.5) * h;
    }
    for (int n = 0; n < q; ++n) kx[n] = data->kernel(x, anchors.row(n).transpose());
    for (int e = 0; e < terms; ++e) {
      const double v = weights.col(e).dot(kx);
      k_est = std::max(k_est, v * v);
    }
    int axis = 0;
    while (axis < d && ++idx[axis] == per_axis) {
      idx[axis] = 0;
      ++axis;
    }
    if (axis == d) break;
  }

  EigenSystem system(std::move(lambdas), phi, k_est, nullptr, "numerical",
                     {{"q", static_cast<double>(q)}, {"terms", static_cast<double>(terms)}});
  system.attach_extension(data);
  return system;
}

}  // namespace dgpr

#endif
