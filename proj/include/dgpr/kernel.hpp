#ifndef DGPR_KERNEL_HPP
#define DGPR_KERNEL_HPP

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "dgpr/common.hpp"

namespace dgpr {

/// Positive-semidefinite covariance function. The built-in families are the
/// first-order spline kernel min(x, x') (tensor product across dimensions)
/// and the Gaussian kernel exp(-||x - x'||^2 / eta). Arbitrary symmetric
/// evaluators can be wrapped with Kernel::custom.
class Kernel {
 public:
  enum class Family { spline_first_order, gaussian, custom };

  using Evaluator = std::function<double(const Vector&, const Vector&)>;

  static Kernel spline_first_order() {
    Kernel k;
    k.family_ = Family::spline_first_order;
    k.name_ = "spline_first_order";
    k.eval_ = [](const Vector& a, const Vector& b) {
      double v = 1.0;
      for (Index i = 0; i < a.size(); ++i) v *= std::min(a[i], b[i]);
      return v;
    };
    return k;
  }

  static Kernel gaussian(double eta) {
    require(eta > 0, "invalid-parameter", "gaussian kernel needs length-scale eta > 0");
    Kernel k;
    k.family_ = Family::gaussian;
    k.name_ = "gaussian";
    k.eta_ = eta;
    k.eval_ = [eta](const Vector& a, const Vector& b) {
      return std::exp(-(a - b).squaredNorm() / eta);
    };
    return k;
  }

  static Kernel custom(Evaluator fn, std::string name = "custom") {
    Kernel k;
    k.family_ = Family::custom;
    k.name_ = std::move(name);
    k.eval_ = std::move(fn);
    return k;
  }

  double operator()(const Vector& a, const Vector& b) const { return eval_(a, b); }

  double operator()(double a, double b) const {
    Vector va(1), vb(1);
    va[0] = a;
    vb[0] = b;
    return eval_(va, vb);
  }

  Family family() const { return family_; }
  const std::string& name() const { return name_; }
  double eta() const { return eta_; }

 private:
  Family family_ = Family::custom;
  std::string name_;
  double eta_ = 0.0;
  Evaluator eval_;
};

/// Kernel matrix on a point set (rows of `pts`), symmetrized against
/// round-off so eigensolvers see an exactly symmetric input.
inline Matrix kernel_matrix(const Kernel& kernel, const Matrix& pts) {
  const Index n = pts.rows();
  Matrix K(n, n);
  for (Index i = 0; i < n; ++i) {
    const Vector xi = pts.row(i).transpose();
    K(i, i) = kernel(xi, xi);
    for (Index j = i + 1; j < n; ++j) {
      const double v = kernel(xi, pts.row(j).transpose());
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

}  // namespace dgpr

#endif
