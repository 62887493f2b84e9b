#ifndef DGPR_MEASURE_HPP
#define DGPR_MEASURE_HPP

#include <cmath>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include "dgpr/common.hpp"

namespace dgpr {

/// Input-location distribution mu: either uniform on a hyper-rectangle or a
/// Gaussian mixture with per-component, per-dimension variances (axis-aligned
/// components, i.e. tensor products of one-dimensional Gaussians).
class InputMeasure {
 public:
  enum class Kind { uniform, gaussian_mixture };

  static InputMeasure uniform(Domain box) {
    InputMeasure m;
    m.kind_ = Kind::uniform;
    m.box_ = std::move(box);
    return m;
  }

  /// `means` and `variances` are C x d (one row per component). Variances may
  /// be zero for degenerate test components; density() then requires > 0.
  static InputMeasure gaussian_mixture(Vector weights, Matrix means, Matrix variances) {
    require(weights.size() == means.rows() && means.rows() == variances.rows() &&
                means.cols() == variances.cols() && weights.size() >= 1,
            "invalid-parameter", "mixture weights/means/variances shapes disagree");
    require(weights.minCoeff() >= 0, "invalid-parameter", "mixture weights must be nonnegative");
    require(std::abs(weights.sum() - 1.0) <= 1e-12, "invalid-parameter",
            "mixture weights must sum to 1 within 1e-12");
    require(variances.minCoeff() >= 0, "invalid-parameter", "mixture variances must be >= 0");
    InputMeasure m;
    m.kind_ = Kind::gaussian_mixture;
    m.weights_ = std::move(weights);
    m.means_ = std::move(means);
    m.variances_ = std::move(variances);
    return m;
  }

  static InputMeasure gaussian(Vector mean, Vector variance) {
    Vector w(1);
    w[0] = 1.0;
    Matrix mu(1, mean.size()), var(1, variance.size());
    mu.row(0) = mean.transpose();
    var.row(0) = variance.transpose();
    return gaussian_mixture(w, mu, var);
  }

  Kind kind() const { return kind_; }

  int dim() const {
    return kind_ == Kind::uniform ? box_.dim() : static_cast<int>(means_.cols());
  }

  Vector sample(Rng& rng) const {
    const int d = dim();
    Vector x(d);
    if (kind_ == Kind::uniform) {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (int i = 0; i < d; ++i) {
        x[i] = box_.lower[i] + (box_.upper[i] - box_.lower[i]) * unif(rng);
      }
      return x;
    }
    std::discrete_distribution<int> pick(weights_.data(), weights_.data() + weights_.size());
    const int c = pick(rng);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < d; ++i) {
      x[i] = means_(c, i) + std::sqrt(variances_(c, i)) * gauss(rng);
    }
    return x;
  }

  double density(const Vector& x) const {
    if (kind_ == Kind::uniform) {
      return box_.contains(x) ? 1.0 / box_.volume() : 0.0;
    }
    double p = 0.0;
    for (Index c = 0; c < weights_.size(); ++c) {
      double comp = 1.0;
      for (Index i = 0; i < means_.cols(); ++i) {
        const double var = variances_(c, i);
        require(var > 0, "invalid-parameter", "density undefined for degenerate mixture component");
        const double z = x[i] - means_(c, i);
        comp *= std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * std::numbers::pi * var);
      }
      p += weights_[c] * comp;
    }
    return p;
  }

  /// Box within which quadrature against this measure is performed. The
  /// Gaussian tails beyond 8.5 sigma contribute below double precision.
  Domain quadrature_box() const {
    if (kind_ == Kind::uniform) return box_;
    const double span = 8.5;
    const int d = dim();
    Vector lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
      double l = means_(0, i), h = means_(0, i);
      for (Index c = 0; c < weights_.size(); ++c) {
        const double s = std::sqrt(std::max(variances_(c, i), 1e-300));
        l = std::min(l, means_(c, i) - span * s);
        h = std::max(h, means_(c, i) + span * s);
      }
      lo[i] = l;
      hi[i] = h + (h == l ? 1e-12 : 0.0);
    }
    return Domain{lo, hi};
  }

  const Domain& support() const { return box_; }
  const Vector& weights() const { return weights_; }
  const Matrix& means() const { return means_; }
  const Matrix& variances() const { return variances_; }

 private:
  Kind kind_ = Kind::uniform;
  Domain box_;
  Vector weights_;
  Matrix means_;
  Matrix variances_;
};

namespace detail {

// Splits a total node budget into equal per-axis counts, capped so the tensor
// grid stays within the budget in d <= 3.
inline long nodes_per_axis(long total, int d) {
  if (d <= 1) return std::max<long>(total, 1);
  const double root = std::pow(static_cast<double>(total), 1.0 / d);
  return std::max<long>(static_cast<long>(root), 2);
}

}  // namespace detail

/// Integrates g against the measure with a composite-midpoint tensor rule on
/// the quadrature box, weighting nodes by the density. `total_nodes` caps the
/// grid size. Intended for d <= 3.
inline double integrate(const InputMeasure& mu, const std::function<double(const Vector&)>& g,
                        long total_nodes = 10000) {
  const int d = mu.dim();
  require(d <= 3, "invalid-parameter", "tensor quadrature supports d <= 3");
  const Domain box = mu.quadrature_box();
  const long per_axis = detail::nodes_per_axis(total_nodes, d);

  std::vector<long> idx(d, 0);
  Vector h(d);
  for (int i = 0; i < d; ++i) h[i] = (box.upper[i] - box.lower[i]) / static_cast<double>(per_axis);
  double cell = 1.0;
  for (int i = 0; i < d; ++i) cell *= h[i];

  double acc = 0.0;
  Vector x(d);
  while (true) {
    for (int i = 0; i < d; ++i) x[i] = box.lower[i] + (idx[i] + 0.5) * h[i];
    acc += g(x) * mu.density(x);
    int axis = 0;
    while (axis < d && ++idx[axis] == per_axis) {
      idx[axis] = 0;
      ++axis;
    }
    if (axis == d) break;
  }
  return acc * cell;
}

}  // namespace dgpr

#endif
