#ifndef DGPR_SYNTHETIC_HPP
#define DGPR_SYNTHETIC_HPP

#include <functional>
#include <memory>
#include <utility>

#include "dgpr/dataset.hpp"
#include "dgpr/eigensystem.hpp"
#include "dgpr/measure.hpp"

namespace dgpr {

/// A realization of the prior process truncated at `truncation` terms:
/// f(x) = sum_e a_e phi_e(x) with independent a_e ~ N(0, lambda_e).
class SyntheticTruth {
 public:
  SyntheticTruth(std::shared_ptr<const EigenSystem> eigen, Vector coeffs)
      : eigen_(std::move(eigen)), coeffs_(std::move(coeffs)) {}

  double operator()(const Vector& x) const {
    double acc = 0.0;
    for (Index e = 0; e < coeffs_.size(); ++e) acc += coeffs_[e] * eigen_->phi(static_cast<int>(e), x);
    return acc;
  }

  const Vector& coefficients() const { return coeffs_; }
  const EigenSystem& eigen() const { return *eigen_; }
  int truncation() const { return static_cast<int>(coeffs_.size()); }

  /// E ||f||^2 contributed by the retained terms.
  double energy() const { return coeffs_.squaredNorm(); }

 private:
  std::shared_ptr<const EigenSystem> eigen_;
  Vector coeffs_;
};

inline SyntheticTruth sample_truth(std::shared_ptr<const EigenSystem> eigen, int truncation,
                                   std::uint64_t seed) {
  require(truncation >= 1 && truncation <= eigen->max_terms(), "invalid-parameter",
          "truncation exceeds available eigenpairs");
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector coeffs(truncation);
  for (int e = 0; e < truncation; ++e) {
    coeffs[e] = std::sqrt(eigen->eigenvalue(e)) * gauss(rng);
  }
  return SyntheticTruth(std::move(eigen), std::move(coeffs));
}

/// i.i.d. inputs from mu, outputs f(x) plus Gaussian noise; deterministic
/// given the seed.
inline Dataset generate_dataset(const SyntheticTruth& truth, const InputMeasure& mu, long samples,
                                double noise_variance, std::uint64_t seed) {
  require(samples >= 1, "invalid-parameter", "need at least one sample");
  require(noise_variance >= 0, "invalid-parameter", "noise variance must be >= 0");
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double noise_sd = std::sqrt(noise_variance);
  Dataset data;
  data.x.resize(samples, mu.dim());
  data.y.resize(samples);
  data.noise_variance = noise_variance;
  for (long m = 0; m < samples; ++m) {
    const Vector x = mu.sample(rng);
    data.x.row(m) = x.transpose();
    data.y[m] = truth(x) + noise_sd * gauss(rng);
  }
  return data;
}

struct MseMethod {
  enum class Type { quadrature, monte_carlo };
  Type type = Type::quadrature;
  long n = 10000;
  std::uint64_t seed = 0;

  static MseMethod quadrature(long nodes = 10000) { return {Type::quadrature, nodes, 0}; }
  static MseMethod monte_carlo(long samples, std::uint64_t seed) {
    return {Type::monte_carlo, samples, seed};
  }
};

/// integral of (truth - estimate)^2 against mu.
inline double mse_under_mu(const std::function<double(const Vector&)>& estimate,
                           const std::function<double(const Vector&)>& truth,
                           const InputMeasure& mu, const MseMethod& method) {
  require(method.n >= 1, "invalid-parameter", "need at least one node/sample");
  if (method.type == MseMethod::Type::quadrature) {
    return integrate(
        mu,
        [&](const Vector& x) {
          const double d = truth(x) - estimate(x);
          return d * d;
        },
        method.n);
  }
  Rng rng(method.seed);
  double acc = 0.0;
  for (long s = 0; s < method.n; ++s) {
    const Vector x = mu.sample(rng);
    const double d = truth(x) - estimate(x);
    acc += d * d;
  }
  return acc / static_cast<double>(method.n);
}

}  // namespace dgpr

#endif
