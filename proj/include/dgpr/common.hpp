#ifndef DGPR_COMMON_HPP
#define DGPR_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace dgpr {

using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
// Writable row view that also binds rows of column-major matrices.
using RowRef = Eigen::Ref<RowVector, 0, Eigen::InnerStride<>>;

/// Error with a stable machine-readable code (e.g. "invalid-parameter",
/// "singular-normal-equations") alongside the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& code, const std::string& message) {
  if (!condition) fail(code, message);
}

// Relative eigenvalue threshold below which sampled kernel matrices are
// treated as rank-deficient.
inline constexpr double kPsdTol = 1e-10;

// Relative pivot threshold for symmetric positive-definite solves.
inline constexpr double kSolveTol = 1e-12;

using Rng = std::mt19937_64;

/// SplitMix64 step; used to derive independent per-run seeds from a master
/// seed so that experiments are reproducible run by run.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d4a68b9c6295ULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t state = master ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  splitmix64(state);
  return splitmix64(state);
}

struct Domain {
  Vector lower;
  Vector upper;

  int dim() const { return static_cast<int>(lower.size()); }

  bool contains(const Vector& x, double slack = 0.0) const {
    if (x.size() != lower.size()) return false;
    for (Index i = 0; i < x.size(); ++i) {
      if (x[i] < lower[i] - slack || x[i] > upper[i] + slack) return false;
    }
    return true;
  }

  double volume() const {
    double v = 1.0;
    for (Index i = 0; i < lower.size(); ++i) v *= upper[i] - lower[i];
    return v;
  }

  static Domain unit_interval() { return unit_cube(1); }

  static Domain unit_cube(int d) {
    Domain box;
    box.lower = Vector::Zero(d);
    box.upper = Vector::Ones(d);
    return box;
  }

  static Domain rectangle(Vector lo, Vector hi) {
    require(lo.size() == hi.size() && (hi - lo).minCoeff() > 0, "invalid-parameter",
            "domain bounds must satisfy lower < upper");
    return Domain{std::move(lo), std::move(hi)};
  }
};

}  // namespace dgpr

#endif
