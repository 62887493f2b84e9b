#ifndef DGPR_STATISTICS_HPP
#define DGPR_STATISTICS_HPP

#include <vector>

#include "dgpr/basis.hpp"
#include "dgpr/dataset.hpp"

namespace dgpr {

/// One agent's contribution: outer product G_m^T G_m and the vector G_m^T y_m.
struct LocalStatistics {
  Matrix outer;   // E x E, rank <= 1
  Vector moment;  // E
};

/// Consensus sufficient statistics V = G^T G / M and z = G^T y / M.
struct SufficientStatistics {
  Matrix V;
  Vector z;
  long M = 0;

  int basis_dim() const { return static_cast<int>(z.size()); }
};

inline LocalStatistics local_statistics(const Vector& x, double y, const Basis& basis) {
  RowVector g(basis.dim());
  basis.row_into(x, g);
  LocalStatistics local;
  local.outer = g.transpose() * g;
  local.moment = g.transpose() * y;
  return local;
}

/// Mean of the local pairs. Accumulation runs in list order, coordinate by
/// coordinate, so that an exact-averaging consensus oracle over the same
/// locals reproduces the result bit for bit.
inline SufficientStatistics aggregate_statistics(const std::vector<LocalStatistics>& locals) {
  require(!locals.empty(), "invalid-input", "no local statistics to aggregate");
  const int dim = static_cast<int>(locals.front().moment.size());
  SufficientStatistics stats;
  stats.V = Matrix::Zero(dim, dim);
  stats.z = Vector::Zero(dim);
  stats.M = static_cast<long>(locals.size());
  for (const auto& local : locals) {
    require(local.moment.size() == dim && local.outer.rows() == dim && local.outer.cols() == dim,
            "invalid-input", "local statistics dimensions disagree");
    for (int j = 0; j < dim; ++j) {
      for (int i = 0; i < dim; ++i) stats.V(i, j) += local.outer(i, j);
      stats.z[j] += local.moment[j];
    }
  }
  stats.V /= static_cast<double>(stats.M);
  stats.z /= static_cast<double>(stats.M);
  return stats;
}

/// Centralized statistics over a whole dataset, computed as the agent-ordered
/// aggregation of per-row locals.
inline SufficientStatistics compute_statistics(const Dataset& data, const Basis& basis) {
  const int dim = basis.dim();
  SufficientStatistics stats;
  stats.V = Matrix::Zero(dim, dim);
  stats.z = Vector::Zero(dim);
  stats.M = static_cast<long>(data.size());
  RowVector g(dim);
  for (Index m = 0; m < data.size(); ++m) {
    basis.row_into(data.input(m), g);
    const double y = data.y[m];
    for (int j = 0; j < dim; ++j) {
      const double gj = g[j];
      for (int i = 0; i < dim; ++i) stats.V(i, j) += g[i] * gj;
      stats.z[j] += gj * y;
    }
  }
  stats.V /= static_cast<double>(stats.M);
  stats.z /= static_cast<double>(stats.M);
  return stats;
}

}  // namespace dgpr

#endif
