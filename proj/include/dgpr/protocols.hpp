#ifndef DGPR_PROTOCOLS_HPP
#define DGPR_PROTOCOLS_HPP

#include <utility>
#include <vector>

#include "dgpr/consensus.hpp"
#include "dgpr/sure.hpp"

namespace dgpr {

namespace detail {

inline double column_spread(const Matrix& per_agent_rows) {
  double spread = 0.0;
  for (Index j = 0; j < per_agent_rows.cols(); ++j) {
    spread = std::max(spread, per_agent_rows.col(j).maxCoeff() - per_agent_rows.col(j).minCoeff());
  }
  return spread;
}

}  // namespace detail

/// Outcome of the estimator-A protocol: one consensus over the stacked local
/// pair (G_m^T G_m, G_m^T y_m), E^2 + E scalars per round, then purely local
/// SURE tuning and estimation at every agent.
struct DistributedFitA {
  Vector gammas;        // selected gamma per agent
  Matrix coefficients;  // one coefficient row per agent
  std::vector<SureEvaluation> evaluations;
  int rounds = 0;
  bool converged = false;
  long payload_scalars_per_round = 0;
  double max_disagreement = 0.0;
};

inline DistributedFitA distributed_fit_A(const Dataset& data, const Basis& basis,
                                         double noise_variance,
                                         const std::vector<double>& gammas,
                                         const NetworkTopology& topology,
                                         const ConsensusConfig& config) {
  const int n = topology.size();
  require(data.size() == n, "invalid-input", "one measurement per agent required (N = M)");
  const int dim = basis.dim();

  Matrix payload(n, dim * dim + dim);
  for (int m = 0; m < n; ++m) {
    const LocalStatistics local = local_statistics(data.input(m), data.y[m], basis);
    payload.row(m).head(dim * dim) =
        Eigen::Map<const RowVector>(local.outer.data(), dim * dim);
    payload.row(m).tail(dim) = local.moment.transpose();
  }

  const ConsensusResult consensus = run_average_consensus(payload, topology, config);

  DistributedFitA result;
  result.rounds = consensus.rounds;
  result.converged = consensus.converged;
  result.payload_scalars_per_round = consensus.payload_scalars_per_round;
  result.gammas.resize(n);
  result.coefficients.resize(n, dim);
  result.evaluations.reserve(n);
  for (int agent = 0; agent < n; ++agent) {
    const RowVector state = consensus.values.row(agent);  // contiguous copy for the Map
    SufficientStatistics stats;
    stats.M = n;
    stats.V = Eigen::Map<const Matrix>(state.data(), dim, dim);
    stats.z = state.tail(dim).transpose();
    auto [gamma, eval] = tune_A(stats, basis.prior_matrix(), noise_variance, gammas);
    const CoefficientEstimate est = estimate_A(stats, basis, noise_variance, gamma);
    result.gammas[agent] = gamma;
    result.coefficients.row(agent) = est.a_hat.transpose();
    result.evaluations.push_back(eval);
  }
  result.max_disagreement = detail::column_spread(result.coefficients);
  return result;
}

/// Outcome of the estimator-B protocol: a consensus on G_m^T y_m (E scalars)
/// yields z, each agent expands the coefficient family locally, and a second
/// consensus on the stacked G_m^T G_m a(gamma, E') products (|Gamma||Omega|E
/// scalars) yields the prediction family used by the local SURE tuning.
struct DistributedFitB {
  Vector gammas;
  std::vector<int> truncations;
  Matrix coefficients;
  std::vector<SureEvaluation> evaluations;
  int rounds_z = 0;
  int rounds_zhat = 0;
  bool converged = false;
  long payload_scalars_per_round = 0;
  double max_disagreement = 0.0;
};

inline DistributedFitB distributed_fit_B(const Dataset& data, const Basis& basis,
                                         double noise_variance, const TuningGrid& grid,
                                         const NetworkTopology& topology,
                                         const ConsensusConfig& config) {
  const int n = topology.size();
  require(data.size() == n, "invalid-input", "one measurement per agent required (N = M)");
  require(basis.kind() == Basis::Kind::kl_eigen, "invalid-parameter",
          "the B protocol runs on a KL eigenfunction basis");
  const EigenSystem& eigen = *basis.eigensystem();
  const int dim = basis.dim();
  const int pairs = grid.pairs();

  Matrix rows(n, dim);
  Matrix moment_payload(n, dim);
  for (int m = 0; m < n; ++m) {
    basis.row_into(data.input(m), rows.row(m));
    moment_payload.row(m) = rows.row(m) * data.y[m];
  }

  const ConsensusResult first = run_average_consensus(moment_payload, topology, config);

  // Each agent builds its coefficient family from its own converged z and
  // contributes the local products for the second consensus.
  std::vector<Matrix> families(n);
  Matrix product_payload(n, pairs * dim);
  for (int agent = 0; agent < n; ++agent) {
    const Vector z = first.values.row(agent).transpose();
    families[agent] = b_coefficient_family(z, eigen, noise_variance, n, grid);
    for (int p = 0; p < pairs; ++p) {
      // G_m^T (G_m a): rank-1, so a dot product and a scaled row
      const double inner = rows.row(agent).dot(families[agent].col(p));
      product_payload.row(agent).segment(p * dim, dim) = rows.row(agent) * inner;
    }
  }

  const ConsensusResult second = run_average_consensus(product_payload, topology, config);

  DistributedFitB result;
  result.rounds_z = first.rounds;
  result.rounds_zhat = second.rounds;
  result.converged = first.converged && second.converged;
  result.payload_scalars_per_round =
      first.payload_scalars_per_round + second.payload_scalars_per_round;
  result.gammas.resize(n);
  result.truncations.resize(n);
  result.coefficients.resize(n, dim);
  result.evaluations.reserve(n);
  for (int agent = 0; agent < n; ++agent) {
    const Vector z = first.values.row(agent).transpose();
    Matrix zhat(dim, pairs);
    for (int p = 0; p < pairs; ++p) {
      zhat.col(p) = second.values.row(agent).segment(p * dim, dim).transpose();
    }
    const TuneBResult tuned = tune_B(z, zhat, eigen, noise_variance, n, grid);
    result.gammas[agent] = tuned.gamma;
    result.truncations[agent] = tuned.e_prime;
    int gi = 0;
    while (grid.gammas[gi] != tuned.gamma) ++gi;
    int ti = 0;
    while (grid.truncations[ti] != tuned.e_prime) ++ti;
    result.coefficients.row(agent) = families[agent].col(grid.pair_index(gi, ti)).transpose();
    result.evaluations.push_back(tuned.eval);
  }
  result.max_disagreement = detail::column_spread(result.coefficients);
  return result;
}

}  // namespace dgpr

#endif
