#ifndef DGPR_CONSENSUS_HPP
#define DGPR_CONSENSUS_HPP

#include <utility>

#include "dgpr/topology.hpp"

namespace dgpr {

enum class WeightRule { metropolis, uniform };

struct ConsensusConfig {
  WeightRule rule = WeightRule::metropolis;
  double eps_w = 0.0;  // uniform rule only
  // Termination: every agent within `tolerance` of the true average on every
  // coordinate. The true average is simulator-side ground truth; a deployment
  // would rely on max_rounds instead.
  double tolerance = 1e-9;
  int max_rounds = 100000;
  // Skip the iteration and hand every agent the exact average. Used as the
  // zero-tolerance oracle when comparing against centralized computation.
  bool exact_averaging = false;
};

inline Matrix consensus_weights(const NetworkTopology& topology, const ConsensusConfig& config) {
  return config.rule == WeightRule::metropolis ? metropolis_weights(topology)
                                               : uniform_weights(topology, config.eps_w);
}

/// Per-agent state after a consensus run. `values` holds one row per agent;
/// with exact averaging every row equals the initial column means.
struct ConsensusResult {
  Matrix values;
  int rounds = 0;
  bool converged = false;
  double max_deviation = 0.0;
  long payload_scalars_per_round = 0;
};

/// Column means accumulated agent by agent in index order; the arithmetic
/// matches aggregate_statistics so the exact oracle is bit-for-bit equal to
/// the centralized path.
inline RowVector exact_column_average(const Matrix& states) {
  RowVector mean = RowVector::Zero(states.cols());
  for (Index i = 0; i < states.rows(); ++i) {
    for (Index j = 0; j < states.cols(); ++j) mean[j] += states(i, j);
  }
  return mean / static_cast<double>(states.rows());
}

inline Matrix apply_consensus_round(const Matrix& weights, const Matrix& states) {
  return weights * states;
}

/// Synchronous average consensus x <- W x per coordinate. Initial states are
/// one row per agent; returns the final states along with the rounds used and
/// whether the tolerance was met before max_rounds.
inline ConsensusResult run_average_consensus(const Matrix& initial,
                                             const NetworkTopology& topology,
                                             const ConsensusConfig& config) {
  require(initial.rows() == topology.size(), "invalid-input",
          "one state row per agent required");
  ConsensusResult result;
  result.payload_scalars_per_round = initial.cols();
  const RowVector target = exact_column_average(initial);

  if (config.exact_averaging) {
    result.values.resize(topology.size(), initial.cols());
    for (Index i = 0; i < topology.size(); ++i) result.values.row(i) = target;
    result.converged = true;
    return result;
  }

  const Matrix weights = consensus_weights(topology, config);
  Matrix states = initial;
  auto deviation = [&](const Matrix& s) {
    return (s.rowwise() - target).cwiseAbs().maxCoeff();
  };

  result.max_deviation = deviation(states);
  while (result.max_deviation > config.tolerance && result.rounds < config.max_rounds) {
    states = apply_consensus_round(weights, states);
    ++result.rounds;
    result.max_deviation = deviation(states);
  }
  result.converged = result.max_deviation <= config.tolerance;
  result.values = std::move(states);
  return result;
}

}  // namespace dgpr

#endif
