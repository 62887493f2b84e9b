#include <catch2/catch_amalgamated.hpp>

#include "dgpr/protocols.hpp"
#include "dgpr/synthetic.hpp"

using namespace dgpr;
using Catch::Approx;

namespace {

struct Scenario {
  std::shared_ptr<const EigenSystem> eigen;
  Basis basis;
  Dataset data;
};

Scenario make_scenario(int agents, int dim, std::uint64_t seed) {
  auto eigen = std::make_shared<const EigenSystem>(spline_eigensystem(dim));
  Basis basis = Basis::kl_eigen(eigen, dim);
  const InputMeasure mu = InputMeasure::uniform(Domain::unit_interval());
  const SyntheticTruth truth = sample_truth(eigen, dim, seed);
  Dataset data = generate_dataset(truth, mu, agents, 0.01, seed + 1);
  return {eigen, std::move(basis), std::move(data)};
}

}  // namespace

TEST_CASE("distributed fit A") {
  const int agents = 20;
  const auto scenario = make_scenario(agents, 5, 201);
  const auto topo = NetworkTopology::erdos_renyi(agents, 0.3, 7);
  const auto gammas = TuningGrid::default_gammas(15);

  SECTION("exact averaging reproduces the centralized fit bit for bit") {
    ConsensusConfig config;
    config.exact_averaging = true;
    const DistributedFitA fit =
        distributed_fit_A(scenario.data, scenario.basis, 0.01, gammas, topo, config);

    const SufficientStatistics stats = compute_statistics(scenario.data, scenario.basis);
    auto [gamma, eval] = tune_A(stats, scenario.basis.prior_matrix(), 0.01, gammas);
    const CoefficientEstimate central = estimate_A(stats, scenario.basis, 0.01, gamma);

    for (int agent = 0; agent < agents; ++agent) {
      CHECK(fit.gammas[agent] == gamma);
      for (int e = 0; e < 5; ++e) {
        CHECK(fit.coefficients(agent, e) == central.a_hat[e]);  // exact
      }
    }
    CHECK(fit.max_disagreement == 0.0);
  }

  SECTION("finite tolerance keeps agents within 1e-6 of each other") {
    ConsensusConfig config;
    config.tolerance = 1e-9;
    const DistributedFitA fit =
        distributed_fit_A(scenario.data, scenario.basis, 0.01, gammas, topo, config);
    CHECK(fit.converged);
    CHECK(fit.max_disagreement < 1e-6);
  }

  SECTION("payload accounting is exactly E^2 + E scalars per round") {
    ConsensusConfig config;
    config.tolerance = 1e-6;
    const DistributedFitA fit =
        distributed_fit_A(scenario.data, scenario.basis, 0.01, gammas, topo, config);
    CHECK(fit.payload_scalars_per_round == 5 * 5 + 5);
    CHECK(fit.rounds > 0);
  }
}

TEST_CASE("distributed fit B") {
  const int agents = 20;
  const auto scenario = make_scenario(agents, 6, 301);
  const auto topo = NetworkTopology::erdos_renyi(agents, 0.3, 11);
  const TuningGrid grid{{0.0, 1.0}, {2, 4, 6}};

  SECTION("exact averaging matches centralized tune_B and estimate_B") {
    ConsensusConfig config;
    config.exact_averaging = true;
    const DistributedFitB fit =
        distributed_fit_B(scenario.data, scenario.basis, 0.01, grid, topo, config);

    const SufficientStatistics stats = compute_statistics(scenario.data, scenario.basis);
    const TuneBResult central =
        tune_B(stats.z, stats.V, *scenario.eigen, 0.01, stats.M, grid, nullptr);
    const CoefficientEstimate est =
        estimate_B(stats, *scenario.eigen, 0.01, central.gamma, central.e_prime);

    for (int agent = 0; agent < agents; ++agent) {
      CHECK(fit.gammas[agent] == central.gamma);
      CHECK(fit.truncations[agent] == central.e_prime);
      for (int e = 0; e < 6; ++e) {
        CHECK(fit.coefficients(agent, e) == Approx(est.a_hat[e]).margin(1e-12));
      }
      CHECK(fit.evaluations[agent].objective ==
            Approx(central.eval.objective).margin(1e-12));
    }
  }

  SECTION("payload accounting: E + |Gamma||Omega|E scalars per round") {
    ConsensusConfig config;
    config.tolerance = 1e-8;
    const DistributedFitB fit =
        distributed_fit_B(scenario.data, scenario.basis, 0.01, grid, topo, config);
    CHECK(fit.payload_scalars_per_round == 6 + 2 * 3 * 6);
    CHECK(fit.rounds_z > 0);
    CHECK(fit.rounds_zhat > 0);
    CHECK(fit.converged);
  }

  SECTION("B moves fewer scalars than A when |Gamma||Omega| < E") {
    const TuningGrid small{{0.0}, {3}};  // one pair < E = 6
    ConsensusConfig config;
    config.exact_averaging = true;
    const DistributedFitB fit_b =
        distributed_fit_B(scenario.data, scenario.basis, 0.01, small, topo, config);
    const DistributedFitA fit_a =
        distributed_fit_A(scenario.data, scenario.basis, 0.01, {1.0}, topo, config);
    CHECK(fit_b.payload_scalars_per_round < fit_a.payload_scalars_per_round);
  }
}

TEST_CASE("protocol relabeling invariance") {
  const int agents = 8;
  const auto scenario = make_scenario(agents, 3, 401);
  const std::vector<int> perm{3, 1, 7, 0, 6, 2, 5, 4};

  const NetworkTopology topo = NetworkTopology::ring(agents);
  std::vector<std::pair<int, int>> mapped;
  for (auto [u, v] : topo.edges()) mapped.emplace_back(perm[u], perm[v]);
  const NetworkTopology relabeled(agents, mapped);

  Dataset permuted = scenario.data;
  for (int m = 0; m < agents; ++m) {
    permuted.x.row(perm[m]) = scenario.data.x.row(m);
    permuted.y[perm[m]] = scenario.data.y[m];
  }

  ConsensusConfig config;
  config.tolerance = 1e-10;
  const auto gammas = TuningGrid::default_gammas(8);
  const DistributedFitA a =
      distributed_fit_A(scenario.data, scenario.basis, 0.01, gammas, topo, config);
  const DistributedFitA b =
      distributed_fit_A(permuted, scenario.basis, 0.01, gammas, relabeled, config);
  for (int m = 0; m < agents; ++m) {
    CHECK(b.gammas[perm[m]] == a.gammas[m]);
    for (int e = 0; e < 3; ++e) {
      CHECK(b.coefficients(perm[m], e) == Approx(a.coefficients(m, e)).margin(1e-9));
    }
  }
}
