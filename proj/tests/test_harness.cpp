#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "dgpr/experiments.hpp"

using namespace dgpr;
using Catch::Approx;

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("synthetic truths") {
  const auto eigen = std::make_shared<const EigenSystem>(spline_eigensystem(20));

  SECTION("deterministic given the seed") {
    const SyntheticTruth a = sample_truth(eigen, 20, 5);
    const SyntheticTruth b = sample_truth(eigen, 20, 5);
    CHECK((a.coefficients() - b.coefficients()).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("pointwise variance matches sum lambda_e phi_e^2") {
    Vector x(1);
    x << 0.3;
    double expected = 0.0;
    for (int e = 0; e < 20; ++e) {
      const double phi = eigen->phi(e, x);
      expected += eigen->eigenvalue(e) * phi * phi;
    }
    const int draws = 10000;
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < draws; ++s) {
      const double v = sample_truth(eigen, 20, derive_seed(99, s))(x);
      sum += v;
      sum_sq += v * v;
    }
    const double var = sum_sq / draws - (sum / draws) * (sum / draws);
    // variance of a variance estimate: roughly 2 var^2 / n for Gaussians
    const double se = expected * std::sqrt(2.0 / draws);
    CHECK(var == Approx(expected).margin(3.0 * se));
  }

  SECTION("mean energy matches the truncated spectrum mass") {
    const int draws = 10000;
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < draws; ++s) {
      const double energy = sample_truth(eigen, 20, derive_seed(98, s)).energy();
      sum += energy;
      sum_sq += energy * energy;
    }
    const double expected = 0.5 - eigen->tail_sum(20);
    const double mean = sum / draws;
    const double se = std::sqrt((sum_sq / draws - mean * mean) / draws);
    CHECK(mean == Approx(expected).margin(3.0 * se));
  }
}

TEST_CASE("dataset generation") {
  const auto eigen = std::make_shared<const EigenSystem>(spline_eigensystem(10));
  const InputMeasure mu = InputMeasure::uniform(Domain::unit_interval());
  const SyntheticTruth truth = sample_truth(eigen, 10, 7);

  SECTION("zero noise reproduces the truth exactly") {
    const Dataset data = generate_dataset(truth, mu, 50, 0.0, 8);
    for (Index m = 0; m < 50; ++m) {
      CHECK(data.y[m] == Approx(truth(data.input(m))).margin(0.0));
    }
  }

  SECTION("inputs pass a Kolmogorov-Smirnov uniformity test at 1%") {
    const Dataset data = generate_dataset(truth, mu, 4000, 0.01, 9);
    std::vector<double> xs(data.size());
    for (Index m = 0; m < data.size(); ++m) xs[m] = data.x(m, 0);
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      d = std::max(d, std::abs((i + 1) / n - xs[i]));
      d = std::max(d, std::abs(xs[i] - i / n));
    }
    CHECK(d < 1.63 / std::sqrt(n));  // 1% critical value
  }

  SECTION("noise sample variance within three standard errors") {
    const double s2 = 0.04;
    const Dataset data = generate_dataset(truth, mu, 20000, s2, 10);
    double acc = 0.0;
    for (Index m = 0; m < data.size(); ++m) {
      const double r = data.y[m] - truth(data.input(m));
      acc += r * r;
    }
    const double est = acc / data.size();
    const double se = s2 * std::sqrt(2.0 / data.size());
    CHECK(est == Approx(s2).margin(3.0 * se));
  }
}

TEST_CASE("MSE under the input measure") {
  const auto eigen = std::make_shared<const EigenSystem>(spline_eigensystem(10));
  const InputMeasure mu = InputMeasure::uniform(Domain::unit_interval());
  const SyntheticTruth truth = sample_truth(eigen, 10, 11);
  const auto truth_fn = [&](const Vector& x) { return truth(x); };

  SECTION("an estimator equal to the truth scores zero") {
    CHECK(mse_under_mu(truth_fn, truth_fn, mu, MseMethod::quadrature(1000)) == 0.0);
  }

  SECTION("the zero estimator scores the truth's energy") {
    const auto zero = [](const Vector&) { return 0.0; };
    const double mse = mse_under_mu(zero, truth_fn, mu, MseMethod::quadrature(20000));
    CHECK(mse == Approx(truth.energy()).epsilon(1e-3));
  }

  SECTION("quadrature and Monte Carlo agree") {
    const auto shifted = [&](const Vector& x) { return truth(x) + 0.3; };
    const double quad = mse_under_mu(shifted, truth_fn, mu, MseMethod::quadrature(10000));
    const double mc = mse_under_mu(shifted, truth_fn, mu, MseMethod::monte_carlo(1000000, 12));
    CHECK(quad == Approx(0.09).margin(1e-6));
    CHECK(mc == Approx(quad).margin(3e-4));
  }
}

TEST_CASE("gamma sweep matches the operation-by-operation path") {
  const auto eigen = std::make_shared<const EigenSystem>(spline_eigensystem(8));
  const Basis basis = Basis::kl_eigen(eigen, 8);
  const InputMeasure mu = InputMeasure::uniform(Domain::unit_interval());
  const SyntheticTruth truth = sample_truth(eigen, 8, 13);
  const Dataset data = generate_dataset(truth, mu, 300, 0.01, 14);
  const SufficientStatistics stats = compute_statistics(data, basis);

  const detail::KlGammaSweep sweep(stats, eigen->eigenvalues(), 0.01);
  for (double gamma : {1e-3, 0.1, 1.0, 10.0, 1e3}) {
    const SureEvaluation direct = sure_risk_A(stats, basis.prior_matrix(), 0.01, gamma);
    const SureEvaluation fast = sweep.sure(gamma);
    CHECK(fast.objective == Approx(direct.objective).margin(1e-10));
    CHECK(fast.residual == Approx(direct.residual).margin(1e-10));
    const CoefficientEstimate est = estimate_A(stats, basis, 0.01, gamma);
    CHECK((sweep.coefficients(gamma) - est.a_hat).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("bounds experiment, desk scale") {
  BoundsExperimentConfig config;
  config.e_min = 1;
  config.e_max = 12;
  config.M = 800;
  config.mc_runs = 8;
  config.seed = 15;
  const BoundsExperimentResult result = run_bounds_experiment(config);
  REQUIRE(result.rows.size() == 12);
  CHECK(result.normalization == Approx(0.5).margin(1e-12));
  for (const auto& row : result.rows) {
    CHECK(row.bnd_a.feasible);
    CHECK(row.bnd_b.feasible);
    CHECK(row.bnd_a.value >= row.lower);
    CHECK(row.bnd_b.value >= row.lower);
    CHECK(row.mc_err_a > 0.0);
    CHECK(row.mc_err_b > 0.0);
  }
}

TEST_CASE("sure study, desk scale") {
  SureStudyConfig config;
  config.M = 300;
  config.E = 40;
  config.runs = 8;
  config.seed = 16;
  const SureStudyResult result = run_sure_study(config);
  REQUIRE(result.runs.size() == 8);
  CHECK(result.sp_a > 0.0);
  CHECK(result.sp_a <= 1.0 + 1e-12);
  CHECK(result.sp_b <= 1.0 + 1e-12);
  for (const auto& run : result.runs) {
    CHECK(run.oracle_a <= run.sure_a + 1e-15);
    CHECK(run.oracle_b <= run.sure_b + 1e-15);
  }
}

TEST_CASE("trend experiment, desk scale") {
  TrendConfig config;
  config.m_grid = {100, 400};
  config.runs = 10;
  config.seed = 17;
  const auto rows = run_trend_experiment(config);
  REQUIRE(rows.size() == 4);  // fixed-E and schedule, two M each
  CHECK(rows[0].M == 100);
  CHECK_FALSE(rows[0].schedule);
  CHECK(rows[2].schedule);
  CHECK(rows[2].E == 10);  // ceil(sqrt(100))
  for (const auto& row : rows) {
    CHECK(row.err_a > row.tail);  // estimator error dominates the floor
  }
}

TEST_CASE("field pipeline on a synthetic CSV") {
  // build a small smooth 2-d field and run the Colorado-style protocol
  const std::string csv = "/tmp/dgpr_field_synth.csv";
  {
    Rng rng(18);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 0.05);
    Dataset data;
    data.x.resize(240, 2);
    data.y.resize(240);
    for (int m = 0; m < 240; ++m) {
      const double a = unif(rng), b = unif(rng);
      data.x(m, 0) = a * 12.0 - 6.0;  // deliberately not unit-box
      data.x(m, 1) = b * 3.0 + 40.0;
      data.y[m] = std::sin(3.0 * a) * std::cos(2.0 * b) + gauss(rng);
    }
    write_dataset_csv(csv, data);
  }

  FieldConfig config;
  config.csv_path = csv;
  config.basis_dim = 8;
  config.kernel_eta = 0.25;
  config.kl_anchor_count = 200;
  config.gammas_a = TuningGrid::default_gammas(10, 1e-5, 1e5);
  config.runs = 3;
  config.seed = 19;
  const auto runs = field_pipeline(config);
  REQUIRE(runs.size() == 3);
  for (const auto& run : runs) {
    CHECK(run.sigma2_hat >= 0.0);
    CHECK(run.rss_oracle_a <= run.rss_sure_a + 1e-12);
    CHECK(run.rss_oracle_b <= run.rss_sure_b + 1e-12);
    CHECK(run.e_prime_sure_b >= 2);
  }

  SECTION("default configuration (E = 20, eta = 0.1, gamma = 0 ladder) runs end to end") {
    FieldConfig full;
    full.csv_path = csv;
    full.runs = 1;
    full.seed = 20;
    const auto full_runs = field_pipeline(full);
    REQUIRE(full_runs.size() == 1);
    CHECK(full_runs[0].rss_oracle_a <= full_runs[0].rss_sure_a + 1e-12);
    CHECK(full_runs[0].rss_oracle_b <= full_runs[0].rss_sure_b + 1e-12);
    CHECK(full_runs[0].e_prime_sure_b % 2 == 0);  // ladder is {2,4,...,20}
  }

  SECTION("nystrom basis variant runs end to end") {
    FieldConfig ny = config;
    ny.basis_kind = "nystrom";
    ny.kl_anchor_count = 60;
    ny.expected_gram_samples = 20000;
    ny.runs = 2;
    const auto ny_runs = field_pipeline(ny);
    REQUIRE(ny_runs.size() == 2);
    for (const auto& run : ny_runs) {
      CHECK(run.rss_oracle_b <= run.rss_sure_b + 1e-12);
    }
  }

  SECTION("rescaling maps every axis onto the unit interval") {
    const Dataset raw = read_dataset_csv(csv);
    const Dataset scaled = rescale_to_unit_box(raw);
    for (int i = 0; i < 2; ++i) {
      CHECK(scaled.x.col(i).minCoeff() == 0.0);
      CHECK(scaled.x.col(i).maxCoeff() == 1.0);
    }
  }
}
