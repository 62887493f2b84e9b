// Experiment CLI around the dgpr library. Every subcommand reads a JSON
// config, writes CSV/JSON outputs into --out-dir, and reports failures as a
// machine-readable error JSON on stdout with a nonzero exit code.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "dgpr/dgpr.hpp"
#include "dgpr/io.hpp"

namespace {

using dgpr::Json;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file")->required();
  cmd->add_option("--out-dir", args.out_dir, "output directory (created if missing)");
  cmd->add_option("--seed", args.seed, "master seed override");
}

Json load_config(const CommonArgs& args) {
  Json config = dgpr::read_json(args.config_path);
  if (args.seed) config["seed"] = *args.seed;
  std::filesystem::create_directories(args.out_dir);
  return config;
}

std::string out_path(const CommonArgs& args, const std::string& name) {
  return (std::filesystem::path(args.out_dir) / name).string();
}

std::uint64_t seed_of(const Json& config) { return config.value("seed", 0ULL); }

dgpr::Kernel kernel_from_config(const Json& j) {
  const std::string family = j.value("family", "gaussian");
  if (family == "gaussian") return dgpr::Kernel::gaussian(j.value("eta", 1.0));
  if (family == "spline_first_order" || family == "spline") {
    return dgpr::Kernel::spline_first_order();
  }
  dgpr::fail("invalid-parameter", "unknown kernel family '" + family + "'");
}

dgpr::InputMeasure measure_from_config(const Json& config, int dim) {
  if (!config.contains("measure")) {
    return dgpr::InputMeasure::uniform(dgpr::Domain::unit_cube(dim));
  }
  const Json& j = config.at("measure");
  const std::string kind = j.value("kind", "uniform");
  if (kind == "uniform") {
    return dgpr::InputMeasure::uniform(dgpr::Domain::unit_cube(j.value("dim", dim)));
  }
  if (kind == "gaussian_mixture") {
    return dgpr::InputMeasure::gaussian_mixture(
        dgpr::detail::vector_from_json(j.at("weights")),
        dgpr::detail::matrix_from_json(j.at("means")),
        dgpr::detail::matrix_from_json(j.at("variances")));
  }
  dgpr::fail("invalid-parameter", "unknown measure kind '" + kind + "'");
}

std::vector<double> gammas_from_config(const Json& j) {
  if (j.is_array()) {
    std::vector<double> g;
    for (const auto& v : j) g.push_back(v.get<double>());
    return g;
  }
  return dgpr::TuningGrid::default_gammas(j.value("count", 50), j.value("lo", 1e-3),
                                          j.value("hi", 1e3));
}

dgpr::TuningGrid grid_from_config(const Json& j) {
  dgpr::TuningGrid grid;
  grid.gammas = gammas_from_config(j.at("gammas"));
  for (const auto& v : j.at("truncations")) grid.truncations.push_back(v.get<int>());
  return grid;
}

dgpr::NetworkTopology topology_from_config(const Json& j, std::uint64_t seed) {
  const std::string kind = j.value("kind", "erdos_renyi");
  if (kind == "csv") return dgpr::NetworkTopology::from_csv(j.at("file").get<std::string>());
  const int n = j.at("n").get<int>();
  if (kind == "path") return dgpr::NetworkTopology::path(n);
  if (kind == "ring") return dgpr::NetworkTopology::ring(n);
  if (kind == "complete") return dgpr::NetworkTopology::complete(n);
  if (kind == "erdos_renyi") {
    const double p = j.value("p", std::min(1.0, 4.0 * std::log(std::max(n, 2)) / n));
    return dgpr::NetworkTopology::erdos_renyi(n, p, j.value("seed", seed));
  }
  dgpr::fail("invalid-parameter", "unknown topology kind '" + kind + "'");
}

dgpr::ConsensusConfig consensus_from_config(const Json& j) {
  dgpr::ConsensusConfig config;
  const std::string rule = j.value("weight_rule", "metropolis");
  if (rule == "metropolis") {
    config.rule = dgpr::WeightRule::metropolis;
  } else if (rule == "uniform") {
    config.rule = dgpr::WeightRule::uniform;
    config.eps_w = j.at("eps_w").get<double>();
  } else {
    dgpr::fail("invalid-parameter", "unknown weight rule '" + rule + "'");
  }
  config.tolerance = j.value("tolerance", 1e-9);
  config.max_rounds = j.value("max_rounds", 100000);
  config.exact_averaging = j.value("exact_averaging", false);
  return config;
}

// Dataset plus the objects needed to build bases on it.
struct LoadedData {
  dgpr::Dataset data;
  std::shared_ptr<const dgpr::EigenSystem> truth_eigen;  // synthetic only
};

LoadedData data_from_config(const Json& config) {
  LoadedData loaded;
  if (config.contains("dataset_csv")) {
    loaded.data =
        dgpr::read_dataset_csv(config.at("dataset_csv").get<std::string>(),
                               config.value("y_column", std::string("y")));
    loaded.data.noise_variance = config.at("noise_variance").get<double>();
    return loaded;
  }
  const Json& j = config.at("synthetic");
  const std::string kernel = j.value("kernel", "spline");
  const int truth_terms = j.value("E_truth", 500);
  loaded.truth_eigen = dgpr::detail::make_study_eigensystem(kernel, j.value("rate", 0.1),
                                                            truth_terms);
  const auto mu = dgpr::InputMeasure::uniform(dgpr::Domain::unit_interval());
  const auto truth = dgpr::sample_truth(loaded.truth_eigen, truth_terms,
                                        dgpr::derive_seed(seed_of(config), 1));
  loaded.data = dgpr::generate_dataset(truth, mu, j.at("M").get<long>(),
                                       j.at("noise_variance").get<double>(),
                                       dgpr::derive_seed(seed_of(config), 2));
  return loaded;
}

dgpr::Basis basis_from_config(const Json& config, const LoadedData& loaded) {
  const Json& j = config.at("basis");
  const std::string kind = j.value("kind", "kl_spline");
  const int dim = j.at("dim").get<int>();
  if (kind == "json") return dgpr::basis_from_json(dgpr::read_json(j.at("file").get<std::string>()));
  if (kind == "kl_spline") {
    return dgpr::Basis::kl_eigen(dgpr::spline_eigensystem(dim), dim);
  }
  if (kind == "kl_exponential") {
    return dgpr::Basis::kl_eigen(dgpr::exponential_eigensystem(dim, j.value("rate", 0.1)), dim);
  }
  if (kind == "kl_truth") {
    dgpr::require(loaded.truth_eigen != nullptr, "invalid-parameter",
                  "kl_truth basis needs a synthetic dataset");
    return dgpr::Basis::kl_eigen(loaded.truth_eigen, dim);
  }
  if (kind == "kl_numerical") {
    const auto mu = measure_from_config(config, loaded.data.dim());
    return dgpr::Basis::kl_eigen(
        dgpr::numerical_eigensystem(kernel_from_config(j.at("kernel")), mu, j.value("q", 800),
                                    dim, dgpr::derive_seed(seed_of(config), 3)),
        dim);
  }
  if (kind == "kernel_sections" || kind == "nystrom") {
    const dgpr::Matrix anchors = dgpr::read_anchors_csv(j.at("anchors_csv").get<std::string>());
    const dgpr::Kernel kernel = kernel_from_config(j.at("kernel"));
    return kind == "nystrom" ? dgpr::nystrom_basis(kernel, anchors, dim)
                             : dgpr::kernel_sections_basis(kernel, anchors);
  }
  dgpr::fail("invalid-parameter", "unknown basis kind '" + kind + "'");
}

// --- subcommands -----------------------------------------------------------

void run_bounds(const CommonArgs& args) {
  const Json config = load_config(args);
  dgpr::BoundsExperimentConfig experiment;
  experiment.kernel = config.value("kernel", "spline");
  experiment.rate = config.value("rate", 0.1);
  experiment.M = config.value("M", 10000L);
  experiment.alpha = config.value("alpha", 0.05);
  experiment.noise_variance = config.value("noise_variance", 0.01);
  experiment.e_min = config.value("e_min", 1);
  experiment.e_max = config.value("e_max", 100);
  experiment.gamma = config.value("gamma", 1.0);
  experiment.mc_runs = config.value("mc_runs", 0);
  experiment.truth_factor = config.value("truth_factor", 10);
  experiment.seed = seed_of(config);

  const auto result = dgpr::run_bounds_experiment(experiment);
  dgpr::write_bounds_experiment_csv(out_path(args, "bounds.csv"), result);

  int argmin_b = 0;
  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    if (result.rows[i].bnd_b.value < result.rows[argmin_b].bnd_b.value) {
      argmin_b = static_cast<int>(i);
    }
  }
  dgpr::write_json(out_path(args, "bounds_summary.json"),
                   Json{{"normalization", result.normalization},
                        {"argmin_bnd_b_E", result.rows[argmin_b].E},
                        {"rows", result.rows.size()},
                        {"mc_runs", result.mc_runs}});
}

void run_fit(const CommonArgs& args) {
  const Json config = load_config(args);
  const LoadedData loaded = data_from_config(config);
  const dgpr::Basis basis = basis_from_config(config, loaded);
  const double noise = loaded.data.noise_variance;
  const std::string estimator = config.value("estimator", "A");

  if (config.contains("distributed")) {
    const Json& dist = config.at("distributed");
    Json topo_spec = dist.value("topology", Json{{"kind", "erdos_renyi"},
                                                 {"n", static_cast<int>(loaded.data.size())}});
    if (!topo_spec.contains("n")) topo_spec["n"] = static_cast<int>(loaded.data.size());
    const auto topology = topology_from_config(topo_spec, seed_of(config));
    const auto consensus = consensus_from_config(dist);
    if (estimator == "A") {
      const auto gammas = gammas_from_config(config.at("gammas"));
      const auto fit = dgpr::distributed_fit_A(loaded.data, basis, noise, gammas, topology,
                                               consensus);
      dgpr::CoefficientEstimate est;
      est.a_hat = fit.coefficients.row(0).transpose();
      est.gamma = fit.gammas[0];
      est.e_prime = basis.dim();
      dgpr::write_json(out_path(args, "estimate.json"), dgpr::estimate_to_json(est, "agent0"));
      dgpr::write_json(out_path(args, "consensus.json"), dgpr::protocol_summary_json(fit));
    } else {
      const auto grid = grid_from_config(config.at("grid"));
      const auto fit =
          dgpr::distributed_fit_B(loaded.data, basis, noise, grid, topology, consensus);
      dgpr::CoefficientEstimate est;
      est.a_hat = fit.coefficients.row(0).transpose();
      est.gamma = fit.gammas[0];
      est.e_prime = fit.truncations[0];
      dgpr::write_json(out_path(args, "estimate.json"), dgpr::estimate_to_json(est, "agent0"));
      dgpr::write_json(out_path(args, "consensus.json"), dgpr::protocol_summary_json(fit));
    }
    return;
  }

  const auto stats = dgpr::compute_statistics(loaded.data, basis);
  if (estimator == "A") {
    double gamma;
    if (config.contains("gammas")) {
      gamma = dgpr::tune_A(stats, basis.prior_matrix(), noise,
                           gammas_from_config(config.at("gammas")))
                  .first;
    } else {
      gamma = config.value("gamma", 1.0);
    }
    const auto est = dgpr::estimate_A(stats, basis, noise, gamma);
    dgpr::write_json(out_path(args, "estimate.json"), dgpr::estimate_to_json(est, "centralized"));
  } else {
    dgpr::require(basis.kind() == dgpr::Basis::Kind::kl_eigen, "invalid-parameter",
                  "estimator B needs a KL basis here");
    const auto& eigen = *basis.eigensystem();
    dgpr::CoefficientEstimate est;
    if (config.contains("grid")) {
      const auto grid = grid_from_config(config.at("grid"));
      const auto tuned = dgpr::tune_B(stats.z, stats.V, eigen, noise, stats.M, grid, nullptr);
      est = dgpr::estimate_B(stats, eigen, noise, tuned.gamma, tuned.e_prime);
    } else {
      est = dgpr::estimate_B(stats, eigen, noise, config.value("gamma", 0.0),
                             config.value("e_prime", basis.dim()));
    }
    dgpr::write_json(out_path(args, "estimate.json"), dgpr::estimate_to_json(est, "centralized"));
  }
}

void run_tune(const CommonArgs& args) {
  const Json config = load_config(args);
  const LoadedData loaded = data_from_config(config);
  const dgpr::Basis basis = basis_from_config(config, loaded);
  const double noise = loaded.data.noise_variance;
  const auto stats = dgpr::compute_statistics(loaded.data, basis);
  const std::string estimator = config.value("estimator", "A");

  std::vector<dgpr::SureEvaluation> trace;
  if (estimator == "A") {
    for (const double gamma : gammas_from_config(config.at("gammas"))) {
      trace.push_back(dgpr::sure_risk_A(stats, basis.prior_matrix(), noise, gamma));
    }
  } else {
    dgpr::require(basis.kind() == dgpr::Basis::Kind::kl_eigen, "invalid-parameter",
                  "estimator B tuning needs a KL basis here");
    const auto& eigen = *basis.eigensystem();
    const auto grid = grid_from_config(config.at("grid"));
    const auto family = dgpr::b_coefficient_family(stats.z, eigen, noise, stats.M, grid);
    const auto zhat = dgpr::predicted_z(stats.V, family);
    for (std::size_t gi = 0; gi < grid.gammas.size(); ++gi) {
      for (std::size_t ti = 0; ti < grid.truncations.size(); ++ti) {
        trace.push_back(dgpr::sure_risk_B(
            stats.z, zhat.col(grid.pair_index(static_cast<int>(gi), static_cast<int>(ti))),
            eigen, noise, stats.M, grid.gammas[gi], grid.truncations[ti]));
      }
    }
  }
  dgpr::write_tuning_trace_csv(out_path(args, "tuning_trace.csv"), trace);
}

void run_simulate(const CommonArgs& args) {
  const Json config = load_config(args);
  const auto topology = topology_from_config(config.at("topology"), seed_of(config));
  const auto consensus = consensus_from_config(config);
  const int payload = config.value("payload_dim", 1);

  dgpr::Rng rng(seed_of(config));
  std::normal_distribution<double> gauss(0.0, 1.0);
  dgpr::Matrix initial(topology.size(), payload);
  for (dgpr::Index i = 0; i < initial.rows(); ++i) {
    for (int j = 0; j < payload; ++j) initial(i, j) = gauss(rng);
  }
  const auto result = dgpr::run_average_consensus(initial, topology, consensus);
  dgpr::write_json(out_path(args, "consensus.json"),
                   dgpr::consensus_summary_json(result.rounds, result.payload_scalars_per_round,
                                                result.max_deviation, result.converged));
}

void run_sure_study(const CommonArgs& args) {
  const Json config = load_config(args);
  dgpr::SureStudyConfig study;
  study.kernel = config.value("kernel", "spline");
  study.rate = config.value("rate", 0.1);
  study.M = config.value("M", 10000L);
  study.E = config.value("E", 400);
  study.noise_variance = config.value("noise_variance", 0.01);
  study.truth_factor = config.value("truth_factor", 10);
  if (config.contains("gammas_a")) study.gammas_a = gammas_from_config(config.at("gammas_a"));
  if (config.contains("gammas_b")) study.gammas_b = gammas_from_config(config.at("gammas_b"));
  if (config.contains("truncations_b")) {
    study.truncations_b.clear();
    for (const auto& v : config.at("truncations_b")) study.truncations_b.push_back(v.get<int>());
  }
  study.runs = config.value("runs", 100);
  study.seed = seed_of(config);

  const auto result = dgpr::run_sure_study(study);
  dgpr::write_sure_study_csv(out_path(args, "sure_study.csv"), result);
  dgpr::write_json(out_path(args, "sure_study_summary.json"),
                   Json{{"sp_a", result.sp_a},
                        {"sp_b", result.sp_b},
                        {"runs", result.runs.size()},
                        {"normalization", result.normalization}});
}

void run_field(const CommonArgs& args) {
  const Json config = load_config(args);
  dgpr::FieldConfig field;
  field.csv_path = config.at("csv").get<std::string>();
  field.y_column = config.value("y_column", std::string("y"));
  field.basis_kind = config.value("basis_kind", std::string("kl_numerical"));
  field.basis_dim = config.value("E", 20);
  field.kernel_eta = config.value("kernel_eta", 0.1);
  field.kl_anchor_count = config.value("kl_anchor_count", 800);
  if (config.contains("gammas_a")) field.gammas_a = gammas_from_config(config.at("gammas_a"));
  if (config.contains("grid_b")) field.grid_b = grid_from_config(config.at("grid_b"));
  field.calib_fraction = config.value("calib_fraction", 0.25);
  field.train_fraction = config.value("train_fraction", 2.0 / 3.0);
  field.expected_gram_samples = config.value("expected_gram_samples", 200000L);
  field.runs = config.value("runs", 10);
  field.seed = seed_of(config);

  const auto runs = dgpr::field_pipeline(field);
  dgpr::write_field_csv(out_path(args, "field.csv"), runs);
}

void run_trend(const CommonArgs& args) {
  const Json config = load_config(args);
  dgpr::TrendConfig trend;
  trend.kernel = config.value("kernel", "spline");
  trend.rate = config.value("rate", 0.1);
  trend.noise_variance = config.value("noise_variance", 0.01);
  trend.gamma = config.value("gamma", 1.0);
  trend.fixed_E = config.value("fixed_E", 5);
  if (config.contains("m_grid")) {
    trend.m_grid.clear();
    for (const auto& v : config.at("m_grid")) trend.m_grid.push_back(v.get<long>());
  }
  trend.runs = config.value("runs", 100);
  trend.truth_factor = config.value("truth_factor", 10);
  trend.seed = seed_of(config);

  dgpr::write_trend_csv(out_path(args, "trend.csv"), dgpr::run_trend_experiment(trend));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed GP regression: estimators, bounds, SURE tuning, consensus simulator"};
  app.require_subcommand(1);

  CommonArgs bounds_args, fit_args, tune_args, simulate_args, study_args, field_args, trend_args;
  add_common(app.add_subcommand("bounds", "error-bound curves over E"), bounds_args);
  add_common(app.add_subcommand("fit", "fit estimator A or B (optionally --distributed style)"),
             fit_args);
  add_common(app.add_subcommand("tune", "emit SURE risk traces"), tune_args);
  add_common(app.add_subcommand("simulate", "consensus-only diagnostics"), simulate_args);
  add_common(app.add_subcommand("sure-study", "SURE vs oracle Monte Carlo study"), study_args);
  add_common(app.add_subcommand("field", "CSV field-data pipeline"), field_args);
  add_common(app.add_subcommand("trend", "consistency trends in M"), trend_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("bounds")) run_bounds(bounds_args);
    if (app.got_subcommand("fit")) run_fit(fit_args);
    if (app.got_subcommand("tune")) run_tune(tune_args);
    if (app.got_subcommand("simulate")) run_simulate(simulate_args);
    if (app.got_subcommand("sure-study")) run_sure_study(study_args);
    if (app.got_subcommand("field")) run_field(field_args);
    if (app.got_subcommand("trend")) run_trend(trend_args);
  } catch (const dgpr::Error& e) {
    std::string message = e.what();
    const std::string prefix = e.code() + ": ";
    if (message.rfind(prefix, 0) == 0) message = message.substr(prefix.size());
    std::cout << Json{{"error", e.code()}, {"message", message}}.dump() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cout << Json{{"error", "internal"}, {"message", e.what()}}.dump() << std::endl;
    return 1;
  }
  return 0;
}
