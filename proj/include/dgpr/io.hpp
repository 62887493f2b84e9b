#ifndef DGPR_IO_HPP
#define DGPR_IO_HPP

#include <fstream>
#include <string>

#include <json.hpp>

#include "dgpr/basis.hpp"
#include "dgpr/estimators.hpp"
#include "dgpr/protocols.hpp"

namespace dgpr {

using Json = nlohmann::json;

namespace detail {

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j) {
  require(j.is_array() && !j.empty(), "parse-error", "expected a non-empty array of rows");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = static_cast<Index>(j.front().size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    require(static_cast<Index>(j[i].size()) == cols, "parse-error", "ragged matrix rows");
    for (Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

inline Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Vector vector_from_json(const Json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace detail

inline Json kernel_to_json(const Kernel& kernel) {
  switch (kernel.family()) {
    case Kernel::Family::spline_first_order:
      return Json{{"family", "spline_first_order"}};
    case Kernel::Family::gaussian:
      return Json{{"family", "gaussian"}, {"eta", kernel.eta()}};
    case Kernel::Family::custom:
      fail("invalid-parameter", "custom kernels are not serializable");
  }
  fail("invalid-parameter", "unknown kernel family");
}

inline Kernel kernel_from_json(const Json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "spline_first_order") return Kernel::spline_first_order();
  if (family == "gaussian") return Kernel::gaussian(j.at("eta").get<double>());
  fail("parse-error", "unknown kernel family '" + family + "'");
}

inline Json eigensystem_to_json(const EigenSystem& eigen) {
  Json j;
  j["family"] = eigen.family();
  j["params"] = eigen.params();
  j["lambdas"] = detail::vector_to_json(eigen.eigenvalues());
  j["k_bound"] = eigen.k_bound();
  j["anchors"] = Json::array();
  if (eigen.extension()) {
    j["anchors"] = detail::matrix_to_json(eigen.extension()->anchors);
    j["weights"] = detail::matrix_to_json(eigen.extension()->weights);
    j["kernel"] = kernel_to_json(eigen.extension()->kernel);
  }
  return j;
}

inline EigenSystem eigensystem_from_json(const Json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "spline") {
    return spline_eigensystem(static_cast<int>(j.at("params").at("max_terms").get<double>()));
  }
  if (family == "exponential") {
    return exponential_eigensystem(
        static_cast<int>(j.at("params").at("max_terms").get<double>()),
        j.at("params").at("rate").get<double>());
  }
  if (family == "custom_spectrum" || family == "custom") {
    return custom_spectrum(detail::vector_from_json(j.at("lambdas")),
                           j.at("k_bound").get<double>());
  }
  if (family == "numerical") {
    auto data = std::make_shared<EigenSystem::ExtensionData>();
    data->anchors = detail::matrix_from_json(j.at("anchors"));
    data->weights = detail::matrix_from_json(j.at("weights"));
    data->kernel = kernel_from_json(j.at("kernel"));
    auto phi = [data](int e, const Vector& x) {
      double acc = 0.0;
      for (Index n = 0; n < data->anchors.rows(); ++n) {
        acc += data->weights(n, e) * data->kernel(x, data->anchors.row(n).transpose());
      }
      return acc;
    };
    std::map<std::string, double> params;
    for (const auto& [key, value] : j.at("params").items()) params[key] = value.get<double>();
    EigenSystem eigen(detail::vector_from_json(j.at("lambdas")), phi,
                      j.at("k_bound").get<double>(), nullptr, "numerical", params);
    eigen.attach_extension(data);
    return eigen;
  }
  fail("parse-error", "unknown eigensystem family '" + family + "'");
}

inline Json basis_to_json(const Basis& basis) {
  Json j;
  j["dim"] = basis.dim();
  switch (basis.kind()) {
    case Basis::Kind::kl_eigen:
      j["kind"] = "kl_eigen";
      j["eigensystem"] = eigensystem_to_json(*basis.eigensystem());
      break;
    case Basis::Kind::kernel_sections:
      j["kind"] = "kernel_sections";
      j["kernel"] = kernel_to_json(*basis.kernel());
      j["anchors"] = detail::matrix_to_json(basis.anchors());
      break;
    case Basis::Kind::nystrom:
      j["kind"] = "nystrom";
      j["kernel"] = kernel_to_json(*basis.kernel());
      j["anchors"] = detail::matrix_to_json(basis.anchors());
      break;
  }
  if (basis.has_expected_gram()) j["expected_gram"] = detail::matrix_to_json(basis.expected_gram());
  return j;
}

inline Basis basis_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const int dim = j.at("dim").get<int>();
  Basis basis = [&] {
    if (kind == "kl_eigen") {
      return Basis::kl_eigen(eigensystem_from_json(j.at("eigensystem")), dim);
    }
    if (kind == "kernel_sections") {
      return kernel_sections_basis(kernel_from_json(j.at("kernel")),
                                   detail::matrix_from_json(j.at("anchors")));
    }
    if (kind == "nystrom") {
      return nystrom_basis(kernel_from_json(j.at("kernel")),
                           detail::matrix_from_json(j.at("anchors")), dim);
    }
    fail("parse-error", "unknown basis kind '" + kind + "'");
  }();
  if (j.contains("expected_gram")) {
    basis = basis.with_expected_gram(detail::matrix_from_json(j.at("expected_gram")));
  }
  return basis;
}

inline Json estimate_to_json(const CoefficientEstimate& est, const std::string& basis_id) {
  Json j;
  j["basis_id"] = basis_id;
  j["gamma"] = est.gamma;
  j["E_prime"] = est.e_prime;
  j["a_hat"] = detail::vector_to_json(est.a_hat);
  return j;
}

inline CoefficientEstimate estimate_from_json(const Json& j) {
  CoefficientEstimate est;
  est.gamma = j.at("gamma").get<double>();
  est.e_prime = j.at("E_prime").get<int>();
  est.a_hat = detail::vector_from_json(j.at("a_hat"));
  return est;
}

/// Anchor sets: one point per row, comma-separated coordinates, no header.
inline Matrix read_anchors_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "parse-error", "cannot open anchors CSV: " + path);
  std::vector<Vector> rows;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = detail::split_csv_line(line);
    Vector point(static_cast<Index>(fields.size()));
    for (std::size_t i = 0; i < fields.size(); ++i) {
      try {
        point[static_cast<Index>(i)] = std::stod(fields[i]);
      } catch (const std::exception&) {
        fail("parse-error", "row " + std::to_string(line_no) + ": cannot parse coordinate");
      }
    }
    require(rows.empty() || rows.front().size() == point.size(), "parse-error",
            "row " + std::to_string(line_no) + ": inconsistent dimension");
    rows.push_back(std::move(point));
  }
  require(!rows.empty(), "parse-error", "anchors CSV is empty: " + path);
  Matrix anchors(static_cast<Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) anchors.row(static_cast<Index>(i)) = rows[i];
  return anchors;
}

inline Json consensus_summary_json(int rounds, long payload_scalars_per_round,
                                   double max_disagreement, bool converged) {
  return Json{{"rounds", rounds},
              {"payload_scalars_per_round", payload_scalars_per_round},
              {"max_disagreement", max_disagreement},
              {"converged", converged}};
}

inline Json protocol_summary_json(const DistributedFitA& fit) {
  return consensus_summary_json(fit.rounds, fit.payload_scalars_per_round, fit.max_disagreement,
                                fit.converged);
}

inline Json protocol_summary_json(const DistributedFitB& fit) {
  Json j = consensus_summary_json(fit.rounds_z + fit.rounds_zhat, fit.payload_scalars_per_round,
                                  fit.max_disagreement, fit.converged);
  j["rounds_z"] = fit.rounds_z;
  j["rounds_zhat"] = fit.rounds_zhat;
  return j;
}

inline void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  require(out.good(), "parse-error", "cannot open JSON for writing: " + path);
  out << j.dump(2) << "\n";
}

inline Json read_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "parse-error", "cannot open JSON: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail("parse-error", std::string("invalid JSON in ") + path + ": " + e.what());
  }
  return j;
}

}  // namespace dgpr

#endif
