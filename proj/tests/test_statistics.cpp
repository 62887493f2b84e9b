#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numbers>

#include "dgpr/statistics.hpp"
#include "dgpr/synthetic.hpp"

using namespace dgpr;
using Catch::Approx;

TEST_CASE("local statistics") {
  const Basis basis1 = Basis::kl_eigen(spline_eigensystem(1), 1);
  Vector x(1);
  x << 0.5;

  SECTION("spline basis E=1 at x=0.5, y=2") {
    // phi_1(0.5) = 1, so G^T G = [1] and G^T y = [2] = [sqrt(2) sin(pi/4) * 2]
    const LocalStatistics local = local_statistics(x, 2.0, basis1);
    CHECK(local.outer(0, 0) == Approx(1.0));
    CHECK(local.moment[0] == Approx(2.0 * std::numbers::sqrt2 * std::sin(std::numbers::pi / 4)));
    CHECK(local.moment[0] == Approx(2.0));
  }

  SECTION("y = 0 zeroes the moment but not the outer product") {
    const LocalStatistics local = local_statistics(x, 0.0, basis1);
    CHECK(local.moment[0] == 0.0);
    CHECK(local.outer(0, 0) == Approx(1.0));
  }

  SECTION("outer product has rank at most one") {
    const Basis basis2 = Basis::kl_eigen(spline_eigensystem(4), 4);
    const LocalStatistics local = local_statistics(x, 1.5, basis2);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(local.outer);
    int positive = 0;
    for (Index i = 0; i < 4; ++i) {
      if (eig.eigenvalues()[i] > 1e-12 * eig.eigenvalues().maxCoeff()) ++positive;
    }
    CHECK(positive <= 1);
  }
}

TEST_CASE("aggregation") {
  const Basis basis = Basis::kl_eigen(spline_eigensystem(3), 3);
  Vector x(1);
  x << 0.3;

  SECTION("single agent") {
    const LocalStatistics local = local_statistics(x, 1.0, basis);
    const SufficientStatistics stats = aggregate_statistics({local});
    CHECK((stats.V - local.outer).cwiseAbs().maxCoeff() == 0.0);
    CHECK((stats.z - local.moment).cwiseAbs().maxCoeff() == 0.0);
    CHECK(stats.M == 1);
  }

  SECTION("mean of identical locals is idempotent") {
    const LocalStatistics local = local_statistics(x, 1.0, basis);
    const SufficientStatistics stats = aggregate_statistics({local, local, local});
    CHECK((stats.V - local.outer).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(stats.M == 3);
  }

  SECTION("dimension mismatch") {
    LocalStatistics a = local_statistics(x, 1.0, basis);
    LocalStatistics b = a;
    b.moment = Vector::Zero(2);
    b.outer = Matrix::Zero(2, 2);
    CHECK_THROWS_AS(aggregate_statistics({a, b}), Error);
  }

  SECTION("law of large numbers: V approaches the identity") {
    const auto eigen = std::make_shared<const EigenSystem>(spline_eigensystem(5));
    const Basis basis5 = Basis::kl_eigen(eigen, 5);
    const InputMeasure mu = InputMeasure::uniform(Domain::unit_interval());
    const SyntheticTruth truth = sample_truth(eigen, 5, 1);
    const Dataset data = generate_dataset(truth, mu, 10000, 0.01, 2);
    const SufficientStatistics stats = compute_statistics(data, basis5);
    CHECK((stats.V - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 0.05);
  }
}

TEST_CASE("statistics rebuild from raw data") {
  const auto eigen = std::make_shared<const EigenSystem>(spline_eigensystem(4));
  const Basis basis = Basis::kl_eigen(eigen, 4);
  const InputMeasure mu = InputMeasure::uniform(Domain::unit_interval());
  const SyntheticTruth truth = sample_truth(eigen, 4, 3);
  const Dataset data = generate_dataset(truth, mu, 300, 0.04, 4);

  const SufficientStatistics stats = compute_statistics(data, basis);

  SECTION("dense design-matrix route agrees to 1e-12") {
    const Matrix g = design_matrix(basis, data.x);
    const Matrix v = g.transpose() * g / 300.0;
    const Vector z = g.transpose() * data.y / 300.0;
    CHECK((stats.V - v).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((stats.z - z).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("aggregate of per-row locals is identical") {
    std::vector<LocalStatistics> locals;
    for (Index m = 0; m < data.size(); ++m) {
      locals.push_back(local_statistics(data.input(m), data.y[m], basis));
    }
    const SufficientStatistics other = aggregate_statistics(locals);
    CHECK((stats.V - other.V).cwiseAbs().maxCoeff() == 0.0);
    CHECK((stats.z - other.z).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("V is symmetric positive semidefinite") {
    CHECK((stats.V - stats.V.transpose()).cwiseAbs().maxCoeff() < 1e-15);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(stats.V);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
  }

  SECTION("permuting the dataset leaves V, z unchanged to rounding") {
    Dataset shuffled = data;
    std::vector<Index> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(9);
    std::shuffle(order.begin(), order.end(), rng);
    for (Index m = 0; m < data.size(); ++m) {
      shuffled.x.row(m) = data.x.row(order[m]);
      shuffled.y[m] = data.y[order[m]];
    }
    const SufficientStatistics other = compute_statistics(shuffled, basis);
    CHECK((stats.V - other.V).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((stats.z - other.z).cwiseAbs().maxCoeff() < 1e-13);
  }
}
