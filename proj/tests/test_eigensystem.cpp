#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "dgpr/eigensystem.hpp"

using namespace dgpr;
using Catch::Approx;

namespace {

// Brute-force spectrum mass of the spline kernel, summed small-to-large.
double spline_mass_brute(long terms) {
  double acc = 0.0;
  for (long e = terms; e >= 1; --e) {
    const double w = e * std::numbers::pi - std::numbers::pi / 2.0;
    acc += 1.0 / (w * w);
  }
  return acc;
}

double exponential_mass_brute(long terms, double rate) {
  double acc = 0.0;
  for (long e = terms; e >= 1; --e) acc += std::exp(-rate * e);
  return acc;
}

}  // namespace

TEST_CASE("spline eigensystem matches the closed form") {
  const EigenSystem eigen = spline_eigensystem(50);

  SECTION("leading eigenvalue and eigenfunction") {
    CHECK(eigen.eigenvalue(0) == Approx(4.0 / (std::numbers::pi * std::numbers::pi)));
    CHECK(eigen.phi(0, 0.5) == Approx(1.0));  // sqrt(2) sin(pi/4)
  }

  SECTION("uniform bound") { CHECK(eigen.k_bound() == 2.0); }

  SECTION("total mass is 1/2, checked against a 1e6-term summation") {
    CHECK(eigen.tail_sum(0) == Approx(0.5).margin(1e-12));
    CHECK(spline_mass_brute(1000000) == Approx(0.5).margin(1e-6));
  }

  SECTION("tail sums agree with brute partial sums") {
    for (int terms : {1, 7, 50}) {
      const double brute = spline_mass_brute(1000000) - spline_mass_brute(terms);
      CHECK(eigen.tail_sum(terms) == Approx(brute).margin(2e-6));
    }
  }

  SECTION("eigenvalues are positive and non-increasing") {
    for (int e = 0; e + 1 < eigen.max_terms(); ++e) {
      CHECK(eigen.eigenvalue(e) >= eigen.eigenvalue(e + 1));
      CHECK(eigen.eigenvalue(e + 1) > 0);
    }
  }

  SECTION("eigenfunctions stay within sqrt(k)") {
    const double bound = std::sqrt(eigen.k_bound());
    for (int e = 0; e < 10; ++e) {
      for (int i = 0; i < 500; ++i) {
        const double x = (i + 0.5) / 500.0;
        CHECK(std::abs(eigen.phi(e, x)) <= bound + 1e-12);
      }
    }
  }
}

TEST_CASE("spline eigenfunctions are orthonormal under the uniform measure") {
  const EigenSystem eigen = spline_eigensystem(8);
  const long nodes = 100000;
  for (int i = 0; i < 8; ++i) {
    for (int j = i; j < 8; ++j) {
      double acc = 0.0;
      for (long n = 0; n < nodes; ++n) {
        const double x = (n + 0.5) / static_cast<double>(nodes);
        acc += eigen.phi(i, x) * eigen.phi(j, x);
      }
      acc /= static_cast<double>(nodes);
      CHECK(acc == Approx(i == j ? 1.0 : 0.0).margin(1e-6));
    }
  }
}

TEST_CASE("Mercer reconstruction of the spline kernel") {
  const EigenSystem eigen = spline_eigensystem(200);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double x = (i + 0.5) / 50.0;
    for (int j = 0; j < 50; ++j) {
      const double y = (j + 0.5) / 50.0;
      double acc = 0.0;
      for (int e = 0; e < 200; ++e) acc += eigen.eigenvalue(e) * eigen.phi(e, x) * eigen.phi(e, y);
      worst = std::max(worst, std::abs(acc - std::min(x, y)));
    }
  }
  CHECK(worst < 1e-2);
}

TEST_CASE("exponential eigensystem") {
  SECTION("eigenvalue rule at rate 0.1") {
    const EigenSystem eigen = exponential_eigensystem(10, 0.1);
    CHECK(eigen.eigenvalue(0) == Approx(std::exp(-0.1)));
  }

  SECTION("geometric tail against brute summation") {
    const EigenSystem eigen = exponential_eigensystem(10, 0.1);
    CHECK(eigen.tail_sum(0) == Approx(exponential_mass_brute(1000000, 0.1)).margin(1e-10));
    CHECK(eigen.tail_sum(0) == Approx(9.5083).margin(1e-4));
    const double brute_tail = exponential_mass_brute(1000000, 0.1) - exponential_mass_brute(3, 0.1);
    CHECK(eigen.tail_sum(3) == Approx(brute_tail).margin(1e-10));
  }

  SECTION("vanishing spectrum at large rates") {
    CHECK(exponential_eigensystem(5, 100.0).tail_sum(0) == Approx(0.0).margin(1e-40));
  }

  SECTION("invalid rate") {
    CHECK_THROWS_MATCHES(exponential_eigensystem(5, 0.0), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == "invalid-parameter"; }));
    CHECK_THROWS_AS(exponential_eigensystem(5, -1.0), Error);
  }
}

TEST_CASE("custom spectra have exact finite tails") {
  Vector lambdas(3);
  lambdas << 0.5, 0.25, 0.1;
  const EigenSystem eigen = custom_spectrum(lambdas);
  CHECK(eigen.tail_sum(0) == Approx(0.85));
  CHECK(eigen.tail_sum(3) == 0.0);
  CHECK(eigen.tail_exact());
}

TEST_CASE("numerical KL expansion of the spline kernel") {
  const Kernel kernel = Kernel::spline_first_order();
  const InputMeasure mu = InputMeasure::uniform(Domain::unit_interval());
  const EigenSystem closed = spline_eigensystem(5);
  const EigenSystem numeric = numerical_eigensystem(kernel, mu, 600, 5, 7);

  SECTION("eigenvalues approach the closed form") {
    for (int e = 0; e < 3; ++e) {
      CHECK(numeric.eigenvalue(e) ==
            Approx(closed.eigenvalue(e)).epsilon(0.05));
    }
  }

  SECTION("empirical orthonormality at the anchors") {
    const auto& data = *numeric.extension();
    const int q = static_cast<int>(data.anchors.rows());
    Matrix phi_at_anchors(q, 5);
    for (int m = 0; m < q; ++m) {
      for (int e = 0; e < 5; ++e) {
        phi_at_anchors(m, e) = numeric.phi(e, data.anchors.row(m).transpose());
      }
    }
    const Matrix gram = phi_at_anchors.transpose() * phi_at_anchors / static_cast<double>(q);
    CHECK((gram - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);
  }

  SECTION("spectrum is non-increasing and nonnegative across seeds") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      const EigenSystem sys = numerical_eigensystem(kernel, mu, 200, 8, seed);
      for (int e = 0; e + 1 < 8; ++e) {
        CHECK(sys.eigenvalue(e) >= sys.eigenvalue(e + 1));
        CHECK(sys.eigenvalue(e + 1) >= 0);
      }
    }
  }

  SECTION("truncated tails are flagged") { CHECK_FALSE(numeric.tail_exact()); }
}

TEST_CASE("numerical KL corner cases") {
  SECTION("single point: lambda_1 = K(x,x)") {
    const Kernel kernel = Kernel::spline_first_order();
    Vector w(1), mean(1), var(1);
    w << 1.0;
    mean << 0.7;
    var << 0.0;  // degenerate: all mass at 0.7
    const InputMeasure point = InputMeasure::gaussian_mixture(w, mean.transpose(), var.transpose());
    const EigenSystem sys = numerical_eigensystem(kernel, point, 1, 1, 3);
    CHECK(sys.eigenvalue(0) == Approx(0.7));
  }

  SECTION("rank-1 kernel matrix rejects E = 2") {
    const Kernel kernel = Kernel::gaussian(1.0);
    Vector w(1), mean(1), var(1);
    w << 1.0;
    mean << 0.0;
    var << 0.0;
    const InputMeasure point = InputMeasure::gaussian_mixture(w, mean.transpose(), var.transpose());
    CHECK_THROWS_MATCHES(numerical_eigensystem(kernel, point, 5, 2, 3), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == "degenerate-kernel"; }));
  }
}
