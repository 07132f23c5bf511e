#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "greenpot/lattice_green.hpp"
#include "greenpot/potential_matrix.hpp"
#include "greenpot/rng.hpp"

using namespace greenpot;

namespace {

Eigen::MatrixXd m2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("inverse M-matrix test on small matrices") {
  const PotentialReport id = is_inverse_m_matrix(Eigen::MatrixXd::Identity(4, 4));
  CHECK(id.nonsingular);
  CHECK(id.is_potential);
  CHECK(id.reliable);

  // inverse (1/3)[[2,-1],[-1,2]]; max |entry| = 2/3 scales the report
  const PotentialReport good = is_inverse_m_matrix(m2(2, 1, 1, 2));
  CHECK(good.is_potential);
  CHECK(good.max_offdiag_of_inverse == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(good.min_row_sum_of_inverse == doctest::Approx(0.5).epsilon(1e-12));

  // inverse (1/3)[[-1,2],[2,-1]]
  const PotentialReport bad = is_inverse_m_matrix(m2(1, 2, 2, 1));
  CHECK(bad.nonsingular);
  CHECK_FALSE(bad.is_potential);
  CHECK(bad.max_offdiag_of_inverse == doctest::Approx(1.0).epsilon(1e-12));

  // [[4,1],[1,4]] has inverse (1/15)[[4,-1],[-1,4]]
  const PotentialReport sq = is_inverse_m_matrix(hadamard_power(m2(2, 1, 1, 2), 2.0));
  CHECK(sq.is_potential);
  CHECK(sq.max_offdiag_of_inverse == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(sq.min_row_sum_of_inverse == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(is_inverse_m_matrix(hadamard_power(m2(2, 1, 1, 2), 3.7)).is_potential);
  CHECK(is_inverse_m_matrix(hadamard_exp(m2(2, 1, 1, 2), 1.0)).is_potential);
}

TEST_CASE("singular and ill-conditioned inputs") {
  const PotentialReport ones = is_inverse_m_matrix(Eigen::MatrixXd::Ones(3, 3));
  CHECK_FALSE(ones.nonsingular);
  CHECK_FALSE(ones.is_potential);
  // the all-ones matrix is a (singular) potential: the CMP still holds
  const PotentialReport cls = classify_potential(Eigen::MatrixXd::Ones(3, 3), 1e-8, 2000, 5);
  REQUIRE(cls.cmp_inequality_min.has_value());
  CHECK(*cls.cmp_inequality_min >= -1e-10);

  const PotentialReport near = is_inverse_m_matrix(m2(1, 1, 1, 1 + 1e-14));
  CHECK(near.condition_estimate > kUnreliableCondition);
  CHECK_FALSE(near.reliable);
  CHECK_FALSE(near.is_potential);
}

TEST_CASE("potential classification is scale invariant") {
  std::mt19937_64 gen(17);
  for (int t = 0; t < 20; ++t) {
    const KilledGreenMatrix u = random_potential(2 + t % 2, 2, 25, gen());
    Eigen::MatrixXd perturbed = u.entries;
    perturbed(0, perturbed.cols() - 1) += 0.5;
    for (double c : {1e-3, 0.7, 3.0, 1e4}) {
      CHECK(is_inverse_m_matrix(c * u.entries).is_potential == is_inverse_m_matrix(u.entries).is_potential);
      CHECK(is_inverse_m_matrix(c * perturbed).is_potential == is_inverse_m_matrix(perturbed).is_potential);
    }
  }
}

TEST_CASE("cmp_inequality by hand") {
  CHECK(cmp_inequality(m2(2, 1, 1, 2), Eigen::Vector2d(1, -1)) == 0.0);
  CHECK(cmp_inequality(m2(2, 1, 1, 2), Eigen::Vector2d(1, 0)) == doctest::Approx(1.0));
  CHECK(cmp_inequality(m2(1, 2, 2, 1), Eigen::Vector2d(-0.2, 0.7)) == doctest::Approx(-0.04).epsilon(1e-12));
  RngStream rng(3);
  for (int t = 0; t < 200; ++t) {
    Eigen::VectorXd v(5);
    for (int i = 0; i < 5; ++i) v(i) = 3 * rng.normal();
    CHECK(cmp_inequality(Eigen::MatrixXd::Identity(5, 5), v) >= 0.0);
  }
  CHECK_THROWS_AS(cmp_inequality(m2(1, 0, 0, 1), Eigen::Vector3d(1, 1, 1)), std::invalid_argument);
}

TEST_CASE("sample_cmp") {
  const CmpSample bad = sample_cmp(m2(1, 2, 2, 1), 10000, 1);
  CHECK(bad.min_value < 0.0);
  CHECK(cmp_inequality(m2(1, 2, 2, 1), bad.argmin) == doctest::Approx(bad.min_value));

  Eigen::MatrixXd scalar(1, 1);
  scalar << 2.5;
  CHECK(sample_cmp(scalar, 5000, 2).min_value >= 0.0);

  const KilledGreenMatrix u = random_potential(3, 20, 20, 9);
  const CmpSample good = sample_cmp(u.entries, 5000, 4);
  CHECK(good.min_value >= -1e-10 * u.entries.maxCoeff());

  // reproducible and independent of the thread count
  const CmpSample again = sample_cmp(m2(1, 2, 2, 1), 10000, 1);
  CHECK(again.min_value == bad.min_value);
  CHECK(again.argmin == bad.argmin);
  CHECK_THROWS_AS(sample_cmp(m2(1, 2, 2, 1), 0, 1), std::invalid_argument);
}

TEST_CASE("Hadamard transforms") {
  const Eigen::MatrixXd u = m2(2, 1, 1, 2);
  CHECK(hadamard_power(u, 1.0) == u);
  Eigen::MatrixXd e(2, 2);
  e << std::exp(2.0), std::exp(1.0), std::exp(1.0), std::exp(2.0);
  CHECK(hadamard_exp(u, 1.0).isApprox(e, 1e-15));
  CHECK_THROWS_AS(hadamard_power(u, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(hadamard_power(m2(1, -1, 0, 1), 2.0), std::invalid_argument);
  CHECK_THROWS_AS(hadamard_exp(u, 0.0), std::invalid_argument);
  // pure transform on a non-potential input
  CHECK_NOTHROW(hadamard_exp(m2(1, 2, 2, 1), 0.5));
  // small alpha tends to the singular all-ones matrix
  CHECK((hadamard_exp(u, 1e-12) - Eigen::MatrixXd::Ones(2, 2)).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("Hadamard exponential of a diagonal matrix") {
  // exp(alpha diag(a, b)) = [[e^{alpha a}, 1], [1, e^{alpha b}]]: the inverse has
  // off-diagonal -1/det and row sums (e^{alpha b} - 1)/det, a potential for a, b > 0.
  for (double a : {0.1, 1.0, 5.0}) {
    for (double b : {0.05, 2.0}) {
      for (double alpha : {0.1, 0.5, 1.0}) {
        const PotentialReport r = is_inverse_m_matrix(hadamard_exp(m2(a, 0, 0, b), alpha));
        CHECK(r.is_potential);
      }
    }
  }
}

TEST_CASE("random potentials") {
  const KilledGreenMatrix one = random_potential(2, 1, 1, 4);
  CHECK(one.entries.rows() == 1);
  CHECK(one.entries(0, 0) == doctest::Approx(1.0));
  std::mt19937_64 gen(23);
  for (int t = 0; t < 60; ++t) {
    const int d = 2 + t % 2;
    const KilledGreenMatrix u = random_potential(d, 2, 40, gen());
    CHECK(u.dim() == d);
    CHECK(u.entries.rows() >= 2);
    CHECK(u.entries.rows() <= 40);
    CHECK(is_inverse_m_matrix(u.entries).is_potential);
    CHECK(is_inverse_m_matrix(hadamard_power(u.entries, 2.0)).is_potential);
  }
  const KilledGreenMatrix a = random_potential(3, 2, 40, 99), b = random_potential(3, 2, 40, 99);
  CHECK(a.entries == b.entries);
  CHECK_THROWS_AS(random_potential(4, 2, 5, 1), std::invalid_argument);
  CHECK_THROWS_AS(random_potential(2, 5, 2, 1), std::invalid_argument);
}
