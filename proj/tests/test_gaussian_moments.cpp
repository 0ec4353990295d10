#include <doctest.h>

#include "polymom/families.hpp"
#include "polymom/gaussian_moments.hpp"
#include "support/oracles.hpp"

using namespace polymom;

TEST_CASE("independent zero-mean coordinates") {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(2, 2);
  CHECK(gaussian_mv_moment(mu, cov, {1, 1}) == doctest::Approx(0.0));
}

TEST_CASE("correlated fourth moment") {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.5, 0.5, 1.0;
  // Pairing enumeration gives S11 S22 + 2 S12^2 = 1.5.
  CHECK(gaussian_mv_moment(mu, cov, {2, 2}) == doctest::Approx(1.5));
}

TEST_CASE("coordinate-wise reduction to the univariate closed form") {
  Eigen::VectorXd mu(2);
  mu << 1.0, 0.0;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(2, 2);
  CHECK(gaussian_mv_moment(mu, cov, {2, 0}) == doctest::Approx(2.0));
}

TEST_CASE("dimension one agrees with the univariate recurrence up to order 8") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    double mu = rng.uniform(-3.0, 3.0);
    double s2 = rng.uniform(0.2, 4.0);
    Eigen::VectorXd m(1);
    m << mu;
    Eigen::MatrixXd c(1, 1);
    c << s2;
    GaussianMomentTable table(m, c);
    for (int i = 0; i <= 8; ++i) {
      double uni = univariate_moment(Family::Gaussian, std::vector<double>{mu, s2}, i);
      CHECK(table.moment(MultiIndex{i}) == doctest::Approx(uni).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero-mean moments equal the pairing enumeration up to degree 6") {
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    int n = 2 + static_cast<int>(rng.next_u64() % 2);
    Eigen::MatrixXd cov = oracles::random_psd(rng, n, 0.3, 2.0);
    GaussianMomentTable table(Eigen::VectorXd::Zero(n), cov);
    for (const MultiIndex& idx : indices_up_to_degree(n, 6)) {
      double expected = oracles::wick_zero_mean_moment(cov, idx);
      double got = table.moment(idx);
      CHECK_MESSAGE(oracles::close_rel(got, expected, 1e-12), "trial ", trial, " got ", got,
                    " expected ", expected);
    }
  }
}

TEST_CASE("invalid covariance and shape errors") {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.3, -0.3, 1.0;
  CHECK_THROWS_AS(gaussian_mv_moment(mu, asym, {1, 1}), std::domain_error);

  Eigen::MatrixXd indef(2, 2);
  indef << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(gaussian_mv_moment(mu, indef, {1, 1}), std::domain_error);

  Eigen::MatrixXd good = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(gaussian_mv_moment(mu, good, {1, 1, 1}), std::invalid_argument);
}
