#include <doctest.h>

#include <stdexcept>

#include "polymom/families.hpp"
#include "polymom/sampling.hpp"
#include "support/oracles.hpp"

using namespace polymom;

namespace {
constexpr Family kAll[] = {Family::Gaussian,  Family::Uniform,  Family::Gamma,
                           Family::Laplace,   Family::Exponential, Family::ChiSquare,
                           Family::InverseGaussian, Family::Poisson, Family::Binomial,
                           Family::Geometric, Family::NegativeBinomial};
}

TEST_CASE("listed moment values") {
  CHECK(univariate_moment(Family::Gaussian, std::vector<double>{1.0, 1.0}, 3) == doctest::Approx(4.0));
  CHECK(univariate_moment(Family::Exponential, std::vector<double>{1.0}, 3) == doctest::Approx(6.0));
  CHECK(univariate_moment(Family::Uniform, std::vector<double>{0.0, 1.0}, 2) ==
        doctest::Approx(1.0 / 3.0));
  CHECK(univariate_moment(Family::Poisson, std::vector<double>{1.0}, 3) == doctest::Approx(5.0));
}

TEST_CASE("zeroth moment is one for every family") {
  Rng rng(11);
  for (Family f : kAll) {
    auto p = oracles::random_valid_params(f, rng);
    CHECK(univariate_moment(f, p, 0) == 1.0);
  }
}

TEST_CASE("recurrences match the closed forms on random parameters") {
  Rng rng(2024);
  for (Family f : kAll) {
    for (int trial = 0; trial < 200; ++trial) {
      auto p = oracles::random_valid_params(f, rng);
      auto expected = oracles::closed_form_first_three(f, p);
      for (int i = 1; i <= 3; ++i) {
        double got = univariate_moment(f, p, i);
        CHECK_MESSAGE(oracles::close_rel(got, expected[static_cast<std::size_t>(i - 1)], 1e-10),
                      family_name(f), " order ", i, " got ", got, " expected ",
                      expected[static_cast<std::size_t>(i - 1)]);
      }
    }
  }
}

TEST_CASE("geometric listed moments at p = 2") {
  std::vector<double> p{2.0};
  CHECK(univariate_moment(Family::Geometric, p, 1) == doctest::Approx(1.0));
  CHECK(univariate_moment(Family::Geometric, p, 2) == doctest::Approx(3.0));
  CHECK(univariate_moment(Family::Geometric, p, 3) == doctest::Approx(13.0));
}

TEST_CASE("domain violations are rejected") {
  CHECK_THROWS_AS(univariate_moment(Family::Gaussian, std::vector<double>{0.0, -1.0}, 2),
                  std::domain_error);
  CHECK_THROWS_AS(univariate_moment(Family::Uniform, std::vector<double>{1.0, 0.0}, 1),
                  std::domain_error);
  CHECK_THROWS_AS(univariate_moment(Family::Geometric, std::vector<double>{0.9}, 1),
                  std::domain_error);
  CHECK_THROWS_AS(univariate_moment(Family::Geometric, std::vector<double>{1.0}, 1),
                  std::domain_error);
  CHECK_THROWS_AS(univariate_moment(Family::Binomial, std::vector<double>{2.5, 0.5}, 1),
                  std::domain_error);
  CHECK_THROWS_AS(univariate_moment(Family::Poisson, std::vector<double>{1.0, 2.0}, 1),
                  std::domain_error);
}

TEST_CASE("overflow at extreme orders raises range-error instead of returning inf") {
  CHECK_THROWS_AS(univariate_moment(Family::Exponential, std::vector<double>{100.0}, 200),
                  std::range_error);
}

TEST_CASE("non-polynomial families are rejected by name with an explanation") {
  CHECK_THROWS_WITH_AS(family_from_name("weibull"),
                       doctest::Contains("not a polynomial family"), std::domain_error);
  CHECK_THROWS_AS(family_from_name("cauchy"), std::domain_error);
  CHECK_FALSE(family_from_name("no_such_family").has_value());
  CHECK(family_from_name("negative_binomial") == Family::NegativeBinomial);
}
