#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace polymom {

/// Univariate distribution families whose raw moments are polynomial in the
/// parameters. The negative binomial is kept in the (r, m) parameterization
/// with m = p/(1-p); the geometric takes a single parameter p > 1 with pmf
/// (1-1/p)^x (1/p) on x = 0,1,2,...
enum class Family {
  Gaussian,          // (mu, sigma2), sigma2 > 0
  Uniform,           // (a, b), a < b
  Gamma,             // (beta, m): scale beta > 0, shape m > 0
  Laplace,           // (mu, b), b > 0
  Exponential,       // (lambda): scale lambda > 0, mean lambda
  ChiSquare,         // (k), k > 0
  InverseGaussian,   // (mu, lambda), mu > 0, lambda > 0
  Poisson,           // (lambda), lambda > 0
  Binomial,          // (n, p): n a positive integer, 0 < p < 1
  Geometric,         // (p), p > 1
  NegativeBinomial,  // (r, m), r > 0, m > 0
};

std::string_view family_name(Family family);

/// Recognizes the canonical family names used in serialized models.
/// Returns nullopt for unknown names; throws std::domain_error for families
/// that are recognized but have non-polynomial moments (weibull, cauchy).
std::optional<Family> family_from_name(std::string_view name);

int family_arity(Family family);

bool params_valid(Family family, std::span<const double> params);

/// Throws std::domain_error with a description of the violated constraint.
void validate_params(Family family, std::span<const double> params);

/// i-th raw moment E(X^i), i >= 0, computed by the family's recurrence or
/// closed form. Moments of the discrete families with derivative-form
/// recurrences (Poisson, Binomial, NegativeBinomial, Geometric) are carried
/// as explicit polynomial coefficient lists in the relevant parameter,
/// differentiated symbolically, and evaluated at the end.
/// Throws std::domain_error for invalid parameters and std::range_error if
/// the value overflows double precision.
double univariate_moment(Family family, std::span<const double> params, int order);

}  // namespace polymom
