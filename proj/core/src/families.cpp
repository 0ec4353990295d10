#include "polymom/families.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace polymom {

namespace {

struct FamilyInfo {
  std::string_view name;
  int arity;
};

const FamilyInfo& info(Family family) {
  static const FamilyInfo table[] = {
      {"gaussian", 2},         {"uniform", 2},  {"gamma", 2},
      {"laplace", 2},          {"exponential", 1}, {"chi_square", 1},
      {"inverse_gaussian", 2}, {"poisson", 1},  {"binomial", 2},
      {"geometric", 1},        {"negative_binomial", 2},
  };
  return table[static_cast<std::size_t>(family)];
}

bool is_positive_integer(double x) {
  return x >= 1.0 && std::abs(x - std::round(x)) < 1e-9;
}

[[noreturn]] void fail(Family family, const char* constraint) {
  throw std::domain_error(std::string(family_name(family)) +
                          ": parameters violate " + constraint);
}

// Moment polynomials in one distribution parameter, dense coefficient lists
// (coeffs[j] multiplies x^j).
using Poly = std::vector<double>;

double poly_eval(const Poly& p, double x) {
  double acc = 0.0;
  for (std::size_t j = p.size(); j-- > 0;) acc = acc * x + p[j];
  return acc;
}

// E(X^i) for Poisson as a polynomial in lambda:
//   T_i = lambda * (T_{i-1} + T'_{i-1}),  T_0 = 1.
Poly poisson_moment_poly(int order) {
  Poly t{1.0};
  for (int i = 1; i <= order; ++i) {
    Poly next(t.size() + 1, 0.0);
    for (std::size_t j = 0; j < t.size(); ++j) {
      next[j + 1] += t[j];                            // lambda * T
      if (j > 0) next[j] += static_cast<double>(j) * t[j];  // lambda * T'
    }
    t = std::move(next);
  }
  return t;
}

// E(X^i) for Binomial(n, p) as a polynomial in p (n enters numerically):
//   T_i = n p T_{i-1} + p(1-p) T'_{i-1},  T_0 = 1.
Poly binomial_moment_poly(double n, int order) {
  Poly t{1.0};
  for (int i = 1; i <= order; ++i) {
    Poly next(t.size() + 1, 0.0);
    for (std::size_t j = 0; j < t.size(); ++j) {
      next[j + 1] += n * t[j];
      if (j > 0) {
        double dj = static_cast<double>(j) * t[j];
        next[j] += dj;       // p * T'
        next[j + 1] -= dj;   // -p^2 * T'
      }
    }
    t = std::move(next);
  }
  return t;
}

// E(X^i) for NegativeBinomial(r, m) as a polynomial in m:
//   T_i = r m T_{i-1} + m(m+1) T'_{i-1},  T_0 = 1.
// The geometric with parameter p is this recurrence at r = 1, m = p - 1.
Poly negative_binomial_moment_poly(double r, int order) {
  Poly t{1.0};
  for (int i = 1; i <= order; ++i) {
    Poly next(t.size() + 1, 0.0);
    for (std::size_t j = 0; j < t.size(); ++j) {
      next[j + 1] += r * t[j];
      if (j > 0) {
        double dj = static_cast<double>(j) * t[j];
        next[j + 1] += dj;  // m^2 * T'
        next[j] += dj;      // m * T'
      }
    }
    t = std::move(next);
  }
  return t;
}

double gaussian_moment(double mu, double sigma2, int order) {
  double prev2 = 1.0;  // E(X^0)
  if (order == 0) return prev2;
  double prev1 = mu;  // E(X^1)
  for (int i = 2; i <= order; ++i) {
    double cur = mu * prev1 + (i - 1) * sigma2 * prev2;
    prev2 = prev1;
    prev1 = cur;
  }
  return prev1;
}

double uniform_moment(double a, double b, int order) {
  // E(X^i) = (sum_{j=0}^{i} a^j b^{i-j}) / (i+1)
  double sum = 0.0;
  for (int j = 0; j <= order; ++j) {
    sum += std::pow(a, j) * std::pow(b, order - j);
  }
  return sum / (order + 1);
}

double gamma_moment(double beta, double m, int order) {
  double acc = 1.0;
  for (int j = 0; j < order; ++j) acc *= (m + j) * beta;
  return acc;
}

double laplace_moment(double mu, double b, int order) {
  // E(X^i) = sum over even j of i!/(i-j)! b^j mu^{i-j}
  double sum = 0.0;
  double falling = 1.0;  // i!/(i-j)! built incrementally
  for (int j = 0; j <= order; ++j) {
    if (j % 2 == 0) sum += falling * std::pow(b, j) * std::pow(mu, order - j);
    falling *= (order - j);
  }
  return sum;
}

double exponential_moment(double lambda, int order) {
  double acc = 1.0;
  for (int j = 1; j <= order; ++j) acc *= j * lambda;
  return acc;
}

double chi_square_moment(double k, int order) {
  double acc = 1.0;
  for (int j = 0; j < order; ++j) acc *= k + 2 * j;
  return acc;
}

double inverse_gaussian_moment(double mu, double lambda, int order) {
  // E(X^i) = (2i-3) lambda mu^2 E(X^{i-1}) + mu^2 E(X^{i-2})
  double prev2 = 1.0;
  if (order == 0) return prev2;
  double prev1 = mu;
  for (int i = 2; i <= order; ++i) {
    double cur = (2 * i - 3) * lambda * mu * mu * prev1 + mu * mu * prev2;
    prev2 = prev1;
    prev1 = cur;
  }
  return prev1;
}

}  // namespace

std::string_view family_name(Family family) { return info(family).name; }

std::optional<Family> family_from_name(std::string_view name) {
  for (int f = 0; f <= static_cast<int>(Family::NegativeBinomial); ++f) {
    if (info(static_cast<Family>(f)).name == name) return static_cast<Family>(f);
  }
  if (name == "weibull" || name == "cauchy") {
    throw std::domain_error(std::string(name) +
                            " is not a polynomial family (its raw moments are "
                            "not polynomial in the parameters) and is not "
                            "supported");
  }
  return std::nullopt;
}

int family_arity(Family family) { return info(family).arity; }

bool params_valid(Family family, std::span<const double> params) {
  if (static_cast<int>(params.size()) != family_arity(family)) return false;
  for (double p : params) {
    if (!std::isfinite(p)) return false;
  }
  switch (family) {
    case Family::Gaussian: return params[1] > 0.0;
    case Family::Uniform: return params[0] < params[1];
    case Family::Gamma: return params[0] > 0.0 && params[1] > 0.0;
    case Family::Laplace: return params[1] > 0.0;
    case Family::Exponential: return params[0] > 0.0;
    case Family::ChiSquare: return params[0] > 0.0;
    case Family::InverseGaussian: return params[0] > 0.0 && params[1] > 0.0;
    case Family::Poisson: return params[0] > 0.0;
    case Family::Binomial:
      return is_positive_integer(params[0]) && params[1] > 0.0 && params[1] < 1.0;
    case Family::Geometric: return params[0] > 1.0;
    case Family::NegativeBinomial: return params[0] > 0.0 && params[1] > 0.0;
  }
  return false;
}

void validate_params(Family family, std::span<const double> params) {
  if (static_cast<int>(params.size()) != family_arity(family)) {
    throw std::domain_error(std::string(family_name(family)) + ": expected " +
                            std::to_string(family_arity(family)) +
                            " parameters, got " + std::to_string(params.size()));
  }
  if (params_valid(family, params)) return;
  switch (family) {
    case Family::Gaussian: fail(family, "sigma2 > 0");
    case Family::Uniform: fail(family, "a < b");
    case Family::Gamma: fail(family, "beta > 0, m > 0");
    case Family::Laplace: fail(family, "b > 0");
    case Family::Exponential: fail(family, "lambda > 0");
    case Family::ChiSquare: fail(family, "k > 0");
    case Family::InverseGaussian: fail(family, "mu > 0, lambda > 0");
    case Family::Poisson: fail(family, "lambda > 0");
    case Family::Binomial: fail(family, "n a positive integer, 0 < p < 1");
    case Family::Geometric:
      fail(family, "p > 1 (pmf (1-1/p)^x (1/p) requires it)");
    case Family::NegativeBinomial: fail(family, "r > 0, m > 0");
  }
}

double univariate_moment(Family family, std::span<const double> params, int order) {
  validate_params(family, params);
  if (order < 0) throw std::invalid_argument("univariate_moment: order must be >= 0");
  if (order == 0) return 1.0;

  double value = 0.0;
  switch (family) {
    case Family::Gaussian:
      value = gaussian_moment(params[0], params[1], order);
      break;
    case Family::Uniform:
      value = uniform_moment(params[0], params[1], order);
      break;
    case Family::Gamma:
      value = gamma_moment(params[0], params[1], order);
      break;
    case Family::Laplace:
      value = laplace_moment(params[0], params[1], order);
      break;
    case Family::Exponential:
      value = exponential_moment(params[0], order);
      break;
    case Family::ChiSquare:
      value = chi_square_moment(params[0], order);
      break;
    case Family::InverseGaussian:
      value = inverse_gaussian_moment(params[0], params[1], order);
      break;
    case Family::Poisson:
      value = poly_eval(poisson_moment_poly(order), params[0]);
      break;
    case Family::Binomial:
      value = poly_eval(binomial_moment_poly(params[0], order), params[1]);
      break;
    case Family::Geometric:
      value = poly_eval(negative_binomial_moment_poly(1.0, order), params[0] - 1.0);
      break;
    case Family::NegativeBinomial:
      value = poly_eval(negative_binomial_moment_poly(params[0], order), params[1]);
      break;
  }
  if (!std::isfinite(value)) {
    throw std::range_error(std::string(family_name(family)) + ": moment of order " +
                           std::to_string(order) + " overflows double precision");
  }
  return value;
}

}  // namespace polymom
