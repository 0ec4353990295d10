#include "polymom/sampling.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace polymom {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

namespace {

// Marsaglia-Tsang for shape >= 1; shape < 1 boosted by u^{1/shape}.
double gamma_shape(double shape, Rng& rng) {
  if (shape < 1.0) {
    double boost = std::pow(rng.uniform01(), 1.0 / shape);
    return gamma_shape(shape + 1.0, rng) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u = rng.uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

// Sequential inversion; exact for modest lambda.
long poisson_small(double lambda, Rng& rng) {
  double u = rng.uniform01();
  double p = std::exp(-lambda);
  double cdf = p;
  long x = 0;
  while (u > cdf && x < 100000) {
    ++x;
    p *= lambda / static_cast<double>(x);
    cdf += p;
  }
  return x;
}

// Sums of independent Poissons are Poisson, so large rates split in half.
long poisson_draw(double lambda, Rng& rng) {
  if (lambda <= 60.0) return poisson_small(lambda, rng);
  return poisson_draw(lambda / 2.0, rng) + poisson_draw(lambda - lambda / 2.0, rng);
}

long binomial_small(long n, double p, Rng& rng) {
  // Inversion on the pmf recurrence.
  double u = rng.uniform01();
  double q = 1.0 - p;
  double pmf = std::pow(q, static_cast<double>(n));
  double cdf = pmf;
  long x = 0;
  while (u > cdf && x < n) {
    pmf *= (static_cast<double>(n - x) / static_cast<double>(x + 1)) * (p / q);
    cdf += pmf;
    ++x;
  }
  return x;
}

long binomial_draw(long n, double p, Rng& rng) {
  if (n <= 1000) return binomial_small(n, p, rng);
  long half = n / 2;
  return binomial_draw(half, p, rng) + binomial_draw(n - half, p, rng);
}

}  // namespace

double sample_univariate(Family family, std::span<const double> params, Rng& rng) {
  validate_params(family, params);
  switch (family) {
    case Family::Gaussian:
      return params[0] + std::sqrt(params[1]) * rng.normal();
    case Family::Uniform:
      return rng.uniform(params[0], params[1]);
    case Family::Gamma:
      return params[0] * gamma_shape(params[1], rng);
    case Family::Laplace: {
      double u = rng.uniform01();
      return u < 0.5 ? params[0] + params[1] * std::log(2.0 * u)
                     : params[0] - params[1] * std::log(2.0 * (1.0 - u));
    }
    case Family::Exponential:
      return -params[0] * std::log(rng.uniform01());
    case Family::ChiSquare:
      return 2.0 * gamma_shape(params[0] / 2.0, rng);
    case Family::InverseGaussian: {
      // Michael-Schucany-Haas; the (mu, lambda) parameterization here has
      // variance lambda mu^3, i.e. shape = 1/lambda.
      double mu = params[0], shape = 1.0 / params[1];
      double nu = rng.normal();
      double y = nu * nu;
      double x = mu + mu * mu * y / (2.0 * shape) -
                 (mu / (2.0 * shape)) * std::sqrt(4.0 * mu * shape * y + mu * mu * y * y);
      if (rng.uniform01() <= mu / (mu + x)) return x;
      return mu * mu / x;
    }
    case Family::Poisson:
      return static_cast<double>(poisson_draw(params[0], rng));
    case Family::Binomial:
      return static_cast<double>(
          binomial_draw(static_cast<long>(std::llround(params[0])), params[1], rng));
    case Family::Geometric: {
      // Failure count with success probability 1/p.
      double u = rng.uniform01();
      double g = std::floor(std::log(u) / std::log1p(-1.0 / params[0]));
      return g;
    }
    case Family::NegativeBinomial: {
      // Gamma-Poisson mixture: rate Gamma(shape r, scale m), then Poisson.
      double rate = params[1] * gamma_shape(params[0], rng);
      return static_cast<double>(poisson_draw(rate, rng));
    }
  }
  throw std::logic_error("sample_univariate: unreachable");
}

namespace {

// Square root factor of a PSD covariance; Cholesky when positive definite,
// eigendecomposition with clamped eigenvalues otherwise.
Eigen::MatrixXd cov_factor(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * clamped.cwiseSqrt().asDiagonal();
}

}  // namespace

void sample_model_row(const ModelSpec& model, Rng& rng, std::span<double> out) {
  if (static_cast<int>(out.size()) != model.dimension()) {
    throw std::invalid_argument("sample_model_row: output size mismatch");
  }
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ModelSpec::UnivariateLeaf>) {
          out[0] = sample_univariate(node.family, node.params, rng);
        } else if constexpr (std::is_same_v<T, ModelSpec::GaussianLeaf>) {
          // The factor is recomputed per row; callers on hot paths draw
          // whole datasets through dataset.cpp, which caches per chunk.
          Eigen::MatrixXd l = cov_factor(node.cov);
          Eigen::VectorXd z(node.mean.size());
          for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
          Eigen::VectorXd x = node.mean + l * z;
          for (int i = 0; i < x.size(); ++i) out[i] = x[i];
        } else if constexpr (std::is_same_v<T, ModelSpec::MixtureNode>) {
          double u = rng.uniform01();
          double cdf = 0.0;
          std::size_t pick = node.children.size() - 1;
          for (std::size_t j = 0; j < node.weights.size(); ++j) {
            cdf += node.weights[j];
            if (u <= cdf) {
              pick = j;
              break;
            }
          }
          sample_model_row(node.children[pick], rng, out);
        } else if constexpr (std::is_same_v<T, ModelSpec::ProductNode>) {
          std::size_t offset = 0;
          for (const ModelSpec& c : node.children) {
            std::size_t d = static_cast<std::size_t>(c.dimension());
            sample_model_row(c, rng, out.subspan(offset, d));
            offset += d;
          }
        } else {
          const ModelSpec& child = node.child.front();
          Eigen::VectorXd transformed = node.matrix * child.parameters();
          sample_model_row(child.with_parameters(transformed), rng, out);
        }
      },
      model.node());
}

}  // namespace polymom
