#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <span>

#include "polymom/families.hpp"
#include "polymom/model_spec.hpp"

namespace polymom {

/// Deterministic random stream: mt19937_64 core with explicit variate
/// transforms so identical seeds give identical draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on the open interval (0,1); never returns 0, so logs are safe.
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Standard normal via the polar transform; the second variate of each
  /// pair is cached.
  double normal();

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// One draw from a univariate family. Gaussian uses the polar transform,
/// gamma uses Marsaglia-Tsang rejection (with the u^{1/m} boost for shape
/// < 1), discrete families use inversion; the negative binomial is drawn as
/// a gamma-Poisson mixture.
double sample_univariate(Family family, std::span<const double> params, Rng& rng);

/// One row of the model's distribution written into `out` (length must equal
/// the model's dimension). Mixtures draw a component index from the weights
/// and then the component; products fill their blocks child by child.
void sample_model_row(const ModelSpec& model, Rng& rng, std::span<double> out);

}  // namespace polymom
