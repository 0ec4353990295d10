#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "polymom/model_spec.hpp"
#include "polymom/multi_index.hpp"

namespace polymom {

/// Immutable matrix of samples, one row per draw, row-major.
struct Dataset {
  std::vector<double> data;  // size rows * dim
  int dim = 1;
  std::uint64_t source_seed = 0;
  std::uint64_t model_hash = 0;  // digest of the generating model, 0 if none

  std::size_t rows() const { return dim == 0 ? 0 : data.size() / static_cast<std::size_t>(dim); }
  double at(std::size_t r, int c) const { return data[r * static_cast<std::size_t>(dim) + c]; }

  /// Headerless CSV, one sample per line, 17 significant digits.
  void to_csv(std::ostream& out) const;
  void to_csv_file(const std::string& path) const;
  static Dataset from_csv(std::istream& in);
  static Dataset from_csv_file(const std::string& path);
};

/// M i.i.d. draws. Rows are generated in fixed-size chunks, each chunk from
/// its own (seed, chunk-index)-derived stream, so the dataset is bit-identical
/// for any worker count and any scheduling.
Dataset draw_samples(const ModelSpec& model, std::size_t m, std::uint64_t seed,
                     int workers = 1);

/// Empirical raw moments (1/M) sum_rows prod_t row_t^{i_t} in canonical index
/// order, computed in a single streaming pass with compensated accumulation.
MomentVector empirical_moment_vector(const Dataset& data, int count);

/// Inputs of the moment-concentration sample bound.
struct SamplePlan {
  int moment_count = 1;      // N
  int dim = 1;               // l
  double ball_radius = 1.0;  // B
  double epsilon = 0.1;
  double delta = 0.1;
  double constant_c = 1.0;   // C
};

/// ceil(C N B^{2 ceil(N/l)} / (eps^2 delta)) + 1 — the smallest sample count
/// strictly beyond the bound. Throws BudgetExceeded (carrying the computed
/// value) if the result exceeds hard_cap.
std::size_t required_samples(const SamplePlan& plan,
                             std::size_t hard_cap = 1'000'000'000'000ull);

/// Estimates Var(f_i(X)) for i <= N from a pilot sample and returns the
/// smallest C for which the Chebyshev/union-bound argument meets the plan's
/// (epsilon, delta): C = sum_i Var(f_i) / (N B^{2 ceil(N/l)}).
double calibrate_bound_constant(const ModelSpec& model, const SamplePlan& plan,
                                std::size_t pilot_samples, std::uint64_t seed);

}  // namespace polymom
