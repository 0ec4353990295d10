#pragma once

#include <vector>

namespace polymom {

/// Exponent tuple (i_1, ..., i_l) of a raw moment E[prod_t x_t^{i_t}].
using MultiIndex = std::vector<int>;

int degree(const MultiIndex& idx);

/// First `count` multi-indices of dimension `dim` in graded order: ascending
/// total degree, and within a degree descending lexicographic on the exponent
/// tuple, so for dim=2 the order starts (1,0),(0,1),(2,0),(1,1),(0,2).
/// Degree-0 is excluded. For dim=1 this is (1),(2),...,(count).
std::vector<MultiIndex> enumerate_indices(int dim, int count);

/// All multi-indices of dimension `dim` with 1 <= degree <= max_degree, in the
/// same order as enumerate_indices.
std::vector<MultiIndex> indices_up_to_degree(int dim, int max_degree);

/// Ordered raw moments of an l-dimensional distribution: values[j] is the
/// moment at the j-th index of enumerate_indices(dim, values.size()).
struct MomentVector {
  std::vector<double> values;
  int dim = 1;

  int count() const { return static_cast<int>(values.size()); }
};

}  // namespace polymom
