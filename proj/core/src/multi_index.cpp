#include "polymom/multi_index.hpp"

#include <numeric>
#include <stdexcept>

namespace polymom {

int degree(const MultiIndex& idx) {
  return std::accumulate(idx.begin(), idx.end(), 0);
}

namespace {

// Appends all exponent tuples of total degree d over `dim` coordinates, in
// descending lexicographic order, stopping once `out` reaches `limit`.
void append_degree(int dim, int d, std::size_t limit, MultiIndex& scratch,
                   int pos, int remaining, std::vector<MultiIndex>& out) {
  if (out.size() >= limit) return;
  if (pos == dim - 1) {
    scratch[pos] = remaining;
    out.push_back(scratch);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    scratch[pos] = e;
    append_degree(dim, d, limit, scratch, pos + 1, remaining - e, out);
    if (out.size() >= limit) return;
  }
}

}  // namespace

std::vector<MultiIndex> enumerate_indices(int dim, int count) {
  if (dim < 1) throw std::invalid_argument("enumerate_indices: dimension must be >= 1");
  if (count < 1) throw std::invalid_argument("enumerate_indices: count must be >= 1");
  std::vector<MultiIndex> out;
  out.reserve(static_cast<std::size_t>(count));
  MultiIndex scratch(static_cast<std::size_t>(dim), 0);
  for (int d = 1; out.size() < static_cast<std::size_t>(count); ++d) {
    append_degree(dim, d, static_cast<std::size_t>(count), scratch, 0, d, out);
  }
  return out;
}

std::vector<MultiIndex> indices_up_to_degree(int dim, int max_degree) {
  if (dim < 1) throw std::invalid_argument("indices_up_to_degree: dimension must be >= 1");
  if (max_degree < 1) throw std::invalid_argument("indices_up_to_degree: max_degree must be >= 1");
  std::vector<MultiIndex> out;
  MultiIndex scratch(static_cast<std::size_t>(dim), 0);
  for (int d = 1; d <= max_degree; ++d) {
    append_degree(dim, d, out.max_size(), scratch, 0, d, out);
  }
  return out;
}

}  // namespace polymom
