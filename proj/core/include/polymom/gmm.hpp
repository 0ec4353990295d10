#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "polymom/model_spec.hpp"

namespace polymom {

/// Sorted set of coordinate indices (0-based) defining an axis-aligned
/// projection: means restrict to the indices, covariances to the principal
/// minor, weights are untouched.
struct CoordinatePlane {
  std::vector<int> indices;  // strictly increasing

  int dim() const { return static_cast<int>(indices.size()); }
  void validate(int ambient_dim) const;
  static CoordinatePlane full(int ambient_dim);
  bool contains(int index) const;
  /// Position of an ambient index inside this plane; -1 if absent.
  int position_of(int index) const;
};

struct GmmComponent {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double weight = 0.0;
};

/// Parameters of a k-component Gaussian mixture in n dimensions. Construction
/// validates: covariances symmetric within 1e-12 (Frobenius) with eigenvalues
/// >= -1e-10, weights non-negative and summing to 1 within 1e-12.
class GmmParams {
 public:
  explicit GmmParams(std::vector<GmmComponent> components);

  int dimension() const { return static_cast<int>(components_.front().mean.size()); }
  int component_count() const { return static_cast<int>(components_.size()); }
  const std::vector<GmmComponent>& components() const { return components_; }
  const GmmComponent& component(int i) const { return components_[static_cast<std::size_t>(i)]; }

  /// Sampling/moment view: a mixture of multivariate Gaussian leaves.
  ModelSpec to_model() const;

  nlohmann::json to_json() const;
  static GmmParams from_json(const nlohmann::json& j);

 private:
  std::vector<GmmComponent> components_;
};

/// Per component in order: mean entries, full row-major covariance entries,
/// then the weight — so the Euclidean distance of two flattened vectors is
/// the component-wise mean/Frobenius/weight distance. Length k(n + n^2 + 1).
Eigen::VectorXd flatten(const GmmParams& params);

/// Inverse of flatten; covariance blocks are symmetrized via (S + S^T)/2.
GmmParams unflatten(const Eigen::VectorXd& flat, int n, int k);

/// Radius of identifiability:
///   R^2 = min( 1/4 min_{i != j} (||mu_i - mu_j||^2 + ||Sigma_i - Sigma_j||_F^2),
///              min_i w_i^2 ).
/// For k = 1 the pair term is vacuous and w_1 (= 1) is returned.
double identifiability_radius(const GmmParams& params);

GmmParams project(const GmmParams& params, const CoordinatePlane& plane);

struct MatchResult {
  double distance = 0.0;
  std::vector<int> permutation;  // component i of the first matches permutation[i] of the second
};

/// min over permutations s of sqrt(sum_i ||mu_i - mu'_{s(i)}||^2 +
/// ||Sigma_i - Sigma'_{s(i)}||_F^2 + |w_i - w'_{s(i)}|^2). Exhaustive for
/// k <= 8, optimal-assignment reduction above (the cost is separable per
/// matched pair). Ties break to the lexicographically smallest permutation.
MatchResult matched_distance(const GmmParams& a, const GmmParams& b);

/// min_{i != j} of the flattened per-component triple distance; always at
/// least twice the identifiability radius. Throws std::domain_error for k=1.
double component_separation(const GmmParams& params);

/// Exhaustively maximizes identifiability_radius(project(params, S)) over all
/// C(n, d) coordinate planes; lexicographically smallest plane on ties.
/// Throws BudgetExceeded when C(n, d) exceeds the budget.
std::pair<CoordinatePlane, double> best_plane_brute_force(const GmmParams& params, int d,
                                                          std::size_t plane_budget = 2'000'000);

/// Greedy constructive plane on which every pair of the given vectors keeps
/// at least a 1/sqrt(dim) fraction of its separation: for each pair, the
/// coordinate with the largest absolute difference is added. At most
/// k(k-1)/2 coordinates; identical vectors contribute nothing.
CoordinatePlane greedy_separating_plane(const std::vector<Eigen::VectorXd>& means, int dim);

/// Matrix version with factor 1/dim: for each pair the entry (p, q) with the
/// largest absolute difference contributes both p and q. At most k(k-1)
/// coordinates.
CoordinatePlane greedy_separating_plane(const std::vector<Eigen::MatrixXd>& covs, int dim);

}  // namespace polymom
