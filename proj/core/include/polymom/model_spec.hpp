#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>
#include <variant>
#include <vector>

#include "polymom/families.hpp"
#include "polymom/multi_index.hpp"

namespace polymom {

/// Composable distribution description: a leaf family with parameters, a
/// mixture of same-dimension children, a product of children (dimensions
/// add), or a linear reparameterization p_{A theta} of a child. Mixtures,
/// products and reparameterizations of polynomial families are polynomial,
/// so every ModelSpec has polynomial raw moments.
///
/// The canonical parameter vector (parameters()/with_parameters()) is the
/// depth-first concatenation of: leaf family parameters in their table
/// order; for a multivariate Gaussian leaf the mean entries then the upper
/// covariance triangle row-major; for a mixture the children followed by the
/// first k-1 weights (the last weight is implied). A Reparam node exposes
/// the stored pre-image vector theta; moments and samples are those of the
/// child at A theta.
class ModelSpec {
 public:
  struct UnivariateLeaf {
    Family family;
    std::vector<double> params;
  };
  struct GaussianLeaf {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
  };
  struct MixtureNode {
    std::vector<double> weights;
    std::vector<ModelSpec> children;
  };
  struct ProductNode {
    std::vector<ModelSpec> children;
  };
  struct ReparamNode {
    Eigen::MatrixXd matrix;
    std::vector<ModelSpec> child;  // exactly one element
  };
  using Node = std::variant<UnivariateLeaf, GaussianLeaf, MixtureNode, ProductNode, ReparamNode>;

  /// Factories validate their inputs and throw std::domain_error /
  /// std::invalid_argument on violation.
  static ModelSpec leaf(Family family, std::vector<double> params);
  static ModelSpec gaussian(double mu, double sigma2);
  static ModelSpec mv_gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov);
  static ModelSpec mixture(std::vector<double> weights, std::vector<ModelSpec> children);
  static ModelSpec product(std::vector<ModelSpec> children);
  static ModelSpec reparam(Eigen::MatrixXd matrix, ModelSpec child);

  int dimension() const;
  int parameter_count() const;
  Eigen::VectorXd parameters() const;

  /// Rebuilds the spec with the canonical parameter vector replaced.
  /// Throws std::domain_error if the new parameters are invalid.
  ModelSpec with_parameters(const Eigen::VectorXd& values) const;

  /// Non-throwing validity check of a candidate parameter vector; used to
  /// skip infeasible lattice points during grid search.
  bool parameters_feasible(const Eigen::VectorXd& values) const;

  const Node& node() const { return node_; }

 private:
  explicit ModelSpec(Node node) : node_(std::move(node)) {}
  Node node_;
};

/// Exact raw moment of the model at a multi-index (dimension must match).
double model_moment(const ModelSpec& model, const MultiIndex& idx);

/// First `count` moments in canonical index order.
MomentVector moment_vector(const ModelSpec& model, int count);

/// Node-tagged JSON tree with fields kind/params/weights/children/matrix.
nlohmann::json model_to_json(const ModelSpec& model);
ModelSpec model_from_json(const nlohmann::json& j);

}  // namespace polymom
