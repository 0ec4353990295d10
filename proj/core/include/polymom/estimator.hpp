#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "polymom/dataset.hpp"
#include "polymom/model_spec.hpp"
#include "polymom/multi_index.hpp"

namespace polymom {

/// Sum of squared coordinate differences of two moment vectors.
double q_distance(const MomentVector& a, const MomentVector& b);

/// Axis-aligned box of parameter bounds, optionally with an extra feasibility
/// predicate applied per grid point (e.g. the weight simplex).
struct ParamBox {
  std::vector<std::pair<double, double>> bounds;  // lower < upper
  std::function<bool(const Eigen::VectorXd&)> feasible;  // optional

  int dim() const { return static_cast<int>(bounds.size()); }

  /// Radius of the enclosing ball: the norm of the farthest corner.
  double ball_radius() const;

  void validate() const;
};

struct EstimationConfig {
  double epsilon = 1e-2;
  double delta = 0.1;
  int moment_count = 0;     // 0 -> number of free parameters + 1
  double grid_step = 0.0;   // 0 -> epsilon^t / (N sqrt(m)) schedule
  double step_exponent = 1.0;  // the t of the schedule
  int refine_levels = 0;
  int keep_top = 4;         // cells carried per refinement level
  std::uint64_t seed = 0;
  std::size_t sample_cap = 100'000'000;
  bool strict_budget = false;  // true: exceeding sample_cap is an error
  double bound_constant = 1.0;  // C of the sample bound
  int workers = 1;

  void validate() const;
  int resolved_moment_count(int free_params) const;
  double resolved_step(int free_params) const;
};

struct Estimate {
  Eigen::VectorXd params;
  double residual = 0.0;
  MomentVector moments_used;
  std::size_t samples_used = 0;
  // diagnostics
  std::size_t cells_evaluated = 0;
  std::vector<double> level_best;  // best residual seen per refinement level
};

/// A ModelSpec with a chosen subset of free parameters; the remaining entries
/// of the canonical parameter vector stay at the prototype's values. Grid
/// search runs over the free coordinates only.
class ModelTemplate {
 public:
  /// All parameters free.
  explicit ModelTemplate(ModelSpec prototype);
  /// Free indices into the canonical parameter vector, strictly increasing.
  ModelTemplate(ModelSpec prototype, std::vector<int> free_indices);

  int free_count() const { return static_cast<int>(free_indices_.size()); }
  const ModelSpec& prototype() const { return prototype_; }

  /// Embeds a free-coordinate point into the full parameter vector.
  Eigen::VectorXd embed(const Eigen::VectorXd& point) const;
  bool point_feasible(const Eigen::VectorXd& point) const;
  /// nullopt when the point violates the model's parameter domain.
  std::optional<ModelSpec> instantiate(const Eigen::VectorXd& point) const;

 private:
  ModelSpec prototype_;
  Eigen::VectorXd base_values_;
  std::vector<int> free_indices_;
};

/// Exhaustive minimization of Q(target, moments(theta)) over the lattice with
/// step cfg.grid_step anchored at the box lower corners; infeasible lattice
/// points are skipped. Ties break to the lexicographically smallest grid
/// coordinate tuple. With refine_levels > 0 the search recurses on shrunken
/// boxes around the keep_top best cells, halving the step per level, and
/// returns the best point seen anywhere. The result is identical for any
/// worker count.
Estimate grid_search(const MomentVector& target, const ModelTemplate& tmpl,
                     const ParamBox& box, const EstimationConfig& cfg);

/// Sample access for the estimation pipeline: either a generative model or a
/// fixed ingested dataset. draw() must be pure given (m, seed).
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual Dataset draw(std::size_t m, std::uint64_t seed) const = 0;
  virtual int dimension() const = 0;
};

class ModelSampleSource final : public SampleSource {
 public:
  explicit ModelSampleSource(ModelSpec model, int workers = 1)
      : model_(std::move(model)), workers_(workers) {}
  Dataset draw(std::size_t m, std::uint64_t seed) const override {
    return draw_samples(model_, m, seed, workers_);
  }
  int dimension() const override { return model_.dimension(); }
  const ModelSpec& model() const { return model_; }

 private:
  ModelSpec model_;
  int workers_;
};

/// Wraps ingested data; draw() returns the first min(m, rows) rows.
class FixedSampleSource final : public SampleSource {
 public:
  explicit FixedSampleSource(Dataset data) : data_(std::move(data)) {}
  Dataset draw(std::size_t m, std::uint64_t seed) const override;
  int dimension() const override { return data_.dim; }

 private:
  Dataset data_;
};

/// Full method-of-moments pipeline: sample count from the concentration
/// bound (capped at cfg.sample_cap unless strict), empirical moments, grid
/// search.
Estimate estimate(const SampleSource& source, const ModelTemplate& tmpl,
                  const ParamBox& box, const EstimationConfig& cfg);

}  // namespace polymom
