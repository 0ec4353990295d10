#include "polymom/low_dim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "polymom/errors.hpp"
#include "polymom/sampling.hpp"
#include "polymom/seeding.hpp"

namespace polymom {

OracleEstimator::OracleEstimator(GmmParams truth, double eta, bool shuffle)
    : truth_(std::move(truth)), eta_(eta), shuffle_(shuffle) {
  if (eta < 0.0) throw std::invalid_argument("OracleEstimator: noise must be >= 0");
}

LowDimResult OracleEstimator::estimate(const LowDimTask& task) const {
  GmmParams projected = project(truth_, task.plane);
  const int k = projected.component_count();
  const int d = projected.dimension();

  Rng rng(derive_seed(task.task_seed, 0x0AC1E, 0));
  std::vector<GmmComponent> comps = projected.components();
  if (shuffle_) {
    for (int i = k - 1; i > 0; --i) {
      int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(comps[static_cast<std::size_t>(i)], comps[static_cast<std::size_t>(j)]);
    }
  }
  if (eta_ > 0.0) {
    for (GmmComponent& c : comps) {
      for (int t = 0; t < d; ++t) c.mean[t] += eta_ * rng.uniform(-1.0, 1.0);
      for (int r = 0; r < d; ++r) {
        for (int col = r; col < d; ++col) {
          double noise = eta_ * rng.uniform(-1.0, 1.0);
          c.cov(r, col) += noise;
          if (col != r) c.cov(col, r) += noise;
        }
      }
    }
    double sum = 0.0;
    for (int i = 0; i + 1 < k; ++i) {
      comps[static_cast<std::size_t>(i)].weight += eta_ * rng.uniform(-1.0, 1.0) / (2.0 * k);
      sum += comps[static_cast<std::size_t>(i)].weight;
    }
    comps[static_cast<std::size_t>(k - 1)].weight = 1.0 - sum;
  }

  try {
    return LowDimResult{GmmParams(std::move(comps)), 0.0, 0, 0};
  } catch (const std::exception& e) {
    throw EstimationFailed(std::string("oracle estimate left the parameter domain: ") + e.what());
  }
}

GridMomentEstimator::GridMomentEstimator(std::shared_ptr<const SampleSource> source, int k,
                                         GmmSearchBounds bounds, EstimationConfig base_cfg)
    : source_(std::move(source)), k_(k), bounds_(bounds), base_cfg_(base_cfg) {
  if (!source_) throw std::invalid_argument("GridMomentEstimator: null sample source");
  if (k_ < 1) throw std::invalid_argument("GridMomentEstimator: k must be >= 1");
  if (bounds_.mean_low >= bounds_.mean_high || bounds_.var_low >= bounds_.var_high ||
      bounds_.var_low <= 0.0 || bounds_.cov_bound < 0.0 || bounds_.weight_low <= 0.0 ||
      bounds_.weight_low >= 1.0 / k_) {
    throw std::invalid_argument("GridMomentEstimator: inconsistent search bounds");
  }
}

LowDimResult GridMomentEstimator::estimate(const LowDimTask& task) const {
  task.plane.validate(source_->dimension());
  const int d = task.plane.dim();
  const int k = k_;

  // Prototype: k unit-covariance Gaussians, uniform weights; every canonical
  // parameter is free.
  std::vector<ModelSpec> children;
  children.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    children.push_back(
        ModelSpec::mv_gaussian(Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d)));
  }
  ModelSpec proto = ModelSpec::mixture(std::vector<double>(k, 1.0 / k), std::move(children));
  ModelTemplate tmpl(proto);

  ParamBox box;
  const int per_comp = d + d * (d + 1) / 2;
  for (int j = 0; j < k; ++j) {
    for (int t = 0; t < d; ++t) box.bounds.emplace_back(bounds_.mean_low, bounds_.mean_high);
    for (int r = 0; r < d; ++r) {
      box.bounds.emplace_back(bounds_.var_low, bounds_.var_high);  // (r, r)
      for (int col = r + 1; col < d; ++col) {
        box.bounds.emplace_back(-bounds_.cov_bound, bounds_.cov_bound);
      }
    }
  }
  for (int j = 0; j + 1 < k; ++j) box.bounds.emplace_back(bounds_.weight_low, 1.0 - bounds_.weight_low);
  const double weight_low = bounds_.weight_low;
  const int weight_offset = per_comp * k;
  box.feasible = [k, weight_low, weight_offset](const Eigen::VectorXd& point) {
    double sum = 0.0;
    for (int j = 0; j + 1 < k; ++j) sum += point[weight_offset + j];
    return sum <= 1.0 - weight_low;  // implied last weight stays feasible
  };

  EstimationConfig cfg = base_cfg_;
  cfg.epsilon = task.precision;
  cfg.seed = derive_seed(task.task_seed, 0x96D0, 0);

  SamplePlan plan;
  plan.moment_count = cfg.resolved_moment_count(tmpl.free_count());
  plan.dim = d;
  plan.ball_radius = box.ball_radius();
  plan.epsilon = cfg.epsilon;
  plan.delta = cfg.delta;
  plan.constant_c = cfg.bound_constant;
  std::size_t required = 0;
  try {
    required = required_samples(plan);
  } catch (const BudgetExceeded&) {
    if (cfg.strict_budget) throw;
    required = std::numeric_limits<std::size_t>::max();
  }
  if (cfg.strict_budget && required > cfg.sample_cap) {
    throw BudgetExceeded("low-dim estimation: required sample count exceeds the cap",
                         static_cast<double>(required));
  }
  const std::size_t m = std::min(required, cfg.sample_cap);

  Dataset full = source_->draw(m, cfg.seed);
  Dataset restricted;
  restricted.dim = d;
  restricted.source_seed = full.source_seed;
  restricted.data.resize(full.rows() * static_cast<std::size_t>(d));
  for (std::size_t r = 0; r < full.rows(); ++r) {
    for (int t = 0; t < d; ++t) {
      restricted.data[r * static_cast<std::size_t>(d) + t] = full.at(r, task.plane.indices[t]);
    }
  }

  MomentVector target = empirical_moment_vector(restricted, plan.moment_count);
  Estimate est = grid_search(target, tmpl, box, cfg);
  auto spec = tmpl.instantiate(est.params);
  if (!spec) throw EstimationFailed("low-dim estimation: winning grid point is infeasible");
  return LowDimResult{gmm_from_mixture_model(*spec), est.residual, full.rows(),
                      est.cells_evaluated};
}

GmmParams gmm_from_mixture_model(const ModelSpec& model) {
  const auto* mix = std::get_if<ModelSpec::MixtureNode>(&model.node());
  std::vector<GmmComponent> comps;
  if (mix) {
    comps.reserve(mix->children.size());
    for (std::size_t j = 0; j < mix->children.size(); ++j) {
      const auto* leaf = std::get_if<ModelSpec::GaussianLeaf>(&mix->children[j].node());
      const auto* uni = std::get_if<ModelSpec::UnivariateLeaf>(&mix->children[j].node());
      GmmComponent c;
      if (leaf) {
        c.mean = leaf->mean;
        c.cov = leaf->cov;
      } else if (uni && uni->family == Family::Gaussian) {
        c.mean = Eigen::VectorXd::Constant(1, uni->params[0]);
        c.cov = Eigen::MatrixXd::Constant(1, 1, uni->params[1]);
      } else {
        throw std::invalid_argument("gmm_from_mixture_model: child is not a Gaussian leaf");
      }
      c.weight = mix->weights[j];
      comps.push_back(std::move(c));
    }
    return GmmParams(std::move(comps));
  }
  // A single Gaussian leaf counts as a one-component mixture.
  if (const auto* leaf = std::get_if<ModelSpec::GaussianLeaf>(&model.node())) {
    return GmmParams({GmmComponent{leaf->mean, leaf->cov, 1.0}});
  }
  if (const auto* uni = std::get_if<ModelSpec::UnivariateLeaf>(&model.node());
      uni && uni->family == Family::Gaussian) {
    return GmmParams({GmmComponent{Eigen::VectorXd::Constant(1, uni->params[0]),
                                   Eigen::MatrixXd::Constant(1, 1, uni->params[1]), 1.0}});
  }
  throw std::invalid_argument("gmm_from_mixture_model: model is not a Gaussian mixture");
}

}  // namespace polymom
