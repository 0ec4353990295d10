#pragma once

#include <cstdint>
#include <memory>

#include "polymom/estimator.hpp"
#include "polymom/gmm.hpp"

namespace polymom {

/// One low-dimensional estimation request issued by the reducer: estimate the
/// mixture restricted to `plane` at the given precision. task_seed derives
/// all randomness, so tasks are pure and may run on any worker.
struct LowDimTask {
  CoordinatePlane plane;
  double precision = 1e-2;
  std::uint64_t task_seed = 0;
};

struct LowDimResult {
  GmmParams params;
  double residual = 0.0;
  std::size_t samples_used = 0;
  std::size_t cells_evaluated = 0;
};

/// Contract between the reducer and any low-dimensional mixture estimator.
/// Implementations must be deterministic given (task, construction state).
class GmmLowDimEstimator {
 public:
  virtual ~GmmLowDimEstimator() = default;
  virtual LowDimResult estimate(const LowDimTask& task) const = 0;
  virtual int ambient_dimension() const = 0;
  virtual int component_count() const = 0;
};

/// Test oracle: returns the true projected parameters plus per-slot noise of
/// magnitude eta (uniform in [-eta, eta]; the first k-1 weights get
/// eta/(2k) with the last weight implied, keeping the simplex exact).
/// Components are shuffled deterministically per task seed so downstream
/// matching is exercised; set shuffle=false for the exact-identity contract.
class OracleEstimator final : public GmmLowDimEstimator {
 public:
  OracleEstimator(GmmParams truth, double eta, bool shuffle = true);
  LowDimResult estimate(const LowDimTask& task) const override;
  int ambient_dimension() const override { return truth_.dimension(); }
  int component_count() const override { return truth_.component_count(); }

 private:
  GmmParams truth_;
  double eta_;
  bool shuffle_;
};

/// Parameter ranges of the mixture search box used by GridMomentEstimator.
struct GmmSearchBounds {
  double mean_low = -2.0;
  double mean_high = 2.0;
  double var_low = 0.25;
  double var_high = 4.0;
  double cov_bound = 1.0;    // off-diagonal covariance entries
  double weight_low = 0.05;  // weights within [weight_low, 1 - weight_low]
};

/// Grid-search method-of-moments estimator over the projected sample: rows of
/// the full-dimensional source are restricted to the plane's coordinates and
/// a k-component mixture of |plane|-dimensional Gaussians is fitted.
class GridMomentEstimator final : public GmmLowDimEstimator {
 public:
  GridMomentEstimator(std::shared_ptr<const SampleSource> source, int k,
                      GmmSearchBounds bounds, EstimationConfig base_cfg);
  LowDimResult estimate(const LowDimTask& task) const override;
  int ambient_dimension() const override { return source_->dimension(); }
  int component_count() const override { return k_; }

 private:
  std::shared_ptr<const SampleSource> source_;
  int k_;
  GmmSearchBounds bounds_;
  EstimationConfig base_cfg_;
};

/// Reads a mixture-of-Gaussians ModelSpec back into parameter form.
GmmParams gmm_from_mixture_model(const ModelSpec& model);

}  // namespace polymom
