#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "polymom/gmm.hpp"
#include "polymom/low_dim.hpp"

namespace polymom {

struct ReductionConfig {
  int subspace_dim = 0;          // 0 -> min(2k^2, n)
  double epsilon = 1e-2;
  double delta = 0.05;
  double gamma = 0.0;            // 0 -> pilot sweep sets min(R_hat/n, eps/n)
  double match_margin = 0.0;     // 0 -> gamma/3
  std::size_t plane_budget = 200'000;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
  int resolved_subspace_dim(int n, int k) const;
};

struct SubspaceEstimate {
  CoordinatePlane plane;
  GmmParams base;
  double est_radius = 0.0;  // identifiability_radius(base), recomputed
  std::size_t planes_evaluated = 0;
};

/// New parameter entries contributed by one extension step, aligned with the
/// base component order after matching.
struct ExtensionRecord {
  enum class Kind { Single, Pair };
  Kind kind = Kind::Single;
  int i = -1;
  int j = -1;  // Pair only
  // Single: per component the i-th mean coordinate, the (i,i) covariance
  // entry, and the (i,s) entries for s in S (S order).
  std::vector<double> mean_i;
  std::vector<double> var_ii;
  std::vector<std::vector<double>> cov_is;
  // Pair: per component the (i,j) covariance entry.
  std::vector<double> cov_ij;
  std::vector<int> matching;  // candidate index -> base index
};

struct StageTiming {
  std::string stage;
  double wall_ms = 0.0;
};

struct LearnReport {
  double gamma = 0.0;
  double pilot_radius = -1.0;  // -1 when gamma was supplied
  CoordinatePlane plane;
  double plane_radius = 0.0;
  std::size_t pilot_estimations = 0;
  std::size_t step1_estimations = 0;
  /// Estimations after subspace selection: 1 + (n - d_S) + C(n - d_S, 2).
  std::size_t estimation_count = 0;
  double max_clip = 0.0;  // largest eigenvalue clip during assembly
  bool clip_warning = false;  // max_clip > epsilon / 10
  std::vector<ExtensionRecord> records;
  std::vector<StageTiming> timings;

  nlohmann::json to_json(bool include_timings = true) const;
};

struct DetectionReport {
  bool below_epsilon = false;  // verdict: R(theta) < epsilon
  double r_star = 0.0;         // max over planes of radius(estimate)
  double cutoff = 0.0;         // 2 epsilon / (3n)
  std::size_t planes_evaluated = 0;

  nlohmann::json to_json() const;
};

/// Step 1: estimates every d_S-plane at precision gamma/3 and returns the one
/// whose estimate has the largest identifiability radius (lexicographically
/// smallest plane on ties).
SubspaceEstimate select_subspace(const GmmLowDimEstimator& estimator, int n, int k,
                                 const ReductionConfig& cfg, double gamma);

/// Step 2: re-estimates the selected plane at precision gamma/9.
GmmParams estimate_base(const GmmLowDimEstimator& estimator, const CoordinatePlane& plane,
                        const ReductionConfig& cfg, double gamma);

/// Restricts each candidate component to S (drop extra mean coordinates, take
/// the S x S minor, keep the weight) and pairs it with its nearest base
/// component. Succeeds only if the pairing is a bijection, each match is
/// closer than `margin`, and every runner-up is farther than `margin`;
/// otherwise throws MatchingAmbiguous. Returns candidate-to-base indices.
std::vector<int> match_components(const GmmParams& candidate, const CoordinatePlane& plane_t,
                                  const GmmParams& base, const CoordinatePlane& plane_s,
                                  double margin);

/// Steps 2a/2b: estimates the plane S + {i} (+ {j} for pairs) at precision
/// gamma/9, matches against the base, and emits the new entries.
ExtensionRecord extend(const GmmLowDimEstimator& estimator, const CoordinatePlane& plane_s,
                       const GmmParams& base, int i, std::optional<int> j,
                       const ReductionConfig& cfg, double gamma);

struct AssemblyDiagnostics {
  double max_clip = 0.0;
  std::size_t slots_written = 0;
};

/// Writes the base minor and every extension record into full n-dimensional
/// components; each slot must be covered exactly once. Covariances are
/// symmetrized and negative eigenvalues clipped to zero (magnitude reported).
GmmParams assemble(const GmmParams& base, const CoordinatePlane& plane_s,
                   const std::vector<ExtensionRecord>& records, int n,
                   AssemblyDiagnostics* diag = nullptr);

/// The full reduction: subspace selection, base estimation, one extension per
/// missing coordinate and per missing coordinate pair, assembly.
std::pair<GmmParams, LearnReport> learn(const GmmLowDimEstimator& estimator, int n, int k,
                                        const ReductionConfig& cfg);

/// Estimates every d_S-plane at precision epsilon/(3n); verdict "R < epsilon"
/// iff the largest estimated radius stays below 2 epsilon / (3n).
DetectionReport detect_identifiability(const GmmLowDimEstimator& estimator, int n, int k,
                                       double epsilon, const ReductionConfig& cfg);

}  // namespace polymom
