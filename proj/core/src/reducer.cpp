#include "polymom/reducer.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <thread>

#include "polymom/errors.hpp"
#include "polymom/seeding.hpp"

namespace polymom {

namespace {

enum Stage : std::uint64_t {
  kStagePilot = 1,
  kStageSelect = 2,
  kStageBase = 3,
  kStageSingle = 4,
  kStagePair = 5,
  kStageDetect = 6,
};

std::size_t binomial_capped(int n, int d, std::size_t cap) {
  if (d < 0 || d > n) return 0;
  long double acc = 1.0L;
  for (int i = 1; i <= d; ++i) {
    acc = acc * (n - d + i) / i;
    if (acc > static_cast<long double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(acc + 0.5L);
}

std::vector<CoordinatePlane> enumerate_planes(int n, int d, std::size_t budget) {
  const std::size_t count = binomial_capped(n, d, budget);
  if (count > budget) {
    throw BudgetExceeded("reducer: C(" + std::to_string(n) + ", " + std::to_string(d) +
                             ") coordinate planes exceed the plane budget",
                         static_cast<double>(count));
  }
  std::vector<CoordinatePlane> planes;
  planes.reserve(count);
  CoordinatePlane p;
  p.indices.resize(static_cast<std::size_t>(d));
  std::iota(p.indices.begin(), p.indices.end(), 0);
  for (;;) {
    planes.push_back(p);
    int i = d - 1;
    while (i >= 0 && p.indices[static_cast<std::size_t>(i)] == n - d + i) --i;
    if (i < 0) break;
    ++p.indices[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < d; ++j) {
      p.indices[static_cast<std::size_t>(j)] = p.indices[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return planes;
}

// Runs fn(index) for every index < count over `workers` threads in contiguous
// chunks; the first exception (by chunk order) is rethrown after the join.
template <typename Fn>
void run_parallel(std::size_t count, int workers, Fn&& fn) {
  if (count == 0) return;
  const std::size_t w =
      std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count));
  if (w == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(w);
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = count * t / w; i < count * (t + 1) / w; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::uint64_t plane_tag(const CoordinatePlane& plane) {
  std::uint64_t s = 0x9e3779b97f4a7c15ull;
  for (int i : plane.indices) {
    s ^= static_cast<std::uint64_t>(i) + 1;
    (void)splitmix64(s);
  }
  return s;
}

struct SweepOutcome {
  double best_radius = -1.0;
  std::optional<CoordinatePlane> best_plane;
  std::optional<GmmParams> best_params;
  std::size_t planes = 0;
  std::size_t failures = 0;
};

// Estimates every d-plane at the given precision; keeps the lexicographically
// first plane attaining the maximal estimated radius. Per-plane estimation
// failures are tolerated until all planes fail.
SweepOutcome sweep_planes(const GmmLowDimEstimator& estimator, int n, int d, double precision,
                          std::uint64_t seed, std::uint64_t stage, int workers,
                          std::size_t budget) {
  const std::vector<CoordinatePlane> planes = enumerate_planes(n, d, budget);
  std::vector<std::optional<LowDimResult>> results(planes.size());
  std::vector<char> failed(planes.size(), 0);

  run_parallel(planes.size(), workers, [&](std::size_t idx) {
    LowDimTask task;
    task.plane = planes[idx];
    task.precision = precision;
    task.task_seed = derive_seed(seed, stage, plane_tag(planes[idx]));
    try {
      results[idx] = estimator.estimate(task);
    } catch (const EstimationFailed&) {
      failed[idx] = 1;
    } catch (const InfeasibleBox&) {
      failed[idx] = 1;
    }
  });

  SweepOutcome out;
  out.planes = planes.size();
  for (std::size_t idx = 0; idx < planes.size(); ++idx) {
    if (failed[idx]) {
      ++out.failures;
      continue;
    }
    double r = identifiability_radius(results[idx]->params);
    if (r > out.best_radius) {
      out.best_radius = r;
      out.best_plane = planes[idx];
      out.best_params = std::move(results[idx]->params);
    }
  }
  if (out.failures == planes.size()) {
    throw EstimationFailed("reducer: the low-dimensional estimator failed on every plane");
  }
  return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

void ReductionConfig::validate() const {
  if (epsilon <= 0.0) throw std::invalid_argument("ReductionConfig: epsilon must be > 0");
  if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("ReductionConfig: 0 < delta < 1");
  if (gamma < 0.0 || match_margin < 0.0) {
    throw std::invalid_argument("ReductionConfig: gamma and match_margin must be >= 0");
  }
  if (subspace_dim < 0) throw std::invalid_argument("ReductionConfig: subspace_dim must be >= 0");
}

int ReductionConfig::resolved_subspace_dim(int n, int k) const {
  if (subspace_dim > 0) {
    if (subspace_dim > n) throw std::invalid_argument("ReductionConfig: subspace_dim > dimension");
    return subspace_dim;
  }
  return std::min(2 * k * k, n);
}

SubspaceEstimate select_subspace(const GmmLowDimEstimator& estimator, int n, int k,
                                 const ReductionConfig& cfg, double gamma) {
  cfg.validate();
  if (gamma <= 0.0) throw std::invalid_argument("select_subspace: gamma must be > 0");
  const int d = cfg.resolved_subspace_dim(n, k);
  SweepOutcome out = sweep_planes(estimator, n, d, gamma / 3.0, cfg.seed, kStageSelect,
                                  cfg.workers, cfg.plane_budget);
  SubspaceEstimate se{*out.best_plane, std::move(*out.best_params), 0.0, out.planes};
  se.est_radius = identifiability_radius(se.base);
  return se;
}

GmmParams estimate_base(const GmmLowDimEstimator& estimator, const CoordinatePlane& plane,
                        const ReductionConfig& cfg, double gamma) {
  if (gamma <= 0.0) throw std::invalid_argument("estimate_base: gamma must be > 0");
  LowDimTask task;
  task.plane = plane;
  task.precision = gamma / 9.0;
  task.task_seed = derive_seed(cfg.seed, kStageBase, plane_tag(plane));
  return estimator.estimate(task).params;
}

std::vector<int> match_components(const GmmParams& candidate, const CoordinatePlane& plane_t,
                                  const GmmParams& base, const CoordinatePlane& plane_s,
                                  double margin) {
  if (candidate.component_count() != base.component_count()) {
    throw std::invalid_argument("match_components: component counts differ");
  }
  const int k = base.component_count();

  // Positions of the S coordinates inside T.
  std::vector<int> pos(plane_s.indices.size());
  for (std::size_t a = 0; a < plane_s.indices.size(); ++a) {
    int p = plane_t.position_of(plane_s.indices[a]);
    if (p < 0) throw std::invalid_argument("match_components: S is not contained in T");
    pos[a] = p;
  }
  CoordinatePlane restriction;
  restriction.indices = pos;
  GmmParams restricted = project(candidate, restriction);

  std::vector<int> matching(static_cast<std::size_t>(k), -1);
  std::vector<int> hit(static_cast<std::size_t>(k), 0);
  for (int c = 0; c < k; ++c) {
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
    int arg = -1;
    for (int b = 0; b < k; ++b) {
      double dm = (restricted.component(c).mean - base.component(b).mean).norm();
      double dc = (restricted.component(c).cov - base.component(b).cov).norm();
      double dw = restricted.component(c).weight - base.component(b).weight;
      double d = std::sqrt(dm * dm + dc * dc + dw * dw);
      if (d < d1) {
        d2 = d1;
        d1 = d;
        arg = b;
      } else if (d < d2) {
        d2 = d;
      }
    }
    if (!(d1 < margin)) {
      throw MatchingAmbiguous("match_components: candidate component " + std::to_string(c) +
                              " has no base component within the margin");
    }
    if (k > 1 && !(d2 > margin)) {
      throw MatchingAmbiguous("match_components: candidate component " + std::to_string(c) +
                              " is within the margin of two base components");
    }
    matching[static_cast<std::size_t>(c)] = arg;
    ++hit[static_cast<std::size_t>(arg)];
  }
  for (int b = 0; b < k; ++b) {
    if (hit[static_cast<std::size_t>(b)] != 1) {
      throw MatchingAmbiguous("match_components: base component " + std::to_string(b) +
                              " matched " + std::to_string(hit[static_cast<std::size_t>(b)]) +
                              " candidates");
    }
  }
  return matching;
}

ExtensionRecord extend(const GmmLowDimEstimator& estimator, const CoordinatePlane& plane_s,
                       const GmmParams& base, int i, std::optional<int> j,
                       const ReductionConfig& cfg, double gamma) {
  if (gamma <= 0.0) throw std::invalid_argument("extend: gamma must be > 0");
  if (plane_s.contains(i) || (j && plane_s.contains(*j))) {
    throw std::invalid_argument("extend: target coordinates must lie outside S");
  }
  const int k = base.component_count();

  CoordinatePlane plane_t = plane_s;
  plane_t.indices.push_back(i);
  if (j) plane_t.indices.push_back(*j);
  std::sort(plane_t.indices.begin(), plane_t.indices.end());

  LowDimTask task;
  task.plane = plane_t;
  task.precision = gamma / 9.0;
  task.task_seed = derive_seed(cfg.seed, j ? kStagePair : kStageSingle, plane_tag(plane_t));
  GmmParams candidate = estimator.estimate(task).params;

  const double margin = cfg.match_margin > 0.0 ? cfg.match_margin : gamma / 3.0;
  std::vector<int> matching = match_components(candidate, plane_t, base, plane_s, margin);

  ExtensionRecord rec;
  rec.i = i;
  rec.matching = matching;
  const int pos_i = plane_t.position_of(i);
  if (j) {
    rec.kind = ExtensionRecord::Kind::Pair;
    rec.j = *j;
    const int pos_j = plane_t.position_of(*j);
    rec.cov_ij.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
      rec.cov_ij[static_cast<std::size_t>(matching[static_cast<std::size_t>(c)])] =
          candidate.component(c).cov(pos_i, pos_j);
    }
  } else {
    rec.kind = ExtensionRecord::Kind::Single;
    rec.mean_i.resize(static_cast<std::size_t>(k));
    rec.var_ii.resize(static_cast<std::size_t>(k));
    rec.cov_is.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
      const int b = matching[static_cast<std::size_t>(c)];
      rec.mean_i[static_cast<std::size_t>(b)] = candidate.component(c).mean[pos_i];
      rec.var_ii[static_cast<std::size_t>(b)] = candidate.component(c).cov(pos_i, pos_i);
      auto& row = rec.cov_is[static_cast<std::size_t>(b)];
      row.resize(plane_s.indices.size());
      for (std::size_t a = 0; a < plane_s.indices.size(); ++a) {
        row[a] = candidate.component(c).cov(pos_i, plane_t.position_of(plane_s.indices[a]));
      }
    }
  }
  return rec;
}

GmmParams assemble(const GmmParams& base, const CoordinatePlane& plane_s,
                   const std::vector<ExtensionRecord>& records, int n,
                   AssemblyDiagnostics* diag) {
  const int k = base.component_count();
  const int ds = plane_s.dim();
  plane_s.validate(n);
  if (base.dimension() != ds) {
    throw std::invalid_argument("assemble: base dimension differs from the plane size");
  }

  std::vector<Eigen::VectorXd> means(static_cast<std::size_t>(k), Eigen::VectorXd::Zero(n));
  std::vector<Eigen::MatrixXd> covs(static_cast<std::size_t>(k), Eigen::MatrixXd::Zero(n, n));
  std::vector<char> mean_set(static_cast<std::size_t>(n), 0);
  std::vector<char> cov_set(static_cast<std::size_t>(n) * n, 0);  // upper triangle flags
  std::size_t slots = 0;

  auto write_mean = [&](int t) {
    if (mean_set[static_cast<std::size_t>(t)]) {
      throw AssemblyIncomplete("assemble: mean coordinate " + std::to_string(t) +
                               " written twice");
    }
    mean_set[static_cast<std::size_t>(t)] = 1;
    ++slots;
  };
  auto write_cov = [&](int r, int c) {
    int lo = std::min(r, c), hi = std::max(r, c);
    char& flag = cov_set[static_cast<std::size_t>(lo) * n + hi];
    if (flag) {
      throw AssemblyIncomplete("assemble: covariance entry (" + std::to_string(lo) + "," +
                               std::to_string(hi) + ") written twice");
    }
    flag = 1;
    ++slots;
  };

  for (int a = 0; a < ds; ++a) {
    write_mean(plane_s.indices[a]);
    for (int c = 0; c < k; ++c) {
      means[static_cast<std::size_t>(c)][plane_s.indices[a]] = base.component(c).mean[a];
    }
    for (int b = a; b < ds; ++b) {
      write_cov(plane_s.indices[a], plane_s.indices[b]);
      for (int c = 0; c < k; ++c) {
        covs[static_cast<std::size_t>(c)](plane_s.indices[a], plane_s.indices[b]) =
            base.component(c).cov(a, b);
        covs[static_cast<std::size_t>(c)](plane_s.indices[b], plane_s.indices[a]) =
            base.component(c).cov(a, b);
      }
    }
  }

  for (const ExtensionRecord& rec : records) {
    if (rec.kind == ExtensionRecord::Kind::Single) {
      if (static_cast<int>(rec.mean_i.size()) != k ||
          static_cast<int>(rec.var_ii.size()) != k ||
          static_cast<int>(rec.cov_is.size()) != k) {
        throw AssemblyIncomplete("assemble: single record has wrong component count");
      }
      write_mean(rec.i);
      write_cov(rec.i, rec.i);
      for (int a = 0; a < ds; ++a) write_cov(rec.i, plane_s.indices[a]);
      for (int c = 0; c < k; ++c) {
        means[static_cast<std::size_t>(c)][rec.i] = rec.mean_i[static_cast<std::size_t>(c)];
        covs[static_cast<std::size_t>(c)](rec.i, rec.i) = rec.var_ii[static_cast<std::size_t>(c)];
        for (int a = 0; a < ds; ++a) {
          double v = rec.cov_is[static_cast<std::size_t>(c)][static_cast<std::size_t>(a)];
          covs[static_cast<std::size_t>(c)](rec.i, plane_s.indices[a]) = v;
          covs[static_cast<std::size_t>(c)](plane_s.indices[a], rec.i) = v;
        }
      }
    } else {
      if (static_cast<int>(rec.cov_ij.size()) != k) {
        throw AssemblyIncomplete("assemble: pair record has wrong component count");
      }
      write_cov(rec.i, rec.j);
      for (int c = 0; c < k; ++c) {
        covs[static_cast<std::size_t>(c)](rec.i, rec.j) = rec.cov_ij[static_cast<std::size_t>(c)];
        covs[static_cast<std::size_t>(c)](rec.j, rec.i) = rec.cov_ij[static_cast<std::size_t>(c)];
      }
    }
  }

  const std::size_t expected = static_cast<std::size_t>(n) + static_cast<std::size_t>(n) * (n + 1) / 2;
  if (slots != expected) {
    throw AssemblyIncomplete("assemble: covered " + std::to_string(slots) + " of " +
                             std::to_string(expected) + " parameter slots");
  }

  double max_clip = 0.0;
  std::vector<GmmComponent> comps(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    GmmComponent& out = comps[static_cast<std::size_t>(c)];
    out.mean = means[static_cast<std::size_t>(c)];
    Eigen::MatrixXd cov = covs[static_cast<std::size_t>(c)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < 0.0) {
      max_clip = std::max(max_clip, -min_eig);
      cov = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
            es.eigenvectors().transpose();
      cov = ((cov + cov.transpose()) / 2.0).eval();
    }
    out.cov = std::move(cov);
    out.weight = base.component(c).weight;
  }
  if (diag) {
    diag->max_clip = max_clip;
    diag->slots_written = slots * static_cast<std::size_t>(k) + static_cast<std::size_t>(k);
  }
  return GmmParams(std::move(comps));
}

std::pair<GmmParams, LearnReport> learn(const GmmLowDimEstimator& estimator, int n, int k,
                                        const ReductionConfig& cfg) {
  cfg.validate();
  if (n != estimator.ambient_dimension() || k != estimator.component_count()) {
    throw std::invalid_argument("learn: estimator shape differs from (n, k)");
  }
  const int d = cfg.resolved_subspace_dim(n, k);
  LearnReport report;
  auto t0 = std::chrono::steady_clock::now();

  double gamma = cfg.gamma;
  if (gamma <= 0.0) {
    // Pilot sweep at the detection precision to bound the radius from data.
    SweepOutcome pilot = sweep_planes(estimator, n, d, cfg.epsilon / (3.0 * n), cfg.seed,
                                      kStagePilot, cfg.workers, cfg.plane_budget);
    report.pilot_radius = pilot.best_radius;
    report.pilot_estimations = pilot.planes;
    if (pilot.best_radius <= 1e-12) {
      throw EstimationFailed(
          "learn: estimated identifiability radius is zero on every plane; "
          "the mixture is not identifiable at this precision");
    }
    gamma = std::min(pilot.best_radius / n, cfg.epsilon / n);
    report.timings.push_back({"pilot", elapsed_ms(t0)});
    t0 = std::chrono::steady_clock::now();
  }
  report.gamma = gamma;

  SubspaceEstimate sel = select_subspace(estimator, n, k, cfg, gamma);
  report.plane = sel.plane;
  report.plane_radius = sel.est_radius;
  report.step1_estimations = sel.planes_evaluated;
  report.timings.push_back({"select_subspace", elapsed_ms(t0)});
  t0 = std::chrono::steady_clock::now();

  GmmParams base = estimate_base(estimator, sel.plane, cfg, gamma);
  report.timings.push_back({"estimate_base", elapsed_ms(t0)});
  t0 = std::chrono::steady_clock::now();

  std::vector<int> outside;
  for (int i = 0; i < n; ++i) {
    if (!sel.plane.contains(i)) outside.push_back(i);
  }
  struct Target {
    int i;
    std::optional<int> j;
  };
  std::vector<Target> targets;
  for (int i : outside) targets.push_back({i, std::nullopt});
  for (std::size_t a = 0; a < outside.size(); ++a) {
    for (std::size_t b = a + 1; b < outside.size(); ++b) {
      targets.push_back({outside[a], outside[b]});
    }
  }

  std::vector<std::optional<ExtensionRecord>> records(targets.size());
  std::vector<std::exception_ptr> failures(targets.size());
  run_parallel(targets.size(), cfg.workers, [&](std::size_t idx) {
    try {
      records[idx] = extend(estimator, sel.plane, base, targets[idx].i, targets[idx].j, cfg, gamma);
    } catch (...) {
      failures[idx] = std::current_exception();
    }
  });
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  report.timings.push_back({"extend", elapsed_ms(t0)});
  t0 = std::chrono::steady_clock::now();

  std::vector<ExtensionRecord> recs;
  recs.reserve(records.size());
  for (auto& r : records) recs.push_back(std::move(*r));

  AssemblyDiagnostics diag;
  GmmParams result = assemble(base, sel.plane, recs, n, &diag);
  report.timings.push_back({"assemble", elapsed_ms(t0)});
  report.max_clip = diag.max_clip;
  report.clip_warning = diag.max_clip > cfg.epsilon / 10.0;
  report.estimation_count = 1 + recs.size();
  report.records = std::move(recs);
  return {std::move(result), std::move(report)};
}

DetectionReport detect_identifiability(const GmmLowDimEstimator& estimator, int n, int k,
                                       double epsilon, const ReductionConfig& cfg) {
  cfg.validate();
  if (epsilon <= 0.0) throw std::invalid_argument("detect_identifiability: epsilon must be > 0");
  const int d = cfg.resolved_subspace_dim(n, k);
  SweepOutcome out = sweep_planes(estimator, n, d, epsilon / (3.0 * n), cfg.seed, kStageDetect,
                                  cfg.workers, cfg.plane_budget);
  DetectionReport report;
  report.r_star = out.best_radius;
  report.cutoff = 2.0 * epsilon / (3.0 * n);
  report.below_epsilon = out.best_radius < report.cutoff;
  report.planes_evaluated = out.planes;
  return report;
}

nlohmann::json LearnReport::to_json(bool include_timings) const {
  nlohmann::json j;
  j["gamma"] = gamma;
  if (pilot_radius >= 0.0) j["pilot_radius"] = pilot_radius;
  j["plane"] = plane.indices;
  j["plane_radius"] = plane_radius;
  j["pilot_estimations"] = pilot_estimations;
  j["step1_estimations"] = step1_estimations;
  j["estimation_count"] = estimation_count;
  j["max_clip"] = max_clip;
  j["clip_warning"] = clip_warning;
  nlohmann::json jrecs = nlohmann::json::array();
  for (const ExtensionRecord& r : records) {
    nlohmann::json jr;
    jr["kind"] = r.kind == ExtensionRecord::Kind::Single ? "single" : "pair";
    jr["i"] = r.i;
    if (r.kind == ExtensionRecord::Kind::Pair) jr["j"] = r.j;
    jr["matching"] = r.matching;
    jrecs.push_back(std::move(jr));
  }
  j["extensions"] = std::move(jrecs);
  if (include_timings) {
    nlohmann::json jt = nlohmann::json::array();
    for (const StageTiming& t : timings) {
      jt.push_back({{"stage", t.stage}, {"wall_ms", t.wall_ms}});
    }
    j["timings"] = std::move(jt);
  }
  return j;
}

nlohmann::json DetectionReport::to_json() const {
  return nlohmann::json{{"below_epsilon", below_epsilon},
                        {"r_star", r_star},
                        {"cutoff", cutoff},
                        {"planes_evaluated", planes_evaluated}};
}

}  // namespace polymom
