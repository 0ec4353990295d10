#include "polymom/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "polymom/errors.hpp"

namespace polymom {

double q_distance(const MomentVector& a, const MomentVector& b) {
  if (a.values.size() != b.values.size()) {
    throw std::invalid_argument("q_distance: moment vectors have different lengths");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    double d = a.values[i] - b.values[i];
    acc += d * d;
  }
  return acc;
}

double ParamBox::ball_radius() const {
  double acc = 0.0;
  for (const auto& [lo, hi] : bounds) {
    acc += std::max(lo * lo, hi * hi);
  }
  return std::sqrt(acc);
}

void ParamBox::validate() const {
  if (bounds.empty()) throw std::invalid_argument("ParamBox: no bounds");
  for (const auto& [lo, hi] : bounds) {
    if (!(lo < hi)) throw std::invalid_argument("ParamBox: lower must be < upper per coordinate");
  }
}

void EstimationConfig::validate() const {
  if (epsilon <= 0.0) throw std::invalid_argument("EstimationConfig: epsilon must be > 0");
  if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("EstimationConfig: 0 < delta < 1");
  if (moment_count < 0) throw std::invalid_argument("EstimationConfig: moment_count must be >= 0");
  if (grid_step < 0.0) throw std::invalid_argument("EstimationConfig: grid_step must be >= 0");
  if (refine_levels < 0) throw std::invalid_argument("EstimationConfig: refine_levels must be >= 0");
  if (keep_top < 1) throw std::invalid_argument("EstimationConfig: keep_top must be >= 1");
}

int EstimationConfig::resolved_moment_count(int free_params) const {
  return moment_count > 0 ? moment_count : free_params + 1;
}

double EstimationConfig::resolved_step(int free_params) const {
  if (grid_step > 0.0) return grid_step;
  const int n = resolved_moment_count(free_params);
  return std::pow(epsilon, step_exponent) / (n * std::sqrt(static_cast<double>(free_params)));
}

ModelTemplate::ModelTemplate(ModelSpec prototype)
    : prototype_(std::move(prototype)), base_values_(prototype_.parameters()) {
  free_indices_.resize(static_cast<std::size_t>(base_values_.size()));
  for (std::size_t i = 0; i < free_indices_.size(); ++i) free_indices_[i] = static_cast<int>(i);
}

ModelTemplate::ModelTemplate(ModelSpec prototype, std::vector<int> free_indices)
    : prototype_(std::move(prototype)),
      base_values_(prototype_.parameters()),
      free_indices_(std::move(free_indices)) {
  int prev = -1;
  for (int i : free_indices_) {
    if (i <= prev || i >= base_values_.size()) {
      throw std::invalid_argument("ModelTemplate: free indices must be strictly increasing and in range");
    }
    prev = i;
  }
  if (free_indices_.empty()) throw std::invalid_argument("ModelTemplate: no free parameters");
}

Eigen::VectorXd ModelTemplate::embed(const Eigen::VectorXd& point) const {
  if (point.size() != free_count()) {
    throw std::invalid_argument("ModelTemplate: point dimension mismatch");
  }
  Eigen::VectorXd full = base_values_;
  for (int i = 0; i < point.size(); ++i) full[free_indices_[i]] = point[i];
  return full;
}

bool ModelTemplate::point_feasible(const Eigen::VectorXd& point) const {
  return prototype_.parameters_feasible(embed(point));
}

std::optional<ModelSpec> ModelTemplate::instantiate(const Eigen::VectorXd& point) const {
  Eigen::VectorXd full = embed(point);
  if (!prototype_.parameters_feasible(full)) return std::nullopt;
  return prototype_.with_parameters(full);
}

namespace {

struct Candidate {
  double q = std::numeric_limits<double>::infinity();
  Eigen::VectorXd point;
};

// Total order used everywhere a winner is reduced: (Q, point lexicographic).
bool better(const Candidate& a, const Candidate& b) {
  if (a.q != b.q) return a.q < b.q;
  if (a.point.size() != b.point.size()) return a.point.size() < b.point.size();
  for (int i = 0; i < a.point.size(); ++i) {
    if (a.point[i] != b.point[i]) return a.point[i] < b.point[i];
  }
  return false;
}

bool same_point(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return false;
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

struct ScanResult {
  Candidate best;
  std::vector<Candidate> top;  // sorted by `better`, up to keep_top entries
  std::size_t cells = 0;
};

void insert_top(std::vector<Candidate>& top, std::size_t keep, const Candidate& c) {
  if (top.size() >= keep && !better(c, top.back())) return;
  for (auto it = top.begin(); it != top.end(); ++it) {
    if (same_point(it->point, c.point)) return;  // sub-boxes overlap
  }
  auto pos = std::lower_bound(top.begin(), top.end(), c, better);
  top.insert(pos, c);
  if (top.size() > keep) top.pop_back();
}

// Exhaustive scan of one lattice. Bounds may be degenerate (lo == hi gives a
// single value per axis). The lattice is enumerated in row-major linear order
// with the last coordinate fastest, which coincides with lexicographic order
// of the coordinate tuples, so "first strict improvement" realizes the
// declared tie-break.
ScanResult scan_lattice(const MomentVector& target, const ModelTemplate& tmpl,
                        const std::vector<std::pair<double, double>>& bounds,
                        const std::function<bool(const Eigen::VectorXd&)>& extra_feasible,
                        double step, std::size_t keep_top, int workers) {
  const int dim = static_cast<int>(bounds.size());
  std::vector<std::size_t> counts(dim);
  long double total_ld = 1.0L;
  for (int i = 0; i < dim; ++i) {
    const auto& [lo, hi] = bounds[i];
    counts[i] = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    total_ld *= static_cast<long double>(counts[i]);
  }
  if (total_ld > 2e9L) {
    throw BudgetExceeded("grid_search: lattice of " + std::to_string(static_cast<double>(total_ld)) +
                             " cells is over the enumeration budget",
                         static_cast<double>(total_ld));
  }
  const std::size_t total = static_cast<std::size_t>(total_ld);
  const int n_moments = target.count();

  auto scan_range = [&](std::size_t begin, std::size_t end, ScanResult& out) {
    Eigen::VectorXd point(dim);
    for (std::size_t linear = begin; linear < end; ++linear) {
      std::size_t rest = linear;
      for (int i = dim - 1; i >= 0; --i) {
        std::size_t s = rest % counts[i];
        rest /= counts[i];
        point[i] = bounds[i].first + static_cast<double>(s) * step;
      }
      if (extra_feasible && !extra_feasible(point)) continue;
      auto spec = tmpl.instantiate(point);
      if (!spec) continue;
      ++out.cells;
      Candidate c{q_distance(target, moment_vector(*spec, n_moments)), point};
      if (better(c, out.best)) out.best = c;
      insert_top(out.top, keep_top, c);
    }
  };

  const std::size_t w = std::max<std::size_t>(
      1, std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), total));
  std::vector<ScanResult> partial(w);
  if (w == 1) {
    scan_range(0, total, partial[0]);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
      pool.emplace_back(scan_range, total * t / w, total * (t + 1) / w, std::ref(partial[t]));
    }
    for (auto& th : pool) th.join();
  }

  ScanResult merged;
  for (const ScanResult& p : partial) {
    merged.cells += p.cells;
    if (better(p.best, merged.best)) merged.best = p.best;
    for (const Candidate& c : p.top) insert_top(merged.top, keep_top, c);
  }
  return merged;
}

}  // namespace

Estimate grid_search(const MomentVector& target, const ModelTemplate& tmpl,
                     const ParamBox& box, const EstimationConfig& cfg) {
  cfg.validate();
  box.validate();
  if (box.dim() != tmpl.free_count()) {
    throw std::invalid_argument("grid_search: box dimension must equal the free parameter count");
  }
  if (cfg.moment_count > 0 && cfg.moment_count != target.count()) {
    throw std::invalid_argument("grid_search: target length differs from cfg.moment_count");
  }
  double step = cfg.resolved_step(tmpl.free_count());

  Estimate est;
  est.moments_used = target;

  ScanResult level = scan_lattice(target, tmpl, box.bounds, box.feasible, step,
                                  static_cast<std::size_t>(cfg.keep_top), cfg.workers);
  est.cells_evaluated = level.cells;
  Candidate best = level.best;
  est.level_best.push_back(best.q);

  std::vector<Candidate> frontier = level.top;
  for (int lvl = 0; lvl < cfg.refine_levels && !frontier.empty(); ++lvl) {
    const double sub_step = step / 2.0;
    std::vector<Candidate> next_frontier;
    std::size_t cells = 0;
    for (const Candidate& cell : frontier) {
      std::vector<std::pair<double, double>> sub(box.bounds.size());
      for (std::size_t i = 0; i < sub.size(); ++i) {
        sub[i].first = std::max(box.bounds[i].first, cell.point[static_cast<int>(i)] - step);
        sub[i].second = std::min(box.bounds[i].second, cell.point[static_cast<int>(i)] + step);
      }
      ScanResult r = scan_lattice(target, tmpl, sub, box.feasible, sub_step,
                                  static_cast<std::size_t>(cfg.keep_top), cfg.workers);
      cells += r.cells;
      if (better(r.best, best)) best = r.best;
      for (const Candidate& c : r.top) {
        insert_top(next_frontier, static_cast<std::size_t>(cfg.keep_top), c);
      }
    }
    est.cells_evaluated += cells;
    est.level_best.push_back(best.q);
    frontier = std::move(next_frontier);
    step = sub_step;
  }

  if (!std::isfinite(best.q)) {
    throw InfeasibleBox("grid_search: no feasible grid point in the box");
  }
  est.params = best.point;
  est.residual = best.q;
  return est;
}

Dataset FixedSampleSource::draw(std::size_t m, std::uint64_t /*seed*/) const {
  Dataset out = data_;
  const std::size_t keep = std::min(m, data_.rows());
  out.data.resize(keep * static_cast<std::size_t>(data_.dim));
  return out;
}

Estimate estimate(const SampleSource& source, const ModelTemplate& tmpl,
                  const ParamBox& box, const EstimationConfig& cfg) {
  cfg.validate();
  box.validate();

  SamplePlan plan;
  plan.moment_count = cfg.resolved_moment_count(tmpl.free_count());
  plan.dim = source.dimension();
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
    throw BudgetExceeded("estimate: required sample count " + std::to_string(required) +
                             " exceeds the cap of " + std::to_string(cfg.sample_cap) +
                             " in strict mode",
                         static_cast<double>(required));
  }
  const std::size_t m = std::min(required, cfg.sample_cap);

  Dataset data = source.draw(m, cfg.seed);
  MomentVector target = empirical_moment_vector(data, plan.moment_count);
  Estimate est = grid_search(target, tmpl, box, cfg);
  est.samples_used = data.rows();
  return est;
}

}  // namespace polymom
