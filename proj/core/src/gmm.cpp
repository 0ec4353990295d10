#include "polymom/gmm.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <stdexcept>

#include "polymom/errors.hpp"

namespace polymom {

namespace {
constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdTol = -1e-10;
constexpr double kWeightTol = 1e-12;

double pair_cost(const GmmComponent& a, const GmmComponent& b) {
  double dm = (a.mean - b.mean).squaredNorm();
  double dc = (a.cov - b.cov).squaredNorm();
  double dw = a.weight - b.weight;
  return dm + dc + dw * dw;
}

// C(n, d) capped; returns cap + 1 once exceeded.
std::size_t binomial_capped(int n, int d, std::size_t cap) {
  if (d < 0 || d > n) return 0;
  long double acc = 1.0L;
  for (int i = 1; i <= d; ++i) {
    acc = acc * (n - d + i) / i;
    if (acc > static_cast<long double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(acc + 0.5L);
}

// Jonker-Volgenant style shortest augmenting path assignment, O(k^3).
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j]) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

void CoordinatePlane::validate(int ambient_dim) const {
  int prev = -1;
  for (int i : indices) {
    if (i <= prev) throw std::invalid_argument("CoordinatePlane: indices must be strictly increasing");
    if (i < 0 || i >= ambient_dim) {
      throw std::invalid_argument("CoordinatePlane: index " + std::to_string(i) +
                                  " out of range for dimension " + std::to_string(ambient_dim));
    }
    prev = i;
  }
}

CoordinatePlane CoordinatePlane::full(int ambient_dim) {
  CoordinatePlane p;
  p.indices.resize(static_cast<std::size_t>(ambient_dim));
  std::iota(p.indices.begin(), p.indices.end(), 0);
  return p;
}

bool CoordinatePlane::contains(int index) const {
  return std::binary_search(indices.begin(), indices.end(), index);
}

int CoordinatePlane::position_of(int index) const {
  auto it = std::lower_bound(indices.begin(), indices.end(), index);
  if (it == indices.end() || *it != index) return -1;
  return static_cast<int>(it - indices.begin());
}

GmmParams::GmmParams(std::vector<GmmComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("GmmParams: needs at least one component");
  const auto n = components_.front().mean.size();
  double weight_sum = 0.0;
  for (const GmmComponent& c : components_) {
    if (c.mean.size() != n || c.cov.rows() != n || c.cov.cols() != n) {
      throw std::invalid_argument("GmmParams: component shape mismatch");
    }
    if ((c.cov - c.cov.transpose()).norm() > kSymmetryTol) {
      throw std::domain_error("GmmParams: covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.cov, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < kPsdTol) {
      throw std::domain_error("GmmParams: covariance is not positive semi-definite");
    }
    if (c.weight < 0.0) throw std::domain_error("GmmParams: weights must be non-negative");
    weight_sum += c.weight;
  }
  if (std::abs(weight_sum - 1.0) > kWeightTol) {
    throw std::domain_error("GmmParams: weights must sum to 1 within 1e-12");
  }
}

ModelSpec GmmParams::to_model() const {
  std::vector<ModelSpec> children;
  std::vector<double> weights;
  children.reserve(components_.size());
  for (const GmmComponent& c : components_) {
    // Clip the tolerated slightly-negative eigenvalues so the sampler's
    // factorization always succeeds.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.cov);
    Eigen::MatrixXd cov = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                          es.eigenvectors().transpose();
    cov = ((cov + cov.transpose()) / 2.0).eval();
    children.push_back(ModelSpec::mv_gaussian(c.mean, std::move(cov)));
    weights.push_back(c.weight);
  }
  // Renormalize away the 1e-12 tolerance so the mixture factory is satisfied.
  double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= sum;
  return ModelSpec::mixture(std::move(weights), std::move(children));
}

nlohmann::json GmmParams::to_json() const {
  nlohmann::json comps = nlohmann::json::array();
  for (const GmmComponent& c : components_) {
    nlohmann::json jc;
    jc["mean"] = std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size());
    std::vector<double> cov_flat;
    cov_flat.reserve(static_cast<std::size_t>(c.cov.size()));
    for (int r = 0; r < c.cov.rows(); ++r)
      for (int col = 0; col < c.cov.cols(); ++col) cov_flat.push_back(c.cov(r, col));
    jc["cov"] = std::move(cov_flat);
    jc["weight"] = c.weight;
    comps.push_back(std::move(jc));
  }
  return nlohmann::json{{"components", std::move(comps)}};
}

GmmParams GmmParams::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("components") || !j["components"].is_array()) {
    throw std::invalid_argument("mixture params: expected {\"components\": [...]}");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "components") {
      throw std::invalid_argument("mixture params: unknown field \"" + it.key() + "\"");
    }
  }
  std::vector<GmmComponent> comps;
  for (const nlohmann::json& jc : j["components"]) {
    for (auto it = jc.begin(); it != jc.end(); ++it) {
      if (it.key() != "mean" && it.key() != "cov" && it.key() != "weight") {
        throw std::invalid_argument("mixture component: unknown field \"" + it.key() + "\"");
      }
    }
    GmmComponent c;
    auto mean = jc.at("mean").get<std::vector<double>>();
    auto cov = jc.at("cov").get<std::vector<double>>();
    const int n = static_cast<int>(mean.size());
    if (cov.size() != static_cast<std::size_t>(n) * n) {
      throw std::invalid_argument("mixture component: cov must be a row-major n*n array");
    }
    c.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), n);
    c.cov = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        cov.data(), n, n);
    c.weight = jc.at("weight").get<double>();
    comps.push_back(std::move(c));
  }
  return GmmParams(std::move(comps));
}

Eigen::VectorXd flatten(const GmmParams& params) {
  const int n = params.dimension();
  const int k = params.component_count();
  const int block = n + n * n + 1;
  Eigen::VectorXd out(static_cast<Eigen::Index>(k) * block);
  Eigen::Index at = 0;
  for (const GmmComponent& c : params.components()) {
    out.segment(at, n) = c.mean;
    at += n;
    for (int r = 0; r < n; ++r)
      for (int col = 0; col < n; ++col) out[at++] = c.cov(r, col);
    out[at++] = c.weight;
  }
  return out;
}

GmmParams unflatten(const Eigen::VectorXd& flat, int n, int k) {
  const int block = n + n * n + 1;
  if (flat.size() != static_cast<Eigen::Index>(k) * block) {
    throw std::invalid_argument("unflatten: expected length k(n + n^2 + 1)");
  }
  std::vector<GmmComponent> comps(static_cast<std::size_t>(k));
  Eigen::Index at = 0;
  for (GmmComponent& c : comps) {
    c.mean = flat.segment(at, n);
    at += n;
    Eigen::MatrixXd raw(n, n);
    for (int r = 0; r < n; ++r)
      for (int col = 0; col < n; ++col) raw(r, col) = flat[at++];
    c.cov = (raw + raw.transpose()) / 2.0;
    c.weight = flat[at++];
  }
  return GmmParams(std::move(comps));
}

double identifiability_radius(const GmmParams& params) {
  const auto& comps = params.components();
  const int k = params.component_count();
  if (k == 1) return comps[0].weight;

  double min_pair = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      double d = (comps[i].mean - comps[j].mean).squaredNorm() +
                 (comps[i].cov - comps[j].cov).squaredNorm();
      min_pair = std::min(min_pair, d);
    }
  }
  double min_w = std::numeric_limits<double>::infinity();
  for (const GmmComponent& c : comps) min_w = std::min(min_w, c.weight * c.weight);
  return std::sqrt(std::min(0.25 * min_pair, min_w));
}

GmmParams project(const GmmParams& params, const CoordinatePlane& plane) {
  plane.validate(params.dimension());
  if (plane.indices.empty()) throw std::invalid_argument("project: empty plane");
  const int d = plane.dim();
  std::vector<GmmComponent> comps;
  comps.reserve(static_cast<std::size_t>(params.component_count()));
  for (const GmmComponent& c : params.components()) {
    GmmComponent pc;
    pc.mean.resize(d);
    pc.cov.resize(d, d);
    for (int a = 0; a < d; ++a) {
      pc.mean[a] = c.mean[plane.indices[a]];
      for (int b = 0; b < d; ++b) pc.cov(a, b) = c.cov(plane.indices[a], plane.indices[b]);
    }
    pc.weight = c.weight;
    comps.push_back(std::move(pc));
  }
  return GmmParams(std::move(comps));
}

MatchResult matched_distance(const GmmParams& a, const GmmParams& b) {
  if (a.dimension() != b.dimension() || a.component_count() != b.component_count()) {
    throw std::invalid_argument("matched_distance: shape mismatch");
  }
  const int k = a.component_count();
  Eigen::MatrixXd cost(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) cost(i, j) = pair_cost(a.component(i), b.component(j));

  MatchResult result;
  if (k <= 8) {
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_perm = perm;
    do {
      double total = 0.0;
      for (int i = 0; i < k; ++i) total += cost(i, perm[static_cast<std::size_t>(i)]);
      if (total < best) {  // lexicographic enumeration: first strict win is the smallest permutation
        best = total;
        best_perm = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    result.distance = std::sqrt(best);
    result.permutation = std::move(best_perm);
  } else {
    result.permutation = solve_assignment(cost);
    double total = 0.0;
    for (int i = 0; i < k; ++i) total += cost(i, result.permutation[static_cast<std::size_t>(i)]);
    result.distance = std::sqrt(total);
  }
  return result;
}

double component_separation(const GmmParams& params) {
  const int k = params.component_count();
  if (k < 2) throw std::domain_error("component_separation: undefined for a single component");
  double min_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      min_d = std::min(min_d, pair_cost(params.component(i), params.component(j)));
    }
  }
  return std::sqrt(min_d);
}

std::pair<CoordinatePlane, double> best_plane_brute_force(const GmmParams& params, int d,
                                                          std::size_t plane_budget) {
  const int n = params.dimension();
  if (d < 1 || d > n) throw std::invalid_argument("best_plane_brute_force: need 1 <= d <= n");
  const std::size_t planes = binomial_capped(n, d, plane_budget);
  if (planes > plane_budget) {
    throw BudgetExceeded("best_plane_brute_force: C(n, d) exceeds the plane budget",
                         static_cast<double>(planes));
  }

  CoordinatePlane plane;
  plane.indices.resize(static_cast<std::size_t>(d));
  std::iota(plane.indices.begin(), plane.indices.end(), 0);

  CoordinatePlane best_plane = plane;
  double best_radius = -1.0;
  for (;;) {
    double r = identifiability_radius(project(params, plane));
    if (r > best_radius) {  // lexicographic enumeration: first strict win is the smallest plane
      best_radius = r;
      best_plane = plane;
    }
    // next d-combination of {0..n-1} in lexicographic order
    int i = d - 1;
    while (i >= 0 && plane.indices[static_cast<std::size_t>(i)] == n - d + i) --i;
    if (i < 0) break;
    ++plane.indices[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < d; ++j) {
      plane.indices[static_cast<std::size_t>(j)] = plane.indices[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return {best_plane, best_radius};
}

CoordinatePlane greedy_separating_plane(const std::vector<Eigen::VectorXd>& means, int dim) {
  std::vector<char> chosen(static_cast<std::size_t>(dim), 0);
  for (std::size_t i = 0; i < means.size(); ++i) {
    for (std::size_t j = i + 1; j < means.size(); ++j) {
      Eigen::VectorXd diff = means[i] - means[j];
      int arg = -1;
      double best = 0.0;
      for (int t = 0; t < dim; ++t) {
        double v = std::abs(diff[t]);
        if (v > best) {
          best = v;
          arg = t;
        }
      }
      if (arg >= 0) chosen[static_cast<std::size_t>(arg)] = 1;
    }
  }
  CoordinatePlane plane;
  for (int t = 0; t < dim; ++t) {
    if (chosen[static_cast<std::size_t>(t)]) plane.indices.push_back(t);
  }
  return plane;
}

CoordinatePlane greedy_separating_plane(const std::vector<Eigen::MatrixXd>& covs, int dim) {
  std::vector<char> chosen(static_cast<std::size_t>(dim), 0);
  for (std::size_t i = 0; i < covs.size(); ++i) {
    for (std::size_t j = i + 1; j < covs.size(); ++j) {
      Eigen::MatrixXd diff = covs[i] - covs[j];
      int arg_p = -1, arg_q = -1;
      double best = 0.0;
      for (int p = 0; p < dim; ++p) {
        for (int q = 0; q < dim; ++q) {
          double v = std::abs(diff(p, q));
          if (v > best) {
            best = v;
            arg_p = p;
            arg_q = q;
          }
        }
      }
      if (arg_p >= 0) {
        chosen[static_cast<std::size_t>(arg_p)] = 1;
        chosen[static_cast<std::size_t>(arg_q)] = 1;
      }
    }
  }
  CoordinatePlane plane;
  for (int t = 0; t < dim; ++t) {
    if (chosen[static_cast<std::size_t>(t)]) plane.indices.push_back(t);
  }
  return plane;
}

}  // namespace polymom
