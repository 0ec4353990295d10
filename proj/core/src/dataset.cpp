#include "polymom/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "polymom/errors.hpp"
#include "polymom/sampling.hpp"
#include "polymom/seeding.hpp"

namespace polymom {

namespace {

constexpr std::size_t kChunkRows = 8192;
constexpr std::uint64_t kDrawStream = 0xD5A7A;

// Pre-compiled sampler tree: covariance factors and reparameterized children
// are resolved once per draw call instead of once per row.
struct RowSampler {
  virtual ~RowSampler() = default;
  virtual void draw(Rng& rng, std::span<double> out) const = 0;
};

std::unique_ptr<RowSampler> compile_sampler(const ModelSpec& model);

struct UniSampler final : RowSampler {
  Family family;
  std::vector<double> params;
  void draw(Rng& rng, std::span<double> out) const override {
    out[0] = sample_univariate(family, params, rng);
  }
};

struct GaussSampler final : RowSampler {
  Eigen::VectorXd mean;
  Eigen::MatrixXd factor;  // cov = factor * factor^T
  void draw(Rng& rng, std::span<double> out) const override {
    const int d = static_cast<int>(mean.size());
    Eigen::VectorXd z(d);
    for (int i = 0; i < d; ++i) z[i] = rng.normal();
    Eigen::VectorXd x = mean + factor * z;
    for (int i = 0; i < d; ++i) out[i] = x[i];
  }
};

struct MixtureSampler final : RowSampler {
  std::vector<double> weights;
  std::vector<std::unique_ptr<RowSampler>> children;
  void draw(Rng& rng, std::span<double> out) const override {
    double u = rng.uniform01();
    double cdf = 0.0;
    std::size_t pick = children.size() - 1;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      cdf += weights[j];
      if (u <= cdf) {
        pick = j;
        break;
      }
    }
    children[pick]->draw(rng, out);
  }
};

struct ProductSampler final : RowSampler {
  std::vector<std::unique_ptr<RowSampler>> children;
  std::vector<std::size_t> dims;
  void draw(Rng& rng, std::span<double> out) const override {
    std::size_t offset = 0;
    for (std::size_t j = 0; j < children.size(); ++j) {
      children[j]->draw(rng, out.subspan(offset, dims[j]));
      offset += dims[j];
    }
  }
};

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * clamped.cwiseSqrt().asDiagonal();
}

std::unique_ptr<RowSampler> compile_sampler(const ModelSpec& model) {
  return std::visit(
      [&](const auto& node) -> std::unique_ptr<RowSampler> {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ModelSpec::UnivariateLeaf>) {
          auto s = std::make_unique<UniSampler>();
          s->family = node.family;
          s->params = node.params;
          return s;
        } else if constexpr (std::is_same_v<T, ModelSpec::GaussianLeaf>) {
          auto s = std::make_unique<GaussSampler>();
          s->mean = node.mean;
          s->factor = psd_factor(node.cov);
          return s;
        } else if constexpr (std::is_same_v<T, ModelSpec::MixtureNode>) {
          auto s = std::make_unique<MixtureSampler>();
          s->weights = node.weights;
          for (const ModelSpec& c : node.children) s->children.push_back(compile_sampler(c));
          return s;
        } else if constexpr (std::is_same_v<T, ModelSpec::ProductNode>) {
          auto s = std::make_unique<ProductSampler>();
          for (const ModelSpec& c : node.children) {
            s->dims.push_back(static_cast<std::size_t>(c.dimension()));
            s->children.push_back(compile_sampler(c));
          }
          return s;
        } else {
          const ModelSpec& child = node.child.front();
          Eigen::VectorXd transformed = node.matrix * child.parameters();
          return compile_sampler(child.with_parameters(transformed));
        }
      },
      model.node());
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

void Dataset::to_csv(std::ostream& out) const {
  char buf[32];
  const std::size_t m = rows();
  for (std::size_t r = 0; r < m; ++r) {
    for (int c = 0; c < dim; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", at(r, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

void Dataset::to_csv_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  to_csv(out);
}

Dataset Dataset::from_csv(std::istream& in) {
  Dataset ds;
  ds.dim = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int cols = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t next = line.find(',', pos);
      std::string cell = line.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      try {
        ds.data.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::invalid_argument("csv: cannot parse value \"" + cell + "\"");
      }
      ++cols;
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (ds.dim == 0) {
      ds.dim = cols;
    } else if (cols != ds.dim) {
      throw std::invalid_argument("csv: rows have inconsistent column counts");
    }
  }
  if (ds.data.empty()) throw std::invalid_argument("csv: no samples");
  return ds;
}

Dataset Dataset::from_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return from_csv(in);
}

Dataset draw_samples(const ModelSpec& model, std::size_t m, std::uint64_t seed,
                     int workers) {
  if (m < 1) throw std::invalid_argument("draw_samples: need at least one sample");
  if (workers < 1) workers = 1;

  Dataset ds;
  ds.dim = model.dimension();
  ds.source_seed = seed;
  ds.model_hash = fnv1a(model_to_json(model).dump());
  ds.data.resize(m * static_cast<std::size_t>(ds.dim));

  const std::size_t chunks = (m + kChunkRows - 1) / kChunkRows;
  auto run_chunks = [&](std::size_t chunk_begin, std::size_t chunk_end) {
    std::unique_ptr<RowSampler> sampler = compile_sampler(model);
    for (std::size_t c = chunk_begin; c < chunk_end; ++c) {
      Rng rng(derive_seed(seed, kDrawStream, c));
      const std::size_t row_begin = c * kChunkRows;
      const std::size_t row_end = std::min(m, row_begin + kChunkRows);
      for (std::size_t r = row_begin; r < row_end; ++r) {
        sampler->draw(rng, std::span<double>(&ds.data[r * ds.dim], ds.dim));
      }
    }
  };

  if (workers == 1 || chunks == 1) {
    run_chunks(0, chunks);
  } else {
    const std::size_t w = std::min<std::size_t>(workers, chunks);
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
      const std::size_t begin = chunks * t / w;
      const std::size_t end = chunks * (t + 1) / w;
      pool.emplace_back(run_chunks, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  return ds;
}

MomentVector empirical_moment_vector(const Dataset& data, int count) {
  if (count < 1) throw std::invalid_argument("empirical_moment_vector: count must be >= 1");
  if (data.rows() == 0) throw std::invalid_argument("empirical_moment_vector: empty dataset");

  const auto indices = enumerate_indices(data.dim, count);
  int max_exp = 0;
  for (const MultiIndex& idx : indices) {
    for (int e : idx) max_exp = std::max(max_exp, e);
  }

  // Neumaier-compensated accumulators.
  std::vector<double> sum(indices.size(), 0.0), comp(indices.size(), 0.0);
  std::vector<double> powers(static_cast<std::size_t>(data.dim) * (max_exp + 1));
  const std::size_t m = data.rows();
  for (std::size_t r = 0; r < m; ++r) {
    for (int c = 0; c < data.dim; ++c) {
      double* p = &powers[static_cast<std::size_t>(c) * (max_exp + 1)];
      p[0] = 1.0;
      const double x = data.at(r, c);
      for (int e = 1; e <= max_exp; ++e) p[e] = p[e - 1] * x;
    }
    for (std::size_t j = 0; j < indices.size(); ++j) {
      double term = 1.0;
      const MultiIndex& idx = indices[j];
      for (int c = 0; c < data.dim; ++c) {
        term *= powers[static_cast<std::size_t>(c) * (max_exp + 1) + idx[c]];
      }
      double t = sum[j] + term;
      if (std::abs(sum[j]) >= std::abs(term)) {
        comp[j] += (sum[j] - t) + term;
      } else {
        comp[j] += (term - t) + sum[j];
      }
      sum[j] = t;
    }
  }

  MomentVector mv;
  mv.dim = data.dim;
  mv.values.resize(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    mv.values[j] = (sum[j] + comp[j]) / static_cast<double>(m);
  }
  return mv;
}

std::size_t required_samples(const SamplePlan& plan, std::size_t hard_cap) {
  if (plan.moment_count < 1 || plan.dim < 1) {
    throw std::invalid_argument("required_samples: N and l must be >= 1");
  }
  if (plan.epsilon <= 0.0 || plan.delta <= 0.0 || plan.delta >= 1.0 ||
      plan.ball_radius <= 0.0 || plan.constant_c <= 0.0) {
    throw std::invalid_argument("required_samples: need eps > 0, 0 < delta < 1, B > 0, C > 0");
  }
  const int max_deg = (plan.moment_count + plan.dim - 1) / plan.dim;  // ceil(N/l)
  long double bound = static_cast<long double>(plan.constant_c) * plan.moment_count *
                      std::pow(static_cast<long double>(plan.ball_radius), 2.0L * max_deg) /
                      (static_cast<long double>(plan.epsilon) * plan.epsilon * plan.delta);
  // Snap values a rounding error away from an integer before taking the
  // ceiling; the bound is meant in exact arithmetic.
  long double nearest = std::floor(bound + 0.5L);
  if (std::abs(bound - nearest) <= 1e-9L * std::max(1.0L, nearest)) bound = nearest;
  long double result = std::ceil(bound) + 1.0L;
  if (result > static_cast<long double>(hard_cap)) {
    throw BudgetExceeded("required_samples: " + std::to_string(static_cast<double>(result)) +
                             " samples exceed the cap of " + std::to_string(hard_cap),
                         static_cast<double>(result));
  }
  return static_cast<std::size_t>(result);
}

double calibrate_bound_constant(const ModelSpec& model, const SamplePlan& plan,
                                std::size_t pilot_samples, std::uint64_t seed) {
  if (pilot_samples < 2) throw std::invalid_argument("calibrate: need at least two pilot samples");
  Dataset pilot = draw_samples(model, pilot_samples, seed);
  MomentVector first = empirical_moment_vector(pilot, plan.moment_count);

  // Var(f_i) = E f_i^2 - (E f_i)^2; E f_i^2 is the moment at the doubled index.
  const auto indices = enumerate_indices(pilot.dim, plan.moment_count);
  double var_sum = 0.0;
  for (std::size_t j = 0; j < indices.size(); ++j) {
    MultiIndex doubled = indices[j];
    for (int& e : doubled) e *= 2;
    double sq = 0.0, comp = 0.0;
    for (std::size_t r = 0; r < pilot.rows(); ++r) {
      double term = 1.0;
      for (int c = 0; c < pilot.dim; ++c) term *= std::pow(pilot.at(r, c), doubled[c]);
      double t = sq + term;
      if (std::abs(sq) >= std::abs(term)) {
        comp += (sq - t) + term;
      } else {
        comp += (term - t) + sq;
      }
      sq = t;
    }
    sq = (sq + comp) / static_cast<double>(pilot.rows());
    var_sum += std::max(0.0, sq - first.values[j] * first.values[j]);
  }

  const int max_deg = (plan.moment_count + plan.dim - 1) / plan.dim;
  const double scale = plan.moment_count * std::pow(plan.ball_radius, 2.0 * max_deg);
  return var_sum / scale;
}

}  // namespace polymom
