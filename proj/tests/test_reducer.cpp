#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "polymom/errors.hpp"
#include "polymom/low_dim.hpp"
#include "polymom/reducer.hpp"
#include "polymom/sampling.hpp"
#include "support/oracles.hpp"

using namespace polymom;

namespace {

GmmParams two_close_components_on(int n, const std::vector<int>& differing) {
  // Components identical except for small mean offsets in the given
  // coordinates, so the pair term is the binding minimum of the radius.
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(n), m2 = Eigen::VectorXd::Zero(n);
  double v = 0.3;
  for (int i : differing) {
    m2[i] = v;
    v += 0.1;
  }
  std::vector<GmmComponent> comps(2);
  comps[0] = {m1, Eigen::MatrixXd::Identity(n, n), 0.5};
  comps[1] = {m2, Eigen::MatrixXd::Identity(n, n), 0.5};
  return GmmParams(std::move(comps));
}

GmmParams duplicated_components(int n) {
  std::vector<GmmComponent> comps(2);
  comps[0] = {Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n), 0.4};
  comps[1] = {Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n), 0.6};
  return GmmParams(std::move(comps));
}

}  // namespace

TEST_CASE("oracle without shuffling returns the exact projection") {
  Rng rng(50);
  GmmParams truth = oracles::random_gmm(rng, 4, 2);
  OracleEstimator oracle(truth, 0.0, /*shuffle=*/false);
  LowDimTask task{CoordinatePlane{{1, 3}}, 0.01, 7};
  LowDimResult res = oracle.estimate(task);
  GmmParams expected = project(truth, task.plane);
  CHECK((flatten(res.params) - flatten(expected)).norm() == 0.0);
}

TEST_CASE("select_subspace finds the informative plane") {
  GmmParams truth = two_close_components_on(4, {0, 1});
  OracleEstimator oracle(truth, 0.0);
  ReductionConfig cfg;
  cfg.subspace_dim = 2;
  cfg.seed = 99;
  SubspaceEstimate sel = select_subspace(oracle, 4, 2, cfg, 0.05);
  CHECK(sel.plane.indices == std::vector<int>{0, 1});
  CHECK(sel.planes_evaluated == 6);
  CHECK(sel.est_radius == doctest::Approx(identifiability_radius(project(truth, sel.plane))));
}

TEST_CASE("exchangeable coordinates fall back to the lexicographically first plane") {
  Eigen::VectorXd m = Eigen::VectorXd::Constant(3, 0.4);
  std::vector<GmmComponent> comps(2);
  comps[0] = {m, Eigen::MatrixXd::Identity(3, 3), 0.5};
  comps[1] = {-m, Eigen::MatrixXd::Identity(3, 3), 0.5};
  GmmParams truth{std::move(comps)};
  OracleEstimator oracle(truth, 0.0);
  ReductionConfig cfg;
  cfg.subspace_dim = 2;
  SubspaceEstimate sel = select_subspace(oracle, 3, 2, cfg, 0.05);
  CHECK(sel.plane.indices == std::vector<int>{0, 1});
}

TEST_CASE("step 1 soundness: selected radius matches the brute-force best") {
  Rng rng(51);
  for (int t = 0; t < 20; ++t) {
    GmmParams truth = oracles::random_gmm(rng, 5, 2);
    OracleEstimator oracle(truth, 0.0);
    ReductionConfig cfg;
    cfg.subspace_dim = 3;
    cfg.seed = 100 + static_cast<std::uint64_t>(t);
    double gamma = 0.05;
    SubspaceEstimate sel = select_subspace(oracle, 5, 2, cfg, gamma);
    auto [best_plane, best_radius] = best_plane_brute_force(truth, 3);
    CHECK(std::abs(sel.est_radius - best_radius) <= gamma / 3.0 + 1e-12);
  }
}

TEST_CASE("matching returns the permutation and survives small noise") {
  Rng rng(52);
  for (int t = 0; t < 100; ++t) {
    GmmParams truth = oracles::random_gmm(rng, 4, 2);
    CoordinatePlane s{{0, 2}};
    CoordinatePlane tt{{0, 2, 3}};
    GmmParams base = project(truth, s);

    OracleEstimator noisy(truth, 1e-6);
    LowDimTask task{tt, 0.01, 1234 + static_cast<std::uint64_t>(t)};
    GmmParams candidate = noisy.estimate(task).params;

    std::vector<int> perm = match_components(candidate, tt, base, s, 0.05);
    // Verify the permutation by distance: matched pairs must be close.
    GmmParams restricted = project(candidate, CoordinatePlane{{0, 1}});
    for (int c = 0; c < 2; ++c) {
      const auto& rc = restricted.component(c);
      const auto& bc = base.component(perm[static_cast<std::size_t>(c)]);
      double d = std::sqrt((rc.mean - bc.mean).squaredNorm() + (rc.cov - bc.cov).squaredNorm() +
                           (rc.weight - bc.weight) * (rc.weight - bc.weight));
      CHECK(d < 0.05);
    }
  }
}

TEST_CASE("matching two equal base components is ambiguous") {
  GmmParams truth = duplicated_components(3);
  CoordinatePlane s{{0, 1}};
  GmmParams base = project(truth, s);
  OracleEstimator oracle(truth, 0.0);
  LowDimTask task{CoordinatePlane{{0, 1, 2}}, 0.01, 5};
  GmmParams candidate = oracle.estimate(task).params;
  CHECK_THROWS_AS(match_components(candidate, task.plane, base, s, 0.01), MatchingAmbiguous);
}

TEST_CASE("extension emits the true entries with a zero-noise oracle") {
  Rng rng(53);
  GmmParams truth = oracles::random_gmm(rng, 5, 2);
  CoordinatePlane s{{0, 3}};
  GmmParams base = project(truth, s);
  OracleEstimator oracle(truth, 0.0);
  ReductionConfig cfg;
  cfg.seed = 7;

  ExtensionRecord rec = extend(oracle, s, base, 2, std::nullopt, cfg, 0.1);
  REQUIRE(rec.kind == ExtensionRecord::Kind::Single);
  for (int b = 0; b < 2; ++b) {
    CHECK(rec.mean_i[static_cast<std::size_t>(b)] ==
          doctest::Approx(truth.component(b).mean[2]).epsilon(1e-14));
    CHECK(rec.var_ii[static_cast<std::size_t>(b)] ==
          doctest::Approx(truth.component(b).cov(2, 2)).epsilon(1e-14));
    CHECK(rec.cov_is[static_cast<std::size_t>(b)][0] ==
          doctest::Approx(truth.component(b).cov(2, 0)).epsilon(1e-14));
    CHECK(rec.cov_is[static_cast<std::size_t>(b)][1] ==
          doctest::Approx(truth.component(b).cov(2, 3)).epsilon(1e-14));
  }

  ExtensionRecord pair = extend(oracle, s, base, 1, 4, cfg, 0.1);
  REQUIRE(pair.kind == ExtensionRecord::Kind::Pair);
  for (int b = 0; b < 2; ++b) {
    CHECK(pair.cov_ij[static_cast<std::size_t>(b)] ==
          doctest::Approx(truth.component(b).cov(1, 4)).epsilon(1e-14));
  }

  CHECK_THROWS_AS(extend(oracle, s, base, 0, std::nullopt, cfg, 0.1), std::invalid_argument);
}

TEST_CASE("extension on a radius-zero base is ambiguous") {
  GmmParams truth = duplicated_components(4);
  CoordinatePlane s{{0, 1}};
  GmmParams base = project(truth, s);
  OracleEstimator oracle(truth, 0.0);
  ReductionConfig cfg;
  CHECK_THROWS_AS(extend(oracle, s, base, 2, std::nullopt, cfg, 0.1), MatchingAmbiguous);
}

TEST_CASE("radius never drops when a coordinate is added to the plane") {
  Rng rng(54);
  for (int t = 0; t < 200; ++t) {
    GmmParams truth = oracles::random_gmm(rng, 5, 2);
    CoordinatePlane s{{1, 2}};
    CoordinatePlane si{{1, 2, 4}};
    CHECK(identifiability_radius(project(truth, si)) >=
          identifiability_radius(project(truth, s)) - 1e-12);
  }
}

TEST_CASE("assembly writes every slot exactly once and round-trips") {
  Rng rng(55);
  GmmParams truth = oracles::random_gmm(rng, 6, 2);
  OracleEstimator oracle(truth, 0.0);
  ReductionConfig cfg;
  cfg.subspace_dim = 2;
  cfg.seed = 17;
  double gamma = 0.02;

  SubspaceEstimate sel = select_subspace(oracle, 6, 2, cfg, gamma);
  GmmParams base = estimate_base(oracle, sel.plane, cfg, gamma);

  std::vector<int> outside;
  for (int i = 0; i < 6; ++i) {
    if (!sel.plane.contains(i)) outside.push_back(i);
  }
  std::vector<ExtensionRecord> records;
  for (int i : outside) records.push_back(extend(oracle, sel.plane, base, i, std::nullopt, cfg, gamma));
  for (std::size_t a = 0; a < outside.size(); ++a) {
    for (std::size_t b = a + 1; b < outside.size(); ++b) {
      records.push_back(extend(oracle, sel.plane, base, outside[a], outside[b], cfg, gamma));
    }
  }

  AssemblyDiagnostics diag;
  GmmParams rebuilt = assemble(base, sel.plane, records, 6, &diag);
  CHECK(matched_distance(rebuilt, truth).distance <= 1e-12);
  // k (n + n(n+1)/2 + 1) independent values for n = 6, k = 2.
  CHECK(diag.slots_written == 2 * (6 + 21 + 1));

  // Dropping any record leaves uncovered slots.
  std::vector<ExtensionRecord> incomplete(records.begin(), records.end() - 1);
  CHECK_THROWS_AS(assemble(base, sel.plane, incomplete, 6, nullptr), AssemblyIncomplete);

  // Writing a slot twice is caught as well.
  std::vector<ExtensionRecord> doubled = records;
  doubled.push_back(records.back());
  CHECK_THROWS_AS(assemble(base, sel.plane, doubled, 6, nullptr), AssemblyIncomplete);
}

TEST_CASE("learn with the zero-noise oracle recovers the parameters exactly") {
  Rng rng(56);
  for (int t = 0; t < 10; ++t) {
    int n = 3 + static_cast<int>(rng.next_u64() % 10);  // up to 12
    int k = 1 + static_cast<int>(rng.next_u64() % 3);
    GmmParams truth = oracles::random_gmm(rng, n, k);
    OracleEstimator oracle(truth, 0.0);
    ReductionConfig cfg;
    cfg.subspace_dim = std::min(2, n);
    cfg.epsilon = 0.3;
    cfg.seed = 1000 + static_cast<std::uint64_t>(t);
    auto [estimate, report] = learn(oracle, n, k, cfg);
    CHECK(matched_distance(estimate, truth).distance <= 1e-12);
    int out = n - cfg.subspace_dim;
    CHECK(report.estimation_count ==
          static_cast<std::size_t>(1 + out + out * (out - 1) / 2));
  }
}

TEST_CASE("learn degrades linearly with oracle noise") {
  Rng rng(57);
  GmmParams truth = oracles::random_gmm(rng, 10, 2, 2.0, 0.5, 1.5);
  auto median_distance = [&](double eta) {
    std::vector<double> distances;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      OracleEstimator oracle(truth, eta);
      ReductionConfig cfg;
      cfg.subspace_dim = 2;
      cfg.epsilon = 0.3;
      cfg.seed = 2000 + seed;
      auto [estimate, report] = learn(oracle, 10, 2, cfg);
      distances.push_back(matched_distance(estimate, truth).distance);
    }
    std::sort(distances.begin(), distances.end());
    return (distances[9] + distances[10]) / 2.0;
  };
  double m1 = median_distance(1e-3);
  double m2 = median_distance(2e-3);
  CHECK(m1 <= 1e-2);
  CHECK(m2 <= 2.0 * m1 * 1.3);
  CHECK(m2 >= m1);  // more noise cannot help
}

TEST_CASE("learn is bit-identical across 1, 2 and 8 workers") {
  Rng rng(58);
  GmmParams truth = oracles::random_gmm(rng, 8, 2);
  std::optional<Eigen::VectorXd> reference;
  for (int workers : {1, 2, 8}) {
    OracleEstimator oracle(truth, 1e-4);
    ReductionConfig cfg;
    cfg.subspace_dim = 2;
    cfg.epsilon = 0.3;
    cfg.seed = 4242;
    cfg.workers = workers;
    auto [estimate, report] = learn(oracle, 8, 2, cfg);
    Eigen::VectorXd flat = flatten(estimate);
    if (!reference) {
      reference = flat;
    } else {
      REQUIRE(flat.size() == reference->size());
      for (int i = 0; i < flat.size(); ++i) CHECK(flat[i] == (*reference)[i]);
    }
  }
}

TEST_CASE("learn aborts on non-identifiable mixtures") {
  GmmParams truth = duplicated_components(4);
  OracleEstimator oracle(truth, 0.0);
  ReductionConfig cfg;
  cfg.subspace_dim = 2;
  cfg.epsilon = 0.3;
  CHECK_THROWS_AS(learn(oracle, 4, 2, cfg), EstimationFailed);
}

TEST_CASE("detection verdicts") {
  ReductionConfig cfg;
  cfg.subspace_dim = 2;

  GmmParams dup = duplicated_components(3);
  OracleEstimator dup_oracle(dup, 0.0);
  DetectionReport r1 = detect_identifiability(dup_oracle, 3, 2, 0.25, cfg);
  CHECK(r1.below_epsilon);

  // Means (0,0) and (2,0) with unit covariances and equal weights: the pair
  // term is 4/4 = 1, the weight term 0.25, so R = 0.5.
  Eigen::VectorXd far(2);
  far << 2.0, 0.0;
  GmmParams sep({GmmComponent{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), 0.5},
                 GmmComponent{far, Eigen::MatrixXd::Identity(2, 2), 0.5}});
  OracleEstimator sep_oracle(sep, 0.0);
  CHECK(identifiability_radius(sep) == doctest::Approx(0.5));
  DetectionReport r2 = detect_identifiability(sep_oracle, 2, 2, 0.3, cfg);
  CHECK(r2.cutoff == doctest::Approx(0.1));
  CHECK(r2.r_star >= 0.25);
  CHECK_FALSE(r2.below_epsilon);
}

TEST_CASE("grid estimator recovers a projected mixture at desk scale") {
  // Truth on the search lattice so sampling noise is the only error source.
  std::vector<GmmComponent> comps(2);
  Eigen::VectorXd m1(2), m2(2);
  m1 << -1.0, 0.4;
  m2 << 1.0, -0.3;
  Eigen::MatrixXd c1 = Eigen::MatrixXd::Identity(2, 2), c2 = Eigen::MatrixXd::Identity(2, 2);
  c1(0, 0) = 0.75;
  c2(0, 0) = 1.25;
  comps[0] = {m1, c1, 0.35};
  comps[1] = {m2, c2, 0.65};
  GmmParams truth(std::move(comps));

  auto source = std::make_shared<ModelSampleSource>(truth.to_model());
  GmmSearchBounds bounds;
  bounds.mean_low = -2.0;
  bounds.mean_high = 2.0;
  bounds.var_low = 0.25;
  bounds.var_high = 2.25;
  bounds.weight_low = 0.1;
  EstimationConfig base_cfg;
  base_cfg.moment_count = 6;
  base_cfg.grid_step = 0.25;
  base_cfg.refine_levels = 2;
  base_cfg.keep_top = 6;
  base_cfg.sample_cap = 200'000;
  GridMomentEstimator grid(source, 2, bounds, base_cfg);

  ReductionConfig cfg;
  cfg.seed = 77;
  GmmParams est = estimate_base(grid, CoordinatePlane{{0}}, cfg, 0.9);
  GmmParams expected = project(truth, CoordinatePlane{{0}});
  CHECK(matched_distance(est, expected).distance <= 0.25);
}
