#include <catch2/catch_amalgamated.hpp>

#include "rkm/relax.hpp"
#include "rkm/rounding.hpp"
#include "rkm/synth.hpp"
#include "support/oracles.hpp"

#include <random>

using Catch::Matchers::WithinAbs;

namespace {

rkm::PointSet random_points(rkm::Index n, rkm::Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  rkm::Matrix x(n, d);
  for (rkm::Index i = 0; i < n; ++i) {
    for (rkm::Index j = 0; j < d; ++j) x(i, j) = gauss(rng);
  }
  return rkm::PointSet(std::move(x));
}

// Random clustering with all k clusters nonempty and a controlled noise count.
rkm::Clustering random_clustering(rkm::Index n, int k, rkm::Index noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> labels;
  for (int cl = 1; cl <= k; ++cl) labels.push_back(cl);
  for (rkm::Index i = 0; i < noise; ++i) labels.push_back(rkm::kNoiseLabel);
  std::uniform_int_distribution<int> lab(1, k);
  while (static_cast<rkm::Index>(labels.size()) < n) labels.push_back(lab(rng));
  std::shuffle(labels.begin(), labels.end(), rng);
  return rkm::Clustering{k, std::move(labels)};
}

}  // namespace

TEST_CASE("rounding recovers clusterings from their integral embeddings") {
  SECTION("planted partition with noise") {
    rkm::NoiseConfig noise;
    noise.m_far = 3;
    noise.seed = 7;
    const auto inst = rkm::make_instance(rkm::BallModelConfig{3, 5, 6, 3.0, 7}, noise);
    const auto truth = rkm::ground_truth_clustering(inst.truth, inst.points.size());
    const auto emb = rkm::intended_solution(truth, inst.points.size());
    const auto rounded = rkm::round_solution(inst.points, emb.Z, emb.y, 3);
    CHECK(rkm::clustering_distance(rounded, truth) == 0.0);
    for (rkm::Index i = 18; i < inst.points.size(); ++i) {
      CHECK(rounded.labels[static_cast<std::size_t>(i)] == rkm::kNoiseLabel);
    }
  }

  SECTION("idempotence on random integral inputs") {
    for (int trial = 0; trial < 20; ++trial) {
      const rkm::Index n = 12;
      const auto x = random_points(n, 3, 500 + trial);
      const auto c = random_clustering(n, 3, 2, 900 + trial);
      const auto emb = rkm::intended_solution(c, n);
      rkm::RoundingConfig config;
      config.seed = static_cast<std::uint64_t>(trial);
      const auto rounded = rkm::round_solution(x, emb.Z, emb.y, 3, config);
      CHECK(rkm::clustering_distance(rounded, c) == 0.0);
    }
  }
}

TEST_CASE("rounding thresholds the noise indicator") {
  const auto x = random_points(4, 2, 11);
  rkm::Vector y = rkm::Vector::Zero(4);
  y(0) = 1.0;
  const rkm::Matrix z = rkm::Matrix::Identity(4, 4);

  const auto rounded = rkm::round_solution(x, z, y, 2);
  CHECK(rounded.labels[0] == rkm::kNoiseLabel);
  for (std::size_t i = 1; i < 4; ++i) CHECK(rounded.labels[i] != rkm::kNoiseLabel);

  SECTION("omitted y means no noise") {
    const auto all = rkm::round_solution(x, z, rkm::Vector(), 2);
    for (auto label : all.labels) CHECK(label != rkm::kNoiseLabel);
  }

  SECTION("exactly-threshold values survive") {
    rkm::Vector half = rkm::Vector::Constant(4, 0.5);
    const auto all = rkm::round_solution(x, z, half, 2);
    for (auto label : all.labels) CHECK(label != rkm::kNoiseLabel);
  }

  SECTION("raising the threshold only shrinks the noise set") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> unif;
    const auto pts = random_points(30, 2, 17);
    rkm::Vector indicator(30);
    for (rkm::Index i = 0; i < 30; ++i) indicator(i) = unif(rng) * 0.8;  // keeps survivors
    const rkm::Matrix ident = rkm::Matrix::Identity(30, 30);
    std::vector<bool> previous(30, true);
    for (double threshold : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      rkm::RoundingConfig config;
      config.threshold = threshold;
      const auto rounded = rkm::round_solution(pts, ident, indicator, 1, config);
      for (rkm::Index i = 0; i < 30; ++i) {
        const bool is_noise = rounded.labels[static_cast<std::size_t>(i)] == rkm::kNoiseLabel;
        if (is_noise) CHECK(previous[static_cast<std::size_t>(i)]);
        previous[static_cast<std::size_t>(i)] = is_noise;
      }
    }
  }
}

TEST_CASE("rounding rejects degenerate survivor sets") {
  const auto x = random_points(3, 2, 19);
  const rkm::Matrix z = rkm::Matrix::Identity(3, 3);
  CHECK_THROWS_WITH(rkm::round_solution(x, z, rkm::Vector::Ones(3), 1),
                    Catch::Matchers::ContainsSubstring("empty structured set"));
  rkm::Vector y = rkm::Vector::Zero(3);
  y(0) = y(1) = 1.0;
  CHECK_THROWS_AS(rkm::round_solution(x, z, y, 2), std::invalid_argument);
  CHECK_THROWS_AS(rkm::round_solution(x, rkm::Matrix::Identity(2, 2), rkm::Vector(), 1),
                  std::invalid_argument);
  rkm::RoundingConfig bad;
  bad.threshold = 1.5;
  CHECK_THROWS_AS(rkm::round_solution(x, z, rkm::Vector::Zero(3), 1, bad),
                  std::invalid_argument);
}

TEST_CASE("rounding the solver output recovers a planted partition") {
  const auto inst = rkm::make_instance(rkm::BallModelConfig{2, 8, 12, 3.5, 23},
                                       rkm::NoiseConfig{});
  const auto truth = rkm::ground_truth_clustering(inst.truth, inst.points.size());
  const auto sol = rkm::solve(rkm::build_problem(inst.points, 2,
                                                 std::numeric_limits<double>::infinity(),
                                                 rkm::RelaxKind::SDP));
  REQUIRE(sol.converged);
  const auto rounded = rkm::round_solution(inst.points, sol.Z, sol.y, 2);
  CHECK(rkm::clustering_distance(rounded, truth) == 0.0);
}

TEST_CASE("noise reassignment sends points to the nearest centroid") {
  SECTION("no noise is the identity") {
    const auto x = random_points(6, 2, 29);
    const auto c = random_clustering(6, 2, 0, 31);
    const auto out = rkm::assign_noise_to_clusters(x, c);
    CHECK(out.labels == c.labels);
  }

  SECTION("single noise point joins the closer cluster") {
    rkm::Matrix x(5, 1);
    x << 0.0, 0.2, 10.0, 10.2, 9.0;
    const rkm::Clustering c{2, {1, 1, 2, 2, rkm::kNoiseLabel}};
    const auto out = rkm::assign_noise_to_clusters(rkm::PointSet(x), c);
    CHECK(out.labels[4] == 2);
  }

  SECTION("matches the exhaustive nearest-centroid loop") {
    for (int trial = 0; trial < 20; ++trial) {
      const rkm::Index n = 15;
      const auto x = random_points(n, 3, 700 + trial);
      const auto c = random_clustering(n, 3, 4, 1300 + trial);
      const auto out = rkm::assign_noise_to_clusters(x, c);

      const auto members = rkm::cluster_members(c);
      for (rkm::Index i = 0; i < n; ++i) {
        const int original = c.labels[static_cast<std::size_t>(i)];
        if (original != rkm::kNoiseLabel) {
          CHECK(out.labels[static_cast<std::size_t>(i)] == original);
          continue;
        }
        double best = std::numeric_limits<double>::infinity();
        int arg = -1;
        for (int cl = 0; cl < 3; ++cl) {
          const auto& idx = members[static_cast<std::size_t>(cl)];
          if (idx.empty()) continue;
          std::vector<double> mean(3, 0.0);
          for (rkm::Index p : idx) {
            for (int dim = 0; dim < 3; ++dim) mean[static_cast<std::size_t>(dim)] += x.coords()(p, dim);
          }
          double dist = 0.0;
          for (int dim = 0; dim < 3; ++dim) {
            const double m = mean[static_cast<std::size_t>(dim)] / static_cast<double>(idx.size());
            const double diff = x.coords()(i, dim) - m;
            dist += diff * diff;
          }
          if (dist < best) {
            best = dist;
            arg = cl + 1;
          }
        }
        CHECK(out.labels[static_cast<std::size_t>(i)] == arg);
      }
      for (auto label : out.labels) CHECK(label != rkm::kNoiseLabel);
    }
  }

  SECTION("requires a nonempty structured cluster") {
    const auto x = random_points(3, 2, 37);
    CHECK_THROWS_AS(rkm::assign_noise_to_clusters(x, rkm::Clustering{0, {0, 0, 0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(rkm::assign_noise_to_clusters(x, rkm::Clustering{2, {0, 0, 0}}),
                    std::invalid_argument);
  }

  SECTION("empty clusters cannot attract noise") {
    rkm::Matrix x(3, 1);
    x << 0.0, 1.0, 100.0;
    const rkm::Clustering c{2, {1, 1, rkm::kNoiseLabel}};
    const auto out = rkm::assign_noise_to_clusters(rkm::PointSet(x), c);
    CHECK(out.labels[2] == 1);
  }
}

TEST_CASE("rounding is deterministic under a fixed seed") {
  const auto inst = rkm::make_instance(rkm::BallModelConfig{3, 4, 8, 3.0, 41},
                                       rkm::NoiseConfig{});
  const auto sol = rkm::solve(rkm::build_problem(inst.points, 3,
                                                 std::numeric_limits<double>::infinity(),
                                                 rkm::RelaxKind::SDP));
  REQUIRE(sol.converged);
  rkm::RoundingConfig config;
  config.seed = 99;
  const auto a = rkm::round_solution(inst.points, sol.Z, sol.y, 3, config);
  const auto b = rkm::round_solution(inst.points, sol.Z, sol.y, 3, config);
  CHECK(a.labels == b.labels);
}
