#include "rkm/baseline.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "support/oracles.hpp"

using namespace rkm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Matrix random_points(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) x(i, j) = gauss(rng);
  }
  return x;
}

}  // namespace

TEST_CASE("kmeans++ seeding") {
  SECTION("k = N selects every point") {
    PointSet ps{random_points(5, 2, 3)};
    auto seeds = kmeanspp_seed(ps, 5, 7);
    std::sort(seeds.begin(), seeds.end());
    REQUIRE(seeds == std::vector<Index>{0, 1, 2, 3, 4});
  }
  SECTION("k = 1 returns one valid index") {
    PointSet ps{random_points(6, 2, 5)};
    auto seeds = kmeanspp_seed(ps, 1, 7);
    REQUIRE(seeds.size() == 1);
    REQUIRE(seeds[0] >= 0);
    REQUIRE(seeds[0] < 6);
  }
  SECTION("deterministic under a fixed seed") {
    PointSet ps{random_points(9, 3, 11)};
    REQUIRE(kmeanspp_seed(ps, 4, 13) == kmeanspp_seed(ps, 4, 13));
  }
  SECTION("duplicated points still yield k distinct indices") {
    Matrix x(4, 2);
    x << 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0;
    auto seeds = kmeanspp_seed(PointSet{x}, 3, 17);
    std::sort(seeds.begin(), seeds.end());
    REQUIRE(std::adjacent_find(seeds.begin(), seeds.end()) == seeds.end());
  }
  SECTION("k > N is an error") {
    PointSet ps{random_points(3, 2, 19)};
    REQUIRE_THROWS_AS(kmeanspp_seed(ps, 4, 7), std::invalid_argument);
  }
}

TEST_CASE("lloyd iteration") {
  SECTION("two well-separated 1-D pairs split optimally") {
    Matrix x(4, 1);
    x << 0.0, 0.1, 10.0, 10.1;
    LloydConfig cfg{2, 5, 100, 23};
    LloydResult res = lloyd_detail(PointSet{x}, cfg);
    REQUIRE_THAT(res.cost, WithinAbs(0.01, 1e-12));
    REQUIRE(res.clustering.labels[0] == res.clustering.labels[1]);
    REQUIRE(res.clustering.labels[2] == res.clustering.labels[3]);
    REQUIRE(res.clustering.labels[0] != res.clustering.labels[2]);
  }
  SECTION("k = 1 recovers the total SSE") {
    Matrix x = random_points(12, 3, 29);
    PointSet ps{x};
    LloydResult res = lloyd_detail(ps, LloydConfig{1, 1, 50, 31});
    std::vector<Index> all(12);
    for (Index i = 0; i < 12; ++i) all[static_cast<std::size_t>(i)] = i;
    REQUIRE_THAT(res.cost, WithinRel(within_cluster_sse(ps, all), 1e-10));
  }
  SECTION("best restart reaches the exhaustive optimum on small instances") {
    int hits = 0;
    const int trials = 20;
    for (int trial = 0; trial < trials; ++trial) {
      Matrix x = random_points(7, 2, 100 + static_cast<std::uint64_t>(trial));
      const int k = 2 + trial % 2;
      auto oracle_best = oracle::enumerate_kmeans(x, k);
      LloydResult res = lloyd_detail(
          PointSet{x}, LloydConfig{k, 10, 100, 7000 + static_cast<std::uint64_t>(trial)});
      REQUIRE(res.cost >= oracle_best.cost - 1e-9 * std::max(1.0, oracle_best.cost));
      if (res.cost <= oracle_best.cost + 1e-7 * std::max(1.0, oracle_best.cost)) ++hits;
    }
    REQUIRE(hits >= 18);  // >= 90% of seeded trials
  }
  SECTION("cost trace is non-increasing within the winning restart") {
    Matrix x = random_points(40, 4, 37);
    LloydResult res = lloyd_detail(PointSet{x}, LloydConfig{4, 3, 200, 41});
    for (std::size_t t = 1; t < res.cost_trace.size(); ++t) {
      REQUIRE(res.cost_trace[t] <= res.cost_trace[t - 1] + 1e-9);
    }
  }
  SECTION("cost is invariant under translation") {
    Matrix x = random_points(15, 3, 43);
    Matrix shifted = x;
    shifted.rowwise() += Eigen::RowVector3d(100.0, -40.0, 7.0);
    LloydConfig cfg{3, 5, 100, 47};
    LloydResult a = lloyd_detail(PointSet{x}, cfg);
    LloydResult b = lloyd_detail(PointSet{shifted}, cfg);
    REQUIRE_THAT(a.cost, WithinRel(b.cost, 1e-6));
  }
}
