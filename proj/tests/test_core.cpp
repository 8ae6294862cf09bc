#include "rkm/core.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "support/oracles.hpp"

using namespace rkm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Matrix random_points(Index n, Index d, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) x(i, j) = gauss(rng);
  }
  return x;
}

std::vector<int> random_labels(std::size_t n, int k, std::uint64_t seed, bool with_noise = true) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dist(with_noise ? 0 : 1, k);
  std::vector<int> labels(n);
  for (auto& l : labels) l = dist(rng);
  return labels;
}

}  // namespace

TEST_CASE("squared distance matrix basics") {
  SECTION("single point gives the 1x1 zero matrix") {
    PointSet ps{Matrix::Zero(1, 3)};
    Matrix d = squared_distance_matrix(ps);
    REQUIRE(d.rows() == 1);
    REQUIRE(d(0, 0) == 0.0);
  }
  SECTION("1-D points 0 and 3 are squared-distance 9 apart") {
    Matrix x(2, 1);
    x << 0.0, 3.0;
    Matrix d = squared_distance_matrix(PointSet{x});
    REQUIRE_THAT(d(0, 1), WithinAbs(9.0, 1e-12));
    REQUIRE_THAT(d(1, 0), WithinAbs(9.0, 1e-12));
    REQUIRE(d(0, 0) == 0.0);
  }
  SECTION("random points match the entry-wise loop oracle") {
    Matrix x = random_points(5, 3, 11);
    Matrix d = squared_distance_matrix(PointSet{x});
    Matrix expect = oracle::squared_distance_matrix(x);
    REQUIRE_THAT((d - expect).cwiseAbs().maxCoeff(), WithinAbs(0.0, 1e-12));
    REQUIRE_THAT((d - d.transpose()).cwiseAbs().maxCoeff(), WithinAbs(0.0, 0.0));
  }
}

TEST_CASE("min pairwise squared distance") {
  SECTION("forced 1-D example") {
    Matrix x(3, 1);
    x << 0.0, 1.0, 5.0;
    REQUIRE_THAT(min_pairwise_sq_distance(PointSet{x}), WithinAbs(1.0, 1e-12));
  }
  SECTION("duplicated point gives zero") {
    Matrix x(3, 2);
    x << 0.0, 0.0, 1.0, 2.0, 0.0, 0.0;
    REQUIRE(min_pairwise_sq_distance(PointSet{x}) == 0.0);
  }
  SECTION("random points match brute-force scan") {
    Matrix x = random_points(8, 4, 17);
    REQUIRE_THAT(min_pairwise_sq_distance(PointSet{x}),
                 WithinRel(oracle::min_pairwise_sq_distance(x), 1e-12));
  }
  SECTION("single point is an error") {
    REQUIRE_THROWS_AS(min_pairwise_sq_distance(PointSet{Matrix::Zero(1, 2)}),
                      std::invalid_argument);
  }
}

TEST_CASE("within-cluster SSE") {
  SECTION("two 1-D points at 0 and 2 cost 2") {
    Matrix x(2, 1);
    x << 0.0, 2.0;
    std::vector<Index> members{0, 1};
    REQUIRE_THAT(within_cluster_sse(PointSet{x}, members), WithinAbs(2.0, 1e-12));
  }
  SECTION("singleton costs zero") {
    Matrix x = random_points(4, 3, 23);
    std::vector<Index> members{2};
    REQUIRE(within_cluster_sse(PointSet{x}, members) == 0.0);
  }
  SECTION("centroid form equals independent pairwise and centroid oracles") {
    Matrix x = random_points(6, 4, 29);
    std::vector<Index> members{0, 1, 2, 3, 4, 5};
    const double got = within_cluster_sse(PointSet{x}, members);
    REQUIRE_THAT(got, WithinRel(oracle::sse_pairwise(x, members), 1e-10));
    REQUIRE_THAT(got, WithinRel(oracle::sse_centroid(x, members), 1e-10));
  }
  SECTION("empty member set is an error") {
    Matrix x = random_points(3, 2, 31);
    std::vector<Index> members;
    REQUIRE_THROWS_AS(within_cluster_sse(PointSet{x}, members), std::invalid_argument);
  }
  SECTION("out-of-range member is an error") {
    Matrix x = random_points(3, 2, 37);
    std::vector<Index> members{0, 5};
    REQUIRE_THROWS_AS(within_cluster_sse(PointSet{x}, members), std::invalid_argument);
  }
}

TEST_CASE("regularised cost") {
  Matrix x = random_points(10, 3, 41);
  PointSet ps{x};
  SECTION("all points noise costs lambda*N") {
    Clustering c{2, std::vector<int>(10, kNoiseLabel)};
    REQUIRE_THAT(regularised_cost(ps, c, 0.7), WithinRel(7.0, 1e-12));
  }
  SECTION("k singletons plus noise costs lambda*(N-k)") {
    Clustering c{2, std::vector<int>(10, kNoiseLabel)};
    c.labels[3] = 1;
    c.labels[7] = 2;
    REQUIRE_THAT(regularised_cost(ps, c, 0.7), WithinRel(0.7 * 8.0, 1e-12));
  }
  SECTION("random labeling matches per-cluster oracle") {
    Clustering c{3, random_labels(10, 3, 43)};
    double expect = 0.0;
    for (int label = 1; label <= 3; ++label) {
      std::vector<Index> members;
      for (std::size_t i = 0; i < c.labels.size(); ++i) {
        if (c.labels[i] == label) members.push_back(static_cast<Index>(i));
      }
      if (!members.empty()) expect += oracle::sse_pairwise(x, members);
    }
    for (int l : c.labels) {
      if (l == kNoiseLabel) expect += 0.9;
    }
    REQUIRE_THAT(regularised_cost(ps, c, 0.9), WithinRel(expect, 1e-10));
  }
  SECTION("negative lambda rejected") {
    Clustering c{1, std::vector<int>(10, 1)};
    REQUIRE_THROWS_AS(regularised_cost(ps, c, -1.0), std::invalid_argument);
  }
}

TEST_CASE("clustering distance") {
  SECTION("identical clusterings are at distance zero") {
    Clustering a{2, {1, 1, 2, 2, kNoiseLabel}};
    REQUIRE(clustering_distance(a, a) == 0.0);
  }
  SECTION("merge vs singletons on three points") {
    Clustering a{2, {1, 1, 2}};
    Clustering b{3, {1, 2, 3}};
    REQUIRE_THAT(clustering_distance(a, b), WithinRel(1.0 / 3.0, 1e-12));
  }
  SECTION("random labelings match the pair-enumeration oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Clustering a{3, random_labels(12, 3, 100 + seed)};
      Clustering b{4, random_labels(12, 4, 200 + seed)};
      REQUIRE_THAT(clustering_distance(a, b),
                   WithinAbs(oracle::delta_distance(a.labels, b.labels), 1e-15));
    }
  }
  SECTION("mismatched N is an error") {
    Clustering a{1, {1, 1}};
    Clustering b{1, {1, 1, 1}};
    REQUIRE_THROWS_AS(clustering_distance(a, b), std::invalid_argument);
  }
}

TEST_CASE("restriction of clusterings") {
  Clustering c{3, {1, 2, kNoiseLabel, 3, 1, 2, 2, kNoiseLabel}};
  SECTION("restricting to all indices is the identity") {
    std::vector<Index> all{0, 1, 2, 3, 4, 5, 6, 7};
    Clustering r = restrict_clustering(c, all);
    REQUIRE(r.labels == c.labels);
    REQUIRE(r.k == c.k);
  }
  SECTION("single index") {
    std::vector<Index> one{3};
    Clustering r = restrict_clustering(c, one);
    REQUIRE(r.labels == std::vector<int>{3});
  }
  SECTION("pairwise co-membership preserved on random subsets") {
    std::mt19937_64 rng(55);
    std::vector<Index> subset{1, 3, 4, 6};
    Clustering r = restrict_clustering(c, subset);
    for (std::size_t a = 0; a < subset.size(); ++a) {
      for (std::size_t b = a + 1; b < subset.size(); ++b) {
        const bool same_full = c.labels[static_cast<std::size_t>(subset[a])] ==
                               c.labels[static_cast<std::size_t>(subset[b])];
        REQUIRE((r.labels[a] == r.labels[b]) == same_full);
      }
    }
    (void)rng;
  }
  SECTION("errors") {
    std::vector<Index> bad{0, 99};
    REQUIRE_THROWS_AS(restrict_clustering(c, bad), std::invalid_argument);
    std::vector<Index> dup{1, 1};
    REQUIRE_THROWS_AS(restrict_clustering(c, dup), std::invalid_argument);
  }
}

TEST_CASE("gamma robustness") {
  SECTION("identical restricted clusterings give zero") {
    Clustering full{2, {1, 1, 2, 2, kNoiseLabel, 1}};
    std::vector<Index> clean{0, 1, 2, 3};
    Clustering on_clean{2, {1, 1, 2, 2}};
    REQUIRE(gamma_robustness(full, on_clean, clean) == 0.0);
  }
  SECTION("scrambled restriction matches pair enumeration") {
    Clustering full{2, {1, 2, 1, 2, 1, 2, 1, 2}};
    std::vector<Index> clean{1, 3, 5, 7};
    Clustering on_clean{2, {1, 1, 2, 2}};
    std::vector<int> restricted{2, 2, 2, 2};
    REQUIRE_THAT(gamma_robustness(full, on_clean, clean),
                 WithinAbs(oracle::delta_distance(restricted, on_clean.labels), 1e-15));
  }
  SECTION("subset size mismatch is an error") {
    Clustering full{1, {1, 1, 1}};
    Clustering on_clean{1, {1}};
    std::vector<Index> clean{0, 1};
    REQUIRE_THROWS_AS(gamma_robustness(full, on_clean, clean), std::invalid_argument);
  }
}

TEST_CASE("pair metrics") {
  SECTION("candidate equal to reference scores all ones") {
    Clustering c{2, {1, 1, 2, 2, 2}};
    PairMetrics pm = pair_metrics(c, c);
    REQUIRE(pm.precision == 1.0);
    REQUIRE(pm.recall == 1.0);
    REQUIRE(pm.f1 == 1.0);
  }
  SECTION("all-singleton candidate has precision 1 by convention, recall 0") {
    Clustering cand{5, {1, 2, 3, 4, 5}};
    Clustering ref{2, {1, 1, 2, 2, 2}};
    PairMetrics pm = pair_metrics(cand, ref);
    REQUIRE(pm.precision == 1.0);
    REQUIRE(pm.recall == 0.0);
    REQUIRE(pm.f1 == 0.0);
  }
  SECTION("random labelings match the exhaustive pair-count oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Clustering cand{3, random_labels(10, 3, 300 + seed)};
      Clustering ref{2, random_labels(10, 2, 400 + seed, /*with_noise=*/false)};
      PairMetrics pm = pair_metrics(cand, ref);
      oracle::PairMetrics om = oracle::pair_metrics(cand.labels, ref.labels);
      REQUIRE_THAT(pm.precision, WithinAbs(om.precision, 1e-15));
      REQUIRE_THAT(pm.recall, WithinAbs(om.recall, 1e-15));
      REQUIRE_THAT(pm.f1, WithinAbs(om.f1, 1e-15));
    }
  }
  SECTION("reference without co-clustered pairs is an error") {
    Clustering cand{1, {1, 1, 1}};
    Clustering ref{3, {1, 2, 3}};
    REQUIRE_THROWS_AS(pair_metrics(cand, ref), std::invalid_argument);
  }
  SECTION("mismatched N is an error") {
    Clustering cand{1, {1, 1}};
    Clustering ref{1, {1, 1, 1}};
    REQUIRE_THROWS_AS(pair_metrics(cand, ref), std::invalid_argument);
  }
}

TEST_CASE("SSE identity holds on random subsets") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 2 + static_cast<Index>(rng() % 12);
    const Index d = 1 + static_cast<Index>(rng() % 6);
    Matrix x = random_points(n, d, rng(), 1.0 + static_cast<double>(trial % 5));
    std::vector<Index> members;
    for (Index i = 0; i < n; ++i) {
      if (rng() % 2 == 0) members.push_back(i);
    }
    if (members.empty()) members.push_back(0);
    PointSet ps{x};
    const double centroid_form = within_cluster_sse(ps, members);  // throws on mismatch
    REQUIRE_THAT(centroid_form,
                 WithinAbs(oracle::sse_pairwise(x, members),
                           1e-9 * std::max(1.0, centroid_form)));
  }
}

TEST_CASE("delta distance is a pseudometric") {
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 50; ++trial) {
    Clustering a{3, random_labels(10, 3, rng())};
    Clustering b{3, random_labels(10, 3, rng())};
    Clustering c{3, random_labels(10, 3, rng())};
    REQUIRE(clustering_distance(a, a) == 0.0);
    REQUIRE(clustering_distance(a, b) == clustering_distance(b, a));
    REQUIRE(clustering_distance(a, c) <=
            clustering_distance(a, b) + clustering_distance(b, c) + 1e-15);
  }
}

TEST_CASE("small lambda admits the trivial solution") {
  // For lambda <= m(X)/2 the exhaustive optimum places k singletons and all
  // remaining points in the noise bucket, at cost lambda*(N-k).
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 6; ++trial) {
    const Index n = 5 + static_cast<Index>(trial % 3);
    Matrix x = random_points(n, 2, rng());
    const double m = oracle::min_pairwise_sq_distance(x);
    for (int k = 1; k <= 2; ++k) {
      const double lambda = 0.45 * m;
      auto best = oracle::enumerate_regularised(x, k, lambda);
      REQUIRE_THAT(best.cost, WithinRel(lambda * static_cast<double>(n - k), 1e-10));
    }
  }
}

TEST_CASE("scaling points by s and lambda by s^2 scales costs by s^2") {
  std::mt19937_64 rng(97);
  const double s = 3.7;
  for (int trial = 0; trial < 5; ++trial) {
    Matrix x = random_points(6, 2, rng());
    const double lambda = 0.3 + 0.1 * trial;
    Clustering c{2, random_labels(6, 2, rng())};
    PointSet ps{x};
    PointSet scaled{Matrix(s * x)};
    REQUIRE_THAT(regularised_cost(scaled, c, s * s * lambda),
                 WithinRel(s * s * regularised_cost(ps, c, lambda), 1e-9));
    // The set of optimal labelings is invariant under the joint scaling:
    // each argmin attains the optimum of the other problem (ties may make
    // the first-found argmin differ, so compare costs, not labels).
    auto best = oracle::enumerate_regularised(x, 2, lambda);
    auto best_scaled = oracle::enumerate_regularised(s * x, 2, s * s * lambda);
    Clustering from_scaled{2, best_scaled.labels};
    Clustering from_plain{2, best.labels};
    REQUIRE_THAT(regularised_cost(ps, from_scaled, lambda), WithinRel(best.cost, 1e-9));
    REQUIRE_THAT(regularised_cost(scaled, from_plain, s * s * lambda),
                 WithinRel(best_scaled.cost, 1e-9));
  }
}

TEST_CASE("f1 stays within [0,1] and collapses to precision when p equals r") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    Clustering cand{3, random_labels(9, 3, rng())};
    Clustering ref{2, random_labels(9, 2, rng(), /*with_noise=*/false)};
    PairMetrics pm = pair_metrics(cand, ref);
    REQUIRE(pm.f1 >= 0.0);
    REQUIRE(pm.f1 <= 1.0);
    if (pm.precision == pm.recall) {
      REQUIRE_THAT(pm.f1, WithinAbs(pm.precision, 1e-15));
    }
  }
}

TEST_CASE("type validation") {
  SECTION("non-finite coordinates rejected") {
    Matrix x(1, 2);
    x << 1.0, std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(PointSet{x}, std::invalid_argument);
  }
  SECTION("labels outside the valid range rejected") {
    Clustering c{2, {1, 3}};
    REQUIRE_THROWS_AS(validate_clustering(c), std::invalid_argument);
    Clustering neg{2, {1, -1}};
    REQUIRE_THROWS_AS(validate_clustering(neg), std::invalid_argument);
  }
}
