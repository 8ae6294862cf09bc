#pragma once

// k-means++ seeded Lloyd iteration, the comparison baseline. Also reused by
// the rounding step to k-cluster embedded rows.

#include "rkm/core.hpp"

#include <random>

namespace rkm {

struct LloydConfig {
  int k = 1;
  int restarts = 10;
  int max_iter = 300;
  std::uint64_t seed = 0;
};

struct LloydResult {
  Clustering clustering;
  Matrix centers;  // k x d
  double cost = 0.0;
  int iterations = 0;              // of the winning restart
  std::vector<double> cost_trace;  // post-assignment costs of the winning restart
};

namespace detail {

// D^2 seeding drawing from an explicit RNG stream (restarts share one stream).
inline std::vector<Index> kmeanspp_indices(const PointSet& points, int k, std::mt19937_64& rng) {
  const Index n = points.size();
  if (k < 1 || static_cast<Index>(k) > n) {
    throw std::invalid_argument("kmeanspp_seed: need 1 <= k <= N");
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Index> chosen;
  chosen.reserve(static_cast<std::size_t>(k));
  chosen.push_back(static_cast<Index>(rng() % static_cast<std::uint64_t>(n)));
  std::vector<double> weight(static_cast<std::size_t>(n));
  while (chosen.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Index c : chosen) best = std::min(best, (points.row(i) - points.row(c)).squaredNorm());
      weight[static_cast<std::size_t>(i)] = best;
      total += best;
    }
    Index pick = -1;
    if (total > 0.0) {
      const double r = unif(rng) * total;
      double acc = 0.0;
      for (Index i = 0; i < n && pick < 0; ++i) {
        const double w = weight[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        acc += w;
        if (acc >= r) pick = i;
      }
    }
    if (pick < 0) {
      // All remaining mass is zero (duplicated points): take the lowest
      // index not already chosen so the seeding still returns k distinct rows.
      for (Index i = 0; i < n && pick < 0; ++i) {
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) pick = i;
      }
    }
    chosen.push_back(pick);
  }
  return chosen;
}

}  // namespace detail

inline std::vector<Index> kmeanspp_seed(const PointSet& points, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return detail::kmeanspp_indices(points, k, rng);
}

// Best-of-restarts Lloyd. Ties between restarts keep the earlier one; empty
// clusters are repaired by reseeding to the point farthest from its assigned
// center. The recorded trace holds the cost after each assignment step, which
// is non-increasing even across repairs.
inline LloydResult lloyd_detail(const PointSet& points, const LloydConfig& config) {
  const Index n = points.size();
  const int k = config.k;
  if (k < 1 || static_cast<Index>(k) > n) throw std::invalid_argument("lloyd: need 1 <= k <= N");
  if (config.restarts < 1) throw std::invalid_argument("lloyd: need restarts >= 1");
  std::mt19937_64 rng(config.seed);

  LloydResult best;
  best.cost = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < config.restarts; ++restart) {
    const auto seeds = detail::kmeanspp_indices(points, k, rng);
    Matrix centers(k, points.dim());
    for (int c = 0; c < k; ++c) centers.row(c) = points.row(seeds[static_cast<std::size_t>(c)]);

    std::vector<int> labels(static_cast<std::size_t>(n), 1);
    std::vector<int> prev;
    std::vector<double> trace;
    double cost = std::numeric_limits<double>::infinity();
    int iterations = 0;

    for (int iter = 0; iter < config.max_iter; ++iter) {
      // Assignment step; ties go to the lowest center index.
      cost = 0.0;
      for (Index i = 0; i < n; ++i) {
        double bestd = std::numeric_limits<double>::infinity();
        int bestc = 0;
        for (int c = 0; c < k; ++c) {
          const double d = (points.row(i) - centers.row(c)).squaredNorm();
          if (d < bestd) {
            bestd = d;
            bestc = c;
          }
        }
        labels[static_cast<std::size_t>(i)] = bestc + 1;
        cost += bestd;
      }
      trace.push_back(cost);
      iterations = iter + 1;
      if (labels == prev) break;
      prev = labels;

      // Update step with farthest-point repair for empty clusters.
      Matrix sums = Matrix::Zero(k, points.dim());
      std::vector<Index> counts(static_cast<std::size_t>(k), 0);
      for (Index i = 0; i < n; ++i) {
        const int c = labels[static_cast<std::size_t>(i)] - 1;
        sums.row(c) += points.row(i);
        ++counts[static_cast<std::size_t>(c)];
      }
      std::vector<double> dist_to_center(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) {
        const int c = labels[static_cast<std::size_t>(i)] - 1;
        dist_to_center[static_cast<std::size_t>(i)] =
            (points.row(i) - centers.row(c)).squaredNorm();
      }
      for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) {
          centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        } else {
          Index far = 0;
          for (Index i = 1; i < n; ++i) {
            if (dist_to_center[static_cast<std::size_t>(i)] >
                dist_to_center[static_cast<std::size_t>(far)]) {
              far = i;
            }
          }
          centers.row(c) = points.row(far);
          dist_to_center[static_cast<std::size_t>(far)] = 0.0;  // claim it once
        }
      }
    }

    if (cost < best.cost) {
      best.cost = cost;
      best.clustering = Clustering{k, labels};
      best.centers = centers;
      best.iterations = iterations;
      best.cost_trace = std::move(trace);
    }
  }
  return best;
}

inline Clustering lloyd(const PointSet& points, const LloydConfig& config) {
  return lloyd_detail(points, config).clustering;
}

}  // namespace rkm
