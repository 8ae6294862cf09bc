#pragma once

// Rounding a relaxed solution (Z, y) into an explicit clustering: threshold y
// to pick the noise set, embed the surviving points as rows of Z*X (each row
// approximates its cluster centroid), and k-cluster that embedding. Also the
// post-processing step that folds noise points back onto their nearest
// structured centroid for baseline comparisons.

#include "rkm/baseline.hpp"
#include "rkm/core.hpp"

namespace rkm {

struct RoundingConfig {
  double threshold = 0.5;  // y_i above this is declared noise
  int restarts = 10;       // k-means++ restarts for the embedding step
  std::uint64_t seed = 0;
};

inline Clustering round_solution(const PointSet& points, const Matrix& z, const Vector& y,
                                 int k, const RoundingConfig& config = {}) {
  const Index n = points.size();
  if (z.rows() != n || z.cols() != n) {
    throw std::invalid_argument("round_solution: Z must be N x N");
  }
  if (y.size() != 0 && y.size() != n) {
    throw std::invalid_argument("round_solution: y must be empty or length N");
  }
  if (k < 1) throw std::invalid_argument("round_solution: k must be >= 1");
  if (!(config.threshold >= 0.0 && config.threshold <= 1.0)) {
    throw std::invalid_argument("round_solution: threshold must be in [0,1]");
  }

  std::vector<Index> survivors;
  survivors.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    if (y.size() == 0 || y(i) <= config.threshold) survivors.push_back(i);
  }
  if (survivors.empty()) {
    throw std::invalid_argument("round_solution: empty structured set");
  }
  if (static_cast<Index>(k) > static_cast<Index>(survivors.size())) {
    throw std::invalid_argument("round_solution: k exceeds surviving point count");
  }

  // Row i of Z*X is the Z-weighted average of all points, an estimate of the
  // centroid point i belongs to. Surviving rows are clustered as-is; rows are
  // not renormalized by their (near-one) sums.
  Matrix embedded(static_cast<Index>(survivors.size()), points.dim());
  for (std::size_t s = 0; s < survivors.size(); ++s) {
    embedded.row(static_cast<Index>(s)) = z.row(survivors[s]) * points.coords();
  }

  LloydConfig lloyd_config;
  lloyd_config.k = k;
  lloyd_config.restarts = config.restarts;
  lloyd_config.seed = config.seed;
  const Clustering grouped = lloyd(PointSet(embedded), lloyd_config);

  Clustering out;
  out.k = k;
  out.labels.assign(static_cast<std::size_t>(n), kNoiseLabel);
  for (std::size_t s = 0; s < survivors.size(); ++s) {
    out.labels[static_cast<std::size_t>(survivors[s])] = grouped.labels[s];
  }
  return out;
}

// Relabel every noise point to the structured cluster with the nearest
// centroid (ties go to the lowest label). Empty clusters cannot attract
// points; at least one structured cluster must be nonempty.
inline Clustering assign_noise_to_clusters(const PointSet& points, const Clustering& c) {
  validate_clustering(c, points.size());
  if (c.k < 1) throw std::invalid_argument("assign_noise_to_clusters: no structured clusters");
  const auto members = cluster_members(c);

  std::vector<int> live;
  std::vector<Vector> centroids;
  for (int cl = 0; cl < c.k; ++cl) {
    const auto& idx = members[static_cast<std::size_t>(cl)];
    if (idx.empty()) continue;
    Vector mean = Vector::Zero(points.dim());
    for (Index i : idx) mean += points.coords().row(i).transpose();
    mean /= static_cast<double>(idx.size());
    live.push_back(cl + 1);
    centroids.push_back(std::move(mean));
  }
  if (live.empty()) {
    throw std::invalid_argument("assign_noise_to_clusters: no structured clusters");
  }

  Clustering out = c;
  for (Index i = 0; i < points.size(); ++i) {
    if (out.labels[static_cast<std::size_t>(i)] != kNoiseLabel) continue;
    int best_label = live.front();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < live.size(); ++m) {
      const double dist =
          (points.coords().row(i).transpose() - centroids[m]).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best_label = live[m];
      }
    }
    out.labels[static_cast<std::size_t>(i)] = best_label;
  }
  return out;
}

}  // namespace rkm
