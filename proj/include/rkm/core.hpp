#pragma once

// Data model, distance computations, clustering costs, and evaluation metrics
// for regularised k-means: the objective sum_i SSE(C_i) + lambda*|C_{k+1}|
// over partitions of the data into k clusters plus a designated noise bucket.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rkm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Sentinel label for the noise bucket. Structured clusters use labels 1..k,
// so k stays unambiguous in every API; serialization maps 0 to "noise".
inline constexpr int kNoiseLabel = 0;

// Immutable set of N points in R^d, rows are points.
class PointSet {
 public:
  PointSet() = default;

  explicit PointSet(Matrix coords) : coords_(std::move(coords)) {
    if (!coords_.allFinite()) {
      throw std::invalid_argument("PointSet: coordinates must be finite");
    }
    if (coords_.rows() > 0 && coords_.cols() < 1) {
      throw std::invalid_argument("PointSet: dimension must be >= 1");
    }
  }

  Index size() const { return coords_.rows(); }
  Index dim() const { return coords_.cols(); }
  const Matrix& coords() const { return coords_; }
  auto row(Index i) const { return coords_.row(i); }

 private:
  Matrix coords_;
};

// Assignment of each point to one of k structured clusters or to noise.
struct Clustering {
  int k = 0;
  std::vector<int> labels;  // each in {kNoiseLabel} U {1..k}

  Index size() const { return static_cast<Index>(labels.size()); }
};

struct PairMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline void validate_clustering(const Clustering& c) {
  if (c.k < 0) throw std::invalid_argument("Clustering: k must be >= 0");
  for (int label : c.labels) {
    if (label < 0 || label > c.k) {
      throw std::invalid_argument("Clustering: label " + std::to_string(label) +
                                  " outside {0.." + std::to_string(c.k) + "}");
    }
  }
}

inline void validate_clustering(const Clustering& c, Index n_points) {
  validate_clustering(c);
  if (c.size() != n_points) {
    throw std::invalid_argument("Clustering: label count does not match point count");
  }
}

// Member indices of each structured cluster, indexed 0..k-1 (label-1).
inline std::vector<std::vector<Index>> cluster_members(const Clustering& c) {
  validate_clustering(c);
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(c.k));
  for (Index i = 0; i < c.size(); ++i) {
    int label = c.labels[static_cast<std::size_t>(i)];
    if (label != kNoiseLabel) members[static_cast<std::size_t>(label - 1)].push_back(i);
  }
  return members;
}

inline std::vector<Index> noise_members(const Clustering& c) {
  std::vector<Index> noise;
  for (Index i = 0; i < c.size(); ++i) {
    if (c.labels[static_cast<std::size_t>(i)] == kNoiseLabel) noise.push_back(i);
  }
  return noise;
}

// D_ij = ||x_i - x_j||^2; symmetric, zero diagonal.
inline Matrix squared_distance_matrix(const PointSet& points) {
  const Index n = points.size();
  Matrix d(n, n);
  for (Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Index j = i + 1; j < n; ++j) {
      double v = (points.row(i) - points.row(j)).squaredNorm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

// m(X) = min_{x != y} ||x - y||^2.
inline double min_pairwise_sq_distance(const PointSet& points) {
  const Index n = points.size();
  if (n < 2) throw std::invalid_argument("min_pairwise_sq_distance: need N >= 2");
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      best = std::min(best, (points.row(i) - points.row(j)).squaredNorm());
    }
  }
  return best;
}

// min_c sum ||x - c||^2 over the given members. Computed from the centroid and
// cross-checked against the pairwise identity (1/(2|C|)) sum_{x,y} ||x-y||^2;
// a disagreement beyond 1e-9 relative indicates corrupted arithmetic and throws.
inline double within_cluster_sse(const PointSet& points, std::span<const Index> members) {
  if (members.empty()) throw std::invalid_argument("within_cluster_sse: empty member set");
  const Index m = static_cast<Index>(members.size());
  for (Index idx : members) {
    if (idx < 0 || idx >= points.size()) {
      throw std::invalid_argument("within_cluster_sse: member index out of range");
    }
  }

  Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(points.dim());
  for (Index idx : members) centroid += points.row(idx);
  centroid /= static_cast<double>(m);

  double sse = 0.0;
  for (Index idx : members) sse += (points.row(idx) - centroid).squaredNorm();

  double pairwise = 0.0;
  for (Index a = 0; a < m; ++a) {
    for (Index b = a + 1; b < m; ++b) {
      pairwise += (points.row(members[static_cast<std::size_t>(a)]) -
                   points.row(members[static_cast<std::size_t>(b)]))
                      .squaredNorm();
    }
  }
  pairwise /= static_cast<double>(m);

  if (std::abs(sse - pairwise) > 1e-9 * std::max(1.0, std::abs(sse))) {
    throw std::logic_error("within_cluster_sse: centroid and pairwise forms disagree");
  }
  return sse;
}

// sum_i SSE(C_i) + lambda * |noise|; empty structured clusters contribute 0.
inline double regularised_cost(const PointSet& points, const Clustering& c, double lambda) {
  validate_clustering(c, points.size());
  if (lambda < 0.0) throw std::invalid_argument("regularised_cost: lambda must be >= 0");
  double cost = 0.0;
  for (const auto& members : cluster_members(c)) {
    if (!members.empty()) cost += within_cluster_sse(points, members);
  }
  const auto noise = noise_members(c);
  if (!noise.empty()) cost += lambda * static_cast<double>(noise.size());
  return cost;
}

namespace detail {

// Pair-counting summary via contingency counts: number of co-clustered pairs
// in a, in b, and in both. Noise participates as an ordinary label.
struct PairCounts {
  std::uint64_t same_a = 0;
  std::uint64_t same_b = 0;
  std::uint64_t same_both = 0;
  std::uint64_t total = 0;
};

inline std::uint64_t choose2(std::uint64_t n) { return n * (n - 1) / 2; }

inline PairCounts pair_counts(const Clustering& a, const Clustering& b) {
  validate_clustering(a);
  validate_clustering(b);
  if (a.size() != b.size()) {
    throw std::invalid_argument("pair_counts: clusterings label different point counts");
  }
  const auto n = static_cast<std::uint64_t>(a.size());
  std::map<int, std::uint64_t> count_a, count_b;
  std::map<std::pair<int, int>, std::uint64_t> count_ab;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    ++count_a[a.labels[i]];
    ++count_b[b.labels[i]];
    ++count_ab[{a.labels[i], b.labels[i]}];
  }
  PairCounts pc;
  pc.total = choose2(n);
  for (const auto& [label, cnt] : count_a) pc.same_a += choose2(cnt);
  for (const auto& [label, cnt] : count_b) pc.same_b += choose2(cnt);
  for (const auto& [labels, cnt] : count_ab) pc.same_both += choose2(cnt);
  return pc;
}

}  // namespace detail

// Delta(a, b): fraction of point pairs co-clustered in exactly one of a, b.
// Returns 0 when N < 2 (no pairs exist).
inline double clustering_distance(const Clustering& a, const Clustering& b) {
  const auto pc = detail::pair_counts(a, b);
  if (pc.total == 0) return 0.0;
  const std::uint64_t differing = pc.same_a + pc.same_b - 2 * pc.same_both;
  return static_cast<double>(differing) / static_cast<double>(pc.total);
}

// Clustering of the subset preserving labels and k.
inline Clustering restrict_clustering(const Clustering& c, std::span<const Index> subset) {
  validate_clustering(c);
  std::vector<Index> seen(subset.begin(), subset.end());
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
    throw std::invalid_argument("restrict_clustering: subset indices must be distinct");
  }
  Clustering out;
  out.k = c.k;
  out.labels.reserve(subset.size());
  for (Index idx : subset) {
    if (idx < 0 || idx >= c.size()) {
      throw std::invalid_argument("restrict_clustering: index out of range");
    }
    out.labels.push_back(c.labels[static_cast<std::size_t>(idx)]);
  }
  return out;
}

// Delta between the full-data clustering restricted to clean_indices and the
// clustering computed on the clean data alone.
inline double gamma_robustness(const Clustering& full_result, const Clustering& clean_result,
                               std::span<const Index> clean_indices) {
  if (clean_result.size() != static_cast<Index>(clean_indices.size())) {
    throw std::invalid_argument("gamma_robustness: clean result does not label the subset");
  }
  return clustering_distance(restrict_clustering(full_result, clean_indices), clean_result);
}

// Pairwise precision/recall/f1 of candidate against reference.
// Convention: a candidate with no co-clustered pair has precision 1.
// A reference with no co-clustered pair leaves recall undefined and throws.
inline PairMetrics pair_metrics(const Clustering& candidate, const Clustering& reference) {
  const auto pc = detail::pair_counts(candidate, reference);
  if (pc.same_b == 0) {
    throw std::invalid_argument("pair_metrics: reference has no co-clustered pair");
  }
  PairMetrics pm;
  pm.precision = pc.same_a == 0
                     ? 1.0
                     : static_cast<double>(pc.same_both) / static_cast<double>(pc.same_a);
  pm.recall = static_cast<double>(pc.same_both) / static_cast<double>(pc.same_b);
  pm.f1 = (pm.precision + pm.recall) > 0.0
              ? 2.0 * pm.precision * pm.recall / (pm.precision + pm.recall)
              : 0.0;
  return pm;
}

}  // namespace rkm
