#pragma once

// Reduction from clique existence to regularised 1-means, plus the
// brute-force oracle that validates the correspondence at desk scale.
//
// A graph on n vertices maps to n points whose squared distances are 1
// across edges and 1 + delta across non-edges (0 < n*delta < 1). At the
// penalty lambda0 = m(X)/2 + 1/(4n^3), growing a clique is always worth one
// more member while absorbing any non-edge is not, so the optimal subset is
// a maximum clique and its cost is (q-1)/2 + lambda0*(n-q) for clique size
// q. The (q-1)/2 constant is the pairwise identity evaluated at unit mutual
// distance; a (q-1)/4 variant sometimes quoted for this reduction fails
// oracle calibration by a factor of two.

#include "rkm/core.hpp"

#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>

namespace rkm {

struct Graph {
  int n_vertices = 0;
  std::set<std::pair<int, int>> edges;  // normalized u < v, zero-indexed
};

inline void validate_graph(const Graph& g) {
  if (g.n_vertices < 1) throw std::invalid_argument("Graph: need at least one vertex");
  for (const auto& [u, v] : g.edges) {
    if (u == v) throw std::invalid_argument("Graph: self-loop");
    if (u < 0 || v < 0 || u >= g.n_vertices || v >= g.n_vertices || u > v) {
      throw std::invalid_argument("Graph: edge endpoint out of range");
    }
  }
}

inline void add_edge(Graph& g, int u, int v) {
  if (u == v) throw std::invalid_argument("Graph: self-loop");
  if (u < 0 || v < 0 || u >= g.n_vertices || v >= g.n_vertices) {
    throw std::invalid_argument("Graph: edge endpoint out of range");
  }
  g.edges.emplace(std::min(u, v), std::max(u, v));
}

inline bool has_edge(const Graph& g, int u, int v) {
  return g.edges.count({std::min(u, v), std::max(u, v)}) > 0;
}

// Edge-list text format: first line "n m", then m lines "u v", 1-indexed.
inline Graph parse_graph(std::istream& in) {
  int n = 0, m = 0;
  if (!(in >> n >> m)) throw std::invalid_argument("graph parse: missing header");
  if (n < 1 || m < 0) throw std::invalid_argument("graph parse: bad header");
  Graph g;
  g.n_vertices = n;
  for (int e = 0; e < m; ++e) {
    int u = 0, v = 0;
    if (!(in >> u >> v)) throw std::invalid_argument("graph parse: truncated edge list");
    if (u < 1 || v < 1 || u > n || v > n) {
      throw std::invalid_argument("graph parse: vertex out of range");
    }
    add_edge(g, u - 1, v - 1);
  }
  return g;
}

struct ReducedInstance {
  PointSet points;
  double lambda0 = 0.0;
  double delta_param = 0.0;
};

inline ReducedInstance build_instance(const Graph& g,
                                      std::optional<double> delta_param = std::nullopt) {
  validate_graph(g);
  const Index n = g.n_vertices;
  const double delta = delta_param.value_or(1.0 / (2.0 * static_cast<double>(n)));
  if (!(delta > 0.0) || !(static_cast<double>(n) * delta < 1.0)) {
    throw std::invalid_argument("build_instance: need 0 < n*delta < 1");
  }

  Matrix target(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) {
        target(i, j) = 0.0;
      } else {
        target(i, j) = has_edge(g, static_cast<int>(i), static_cast<int>(j)) ? 1.0 : 1.0 + delta;
      }
    }
  }

  // Classical embedding: the centered Gram matrix -J D J / 2 of a Euclidean
  // squared-distance matrix is PSD; its eigendecomposition recovers
  // coordinates, one dimension per vertex.
  const Matrix centering =
      Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  const Matrix gram = -0.5 * centering * target * centering;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("build_instance: eigendecomposition failed");
  }
  Matrix coords = eig.eigenvectors();
  for (Index j = 0; j < n; ++j) {
    coords.col(j) *= std::sqrt(std::max(0.0, eig.eigenvalues()(j)));
  }

  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double realized = (coords.row(i) - coords.row(j)).squaredNorm();
      if (std::abs(realized - target(i, j)) > 1e-8) {
        throw std::runtime_error("build_instance: embedding audit failed");
      }
    }
  }

  ReducedInstance instance{PointSet(std::move(coords)), 0.0, delta};
  const double min_sq = g.edges.empty() ? 1.0 + delta : 1.0;
  instance.lambda0 =
      min_sq / 2.0 + 1.0 / (4.0 * std::pow(static_cast<double>(n), 3));
  return instance;
}

struct BruteForce1MeansResult {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<Index> subset;
};

// Exact minimiser of SSE(subset) + lambda*(N - |subset|) over nonempty
// subsets. Ties prefer larger subsets, then lexicographically smaller ones.
inline BruteForce1MeansResult brute_force_reg_1means(const PointSet& points, double lambda) {
  const Index n = points.size();
  if (n < 1) throw std::invalid_argument("brute_force_reg_1means: empty point set");
  if (n > 20) throw std::invalid_argument("brute_force_reg_1means: N too large");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("brute_force_reg_1means: lambda must be finite positive");
  }
  const Matrix d = squared_distance_matrix(points);

  BruteForce1MeansResult best;
  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    const int size = __builtin_popcount(mask);
    double pair_sum = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (!(mask & (1u << i))) continue;
      for (Index j = i + 1; j < n; ++j) {
        if (mask & (1u << j)) pair_sum += d(i, j);
      }
    }
    const double cost = pair_sum / static_cast<double>(size) +
                        lambda * static_cast<double>(n - size);
    // Lexicographic order on ascending index lists: at the lowest differing
    // bit, the preferred mask is the one that contains it.
    const std::uint32_t low_diff = (mask ^ best_mask) & -(mask ^ best_mask);
    const bool better =
        cost < best.cost ||
        (cost == best.cost && (size > __builtin_popcount(best_mask) ||
                               (size == __builtin_popcount(best_mask) && (mask & low_diff))));
    if (better) {
      best.cost = cost;
      best_mask = mask;
    }
  }
  best.subset.clear();
  for (Index i = 0; i < n; ++i) {
    if (best_mask & (1u << i)) best.subset.push_back(i);
  }
  return best;
}

inline bool clique_decision(const Graph& g, int q) {
  validate_graph(g);
  const int n = g.n_vertices;
  if (n > 20) throw std::invalid_argument("clique_decision: graph too large for the oracle");
  if (q <= 1) return q <= n;  // singletons are cliques
  if (q > n) return false;

  const auto instance = build_instance(g);
  const auto best = brute_force_reg_1means(instance.points, instance.lambda0);
  // A q-clique subset costs exactly (q-1)/2 + lambda0*(n-q); every subset
  // that is not a clique of size >= q lands at least ~delta/n^2 above it.
  const double threshold = static_cast<double>(q - 1) / 2.0 +
                           instance.lambda0 * static_cast<double>(n - q) + 1e-9;
  return best.cost <= threshold;
}

}  // namespace rkm
