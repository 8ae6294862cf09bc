#pragma once

// Planted-instance generation under the stochastic ball model: k unit balls
// with centers separated by at least delta, plus three structured noise kinds
// (margin noise with alpha-gapped center distances, far noise at a directed
// multiple of delta from every structured point, uniform box noise), and the
// instance statistics the recovery thresholds are stated in.

#include "rkm/core.hpp"

#include <cstdint>
#include <random>

namespace rkm {

struct BallModelConfig {
  int k = 1;
  int d = 2;
  int n = 1;           // points per ball
  double delta = 3.0;  // center separation in units of the (unit) ball radius
  std::uint64_t seed = 0;
};

struct NoiseConfig {
  int m_far = 0;
  double far_factor = 2.0;  // far noise keeps distance >= far_factor*delta to structure
  int m_near = 0;
  double margin_alpha = 0.0;
  int m_uniform = 0;
  double box_scale = 1.5;
  std::uint64_t seed = 0;
};

struct GroundTruth {
  Matrix centers;  // k x d
  std::vector<std::vector<Index>> ball_members;
  std::vector<Index> near_noise;     // N1
  std::vector<Index> far_noise;      // N2
  std::vector<Index> uniform_noise;  // box noise of the simulation protocol
  double delta = 0.0;                // realized min center separation (config value when k = 1)
};

struct Instance {
  PointSet points;
  GroundTruth truth;
};

struct InstanceStats {
  Index n_min = 0;         // min ball size
  double rho = 1.0;        // N_structured / (n_min * k)
  double theta = 0.0;      // mean ||x - mu_ball(x)||^2 over structured points
  double sigma_max_sq = 0.0;  // largest eigenvalue of I'^T I', rows x - mu_ball(x)
};

struct AuditReport {
  bool passed = false;
  double max_ball_radius = 0.0;
  double min_center_gap = 0.0;     // infinity when k = 1
  double min_far_gap = 0.0;        // min distance far noise to structure; infinity if none
  double min_margin_gap = 0.0;     // min alpha-gap over margin noise; infinity if none
  bool uniform_in_box = true;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
}

inline Eigen::RowVectorXd unit_direction(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::RowVectorXd v(d);
  double norm = 0.0;
  do {
    for (int i = 0; i < d; ++i) v(i) = gauss(rng);
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

// Bounding box of the centers: per-dimension midpoint and half-width.
struct Box {
  Eigen::RowVectorXd mid;
  Eigen::RowVectorXd half;
};

inline Box center_box(const Matrix& centers, double pad, double min_half) {
  Box box;
  box.mid = (centers.colwise().maxCoeff() + centers.colwise().minCoeff()) / 2.0;
  box.half = (centers.colwise().maxCoeff() - centers.colwise().minCoeff()) / 2.0;
  for (Index j = 0; j < box.half.size(); ++j) {
    box.half(j) = std::max(box.half(j), min_half) + pad;
  }
  return box;
}

}  // namespace detail

// k centers with pairwise distance >= delta: first at the origin, the rest
// rejection-sampled on spheres whose radius grows as the budget is consumed.
inline Matrix place_centers(int k, int d, double delta, std::uint64_t seed) {
  if (k < 1 || d < 1) throw std::invalid_argument("place_centers: need k >= 1, d >= 1");
  if (!(delta > 0.0)) throw std::invalid_argument("place_centers: delta must be positive");
  Matrix centers = Matrix::Zero(k, d);
  std::mt19937_64 rng(seed);
  constexpr long kBudget = 100000;
  long t = 0;
  for (int placed = 1; placed < k;) {
    if (t >= kBudget) {
      throw std::runtime_error("place_centers: packing rejection budget exhausted");
    }
    const double radius = delta * (1.0 + 5.0 * static_cast<double>(t) / kBudget);
    ++t;
    Eigen::RowVectorXd candidate = radius * detail::unit_direction(d, rng);
    bool ok = true;
    for (int j = 0; j < placed && ok; ++j) {
      ok = (candidate - centers.row(j)).norm() >= delta;
    }
    if (ok) {
      centers.row(placed) = candidate;
      ++placed;
    }
  }
  return centers;
}

// n i.i.d. points uniform in the unit ball around center: uniform direction,
// radius U^(1/d).
inline Matrix sample_unit_ball(const Eigen::RowVectorXd& center, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_unit_ball: need n >= 1");
  const int d = static_cast<int>(center.size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix pts(n, d);
  for (int i = 0; i < n; ++i) {
    Eigen::RowVectorXd dir = detail::unit_direction(d, rng);
    const double radius = std::pow(unif(rng), 1.0 / static_cast<double>(d));
    pts.row(i) = center + radius * dir;
  }
  return pts;
}

// m points in the shell [far_factor*delta + 1, far_factor*delta + 3] around the
// structured centroid, each rejected until it keeps distance >= far_factor*delta
// to every structured point.
inline Matrix sample_far_noise(const Matrix& structured, double delta, int m, double far_factor,
                               std::uint64_t seed) {
  if (m < 0) throw std::invalid_argument("sample_far_noise: need m >= 0");
  const int d = static_cast<int>(structured.cols());
  Matrix pts(m, d);
  if (m == 0) return pts;
  if (structured.rows() == 0) {
    throw std::invalid_argument("sample_far_noise: structured points must exist");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Eigen::RowVectorXd centroid = structured.colwise().mean();
  const double inner = far_factor * delta + 1.0;
  const double outer = far_factor * delta + 3.0;
  constexpr int kBudget = 100000;
  for (int i = 0; i < m; ++i) {
    bool placed = false;
    for (int t = 0; t < kBudget && !placed; ++t) {
      const double radius = inner + (outer - inner) * unif(rng);
      Eigen::RowVectorXd candidate = centroid + radius * detail::unit_direction(d, rng);
      bool ok = true;
      for (Index j = 0; j < structured.rows() && ok; ++j) {
        ok = (candidate - structured.row(j)).norm() >= far_factor * delta;
      }
      if (ok) {
        pts.row(i) = candidate;
        placed = true;
      }
    }
    if (!placed) throw std::runtime_error("sample_far_noise: rejection budget exhausted");
  }
  return pts;
}

// m points in the padded center bounding box whose distances to any two
// centers differ by at least alpha. Vacuous when k = 1.
inline Matrix sample_margin_noise(const Matrix& centers, double alpha, int m,
                                  std::uint64_t seed) {
  if (m < 0) throw std::invalid_argument("sample_margin_noise: need m >= 0");
  if (alpha < 0.0) throw std::invalid_argument("sample_margin_noise: alpha must be >= 0");
  const int d = static_cast<int>(centers.cols());
  Matrix pts(m, d);
  if (m == 0) return pts;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const auto box = detail::center_box(centers, /*pad=*/2.0, /*min_half=*/0.0);
  constexpr int kBudget = 100000;
  for (int i = 0; i < m; ++i) {
    bool placed = false;
    for (int t = 0; t < kBudget && !placed; ++t) {
      Eigen::RowVectorXd candidate(d);
      for (int j = 0; j < d; ++j) candidate(j) = box.mid(j) + box.half(j) * unif(rng);
      bool ok = true;
      for (Index a = 0; a < centers.rows() && ok; ++a) {
        for (Index b = a + 1; b < centers.rows() && ok; ++b) {
          const double gap = std::abs((candidate - centers.row(a)).norm() -
                                      (candidate - centers.row(b)).norm());
          ok = gap >= alpha;
        }
      }
      if (ok) {
        pts.row(i) = candidate;
        placed = true;
      }
    }
    if (!placed) throw std::runtime_error("sample_margin_noise: rejection budget exhausted");
  }
  return pts;
}

// m points uniform in the scaled bounding box of the centers; half-widths are
// floored at 1 (a ball radius) so the box is well-defined for k = 1.
inline Matrix sample_uniform_noise(const Matrix& centers, double box_scale, int m,
                                   std::uint64_t seed) {
  if (m < 0) throw std::invalid_argument("sample_uniform_noise: need m >= 0");
  if (!(box_scale > 0.0)) throw std::invalid_argument("sample_uniform_noise: box_scale > 0");
  const int d = static_cast<int>(centers.cols());
  Matrix pts(m, d);
  if (m == 0) return pts;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const auto box = detail::center_box(centers, /*pad=*/0.0, /*min_half=*/1.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < d; ++j) {
      pts(i, j) = box.mid(j) + box_scale * box.half(j) * unif(rng);
    }
  }
  return pts;
}

// Full planted instance: balls stacked first (ball p occupies a contiguous
// index block), then margin noise, far noise, uniform noise.
inline Instance make_instance(const BallModelConfig& ball, const NoiseConfig& noise) {
  if (ball.n < 1) throw std::invalid_argument("make_instance: need n >= 1");
  GroundTruth truth;
  truth.centers = place_centers(ball.k, ball.d, ball.delta, detail::derive_seed(ball.seed, 0));
  truth.delta = ball.delta;
  if (ball.k > 1) {
    double gap = std::numeric_limits<double>::infinity();
    for (Index a = 0; a < truth.centers.rows(); ++a) {
      for (Index b = a + 1; b < truth.centers.rows(); ++b) {
        gap = std::min(gap, (truth.centers.row(a) - truth.centers.row(b)).norm());
      }
    }
    truth.delta = gap;
  }

  const Index n_structured = static_cast<Index>(ball.k) * ball.n;
  Matrix structured(n_structured, ball.d);
  truth.ball_members.resize(static_cast<std::size_t>(ball.k));
  for (int p = 0; p < ball.k; ++p) {
    Matrix blk = sample_unit_ball(truth.centers.row(p), ball.n,
                                  detail::derive_seed(ball.seed, 1 + static_cast<std::uint64_t>(p)));
    for (int i = 0; i < ball.n; ++i) {
      const Index idx = static_cast<Index>(p) * ball.n + i;
      structured.row(idx) = blk.row(i);
      truth.ball_members[static_cast<std::size_t>(p)].push_back(idx);
    }
  }

  Matrix margin = sample_margin_noise(truth.centers, noise.margin_alpha, noise.m_near,
                                      detail::derive_seed(noise.seed, 101));
  Matrix far = sample_far_noise(structured, truth.delta, noise.m_far, noise.far_factor,
                                detail::derive_seed(noise.seed, 102));
  Matrix uniform = sample_uniform_noise(truth.centers, noise.box_scale, noise.m_uniform,
                                        detail::derive_seed(noise.seed, 103));

  const Index total = n_structured + margin.rows() + far.rows() + uniform.rows();
  Matrix coords(total, ball.d);
  coords.topRows(n_structured) = structured;
  Index at = n_structured;
  for (Index i = 0; i < margin.rows(); ++i, ++at) {
    coords.row(at) = margin.row(i);
    truth.near_noise.push_back(at);
  }
  for (Index i = 0; i < far.rows(); ++i, ++at) {
    coords.row(at) = far.row(i);
    truth.far_noise.push_back(at);
  }
  for (Index i = 0; i < uniform.rows(); ++i, ++at) {
    coords.row(at) = uniform.row(i);
    truth.uniform_noise.push_back(at);
  }
  return Instance{PointSet{std::move(coords)}, std::move(truth)};
}

// Planted labels: ball p gets label p+1, every noise kind gets the sentinel.
inline Clustering ground_truth_clustering(const GroundTruth& truth, Index n_points) {
  Clustering c;
  c.k = static_cast<int>(truth.ball_members.size());
  c.labels.assign(static_cast<std::size_t>(n_points), kNoiseLabel);
  for (std::size_t p = 0; p < truth.ball_members.size(); ++p) {
    for (Index idx : truth.ball_members[p]) {
      c.labels.at(static_cast<std::size_t>(idx)) = static_cast<int>(p) + 1;
    }
  }
  return c;
}

inline InstanceStats instance_stats(const Instance& instance) {
  const auto& truth = instance.truth;
  const auto& pts = instance.points;
  InstanceStats stats;
  Index n_structured = 0;
  stats.n_min = std::numeric_limits<Index>::max();
  for (const auto& members : truth.ball_members) {
    stats.n_min = std::min(stats.n_min, static_cast<Index>(members.size()));
    n_structured += static_cast<Index>(members.size());
  }
  if (truth.ball_members.empty() || stats.n_min == 0) {
    throw std::invalid_argument("instance_stats: every ball must be nonempty");
  }
  const auto k = static_cast<double>(truth.ball_members.size());
  stats.rho = static_cast<double>(n_structured) / (static_cast<double>(stats.n_min) * k);

  Matrix centered(n_structured, pts.dim());
  Index at = 0;
  double theta_acc = 0.0;
  for (std::size_t p = 0; p < truth.ball_members.size(); ++p) {
    for (Index idx : truth.ball_members[p]) {
      centered.row(at) = pts.row(idx) - truth.centers.row(static_cast<Index>(p));
      theta_acc += centered.row(at).squaredNorm();
      ++at;
    }
  }
  stats.theta = theta_acc / static_cast<double>(n_structured);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(centered.transpose() * centered);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("instance_stats: eigendecomposition failed");
  }
  stats.sigma_max_sq = eig.eigenvalues().maxCoeff();
  return stats;
}

// Re-derive every generation guarantee from the realized coordinates.
inline AuditReport audit_instance(const Instance& instance, const BallModelConfig& ball,
                                  const NoiseConfig& noise) {
  const auto& truth = instance.truth;
  const auto& pts = instance.points;
  AuditReport report;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr double kSlack = 1e-12;

  report.max_ball_radius = 0.0;
  for (std::size_t p = 0; p < truth.ball_members.size(); ++p) {
    for (Index idx : truth.ball_members[p]) {
      report.max_ball_radius = std::max(
          report.max_ball_radius, (pts.row(idx) - truth.centers.row(static_cast<Index>(p))).norm());
    }
  }

  report.min_center_gap = kInf;
  for (Index a = 0; a < truth.centers.rows(); ++a) {
    for (Index b = a + 1; b < truth.centers.rows(); ++b) {
      report.min_center_gap =
          std::min(report.min_center_gap, (truth.centers.row(a) - truth.centers.row(b)).norm());
    }
  }

  report.min_far_gap = kInf;
  for (Index idx : truth.far_noise) {
    for (const auto& members : truth.ball_members) {
      for (Index j : members) {
        report.min_far_gap = std::min(report.min_far_gap, (pts.row(idx) - pts.row(j)).norm());
      }
    }
  }

  report.min_margin_gap = kInf;
  for (Index idx : truth.near_noise) {
    for (Index a = 0; a < truth.centers.rows(); ++a) {
      for (Index b = a + 1; b < truth.centers.rows(); ++b) {
        const double gap = std::abs((pts.row(idx) - truth.centers.row(a)).norm() -
                                    (pts.row(idx) - truth.centers.row(b)).norm());
        report.min_margin_gap = std::min(report.min_margin_gap, gap);
      }
    }
  }

  report.uniform_in_box = true;
  if (!truth.uniform_noise.empty()) {
    const auto box = detail::center_box(truth.centers, /*pad=*/0.0, /*min_half=*/1.0);
    for (Index idx : truth.uniform_noise) {
      for (Index j = 0; j < pts.dim(); ++j) {
        if (std::abs(pts.coords()(idx, j) - box.mid(j)) > noise.box_scale * box.half(j) + kSlack) {
          report.uniform_in_box = false;
        }
      }
    }
  }

  report.passed = report.max_ball_radius <= 1.0 + kSlack &&
                  report.min_center_gap >= ball.delta - kSlack &&
                  report.min_far_gap >= noise.far_factor * truth.delta - kSlack &&
                  (truth.near_noise.empty() || report.min_margin_gap >= noise.margin_alpha - kSlack) &&
                  report.uniform_in_box;
  return report;
}

}  // namespace rkm
