#pragma once

// Explicit dual certificates that prove a candidate integral clustering
// optimal for the convex relaxations, plus the separation thresholds and
// penalty windows from the recovery analysis.
//
// SDP certificate: dual variables (z, alpha, beta) assembled around the
// candidate partition with empirical centroids. Q = D + zI +
// (alpha 1^T + 1 alpha^T)/2 - beta annihilates every cluster indicator, and
// on the orthogonal complement v^T Q v = z||b||^2 - 2||X'^T b||^2, so Q is
// PSD exactly when z >= 2 sigma_max^2(X') with X' the centroid-subtracted
// structured points. beta >= 0 caps z from above; the construction picks the
// midpoint of the window (existence is all the analysis needs, the midpoint
// maximizes numerical slack). beta is completed symmetrically across each
// (p,q) block pair; a one-sided row completion makes Q indefinite.
//
// Regularised case: noise coordinates get alpha = -lambda, the noise-noise
// beta block equals D there (zeroing that block of Q except z I - lambda 11^T,
// PSD iff z >= lambda * |noise|), and cross blocks are chosen to cancel
// exactly. The penalty dual gamma = alpha + lambda >= 0 and the cross-block
// nonnegativity add caps to the z window.
//
// LP certificate: alpha_a = (gamma + sum of squared distances within a's
// cluster)/n_i, alpha_noise = lambda, with gamma picked from the window the
// three inequality families leave open. Dual value Sum(alpha) - k*gamma
// equals the primal identically.

#include "rkm/core.hpp"
#include "rkm/synth.hpp"

#include <array>
#include <optional>
#include <string>

namespace rkm {

struct SdpDualCertificate {
  double z = 0.0;
  Vector alpha;
  Matrix beta;
  Matrix Q;
  double lambda = std::numeric_limits<double>::infinity();
  double z_lower = 0.0;  // feasible window computed during construction
  double z_upper = std::numeric_limits<double>::infinity();
};

struct CertificateReport {
  double duality_gap = 0.0;
  double min_eig_q = 0.0;
  double min_beta = 0.0;
  bool lambda_feasible = true;
  bool certified = false;
  std::string verdict;  // "CERTIFIED" or "FAILED(reason,...)"

  double primal_value = 0.0;
  double dual_value = 0.0;
  double complementary_slackness = 0.0;
  double reconstruction_error = 0.0;
  std::array<double, 2> lambda_window{0.0, 0.0};
  double realized_delta = 0.0;
  double z = 0.0;      // SDP dual of the trace constraint
  double gamma = 0.0;  // LP dual of the diagonal-sum constraint
};

struct ThresholdReport {
  double delta_threshold_distfree = 0.0;
  double delta_threshold_stochastic = 0.0;
  double alpha_threshold = 0.0;
  double n2_budget = 0.0;  // admissible |N2|/n at the window's lower endpoint
  std::array<double, 2> lambda_window{0.0, 0.0};
  double nu_appendix = 0.0;  // sqrt(1 + (delta-1)^2), keeps the window nonempty
  double nu_main = 0.0;      // 2*delta, the main-text far-noise convention
};

namespace detail {

struct PartitionDigest {
  std::vector<std::vector<Index>> clusters;  // all nonempty
  std::vector<Index> noise;
  std::vector<Vector> centroids;
  Vector dev_sq;                // squared distance to own centroid, 0 for noise
  std::vector<int> cluster_of;  // -1 for noise
};

inline PartitionDigest digest_partition(const PointSet& points, const Clustering& c,
                                        bool allow_noise) {
  validate_clustering(c, points.size());
  if (c.k < 1) throw std::invalid_argument("certificate: need at least one cluster");
  PartitionDigest digest;
  digest.clusters = cluster_members(c);
  for (const auto& cluster : digest.clusters) {
    if (cluster.empty()) throw std::invalid_argument("certificate: empty cluster");
  }
  digest.noise = noise_members(c);
  if (!allow_noise && !digest.noise.empty()) {
    throw std::invalid_argument("certificate: partition must not contain noise");
  }
  digest.dev_sq = Vector::Zero(points.size());
  digest.cluster_of.assign(static_cast<std::size_t>(points.size()), -1);
  for (std::size_t p = 0; p < digest.clusters.size(); ++p) {
    Vector mean = Vector::Zero(points.dim());
    for (Index i : digest.clusters[p]) mean += points.coords().row(i).transpose();
    mean /= static_cast<double>(digest.clusters[p].size());
    for (Index i : digest.clusters[p]) {
      digest.dev_sq(i) = (points.coords().row(i).transpose() - mean).squaredNorm();
      digest.cluster_of[static_cast<std::size_t>(i)] = static_cast<int>(p);
    }
    digest.centroids.push_back(std::move(mean));
  }
  return digest;
}

// Largest eigenvalue of X'^T X' where X' stacks the centroid-subtracted
// structured points; the exact PSD threshold for the structured block is 2x.
inline double structured_spectral_bound(const PointSet& points, const PartitionDigest& digest) {
  Index rows = 0;
  for (const auto& cluster : digest.clusters) rows += static_cast<Index>(cluster.size());
  Matrix deviations(rows, points.dim());
  Index at = 0;
  for (std::size_t p = 0; p < digest.clusters.size(); ++p) {
    for (Index i : digest.clusters[p]) {
      deviations.row(at++) =
          points.coords().row(i) - digest.centroids[p].transpose();
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(deviations.transpose() * deviations,
                                            Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("certificate: spectral bound eigendecomposition failed");
  }
  return std::max(0.0, eig.eigenvalues().maxCoeff());
}

// Separation in ball-radius units realized by the partition itself: the
// smallest centroid gap over the largest within-cluster radius.
inline double realized_separation(const PartitionDigest& digest) {
  if (digest.clusters.size() < 2) return std::numeric_limits<double>::infinity();
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < digest.centroids.size(); ++p) {
    for (std::size_t q = p + 1; q < digest.centroids.size(); ++q) {
      min_gap = std::min(min_gap, (digest.centroids[p] - digest.centroids[q]).norm());
    }
  }
  double max_radius = 0.0;
  for (const auto& cluster : digest.clusters) {
    for (Index i : cluster) max_radius = std::max(max_radius, std::sqrt(digest.dev_sq(i)));
  }
  if (max_radius <= 0.0) return std::numeric_limits<double>::infinity();
  return min_gap / max_radius;
}

inline SdpDualCertificate construct_dual(const PointSet& points, const Clustering& partition,
                                         double lambda, std::optional<double> z_choice,
                                         bool allow_noise) {
  const auto digest = digest_partition(points, partition, allow_noise);
  const Index n = points.size();
  const Matrix d = squared_distance_matrix(points);
  const auto& clusters = digest.clusters;
  const std::size_t k = clusters.size();
  const std::size_t m_noise = digest.noise.size();
  const bool regularised = std::isfinite(lambda);

  SdpDualCertificate cert;
  cert.lambda = lambda;

  cert.z_lower = 2.0 * structured_spectral_bound(points, digest);
  if (regularised) {
    cert.z_lower = std::max(cert.z_lower, lambda * static_cast<double>(m_noise));
  }
  cert.z_upper = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < k; ++p) {
    const double np = static_cast<double>(clusters[p].size());
    for (std::size_t q = 0; q < k; ++q) {
      if (q == p) continue;
      const double nq = static_cast<double>(clusters[q].size());
      const Vector gap = digest.centroids[p] - digest.centroids[q];
      double min_p = std::numeric_limits<double>::infinity();
      for (Index r : clusters[p]) {
        min_p = std::min(min_p, (points.coords().row(r).transpose() - digest.centroids[p])
                                    .dot(gap));
      }
      double max_q = -std::numeric_limits<double>::infinity();
      for (Index s : clusters[q]) {
        max_q = std::max(max_q, (points.coords().row(s).transpose() - digest.centroids[q])
                                    .dot(gap));
      }
      const double worst = gap.squaredNorm() + 2.0 * (min_p - max_q);
      cert.z_upper = std::min(cert.z_upper, worst * 2.0 * np * nq / (np + nq));
    }
    if (regularised) {
      for (Index i : clusters[p]) {
        cert.z_upper = std::min(cert.z_upper, np * (lambda - 2.0 * digest.dev_sq(i)));
        for (Index j : digest.noise) {
          cert.z_upper = std::min(
              cert.z_upper, 2.0 * np * (d(i, j) - lambda / 2.0 - digest.dev_sq(i)));
        }
      }
    }
  }
  if (z_choice.has_value()) {
    cert.z = *z_choice;
  } else if (std::isfinite(cert.z_upper)) {
    cert.z = 0.5 * (cert.z_lower + cert.z_upper);
  } else {
    cert.z = cert.z_lower + std::max(1.0, cert.z_lower);
  }

  cert.alpha = Vector::Zero(n);
  for (std::size_t p = 0; p < k; ++p) {
    const double np = static_cast<double>(clusters[p].size());
    for (Index i : clusters[p]) cert.alpha(i) = -2.0 * digest.dev_sq(i) - cert.z / np;
  }
  for (Index j : digest.noise) cert.alpha(j) = -lambda;

  cert.beta = Matrix::Zero(n, n);
  for (std::size_t p = 0; p < k; ++p) {
    const double np = static_cast<double>(clusters[p].size());
    for (std::size_t q = 0; q < k; ++q) {
      if (q == p) continue;
      const double nq = static_cast<double>(clusters[q].size());
      const Vector gap = digest.centroids[p] - digest.centroids[q];
      const double base = gap.squaredNorm() - cert.z / (2.0 * np) - cert.z / (2.0 * nq);
      for (Index r : clusters[p]) {
        const double fr =
            2.0 * (points.coords().row(r).transpose() - digest.centroids[p]).dot(gap);
        for (Index s : clusters[q]) {
          const double fs =
              -2.0 * (points.coords().row(s).transpose() - digest.centroids[q]).dot(gap);
          cert.beta(r, s) = base + fr + fs;
        }
      }
    }
    if (regularised) {
      for (Index r : clusters[p]) {
        for (Index s : digest.noise) {
          const double b = d(r, s) - digest.dev_sq(r) - cert.z / (2.0 * np) - lambda / 2.0;
          cert.beta(r, s) = b;
          cert.beta(s, r) = b;
        }
      }
    }
  }
  for (Index i : digest.noise) {
    for (Index j : digest.noise) cert.beta(i, j) = d(i, j);
  }

  cert.Q = d + cert.z * Matrix::Identity(n, n) +
           0.5 * (cert.alpha * Eigen::RowVectorXd::Ones(n) +
                  Vector::Ones(n) * cert.alpha.transpose()) -
           cert.beta;
  return cert;
}

}  // namespace detail

inline SdpDualCertificate construct_dual_noiseless(
    const PointSet& points, const Clustering& partition,
    std::optional<double> z_choice = std::nullopt) {
  return detail::construct_dual(points, partition,
                                std::numeric_limits<double>::infinity(), z_choice,
                                /*allow_noise=*/false);
}

inline SdpDualCertificate construct_dual_regularised(
    const PointSet& points, const Clustering& partition, double lambda,
    std::optional<double> z_choice = std::nullopt) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("construct_dual_regularised: lambda must be finite positive");
  }
  return detail::construct_dual(points, partition, lambda, z_choice, /*allow_noise=*/true);
}

// The penalty window of the regularised recovery analysis.
inline std::array<double, 2> lambda_window_for(double delta) {
  return {(delta - 1.0) * (delta - 1.0) + 1.0, delta * delta + 2.0 * delta};
}

inline CertificateReport verify(const SdpDualCertificate& cert, const PointSet& points,
                                const Clustering& partition, double lambda,
                                std::optional<double> planted_delta = std::nullopt) {
  const Index n = points.size();
  if (cert.alpha.size() != n || cert.beta.rows() != n || cert.beta.cols() != n ||
      cert.Q.rows() != n || cert.Q.cols() != n) {
    throw std::invalid_argument("verify: certificate dimensions do not match points");
  }
  const auto digest = detail::digest_partition(points, partition, /*allow_noise=*/true);
  const std::size_t m_noise = digest.noise.size();
  if (!std::isfinite(lambda) && m_noise > 0) {
    throw std::invalid_argument("verify: noise in the partition requires finite lambda");
  }
  const Matrix d = squared_distance_matrix(points);

  CertificateReport report;
  report.z = cert.z;

  double primal = 0.0;
  for (const auto& cluster : digest.clusters) {
    double block = 0.0;
    for (Index a : cluster) {
      for (Index b : cluster) block += d(a, b);
    }
    primal += block / static_cast<double>(cluster.size());
  }
  if (m_noise > 0) primal += lambda * static_cast<double>(m_noise);
  const double dual = -cert.z * static_cast<double>(digest.clusters.size()) - cert.alpha.sum();
  report.primal_value = primal;
  report.dual_value = dual;
  report.duality_gap = std::abs(primal - dual) / std::max(1.0, std::abs(primal));

  Eigen::SelfAdjointEigenSolver<Matrix> eig((cert.Q + cert.Q.transpose()) / 2.0,
                                            Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("verify: eigendecomposition failed");
  }
  report.min_eig_q = eig.eigenvalues().minCoeff();
  report.min_beta = cert.beta.minCoeff();

  // Complementary slackness on the candidate Z*: beta must vanish on the
  // support of the intended solution (the diagonal cluster blocks).
  double slack = 0.0;
  for (const auto& cluster : digest.clusters) {
    const double w = 1.0 / static_cast<double>(cluster.size());
    for (Index a : cluster) {
      for (Index b : cluster) slack = std::max(slack, std::abs(cert.beta(a, b) * w));
    }
  }
  report.complementary_slackness = slack;

  const Matrix rebuilt = d + cert.z * Matrix::Identity(n, n) +
                         0.5 * (cert.alpha * Eigen::RowVectorXd::Ones(n) +
                                Vector::Ones(n) * cert.alpha.transpose()) -
                         cert.beta;
  report.reconstruction_error = (cert.Q - rebuilt).cwiseAbs().maxCoeff();

  report.realized_delta = planted_delta.value_or(detail::realized_separation(digest));
  report.lambda_window = lambda_window_for(report.realized_delta);
  bool noise_block_ok = true;
  if (std::isfinite(lambda)) {
    report.lambda_feasible = true;
    for (const auto& cluster : digest.clusters) {
      for (Index i : cluster) {
        if (cert.alpha(i) + lambda < -1e-8) report.lambda_feasible = false;
      }
    }
    if (digest.clusters.size() >= 2 || planted_delta.has_value()) {
      if (lambda < report.lambda_window[0] - 1e-9 ||
          lambda > report.lambda_window[1] + 1e-9) {
        report.lambda_feasible = false;
      }
    }
    if (m_noise > 0) {
      noise_block_ok = cert.z >= lambda * static_cast<double>(m_noise) - 1e-6;
    }
  }

  std::vector<std::string> failures;
  if (!(report.duality_gap <= 1e-5)) failures.push_back("duality_gap");
  if (!(report.min_eig_q >= -1e-6)) failures.push_back("min_eig_q");
  if (!(report.min_beta >= -1e-8)) failures.push_back("min_beta");
  if (!report.lambda_feasible) failures.push_back("lambda_feasible");
  if (!(report.complementary_slackness <= 1e-8)) failures.push_back("complementary_slackness");
  if (!(report.reconstruction_error <= 1e-8)) failures.push_back("reconstruction");
  if (!noise_block_ok) failures.push_back("noise_block");

  report.certified = failures.empty();
  if (report.certified) {
    report.verdict = "CERTIFIED";
  } else {
    report.verdict = "FAILED(";
    for (std::size_t i = 0; i < failures.size(); ++i) {
      if (i) report.verdict += ",";
      report.verdict += failures[i];
    }
    report.verdict += ")";
  }
  return report;
}

inline ThresholdReport thresholds(const InstanceStats& stats, double eps, double delta,
                                  int d, int k) {
  if (d < 1 || k < 1) throw std::invalid_argument("thresholds: need d >= 1 and k >= 1");
  if (eps < 0.0) throw std::invalid_argument("thresholds: eps must be nonnegative");
  const double inf = std::numeric_limits<double>::infinity();
  ThresholdReport report;
  report.lambda_window = lambda_window_for(delta);
  report.nu_appendix = std::sqrt(1.0 + (delta - 1.0) * (delta - 1.0));
  report.nu_main = 2.0 * delta;

  const double guard = 1.0 - 4.0 * eps * eps;
  const double n = static_cast<double>(stats.n_min);
  // Admissible |N2|/n at the window's lower endpoint; nonpositive when the
  // margin-noise fraction eps is too large, reported as-is.
  report.n2_budget =
      (delta * delta * guard - 2.0 * delta * (1.0 + 4.0 * eps)) / report.lambda_window[0];

  if (guard <= 0.0 || n <= 0.0) {
    report.delta_threshold_distfree = inf;
    report.delta_threshold_stochastic = inf;
    report.alpha_threshold = inf;
    return report;
  }
  const double margin_term = 9.0 * eps / guard;
  report.delta_threshold_distfree =
      2.0 + margin_term + std::sqrt(2.0 * stats.sigma_max_sq / (n * guard));
  report.alpha_threshold = std::sqrt(10.0 * delta * eps + 4.0 * delta * delta * eps * eps +
                                     2.0 * stats.sigma_max_sq / (n * guard));

  const double structured = stats.rho * static_cast<double>(k) * n;
  if (structured > 1.0 && std::log(structured) > 0.0) {
    const double log_boost = 1.0 + 1.0 / std::log(structured);
    report.delta_threshold_stochastic =
        2.0 + margin_term +
        std::sqrt(2.0 * stats.rho * static_cast<double>(k) * stats.theta * log_boost *
                  log_boost / (static_cast<double>(d) * guard));
  } else {
    report.delta_threshold_stochastic = inf;
  }
  return report;
}

inline CertificateReport lp_certificate(const PointSet& points, const Clustering& partition,
                                        double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lp_certificate: lambda must be finite positive");
  }
  const auto digest = detail::digest_partition(points, partition, /*allow_noise=*/true);
  const Index n = points.size();
  const Matrix d = squared_distance_matrix(points);
  const double big = std::numeric_limits<double>::infinity();
  const double slack = 1e-8 * std::max({1.0, d.maxCoeff(), lambda});

  // Row sums of squared distances within each point's own cluster.
  Vector within_sum = Vector::Zero(n);
  for (const auto& cluster : digest.clusters) {
    for (Index a : cluster) {
      for (Index b : cluster) within_sum(a) += d(a, b);
    }
  }

  // gamma window from the three inequality families.
  double gamma_lo = -big;
  double gamma_hi = big;
  for (std::size_t p = 0; p < digest.clusters.size(); ++p) {
    const double np = static_cast<double>(digest.clusters[p].size());
    for (Index a : digest.clusters[p]) {
      for (Index b : digest.clusters[p]) {
        gamma_lo = std::max(gamma_lo, np * d(a, b) - within_sum(a));
      }
      double nearest_outside = big;
      for (Index b = 0; b < n; ++b) {
        if (digest.cluster_of[static_cast<std::size_t>(b)] != static_cast<int>(p)) {
          nearest_outside = std::min(nearest_outside, d(a, b));
        }
      }
      if (std::isfinite(nearest_outside)) {
        gamma_hi = std::min(gamma_hi, np * nearest_outside - within_sum(a));
      }
      gamma_hi = std::min(gamma_hi, np * lambda - within_sum(a));
    }
  }
  for (Index c : digest.noise) {
    gamma_lo = std::max(gamma_lo, lambda * static_cast<double>(n) - d.row(c).sum());
  }

  CertificateReport report;
  report.gamma = std::isfinite(gamma_hi) ? 0.5 * (gamma_lo + gamma_hi) : gamma_lo;

  Vector alpha = Vector::Zero(n);
  for (const auto& cluster : digest.clusters) {
    const double size = static_cast<double>(cluster.size());
    for (Index a : cluster) alpha(a) = (report.gamma + within_sum(a)) / size;
  }
  for (Index c : digest.noise) alpha(c) = lambda;

  bool within_ok = true;        // within-cluster distances sit below alpha
  bool cross_ok = true;         // alpha sits below cross-cluster distances
  bool noise_distance_ok = true;  // alpha sits below structured-to-noise distances
  bool lambda_lo_ok = true;     // alpha <= lambda on structured points
  bool lambda_hi_ok = true;     // lambda*N <= gamma + total distance per noise point
  double min_beta = 0.0;
  for (std::size_t p = 0; p < digest.clusters.size(); ++p) {
    for (Index a : digest.clusters[p]) {
      for (Index b : digest.clusters[p]) {
        min_beta = std::min(min_beta, alpha(a) - d(a, b));
        if (d(a, b) > alpha(a) + slack) within_ok = false;
      }
      for (Index b = 0; b < n; ++b) {
        const int owner = digest.cluster_of[static_cast<std::size_t>(b)];
        if (owner == static_cast<int>(p)) continue;
        if (owner >= 0 && alpha(a) > d(a, b) + slack) cross_ok = false;
        if (owner < 0 && alpha(a) > d(a, b) + slack) noise_distance_ok = false;
      }
      if (alpha(a) > lambda + slack) lambda_lo_ok = false;
    }
  }
  for (Index c : digest.noise) {
    if (lambda * static_cast<double>(n) > report.gamma + d.row(c).sum() + slack) {
      lambda_hi_ok = false;
    }
  }

  double primal = 0.0;
  for (const auto& cluster : digest.clusters) {
    double block = 0.0;
    for (Index a : cluster) {
      for (Index b : cluster) block += d(a, b);
    }
    primal += block / static_cast<double>(cluster.size());
  }
  primal += lambda * static_cast<double>(digest.noise.size());
  const double dual =
      alpha.sum() - static_cast<double>(digest.clusters.size()) * report.gamma;
  report.primal_value = primal;
  report.dual_value = dual;
  report.duality_gap = std::abs(primal - dual) / std::max(1.0, std::abs(primal));
  report.min_beta = min_beta;
  report.min_eig_q = 0.0;  // the LP dual has no PSD block
  report.lambda_feasible = lambda_lo_ok && lambda_hi_ok;
  report.realized_delta = detail::realized_separation(digest);
  report.lambda_window = lambda_window_for(report.realized_delta);

  std::vector<std::string> failures;
  if (!(report.duality_gap <= 1e-5)) failures.push_back("duality_gap");
  if (!within_ok) failures.push_back("within_cluster");
  if (!cross_ok) failures.push_back("cross_cluster");
  if (!noise_distance_ok) failures.push_back("noise_distance");
  if (!lambda_lo_ok || !lambda_hi_ok) failures.push_back("lambda_sandwich");
  report.certified = failures.empty();
  if (report.certified) {
    report.verdict = "CERTIFIED";
  } else {
    report.verdict = "FAILED(";
    for (std::size_t i = 0; i < failures.size(); ++i) {
      if (i) report.verdict += ",";
      report.verdict += failures[i];
    }
    report.verdict += ")";
  }
  return report;
}

}  // namespace rkm
