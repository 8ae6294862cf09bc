#pragma once

// Convex relaxations of regularised k-means and a deterministic first-order
// splitting solver. Both relaxations minimize Tr(DZ) + lambda*<1, y>:
//   SDP: Tr(Z) = k, sym(Z)*1 + y = 1, Z >= 0, y >= 0, Z PSD.
//   LP:  sum_p z_pp = k, Z*1 + y = 1, Z >= 0, y >= 0, z_pq <= z_pp.
// lambda = infinity removes y and the penalty term (plain k-means relaxation).
//
// The solver is consensus ADMM over three projection blocks: the affine
// equalities (closed form through a precomputed Gram factorization), the
// nonnegative orthant, and the cone block (PSD projection for the SDP,
// per-row cap projection for the LP). Inputs are normalized by max(D) and y
// is equilibrated by tau = max(1, lambda/max(D)); both rescalings are exact
// and keep huge-lambda runs conditioned like the lambda = infinity run.

#include "rkm/core.hpp"

#include <array>
#include <optional>

namespace rkm {

enum class RelaxKind { SDP, LP };

struct RelaxedProblem {
  Matrix D;
  int k = 1;
  double lambda = std::numeric_limits<double>::infinity();
  RelaxKind kind = RelaxKind::SDP;

  Index n() const { return D.rows(); }
  bool has_y() const { return std::isfinite(lambda); }
};

struct SolverConfig {
  double tol = 1e-5;
  int max_iter = 20000;
  double step = 1.0;            // initial splitting penalty rho
  double over_relaxation = 1.6;
  int check_interval = 25;      // residual checkpoint cadence
  int adapt_every = 50;         // rho rebalancing cadence
  int adapt_until = 2000;       // freeze rho afterwards (avoids limit cycles)
};

struct Residuals {
  double trace = 0.0;
  double row = 0.0;
  double negativity = 0.0;
  double psd = 0.0;     // SDP only
  double rowcap = 0.0;  // LP only

  double max() const { return std::max({trace, row, negativity, psd, rowcap}); }
};

struct RelaxedSolution {
  Matrix Z;
  Vector y;  // size 0 when lambda = infinity
  double objective = 0.0;
  double primal_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  Residuals residuals;
  std::vector<double> best_merit_trace;  // running checkpoint minimum, non-increasing
};

inline RelaxedProblem build_problem(const PointSet& points, int k, double lambda,
                                    RelaxKind kind) {
  if (k < 1 || static_cast<Index>(k) > points.size()) {
    throw std::invalid_argument("build_problem: need 1 <= k <= N");
  }
  if (!(lambda > 0.0)) throw std::invalid_argument("build_problem: lambda must be positive");
  return RelaxedProblem{squared_distance_matrix(points), k, lambda, kind};
}

namespace detail {

// Eigen's tridiagonal QL iteration can hit its internal sweep cap on rare
// finite symmetric inputs. A diagonal shift moves every eigenvalue by exactly
// the shift and keeps the eigenvectors, but changes the iteration's path, so
// retrying with ulp-scale shifts recovers the decomposition; callers subtract
// the reported shift to get the original spectrum.
inline Eigen::SelfAdjointEigenSolver<Matrix> robust_selfadjoint_eig(const Matrix& sym,
                                                                    int options,
                                                                    double& shift_out) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  const double scale = 1.0 + sym.cwiseAbs().maxCoeff();
  const Index n = sym.rows();
  for (const double factor : {0.0, 1e-14, 1e-12, 1e-10}) {
    const double shift = factor * scale;
    if (shift == 0.0) {
      eig.compute(sym, options);
    } else {
      eig.compute(Matrix(sym + shift * Matrix::Identity(n, n)), options);
    }
    if (eig.info() == Eigen::Success) {
      shift_out = shift;
      return eig;
    }
  }
  throw std::runtime_error("selfadjoint eigendecomposition failed");
}

}  // namespace detail

// Nearest PSD matrix in Frobenius norm: symmetrize, clip negative eigenvalues.
inline Matrix psd_project(const Matrix& m) {
  Matrix sym = (m + m.transpose()) / 2.0;
  double shift = 0.0;
  const auto eig = detail::robust_selfadjoint_eig(sym, Eigen::ComputeEigenvectors, shift);
  Vector clipped = (eig.eigenvalues().array() - shift).max(0.0).matrix();
  return eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
}

// Feasibility violations of (Z, y) in the problem's real units.
inline Residuals compute_residuals(const RelaxedProblem& problem, const Matrix& z,
                                   const Vector& y) {
  const Index n = problem.n();
  Residuals res;
  res.trace = std::abs(z.trace() - static_cast<double>(problem.k));

  Vector rows = problem.kind == RelaxKind::SDP
                    ? Vector((z.rowwise().sum() + z.colwise().sum().transpose()) / 2.0)
                    : Vector(z.rowwise().sum());
  if (problem.has_y()) rows += y;
  res.row = (rows.array() - 1.0).abs().maxCoeff();

  res.negativity = std::max(0.0, -z.minCoeff());
  if (problem.has_y() && y.size() > 0) {
    res.negativity = std::max(res.negativity, -std::min(0.0, y.minCoeff()));
  }

  if (problem.kind == RelaxKind::SDP) {
    if (!z.allFinite()) {
      throw std::runtime_error("compute_residuals: non-finite iterate");
    }
    double shift = 0.0;
    const auto eig = detail::robust_selfadjoint_eig(Matrix((z + z.transpose()) / 2.0),
                                                    Eigen::EigenvaluesOnly, shift);
    res.psd = std::max(0.0, -(eig.eigenvalues().minCoeff() - shift));
  } else {
    double worst = 0.0;
    for (Index p = 0; p < n; ++p) {
      for (Index q = 0; q < n; ++q) {
        if (q != p) worst = std::max(worst, z(p, q) - z(p, p));
      }
    }
    res.rowcap = worst;
  }
  return res;
}

namespace detail {

struct Iterate {
  Matrix z;
  Vector y;  // zero length when the problem has no y

  Iterate& operator+=(const Iterate& o) {
    z += o.z;
    y += o.y;
    return *this;
  }
  Iterate& operator-=(const Iterate& o) {
    z -= o.z;
    y -= o.y;
    return *this;
  }
  Iterate& operator*=(double s) {
    z *= s;
    y *= s;
    return *this;
  }
  double squared_norm() const { return z.squaredNorm() + y.squaredNorm(); }
};

inline Iterate operator-(Iterate a, const Iterate& b) { return a -= b; }

// Projection of one LP row onto {off-diagonal entries <= diagonal}: water-fill
// the violating entries down to the common cap t* = (t + sum capped)/(1 + m).
inline void rowcap_project_row(Matrix& z, Index p) {
  const Index n = z.rows();
  std::vector<double> over;
  for (Index q = 0; q < n; ++q) {
    if (q != p && z(p, q) > z(p, p)) over.push_back(z(p, q));
  }
  if (over.empty()) return;
  std::sort(over.begin(), over.end(), std::greater<>());
  double acc = z(p, p);
  double tstar = z(p, p);
  std::size_t capped = 0;
  while (capped < over.size() && over[capped] > tstar) {
    acc += over[capped];
    ++capped;
    tstar = acc / static_cast<double>(capped + 1);
  }
  for (Index q = 0; q < n; ++q) {
    if (q != p && z(p, q) > tstar) z(p, q) = tstar;
  }
  z(p, p) = tstar;
}

}  // namespace detail

inline RelaxedSolution solve(const RelaxedProblem& problem, const SolverConfig& config = {}) {
  const Index n = problem.n();
  const int k = problem.k;
  if (n < 1 || k < 1 || static_cast<Index>(k) > n) {
    throw std::invalid_argument("solve: invalid problem dimensions");
  }
  if (!(config.tol > 0.0) || config.max_iter < 1) {
    throw std::invalid_argument("solve: invalid solver configuration");
  }
  const bool sdp = problem.kind == RelaxKind::SDP;
  const bool with_y = problem.has_y();

  const double scale = problem.D.maxCoeff() > 0.0 ? problem.D.maxCoeff() : 1.0;
  const Matrix dh = problem.D / scale;
  const double lamh = with_y ? problem.lambda / scale : 0.0;
  const double tau = with_y ? std::max(1.0, lamh) : 1.0;

  // Gram matrix of the affine constraint normals: index 0 is the trace (SDP)
  // or diagonal-sum (LP) constraint, 1..N the row-sum constraints.
  Matrix gram = Matrix::Zero(n + 1, n + 1);
  gram(0, 0) = static_cast<double>(n);
  for (Index p = 0; p < n; ++p) {
    gram(0, p + 1) = 1.0;
    gram(p + 1, 0) = 1.0;
    if (sdp) {
      for (Index q = 0; q < n; ++q) gram(p + 1, q + 1) = 0.5;
      gram(p + 1, p + 1) = (static_cast<double>(n) + 1.0) / 2.0;
    } else {
      gram(p + 1, p + 1) = static_cast<double>(n);
    }
    if (with_y) gram(p + 1, p + 1) += 1.0 / (tau * tau);
  }
  Eigen::LDLT<Matrix> gram_solver(gram);
  if (gram_solver.info() != Eigen::Success) {
    throw std::runtime_error("solve: affine Gram factorization failed");
  }

  using detail::Iterate;
  auto make_zero = [&] {
    Iterate it;
    it.z = Matrix::Zero(n, n);
    it.y = with_y ? Vector::Zero(n) : Vector();
    return it;
  };

  // Linear objective in scaled units: <dh, Z> + (lamh/tau) <1, y_scaled>.
  Iterate cost = make_zero();
  cost.z = dh;
  if (with_y) cost.y = Vector::Constant(n, lamh / tau);

  auto proj_affine = [&](Iterate v) {
    Vector resid(n + 1);
    Vector rows = sdp ? Vector((v.z.rowwise().sum() + v.z.colwise().sum().transpose()) / 2.0)
                      : Vector(v.z.rowwise().sum());
    resid(0) = v.z.trace() - static_cast<double>(k);
    for (Index p = 0; p < n; ++p) {
      resid(p + 1) = rows(p) + (with_y ? v.y(p) / tau : 0.0) - 1.0;
    }
    Vector s = gram_solver.solve(resid);
    const double s0 = s(0);
    Vector sv = s.tail(n);
    v.z.diagonal().array() -= s0;
    if (sdp) {
      v.z -= 0.5 * (sv * Eigen::RowVectorXd::Ones(n) + Vector::Ones(n) * sv.transpose());
    } else {
      v.z -= sv * Eigen::RowVectorXd::Ones(n);
    }
    if (with_y) v.y -= sv / tau;
    return v;
  };

  auto proj_orthant = [&](Iterate v) {
    v.z = v.z.cwiseMax(0.0);
    if (with_y) v.y = v.y.cwiseMax(0.0);
    return v;
  };

  auto proj_cone = [&](Iterate v) {
    if (sdp) {
      v.z = psd_project(v.z);
    } else {
      for (Index p = 0; p < n; ++p) detail::rowcap_project_row(v.z, p);
    }
    return v;
  };

  // Consensus initialization: the trivial feasible diagonal (plus the flat
  // off-diagonal completion when there is no noise variable to absorb mass).
  Iterate xbar = make_zero();
  const double ratio = static_cast<double>(k) / static_cast<double>(n);
  xbar.z = ratio * Matrix::Identity(n, n);
  if (!with_y && n > 1) {
    const double off = static_cast<double>(n - k) /
                       (static_cast<double>(n) * static_cast<double>(n - 1));
    xbar.z += off * (Matrix::Ones(n, n) - Matrix::Identity(n, n));
  }
  if (with_y) xbar.y = Vector::Constant(n, 1.0 - ratio);

  constexpr int kBlocks = 3;
  double rho = config.step;
  std::array<Iterate, kBlocks> duals;
  for (auto& u : duals) {
    u = cost;
    u *= 1.0 / (kBlocks * rho);
  }
  std::array<Iterate, kBlocks> w{make_zero(), make_zero(), make_zero()};

  const double merit_weight =
      static_cast<double>(n) * (problem.D.maxCoeff() + (with_y ? problem.lambda : 0.0));
  auto real_objective = [&](const Iterate& v) {
    double obj = (problem.D.array() * v.z.array()).sum();
    if (with_y) obj += problem.lambda * (v.y.sum() / tau);
    return obj;
  };
  auto real_y = [&](const Iterate& v) { return with_y ? Vector(v.y / tau) : Vector(); };

  RelaxedSolution best;
  double best_merit = std::numeric_limits<double>::infinity();
  std::vector<double> merit_trace;
  bool converged = false;
  int completed = 0;

  const double alpha = config.over_relaxation;
  for (int iter = 1; iter <= config.max_iter && !converged; ++iter) {
    const Iterate xold = xbar;
    w[0] = proj_affine(xbar - duals[0]);
    w[1] = proj_orthant(xbar - duals[1]);
    w[2] = proj_cone(xbar - duals[2]);
    for (auto& wj : w) {
      wj *= alpha;
      Iterate relax = xold;
      relax *= (alpha - 1.0);
      wj -= relax;
    }

    xbar = make_zero();
    for (int j = 0; j < kBlocks; ++j) {
      xbar += w[j];
      xbar += duals[j];
    }
    xbar *= 1.0 / kBlocks;
    {
      Iterate drift = cost;
      drift *= 1.0 / (kBlocks * rho);
      xbar -= drift;
    }
    for (int j = 0; j < kBlocks; ++j) {
      duals[j] += w[j];
      duals[j] -= xbar;
    }
    completed = iter;

    if (iter % config.adapt_every == 0 && iter <= config.adapt_until) {
      double primal_sq = 0.0;
      for (const auto& wj : w) primal_sq += (wj - xbar).squared_norm();
      const double rn = std::sqrt(primal_sq);
      const double sn = rho * std::sqrt(static_cast<double>(kBlocks)) *
                        std::sqrt((xbar - xold).squared_norm());
      double next = rho;
      if (rn > 10.0 * sn) next = rho * 2.0;
      else if (sn > 10.0 * rn) next = rho / 2.0;
      next = std::clamp(next, 1e-3 * config.step, 1e3 * config.step);
      if (next != rho) {
        const double rescale = rho / next;
        for (auto& u : duals) u *= rescale;
        rho = next;
      }
    }

    if (iter % config.check_interval == 0 || iter == config.max_iter) {
      const Vector y_real = real_y(xbar);
      const Residuals res = compute_residuals(problem, xbar.z, y_real);
      const double objective = real_objective(xbar);
      const double merit = objective + merit_weight * res.max();
      if (merit < best_merit) {
        best_merit = merit;
        best.Z = xbar.z;
        best.y = y_real;
      }
      merit_trace.push_back(std::min(merit, merit_trace.empty()
                                                ? merit
                                                : merit_trace.back()));
      // Feasibility alone is not a fixpoint test: an iterate can sit on the
      // constraint set while the objective still drifts. Require the blocks
      // to agree and the consensus point to have stopped moving as well.
      // Iterate error maps to objective error at roughly the gradient scale,
      // so when the optimum is much smaller than the iterate norm the settle
      // threshold shrinks with it to keep the RELATIVE objective error at tol.
      const double xnorm = std::max(1.0, std::sqrt(xbar.squared_norm()));
      double consensus_sq = 0.0;
      for (const auto& wj : w) consensus_sq += (wj - xbar).squared_norm();
      const double rn = std::sqrt(consensus_sq);
      const double sn = rho * std::sqrt(static_cast<double>(kBlocks)) *
                        std::sqrt((xbar - xold).squared_norm());
      const double tighten = std::clamp(std::abs(objective) / scale / xnorm, 1e-3, 1.0);
      const double settle =
          config.tol * std::sqrt(static_cast<double>(kBlocks)) * xnorm * tighten;
      if (res.max() <= config.tol && rn <= settle && sn <= settle) {
        best.Z = xbar.z;
        best.y = y_real;
        converged = true;
      }
    }
  }

  RelaxedSolution out;
  out.converged = converged;
  out.iterations = completed;
  out.best_merit_trace = std::move(merit_trace);
  out.Z = sdp ? Matrix((best.Z + best.Z.transpose()) / 2.0) : best.Z;
  out.y = best.y;
  out.residuals = compute_residuals(problem, out.Z, out.y);
  out.primal_residual = out.residuals.max();
  out.objective = (problem.D.array() * out.Z.array()).sum() +
                  (with_y ? problem.lambda * out.y.sum() : 0.0);
  return out;
}

// Integral embedding of a clustering: Z = sum_p (1/n_p) 1_p 1_p^T and the
// noise indicator y.
struct IntegralEmbedding {
  Matrix Z;
  Vector y;
};

inline IntegralEmbedding intended_solution(const Clustering& c, Index n_points) {
  validate_clustering(c, n_points);
  const auto members = cluster_members(c);
  for (const auto& cluster : members) {
    if (cluster.empty()) {
      throw std::invalid_argument("intended_solution: empty structured cluster");
    }
  }
  IntegralEmbedding emb;
  emb.Z = Matrix::Zero(n_points, n_points);
  emb.y = Vector::Zero(n_points);
  for (const auto& cluster : members) {
    const double w = 1.0 / static_cast<double>(cluster.size());
    for (Index a : cluster) {
      for (Index b : cluster) emb.Z(a, b) = w;
    }
  }
  for (Index idx : noise_members(c)) emb.y(idx) = 1.0;
  return emb;
}

// Objective of the integral embedding under the relaxations' bookkeeping
// (Tr(DZ) counts every pair twice), together with the matched clustering cost.
struct IntegralObjective {
  double relaxation_objective = 0.0;  // Tr(DZ*) + lambda*|noise| = 2*SSE + lambda*|noise|
  double clustering_cost = 0.0;       // sum SSE + lambda*|noise|
};

inline IntegralObjective integral_objective_check(const PointSet& points, const Clustering& c,
                                                  double lambda) {
  validate_clustering(c, points.size());
  const auto noise = noise_members(c);
  if (!std::isfinite(lambda) && !noise.empty()) {
    throw std::invalid_argument("integral_objective_check: noise needs finite lambda");
  }
  const auto emb = intended_solution(c, points.size());
  const Matrix d = squared_distance_matrix(points);
  const double tr_dz = (d.array() * emb.Z.array()).sum();
  const double penalty = noise.empty() ? 0.0 : lambda * static_cast<double>(noise.size());

  double sse = 0.0;
  for (const auto& cluster : cluster_members(c)) {
    if (!cluster.empty()) sse += within_cluster_sse(points, cluster);
  }
  if (std::abs(tr_dz - 2.0 * sse) > 1e-9 * std::max(1.0, std::abs(tr_dz))) {
    throw std::logic_error("integral_objective_check: Tr(DZ) != 2*SSE");
  }
  IntegralObjective out;
  out.relaxation_objective = tr_dz + penalty;
  out.clustering_cost = sse + (noise.empty() ? 0.0 : lambda * static_cast<double>(noise.size()));
  return out;
}

}  // namespace rkm
