#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "spavg/errors.hpp"

namespace spavg {

/// Symmetric matrix of (co-)mean-square errors of a labeled estimator
/// collection.
struct MseMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd entries;

  MseMatrix() = default;
  MseMatrix(std::vector<std::string> lab, Eigen::MatrixXd m)
      : labels(std::move(lab)), entries(std::move(m)) {
    const auto n = entries.rows();
    if (n < 1 || entries.cols() != n)
      throw DimensionMismatch("MSE matrix must be square and non-empty");
    if (static_cast<Eigen::Index>(labels.size()) != n)
      throw DimensionMismatch("MSE matrix labels do not match its size");
    const double scale = entries.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < i; ++j)
        if (std::abs(entries(i, j) - entries(j, i)) > 1e-9 * (scale + 1e-300))
          throw InvalidConfig("MSE matrix is not symmetric");
    // enforce exact symmetry
    entries = ((entries + entries.transpose()) / 2.0).eval();
  }

  Eigen::Index size() const { return entries.rows(); }
};

/// Assignment of estimators to target parameters: sizes (J_1,...,J_P),
/// estimators ordered by group.
struct GroupStructure {
  std::vector<int> sizes;

  GroupStructure() = default;
  explicit GroupStructure(std::vector<int> s) : sizes(std::move(s)) {
    if (sizes.empty()) throw InvalidConfig("group structure must be non-empty");
    for (int j : sizes)
      if (j < 1) throw InvalidConfig("every group needs at least one estimator");
  }

  int total() const {
    int m = 0;
    for (int j : sizes) m += j;
    return m;
  }
  int count() const { return static_cast<int>(sizes.size()); }

  int group_of(int m) const {
    int acc = 0;
    for (int p = 0; p < count(); ++p) {
      acc += sizes[p];
      if (m < acc) return p;
    }
    throw DimensionMismatch("estimator index outside group structure");
  }

  /// The M x P selector matrix with L[m][p] = 1 iff estimator m targets p.
  Eigen::MatrixXd selector() const {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(total(), count());
    int row = 0;
    for (int p = 0; p < count(); ++p)
      for (int j = 0; j < sizes[p]; ++j) L(row++, p) = 1.0;
    return L;
  }
};

enum class WeightMode { linear, convex, masked };

/// Solved averaging weights (M x P) with the plug-in MSE estimate per
/// target parameter.
struct WeightSolution {
  Eigen::MatrixXd weights;
  Eigen::VectorXd estimated_mse;
  WeightMode mode = WeightMode::linear;
  bool mse_clamped = false;  // a negative plug-in MSE was clamped to 0
};

namespace detail {

/// Inverse of a symmetric matrix through its eigendecomposition, with a
/// condition-number guard.
inline Eigen::MatrixXd guarded_symmetric_inverse(const Eigen::MatrixXd& s,
                                                 double cond_cap) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  if (eig.info() != Eigen::Success)
    throw SingularMatrix("eigendecomposition of the MSE matrix failed");
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double emax = ev.cwiseAbs().maxCoeff();
  const double emin = ev.cwiseAbs().minCoeff();
  if (!(emax > 0.0) || emin == 0.0 || !std::isfinite(emax) ||
      emax / emin > cond_cap)
    throw SingularMatrix(
        "MSE matrix is singular or too ill-conditioned (condition estimate " +
        std::to_string(emin > 0.0 ? emax / emin
                                  : std::numeric_limits<double>::infinity()) +
        ")");
  return eig.eigenvectors() * ev.cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

inline void clamp_mse(Eigen::VectorXd& mse, bool& clamped) {
  for (Eigen::Index p = 0; p < mse.size(); ++p) {
    if (mse[p] < 0.0) {
      mse[p] = 0.0;
      clamped = true;
    }
  }
}

}  // namespace detail

/// Plug-in optimal weights sum-to-one weights: Sigma^-1 1 / (1' Sigma^-1 1).
inline WeightSolution oracle_weights(const MseMatrix& sigma,
                                     double cond_cap = 1e12) {
  const Eigen::Index m = sigma.size();
  const Eigen::MatrixXd inv =
      detail::guarded_symmetric_inverse(sigma.entries, cond_cap);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
  const double denom = ones.dot(inv * ones);
  if (denom == 0.0 || !std::isfinite(denom))
    throw SingularMatrix("1' Sigma^-1 1 vanished");
  WeightSolution sol;
  sol.weights = (inv * ones) / denom;
  sol.weights /= sol.weights.sum();  // exact sum-to-one
  sol.estimated_mse = Eigen::VectorXd::Constant(1, 1.0 / denom);
  detail::clamp_mse(sol.estimated_mse, sol.mse_clamped);
  sol.mode = WeightMode::linear;
  return sol;
}

enum class GroupMode { full, masked };

/// Joint weights with foreign estimators: Sigma^-1 L (L' Sigma^-1 L)^-1.
/// Masked mode zeroes every cross-group block of Sigma first.
inline WeightSolution group_weights(const MseMatrix& sigma,
                                    const GroupStructure& groups,
                                    GroupMode mode = GroupMode::full,
                                    double cond_cap = 1e12) {
  const Eigen::Index m = sigma.size();
  if (groups.total() != m)
    throw DimensionMismatch("group sizes do not sum to the MSE matrix size");
  Eigen::MatrixXd s = sigma.entries;
  if (mode == GroupMode::masked) {
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j)
        if (groups.group_of(static_cast<int>(i)) !=
            groups.group_of(static_cast<int>(j)))
          s(i, j) = 0.0;
  }
  const Eigen::MatrixXd inv = detail::guarded_symmetric_inverse(s, cond_cap);
  const Eigen::MatrixXd L = groups.selector();
  const Eigen::MatrixXd inner = L.transpose() * inv * L;
  const Eigen::MatrixXd inner_inv =
      detail::guarded_symmetric_inverse((inner + inner.transpose()) / 2.0,
                                        cond_cap);
  WeightSolution sol;
  sol.weights = inv * L * inner_inv;
  // project back onto the exact constraint L' W = I
  Eigen::VectorXd group_sizes(groups.count());
  for (int p = 0; p < groups.count(); ++p) group_sizes[p] = groups.sizes[p];
  const Eigen::MatrixXd defect =
      L.transpose() * sol.weights - Eigen::MatrixXd::Identity(groups.count(),
                                                              groups.count());
  sol.weights -= L * group_sizes.cwiseInverse().asDiagonal() * defect;
  sol.estimated_mse = (sol.weights.transpose() * s * sol.weights).diagonal();
  detail::clamp_mse(sol.estimated_mse, sol.mse_clamped);
  sol.mode = mode == GroupMode::masked ? WeightMode::masked : WeightMode::linear;
  return sol;
}

/// Minimize w' Sigma w over the probability simplex by a primal
/// active-set iteration (exact for the small M used here).
inline WeightSolution convex_weights(const MseMatrix& sigma) {
  const Eigen::Index m = sigma.size();
  const Eigen::MatrixXd& s = sigma.entries;
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    if (eig.info() != Eigen::Success)
      throw NotPsd("eigendecomposition of the MSE matrix failed");
    const double tr = s.trace();
    if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(tr, 1e-300))
      throw NotPsd("MSE matrix has a significantly negative eigenvalue");
  }

  Eigen::VectorXd x = Eigen::VectorXd::Constant(m, 1.0 / m);
  std::vector<bool> free(m, true);

  auto solve_on_support = [&](Eigen::VectorXd& cand) {
    // equality-constrained minimum on the free variables via the KKT system
    std::vector<int> idx;
    for (Eigen::Index i = 0; i < m; ++i)
      if (free[i]) idx.push_back(static_cast<int>(i));
    const int k = static_cast<int>(idx.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) kkt(a, b) = 2.0 * s(idx[a], idx[b]);
      kkt(a, k) = kkt(k, a) = 1.0;
    }
    // tiny ridge keeps semidefinite blocks solvable
    const double ridge = 1e-13 * std::max(s.trace(), 1e-300);
    for (int a = 0; a < k; ++a) kkt(a, a) += ridge;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
    rhs[k] = 1.0;
    Eigen::VectorXd z = kkt.fullPivLu().solve(rhs);
    cand = Eigen::VectorXd::Zero(m);
    for (int a = 0; a < k; ++a) cand[idx[a]] = z[a];
  };

  const int max_iter = 100 * static_cast<int>(m) + 100;
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXd cand;
    solve_on_support(cand);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
      if (free[i]) worst = std::min(worst, cand[i]);
    if (worst < -1e-12) {
      // step toward the candidate until a free variable hits zero
      double t = 1.0;
      Eigen::Index blocking = -1;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (!free[i]) continue;
        const double d = cand[i] - x[i];
        if (d < 0.0) {
          const double ti = -x[i] / d;
          if (ti < t) {
            t = ti;
            blocking = i;
          }
        }
      }
      x += t * (cand - x);
      if (blocking >= 0) {
        free[blocking] = false;
        x[blocking] = 0.0;
      }
      continue;
    }
    x = cand;
    for (Eigen::Index i = 0; i < m; ++i)
      if (free[i] && x[i] < 0.0) x[i] = 0.0;
    // KKT check on the bound constraints
    const Eigen::VectorXd grad = 2.0 * s * x;
    double nu = 0.0;
    int nfree = 0;
    for (Eigen::Index i = 0; i < m; ++i)
      if (free[i]) {
        nu += grad[i];
        ++nfree;
      }
    nu /= std::max(nfree, 1);
    Eigen::Index entering = -1;
    double most_negative = -1e-10 * std::max(s.trace(), 1.0);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (free[i]) continue;
      const double mult = grad[i] - nu;
      if (mult < most_negative) {
        most_negative = mult;
        entering = i;
      }
    }
    if (entering < 0) {
      WeightSolution sol;
      x = x.cwiseMax(0.0);
      x /= x.sum();
      sol.weights = x;
      Eigen::VectorXd mse(1);
      mse[0] = x.dot(s * x);
      sol.estimated_mse = mse;
      detail::clamp_mse(sol.estimated_mse, sol.mse_clamped);
      sol.mode = WeightMode::convex;
      return sol;
    }
    free[entering] = true;
  }
  throw NonConvergence("convex weight active-set iteration did not terminate");
}

/// Apply a weight solution to a vector of estimates.
inline Eigen::VectorXd combine(const Eigen::VectorXd& estimates,
                               const WeightSolution& solution) {
  if (estimates.size() != solution.weights.rows())
    throw DimensionMismatch("estimate vector does not match weight matrix");
  return solution.weights.transpose() * estimates;
}

/// w_p' Sigma w_p per column; negatives (indefinite Sigma-hat) clamp to 0.
inline Eigen::VectorXd solution_mse(const MseMatrix& sigma,
                                    const WeightSolution& solution) {
  if (sigma.size() != solution.weights.rows())
    throw DimensionMismatch("MSE matrix does not match weight matrix");
  Eigen::VectorXd out =
      (solution.weights.transpose() * sigma.entries * solution.weights)
          .diagonal();
  bool clamped = false;
  detail::clamp_mse(out, clamped);
  return out;
}

}  // namespace spavg
