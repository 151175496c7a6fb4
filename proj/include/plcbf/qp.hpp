#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "plcbf/common.hpp"
#include "plcbf/dynamics.hpp"

namespace plcbf {

/// Affine inequality a . u >= b.
struct QpRow {
  Vec a;
  double b = 0.0;
};

struct QpInfeasible : std::runtime_error {
  QpInfeasible(int row, double viol)
      : std::runtime_error("QP infeasible; most violated row " + std::to_string(row) +
                           " (violation " + std::to_string(viol) + ")"),
        worst_row(row),
        violation(viol) {}
  int worst_row;     // index into rows, or -1 for a box bound
  double violation;  // constraint violation at detection
};

struct QpSolution {
  Vec u;
  Vec row_multipliers;     // one per input row
  Vec box_lo_multipliers;  // one per control dimension
  Vec box_hi_multipliers;
  int iterations = 0;
};

/// argmin ||u - u_nom||^2  s.t.  rows[i].a . u >= rows[i].b,  lo <= u <= hi.
///
/// Dual active-set method (Goldfarb-Idnani specialized to an identity
/// Hessian): start from the unconstrained minimizer u_nom and add violated
/// constraints with full or partial dual steps. Problem sizes here are tiny,
/// so the active-set projections are recomputed from scratch each iteration.
inline QpSolution qp_min_norm(const Vec& u_nom, const std::vector<QpRow>& rows, const Vec& lo,
                              const Vec& hi) {
  const Eigen::Index dim = u_nom.size();
  if (lo.size() != dim || hi.size() != dim) throw ArgumentError("qp_min_norm: box dimension mismatch");
  if ((lo.array() > hi.array()).any()) throw ArgumentError("qp_min_norm: empty box");
  for (const auto& r : rows)
    if (r.a.size() != dim) throw ArgumentError("qp_min_norm: row dimension mismatch");

  const std::size_t n_rows = rows.size();
  const std::size_t m = n_rows + 2 * static_cast<std::size_t>(dim);
  auto normal = [&](std::size_t i) -> Vec {
    if (i < n_rows) return rows[i].a;
    Vec e = Vec::Zero(dim);
    const auto j = static_cast<Eigen::Index>(i - n_rows);
    if (j < dim) {
      e(j) = 1.0;  // u_j >= lo_j
    } else {
      e(j - dim) = -1.0;  // -u_j >= -hi_j
    }
    return e;
  };
  auto bound = [&](std::size_t i) -> double {
    if (i < n_rows) return rows[i].b;
    const auto j = static_cast<Eigen::Index>(i - n_rows);
    return j < dim ? lo(j) : -hi(j - dim);
  };

  constexpr double kFeasTol = 1e-12;
  constexpr double kDualTol = 1e-12;

  Vec x = u_nom;
  std::vector<std::size_t> active;
  std::vector<double> lambda;
  int iterations = 0;
  const int max_iterations = 100 + 10 * static_cast<int>(m);

  for (;;) {
    // Most violated constraint not yet active.
    std::size_t entering = m;
    double worst = -kFeasTol;
    for (std::size_t i = 0; i < m; ++i) {
      if (std::find(active.begin(), active.end(), i) != active.end()) continue;
      const double s = normal(i).dot(x) - bound(i);
      if (s < worst) {
        worst = s;
        entering = i;
      }
    }
    if (entering == m) break;  // primal feasible; dual feasibility is invariant

    const Vec n_plus = normal(entering);
    double lambda_entering = 0.0;
    for (;;) {
      if (++iterations > max_iterations)
        throw NumericError("qp_min_norm: active-set iteration limit exceeded");

      const std::size_t q = active.size();
      Vec r(q);
      Vec z = n_plus;
      if (q > 0) {
        Mat n_active(dim, q);
        for (std::size_t j = 0; j < q; ++j) n_active.col(static_cast<Eigen::Index>(j)) = normal(active[j]);
        r = n_active.completeOrthogonalDecomposition().solve(n_plus);
        z = n_plus - n_active * r;
      }
      const double z_norm2 = z.squaredNorm();
      const bool z_nonzero = z.norm() > 1e-10 * std::max(1.0, n_plus.norm());

      const double s_entering = n_plus.dot(x) - bound(entering);
      const double t_full = z_nonzero ? -s_entering / z_norm2 : std::numeric_limits<double>::infinity();

      double t_partial = std::numeric_limits<double>::infinity();
      std::size_t blocking = q;
      for (std::size_t j = 0; j < q; ++j) {
        if (r(static_cast<Eigen::Index>(j)) > kDualTol) {
          const double step = lambda[j] / r(static_cast<Eigen::Index>(j));
          if (step < t_partial) {
            t_partial = step;
            blocking = j;
          }
        }
      }

      const double t = std::min(t_full, t_partial);
      if (!std::isfinite(t)) {
        const int worst_row = entering < n_rows ? static_cast<int>(entering) : -1;
        throw QpInfeasible(worst_row, -s_entering);
      }

      if (z_nonzero) x += t * z;
      for (std::size_t j = 0; j < q; ++j) lambda[j] -= t * r(static_cast<Eigen::Index>(j));
      lambda_entering += t;

      if (t_full <= t_partial) {
        active.push_back(entering);
        lambda.push_back(lambda_entering);
        break;
      }
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(blocking));
      lambda.erase(lambda.begin() + static_cast<std::ptrdiff_t>(blocking));
    }
  }

  QpSolution sol;
  sol.u = x;
  sol.row_multipliers = Vec::Zero(static_cast<Eigen::Index>(n_rows));
  sol.box_lo_multipliers = Vec::Zero(dim);
  sol.box_hi_multipliers = Vec::Zero(dim);
  for (std::size_t j = 0; j < active.size(); ++j) {
    const std::size_t i = active[j];
    if (i < n_rows) {
      sol.row_multipliers(static_cast<Eigen::Index>(i)) = lambda[j];
    } else {
      const auto k = static_cast<Eigen::Index>(i - n_rows);
      if (k < dim) sol.box_lo_multipliers(k) = lambda[j];
      else sol.box_hi_multipliers(k - dim) = lambda[j];
    }
  }
  sol.iterations = iterations;
  return sol;
}

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;

  double max() const {
    return std::max({stationarity, primal, dual, complementarity});
  }
};

inline KktResiduals kkt_residuals(const Vec& u_nom, const std::vector<QpRow>& rows, const Vec& lo,
                                  const Vec& hi, const QpSolution& sol) {
  KktResiduals res;
  // Stationarity: (u - u_nom) = sum lambda_i a_i + lambda_lo - lambda_hi.
  Vec grad = sol.u - u_nom;
  for (std::size_t i = 0; i < rows.size(); ++i)
    grad -= sol.row_multipliers(static_cast<Eigen::Index>(i)) * rows[i].a;
  grad -= sol.box_lo_multipliers;
  grad += sol.box_hi_multipliers;
  res.stationarity = grad.cwiseAbs().maxCoeff();

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double s = rows[i].a.dot(sol.u) - rows[i].b;
    res.primal = std::max(res.primal, -s);
    res.complementarity =
        std::max(res.complementarity, std::abs(sol.row_multipliers(static_cast<Eigen::Index>(i)) * s));
  }
  for (Eigen::Index j = 0; j < sol.u.size(); ++j) {
    res.primal = std::max({res.primal, lo(j) - sol.u(j), sol.u(j) - hi(j)});
    res.complementarity = std::max(res.complementarity,
                                   std::abs(sol.box_lo_multipliers(j) * (sol.u(j) - lo(j))));
    res.complementarity = std::max(res.complementarity,
                                   std::abs(sol.box_hi_multipliers(j) * (hi(j) - sol.u(j))));
  }
  res.dual = std::max(
      {0.0, sol.row_multipliers.size() ? -sol.row_multipliers.minCoeff() : 0.0,
       -sol.box_lo_multipliers.minCoeff(), -sol.box_hi_multipliers.minCoeff()});
  return res;
}

}  // namespace plcbf
