#pragma once

// Dense convex QP solver for the dispatch problems:
//   minimize    sum_i q_i x_i^2 + c.x + c0
//   subject to  A_eq x = b_eq,  A_in x <= b_in
// with q >= 0 elementwise. Sized for tens of variables and a few hundred rows.
// Mehrotra predictor-corrector interior point iterations followed by an
// active-set polish solved least-squares, which also breaks degenerate
// (zero-curvature) ties toward the minimum-norm optimum.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "visgrid/grid.hpp"
#include "visgrid/network.hpp"

namespace visgrid {

struct QpProblem {
  std::vector<std::string> var_names;
  Vec q;       // diagonal curvature: cost contribution q_i * x_i^2
  Vec c;       // linear cost
  double c0 = 0.0;
  Mat a_eq;
  Vec b_eq;
  Mat a_in;
  Vec b_in;

  int n_vars() const { return static_cast<int>(q.size()); }
  double objective(const Vec& x) const {
    return (q.array() * x.array().square()).sum() + c.dot(x) + c0;
  }
};

struct QpSolution {
  Vec x;
  Vec y;  // equality multipliers
  Vec z;  // inequality multipliers (>= 0)
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
};

// Interval pre-check: per-variable boxes are recovered from single-variable
// inequality rows, then each equality row is tested for an empty feasible
// range. Returns a human-readable certificate for the first failure.
inline std::optional<std::string> qp_infeasible_by_inspection(const QpProblem& qp) {
  const int n = qp.n_vars();
  Vec lo = Vec::Zero(n), hi = Vec::Constant(n, std::numeric_limits<double>::infinity());
  // All dispatch variables are nonnegative; rows of the form +/- e_j tighten.
  for (int r = 0; r < qp.a_in.rows(); ++r) {
    int nz = 0, j = -1;
    for (int kcol = 0; kcol < n; ++kcol)
      if (qp.a_in(r, kcol) != 0.0) {
        ++nz;
        j = kcol;
      }
    if (nz != 1) continue;
    const double a = qp.a_in(r, j), b = qp.b_in(r);
    if (a > 0.0)
      hi(j) = std::min(hi(j), b / a);
    else
      lo(j) = std::max(lo(j), b / a);
  }
  for (int j = 0; j < n; ++j)
    if (lo(j) > hi(j) + 1e-12)
      return "variable " + qp.var_names[static_cast<std::size_t>(j)] +
             " has empty bound interval [" + std::to_string(lo(j)) + ", " +
             std::to_string(hi(j)) + "]";
  for (int r = 0; r < qp.a_eq.rows(); ++r) {
    double rmin = 0.0, rmax = 0.0;
    for (int j = 0; j < n; ++j) {
      const double a = qp.a_eq(r, j);
      if (a == 0.0) continue;
      if (a > 0.0) {
        rmin += a * lo(j);
        rmax += a * hi(j);
      } else {
        rmin += a * hi(j);
        rmax += a * lo(j);
      }
    }
    const double b = qp.b_eq(r);
    if (b < rmin - 1e-9 || b > rmax + 1e-9)
      return "equality row " + std::to_string(r) + " requires " + std::to_string(b) +
             " but the variable box only spans [" + std::to_string(rmin) + ", " +
             std::to_string(rmax) + "]";
  }
  return std::nullopt;
}

namespace detail {

struct KktResiduals {
  double stationarity, eq, ineq, comp;
  double worst() const { return std::max({stationarity, eq, ineq, comp}); }
};

inline KktResiduals kkt_residuals(const QpProblem& qp, const Vec& x, const Vec& y,
                                  const Vec& z) {
  const double scale = 1.0 + qp.c.cwiseAbs().maxCoeff();
  Vec grad = 2.0 * qp.q.cwiseProduct(x) + qp.c;
  if (qp.a_eq.rows()) grad += qp.a_eq.transpose() * y;
  if (qp.a_in.rows()) grad += qp.a_in.transpose() * z;
  KktResiduals r{};
  r.stationarity = grad.cwiseAbs().maxCoeff() / scale;
  r.eq = qp.a_eq.rows() ? (qp.a_eq * x - qp.b_eq).cwiseAbs().maxCoeff() : 0.0;
  if (qp.a_in.rows()) {
    Vec slack = qp.b_in - qp.a_in * x;
    r.ineq = std::max(0.0, (-slack).maxCoeff());
    r.comp = slack.cwiseMax(0.0).cwiseProduct(z).cwiseAbs().maxCoeff() / scale;
  } else {
    r.ineq = 0.0;
    r.comp = 0.0;
  }
  return r;
}

}  // namespace detail

inline QpSolution solve_qp(const QpProblem& qp, double tol = 1e-8) {
  const int n = qp.n_vars();
  const int me = static_cast<int>(qp.a_eq.rows());
  const int mi = static_cast<int>(qp.a_in.rows());
  if (qp.c.size() != n || (me && qp.a_eq.cols() != n) || (mi && qp.a_in.cols() != n))
    throw Error("solve_qp: inconsistent problem dimensions");
  if (qp.q.minCoeff() < 0.0) throw Error("solve_qp: negative curvature (non-convex)");
  if (auto why = qp_infeasible_by_inspection(qp))
    throw Error("QP infeasible: " + *why);

  QpSolution sol;
  sol.y = Vec::Zero(me);

  if (mi == 0) {
    // Pure equality QP: single least-squares KKT solve.
    Mat kkt = Mat::Zero(n + me, n + me);
    kkt.topLeftCorner(n, n) = (2.0 * qp.q).asDiagonal();
    if (me) {
      kkt.topRightCorner(n, me) = qp.a_eq.transpose();
      kkt.bottomLeftCorner(me, n) = qp.a_eq;
    }
    Vec rhs(n + me);
    rhs.head(n) = -qp.c;
    rhs.tail(me) = qp.b_eq;
    Vec xy = kkt.completeOrthogonalDecomposition().solve(rhs);
    sol.x = xy.head(n);
    sol.y = xy.tail(me);
    sol.z = Vec();
    sol.objective = qp.objective(sol.x);
    auto r = detail::kkt_residuals(qp, sol.x, sol.y, Vec::Zero(0));
    sol.kkt_residual = r.worst();
    if (sol.kkt_residual > tol) throw Error("equality QP solve failed KKT tolerance");
    return sol;
  }

  // Row equilibration: every constraint row is rescaled to unit infinity norm
  // (coefficients and rhs together) so sentinel-sized bounds such as the 1e9
  // no-limit ramps cannot poison the interior-point scaling or the stopping
  // tests. Multipliers of the scaled rows are mapped back at the end.
  QpProblem qs = qp;
  Vec row_scale_in = Vec::Ones(mi), row_scale_eq = Vec::Ones(std::max(me, 1));
  for (int i = 0; i < mi; ++i) {
    const double m = std::max(qs.a_in.row(i).cwiseAbs().maxCoeff(), std::abs(qs.b_in(i)));
    if (m > 0.0) {
      row_scale_in(i) = 1.0 / m;
      qs.a_in.row(i) *= row_scale_in(i);
      qs.b_in(i) *= row_scale_in(i);
    }
  }
  for (int i = 0; i < me; ++i) {
    const double m = std::max(qs.a_eq.row(i).cwiseAbs().maxCoeff(), std::abs(qs.b_eq(i)));
    if (m > 0.0) {
      row_scale_eq(i) = 1.0 / m;
      qs.a_eq.row(i) *= row_scale_eq(i);
      qs.b_eq(i) *= row_scale_eq(i);
    }
  }

  Vec x = Vec::Zero(n), y = Vec::Zero(me);
  Vec s(mi), z = Vec::Ones(mi);
  for (int i = 0; i < mi; ++i) s(i) = std::max(1.0, std::abs(qs.b_in(i)));

  const double tol_int = std::min(tol * 0.1, 1e-9);
  const int max_iter = 120;
  int iter = 0;
  double primal_rel = 0.0;
  for (; iter < max_iter; ++iter) {
    Vec r_d = 2.0 * qs.q.cwiseProduct(x) + qs.c + qs.a_in.transpose() * z;
    if (me) r_d += qs.a_eq.transpose() * y;
    Vec r_p = me ? Vec(qs.a_eq * x - qs.b_eq) : Vec();
    Vec r_i = qs.a_in * x + s - qs.b_in;
    const double mu = s.dot(z) / mi;
    const double scale = 1.0 + qs.c.cwiseAbs().maxCoeff() + qs.b_in.cwiseAbs().maxCoeff();
    const double res = std::max({r_d.cwiseAbs().maxCoeff(),
                                 me ? r_p.cwiseAbs().maxCoeff() : 0.0,
                                 r_i.cwiseAbs().maxCoeff()});
    primal_rel = std::max(me ? r_p.cwiseAbs().maxCoeff() : 0.0,
                          r_i.cwiseAbs().maxCoeff()) /
                 scale;
    if (res / scale < tol_int && mu / scale < tol_int) break;

    Vec d = z.cwiseQuotient(s);
    Mat h = Mat((2.0 * qs.q).asDiagonal());
    h += qs.a_in.transpose() * d.asDiagonal() * qs.a_in;
    h.diagonal().array() += 1e-13;
    Eigen::LLT<Mat> llt(h);
    if (llt.info() != Eigen::Success) {
      h.diagonal().array() += 1e-8;
      llt.compute(h);
      if (llt.info() != Eigen::Success) throw Error("solve_qp: KKT factorization failed");
    }

    auto solve_step = [&](const Vec& r_c) {
      // Returns (dx, dy, ds, dz) for the current residuals with target r_c.
      Vec rx = -r_d - qs.a_in.transpose() * (d.cwiseProduct(r_i) - r_c.cwiseQuotient(s));
      Vec dx, dy;
      if (me) {
        Mat hinv_aeqt = llt.solve(qs.a_eq.transpose());
        Mat schur = qs.a_eq * hinv_aeqt;
        Vec rhs = qs.a_eq * llt.solve(rx) + r_p;
        Eigen::LDLT<Mat> ldlt(schur);
        if (ldlt.info() != Eigen::Success)
          throw Error("solve_qp: equality Schur complement factorization failed");
        dy = ldlt.solve(rhs);
        dx = llt.solve(rx - qs.a_eq.transpose() * dy);
      } else {
        dy = Vec();
        dx = llt.solve(rx);
      }
      Vec ds = -r_i - qs.a_in * dx;
      Vec dz = -(r_c + z.cwiseProduct(ds)).cwiseQuotient(s);
      return std::make_tuple(dx, dy, ds, dz);
    };

    auto max_step = [](const Vec& v, const Vec& dv) {
      double a = 1.0;
      for (int i = 0; i < v.size(); ++i)
        if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
      return a;
    };

    // Affine (predictor) direction.
    Vec r_c_aff = s.cwiseProduct(z);
    auto [dxa, dya, dsa, dza] = solve_step(r_c_aff);
    const double ap_aff = max_step(s, dsa);
    const double ad_aff = max_step(z, dza);
    const double mu_aff = (s + ap_aff * dsa).dot(z + ad_aff * dza) / mi;
    const double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);

    // Corrector.
    Vec r_c = s.cwiseProduct(z) + dsa.cwiseProduct(dza) - Vec::Constant(mi, sigma * mu);
    auto [dx, dy, ds, dz] = solve_step(r_c);
    const double ap = std::min(1.0, 0.9995 * max_step(s, ds));
    const double ad = std::min(1.0, 0.9995 * max_step(z, dz));
    x += ap * dx;
    s += ap * ds;
    if (me) y += ad * dy;
    z += ad * dz;
    if (!x.allFinite()) throw Error("solve_qp: iterates diverged (problem unbounded or "
                                    "severely ill-conditioned)");
  }
  if (iter == max_iter && primal_rel > 1e-6)
    throw Error("solve_qp: no convergence after " + std::to_string(max_iter) +
                " iterations (problem is likely infeasible)");

  QpSolution best;
  best.x = x;
  best.y = y.cwiseProduct(row_scale_eq.head(me));
  best.z = z.cwiseProduct(row_scale_in);
  best.iterations = iter;
  best.kkt_residual = detail::kkt_residuals(qp, best.x, best.y, best.z).worst();

  // Active-set polish: least-squares KKT solves on the working set seeded by
  // the interior-point iterate; rows with negative multipliers leave, violated
  // rows enter. The least-squares solve breaks degenerate (zero-curvature)
  // ties toward the minimum-norm point on the optimal face.
  std::vector<int> act;
  std::vector<char> in_act(static_cast<std::size_t>(mi), 0);
  {
    Vec slack = qs.b_in - qs.a_in * x;
    for (int i = 0; i < mi; ++i)
      if (slack(i) < 1e-6 || z(i) > 1e2 * std::max(slack(i), 0.0)) {
        act.push_back(i);
        in_act[static_cast<std::size_t>(i)] = 1;
      }
  }
  for (int round = 0; round < 80; ++round) {
    const int ma = static_cast<int>(act.size());
    Mat a_all(me + ma, n);
    Vec b_all(me + ma);
    if (me) {
      a_all.topRows(me) = qs.a_eq;
      b_all.head(me) = qs.b_eq;
    }
    for (int i = 0; i < ma; ++i) {
      a_all.row(me + i) = qs.a_in.row(act[static_cast<std::size_t>(i)]);
      b_all(me + i) = qs.b_in(act[static_cast<std::size_t>(i)]);
    }
    Mat kkt = Mat::Zero(n + me + ma, n + me + ma);
    kkt.topLeftCorner(n, n) = (2.0 * qs.q).asDiagonal();
    kkt.topRightCorner(n, me + ma) = a_all.transpose();
    kkt.bottomLeftCorner(me + ma, n) = a_all;
    Vec rhs(n + me + ma);
    rhs.head(n) = -qs.c;
    rhs.tail(me + ma) = b_all;
    Vec sol_kkt = kkt.completeOrthogonalDecomposition().solve(rhs);
    Vec xp = sol_kkt.head(n);

    int leave = -1;
    double leave_val = -1e-9;
    for (int i = 0; i < ma; ++i)
      if (sol_kkt(n + me + i) < leave_val) {
        leave_val = sol_kkt(n + me + i);
        leave = i;
      }
    if (leave >= 0) {
      in_act[static_cast<std::size_t>(act[static_cast<std::size_t>(leave)])] = 0;
      act.erase(act.begin() + leave);
      continue;
    }
    Vec slack = qs.b_in - qs.a_in * xp;
    int enter = -1;
    double enter_val = -1e-9;
    for (int i = 0; i < mi; ++i)
      if (!in_act[static_cast<std::size_t>(i)] && slack(i) < enter_val) {
        enter_val = slack(i);
        enter = i;
      }
    if (enter >= 0) {
      act.push_back(enter);
      in_act[static_cast<std::size_t>(enter)] = 1;
      continue;
    }

    Vec yp = sol_kkt.segment(n, me).cwiseProduct(row_scale_eq.head(me));
    Vec zp = Vec::Zero(mi);
    for (int i = 0; i < ma; ++i) {
      const int r = act[static_cast<std::size_t>(i)];
      zp(r) = std::max(0.0, sol_kkt(n + me + i)) * row_scale_in(r);
    }
    auto rp = detail::kkt_residuals(qp, xp, yp, zp);
    if (rp.worst() <= best.kkt_residual) {
      best.x = xp;
      best.y = yp;
      best.z = zp;
      best.kkt_residual = rp.worst();
    }
    break;
  }
  best.objective = qp.objective(best.x);
  if (best.kkt_residual > tol)
    throw Error("solve_qp: KKT residual " + std::to_string(best.kkt_residual) +
                " exceeds tolerance");
  return best;
}

}  // namespace visgrid
