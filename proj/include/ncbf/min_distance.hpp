#pragma once

// Minimum squared distance between two convex bodies
//
//   h = min ||z_i - z_j||^2  s.t.  A^i(x_i, z_i) <= 0,  A^j(x_j, z_j) <= 0
//
// and the KKT data (z*, lambda*, s* = z_i* - z_j*) the sensitivity and
// controller code differentiates through.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ncbf/geometry.hpp"
#include "ncbf/qp.hpp"

namespace ncbf {

inline constexpr double kIntersectionThreshold = 1e-10;
inline constexpr double kDefaultAlmostActiveEps = 1e-3;
inline constexpr double kActivityTol = 1e-6;

/// Constraint k of body 0 (i) or body 1 (j).
struct ConstraintIndex {
  int body = 0;
  int row = 0;
  friend bool operator==(const ConstraintIndex&, const ConstraintIndex&) = default;
};

struct IndexSets {
  std::vector<ConstraintIndex> J0;     // active
  std::vector<ConstraintIndex> J1;     // strictly active (positive dual)
  std::vector<ConstraintIndex> J2;     // J0 \ J1
  std::vector<ConstraintIndex> J2eps;  // almost active: lambda < eps and A > -eps
  double eps = kDefaultAlmostActiveEps;
  bool strict_complementarity = true;
  bool j0_exact = true;  // false when J0 comes from one of several primal optima

  static bool has(const std::vector<ConstraintIndex>& set, int body, int row) {
    return std::find(set.begin(), set.end(), ConstraintIndex{body, row}) != set.end();
  }
};

enum class SolverKind { strict, polytope_primal, polytope_dual };
enum class DistanceStatus { ok, intersecting, max_iter };

inline const char* to_string(SolverKind k) {
  switch (k) {
    case SolverKind::strict: return "strict";
    case SolverKind::polytope_primal: return "polytope-primal";
    case SolverKind::polytope_dual: return "polytope-dual";
  }
  return "unknown";
}

inline const char* to_string(DistanceStatus s) {
  switch (s) {
    case DistanceStatus::ok: return "ok";
    case DistanceStatus::intersecting: return "intersecting";
    case DistanceStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

struct KKTSolution {
  Vec z_i, z_j;
  Vec lambda_i, lambda_j;
  Vec A_i, A_j;  // constraint values at z* (empty if points were not recovered)
  double h = 0.0;
  Vec s;
  double kkt_residual = 0.0;
  double dual_gap = 0.0;  // polytope paths only
  bool strict_complementarity = true;
  bool primal_unique = true;
  IndexSets index_sets;
  SolverKind kind = SolverKind::strict;
  DistanceStatus status = DistanceStatus::ok;
  int iterations = 0;

  bool ok() const { return status == DistanceStatus::ok; }
  bool intersecting() const { return status == DistanceStatus::intersecting; }
};

/// Index sets from constraint values and duals. J1 is taken from the duals
/// and J0 = J1 plus every constraint within act_tol of the boundary, so
/// J1 is a subset of J0 even for inexact solutions.
inline IndexSets classify_index_sets(const Vec& A_i, const Vec& A_j, const Vec& lambda_i, const Vec& lambda_j,
                                     double eps = kDefaultAlmostActiveEps, double act_tol = kActivityTol) {
  IndexSets s;
  s.eps = eps;
  auto scan = [&](int body, const Vec& A, const Vec& lam) {
    for (int k = 0; k < lam.size(); ++k) {
      const bool j1 = lam(k) >= act_tol;
      const bool j0 = j1 || A(k) >= -act_tol;
      if (j1) s.J1.push_back({body, k});
      if (j0) s.J0.push_back({body, k});
      if (j0 && !j1) s.J2.push_back({body, k});
      if (lam(k) < eps && A(k) > -eps) s.J2eps.push_back({body, k});
    }
  };
  scan(0, A_i, lambda_i);
  scan(1, A_j, lambda_j);
  s.strict_complementarity = s.J2.empty();
  return s;
}

inline IndexSets classify_index_sets(const KKTSolution& k, double eps = kDefaultAlmostActiveEps,
                                     double act_tol = kActivityTol) {
  if (k.A_i.size() != k.lambda_i.size() || k.A_j.size() != k.lambda_j.size())
    throw std::invalid_argument("classify_index_sets: constraint values were not recovered");
  IndexSets s = classify_index_sets(k.A_i, k.A_j, k.lambda_i, k.lambda_j, eps, act_tol);
  s.j0_exact = k.kind == SolverKind::strict || k.primal_unique;
  return s;
}

namespace detail {

inline void finish_polytope_solution(KKTSolution& k, const HalfSpaces& bi, const HalfSpaces& bj, double eps) {
  k.h = k.s.squaredNorm();
  if (k.z_i.size()) {
    k.A_i = bi.A * k.z_i - bi.b;
    k.A_j = bj.A * k.z_j - bj.b;
    double res = std::max(inf_norm(2.0 * k.s + bi.A.transpose() * k.lambda_i),
                          inf_norm(-2.0 * k.s + bj.A.transpose() * k.lambda_j));
    res = std::max(res, inf_norm(k.lambda_i.cwiseProduct(k.A_i)));
    res = std::max(res, inf_norm(k.lambda_j.cwiseProduct(k.A_j)));
    res = std::max(res, std::max(k.A_i.maxCoeff(), k.A_j.maxCoeff()));
    res = std::max(res, -std::min(k.lambda_i.minCoeff(), k.lambda_j.minCoeff()));
    k.kkt_residual = std::max(res, 0.0);
    k.index_sets = classify_index_sets(k, eps);
    k.strict_complementarity = k.index_sets.strict_complementarity;
  } else {
    k.kkt_residual = std::max(inf_norm(2.0 * k.s + bi.A.transpose() * k.lambda_i),
                              inf_norm(-2.0 * k.s + bj.A.transpose() * k.lambda_j));
  }
  if (k.status == DistanceStatus::ok && k.h < kIntersectionThreshold) k.status = DistanceStatus::intersecting;
}

/// Whether the optimal z_i (with z_j = z_i - s) is a single point.
inline bool polytope_points_unique(const HalfSpaces& bi, const HalfSpaces& bj, const Vec& s, double tol = 1e-7) {
  const int l = static_cast<int>(s.size());
  Mat C(bi.A.rows() + bj.A.rows(), l);
  Vec d(C.rows());
  C << bi.A, bj.A;
  d << bi.b, bj.b + bj.A * s;
  d.array() += 1e-9;
  for (int k = 0; k < l; ++k) {
    Vec c = Vec::Zero(l);
    c(k) = 1.0;
    const auto lo = solve_lp(c, Mat(0, l), Vec(0), C, d, Vec(), Vec());
    const auto hi = solve_lp(-c, Mat(0, l), Vec(0), C, d, Vec(), Vec());
    if (!lo.ok() || !hi.ok()) return true;
    if (-hi.objective - lo.objective > tol) return false;
  }
  return true;
}

}  // namespace detail

struct PolytopeDistanceOptions {
  bool recover_points = true;     // dual path: find z* with a small LP
  bool check_uniqueness = false;  // extra LPs to detect a non-unique z*
  double eps = kDefaultAlmostActiveEps;
};

/// Primal QP over (z_i, z_j).
inline KKTSolution min_dist_polytope_primal(const HalfSpaces& bi, const HalfSpaces& bj, QpSolver* warm = nullptr,
                                            const PolytopeDistanceOptions& opt = {}) {
  const int l = static_cast<int>(bi.A.cols());
  const int ri = static_cast<int>(bi.A.rows()), rj = static_cast<int>(bj.A.rows());
  QuadProgram p;
  p.H.resize(2 * l, 2 * l);
  const Mat I = Mat::Identity(l, l);
  p.H << 2 * I, -2 * I, -2 * I, 2 * I;
  p.f = Vec::Zero(2 * l);
  p.A_in = Mat::Zero(ri + rj, 2 * l);
  p.A_in.topLeftCorner(ri, l) = bi.A;
  p.A_in.bottomRightCorner(rj, l) = bj.A;
  p.b_in.resize(ri + rj);
  p.b_in << bi.b, bj.b;
  const SolveReport r = warm ? warm->solve(p) : solve_qp(p);
  if (r.status == SolveStatus::infeasible) throw std::runtime_error("polytope distance QP infeasible: corrupted body data");

  KKTSolution k;
  k.kind = SolverKind::polytope_primal;
  k.status = r.ok() ? DistanceStatus::ok : DistanceStatus::max_iter;
  k.iterations = r.iterations;
  k.z_i = r.primal.head(l);
  k.z_j = r.primal.tail(l);
  k.s = k.z_i - k.z_j;
  k.lambda_i = r.dual_in.head(ri).cwiseMax(0.0);
  k.lambda_j = r.dual_in.tail(rj).cwiseMax(0.0);
  if (opt.check_uniqueness) k.primal_unique = detail::polytope_points_unique(bi, bj, k.s);
  detail::finish_polytope_solution(k, bi, bj, opt.eps);
  return k;
}

/// Dual QP: maximize -1/4 |A_i' l_i|^2 - l_i'b_i - l_j'b_j  s.t.  A_i' l_i + A_j' l_j = 0, l >= 0.
inline QuadProgram polytope_dual_program(const HalfSpaces& bi, const HalfSpaces& bj) {
  const int l = static_cast<int>(bi.A.cols());
  const int ri = static_cast<int>(bi.A.rows()), rj = static_cast<int>(bj.A.rows());
  QuadProgram p;
  p.H = Mat::Zero(ri + rj, ri + rj);
  p.H.topLeftCorner(ri, ri) = 0.5 * bi.A * bi.A.transpose();
  p.f.resize(ri + rj);
  p.f << bi.b, bj.b;
  p.A_eq.resize(l, ri + rj);
  p.A_eq << bi.A.transpose(), bj.A.transpose();
  p.b_eq = Vec::Zero(l);
  p.lower = Vec::Zero(ri + rj);
  return p;
}

inline KKTSolution min_dist_polytope_dual(const HalfSpaces& bi, const HalfSpaces& bj, QpSolver* warm = nullptr,
                                          const PolytopeDistanceOptions& opt = {}) {
  const int l = static_cast<int>(bi.A.cols());
  const int ri = static_cast<int>(bi.A.rows()), rj = static_cast<int>(bj.A.rows());
  const QuadProgram p = polytope_dual_program(bi, bj);
  const SolveReport r = warm ? warm->solve(p) : solve_qp(p);
  if (r.status == SolveStatus::infeasible) throw std::runtime_error("polytope dual QP infeasible: corrupted body data");

  KKTSolution k;
  k.kind = SolverKind::polytope_dual;
  k.status = r.ok() ? DistanceStatus::ok : DistanceStatus::max_iter;
  k.iterations = r.iterations;
  k.lambda_i = r.primal.head(ri).cwiseMax(0.0);
  k.lambda_j = r.primal.tail(rj).cwiseMax(0.0);
  k.s = -0.5 * bi.A.transpose() * k.lambda_i;
  k.dual_gap = std::abs(-r.objective - k.s.squaredNorm());

  if (opt.recover_points) {
    // min t  s.t.  A_i z - b_i <= t,  A_j (z - s) - b_j <= t
    Mat C(ri + rj, l + 1);
    C << bi.A, -Vec::Ones(ri), bj.A, -Vec::Ones(rj);
    Vec d(ri + rj);
    d << bi.b, bj.b + bj.A * k.s;
    Vec c = Vec::Zero(l + 1);
    c(l) = 1.0;
    const auto pts = solve_lp(c, Mat(0, l + 1), Vec(0), C, d, Vec(), Vec());
    if (pts.ok()) {
      k.z_i = pts.primal.head(l);
      k.z_j = k.z_i - k.s;
    }
  }
  if (opt.check_uniqueness) k.primal_unique = detail::polytope_points_unique(bi, bj, k.s);
  detail::finish_polytope_solution(k, bi, bj, opt.eps);
  return k;
}

/// Closed-form duals from the separating vector and active rows:
///   lambda_i[J] = -2 s' pinv(A_i[J]),  lambda_j[J] = +2 s' pinv(A_j[J]).
inline std::pair<Vec, Vec> recover_unique_dual(const Vec& s, const std::vector<int>& active_i,
                                               const std::vector<int>& active_j, const Mat& A_i, const Mat& A_j) {
  auto side = [&](const std::vector<int>& rows, const Mat& A, double sign) {
    Vec lam = Vec::Zero(A.rows());
    if (rows.empty()) return lam;
    Mat AJ(static_cast<Eigen::Index>(rows.size()), A.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) AJ.row(static_cast<Eigen::Index>(k)) = A.row(rows[k]);
    Eigen::FullPivLU<Mat> lu(AJ);
    lu.setThreshold(1e-9);
    if (lu.rank() < AJ.rows()) throw std::domain_error("active rows are linearly dependent (LICQ violated)");
    // s' pinv(AJ) = s' AJ' (AJ AJ')^-1
    const Vec w = (AJ * AJ.transpose()).ldlt().solve(AJ * s);
    for (std::size_t k = 0; k < rows.size(); ++k) lam(rows[k]) = sign * 2.0 * w(static_cast<Eigen::Index>(k));
    return lam;
  };
  return {side(active_i, A_i, -1.0), side(active_j, A_j, 1.0)};
}

struct StrictDistanceOptions {
  double mu_start = 1.0;
  double mu_warm = 1e-3;
  double mu_final = 1e-10;
  double mu_factor = 0.2;
  double tol = 1e-8;
  int max_iter = 400;
  double eps = kDefaultAlmostActiveEps;
};

namespace detail {

/// Perturbed KKT system of the strict pair in the stacked variable (z_i, z_j).
struct StrictKkt {
  const StrictConvexBody& bi;
  const StrictConvexBody& bj;
  Pose pi, pj;
  int l, ri, rj;

  StrictKkt(const StrictConvexBody& a, const Vec& xa, const StrictConvexBody& b, const Vec& xb)
      : bi(a), bj(b), pi(a.pose_map().evaluate(xa)), pj(b.pose_map().evaluate(xb)), l(a.ambient_dim()),
        ri(a.num_constraints()), rj(b.num_constraints()) {}

  int size() const { return 2 * l + ri + rj; }

  Vec values(const Vec& z) const {
    Vec A(ri + rj);
    A << bi.values(pi, z.head(l)), bj.values(pj, z.tail(l));
    return A;
  }

  /// Residual [grad L; lambda .* A + mu] and optionally the Newton matrix.
  Vec residual(const Vec& z, const Vec& lam, double mu, Mat* Q = nullptr) const {
    const ConstraintEval ei = bi.evaluate(pi, z.head(l));
    const ConstraintEval ej = bj.evaluate(pj, z.tail(l));
    const Vec s = z.head(l) - z.tail(l);
    const Vec li = lam.head(ri), lj = lam.tail(rj);
    Vec r(size());
    r.head(l) = 2.0 * s + ei.grad_z.transpose() * li;
    r.segment(l, l) = -2.0 * s + ej.grad_z.transpose() * lj;
    r.segment(2 * l, ri) = li.cwiseProduct(ei.values).array() + mu;
    r.tail(rj) = lj.cwiseProduct(ej.values).array() + mu;
    if (Q) {
      const int n = size();
      Q->setZero(n, n);
      const Mat I = Mat::Identity(l, l);
      Q->topLeftCorner(2 * l, 2 * l) << 2 * I, -2 * I, -2 * I, 2 * I;
      for (int k = 0; k < ri; ++k) Q->block(0, 0, l, l) += li(k) * ei.hess_z[k];
      for (int k = 0; k < rj; ++k) Q->block(l, l, l, l) += lj(k) * ej.hess_z[k];
      Q->block(0, 2 * l, l, ri) = ei.grad_z.transpose();
      Q->block(l, 2 * l + ri, l, rj) = ej.grad_z.transpose();
      Q->block(2 * l, 0, ri, l) = li.asDiagonal() * ei.grad_z;
      Q->block(2 * l + ri, l, rj, l) = lj.asDiagonal() * ej.grad_z;
      Q->block(2 * l, 2 * l, ri, ri) = ei.values.asDiagonal();
      Q->block(2 * l + ri, 2 * l + ri, rj, rj) = ej.values.asDiagonal();
    }
    return r;
  }

  double kkt_error(const Vec& z, const Vec& lam) const {
    const Vec r = residual(z, lam, 0.0);
    const Vec A = values(z);
    return std::max({inf_norm(r), std::max(A.maxCoeff(), 0.0), std::max(-lam.minCoeff(), 0.0)});
  }
};

inline Vec newton_solve(const Mat& Q, const Vec& rhs) {
  Eigen::PartialPivLU<Mat> lu(Q);
  Vec d = lu.solve(rhs);
  if (!d.allFinite() || (Q * d - rhs).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, inf_norm(rhs)))
    d = Q.completeOrthogonalDecomposition().solve(rhs);
  return d;
}

/// Newton on the mu = 0 system with the active set `act` frozen.
inline void polish_newton(const StrictKkt& sys, const std::vector<int>& act, Vec& zc, Vec& lc) {
  const int l2 = 2 * sys.l;
  const int na = static_cast<int>(act.size());
  for (int it = 0; it < 8; ++it) {
    Mat Q;
    const Vec full = sys.residual(zc, lc, 0.0, &Q);
    const Vec A = sys.values(zc);
    // rows: stationarity and A_k = 0 on the active set
    Mat K = Mat::Zero(l2 + na, l2 + na);
    Vec rhs(l2 + na);
    K.topLeftCorner(l2, l2) = Q.topLeftCorner(l2, l2);
    rhs.head(l2) = -full.head(l2);
    for (int a = 0; a < na; ++a) {
      const int k = act[a];
      // grad A_k is the column block of Q (its row block carries a lambda factor)
      K.block(0, l2 + a, l2, 1) = Q.block(0, l2 + k, l2, 1);
      K.block(l2 + a, 0, 1, l2) = Q.block(0, l2 + k, l2, 1).transpose();
      rhs(l2 + a) = -A(k);
    }
    const Vec d = newton_solve(K, rhs);
    zc += d.head(l2);
    for (int a = 0; a < na; ++a) lc(act[a]) += d(l2 + a);
    if (!d.allFinite() || inf_norm(d) < 1e-15) break;
  }
}

/// Active-set polish from the interior-point iterate. Near degenerate
/// points the central path sits O(sqrt(mu)) away from the solution, so the
/// initial guess {lambda_k > -A_k} is corrected by adding violated
/// constraints and dropping negative multipliers. Returns true if the KKT
/// error improved.
inline bool polish_strict(const StrictKkt& sys, Vec& z, Vec& lam) {
  const int r = sys.ri + sys.rj;
  const Vec A0 = sys.values(z);
  std::vector<char> in(r, 0);
  for (int k = 0; k < r; ++k) in[k] = lam(k) > -A0(k);
  double best = sys.kkt_error(z, lam);
  bool improved = false;
  for (int attempt = 0; attempt < r + 2; ++attempt) {
    std::vector<int> act;
    for (int k = 0; k < r; ++k)
      if (in[k]) act.push_back(k);
    Vec zc = z, lc = Vec::Zero(r);
    for (int k : act) lc(k) = std::max(lam(k), 0.0);
    polish_newton(sys, act, zc, lc);
    if (!zc.allFinite() || !lc.allFinite()) break;
    const double err = sys.kkt_error(zc, lc);
    if (err < best) {
      best = err;
      z = zc;
      lam = lc;
      improved = true;
    }
    if (err <= 1e-12) break;
    // most violated inactive constraint in, most negative active multiplier out
    const Vec A = sys.values(zc);
    int add = -1, drop = -1;
    double worst_A = 1e-12, worst_l = -1e-12;
    for (int k = 0; k < r; ++k) {
      if (!in[k] && A(k) > worst_A) worst_A = A(k), add = k;
      if (in[k] && lc(k) < worst_l) worst_l = lc(k), drop = k;
    }
    if (add < 0 && drop < 0) break;
    if (add >= 0) in[add] = 1;
    else in[drop] = 0;
  }
  return improved;
}

}  // namespace detail

/// Primal-dual interior point on the perturbed KKT system, then an
/// active-set Newton polish. `warm` is the previous solution for this pair.
inline KKTSolution min_dist_strict(const StrictConvexBody& bi, const Vec& xi, const StrictConvexBody& bj,
                                   const Vec& xj, const KKTSolution* warm = nullptr,
                                   const StrictDistanceOptions& opt = {}) {
  if (bi.ambient_dim() != bj.ambient_dim()) throw std::invalid_argument("bodies live in different spaces");
  const detail::StrictKkt sys(bi, xi, bj, xj);
  const int l = sys.l, r = sys.ri + sys.rj, n = sys.size();
  Vec zint(2 * l);
  zint << bi.interior_point(xi), bj.interior_point(xj);

  Vec z = zint;
  double mu = opt.mu_start;
  if (warm && warm->z_i.size() == l && warm->z_j.size() == l && warm->ok()) {
    Vec zw(2 * l);
    zw << warm->z_i, warm->z_j;
    for (double tau : {0.02, 0.1, 0.3, 1.0}) {
      const Vec cand = zw + tau * (zint - zw);
      const Vec Ai = bi.values(sys.pi, cand.head(l)), Aj = bj.values(sys.pj, cand.tail(l));
      if (Ai.maxCoeff() < -1e-9 && Aj.maxCoeff() < -1e-9) {
        z = cand;
        mu = tau < 1.0 ? opt.mu_warm : opt.mu_start;
        break;
      }
    }
  }
  Vec lam = mu * (-sys.values(z)).cwiseInverse();

  int iters = 0;
  bool converged = false;
  Mat Q;
  for (;;) {
    // inner Newton loop at fixed mu
    for (int inner = 0; inner < 50 && iters < opt.max_iter; ++inner, ++iters) {
      const Vec res = sys.residual(z, lam, mu, &Q);
      const double rn = res.norm();
      if (detail::inf_norm(res) <= std::max(0.1 * mu, 1e-12)) break;
      const Vec d = detail::newton_solve(Q, -res);
      const Vec dz = d.head(2 * l), dl = d.tail(r);
      double t = 1.0;
      for (int k = 0; k < r; ++k)
        if (dl(k) < 0) t = std::min(t, -0.995 * lam(k) / dl(k));
      const Vec Aold = sys.values(z);
      bool moved = false;
      for (; t > 1e-14; t *= 0.5) {
        const Vec zn = z + t * dz;
        const Vec An = sys.values(zn);
        if (((An.array() - 0.005 * Aold.array()) >= 0.0).any()) continue;
        const Vec ln = lam + t * dl;
        if (sys.residual(zn, ln, mu).norm() <= (1.0 - 1e-4 * t) * rn) {
          z = zn;
          lam = ln;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    if (mu <= opt.mu_final || iters >= opt.max_iter) break;
    mu = std::max(mu * opt.mu_factor, opt.mu_final);
  }
  detail::polish_strict(sys, z, lam);
  lam = lam.cwiseMax(0.0);
  const double err = sys.kkt_error(z, lam);
  converged = err <= opt.tol;

  KKTSolution k;
  k.kind = SolverKind::strict;
  k.iterations = iters;
  k.z_i = z.head(l);
  k.z_j = z.tail(l);
  k.s = k.z_i - k.z_j;
  k.h = k.s.squaredNorm();
  k.lambda_i = lam.head(sys.ri);
  k.lambda_j = lam.tail(sys.rj);
  const Vec A = sys.values(z);
  k.A_i = A.head(sys.ri);
  k.A_j = A.tail(sys.rj);
  k.kkt_residual = err;
  if (k.h < kIntersectionThreshold) {
    k.status = DistanceStatus::intersecting;
    k.h = 0.0;
  } else {
    k.status = converged ? DistanceStatus::ok : DistanceStatus::max_iter;
  }
  k.index_sets = classify_index_sets(k, opt.eps);
  k.strict_complementarity = k.index_sets.strict_complementarity;
  (void)n;
  return k;
}

/// Dispatch on body kinds. Mixed strict/polytope pairs are not supported.
inline KKTSolution min_distance(const ConvexBody& bi, const Vec& xi, const ConvexBody& bj, const Vec& xj,
                                const KKTSolution* strict_warm = nullptr, QpSolver* poly_warm = nullptr) {
  if (const auto* si = std::get_if<StrictConvexBody>(&bi)) {
    const auto* sj = std::get_if<StrictConvexBody>(&bj);
    if (!sj) throw std::invalid_argument("mixed strict/polytope pairs are not supported");
    return min_dist_strict(*si, xi, *sj, xj, strict_warm);
  }
  const auto* pj = std::get_if<PolytopeBody>(&bj);
  if (!pj) throw std::invalid_argument("mixed strict/polytope pairs are not supported");
  return min_dist_polytope_dual(std::get<PolytopeBody>(bi).at_state(xi), pj->at_state(xj), poly_warm);
}

}  // namespace ncbf
