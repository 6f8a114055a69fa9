#pragma once

// Derivatives of the minimum distance through the KKT solution.
//
// Strict pairs: the implicit-function system Q d(z*, lambda*)/dx = V, and the
// directional derivative for border cases (J2 nonempty) as a small QP in z_dot.
// Polytope pairs: the LP bound on h_dot over the dual rates lambda_dot.

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

#include "ncbf/geometry.hpp"
#include "ncbf/log.hpp"
#include "ncbf/min_distance.hpp"
#include "ncbf/qp.hpp"

namespace ncbf {

inline constexpr double kRateBound = 1e4;
inline constexpr double kTikhonovFloor = 1e-9;
inline constexpr double kSingularCond = 1e10;

/// All blocks of the Q/V system, stacked over z = (z_i, z_j), x = (x_i, x_j)
/// and the constraint list (body i rows first).
struct SensitivitySystem {
  int l = 0, ni = 0, nj = 0, ri = 0, rj = 0;
  Mat hess_L;     // 2l x 2l
  Mat grad_zA;    // r x 2l
  Mat grad_xA;    // r x (ni + nj)
  Mat grad_xzL;   // 2l x (ni + nj): d(grad_z L)/dx
  Vec lambda;     // r
  Vec A;          // r
  Vec s;          // z_i - z_j
  Mat Q;          // (2l + r) square
  Mat V;          // (2l + r) x (ni + nj)
  double cond = 0.0;

  int r() const { return ri + rj; }
  int n() const { return ni + nj; }
};

inline double condition_number(const Mat& M) {
  const Vec sv = Eigen::JacobiSVD<Mat>(M).singularValues();
  if (sv.size() == 0) return 1.0;
  const double lo = sv(sv.size() - 1);
  return lo > 0 ? sv(0) / lo : std::numeric_limits<double>::infinity();
}

inline SensitivitySystem assemble_qv(const StrictConvexBody& bi, const Vec& xi, const StrictConvexBody& bj,
                                     const Vec& xj, const KKTSolution& k) {
  SensitivitySystem S;
  S.l = bi.ambient_dim();
  S.ni = bi.state_dim();
  S.nj = bj.state_dim();
  S.ri = bi.num_constraints();
  S.rj = bj.num_constraints();
  const int l = S.l, r = S.r(), n = S.n();
  const ConstraintEval ei = bi.evaluate(xi, k.z_i), ej = bj.evaluate(xj, k.z_j);

  S.lambda.resize(r);
  S.lambda << k.lambda_i, k.lambda_j;
  S.A.resize(r);
  S.A << ei.values, ej.values;
  S.s = k.z_i - k.z_j;

  const Mat I = Mat::Identity(l, l);
  S.hess_L.resize(2 * l, 2 * l);
  S.hess_L << 2 * I, -2 * I, -2 * I, 2 * I;
  S.grad_zA = Mat::Zero(r, 2 * l);
  S.grad_xA = Mat::Zero(r, n);
  S.grad_xzL = Mat::Zero(2 * l, n);
  for (int c = 0; c < S.ri; ++c) {
    S.hess_L.topLeftCorner(l, l) += k.lambda_i(c) * ei.hess_z[c];
    S.grad_xzL.block(0, 0, l, S.ni) += k.lambda_i(c) * ei.mixed[c].transpose();
  }
  for (int c = 0; c < S.rj; ++c) {
    S.hess_L.bottomRightCorner(l, l) += k.lambda_j(c) * ej.hess_z[c];
    S.grad_xzL.block(l, S.ni, l, S.nj) += k.lambda_j(c) * ej.mixed[c].transpose();
  }
  S.grad_zA.block(0, 0, S.ri, l) = ei.grad_z;
  S.grad_zA.block(S.ri, l, S.rj, l) = ej.grad_z;
  S.grad_xA.block(0, 0, S.ri, S.ni) = ei.grad_x;
  S.grad_xA.block(S.ri, S.ni, S.rj, S.nj) = ej.grad_x;

  S.Q = Mat::Zero(2 * l + r, 2 * l + r);
  S.Q.topLeftCorner(2 * l, 2 * l) = S.hess_L;
  S.Q.topRightCorner(2 * l, r) = S.grad_zA.transpose();
  S.Q.bottomLeftCorner(r, 2 * l) = S.lambda.asDiagonal() * S.grad_zA;
  S.Q.bottomRightCorner(r, r) = S.A.asDiagonal();
  S.V.resize(2 * l + r, n);
  S.V << -S.grad_xzL, -(S.lambda.asDiagonal() * S.grad_xA);
  S.cond = condition_number(S.Q);
  return S;
}

struct DirectionalDerivative {
  Vec z_dot;       // 2l
  Vec lambda_dot;  // r
  double dh = 0.0;
  double residual = 0.0;
  bool regularized = false;
};

/// Residual of the rate system: stationarity rate, J1 equalities, J2
/// inequalities and complementarity, sign of lambda_dot on J2, zeros off J0.
inline double directional_residual(const SensitivitySystem& S, const IndexSets& J, const Vec& xr, const Vec& zd,
                                   const Vec& ld) {
  double res = detail::inf_norm(S.hess_L * zd + S.grad_zA.transpose() * ld + S.grad_xzL * xr);
  auto flat = [&](const ConstraintIndex& c) { return c.body == 0 ? c.row : S.ri + c.row; };
  std::vector<char> in0(S.r(), 0), in1(S.r(), 0);
  for (const auto& c : J.J0) in0[flat(c)] = 1;
  for (const auto& c : J.J1) in1[flat(c)] = 1;
  for (int k = 0; k < S.r(); ++k) {
    const double rate = S.grad_zA.row(k).dot(zd) + S.grad_xA.row(k).dot(xr);
    if (!in0[k]) {
      res = std::max(res, std::abs(ld(k)));
    } else if (in1[k]) {
      res = std::max(res, std::abs(rate));
    } else {
      res = std::max({res, rate, -ld(k), std::abs(ld(k) * rate)});
    }
  }
  return res;
}

/// Right directional derivative of (z*, lambda*) along xr = (x_i_dot, x_j_dot).
inline DirectionalDerivative directional_derivative(const SensitivitySystem& S, const IndexSets& J, const Vec& xr,
                                                    double tol = 1e-8) {
  if (xr.size() != S.n()) throw std::invalid_argument("directional_derivative: direction has wrong dimension");
  auto flat = [&](const ConstraintIndex& c) { return c.body == 0 ? c.row : S.ri + c.row; };
  DirectionalDerivative d;
  QuadProgram p;
  p.H = S.hess_L;
  const double mineig = Eigen::SelfAdjointEigenSolver<Mat>(S.hess_L, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (mineig < kTikhonovFloor) {
    p.H += kTikhonovFloor * Mat::Identity(p.H.rows(), p.H.cols());
    d.regularized = true;
    ++event_counters().tikhonov;
    log_message(LogLevel::debug, "rate QP Hessian near singular (min eig " + std::to_string(mineig) + "), adding Tikhonov term");
  }
  p.f = S.grad_xzL * xr;
  std::vector<int> eq, in;
  for (const auto& c : J.J1) eq.push_back(flat(c));
  for (const auto& c : J.J2) in.push_back(flat(c));
  p.A_eq.resize(static_cast<Eigen::Index>(eq.size()), 2 * S.l);
  p.b_eq.resize(static_cast<Eigen::Index>(eq.size()));
  for (std::size_t a = 0; a < eq.size(); ++a) {
    p.A_eq.row(a) = S.grad_zA.row(eq[a]);
    p.b_eq(a) = -S.grad_xA.row(eq[a]).dot(xr);
  }
  p.A_in.resize(static_cast<Eigen::Index>(in.size()), 2 * S.l);
  p.b_in.resize(static_cast<Eigen::Index>(in.size()));
  for (std::size_t a = 0; a < in.size(); ++a) {
    p.A_in.row(a) = S.grad_zA.row(in[a]);
    p.b_in(a) = -S.grad_xA.row(in[a]).dot(xr);
  }
  const SolveReport rep = solve_qp(p, QpOptions{1e-10, 0});
  if (!rep.ok()) throw std::runtime_error(std::string("rate QP failed: ") + to_string(rep.status));
  d.z_dot = rep.primal;
  d.lambda_dot = Vec::Zero(S.r());
  for (std::size_t a = 0; a < eq.size(); ++a) d.lambda_dot(eq[a]) = rep.dual_eq(a);
  for (std::size_t a = 0; a < in.size(); ++a) d.lambda_dot(in[a]) = rep.dual_in(a);
  d.dh = 2.0 * S.s.dot(d.z_dot.head(S.l) - d.z_dot.tail(S.l));
  d.residual = directional_residual(S, J, xr, d.z_dot, d.lambda_dot);
  // Tikhonov shifts the stationarity line by 1e-9 |z_dot|; allow for it.
  const double allowed = tol * std::max(1.0, detail::inf_norm(xr)) + (d.regularized ? kTikhonovFloor * detail::inf_norm(d.z_dot) : 0.0);
  if (d.residual > allowed)
    throw std::runtime_error("rate system residual " + std::to_string(d.residual) + " above tolerance");
  return d;
}

struct GradH {
  Vec grad;  // ni + nj
  Mat dz_dx;  // 2l x n, empty on the fallback path
  double cond = 0.0;
  bool used_fallback = false;
};

/// dh/dx = 2 s' (dz_i/dx - dz_j/dx). Near-singular Q (no strict
/// complementarity) falls back to one-sided derivatives along the axes.
inline GradH grad_h_strict(const SensitivitySystem& S, const IndexSets& J) {
  GradH g;
  g.cond = S.cond;
  const int l = S.l;
  if (S.cond <= kSingularCond) {
    const Mat D = S.Q.partialPivLu().solve(S.V);
    g.dz_dx = D.topRows(2 * l);
    g.grad = 2.0 * (g.dz_dx.topRows(l) - g.dz_dx.bottomRows(l)).transpose() * S.s;
    return g;
  }
  g.used_fallback = true;
  ++event_counters().gradient_fallback;
  g.grad.resize(S.n());
  for (int m = 0; m < S.n(); ++m) {
    Vec e = Vec::Zero(S.n());
    e(m) = 1.0;
    g.grad(m) = directional_derivative(S, J, e).dh;
  }
  return g;
}

/// World-frame rates of both polytopes along the current motion.
struct PairRates {
  Mat Adot_i;
  Vec bdot_i;
  Mat Adot_j;
  Vec bdot_j;
};

/// Time derivative of the dual function along (lambda, lambda_dot):
///   -1/2 l_i A_i A_i' ld_i' - 1/2 l_i A_i Adot_i' l_i' - ld_i b_i - l_i bdot_i - ld_j b_j - l_j bdot_j
inline double lambda_dot_lagrangian(const Vec& li, const Vec& lj, const Vec& ldi, const Vec& ldj,
                                    const HalfSpaces& hi, const HalfSpaces& hj, const PairRates& rates) {
  const Vec w = hi.A.transpose() * li;
  return -0.5 * w.dot(hi.A.transpose() * ldi) - 0.5 * w.dot(rates.Adot_i.transpose() * li) - ldi.dot(hi.b) -
         li.dot(rates.bdot_i) - ldj.dot(hj.b) - lj.dot(rates.bdot_j);
}

struct HdotBound {
  double g = 0.0;
  Vec lambda_dot_i;
  Vec lambda_dot_j;
  SolveStatus status = SolveStatus::optimal;
  bool ok() const { return status == SolveStatus::optimal; }
};

/// g = max Lambda_dot over lambda_dot subject to the differentiated dual
/// feasibility: A_i' ld_i + A_j' ld_j = -(Adot_i' l_i + Adot_j' l_j),
/// ld_k >= 0 where l_k < zero_tol, |ld| <= M.
inline HdotBound polytope_hdot_lp(const Vec& li, const Vec& lj, const HalfSpaces& hi, const HalfSpaces& hj,
                                  const PairRates& rates, double zero_tol = kDefaultAlmostActiveEps,
                                  double M = kRateBound) {
  const int ri = static_cast<int>(li.size()), rj = static_cast<int>(lj.size());
  const int l = static_cast<int>(hi.A.cols());
  const Vec w = hi.A.transpose() * li;
  Vec c(ri + rj);  // maximize => minimize -c
  c << -0.5 * hi.A * w - hi.b, -hj.b;
  Mat Aeq(l, ri + rj);
  Aeq << hi.A.transpose(), hj.A.transpose();
  const Vec beq = -(rates.Adot_i.transpose() * li + rates.Adot_j.transpose() * lj);
  Vec lo(ri + rj), hi_b = Vec::Constant(ri + rj, M);
  for (int k = 0; k < ri; ++k) lo(k) = li(k) < zero_tol ? 0.0 : -M;
  for (int k = 0; k < rj; ++k) lo(ri + k) = lj(k) < zero_tol ? 0.0 : -M;
  const SolveReport rep = solve_lp(-c, Aeq, beq, Mat(0, ri + rj), Vec(0), lo, hi_b);
  HdotBound out;
  out.status = rep.status;
  if (!rep.ok()) {
    log_message(LogLevel::warn, std::string("h_dot LP not solved: ") + to_string(rep.status));
    out.lambda_dot_i = Vec::Zero(ri);
    out.lambda_dot_j = Vec::Zero(rj);
    return out;
  }
  out.lambda_dot_i = rep.primal.head(ri);
  out.lambda_dot_j = rep.primal.tail(rj);
  out.g = lambda_dot_lagrangian(li, lj, out.lambda_dot_i, out.lambda_dot_j, hi, hj, rates);
  return out;
}

/// Rates of a polytope pair for robot velocities given as (f, g, u) per robot.
inline PairRates polytope_pair_rates(const PolytopeBody& bi, const Vec& xi, const Vec& fi, const Mat& gi,
                                     const Vec& ui, const PolytopeBody& bj, const Vec& xj, const Vec& fj,
                                     const Mat& gj, const Vec& uj) {
  const PolytopeRates ri = bi.rates(xi, fi, gi), rj = bj.rates(xj, fj, gj);
  return {ri.A_dot(ui), ri.b_dot(ui), rj.A_dot(uj), rj.b_dot(uj)};
}

}  // namespace ncbf
