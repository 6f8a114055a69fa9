#pragma once

// Per-step safety filter: the minimally perturbed input subject to one NCBF
// row (plus auxiliary rate variables) per enforced robot pair.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncbf/geometry.hpp"
#include "ncbf/log.hpp"
#include "ncbf/min_distance.hpp"
#include "ncbf/qp.hpp"
#include "ncbf/sensitivity.hpp"

namespace ncbf {

enum class FilterCost { track_nominal, min_norm };

struct NCBFParams {
  double alpha = 1.0;
  double eps = kDefaultAlmostActiveEps;
  double eps1_sq = 0.1;
  double M = kRateBound;
  double enforcement_radius_sq = kInf;
  bool fast_path = true;
  FilterCost cost = FilterCost::track_nominal;
  /// Class-K function of (h - eps1^2); empty means alpha * s.
  std::function<double(double)> class_k;
  int max_branches = 16;
  /// Sample-and-hold interval. When positive, polytope multiplier rates also
  /// satisfy lambda* + hold * lambda_dot >= 0, so the dual point used by the
  /// certificate stays feasible until the next sample. 0 disables it.
  double hold_interval = 0.0;

  double kappa(double s) const { return class_k ? class_k(s) : alpha * s; }

  void validate() const {
    if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
    if (!(eps1_sq > 0)) throw std::invalid_argument("eps1^2 must be positive");
    if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
    if (!(M > 0)) throw std::invalid_argument("M must be positive");
    if (!(enforcement_radius_sq > eps1_sq)) throw std::invalid_argument("enforcement radius^2 must exceed eps1^2");
  }
};

/// Everything the filter needs about one robot at the current step.
struct RobotInputs {
  Vec x;
  Vec f;  // drift
  Mat g;  // input matrix, n x m
  Vec u_nom;
  Vec u_lower;
  Vec u_upper;

  int input_dim() const { return static_cast<int>(g.cols()); }
};

/// Rows of one pair over the local variable [u_a, u_b, aux].
struct PairBlock {
  int robot_a = 0, robot_b = 1;
  int num_aux = 0;
  Mat Eq;
  Vec eq_rhs;
  Mat In;
  Vec in_rhs;
  Vec aux_lower, aux_upper;
  int barrier_row = 0;  // row of In holding the NCBF constraint
  bool fast_path = false;
  double h = 0.0;
};

struct StrictPairData {
  int a = 0, b = 1;
  KKTSolution kkt;
  SensitivitySystem sys;
};

struct PolytopePairData {
  int a = 0, b = 1;
  KKTSolution kkt;  // lambda* from the dual QP
  HalfSpaces ha, hb;
  PolytopeRates ra, rb;
};

namespace detail {

inline void check_robot(const RobotInputs& r) {
  const auto m = r.g.cols();
  if (r.f.size() != r.x.size() || r.g.rows() != r.x.size() || r.u_nom.size() != m || r.u_lower.size() != m ||
      r.u_upper.size() != m)
    throw std::invalid_argument("robot inputs have inconsistent dimensions");
}

inline Mat block_diag(const Mat& a, const Mat& b) {
  Mat r = Mat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  r.topLeftCorner(a.rows(), a.cols()) = a;
  r.bottomRightCorner(b.rows(), b.cols()) = b;
  return r;
}

}  // namespace detail

/// Fast row dh/dx (F + G u) >= -kappa(h - eps1^2); valid under strict complementarity.
inline PairBlock strict_fast_block(const StrictPairData& p, const std::vector<RobotInputs>& robots,
                                   const NCBFParams& params, const Vec& grad_h) {
  const RobotInputs &ra = robots[p.a], &rb = robots[p.b];
  const Mat G = detail::block_diag(ra.g, rb.g);
  Vec F(ra.f.size() + rb.f.size());
  F << ra.f, rb.f;
  PairBlock blk;
  blk.robot_a = p.a;
  blk.robot_b = p.b;
  blk.fast_path = true;
  blk.h = p.kkt.h;
  blk.Eq.resize(0, G.cols());
  blk.eq_rhs.resize(0);
  blk.In = -(grad_h.transpose() * G);
  blk.in_rhs = Vec::Constant(1, params.kappa(p.kkt.h - params.eps1_sq) + grad_h.dot(F));
  return blk;
}

/// Full rate formulation over aux = (z_dot, lambda_dot). `branch_rate_zero`
/// lists flat constraint indices whose rate row is forced to zero; the rest
/// of the complementarity candidates get lambda_dot = 0.
inline PairBlock strict_full_block(const StrictPairData& p, const std::vector<RobotInputs>& robots,
                                   const NCBFParams& params, const std::vector<int>& branch_rate_zero) {
  const SensitivitySystem& S = p.sys;
  const IndexSets J = classify_index_sets(p.kkt, params.eps);
  const RobotInputs &ra = robots[p.a], &rb = robots[p.b];
  const Mat G = detail::block_diag(ra.g, rb.g);
  Vec F(ra.f.size() + rb.f.size());
  F << ra.f, rb.f;
  const int m = static_cast<int>(G.cols()), l2 = 2 * S.l, r = S.r();
  const int cols = m + l2 + r;
  auto flat = [&](const ConstraintIndex& c) { return c.body == 0 ? c.row : S.ri + c.row; };
  std::vector<char> in0(r, 0), in1(r, 0), in2e(r, 0), forced(r, 0);
  for (const auto& c : J.J0) in0[flat(c)] = 1;
  for (const auto& c : J.J1) in1[flat(c)] = 1;
  for (const auto& c : J.J2eps) in2e[flat(c)] = 1;
  for (int k : branch_rate_zero) forced[k] = 1;

  PairBlock blk;
  blk.robot_a = p.a;
  blk.robot_b = p.b;
  blk.h = p.kkt.h;
  blk.num_aux = l2 + r;

  std::vector<Eigen::RowVectorXd> eq_rows, in_rows;
  std::vector<double> eq_rhs, in_rhs;
  // NCBF row: -2 s'(z_dot_i - z_dot_j) <= kappa
  {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(cols);
    row.segment(m, S.l) = -2.0 * S.s.transpose();
    row.segment(m + S.l, S.l) = 2.0 * S.s.transpose();
    in_rows.push_back(row);
    in_rhs.push_back(params.kappa(p.kkt.h - params.eps1_sq));
  }
  // stationarity rate: hess_L z_dot + grad_zA' lambda_dot + grad_xzL (F + G u) = 0
  const Mat XG = S.grad_xzL * G;
  const Vec XF = S.grad_xzL * F;
  for (int q = 0; q < l2; ++q) {
    Eigen::RowVectorXd row(cols);
    row << XG.row(q), S.hess_L.row(q), S.grad_zA.col(q).transpose();
    eq_rows.push_back(row);
    eq_rhs.push_back(-XF(q));
  }
  // constraint rates: grad_zA_k z_dot + grad_xA_k (F + G u)
  for (int k = 0; k < r; ++k) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(cols);
    row.head(m) = S.grad_xA.row(k) * G;
    row.segment(m, l2) = S.grad_zA.row(k);
    const double rhs = -S.grad_xA.row(k).dot(F);
    if (in1[k] || forced[k]) {
      eq_rows.push_back(row);
      eq_rhs.push_back(rhs);
    } else if (in2e[k]) {
      in_rows.push_back(row);
      in_rhs.push_back(rhs);
    }
  }
  blk.Eq.resize(static_cast<Eigen::Index>(eq_rows.size()), cols);
  blk.eq_rhs.resize(static_cast<Eigen::Index>(eq_rows.size()));
  for (std::size_t q = 0; q < eq_rows.size(); ++q) {
    blk.Eq.row(q) = eq_rows[q];
    blk.eq_rhs(q) = eq_rhs[q];
  }
  blk.In.resize(static_cast<Eigen::Index>(in_rows.size()), cols);
  blk.in_rhs.resize(static_cast<Eigen::Index>(in_rows.size()));
  for (std::size_t q = 0; q < in_rows.size(); ++q) {
    blk.In.row(q) = in_rows[q];
    blk.in_rhs(q) = in_rhs[q];
  }
  blk.aux_lower.resize(l2 + r);
  blk.aux_upper.resize(l2 + r);
  blk.aux_lower.head(l2).setConstant(-params.M);
  blk.aux_upper.head(l2).setConstant(params.M);
  for (int k = 0; k < r; ++k) {
    const bool complementarity_candidate = in2e[k] && in0[k] && !in1[k];
    double lo = -params.M, hi = params.M;
    if (!in0[k]) lo = hi = 0.0;
    else if (in2e[k]) lo = 0.0;
    if (complementarity_candidate && !forced[k]) hi = 0.0;
    blk.aux_lower(l2 + k) = lo;
    blk.aux_upper(l2 + k) = hi;
  }
  return blk;
}

/// Flat indices of constraints whose complementarity row is bilinear.
inline std::vector<int> complementarity_candidates(const StrictPairData& p, double eps) {
  const IndexSets J = classify_index_sets(p.kkt, eps);
  std::vector<int> out;
  for (const auto& c : J.J2eps) {
    const int k = c.body == 0 ? c.row : p.sys.ri + c.row;
    if (IndexSets::has(J.J0, c.body, c.row) && !IndexSets::has(J.J1, c.body, c.row)) out.push_back(k);
  }
  return out;
}

/// Dual-rate formulation for a polytope pair over aux = lambda_dot.
inline PairBlock polytope_block(const PolytopePairData& p, const std::vector<RobotInputs>& robots,
                                const NCBFParams& params) {
  const RobotInputs &ra = robots[p.a], &rb = robots[p.b];
  const int ma = ra.input_dim(), mb = rb.input_dim();
  const Vec& li = p.kkt.lambda_i;
  const Vec& lj = p.kkt.lambda_j;
  const int ri = static_cast<int>(li.size()), rj = static_cast<int>(lj.size());
  const int l = static_cast<int>(p.ha.A.cols());
  const int cols = ma + mb + ri + rj;
  if (static_cast<int>(p.ra.LgA.size()) != ma || static_cast<int>(p.rb.LgA.size()) != mb)
    throw std::invalid_argument("polytope rates do not match robot input dimensions");

  PairBlock blk;
  blk.robot_a = p.a;
  blk.robot_b = p.b;
  blk.h = p.kkt.h;
  blk.num_aux = ri + rj;
  const Vec w = p.ha.A.transpose() * li;

  // Lambda_dot = c' lambda_dot + d_u' u + d0
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(cols);
  for (int c = 0; c < ma; ++c)
    row(c) = -0.5 * w.dot(p.ra.LgA[c].transpose() * li) - li.dot(p.ra.Lgb.col(c));
  for (int c = 0; c < mb; ++c) row(ma + c) = -lj.dot(p.rb.Lgb.col(c));
  row.segment(ma + mb, ri) = (-0.5 * p.ha.A * w - p.ha.b).transpose();
  row.segment(ma + mb + ri, rj) = -p.hb.b.transpose();
  const double d0 = -0.5 * w.dot(p.ra.LfA.transpose() * li) - li.dot(p.ra.Lfb) - lj.dot(p.rb.Lfb);
  blk.In = -row;
  blk.in_rhs = Vec::Constant(1, params.kappa(p.kkt.h - params.eps1_sq) + d0);

  // A_i' ld_i + A_j' ld_j + Adot_i' l_i + Adot_j' l_j = 0
  blk.Eq = Mat::Zero(l, cols);
  for (int c = 0; c < ma; ++c) blk.Eq.col(c) = p.ra.LgA[c].transpose() * li;
  for (int c = 0; c < mb; ++c) blk.Eq.col(ma + c) = p.rb.LgA[c].transpose() * lj;
  blk.Eq.block(0, ma + mb, l, ri) = p.ha.A.transpose();
  blk.Eq.block(0, ma + mb + ri, l, rj) = p.hb.A.transpose();
  blk.eq_rhs = -(p.ra.LfA.transpose() * li + p.rb.LfA.transpose() * lj);

  blk.aux_lower.resize(ri + rj);
  blk.aux_upper = Vec::Constant(ri + rj, params.M);
  auto lower = [&](double lam) {
    if (lam < params.eps) return 0.0;
    return params.hold_interval > 0 ? std::max(-params.M, -lam / params.hold_interval) : -params.M;
  };
  for (int k = 0; k < ri; ++k) blk.aux_lower(k) = lower(li(k));
  for (int k = 0; k < rj; ++k) blk.aux_lower(ri + k) = lower(lj(k));
  return blk;
}

/// Layout of the aggregated program: u = (u^1, ..., u^N), then each pair's aux block.
struct AggregateLayout {
  std::vector<int> u_offset;   // per robot
  std::vector<int> aux_offset;  // per block
  std::vector<int> barrier_row;  // per block, row in A_in
  int num_u = 0;
};

inline QuadProgram aggregate_multi_robot(const std::vector<RobotInputs>& robots, const std::vector<PairBlock>& blocks,
                                         const NCBFParams& params, AggregateLayout* layout_out = nullptr) {
  AggregateLayout L;
  for (const auto& r : robots) {
    detail::check_robot(r);
    L.u_offset.push_back(L.num_u);
    L.num_u += r.input_dim();
  }
  int nv = L.num_u, neq = 0, nin = 0;
  for (const auto& b : blocks) {
    if (b.robot_a < 0 || b.robot_b < 0 || b.robot_a >= static_cast<int>(robots.size()) ||
        b.robot_b >= static_cast<int>(robots.size()) || b.robot_a == b.robot_b)
      throw std::invalid_argument("pair block refers to invalid robots");
    const int local = robots[b.robot_a].input_dim() + robots[b.robot_b].input_dim() + b.num_aux;
    if (b.Eq.cols() != local || b.In.cols() != local || b.aux_lower.size() != b.num_aux ||
        b.aux_upper.size() != b.num_aux)
      throw std::invalid_argument("pair block has mismatched dimensions");
    L.aux_offset.push_back(nv);
    nv += b.num_aux;
    neq += static_cast<int>(b.Eq.rows());
    nin += static_cast<int>(b.In.rows());
  }

  QuadProgram p;
  p.H = Mat::Zero(nv, nv);
  p.H.topLeftCorner(L.num_u, L.num_u) = 2.0 * Mat::Identity(L.num_u, L.num_u);
  p.f = Vec::Zero(nv);
  p.lower = Vec::Constant(nv, -kInf);
  p.upper = Vec::Constant(nv, kInf);
  for (std::size_t a = 0; a < robots.size(); ++a) {
    const int m = robots[a].input_dim();
    if (params.cost == FilterCost::track_nominal) p.f.segment(L.u_offset[a], m) = -2.0 * robots[a].u_nom;
    p.lower.segment(L.u_offset[a], m) = robots[a].u_lower;
    p.upper.segment(L.u_offset[a], m) = robots[a].u_upper;
  }
  p.A_eq = Mat::Zero(neq, nv);
  p.b_eq = Vec::Zero(neq);
  p.A_in = Mat::Zero(nin, nv);
  p.b_in = Vec::Zero(nin);
  int re = 0, ri = 0;
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const PairBlock& b = blocks[bi];
    const int ma = robots[b.robot_a].input_dim(), mb = robots[b.robot_b].input_dim();
    const int oa = L.u_offset[b.robot_a], ob = L.u_offset[b.robot_b], ox = L.aux_offset[bi];
    auto place = [&](const Mat& src, Mat& dst, int row0) {
      dst.block(row0, oa, src.rows(), ma) += src.leftCols(ma);
      dst.block(row0, ob, src.rows(), mb) += src.middleCols(ma, mb);
      dst.block(row0, ox, src.rows(), b.num_aux) = src.rightCols(b.num_aux);
    };
    place(b.Eq, p.A_eq, re);
    p.b_eq.segment(re, b.Eq.rows()) = b.eq_rhs;
    place(b.In, p.A_in, ri);
    p.b_in.segment(ri, b.In.rows()) = b.in_rhs;
    L.barrier_row.push_back(ri + b.barrier_row);
    p.lower.segment(ox, b.num_aux) = b.aux_lower;
    p.upper.segment(ox, b.num_aux) = b.aux_upper;
    re += static_cast<int>(b.Eq.rows());
    ri += static_cast<int>(b.In.rows());
  }
  if (layout_out) *layout_out = std::move(L);
  return p;
}

enum class FilterStatus { optimal, infeasible_fallback, solver_failure };

inline const char* to_string(FilterStatus s) {
  switch (s) {
    case FilterStatus::optimal: return "optimal";
    case FilterStatus::infeasible_fallback: return "infeasible_fallback";
    case FilterStatus::solver_failure: return "solver_failure";
  }
  return "unknown";
}

struct PairOutcome {
  int a = 0, b = 1;
  double h = 0.0;
  double margin = 0.0;  // barrier row LHS - RHS at u*
  bool fast_path = false;
  Vec aux;  // raw auxiliary block
  Vec z_dot;
  Vec lambda_dot;
};

struct SafetyFilterResult {
  Vec u;                          // stacked over robots
  std::vector<Vec> u_per_robot;
  std::vector<PairOutcome> pairs;
  FilterStatus status = FilterStatus::optimal;
  SolveStatus qp_status = SolveStatus::optimal;
  double objective = 0.0;
  double solve_time_ms = 0.0;
  int branches = 0;
  bool branch_fallback = false;
  bool fast_path = false;  // every enforced pair used the gradient row
  QuadProgram program;      // last program solved

  bool ok() const { return status == FilterStatus::optimal; }
};

inline std::vector<int> select_enforced_pairs(const std::vector<double>& h, const NCBFParams& params) {
  std::vector<int> out;
  for (std::size_t k = 0; k < h.size(); ++k)
    if (h[k] <= params.enforcement_radius_sq) out.push_back(static_cast<int>(k));
  return out;
}

namespace detail {

inline void split_inputs(const std::vector<RobotInputs>& robots, const Vec& u, std::vector<Vec>& out) {
  out.clear();
  int off = 0;
  for (const auto& r : robots) {
    out.push_back(u.segment(off, r.input_dim()));
    off += r.input_dim();
  }
}

inline SafetyFilterResult fallback_zero(const std::vector<RobotInputs>& robots, SolveStatus st) {
  SafetyFilterResult res;
  int total = 0;
  for (const auto& r : robots) total += r.input_dim();
  res.u = Vec::Zero(total);
  split_inputs(robots, res.u, res.u_per_robot);
  res.qp_status = st;
  res.status = st == SolveStatus::infeasible ? FilterStatus::infeasible_fallback : FilterStatus::solver_failure;
  if (st == SolveStatus::infeasible) ++event_counters().filter_infeasible;
  return res;
}

}  // namespace detail

/// Solves the aggregated program for a fixed set of pair blocks.
inline SafetyFilterResult solve_filter(const std::vector<RobotInputs>& robots, const std::vector<PairBlock>& blocks,
                                       const NCBFParams& params, QpSolver* warm = nullptr) {
  AggregateLayout L;
  QuadProgram p = aggregate_multi_robot(robots, blocks, params, &L);
  if (blocks.empty() && params.cost == FilterCost::track_nominal) {
    // plain box projection, no QP needed
    SafetyFilterResult res;
    res.u = p.upper.cwiseMin(p.lower.cwiseMax(-0.5 * p.f));
    detail::split_inputs(robots, res.u, res.u_per_robot);
    for (std::size_t a = 0; a < robots.size(); ++a) res.objective += (res.u_per_robot[a] - robots[a].u_nom).squaredNorm();
    res.program = std::move(p);
    return res;
  }
  const SolveReport rep = warm ? warm->solve(p) : solve_qp(p);
  if (!rep.ok()) {
    SafetyFilterResult res = detail::fallback_zero(robots, rep.status);
    res.program = std::move(p);
    return res;
  }
  SafetyFilterResult res;
  res.u = rep.primal.head(L.num_u);
  detail::split_inputs(robots, res.u, res.u_per_robot);
  res.qp_status = rep.status;
  res.objective = 0.0;
  for (std::size_t a = 0; a < robots.size(); ++a)
    res.objective += params.cost == FilterCost::track_nominal ? (res.u_per_robot[a] - robots[a].u_nom).squaredNorm()
                                                              : res.u_per_robot[a].squaredNorm();
  res.fast_path = !blocks.empty();
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const PairBlock& b = blocks[bi];
    PairOutcome o;
    o.a = b.robot_a;
    o.b = b.robot_b;
    o.h = b.h;
    o.fast_path = b.fast_path;
    res.fast_path = res.fast_path && b.fast_path;
    const int row = L.barrier_row[bi];
    o.margin = p.b_in(row) - p.A_in.row(row).dot(rep.primal);
    o.aux = rep.primal.segment(L.aux_offset[bi], b.num_aux);
    res.pairs.push_back(std::move(o));
  }
  res.program = std::move(p);
  return res;
}

/// Strict pairs: fast gradient row per pair when strict complementarity
/// holds, otherwise the full rate rows with complementarity branching.
inline SafetyFilterResult filter_strict(const std::vector<RobotInputs>& robots, const std::vector<StrictPairData>& pairs,
                                        const NCBFParams& params, QpSolver* warm = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::optional<Vec>> fast(pairs.size());
  std::vector<std::vector<int>> cand(pairs.size());
  int total_cand = 0;
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    const auto& p = pairs[q];
    if (params.fast_path && p.kkt.strict_complementarity && p.sys.cond <= kSingularCond) {
      fast[q] = grad_h_strict(p.sys, p.kkt.index_sets).grad;
      continue;
    }
    cand[q] = complementarity_candidates(p, params.eps);
    total_cand += static_cast<int>(cand[q].size());
  }
  long num_branches = 1;
  bool conservative = false;
  if (total_cand > 0) {
    if (total_cand >= 31 || (1L << total_cand) > params.max_branches) {
      conservative = true;
      ++event_counters().branch_fallback;
      log_message(LogLevel::info, "complementarity branches exceed cap; using lambda_dot = 0 on all candidates");
    } else {
      num_branches = 1L << total_cand;
    }
  }

  SafetyFilterResult best;
  bool have = false;
  SolveStatus last = SolveStatus::infeasible;
  for (long mask = 0; mask < num_branches; ++mask) {
    std::vector<PairBlock> blocks;
    int bit = 0;
    for (std::size_t q = 0; q < pairs.size(); ++q) {
      if (fast[q]) {
        blocks.push_back(strict_fast_block(pairs[q], robots, params, *fast[q]));
        continue;
      }
      std::vector<int> rate_zero;
      for (int k : cand[q]) {
        if (!conservative && (mask >> bit) & 1L) rate_zero.push_back(k);
        ++bit;
      }
      blocks.push_back(strict_full_block(pairs[q], robots, params, rate_zero));
    }
    // warm start only the plain single-branch program
    SafetyFilterResult r = solve_filter(robots, blocks, params, num_branches == 1 ? warm : nullptr);
    last = r.qp_status;
    if (r.ok() && (!have || r.objective < best.objective - 1e-12)) {
      best = std::move(r);
      have = true;
    } else if (!have && !r.ok()) {
      best = std::move(r);
    }
  }
  if (have) best.status = FilterStatus::optimal;
  else if (last != SolveStatus::infeasible && best.status == FilterStatus::optimal)
    best.status = FilterStatus::solver_failure;
  best.branches = static_cast<int>(num_branches);
  best.branch_fallback = conservative;
  for (std::size_t q = 0; q < pairs.size() && q < best.pairs.size(); ++q) {
    const Vec& aux = best.pairs[q].aux;
    const int l2 = 2 * pairs[q].sys.l;
    if (!best.pairs[q].fast_path && aux.size() == l2 + pairs[q].sys.r()) {
      best.pairs[q].z_dot = aux.head(l2);
      best.pairs[q].lambda_dot = aux.tail(pairs[q].sys.r());
    }
  }
  best.solve_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return best;
}

inline SafetyFilterResult filter_polytope(const std::vector<RobotInputs>& robots,
                                          const std::vector<PolytopePairData>& pairs, const NCBFParams& params,
                                          QpSolver* warm = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<PairBlock> blocks;
  for (const auto& p : pairs) blocks.push_back(polytope_block(p, robots, params));
  SafetyFilterResult r = solve_filter(robots, blocks, params, warm);
  for (auto& o : r.pairs) o.lambda_dot = o.aux;
  r.branches = 1;
  r.solve_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace ncbf
