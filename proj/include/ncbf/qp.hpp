#pragma once

// Small dense convex QP / LP solver.
//
//   minimize    1/2 v'Hv + f'v
//   subject to  A_eq v  = b_eq
//               A_in v <= b_in
//               lower <= v <= upper
//
// Primal active-set method on the null space of the working set. Variable
// bounds are handled by fixing variables rather than as general rows, which
// keeps the per-iteration factorizations small for the safety-filter QPs
// (most auxiliary rates sit on a bound). H only needs to be positive
// semidefinite: zero-curvature directions are followed as rays until a
// constraint blocks, so LPs (H = 0) use the same code path.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncbf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct QuadProgram {
  Mat H;
  Vec f;
  Mat A_eq;
  Vec b_eq;
  Mat A_in;
  Vec b_in;
  /// Empty means unbounded; individual entries may be +-inf.
  Vec lower;
  Vec upper;

  int num_vars() const { return static_cast<int>(f.size()); }
};

enum class SolveStatus { optimal, infeasible, max_iter, unbounded };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::unbounded: return "unbounded";
  }
  return "unknown";
}

/// Primal point plus the working set that was optimal for it.
struct WarmStart {
  Vec primal;
  std::vector<int> active_rows;  // indices into A_in
  std::vector<int> at_lower;     // variable indices fixed at their lower bound
  std::vector<int> at_upper;
};

/// Dual sign convention: the Lagrangian is
///   1/2 v'Hv + f'v + dual_eq'(A_eq v - b_eq) + dual_in'(A_in v - b_in)
///   + dual_lower'(lower - v) + dual_upper'(v - upper)
/// so that every inequality dual is nonnegative at an optimum.
struct SolveReport {
  Vec primal;
  Vec dual_eq;
  Vec dual_in;
  Vec dual_lower;
  Vec dual_upper;
  double objective = 0.0;
  double stationarity = 0.0;
  double primal_infeasibility = 0.0;
  double complementarity = 0.0;
  SolveStatus status = SolveStatus::max_iter;
  int iterations = 0;
  double wall_time_ms = 0.0;
  WarmStart working_set;

  bool ok() const { return status == SolveStatus::optimal; }
};

struct QpOptions {
  double tol = 1e-8;
  int max_iter = 0;  // 0 selects a size-based default
};

namespace detail {

inline double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

inline double mat_scale(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline Vec or_fill(const Vec& v, int n, double value) {
  if (v.size() == 0) return Vec::Constant(n, value);
  if (v.size() != n) throw std::invalid_argument("qp: bound vector has wrong length");
  return v;
}

/// Indices of a maximal linearly independent subset of the rows of M, chosen
/// in row order.
inline std::vector<int> independent_rows(const Mat& M, double rel_tol = 1e-10) {
  std::vector<int> keep;
  if (M.rows() == 0) return keep;
  const double scale = std::max(1.0, mat_scale(M));
  Mat basis(0, M.cols());
  for (int i = 0; i < M.rows(); ++i) {
    Mat trial(basis.rows() + 1, M.cols());
    trial << basis, M.row(i);
    Eigen::ColPivHouseholderQR<Mat> qr(trial.transpose());
    qr.setThreshold(rel_tol * scale);
    if (qr.rank() == trial.rows()) {
      basis = trial;
      keep.push_back(i);
    }
  }
  return keep;
}

enum class Fix : char { free, lower, upper };

/// One run of the active-set iteration from a feasible start.
class ActiveSetRun {
 public:
  ActiveSetRun(const Mat& H, const Vec& f, const Mat& E, const Mat& C, const Vec& d, const Vec& lo,
               const Vec& hi, bool h_is_zero, double tol, int max_iter)
      : H_(H), f_(f), E_(E), C_(C), d_(d), lo_(lo), hi_(hi), h_zero_(h_is_zero), tol_(tol),
        max_iter_(max_iter) {
    const int n = static_cast<int>(f.size());
    scale_ = std::max({1.0, mat_scale(C), mat_scale(E), mat_scale(H), inf_norm(f)});
    fix_.assign(n, Fix::free);
    in_working_.assign(C.rows(), false);
  }

  SolveStatus status = SolveStatus::max_iter;
  int iterations = 0;
  Vec v;
  Vec mu_eq, mu_in, mu_lo, mu_hi;

  /// Builds the initial working set from constraints active at v0. Hinted
  /// constraints are tried first.
  void initialize(const Vec& v0, const WarmStart* hint) {
    v = v0;
    const int n = static_cast<int>(v.size());
    const double act = 1e-11 * scale_;
    auto try_fix = [&](int j, Fix side) {
      if (fix_[j] != Fix::free) return;
      fix_[j] = side;
      if (!working_rank_ok()) {
        fix_[j] = Fix::free;
        return;
      }
      v(j) = side == Fix::lower ? lo_(j) : hi_(j);
    };
    auto try_row = [&](int i) {
      if (in_working_[i]) return;
      working_.push_back(i);
      in_working_[i] = true;
      if (!working_rank_ok()) {
        working_.pop_back();
        in_working_[i] = false;
      }
    };
    // Variables with lo == hi are fixed for the whole run.
    for (int j = 0; j < n; ++j)
      if (lo_(j) == hi_(j)) try_fix(j, Fix::lower);
    if (hint) {
      for (int j : hint->at_lower)
        if (j < n && std::isfinite(lo_(j)) && std::abs(v(j) - lo_(j)) <= act) try_fix(j, Fix::lower);
      for (int j : hint->at_upper)
        if (j < n && std::isfinite(hi_(j)) && std::abs(v(j) - hi_(j)) <= act) try_fix(j, Fix::upper);
      for (int i : hint->active_rows)
        if (i < C_.rows() && std::abs(C_.row(i).dot(v) - d_(i)) <= act) try_row(i);
    } else {
      for (int j = 0; j < n; ++j) {
        if (std::isfinite(lo_(j)) && std::abs(v(j) - lo_(j)) <= act) try_fix(j, Fix::lower);
        else if (std::isfinite(hi_(j)) && std::abs(v(j) - hi_(j)) <= act) try_fix(j, Fix::upper);
      }
      for (int i = 0; i < C_.rows(); ++i)
        if (std::abs(C_.row(i).dot(v) - d_(i)) <= act) try_row(i);
    }
  }

  void run() {
    const int n = static_cast<int>(v.size());
    int degenerate_streak = 0;
    for (iterations = 0; iterations < max_iter_; ++iterations) {
      std::vector<int> free_idx;
      for (int j = 0; j < n; ++j)
        if (fix_[j] == Fix::free) free_idx.push_back(j);
      const int nf = static_cast<int>(free_idx.size());
      const Mat AW = working_matrix(free_idx);  // rows: equalities then working rows
      const int kw = static_cast<int>(AW.rows());

      const Vec g = gradient();
      Vec gF(nf);
      for (int a = 0; a < nf; ++a) gF(a) = g(free_idx[a]);

      Mat Q1, Z, R;
      factor(AW, nf, Q1, Z, R);

      Vec p = Vec::Zero(n);
      bool ray = false;
      if (Z.cols() > 0) {
        const Vec gz = Z.transpose() * gF;
        const double gscale = std::max(1.0, inf_norm(g));
        Vec step_z;
        if (h_zero_) {
          if (inf_norm(gz) > 1e-12 * gscale) {
            step_z = -gz;
            ray = true;
          }
        } else {
          Mat HF(nf, nf);
          for (int a = 0; a < nf; ++a)
            for (int b = 0; b < nf; ++b) HF(a, b) = H_(free_idx[a], free_idx[b]);
          const Mat Hz = Z.transpose() * HF * Z;
          Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Hz + Hz.transpose()));
          const Vec& ev = es.eigenvalues();
          const Mat& U = es.eigenvectors();
          const double thr = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
          const Vec ugz = U.transpose() * gz;
          Vec null_part = Vec::Zero(gz.size());
          Vec newton = Vec::Zero(gz.size());
          for (int k = 0; k < ev.size(); ++k) {
            if (ev(k) > thr) newton -= U.col(k) * (ugz(k) / ev(k));
            else null_part += U.col(k) * ugz(k);
          }
          if (inf_norm(null_part) > 1e-12 * gscale) {
            step_z = -null_part;
            ray = true;
          } else {
            step_z = newton;
          }
        }
        if (step_z.size()) {
          const Vec pF = Z * step_z;
          for (int a = 0; a < nf; ++a) p(free_idx[a]) = pF(a);
        }
      }

      const double pnorm = inf_norm(p);
      if (pnorm <= 1e-11 * std::max(1.0, inf_norm(v)) && !ray) {
        // Stationary on the working set: check multiplier signs.
        compute_multipliers(free_idx, AW, Q1, R, g, kw);
        // Candidates are keyed by a global order: rows first, then variables.
        // After a degenerate step the lowest-index candidate leaves (Bland),
        // otherwise the most negative multiplier does.
        const double dtol = 1e-3 * tol_ * std::max(1.0, inf_norm(g));
        const bool bland = degenerate_streak > 0;
        long best_key = -1;
        double best_val = 0.0;
        auto consider = [&](long key, double m) {
          if (m >= -dtol) return;
          const bool better = best_key < 0 || (bland ? key < best_key : (m < best_val || (m == best_val && key < best_key)));
          if (better) {
            best_key = key;
            best_val = m;
          }
        };
        for (std::size_t w = 0; w < working_.size(); ++w) consider(working_[w], mu_in(working_[w]));
        for (int j = 0; j < n; ++j) {
          if (fix_[j] == Fix::free || lo_(j) == hi_(j)) continue;
          consider(static_cast<long>(C_.rows()) + j, fix_[j] == Fix::lower ? mu_lo(j) : mu_hi(j));
        }
        if (best_key < 0) {
          status = SolveStatus::optimal;
          return;
        }
        if (best_key >= C_.rows()) {
          fix_[best_key - C_.rows()] = Fix::free;
        } else {
          const int row = static_cast<int>(best_key);
          in_working_[row] = false;
          working_.erase(std::find(working_.begin(), working_.end(), row));
        }
        continue;
      }

      // Ratio test. Ties go to the lowest index.
      double alpha = ray ? kInf : 1.0;
      if (ray) p /= pnorm;
      int block_row = -1, block_var = -1;
      for (int i = 0; i < C_.rows(); ++i) {
        if (in_working_[i]) continue;
        const double cp = C_.row(i).dot(p);
        if (cp <= 1e-13 * std::max(1.0, C_.row(i).cwiseAbs().maxCoeff()) * inf_norm(p)) continue;
        const double slack = std::max(0.0, d_(i) - C_.row(i).dot(v));
        const double a = slack / cp;
        if (a < alpha) {
          alpha = a;
          block_row = i;
          block_var = -1;
        }
      }
      for (int j = 0; j < n; ++j) {
        if (fix_[j] != Fix::free || p(j) == 0.0) continue;
        double a = kInf;
        if (p(j) < 0 && std::isfinite(lo_(j))) a = std::max(0.0, v(j) - lo_(j)) / -p(j);
        if (p(j) > 0 && std::isfinite(hi_(j))) a = std::max(0.0, hi_(j) - v(j)) / p(j);
        if (a < alpha) {
          alpha = a;
          block_var = j;
          block_row = -1;
        }
      }
      if (!std::isfinite(alpha)) {
        status = SolveStatus::unbounded;
        return;
      }
      v += alpha * p;
      degenerate_streak = alpha == 0.0 ? degenerate_streak + 1 : 0;
      if (block_var >= 0) {
        fix_[block_var] = p(block_var) < 0 ? Fix::lower : Fix::upper;
        v(block_var) = fix_[block_var] == Fix::lower ? lo_(block_var) : hi_(block_var);
      } else if (block_row >= 0) {
        working_.push_back(block_row);
        in_working_[block_row] = true;
      }
    }
    status = SolveStatus::max_iter;
    std::vector<int> free_idx;
    for (int j = 0; j < n; ++j)
      if (fix_[j] == Fix::free) free_idx.push_back(j);
    const Mat AW = working_matrix(free_idx);
    Mat Q1, Z, R;
    factor(AW, static_cast<int>(free_idx.size()), Q1, Z, R);
    compute_multipliers(free_idx, AW, Q1, R, gradient(), static_cast<int>(AW.rows()));
  }

  WarmStart working_set() const {
    WarmStart w;
    w.primal = v;
    w.active_rows = working_;
    for (int j = 0; j < static_cast<int>(fix_.size()); ++j) {
      if (fix_[j] == Fix::lower) w.at_lower.push_back(j);
      if (fix_[j] == Fix::upper) w.at_upper.push_back(j);
    }
    return w;
  }

 private:
  Vec gradient() const {
    if (h_zero_) return f_;
    return H_ * v + f_;
  }

  Mat working_matrix(const std::vector<int>& free_idx) const {
    const int nf = static_cast<int>(free_idx.size());
    Mat AW(E_.rows() + static_cast<Eigen::Index>(working_.size()), nf);
    for (int a = 0; a < nf; ++a) {
      for (int i = 0; i < E_.rows(); ++i) AW(i, a) = E_(i, free_idx[a]);
      for (std::size_t w = 0; w < working_.size(); ++w)
        AW(E_.rows() + static_cast<Eigen::Index>(w), a) = C_(working_[w], free_idx[a]);
    }
    return AW;
  }

  bool working_rank_ok() const {
    std::vector<int> free_idx;
    for (int j = 0; j < static_cast<int>(fix_.size()); ++j)
      if (fix_[j] == Fix::free) free_idx.push_back(j);
    const Mat AW = working_matrix(free_idx);
    if (AW.rows() == 0) return true;
    if (AW.rows() > AW.cols()) return false;
    Eigen::ColPivHouseholderQR<Mat> qr(AW.transpose());
    qr.setThreshold(1e-10 * std::max(1.0, mat_scale(AW)));
    return qr.rank() == AW.rows();
  }

  static void factor(const Mat& AW, int nf, Mat& Q1, Mat& Z, Mat& R) {
    const int kw = static_cast<int>(AW.rows());
    if (kw == 0) {
      Q1.resize(nf, 0);
      R.resize(0, 0);
      Z = Mat::Identity(nf, nf);
      return;
    }
    Eigen::HouseholderQR<Mat> qr(AW.transpose());
    const Mat Q = qr.householderQ() * Mat::Identity(nf, nf);
    Q1 = Q.leftCols(kw);
    Z = Q.rightCols(nf - kw);
    R = qr.matrixQR().topLeftCorner(kw, kw).triangularView<Eigen::Upper>();
  }

  void compute_multipliers(const std::vector<int>& free_idx, const Mat& AW, const Mat& Q1,
                           const Mat& R, const Vec& g, int kw) {
    const int n = static_cast<int>(v.size());
    const int nf = static_cast<int>(free_idx.size());
    Vec mu = Vec::Zero(kw);
    if (kw > 0) {
      Vec gF(nf);
      for (int a = 0; a < nf; ++a) gF(a) = g(free_idx[a]);
      // AW' mu = -gF with AW' = Q1 R.
      mu = R.triangularView<Eigen::Upper>().solve(-(Q1.transpose() * gF));
    }
    (void)AW;
    const int ne = static_cast<int>(E_.rows());
    mu_eq = mu.head(ne);
    mu_in = Vec::Zero(C_.rows());
    for (std::size_t w = 0; w < working_.size(); ++w) mu_in(working_[w]) = mu(ne + static_cast<int>(w));
    // Residual on fixed variables gives the bound multipliers.
    Vec r = g;
    if (ne) r += E_.transpose() * mu_eq;
    if (C_.rows()) r += C_.transpose() * mu_in;
    mu_lo = Vec::Zero(n);
    mu_hi = Vec::Zero(n);
    for (int j = 0; j < n; ++j) {
      if (fix_[j] == Fix::lower) mu_lo(j) = r(j);
      if (fix_[j] == Fix::upper) mu_hi(j) = -r(j);
    }
  }

  const Mat& H_;
  const Vec& f_;
  const Mat& E_;
  const Mat& C_;
  const Vec& d_;
  const Vec& lo_;
  const Vec& hi_;
  bool h_zero_;
  double tol_;
  int max_iter_;
  double scale_ = 1.0;
  std::vector<Fix> fix_;
  std::vector<int> working_;
  std::vector<bool> in_working_;
};

inline void fill_residuals(const QuadProgram& p, const Vec& lo, const Vec& hi, SolveReport& r) {
  const Vec& v = r.primal;
  Vec stat = p.f;
  if (p.H.size()) stat += p.H * v;
  if (p.A_eq.rows()) stat += p.A_eq.transpose() * r.dual_eq;
  if (p.A_in.rows()) stat += p.A_in.transpose() * r.dual_in;
  stat += r.dual_upper - r.dual_lower;
  r.stationarity = inf_norm(stat);
  double infeas = 0.0, comp = 0.0;
  if (p.A_eq.rows()) infeas = std::max(infeas, inf_norm(p.A_eq * v - p.b_eq));
  if (p.A_in.rows()) {
    const Vec s = p.A_in * v - p.b_in;
    infeas = std::max(infeas, std::max(0.0, s.maxCoeff()));
    for (int i = 0; i < s.size(); ++i) comp = std::max(comp, std::abs(r.dual_in(i) * s(i)));
  }
  for (int j = 0; j < v.size(); ++j) {
    if (std::isfinite(lo(j))) {
      infeas = std::max(infeas, lo(j) - v(j));
      comp = std::max(comp, std::abs(r.dual_lower(j) * (v(j) - lo(j))));
    }
    if (std::isfinite(hi(j))) {
      infeas = std::max(infeas, v(j) - hi(j));
      comp = std::max(comp, std::abs(r.dual_upper(j) * (hi(j) - v(j))));
    }
  }
  r.primal_infeasibility = infeas;
  r.complementarity = comp;
  r.objective = p.f.dot(v) + (p.H.size() ? 0.5 * v.dot(p.H * v) : 0.0);
}

}  // namespace detail

/// Solves a convex QP. `warm` is an optional starting point and working-set
/// guess; it never changes the optimum, only the path to it.
inline SolveReport solve_qp(const QuadProgram& prob, const QpOptions& opt = {},
                            const WarmStart* warm = nullptr) {
  using namespace detail;
  const auto t0 = std::chrono::steady_clock::now();
  const int n = prob.num_vars();
  const Mat H = prob.H.size() ? Mat(0.5 * (prob.H + prob.H.transpose())) : Mat::Zero(n, n);
  if (H.rows() != n || H.cols() != n) throw std::invalid_argument("qp: H dimension mismatch");
  const Mat E = prob.A_eq.size() ? prob.A_eq : Mat(0, n);
  const Mat C = prob.A_in.size() ? prob.A_in : Mat(0, n);
  const Vec e = prob.b_eq.size() ? prob.b_eq : Vec(0);
  const Vec d = prob.b_in.size() ? prob.b_in : Vec(0);
  if (E.cols() != n || C.cols() != n || E.rows() != e.size() || C.rows() != d.size())
    throw std::invalid_argument("qp: constraint dimension mismatch");
  if (prob.H.size() && (prob.H - prob.H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, mat_scale(prob.H)))
    throw std::invalid_argument("qp: H is not symmetric");
  const Vec lo = or_fill(prob.lower, n, -kInf);
  const Vec hi = or_fill(prob.upper, n, kInf);
  for (int j = 0; j < n; ++j)
    if (lo(j) > hi(j)) {
      SolveReport r;
      r.status = SolveStatus::infeasible;
      r.primal = Vec::Zero(n);
      return r;
    }

  const bool h_zero = mat_scale(H) == 0.0;
  if (!h_zero) {
    // Accept eigenvalues down to -1e-10 * scale; the reduced-Hessian threshold
    // treats them as zero curvature.
    const double hs = mat_scale(H);
    Eigen::LLT<Mat> llt(H + 1e-10 * std::max(1.0, hs) * Mat::Identity(n, n));
    if (llt.info() != Eigen::Success) {
      Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, hs))
        throw std::invalid_argument("qp: H is not positive semidefinite");
    }
  }

  const double tol = opt.tol;
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : 100 + 10 * (n + static_cast<int>(C.rows()));
  const double feas_tol = tol * std::max(1.0, std::max(inf_norm(d), inf_norm(e)));

  // Drop linearly dependent equalities (consistency is checked by phase 1).
  const std::vector<int> eq_keep = independent_rows(E);
  Mat Er(static_cast<Eigen::Index>(eq_keep.size()), n);
  Vec er(static_cast<Eigen::Index>(eq_keep.size()));
  for (std::size_t k = 0; k < eq_keep.size(); ++k) {
    Er.row(static_cast<Eigen::Index>(k)) = E.row(eq_keep[k]);
    er(static_cast<Eigen::Index>(k)) = e(eq_keep[k]);
  }

  Vec v0 = (warm && warm->primal.size() == n) ? warm->primal : Vec::Zero(n);
  if (Er.rows()) {
    const Vec res = Er * v0 - er;
    if (inf_norm(res) > feas_tol) v0 -= Er.completeOrthogonalDecomposition().solve(res);
  }
  for (int j = 0; j < n; ++j) v0(j) = std::clamp(v0(j), lo(j), hi(j));

  auto violation = [&](const Vec& v) {
    double m = 0.0;
    if (E.rows()) m = std::max(m, inf_norm(E * v - e));
    if (C.rows()) m = std::max(m, (C * v - d).maxCoeff());
    return m;
  };

  int total_iter = 0;
  const WarmStart* hint = warm;
  if (violation(v0) > feas_tol) {
    // Phase 1: minimize t over (v, t) with |E v - e| <= t, C v - d <= t.
    hint = nullptr;
    const int m1 = n + 1;
    const int ne = static_cast<int>(E.rows()), ni = static_cast<int>(C.rows());
    Mat H1 = Mat::Zero(m1, m1);
    Vec f1 = Vec::Zero(m1);
    f1(n) = 1.0;
    Mat C1(2 * ne + ni, m1);
    Vec d1(2 * ne + ni);
    if (ne) {
      C1.topRows(ne) << E, -Vec::Ones(ne);
      C1.middleRows(ne, ne) << -E, -Vec::Ones(ne);
      d1.head(ne) = e;
      d1.segment(ne, ne) = -e;
    }
    if (ni) {
      C1.bottomRows(ni) << C, -Vec::Ones(ni);
      d1.tail(ni) = d;
    }
    Vec lo1(m1), hi1(m1);
    lo1 << lo, 0.0;
    hi1 << hi, kInf;
    Vec start(m1);
    start << v0, violation(v0);
    const Mat E1(0, m1);
    ActiveSetRun ph1(H1, f1, E1, C1, d1, lo1, hi1, true, tol, max_iter);
    ph1.initialize(start, nullptr);
    ph1.run();
    total_iter += ph1.iterations;
    if (ph1.status != SolveStatus::optimal || ph1.v(n) > feas_tol) {
      SolveReport r;
      r.status = ph1.status == SolveStatus::optimal ? SolveStatus::infeasible : ph1.status;
      if (ph1.v(n) > feas_tol && ph1.status != SolveStatus::max_iter) r.status = SolveStatus::infeasible;
      r.primal = ph1.v.head(n);
      r.iterations = total_iter;
      r.dual_eq = Vec::Zero(E.rows());
      r.dual_in = Vec::Zero(C.rows());
      r.dual_lower = Vec::Zero(n);
      r.dual_upper = Vec::Zero(n);
      r.primal_infeasibility = ph1.v(n);
      r.wall_time_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      return r;
    }
    v0 = ph1.v.head(n);
  }

  ActiveSetRun run(H, prob.f, Er, C, d, lo, hi, h_zero, tol, max_iter);
  run.initialize(v0, hint);
  run.run();
  total_iter += run.iterations;

  SolveReport r;
  r.status = run.status;
  r.primal = run.v;
  r.iterations = total_iter;
  r.dual_eq = Vec::Zero(E.rows());
  for (std::size_t k = 0; k < eq_keep.size(); ++k) r.dual_eq(eq_keep[k]) = run.mu_eq(static_cast<Eigen::Index>(k));
  r.dual_in = run.mu_in.size() ? run.mu_in : Vec::Zero(C.rows());
  r.dual_lower = run.mu_lo.size() ? run.mu_lo : Vec::Zero(n);
  r.dual_upper = run.mu_hi.size() ? run.mu_hi : Vec::Zero(n);
  r.working_set = run.working_set();
  detail::fill_residuals(prob, lo, hi, r);
  if (r.status == SolveStatus::optimal) {
    const double sscale = std::max(1.0, std::max(inf_norm(prob.f), mat_scale(H) * inf_norm(r.primal)));
    if (r.primal_infeasibility > feas_tol * 10 || r.stationarity > 1e2 * tol * sscale)
      r.status = SolveStatus::max_iter;
  }
  r.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Minimizes c'v over the polyhedron. Maximization is done by negating c.
inline SolveReport solve_lp(const Vec& c, const Mat& A_eq, const Vec& b_eq, const Mat& A_in, const Vec& b_in,
                            const Vec& lower, const Vec& upper, const QpOptions& opt = {},
                            const WarmStart* warm = nullptr) {
  QuadProgram p;
  p.f = c;
  p.A_eq = A_eq;
  p.b_eq = b_eq;
  p.A_in = A_in;
  p.b_in = b_in;
  p.lower = lower;
  p.upper = upper;
  return solve_qp(p, opt, warm);
}

/// Solver instance with a warm-start slot. Not safe for concurrent use.
class QpSolver {
 public:
  explicit QpSolver(QpOptions opt = {}) : opt_(opt) {}

  SolveReport solve(const QuadProgram& p) {
    const WarmStart* w = (warm_ && warm_->primal.size() == p.num_vars()) ? &*warm_ : nullptr;
    SolveReport r = solve_qp(p, opt_, w);
    // A stale working set can stall on a degenerate vertex; retry cold.
    if (!r.ok() && w) {
      const double spent = r.wall_time_ms;
      const int its = r.iterations;
      r = solve_qp(p, opt_, nullptr);
      r.wall_time_ms += spent;
      r.iterations += its;
    }
    if (r.ok()) warm_ = r.working_set;
    else warm_.reset();
    return r;
  }

  void reset_warm_start() { warm_.reset(); }
  const std::optional<WarmStart>& warm_start() const { return warm_; }

 private:
  QpOptions opt_;
  std::optional<WarmStart> warm_;
};

/// Plain-text dump used by the `dump-qp` debug command.
inline void write_qp_text(std::ostream& os, const QuadProgram& p) {
  const Eigen::IOFormat fmt(Eigen::FullPrecision, 0, " ", "\n");
  auto block = [&](const char* name, const auto& m) {
    os << name << " " << m.rows() << " " << m.cols() << "\n";
    if (m.size()) os << m.format(fmt) << "\n";
  };
  block("H", p.H);
  block("f", p.f);
  block("A_eq", p.A_eq);
  block("b_eq", p.b_eq);
  block("A_in", p.A_in);
  block("b_in", p.b_in);
  block("lower", p.lower);
  block("upper", p.upper);
}

}  // namespace ncbf
