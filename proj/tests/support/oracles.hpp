#pragma once

// Test-only reference computations. Nothing here calls into the solver paths
// it is used to check.

#include <Eigen/Dense>

#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Strictly convex QP  min 1/2 v'Hv + f'v  s.t.  C v <= d  solved by
/// accelerated projected gradient ascent on the dual (the projection onto
/// lambda >= 0 is a clip).
inline Vec dual_projected_gradient_qp(const Mat& H, const Vec& f, const Mat& C, const Vec& d,
                                      int iterations = 400000, double tol = 1e-13) {
  const Eigen::LLT<Mat> llt(H);
  const Mat Hinv_Ct = llt.solve(C.transpose());
  const Mat G = C * Hinv_Ct;  // dual Hessian (negated)
  const Vec Hinv_f = llt.solve(f);
  const double L = Eigen::SelfAdjointEigenSolver<Mat>(G, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double step = 1.0 / std::max(L, 1e-12);
  Vec lam = Vec::Zero(C.rows()), y = lam, prev = lam;
  double t = 1.0;
  for (int k = 0; k < iterations; ++k) {
    // Dual gradient: C v(lambda) - d with v(lambda) = -H^{-1}(f + C'lambda).
    const Vec grad = -C * Hinv_f - G * y - d;
    Vec next = (y + step * grad).cwiseMax(0.0);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / tn) * (next - lam);
    prev = lam;
    lam = next;
    t = tn;
    if (k % 1000 == 999) {
      if ((lam - prev).cwiseAbs().maxCoeff() < tol) break;
      // restart to kill oscillation
      t = 1.0;
      y = lam;
    }
  }
  return -(Hinv_f + Hinv_Ct * lam);
}

/// Exhaustive vertex enumeration for  min c'v  s.t.  C v <= d  (bounded
/// feasible region assumed). Returns +inf if no vertex exists.
inline double vertex_enumeration_lp(const Vec& c, const Mat& C, const Vec& d, Vec* argmin = nullptr) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(C.rows());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(n);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Mat S(n, n);
      Vec r(n);
      for (int k = 0; k < n; ++k) {
        S.row(k) = C.row(pick[k]);
        r(k) = d(pick[k]);
      }
      Eigen::FullPivLU<Mat> lu(S);
      if (lu.rank() < n) return;
      const Vec v = lu.solve(r);
      if (((C * v - d).array() > 1e-9).any()) return;
      const double val = c.dot(v);
      if (val < best) {
        best = val;
        if (argmin) *argmin = v;
      }
      return;
    }
    for (int i = start; i < m; ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

/// Central finite difference of a scalar function along direction dir.
inline double central_difference(const std::function<double(const Vec&)>& fn, const Vec& x, const Vec& dir,
                                 double step) {
  return (fn(x + step * dir) - fn(x - step * dir)) / (2.0 * step);
}

/// Central finite-difference Jacobian of a vector function.
inline Mat jacobian_fd(const std::function<Vec(const Vec&)>& fn, const Vec& x, double step = 1e-6) {
  const Vec f0 = fn(x);
  Mat J(f0.size(), x.size());
  for (int k = 0; k < x.size(); ++k) {
    Vec e = Vec::Zero(x.size());
    e(k) = step;
    J.col(k) = (fn(x + e) - fn(x - e)) / (2.0 * step);
  }
  return J;
}

/// Squared distance between two point clouds (brute force).
inline double min_sq_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : a)
    for (const auto& q : b) best = std::min(best, (p - q).squaredNorm());
  return best;
}

/// Convex hull (counter-clockwise, no collinear points) of planar points.
inline std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
  };
  std::vector<Eigen::Vector2d> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

}  // namespace oracle
