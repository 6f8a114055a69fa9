#pragma once

// State-dependent convex bodies.
//
// Both body kinds are defined in a body frame and placed by a rigid pose
// extracted from the robot state: a body-frame point y maps to the world
// point z = p(x) + R(x) y. Strict bodies are intersections of smooth level
// sets {phi_k(y) <= 0}; polytopes are {A0 y <= b0}, which in world
// coordinates becomes A(x) z <= b(x) with
//
//   A(x) = A0 R', b(x) = b0 + A0 R' p.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ncbf/qp.hpp"

namespace ncbf {

/// Rigid pose and its derivatives with respect to the state.
struct Pose {
  Vec position;                 // l
  Mat rotation;                 // l x l
  Mat dposition;                // l x n
  std::vector<Mat> drotation;   // n entries, each l x l
};

class PoseMap {
 public:
  enum class Kind { planar, translation };

  /// State (x1, x2, theta): position in the plane plus heading.
  static PoseMap planar() { return PoseMap(Kind::planar, 2, 3); }
  /// State is the position itself; the body never rotates.
  static PoseMap translation(int dim) { return PoseMap(Kind::translation, dim, dim); }

  Kind kind() const { return kind_; }
  int ambient_dim() const { return l_; }
  int state_dim() const { return n_; }

  Pose evaluate(const Vec& x) const {
    if (x.size() != n_) throw std::invalid_argument("pose: state has wrong dimension");
    Pose P;
    if (kind_ == Kind::planar) {
      const double c = std::cos(x(2)), s = std::sin(x(2));
      P.position = x.head(2);
      P.rotation.resize(2, 2);
      P.rotation << c, -s, s, c;
      P.dposition = Mat::Zero(2, 3);
      P.dposition(0, 0) = 1.0;
      P.dposition(1, 1) = 1.0;
      P.drotation.assign(3, Mat::Zero(2, 2));
      P.drotation[2] << -s, -c, c, -s;
    } else {
      P.position = x;
      P.rotation = Mat::Identity(l_, l_);
      P.dposition = Mat::Identity(l_, l_);
      P.drotation.assign(n_, Mat::Zero(l_, l_));
    }
    return P;
  }

 private:
  PoseMap(Kind k, int l, int n) : kind_(k), l_(l), n_(n) {}
  Kind kind_;
  int l_;
  int n_;
};

/// Smooth convex body-frame constraint phi(y) <= 0.
///
///   ball:          |y - c|^2 - r^2
///   superellipse:  sum_k ((y_k - c_k) / a_k)^p - 1   (even p; p = 2 is an ellipsoid)
class LevelFunction {
 public:
  enum class Kind { ball, superellipse };

  static LevelFunction ball(Vec center, double radius) {
    if (!(radius > 0)) throw std::invalid_argument("ball radius must be positive");
    LevelFunction f(Kind::ball, std::move(center));
    f.radius_ = radius;
    return f;
  }

  static LevelFunction superellipse(Vec semi_axes, int power, Vec center = Vec()) {
    if (power < 2 || power % 2 != 0) throw std::invalid_argument("superellipse power must be even and >= 2");
    if ((semi_axes.array() <= 0).any()) throw std::invalid_argument("semi-axes must be positive");
    if (center.size() == 0) center = Vec::Zero(semi_axes.size());
    if (center.size() != semi_axes.size()) throw std::invalid_argument("superellipse center has wrong dimension");
    LevelFunction f(Kind::superellipse, std::move(center));
    f.axes_ = std::move(semi_axes);
    f.power_ = power;
    return f;
  }

  Kind kind() const { return kind_; }
  int dim() const { return static_cast<int>(center_.size()); }
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }
  const Vec& semi_axes() const { return axes_; }
  int power() const { return power_; }

  double value(const Vec& y) const {
    if (kind_ == Kind::ball) return (y - center_).squaredNorm() - radius_ * radius_;
    double s = -1.0;
    for (int k = 0; k < dim(); ++k) s += std::pow((y(k) - center_(k)) / axes_(k), power_);
    return s;
  }

  Vec gradient(const Vec& y) const {
    if (kind_ == Kind::ball) return 2.0 * (y - center_);
    Vec g(dim());
    for (int k = 0; k < dim(); ++k) {
      const double t = (y(k) - center_(k)) / axes_(k);
      g(k) = power_ * std::pow(t, power_ - 1) / axes_(k);
    }
    return g;
  }

  Mat hessian(const Vec& y) const {
    if (kind_ == Kind::ball) return 2.0 * Mat::Identity(dim(), dim());
    Mat h = Mat::Zero(dim(), dim());
    for (int k = 0; k < dim(); ++k) {
      const double t = (y(k) - center_(k)) / axes_(k);
      h(k, k) = power_ * (power_ - 1) * std::pow(t, power_ - 2) / (axes_(k) * axes_(k));
    }
    return h;
  }

 private:
  LevelFunction(Kind k, Vec c) : kind_(k), center_(std::move(c)) {}
  Kind kind_;
  Vec center_;
  double radius_ = 0.0;
  Vec axes_;
  int power_ = 2;
};

/// All derivative blocks of the r constraints of a strict body at (x, z).
struct ConstraintEval {
  Vec values;                 // r
  Mat grad_z;                 // r x l
  std::vector<Mat> hess_z;    // r entries, l x l
  Mat grad_x;                 // r x n
  std::vector<Mat> mixed;     // r entries, n x l: d^2 A_k / dx dz
};

class StrictConvexBody {
 public:
  StrictConvexBody(std::vector<LevelFunction> constraints, PoseMap pose, Vec interior_point = Vec())
      : constraints_(std::move(constraints)), pose_(pose), interior_(std::move(interior_point)) {
    if (constraints_.empty()) throw std::invalid_argument("strict body needs at least one constraint");
    for (const auto& c : constraints_)
      if (c.dim() != pose_.ambient_dim()) throw std::invalid_argument("constraint dimension does not match pose");
    if (interior_.size() == 0) interior_ = Vec::Zero(pose_.ambient_dim());
    for (const auto& c : constraints_)
      if (!(c.value(interior_) < 0.0)) throw std::invalid_argument("interior point is not strictly inside the body");
  }

  int num_constraints() const { return static_cast<int>(constraints_.size()); }
  int ambient_dim() const { return pose_.ambient_dim(); }
  int state_dim() const { return pose_.state_dim(); }
  const PoseMap& pose_map() const { return pose_; }
  const std::vector<LevelFunction>& constraints() const { return constraints_; }
  const Vec& body_interior_point() const { return interior_; }

  Vec interior_point(const Vec& x) const {
    const Pose P = pose_.evaluate(x);
    return P.position + P.rotation * interior_;
  }

  Vec values(const Vec& x, const Vec& z) const { return values(pose_.evaluate(x), z); }

  Vec values(const Pose& P, const Vec& z) const {
    const Vec y = P.rotation.transpose() * (z - P.position);
    Vec v(num_constraints());
    for (int k = 0; k < num_constraints(); ++k) v(k) = constraints_[k].value(y);
    return v;
  }

  ConstraintEval evaluate(const Vec& x, const Vec& z) const { return evaluate(pose_.evaluate(x), z); }

  ConstraintEval evaluate(const Pose& P, const Vec& z) const {
    const int r = num_constraints(), l = ambient_dim(), n = state_dim();
    const Mat& R = P.rotation;
    const Vec d = z - P.position;
    const Vec y = R.transpose() * d;
    // dy/dx, column m: dR_m' (z - p) - R' dp_m
    Mat dy(l, n);
    for (int m = 0; m < n; ++m) dy.col(m) = P.drotation[m].transpose() * d - R.transpose() * P.dposition.col(m);

    ConstraintEval e;
    e.values.resize(r);
    e.grad_z.resize(r, l);
    e.grad_x.resize(r, n);
    e.hess_z.resize(r);
    e.mixed.resize(r);
    for (int k = 0; k < r; ++k) {
      const auto& phi = constraints_[k];
      const Vec gy = phi.gradient(y);
      const Mat hy = phi.hessian(y);
      e.values(k) = phi.value(y);
      e.grad_z.row(k) = (R * gy).transpose();
      e.hess_z[k] = R * hy * R.transpose();
      e.grad_x.row(k) = gy.transpose() * dy;
      Mat mixed(n, l);
      for (int m = 0; m < n; ++m) mixed.row(m) = (P.drotation[m] * gy + R * (hy * dy.col(m))).transpose();
      e.mixed[k] = std::move(mixed);
    }
    return e;
  }

 private:
  std::vector<LevelFunction> constraints_;
  PoseMap pose_;
  Vec interior_;
};

/// Minimum eigenvalue of sum_k lambda_k * hess_z A_k. Superellipses with
/// p > 2 are only semidefinite on their symmetry axes; this exposes that.
inline double weighted_hessian_min_eig(const StrictConvexBody& body, const Vec& x, const Vec& z, const Vec& lambda) {
  const ConstraintEval e = body.evaluate(x, z);
  Mat H = Mat::Zero(body.ambient_dim(), body.ambient_dim());
  for (int k = 0; k < body.num_constraints(); ++k) H += lambda(k) * e.hess_z[k];
  return Eigen::SelfAdjointEigenSolver<Mat>(H, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

namespace shapes {

inline StrictConvexBody circle(double radius, PoseMap pose = PoseMap::planar()) {
  return StrictConvexBody({LevelFunction::ball(Vec::Zero(pose.ambient_dim()), radius)}, pose);
}

inline StrictConvexBody ellipse(double a, double b, PoseMap pose = PoseMap::planar()) {
  return StrictConvexBody({LevelFunction::superellipse(Eigen::Vector2d(a, b), 2)}, pose);
}

inline StrictConvexBody superellipse(double a, double b, int power, PoseMap pose = PoseMap::planar()) {
  return StrictConvexBody({LevelFunction::superellipse(Eigen::Vector2d(a, b), power)}, pose);
}

/// Intersection of balls (lens / Reuleaux-like shapes). The body-frame
/// origin must lie strictly inside every ball.
inline StrictConvexBody ball_intersection(const std::vector<Vec>& centers, const std::vector<double>& radii,
                                          PoseMap pose = PoseMap::planar()) {
  if (centers.size() != radii.size() || centers.empty())
    throw std::invalid_argument("ball_intersection: centers and radii must match");
  std::vector<LevelFunction> fs;
  for (std::size_t k = 0; k < centers.size(); ++k) fs.push_back(LevelFunction::ball(centers[k], radii[k]));
  return StrictConvexBody(std::move(fs), pose);
}

}  // namespace shapes

/// World-frame half-space data {z : A z <= b}.
struct HalfSpaces {
  Mat A;
  Vec b;
};

/// Time-derivative data for A(x), b(x) along control-affine dynamics:
///   A_dot = LfA + sum_c LgA[c] u_c,  b_dot = Lfb + Lgb u.
struct PolytopeRates {
  Mat LfA;
  std::vector<Mat> LgA;
  Vec Lfb;
  Mat Lgb;

  Mat A_dot(const Vec& u) const {
    Mat r = LfA;
    for (std::size_t c = 0; c < LgA.size(); ++c) r += LgA[c] * u(static_cast<Eigen::Index>(c));
    return r;
  }
  Vec b_dot(const Vec& u) const { return Lfb + Lgb * u; }
};

class PolytopeBody {
 public:
  /// Rows of A0 are normalized to unit length (b0 scaled to match).
  PolytopeBody(Mat A0, Vec b0, PoseMap pose) : A0_(std::move(A0)), b0_(std::move(b0)), pose_(pose) {
    if (A0_.cols() != pose_.ambient_dim()) throw std::invalid_argument("polytope normals have wrong dimension");
    if (A0_.rows() != b0_.size() || A0_.rows() == 0) throw std::invalid_argument("polytope needs matching A0, b0");
    for (int k = 0; k < A0_.rows(); ++k) {
      const double nrm = A0_.row(k).norm();
      if (!(nrm > 0)) throw std::invalid_argument("polytope has a zero normal");
      A0_.row(k) /= nrm;
      b0_(k) /= nrm;
    }
  }

  /// Planar polygon from the convex hull of the given body-frame points.
  static PolytopeBody from_vertices(const std::vector<Vec>& points, PoseMap pose = PoseMap::planar()) {
    if (pose.ambient_dim() != 2) throw std::invalid_argument("from_vertices supports planar bodies only");
    const std::vector<Eigen::Vector2d> hull = convex_hull_2d(points);
    if (hull.size() < 3) throw std::invalid_argument("polygon hull is degenerate");
    const int r = static_cast<int>(hull.size());
    Mat A(r, 2);
    Vec b(r);
    for (int k = 0; k < r; ++k) {
      const Eigen::Vector2d& a = hull[k];
      const Eigen::Vector2d& c = hull[(k + 1) % r];
      const Eigen::Vector2d nrm(c.y() - a.y(), a.x() - c.x());  // outward for CCW order
      A.row(k) = nrm.transpose();
      b(k) = nrm.dot(a);
    }
    return PolytopeBody(A, b, pose);
  }

  int num_faces() const { return static_cast<int>(A0_.rows()); }
  int ambient_dim() const { return pose_.ambient_dim(); }
  int state_dim() const { return pose_.state_dim(); }
  const Mat& A0() const { return A0_; }
  const Vec& b0() const { return b0_; }
  const PoseMap& pose_map() const { return pose_; }

  HalfSpaces at_state(const Vec& x) const {
    const Pose P = pose_.evaluate(x);
    check_rotation(P.rotation);
    HalfSpaces h;
    h.A = A0_ * P.rotation.transpose();
    h.b = b0_ + h.A * P.position;
    return h;
  }

  /// f is the drift (n), g the input matrix (n x m).
  PolytopeRates rates(const Vec& x, const Vec& f, const Mat& g) const {
    const int n = state_dim();
    if (f.size() != n || g.rows() != n) throw std::invalid_argument("polytope rates: dynamics dimension mismatch");
    const Pose P = pose_.evaluate(x);
    check_rotation(P.rotation);
    const Mat AR = A0_ * P.rotation.transpose();
    std::vector<Mat> dA(n);
    Mat db(num_faces(), n);
    for (int m = 0; m < n; ++m) {
      dA[m] = A0_ * P.drotation[m].transpose();
      db.col(m) = dA[m] * P.position + AR * P.dposition.col(m);
    }
    PolytopeRates r;
    r.LfA = Mat::Zero(num_faces(), ambient_dim());
    for (int m = 0; m < n; ++m) r.LfA += dA[m] * f(m);
    r.Lfb = db * f;
    r.LgA.assign(g.cols(), Mat::Zero(num_faces(), ambient_dim()));
    for (int c = 0; c < g.cols(); ++c)
      for (int m = 0; m < n; ++m) r.LgA[c] += dA[m] * g(m, c);
    r.Lgb = db * g;
    return r;
  }

  /// Body-frame vertices by enumeration of l-row subsets (deduplicated).
  std::vector<Vec> vertices(double tol = 1e-9) const {
    const int l = ambient_dim(), r = num_faces();
    std::vector<Vec> out;
    std::vector<int> pick(l);
    auto visit = [&](auto&& self, int start, int depth) -> void {
      if (depth == l) {
        Mat S(l, l);
        Vec rhs(l);
        for (int k = 0; k < l; ++k) {
          S.row(k) = A0_.row(pick[k]);
          rhs(k) = b0_(pick[k]);
        }
        Eigen::FullPivLU<Mat> lu(S);
        if (lu.rank() < l) return;
        const Vec v = lu.solve(rhs);
        if (((A0_ * v - b0_).array() > tol).any()) return;
        for (const auto& w : out)
          if ((w - v).cwiseAbs().maxCoeff() <= tol) return;
        out.push_back(v);
        return;
      }
      for (int i = start; i < r; ++i) {
        pick[depth] = i;
        self(self, i + 1, depth + 1);
      }
    };
    visit(visit, 0, 0);
    return out;
  }

  /// True iff no nonzero direction d has A0 d <= 0.
  bool is_bounded() const {
    const int l = ambient_dim();
    for (int k = 0; k < l; ++k) {
      for (double sgn : {1.0, -1.0}) {
        Vec c = Vec::Zero(l);
        c(k) = -sgn;
        const auto rep = solve_lp(c, Mat(0, l), Vec(0), A0_, Vec::Zero(num_faces()), -Vec::Ones(l), Vec::Ones(l));
        if (!rep.ok() || -rep.objective > 1e-9) return false;
      }
    }
    return true;
  }

 private:
  static void check_rotation(const Mat& R) {
    if (!R.allFinite() || (R.transpose() * R - Mat::Identity(R.rows(), R.cols())).cwiseAbs().maxCoeff() > 1e-9)
      throw std::domain_error("pose rotation is not orthonormal (corrupted state)");
  }

  static std::vector<Eigen::Vector2d> convex_hull_2d(const std::vector<Vec>& points) {
    std::vector<Eigen::Vector2d> pts;
    for (const auto& p : points) {
      if (p.size() != 2) throw std::invalid_argument("polygon vertices must be 2-D");
      pts.emplace_back(p(0), p(1));
    }
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
      return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
    };
    std::vector<Eigen::Vector2d> h(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
      while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 1e-14) --k;
      h[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
      while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 1e-14) --k;
      h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
  }

  Mat A0_;
  Vec b0_;
  PoseMap pose_;
};

struct LicqReport {
  bool pass = true;
  std::vector<Vec> offending_vertices;
};

/// Checks that the active normals at every vertex are linearly independent.
inline LicqReport verify_licq_vertices(const PolytopeBody& body, double tol = 1e-9) {
  if (!body.is_bounded()) throw std::invalid_argument("polytope is unbounded; vertices cannot be enumerated");
  LicqReport rep;
  for (const Vec& v : body.vertices(tol)) {
    std::vector<int> active;
    for (int k = 0; k < body.num_faces(); ++k)
      if (std::abs(body.A0().row(k).dot(v) - body.b0()(k)) <= tol) active.push_back(k);
    Mat S(static_cast<Eigen::Index>(active.size()), body.ambient_dim());
    for (std::size_t k = 0; k < active.size(); ++k) S.row(static_cast<Eigen::Index>(k)) = body.A0().row(active[k]);
    Eigen::FullPivLU<Mat> lu(S);
    lu.setThreshold(1e-9);
    if (lu.rank() != S.rows()) {
      rep.pass = false;
      rep.offending_vertices.push_back(v);
    }
  }
  return rep;
}

using ConvexBody = std::variant<StrictConvexBody, PolytopeBody>;

struct Containment {
  bool inside = false;
  double margin = 0.0;  // max_k A_k; <= 0 inside
};

inline Containment contains(const StrictConvexBody& body, const Vec& x, const Vec& z) {
  const double m = body.values(x, z).maxCoeff();
  return {m <= 0.0, m};
}

inline Containment contains(const PolytopeBody& body, const Vec& x, const Vec& z) {
  const HalfSpaces h = body.at_state(x);
  const double m = (h.A * z - h.b).maxCoeff();
  return {m <= 1e-12, m};
}

inline Containment contains(const ConvexBody& body, const Vec& x, const Vec& z) {
  return std::visit([&](const auto& b) { return contains(b, x, z); }, body);
}

inline int state_dim(const ConvexBody& body) {
  return std::visit([](const auto& b) { return b.state_dim(); }, body);
}

inline int ambient_dim(const ConvexBody& body) {
  return std::visit([](const auto& b) { return b.ambient_dim(); }, body);
}

}  // namespace ncbf
