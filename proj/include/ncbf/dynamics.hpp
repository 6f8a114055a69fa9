#pragma once

// Control-affine robot models x_dot = f(x) + g(x) u on the planar state
// (x1, x2, heading), and the nominal goal-seeking controllers.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "ncbf/qp.hpp"

namespace ncbf {

enum class DynamicsKind { integrator, unicycle };

inline const char* to_string(DynamicsKind k) { return k == DynamicsKind::integrator ? "integrator" : "unicycle"; }

inline DynamicsKind parse_dynamics_kind(const std::string& s) {
  if (s == "integrator") return DynamicsKind::integrator;
  if (s == "unicycle") return DynamicsKind::unicycle;
  throw std::invalid_argument("unknown dynamics kind '" + s + "'");
}

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * M_PI);
  if (w <= -M_PI) w += 2.0 * M_PI;
  return w;
}

inline int input_dim(DynamicsKind k) { return k == DynamicsKind::integrator ? 3 : 2; }

inline Vec drift(DynamicsKind, const Vec& x) { return Vec::Zero(x.size()); }

inline Mat input_matrix(DynamicsKind k, const Vec& x) {
  if (x.size() != 3) throw std::invalid_argument("planar models need a 3-dimensional state");
  if (k == DynamicsKind::integrator) return Mat::Identity(3, 3);
  Mat g = Mat::Zero(3, 2);
  g(0, 0) = std::cos(x(2));
  g(1, 0) = std::sin(x(2));
  g(2, 1) = 1.0;
  return g;
}

inline Vec integrator_dynamics(const Vec& x, const Vec& u) {
  if (x.size() != 3 || u.size() != 3) throw std::invalid_argument("integrator: expects x in R^3, u in R^3");
  return u;
}

inline Vec unicycle_dynamics(const Vec& x, const Vec& u) {
  if (x.size() != 3 || u.size() != 2) throw std::invalid_argument("unicycle: expects x in R^3, u in R^2");
  return Eigen::Vector3d(u(0) * std::cos(x(2)), u(0) * std::sin(x(2)), u(1));
}

inline Vec dynamics(DynamicsKind k, const Vec& x, const Vec& u) {
  return k == DynamicsKind::integrator ? integrator_dynamics(x, u) : unicycle_dynamics(x, u);
}

/// One RK4 step with the input held constant; heading is wrapped afterwards.
inline Vec rk4_step(DynamicsKind k, const Vec& x, const Vec& u, double dt) {
  const Vec k1 = dynamics(k, x, u);
  const Vec k2 = dynamics(k, x + 0.5 * dt * k1, u);
  const Vec k3 = dynamics(k, x + 0.5 * dt * k2, u);
  const Vec k4 = dynamics(k, x + dt * k3, u);
  Vec out = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  out(2) = wrap_angle(out(2));
  return out;
}

inline Vec saturate(const Vec& u, const Vec& lower, const Vec& upper) { return u.cwiseMax(lower).cwiseMin(upper); }

/// u = k_p (goal - x), heading error wrapped, clipped to the input box.
inline Vec nominal_proportional(const Vec& x, const Vec& goal, double kp, const Vec& lower, const Vec& upper) {
  Vec e = goal - x;
  e(2) = wrap_angle(e(2));
  return saturate(kp * e, lower, upper);
}

struct UnicycleGains {
  double k_rho = 0.5;
  double k_alpha = 1.5;
  double k_beta = -0.3;
  double goal_tolerance = 0.05;
};

/// Polar-coordinate steering law. alpha is the bearing error relative to the
/// heading, beta the goal heading minus the bearing.
inline Vec nominal_unicycle_clf(const Vec& x, const Vec& goal, const UnicycleGains& k, const Vec& lower,
                                const Vec& upper) {
  const double dx = goal(0) - x(0), dy = goal(1) - x(1);
  const double rho = std::hypot(dx, dy);
  if (rho < k.goal_tolerance) return Vec::Zero(2);
  const double bearing = std::atan2(dy, dx);
  const double alpha = wrap_angle(bearing - x(2));
  const double beta = wrap_angle(goal(2) - bearing);
  const double v = k.k_rho * rho * std::cos(alpha);
  double w;
  if (std::abs(alpha) < 1e-9)
    w = k.k_alpha * alpha + k.k_rho * (alpha + k.k_beta * beta);
  else
    w = k.k_alpha * alpha + k.k_rho * std::sin(alpha) * std::cos(alpha) * (alpha + k.k_beta * beta) / alpha;
  return saturate(Eigen::Vector2d(v, w), lower, upper);
}

}  // namespace ncbf
