#include "ncbf/geometry.hpp"

#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"

using namespace ncbf;

namespace {

PolytopeBody unit_square(PoseMap pose = PoseMap::planar()) {
  Mat A0(4, 2);
  A0 << 1, 0, -1, 0, 0, 1, 0, -1;
  return PolytopeBody(A0, Vec::Ones(4), pose);
}

Vec v2(double a, double b) { return Eigen::Vector2d(a, b); }
Vec v3(double a, double b, double c) { return Eigen::Vector3d(a, b, c); }

double rel_err(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

std::vector<StrictConvexBody> strict_zoo() {
  std::vector<StrictConvexBody> out;
  out.push_back(shapes::circle(1.0));
  out.push_back(shapes::ellipse(2.0, 1.0));
  out.push_back(shapes::superellipse(1.5, 1.0, 4));
  out.push_back(shapes::superellipse(1.0, 1.5, 6));
  out.push_back(shapes::ball_intersection({v2(-1.0, 0), v2(1.0, 0)}, {2.0, 2.0}));
  out.push_back(shapes::circle(0.5, PoseMap::translation(2)));
  return out;
}

}  // namespace

TEST(PolytopeAtState, IdentityPose) {
  const auto sq = unit_square();
  const auto h = sq.at_state(v3(0, 0, 0));
  EXPECT_LE((h.A - sq.A0()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((h.b - Vec::Ones(4)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PolytopeAtState, TranslationShiftsOffsets) {
  const auto h = unit_square().at_state(v3(3, 0, 0));
  Vec expect(4);
  expect << 4, -2, 1, 1;
  EXPECT_LE((h.b - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PolytopeAtState, RotationPreservesMembership) {
  const auto sq = unit_square();
  const double th = M_PI / 2;
  const auto h = sq.at_state(v3(0, 0, th));
  EXPECT_LE((h.A.rowwise().norm() - Vec::Ones(4)).cwiseAbs().maxCoeff(), 1e-15);
  // Rows rotated by -90 degrees relative to the body frame means A = A0 R'.
  Eigen::Matrix2d R;
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  for (int k = 0; k < 1000; ++k) {
    const Vec y = v2(U(rng), U(rng));
    const bool in_body = (sq.A0() * y - sq.b0()).maxCoeff() <= 0;
    const Vec z = R * y;
    EXPECT_EQ((h.A * z - h.b).maxCoeff() <= 0, in_body);
  }
}

TEST(PolytopeAtState, RigidMotionConsistency) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> U(-5, 5), T(-M_PI, M_PI);
  const auto sq = unit_square();
  for (int k = 0; k < 1000; ++k) {
    const Vec x = v3(U(rng), U(rng), T(rng));
    const Vec y = v2(U(rng) / 3, U(rng) / 3);
    const auto h = sq.at_state(x);
    Eigen::Matrix2d R;
    R << std::cos(x(2)), -std::sin(x(2)), std::sin(x(2)), std::cos(x(2));
    const Vec z = x.head(2) + R * y;
    const Vec world = h.A * z - h.b;
    const Vec body = sq.A0() * y - sq.b0();
    EXPECT_LE((world - body).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PolytopeAtState, CorruptedStateThrows) {
  const auto sq = unit_square();
  EXPECT_THROW(sq.at_state(v3(0, 0, std::nan(""))), std::domain_error);
}

TEST(PolytopeBody, NormalizesRows) {
  Mat A0(3, 2);
  A0 << 2, 0, 0, 3, -1, -1;
  Vec b0(3);
  b0 << 2, 3, 1;
  const PolytopeBody p(A0, b0, PoseMap::planar());
  EXPECT_LE((p.A0().rowwise().norm() - Vec::Ones(3)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(p.b0()(0), 1.0, 1e-15);
  EXPECT_NEAR(p.b0()(2), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(PolytopeBody, FromVerticesMatchesHull) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec> pts;
    std::vector<Eigen::Vector2d> pts2;
    for (int k = 0; k < 12; ++k) {
      pts2.emplace_back(U(rng), U(rng));
      pts.push_back(pts2.back());
    }
    const auto body = PolytopeBody::from_vertices(pts);
    const auto hull = oracle::convex_hull(pts2);
    EXPECT_EQ(body.num_faces(), static_cast<int>(hull.size()));
    for (const auto& p : pts) EXPECT_LE((body.A0() * p - body.b0()).maxCoeff(), 1e-12);
    for (const auto& v : hull) EXPECT_NEAR((body.A0() * Vec(v) - body.b0()).maxCoeff(), 0.0, 1e-12);
  }
}

TEST(PolytopeRates, IntegratorTranslation) {
  const auto sq = unit_square();
  const Vec x = v3(0, 0, 0);
  const auto r = sq.rates(x, Vec::Zero(3), Mat::Identity(3, 3));
  const Vec u = v3(1, 0, 0);
  EXPECT_LE(r.A_dot(u).cwiseAbs().maxCoeff(), 1e-15);
  Vec expect(4);
  expect << 1, -1, 0, 0;
  EXPECT_LE((r.b_dot(u) - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PolytopeRates, IntegratorRotationMatchesFiniteDifference) {
  const auto sq = unit_square();
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(-2, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec x = v3(U(rng), U(rng), U(rng));
    const Vec u = trial == 0 ? v3(0, 0, 1) : v3(U(rng), U(rng), U(rng));
    const auto r = sq.rates(x, Vec::Zero(3), Mat::Identity(3, 3));
    const double h = 1e-6;
    const auto hp = sq.at_state(x + h * u), hm = sq.at_state(x - h * u);
    EXPECT_LE(rel_err(r.A_dot(u), (hp.A - hm.A) / (2 * h)), 1e-5);
    EXPECT_LE(rel_err(r.b_dot(u), (hp.b - hm.b) / (2 * h)), 1e-5);
  }
}

TEST(PolytopeRates, VertexVelocityIsRigid) {
  // omega = 1 about p: a vertex v moves with omega x (v - p); it stays on its faces.
  const auto sq = unit_square();
  const Vec x = v3(0.7, -0.2, 0.3);
  const auto hs = sq.at_state(x);
  const auto r = sq.rates(x, Vec::Zero(3), Mat::Identity(3, 3));
  const Vec u = v3(0, 0, 1);
  Eigen::Matrix2d R;
  R << std::cos(x(2)), -std::sin(x(2)), std::sin(x(2)), std::cos(x(2));
  for (const Vec& y : sq.vertices()) {
    const Vec v = x.head(2) + R * y;
    const Vec vel = v2(-(v(1) - x(1)), v(0) - x(0));
    // d/dt (A v - b) = Adot v + A vdot - bdot must vanish on active faces
    const Vec d = r.A_dot(u) * v + hs.A * vel - r.b_dot(u);
    for (int k = 0; k < 4; ++k)
      if (std::abs(hs.A.row(k).dot(v) - hs.b(k)) < 1e-12) EXPECT_NEAR(d(k), 0.0, 1e-12);
  }
}

TEST(PolytopeRates, UnicycleForward) {
  const auto sq = unit_square();
  const Vec x = v3(0, 0, 0);
  Mat g(3, 2);
  g << std::cos(x(2)), 0, std::sin(x(2)), 0, 0, 1;
  const auto r = sq.rates(x, Vec::Zero(3), g);
  Vec expect(4);
  expect << 1, -1, 0, 0;
  EXPECT_LE((r.b_dot(v2(1, 0)) - expect).cwiseAbs().maxCoeff(), 1e-15);

  const Vec x2 = v3(1, 2, 0.8);
  Mat g2(3, 2);
  g2 << std::cos(0.8), 0, std::sin(0.8), 0, 0, 1;
  const auto r2 = sq.rates(x2, Vec::Zero(3), g2);
  const Vec u = v2(0.6, -0.4);
  const double h = 1e-6;
  const Vec xd = g2 * u;
  const auto hp = sq.at_state(x2 + h * xd), hm = sq.at_state(x2 - h * xd);
  EXPECT_LE(rel_err(r2.b_dot(u), (hp.b - hm.b) / (2 * h)), 1e-5);
  EXPECT_LE(rel_err(r2.A_dot(u), (hp.A - hm.A) / (2 * h)), 1e-5);
}

TEST(PolytopeRates, DimensionMismatchThrows) {
  EXPECT_THROW(unit_square().rates(v3(0, 0, 0), Vec::Zero(2), Mat::Identity(3, 3)), std::invalid_argument);
}

TEST(StrictEval, CircleAtBoundary) {
  const auto c = shapes::circle(1.0);
  const auto e = c.evaluate(v3(0, 0, 0), v2(1, 0));
  EXPECT_NEAR(e.values(0), 0.0, 1e-15);
  EXPECT_LE((e.grad_z.row(0).transpose() - v2(2, 0)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((e.hess_z[0] - 2 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(StrictEval, QuarticSuperellipseGradient) {
  const auto s = shapes::superellipse(1.5, 1.0, 4);
  const auto e = s.evaluate(v3(0, 0, 0), v2(1.5, 0));
  EXPECT_NEAR(e.values(0), 0.0, 1e-15);
  EXPECT_NEAR(e.grad_z(0, 0), 8.0 / 3.0, 1e-14);
  EXPECT_NEAR(e.grad_z(0, 1), 0.0, 1e-15);
}

TEST(StrictEval, AllDerivativesMatchFiniteDifferences) {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  const double h = 1e-6;
  for (const auto& body : strict_zoo()) {
    const int n = body.state_dim(), l = body.ambient_dim();
    for (int trial = 0; trial < 100; ++trial) {
      const Vec x = Vec::NullaryExpr(n, [&] { return U(rng); });
      const Vec z = body.interior_point(x) + Vec::NullaryExpr(l, [&] { return U(rng); });
      const auto e = body.evaluate(x, z);
      for (int k = 0; k < body.num_constraints(); ++k) {
        auto val_z = [&](const Vec& zz) { return Vec::Constant(1, body.values(x, zz)(k)); };
        auto val_x = [&](const Vec& xx) { return Vec::Constant(1, body.values(xx, z)(k)); };
        auto grad_z_of_z = [&](const Vec& zz) { return Vec(body.evaluate(x, zz).grad_z.row(k).transpose()); };
        auto grad_z_of_x = [&](const Vec& xx) { return Vec(body.evaluate(xx, z).grad_z.row(k).transpose()); };
        EXPECT_LE(rel_err(e.grad_z.row(k), oracle::jacobian_fd(val_z, z, h)), 1e-5);
        EXPECT_LE(rel_err(e.grad_x.row(k), oracle::jacobian_fd(val_x, x, h)), 1e-5);
        EXPECT_LE(rel_err(e.hess_z[k], oracle::jacobian_fd(grad_z_of_z, z, h)), 1e-5);
        // jacobian_fd gives (l x n); mixed is stored n x l
        EXPECT_LE(rel_err(e.mixed[k], oracle::jacobian_fd(grad_z_of_x, x, h).transpose()), 1e-5);
      }
    }
  }
}

TEST(StrictEval, HessiansArePsd) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> U(-2, 2);
  for (const auto& body : strict_zoo()) {
    for (int trial = 0; trial < 50; ++trial) {
      const Vec x = Vec::NullaryExpr(body.state_dim(), [&] { return U(rng); });
      const Vec z = Vec::NullaryExpr(body.ambient_dim(), [&] { return U(rng); });
      const auto e = body.evaluate(x, z);
      for (const auto& H : e.hess_z) {
        EXPECT_LE((H - H.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat>(H).eigenvalues().minCoeff(), -1e-12);
      }
    }
  }
}

TEST(StrictEval, SuperellipseDegenerateOnAxis) {
  const auto s = shapes::superellipse(1.5, 1.0, 4);
  const Vec x = v3(0, 0, 0);
  EXPECT_NEAR(weighted_hessian_min_eig(s, x, v2(1.5, 0), Vec::Ones(1)), 0.0, 1e-14);
  EXPECT_GT(weighted_hessian_min_eig(s, x, v2(1.0, 0.5), Vec::Ones(1)), 0.0);
}

TEST(StrictBody, RejectsBadInterior) {
  EXPECT_THROW(shapes::ball_intersection({v2(5, 0)}, {1.0}), std::invalid_argument);
  EXPECT_THROW(LevelFunction::superellipse(v2(1, 1), 3), std::invalid_argument);
}

TEST(Contains, BothBodyKinds) {
  const auto sq = unit_square();
  const Vec x = v3(1, 1, 0.4);
  auto c = contains(sq, x, v2(1, 1));
  EXPECT_TRUE(c.inside);
  EXPECT_LT(c.margin, 0);
  Eigen::Matrix2d R;
  R << std::cos(0.4), -std::sin(0.4), std::sin(0.4), std::cos(0.4);
  c = contains(sq, x, x.head(2) + R * v2(1, -1));
  EXPECT_TRUE(c.inside);
  EXPECT_NEAR(c.margin, 0.0, 1e-12);
  EXPECT_FALSE(contains(sq, x, v2(11, 1)).inside);

  const ConvexBody circle = shapes::circle(1.0);
  EXPECT_TRUE(contains(circle, x, v2(1, 1)).inside);
  EXPECT_NEAR(contains(circle, x, v2(1, 1)).margin, -1.0, 1e-15);
  EXPECT_FALSE(contains(circle, x, v2(11, 1)).inside);
}

TEST(Licq, UnitSquarePasses) {
  const auto rep = verify_licq_vertices(unit_square());
  EXPECT_TRUE(rep.pass);
  EXPECT_TRUE(rep.offending_vertices.empty());
  EXPECT_EQ(unit_square().vertices().size(), 4u);
}

TEST(Licq, DuplicatedFaceFailsAtItsVertices) {
  Mat A0(5, 2);
  A0 << 1, 0, -1, 0, 0, 1, 0, -1, 1, 0;
  Vec b0 = Vec::Ones(5);
  const auto rep = verify_licq_vertices(PolytopeBody(A0, b0, PoseMap::planar()));
  EXPECT_FALSE(rep.pass);
  ASSERT_EQ(rep.offending_vertices.size(), 2u);
  for (const auto& v : rep.offending_vertices) EXPECT_NEAR(v(0), 1.0, 1e-12);
}

TEST(Licq, RandomHullPolygonsPass) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> U(-1, 1);
  std::uniform_int_distribution<int> count(3, 8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec> pts;
    const int npts = count(rng);
    for (int k = 0; k < npts; ++k) pts.push_back(v2(U(rng), U(rng)));
    const auto body = PolytopeBody::from_vertices(pts);
    EXPECT_TRUE(verify_licq_vertices(body).pass);
  }
}

TEST(Licq, UnboundedPolytopeThrows) {
  Mat A0(2, 2);
  A0 << 1, 0, 0, 1;
  EXPECT_THROW(verify_licq_vertices(PolytopeBody(A0, Vec::Ones(2), PoseMap::planar())), std::invalid_argument);
}
