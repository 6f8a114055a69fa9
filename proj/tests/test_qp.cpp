#include "ncbf/qp.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support/oracles.hpp"

using namespace ncbf;

namespace {

QuadProgram random_strict_qp(std::mt19937& rng, int n, int m) {
  std::normal_distribution<double> N(0.0, 1.0);
  QuadProgram p;
  Mat B = Mat::NullaryExpr(n, n, [&] { return N(rng); });
  p.H = B * B.transpose() + 0.5 * Mat::Identity(n, n);
  p.f = Vec::NullaryExpr(n, [&] { return 3.0 * N(rng); });
  p.A_in = Mat::NullaryExpr(m, n, [&] { return N(rng); });
  // Origin strictly feasible so the instance is never empty.
  p.b_in = Vec::NullaryExpr(m, [&] { return 0.2 + std::abs(N(rng)); });
  return p;
}

void expect_kkt_certificate(const QuadProgram& p, const SolveReport& r, double tol) {
  ASSERT_EQ(r.status, SolveStatus::optimal);
  EXPECT_LE(r.stationarity, 10 * tol);
  EXPECT_LE(r.primal_infeasibility, 10 * tol);
  EXPECT_LE(r.complementarity, 1e3 * tol);
  if (r.dual_in.size()) {
    EXPECT_GE(r.dual_in.minCoeff(), -tol);
  }
  EXPECT_GE(r.dual_lower.minCoeff(), -tol);
  EXPECT_GE(r.dual_upper.minCoeff(), -tol);
  (void)p;
}

}  // namespace

TEST(SolveQp, UnconstrainedStationaryPoint) {
  QuadProgram p;
  p.H = Mat::Identity(2, 2);
  p.f = Vec(2);
  p.f << -1, 0;
  const auto r = solve_qp(p);
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.primal(0), 1.0, 1e-12);
  EXPECT_NEAR(r.primal(1), 0.0, 1e-12);
  EXPECT_NEAR(r.objective, -0.5, 1e-12);
}

TEST(SolveQp, LowerBoundDual) {
  QuadProgram p;
  p.H = 2.0 * Mat::Identity(2, 2);
  p.f = Vec::Zero(2);
  p.lower = Vec(2);
  p.lower << 1.0, -kInf;
  const auto r = solve_qp(p);
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.primal(0), 1.0, 1e-12);
  EXPECT_NEAR(r.primal(1), 0.0, 1e-12);
  EXPECT_NEAR(r.dual_lower(0), 2.0, 1e-10);
  EXPECT_NEAR(r.dual_lower(1), 0.0, 1e-12);
}

TEST(SolveQp, SameConstraintAsRowGivesSameDual) {
  QuadProgram p;
  p.H = 2.0 * Mat::Identity(2, 2);
  p.f = Vec::Zero(2);
  p.A_in = Mat(1, 2);
  p.A_in << -1, 0;
  p.b_in = Vec::Constant(1, -1.0);
  const auto r = solve_qp(p);
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.primal(0), 1.0, 1e-12);
  EXPECT_NEAR(r.dual_in(0), 2.0, 1e-10);
}

TEST(SolveQp, DetectsInfeasibility) {
  QuadProgram p;
  p.H = Mat::Identity(1, 1);
  p.f = Vec::Zero(1);
  p.A_in = Mat(2, 1);
  p.A_in << 1, -1;
  p.b_in = Vec(2);
  p.b_in << -1, -1;  // v <= -1 and v >= 1
  EXPECT_EQ(solve_qp(p).status, SolveStatus::infeasible);

  QuadProgram q;
  q.H = Mat::Identity(2, 2);
  q.f = Vec::Zero(2);
  q.A_eq = Mat(2, 2);
  q.A_eq << 1, 1, 1, 1;
  q.b_eq = Vec(2);
  q.b_eq << 1, 2;
  EXPECT_EQ(solve_qp(q).status, SolveStatus::infeasible);
}

TEST(SolveQp, RedundantEqualitiesAreTolerated) {
  QuadProgram p;
  p.H = Mat::Identity(2, 2);
  p.f = Vec::Zero(2);
  p.A_eq = Mat(2, 2);
  p.A_eq << 1, 1, 2, 2;
  p.b_eq = Vec(2);
  p.b_eq << 1, 2;
  const auto r = solve_qp(p);
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.primal(0), 0.5, 1e-12);
  EXPECT_NEAR(r.primal(1), 0.5, 1e-12);
  EXPECT_LE(r.stationarity, 1e-10);
}

TEST(SolveQp, RejectsIndefiniteHessian) {
  QuadProgram p;
  p.H = Mat::Identity(2, 2);
  p.H(1, 1) = -1.0;
  p.f = Vec::Zero(2);
  EXPECT_THROW(solve_qp(p), std::invalid_argument);
}

TEST(SolveQp, SemidefiniteHessianWithZeroCurvatureRay) {
  // Cost only on v0; v1 is pushed by f against its upper bound.
  QuadProgram p;
  p.H = Mat::Zero(2, 2);
  p.H(0, 0) = 2.0;
  p.f = Vec(2);
  p.f << -2.0, -1.0;
  p.upper = Vec(2);
  p.upper << kInf, 3.0;
  const auto r = solve_qp(p);
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.primal(0), 1.0, 1e-12);
  EXPECT_NEAR(r.primal(1), 3.0, 1e-12);
  EXPECT_NEAR(r.dual_upper(1), 1.0, 1e-12);

  p.upper(1) = kInf;
  EXPECT_EQ(solve_qp(p).status, SolveStatus::unbounded);
}

TEST(SolveQp, MatchesDualProjectedGradientOracle) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> dn(2, 20), dm(1, 30);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = dn(rng), m = dm(rng);
    const QuadProgram p = random_strict_qp(rng, n, m);
    const auto r = solve_qp(p);
    expect_kkt_certificate(p, r, 1e-8);
    const Vec ref = oracle::dual_projected_gradient_qp(p.H, p.f, p.A_in, p.b_in);
    EXPECT_LE((r.primal - ref).cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
  }
}

TEST(SolveQp, WarmStartNeverChangesOptimum) {
  std::mt19937 rng(11);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int chain = 0; chain < 200; ++chain) {
    QuadProgram p = random_strict_qp(rng, 6, 10);
    QpSolver warm_solver;
    for (int step = 0; step < 5; ++step) {
      const auto warm = warm_solver.solve(p);
      const auto cold = solve_qp(p);
      ASSERT_TRUE(cold.ok());
      ASSERT_TRUE(warm.ok());
      EXPECT_LE((warm.primal - cold.primal).cwiseAbs().maxCoeff(), 1e-7);
      // Small sequential perturbation, as between two control steps.
      p.f += 0.05 * Vec::NullaryExpr(p.f.size(), [&] { return N(rng); });
      p.b_in += 0.02 * Vec::NullaryExpr(p.b_in.size(), [&] { return N(rng); });
      p.b_in = p.b_in.cwiseMax(0.05);
    }
  }
}

TEST(SolveLp, SingleUpperBound) {
  Vec c(1);
  c << -1.0;  // maximize v
  Mat A(1, 1);
  A << 1.0;
  Vec b(1);
  b << 3.0;
  const auto r = solve_lp(c, Mat(0, 1), Vec(0), A, b, Vec(), Vec());
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(-r.objective, 3.0, 1e-12);
}

TEST(SolveLp, BoxVertex) {
  Vec c(2);
  c << -1.0, 2.0;  // maximize v0 - 2 v1
  const auto r = solve_lp(c, Mat(0, 2), Vec(0), Mat(0, 2), Vec(0), -Vec::Ones(2), Vec::Ones(2));
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.primal(0), 1.0, 1e-12);
  EXPECT_NEAR(r.primal(1), -1.0, 1e-12);
  EXPECT_NEAR(-r.objective, 3.0, 1e-12);
}

TEST(SolveLp, MatchesVertexEnumeration) {
  std::mt19937 rng(3);
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_int_distribution<int> dn(2, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dn(rng);
    const int m = 12 - 2 * n;  // general rows; box rows bring the total to 12
    const Vec c = Vec::NullaryExpr(n, [&] { return N(rng); });
    const Mat A = Mat::NullaryExpr(m, n, [&] { return N(rng); });
    const Vec b = Vec::NullaryExpr(m, [&] { return 0.1 + std::abs(N(rng)); });
    const Vec lo = -2.0 * Vec::Ones(n), hi = 2.0 * Vec::Ones(n);
    const auto r = solve_lp(c, Mat(0, n), Vec(0), A, b, lo, hi);
    ASSERT_TRUE(r.ok()) << trial;

    Mat C(m + 2 * n, n);
    Vec d(m + 2 * n);
    C << A, Mat::Identity(n, n), -Mat::Identity(n, n);
    d << b, hi, -lo;
    const double ref = oracle::vertex_enumeration_lp(c, C, d);
    EXPECT_NEAR(r.objective, ref, 1e-9) << trial;
  }
}

TEST(SolveLp, LargerInstancesCarryOptimalityCertificate) {
  std::mt19937 rng(5);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 20, m = 25, me = 3;
    QuadProgram p;
    p.f = Vec::NullaryExpr(n, [&] { return N(rng); });
    p.A_in = Mat::NullaryExpr(m, n, [&] { return N(rng); });
    p.b_in = Vec::NullaryExpr(m, [&] { return 0.1 + std::abs(N(rng)); });
    p.A_eq = Mat::NullaryExpr(me, n, [&] { return N(rng); });
    p.b_eq = Vec::Zero(me);
    p.lower = -5.0 * Vec::Ones(n);
    p.upper = 5.0 * Vec::Ones(n);
    const auto r = solve_qp(p);
    expect_kkt_certificate(p, r, 1e-8);
  }
}

TEST(QpSolver, DumpsReadableText) {
  QuadProgram p;
  p.H = Mat::Identity(1, 1);
  p.f = Vec::Ones(1);
  std::ostringstream os;
  write_qp_text(os, p);
  EXPECT_NE(os.str().find("H 1 1"), std::string::npos);
  EXPECT_NE(os.str().find("A_in 0 0"), std::string::npos);
}
