#include "netopt/local_solver.hpp"

#include <gtest/gtest.h>

#include <random>

namespace netopt {
namespace {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

Mat random_spd(Index n, std::mt19937_64& rng, double shift) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Mat B(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) B(i, j) = U(rng);
  Mat H = B * B.transpose();
  H.diagonal().array() += shift;
  return 0.5 * (H + H.transpose());
}

Vec random_vec(Index n, std::mt19937_64& rng, double s = 1.0) {
  std::uniform_real_distribution<double> U(-s, s);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = U(rng);
  return v;
}

TEST(SolveLocalQp, EqualityPinsScalar) {
  QuadCost c(Mat::Identity(1, 1), Vec::Zero(1));
  EqualityConstraint eq{Mat::Ones(1, 1), Vec::Ones(1)};
  QPSolution s = solve_local_qp(c, FeasibleSet::free(1), eq);
  EXPECT_EQ(s.status, QPStatus::Optimal);
  EXPECT_NEAR(s.x(0), 1.0, 1e-12);
  EXPECT_NEAR(s.eq_multipliers(0), -2.0, 1e-12);
}

TEST(SolveLocalQp, ClampedUnconstrainedMinimizer) {
  // (x-2)^2 = x^2 - 4x + 4
  QuadCost c(Mat::Identity(1, 1), Vec::Constant(1, -4.0), 4.0);
  QPSolution s = solve_local_qp(c, FeasibleSet::uniform_box(1, -1.0, 1.0));
  EXPECT_EQ(s.status, QPStatus::Optimal);
  EXPECT_NEAR(s.x(0), 1.0, 1e-12);
  EXPECT_EQ(s.eq_multipliers.size(), 0);
}

TEST(SolveLocalQp, TwoVariableSumConstraint) {
  QuadCost c(Mat::Identity(2, 2), Vec::Zero(2));
  EqualityConstraint eq{Mat::Ones(1, 2), Vec::Ones(1)};
  QPSolution s = solve_local_qp(c, FeasibleSet::uniform_box(2, -10, 10), eq);
  EXPECT_EQ(s.status, QPStatus::Optimal);
  EXPECT_NEAR(s.x(0), 0.5, 1e-12);
  EXPECT_NEAR(s.x(1), 0.5, 1e-12);
  EXPECT_NEAR(s.eq_multipliers(0), -1.0, 1e-12);
}

TEST(SolveLocalQp, DetectsConflictingEquality) {
  QuadCost c(Mat::Identity(1, 1), Vec::Zero(1));
  EqualityConstraint eq{Mat::Ones(1, 1), Vec::Constant(1, 5.0)};
  QPSolution s = solve_local_qp(c, FeasibleSet::uniform_box(1, -1, 1), eq);
  EXPECT_EQ(s.status, QPStatus::Infeasible);
}

TEST(SolveLocalQp, LinearProgramUsesInteriorPoint) {
  QuadCost c(Mat::Zero(2, 2), Vec(Vec2(1.0, 2.0)));
  Vec2 lo(-1.0, -2.0), hi(3.0, 4.0);
  QPSolution s = solve_local_qp(c, FeasibleSet::box(lo, hi));
  EXPECT_EQ(s.status, QPStatus::Optimal);
  EXPECT_NEAR(s.x(0), -1.0, 1e-7);
  EXPECT_NEAR(s.x(1), -2.0, 1e-7);
}

// Property: both engines agree and each satisfies feasibility, stationarity and
// complementarity separately.
TEST(SolveLocalQp, ActiveSetMatchesInteriorPointOnRandomPolyhedra) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 2 + trial % 9, mi = 3 + trial % 11, me = trial % 3;
    const Mat H = random_spd(n, rng, 0.1);
    const Vec q = random_vec(n, rng, 3.0);
    Mat A(mi, n);
    for (Index r = 0; r < mi; ++r) A.row(r) = random_vec(n, rng).transpose();
    const Vec xc = random_vec(n, rng, 0.5);
    const Vec b = A * xc + Vec::Constant(mi, 0.3);
    Mat Aeq(me, n);
    for (Index r = 0; r < me; ++r) Aeq.row(r) = random_vec(n, rng).transpose();
    const Vec beq = Aeq * xc;
    const FeasibleSet P = FeasibleSet::polyhedron(A, b, xc, Aeq, beq);
    ASSERT_TRUE(P.strictly_contains(xc));

    QPSolution as = solve_local_qp(QuadCost(H, q), P);
    QPSolution ip = solve_qp_ipm(H, q, Aeq, beq, A, b, 1e-11, xc);
    ASSERT_EQ(as.status, QPStatus::Optimal) << "trial " << trial;
    ASSERT_EQ(ip.status, QPStatus::Optimal) << "trial " << trial;
    EXPECT_LE((as.x - ip.x).cwiseAbs().maxCoeff(), 1e-7) << "trial " << trial;
    EXPECT_LE(as.primal_residual, 1e-9);
    EXPECT_LE(as.stationarity, 1e-9);
    EXPECT_LE(as.complementarity, 1e-9);
    EXPECT_LE(ip.primal_residual, 1e-8);
    EXPECT_LE(ip.stationarity, 1e-8);
    EXPECT_LE(ip.complementarity, 1e-8);
  }
}

TEST(SolveLocalQp, StrictQpReusedAcrossLinearTerms) {
  std::mt19937_64 rng(11);
  const Index n = 6;
  const Mat H = random_spd(n, rng, 0.5);
  const FeasibleSet box = FeasibleSet::uniform_box(n, -0.3, 0.2);
  Mat Aeq, C;
  Vec beq, d;
  box.inequalities(C, d);
  StrictQP qp(H, Mat(0, n), C);
  for (int k = 0; k < 20; ++k) {
    const Vec q = random_vec(n, rng, 4.0);
    QPSolution a = qp.solve(q, Vec(), d);
    QPSolution b = solve_qp_ipm(H, q, Mat(), Vec(), C, d, 1e-11);
    EXPECT_LE((a.x - b.x).cwiseAbs().maxCoeff(), 1e-7);
  }
}

// Multiplier sign: psi(t + delta) - psi(t) ~ -lambda^T delta.
TEST(SolveLocalQp, MultiplierIsNegativeValueSensitivity) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 5, p = 2;
    const Mat H = random_spd(n, rng, 0.2);
    const Vec q = random_vec(n, rng);
    Mat G(p, n);
    for (Index r = 0; r < p; ++r) G.row(r) = random_vec(n, rng).transpose();
    const FeasibleSet box = FeasibleSet::uniform_box(n, -50, 50);
    const Vec t = random_vec(p, rng, 0.5);
    const QuadCost c(H, q);
    auto psi = [&](const Vec& tt) {
      QPSolution s = solve_local_qp(c, box, EqualityConstraint{G, tt});
      return std::make_pair(c.value(s.x), s.eq_multipliers);
    };
    auto [v0, lam] = psi(t);
    const Vec delta = random_vec(p, rng, 1e-4);
    auto [v1, lam1] = psi(t + delta);
    EXPECT_NEAR(v1 - v0, -lam.dot(delta), 1e-6);
  }
}

TEST(Project, BoxClamp) {
  const FeasibleSet box = FeasibleSet::uniform_box(2, -1, 1);
  const Vec p = project(box, Vec(Vec2(2.0, -3.0)));
  EXPECT_EQ(p(0), 1.0);
  EXPECT_EQ(p(1), -1.0);
  const Vec v = Vec2(0.3, 0.2);
  EXPECT_EQ(project(box, v), v);
}

TEST(Project, HalfspaceClosedForm) {
  const FeasibleSet hs = FeasibleSet::polyhedron(Mat::Ones(1, 2), Vec::Ones(1), Vec::Zero(2));
  const Vec v = Vec2(1.0, 1.0);
  const Vec p = project(hs, v);
  const Vec a = Vec2(1.0, 1.0);
  const Vec closed = v - (a.dot(v) - 1.0) / a.squaredNorm() * a;
  EXPECT_NEAR(p(0), 0.5, 1e-12);
  EXPECT_NEAR(p(1), 0.5, 1e-12);
  EXPECT_LE((p - closed).norm(), 1e-12);
  const QPSolution s = solve_local_qp(QuadCost(Mat::Identity(2, 2), -2.0 * v), hs);
  EXPECT_LE((p - s.x).norm(), 1e-10);
}

TEST(Project, MissingCertificateIsInfeasible) {
  const FeasibleSet hs = FeasibleSet::polyhedron(Mat::Ones(1, 2), Vec::Ones(1), Vec());
  EXPECT_THROW(project(hs, Vec::Zero(2)), Error);
  EXPECT_THROW(project(FeasibleSet::uniform_box(2, -1, 1), Vec::Zero(3)), Error);
}

TEST(Project, IdempotentAndNonexpansive) {
  std::mt19937_64 rng(5);
  const Index n = 4;
  Mat A(6, n);
  for (Index r = 0; r < 6; ++r) A.row(r) = random_vec(n, rng).transpose();
  const std::vector<FeasibleSet> sets = {FeasibleSet::uniform_box(n, -0.5, 0.7),
                                         FeasibleSet::polyhedron(A, Vec::Constant(6, 0.4), Vec::Zero(n))};
  for (const auto& S : sets) {
    for (int k = 0; k < 100; ++k) {
      const Vec u = random_vec(n, rng, 3.0), v = random_vec(n, rng, 3.0);
      const Vec pu = project(S, u), pv = project(S, v);
      EXPECT_TRUE(S.contains(pu, 1e-9));
      EXPECT_LE((project(S, pu) - pu).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LE((pu - pv).norm(), (u - v).norm() + 1e-12);
    }
  }
}

TEST(SolveSmoothed, ZeroMuOnBox) {
  const Vec x = solve_smoothed(QuadCost(Mat::Identity(1, 1), Vec::Zero(1)), FeasibleSet::uniform_box(1, -1, 1),
                               Vec::Zero(1), 0.0, ProxKind::Quadratic);
  EXPECT_NEAR(x(0), 0.0, 1e-14);
}

TEST(SolveSmoothed, QuadraticProxStationarity) {
  const FeasibleSet box = FeasibleSet::box(Vec::Constant(1, -1), Vec::Constant(1, 1), Vec::Zero(1));
  const QuadCost f(Mat::Identity(1, 1), Vec::Zero(1));
  for (double s : {0.3, -0.6, 1.2}) {
    const Vec x = solve_smoothed(f, box, Vec::Constant(1, s), 1.0, ProxKind::Quadratic);
    EXPECT_NEAR(x(0), -s / 3.0, 1e-12);
    auto obj = [&](const Vec& y) { return f.value(y) + s * y(0) + 0.5 * y.squaredNorm(); };
    EXPECT_NEAR(finite_diff_gradient(obj, x, 1e-6)(0), 0.0, 1e-8);
  }
}

TEST(SolveSmoothed, BarrierAnalyticCenter) {
  const Vec x = solve_smoothed(QuadCost(Mat::Zero(1, 1), Vec::Zero(1)), FeasibleSet::uniform_box(1, -1, 1),
                               Vec::Zero(1), 1.0, ProxKind::LogBarrier);
  EXPECT_NEAR(x(0), 0.0, 1e-12);
}

TEST(SolveSmoothed, BarrierIterateStrictlyInterior) {
  std::mt19937_64 rng(9);
  const Index n = 5;
  const FeasibleSet box = FeasibleSet::uniform_box(n, -1, 1);
  const QuadCost f(random_spd(n, rng, 0.1), random_vec(n, rng));
  for (double mu : {1.0, 1e-2, 1e-4, 1e-6, 1e-8}) {
    const Vec x = solve_smoothed(f, box, random_vec(n, rng, 10.0), mu, ProxKind::LogBarrier);
    EXPECT_TRUE(box.strictly_contains(x)) << mu;
  }
}

TEST(SolveSmoothed, PsdCostOnUnboundedSetRejected) {
  EXPECT_THROW(SmoothedSolver(QuadCost(Mat::Zero(2, 2), Vec::Ones(2)), FeasibleSet::free(2), 0.0, ProxKind::Quadratic),
               Error);
}

TEST(FiniteDiff, Basics) {
  auto sq = [](const Vec& v) { return v(0) * v(0); };
  EXPECT_NEAR(finite_diff_gradient(sq, Vec::Ones(1), 1e-6)(0), 2.0, 1e-6);
  const Vec q = Vec3(1.0, -2.0, 0.5);
  auto lin = [&](const Vec& v) { return q.dot(v); };
  EXPECT_LE((finite_diff_gradient(lin, Vec::Zero(3), 1e-3) - q).cwiseAbs().maxCoeff(), 1e-12);
  std::mt19937_64 rng(1);
  const QuadCost c(random_spd(6, rng, 0.0), Vec::Zero(6));
  const Vec x = random_vec(6, rng);
  const Vec fd = finite_diff_gradient([&](const Vec& v) { return c.value(v); }, x, 1e-5);
  EXPECT_LE((fd - c.gradient(x)).norm() / c.gradient(x).norm(), 1e-5);
}

}  // namespace
}  // namespace netopt
