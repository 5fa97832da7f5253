#include "netopt/blocks.hpp"
#include "netopt/generators.hpp"
#include "netopt/oracle.hpp"

#include <gtest/gtest.h>

namespace netopt {
namespace {

// f = x1^2 + x2^2 + x1 x2 on [-10, 10]^2
ProblemCCDC toy() {
  ProblemCCDC p;
  p.blocks = {{Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 0.5)}, {Mat::Constant(1, 1, 0.5), Mat::Constant(1, 1, 1.0)}};
  p.linear = {Vec::Zero(1), Vec::Zero(1)};
  p.local_sets = {FeasibleSet::uniform_box(1, -10, 10), FeasibleSet::uniform_box(1, -10, 10)};
  return p;
}

Point ones() { return {Vec::Ones(1), Vec::Ones(1)}; }

ProblemCCDC coop(std::uint64_t seed, Index M = 4) {
  CoopConfig c;
  c.M = M;
  c.N = 4;
  c.n = 3;
  c.m = 2;
  c.seed = seed;
  return gen_coupled_cooperative(c);
}

double dist(const Point& a, const Point& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d = std::max(d, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return d;
}

TEST(Jacobi, HandStep) {
  const BlockContext ctx(toy());
  Point x = ones();
  jacobi_step(ctx, x);
  EXPECT_NEAR(x[0](0), -0.5, 1e-12);
  EXPECT_NEAR(x[1](0), -0.5, 1e-12);
}

TEST(Jacobi, BlockDiagonalOneStep) {
  ProblemCCDC p = coop(1);
  for (Index i = 0; i < p.M(); ++i)
    for (Index j = 0; j < p.M(); ++j)
      if (i != j) p.blocks[i][j] = Mat();
  const BlockContext ctx(p);
  const OracleSolution o = solve_centralized(p);
  Point x;
  for (Index i = 0; i < p.M(); ++i) x.push_back(Vec::Zero(p.linear[i].size()));
  jacobi_step(ctx, x);
  EXPECT_LE(dist(x, o.x), 1e-7);
  Point y;
  for (Index i = 0; i < p.M(); ++i) y.push_back(Vec::Zero(p.linear[i].size()));
  gauss_seidel_step(ctx, y, natural_order(p.M()));
  EXPECT_LE(dist(y, o.x), 1e-7);
}

TEST(Jacobi, FixedPointAtOptimum) {
  const ProblemCCDC p = coop(2);
  const BlockContext ctx(p);
  const OracleSolution o = solve_centralized(p);
  Point x = o.x;
  jacobi_step(ctx, x);
  EXPECT_LE(dist(x, o.x), 1e-7);
}

TEST(Jacobi, SingularBlockRejected) {
  ProblemCCDC p = toy();
  p.blocks[0][1] = p.blocks[1][0] = Mat::Zero(1, 1);
  p.blocks[1][1] = Mat::Zero(1, 1);
  const BlockContext ctx(p);
  Point x = ones();
  try {
    jacobi_step(ctx, x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonStrictBlock);
    EXPECT_EQ(e.agent(), 1);
  }
}

TEST(GaussSeidel, HandSweep) {
  const BlockContext ctx(toy());
  Point x = ones();
  gauss_seidel_step(ctx, x, {0, 1});
  EXPECT_NEAR(x[0](0), -0.5, 1e-12);
  EXPECT_NEAR(x[1](0), 0.25, 1e-12);
  EXPECT_THROW(gauss_seidel_step(ctx, x, {0, 0}), Error);
}

TEST(GaussSeidel, ColoredSweepOnBandedSatellite) {
  CWParams prm;
  prm.M = 10;
  prm.seed = 2;
  const ProblemCCDC p = gen_satellite_ccdc(prm, 6);
  const BlockContext ctx(p);
  const std::vector<int> color = greedy_coloring(p);
  EXPECT_NO_THROW(validate_coloring(p, color));
  // sequential sweep in color-class order gives the same point
  std::vector<Index> order = natural_order(p.M());
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return color[a] < color[b]; });
  Rng rng(1);
  Point x;
  for (Index i = 0; i < p.M(); ++i) x.push_back(rng.uniform_vector(p.linear[i].size(), -5, 5));
  Point y = x;
  gauss_seidel_colored_step(ctx, x, color, 4);
  gauss_seidel_step(ctx, y, order);
  EXPECT_LE(dist(x, y), 1e-12);
  std::vector<int> bad(static_cast<size_t>(p.M()), 0);
  EXPECT_THROW(validate_coloring(p, bad), Error);
  // period-4 coloring is valid on the band
  std::vector<int> four;
  for (Index i = 0; i < 8; ++i) four.push_back(static_cast<int>(i % 4));
  prm.M = 8;
  EXPECT_NO_THROW(validate_coloring(gen_satellite_ccdc(prm, 6), four));
}

TEST(GaussSeidel, MonotoneAndFeasible) {
  const ProblemCCDC p = coop(3);
  const BlockContext ctx(p);
  Point x;
  for (Index i = 0; i < p.M(); ++i) x.push_back(Vec::Zero(p.linear[i].size()));
  double prev = p.objective(x);
  for (int k = 0; k < 30; ++k) {
    gauss_seidel_step(ctx, x, natural_order(p.M()));
    for (Index i = 0; i < p.M(); ++i) EXPECT_TRUE(p.local_sets[i].contains(x[i]));
    EXPECT_LE(p.objective(x), prev + 1e-12);
    prev = p.objective(x);
  }
}

TEST(CoordDescent, HandStep) {
  const BlockContext ctx(toy());
  EXPECT_DOUBLE_EQ(ctx.lipschitz(0), 2.0);
  // draw until block 0 is picked
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    Point x = ones();
    if (coord_descent_step(ctx, x, rng) == 0) {
      EXPECT_DOUBLE_EQ(x[0](0), -0.5);
      EXPECT_DOUBLE_EQ(x[1](0), 1.0);
      return;
    }
  }
  FAIL();
}

TEST(CoordDescent, ExpectedDescentAndReproducible) {
  const ProblemCCDC p = coop(4);
  const BlockContext ctx(p);
  Rng r0(5);
  Point x0;
  for (Index i = 0; i < p.M(); ++i) x0.push_back(r0.uniform_vector(p.linear[i].size(), -1, 1));
  const double f0 = p.objective(x0);
  Rng rng(9);
  double mean = 0.0;
  for (int k = 0; k < 1000; ++k) {
    Point x = x0;
    coord_descent_step(ctx, x, rng);
    mean += p.objective(x) / 1000.0;
  }
  EXPECT_LT(mean, f0);
  Rng a(3), b(3);
  Point xa = x0, xb = x0;
  for (int k = 0; k < 200; ++k) {
    coord_descent_step(ctx, xa, a);
    coord_descent_step(ctx, xb, b);
  }
  for (Index i = 0; i < p.M(); ++i) EXPECT_TRUE((xa[i].array() == xb[i].array()).all());
}

TEST(CoordDescent, LipschitzMatchesFiniteDifferenceCurvature) {
  const ProblemCCDC p = coop(5);
  const BlockContext ctx(p);
  Rng rng(2);
  for (Index i = 0; i < p.M(); ++i) {
    Point x;
    for (Index j = 0; j < p.M(); ++j) x.push_back(rng.uniform_vector(p.linear[j].size()));
    for (int k = 0; k < 10; ++k) {
      Point y = x;
      y[i] += rng.normal_vector(x[i].size());
      const double lhs = (p.partial_gradient(y, i) - p.partial_gradient(x, i)).norm();
      EXPECT_LE(lhs, ctx.lipschitz(i) * (y[i] - x[i]).norm() * (1 + 1e-10));
    }
  }
}

TEST(CooperativeJacobi, HandStepAndValidation) {
  const BlockContext ctx(toy());
  Point x = ones();
  cooperative_jacobi_step(ctx, x, {0.5, 0.5});
  EXPECT_NEAR(x[0](0), 0.25, 1e-12);
  EXPECT_NEAR(x[1](0), 0.25, 1e-12);
  EXPECT_THROW(cooperative_jacobi_step(ctx, x, {0.5, 0.6}), Error);
  EXPECT_THROW(cooperative_jacobi_step(ctx, x, {1.0, 0.0}), Error);
  Point y = ones();
  cooperative_jacobi_step(ctx, y, {1.0 - 1e-9, 1e-9});
  EXPECT_NEAR(y[0](0), -0.5, 1e-8);
  EXPECT_NEAR(y[1](0), 1.0, 1e-8);
}

TEST(CooperativeJacobi, ObjectiveNonincreasing) {
  const ProblemCCDC p = coop(6, 5);
  const BlockContext ctx(p);
  std::vector<double> a(5, 0.2);
  Point x;
  for (Index i = 0; i < p.M(); ++i) x.push_back(Vec::Zero(p.linear[i].size()));
  double prev = p.objective(x);
  for (int k = 0; k < 50; ++k) {
    cooperative_jacobi_step(ctx, x, a);
    EXPECT_LE(p.objective(x), prev + 1e-12);
    prev = p.objective(x);
  }
  EXPECT_LE(std::abs(prev - solve_centralized(p).objective), 1e-3);
}

TEST(FeasibleDirections, FullStepEqualsJacobi) {
  const BlockContext ctx(toy());
  Point x = ones();
  const FeasibleDirectionsInfo info = feasible_directions_step(ctx, x);
  EXPECT_TRUE(info.frozen.empty());
  EXPECT_DOUBLE_EQ(info.steps[0], 1.0);
  EXPECT_NEAR(x[0](0), -0.5, 1e-12);
  const OracleSolution o = solve_centralized(toy());
  Point y = o.x;
  feasible_directions_step(ctx, y);
  EXPECT_LE(dist(y, o.x), 1e-9);
}

TEST(FeasibleDirections, StaysFeasibleAndConverges) {
  const ProblemCCDC p = coop(7);
  const BlockContext ctx(p);
  const OracleSolution o = solve_centralized(p);
  Point x;
  for (Index i = 0; i < p.M(); ++i) x.push_back(Vec::Zero(p.linear[i].size()));
  for (int k = 0; k < 200; ++k) {
    feasible_directions_step(ctx, x);
    for (Index i = 0; i < p.M(); ++i) EXPECT_TRUE(p.local_sets[i].contains(x[i]));
  }
  EXPECT_LE(dist(x, o.x), 1e-6);
}

TEST(Contraction, Examples) {
  ProblemCCDC d;
  d.blocks = {{Mat::Identity(2, 2), Mat()}, {Mat(), Mat::Identity(2, 2)}};
  d.linear = {Vec::Zero(2), Vec::Zero(2)};
  d.local_sets = {FeasibleSet::free(2), FeasibleSet::free(2)};
  const ContractionCertificate c = contraction_certificate(d, 0.25);
  EXPECT_TRUE(c.contraction);
  EXPECT_NEAR(c.modulus, 0.5, 1e-12);
  EXPECT_TRUE(contraction_certificate(toy(), 0.1).contraction);
  ProblemCCDC z = toy();
  z.blocks[0][0] = Mat::Zero(1, 1);
  EXPECT_FALSE(best_contraction(z).contraction);
}

// block diagonally dominant quadratic on boxes
ProblemCCDC dominant(std::uint64_t seed) {
  Rng rng(seed);
  const Index M = 5, n = 2;
  ProblemCCDC p;
  p.blocks.assign(M, std::vector<Mat>(M));
  for (Index i = 0; i < M; ++i) {
    p.blocks[i][i] = Mat::Identity(n, n) * 2.0;
    for (Index j = 0; j < i; ++j) {
      p.blocks[i][j] = rng.uniform_matrix(n, n, -0.1, 0.1);
      p.blocks[j][i] = p.blocks[i][j].transpose();
    }
    p.linear.push_back(rng.uniform_vector(n, -4, 4));
    p.local_sets.push_back(FeasibleSet::uniform_box(n, -1, 1));
  }
  return p;
}

TEST(Contraction, LinearRateUnderCertificate) {
  const ProblemCCDC p = dominant(8);
  const ContractionCertificate c = best_contraction(p);
  ASSERT_TRUE(c.contraction) << c.modulus;
  const BlockContext ctx(p);
  const OracleSolution o = solve_centralized(p);
  for (int mode = 0; mode < 2; ++mode) {
    Point x;
    for (Index i = 0; i < p.M(); ++i) x.push_back(Vec::Zero(p.linear[i].size()));
    const double d0 = dist(x, o.x);
    double dk = d0;
    int k = 0;
    for (; k < 10; ++k) {
      if (mode == 0) jacobi_step(ctx, x);
      else gauss_seidel_step(ctx, x, natural_order(p.M()));
    }
    dk = dist(x, o.x);
    const double rho = std::pow(dk / d0, 1.0 / k);
    EXPECT_LT(rho, 1.0) << mode;
  }
}

}  // namespace
}  // namespace netopt
