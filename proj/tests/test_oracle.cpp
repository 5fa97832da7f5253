#include "netopt/generators.hpp"
#include "netopt/local_solver.hpp"
#include "netopt/oracle.hpp"

#include <gtest/gtest.h>

namespace netopt {
namespace {

double dual_value(const ProblemDCCC& p, const Vec& lam) {
  double d = -lam.dot(p.g);
  for (Index i = 0; i < p.M(); ++i) {
    const QuadCost c(p.costs[i].H, p.costs[i].q + p.G[i].transpose() * lam, p.costs[i].constant);
    const QPSolution s = solve_local_qp(c, p.local_sets[i], std::nullopt, 1e-12);
    d += c.value(s.x);
  }
  return d;
}

ProblemDCx small_mhe(std::uint64_t seed) {
  MheConfig c;
  c.M = 3;
  c.N = 2;
  c.n = 2;
  c.seed = seed;
  return gen_mhe_dcx(c);
}

ProblemCCDC small_coop(std::uint64_t seed) {
  CoopConfig c;
  c.M = 3;
  c.N = 3;
  c.n = 3;
  c.m = 2;
  c.seed = seed;
  return gen_coupled_cooperative(c);
}

ProblemDCCC small_dccc(std::uint64_t seed) {
  RandomDcccConfig c;
  c.M = 3;
  c.dim = 4;
  c.n_lambda = 2;
  c.seed = seed;
  return gen_random_dccc(c);
}

TEST(Oracle, DcxExample) {
  ProblemDCx p;
  p.costs.emplace_back(Mat::Identity(1, 1), Vec::Zero(1), 0.0);
  p.costs.emplace_back(Mat::Identity(1, 1), Vec::Constant(1, -4.0), 4.0);
  p.common_set = FeasibleSet::uniform_box(1, -1, 1);
  const OracleSolution s = solve_centralized(p);
  EXPECT_NEAR(s.x[0](0), 1.0, 1e-9);
  EXPECT_NEAR(s.objective, 2.0, 1e-9);
}

TEST(Oracle, DcccExample) {
  ProblemDCCC p;
  for (int i = 0; i < 2; ++i) {
    p.costs.emplace_back(Mat::Identity(1, 1), Vec::Zero(1), 0.0);
    p.local_sets.push_back(FeasibleSet::uniform_box(1, -10, 10));
    p.G.push_back(Mat::Ones(1, 1));
  }
  p.g = Vec::Ones(1);
  p.fill_default_row_blocks();
  const OracleSolution s = solve_centralized(p);
  EXPECT_NEAR(s.x[0](0), 0.5, 1e-9);
  EXPECT_NEAR(s.x[1](0), 0.5, 1e-9);
  EXPECT_NEAR(s.multipliers(0), -1.0, 1e-9);
  EXPECT_NEAR(s.objective, 0.5, 1e-9);
  EXPECT_LE(inf_norm(p.residual(s.x)), 1e-10);
}

TEST(Oracle, BlockDiagonalCcdcIsPerAgent) {
  ProblemCCDC p = small_coop(3);
  const Index M = p.M();
  for (Index i = 0; i < M; ++i)
    for (Index j = 0; j < M; ++j)
      if (i != j) p.blocks[i][j] = Mat();
  const OracleSolution s = solve_centralized(p);
  for (Index i = 0; i < M; ++i) {
    const QPSolution loc = solve_local_qp(QuadCost(p.blocks[i][i], p.linear[i]), p.local_sets[i], std::nullopt, 1e-12);
    EXPECT_LE((s.x[i] - loc.x).cwiseAbs().maxCoeff(), 1e-7) << i;
  }
}

TEST(Oracle, InfeasibleDetected) {
  ProblemDCCC p;
  for (int i = 0; i < 2; ++i) {
    p.costs.emplace_back(Mat::Identity(1, 1), Vec::Zero(1), 0.0);
    p.local_sets.push_back(FeasibleSet::uniform_box(1, -1, 1));
    p.G.push_back(Mat::Ones(1, 1));
  }
  p.g = Vec::Constant(1, 5.0);
  p.fill_default_row_blocks();
  try {
    solve_centralized(p);
    FAIL() << "expected Infeasible";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Infeasible);
  }
}

TEST(Oracle, StrongDualityOnDccc) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ProblemDCCC p = small_dccc(seed);
    const OracleSolution s = solve_centralized(p);
    EXPECT_LE(inf_norm(p.residual(s.x)), 1e-10);
    const double d0 = dual_value(p, s.multipliers);
    EXPECT_LE(std::abs(s.objective - d0), 1e-8) << seed;
  }
  ControlConfig cc;
  cc.M = 3;
  cc.N = 3;
  cc.n = 3;
  cc.m = 2;
  cc.p = 1;
  cc.seed = 5;
  const ProblemDCCC p = gen_control_dccc(cc);
  const OracleSolution s = solve_centralized(p);
  EXPECT_LE(std::abs(s.objective - dual_value(p, s.multipliers)), 1e-8);
}

TEST(Oracle, MultipliersMaximizeDual) {
  Rng rng(9);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ProblemDCCC p = small_dccc(seed);
    const OracleSolution s = solve_centralized(p);
    const double d0 = dual_value(p, s.multipliers);
    for (int k = 0; k < 10; ++k) {
      const Vec dl = 1e-2 * rng.normal_vector(p.n_lambda());
      EXPECT_LE(dual_value(p, s.multipliers + dl), d0 + 1e-9);
    }
  }
}

TEST(Oracle, MinimalityWitnessDcx) {
  Rng rng(1);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ProblemDCx p = small_mhe(seed);
    const OracleSolution s = solve_centralized(p);
    EXPECT_TRUE(p.common_set.contains(s.x[0]));
    for (int k = 0; k < 20; ++k) {
      const Vec v = project(p.common_set, s.x[0] + 0.1 * rng.normal_vector(p.dim()));
      EXPECT_LE(s.objective, p.objective(v) + 1e-9);
    }
  }
}

TEST(Oracle, MinimalityWitnessDccc) {
  Rng rng(2);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ProblemDCCC p = small_dccc(seed);
    const OracleSolution s = solve_centralized(p);
    for (Index i = 0; i < p.M(); ++i) EXPECT_TRUE(p.local_sets[i].contains(s.x[i]));
    // feasible competitors: optimal points of the same constraints under random costs
    ProblemDCCC q = p;
    for (int k = 0; k < 3; ++k) {
      for (Index i = 0; i < q.M(); ++i) q.costs[i] = QuadCost(Mat::Identity(q.costs[i].dim(), q.costs[i].dim()),
                                                          rng.normal_vector(q.costs[i].dim()), 0.0);
      const OracleSolution o = solve_centralized(q);
      EXPECT_LE(inf_norm(p.residual(o.x)), 1e-9);
      EXPECT_LE(s.objective, p.objective(o.x) + 1e-9);
    }
  }
}

TEST(Oracle, MinimalityWitnessCcdc) {
  Rng rng(3);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ProblemCCDC p = small_coop(seed);
    const OracleSolution s = solve_centralized(p);
    for (int k = 0; k < 20; ++k) {
      Point x = s.x;
      for (Index i = 0; i < p.M(); ++i) x[i] = project(p.local_sets[i], x[i] + 0.1 * rng.normal_vector(x[i].size()));
      EXPECT_LE(s.objective, p.objective(x) + 1e-9);
    }
  }
}

TEST(Oracle, KktResidualSmall) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    EXPECT_LE(solve_centralized(small_coop(seed)).kkt_residual, 1e-8);
    EXPECT_LE(solve_centralized(small_dccc(seed)).kkt_residual, 1e-8);
    EXPECT_LE(solve_centralized(small_mhe(seed)).kkt_residual, 1e-8);
  }
}

TEST(Oracle, PartialGradientVanishesAtInteriorOptimum) {
  ProblemCCDC p = small_coop(4);
  for (auto& s : p.local_sets) s = FeasibleSet::free(s.dim());
  const OracleSolution o = solve_centralized(p);
  for (Index i = 0; i < p.M(); ++i) EXPECT_LE(p.partial_gradient(o.x, i).norm(), 1e-6);
}

}  // namespace
}  // namespace netopt
