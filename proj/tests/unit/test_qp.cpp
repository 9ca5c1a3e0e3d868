// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "qp_oracle.hpp"
#include "walkstack/common.hpp"
#include "walkstack/qp.hpp"

namespace walkstack::qp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(QpSolve, HalfSpaceProjection) {
  Problem p = Problem::zeros(2, 0, 1);
  p.H.setIdentity();
  p.A_in << -1.0, 0.0;
  p.b_in << -1.0;
  const Solution s = solve(p);
  ASSERT_EQ(s.status, Status::Optimal);
  EXPECT_NEAR(s.x(0), 1.0, 1e-12);
  EXPECT_NEAR(s.x(1), 0.0, 1e-12);
  EXPECT_EQ(s.active_set, std::vector<int>{0});
  EXPECT_LE(s.kkt_residual, 1e-8);

  // Moving off the optimum must show up in the residual.
  VectorXd x = s.x;
  x(1) += 1e-3;
  EXPECT_GT(kkt_residual(p, x, s.lambda_eq, s.lambda_in), 1e-4);
}

TEST(QpSolve, EqualityMultiplierSign) {
  Problem p = Problem::zeros(2, 1, 0);
  p.H.setIdentity();
  p.A_eq << 1.0, 1.0;
  p.b_eq << 2.0;
  const Solution s = solve(p);
  ASSERT_EQ(s.status, Status::Optimal);
  EXPECT_NEAR(s.x(0), 1.0, 1e-9);
  EXPECT_NEAR(s.x(1), 1.0, 1e-9);
  EXPECT_NEAR(s.lambda_eq(0), -1.0, 1e-8);
}

TEST(QpSolve, UnconstrainedResidualIsGradientNorm) {
  Problem p = Problem::zeros(3, 0, 0);
  p.H = Eigen::Vector3d(1.0, 2.0, 4.0).asDiagonal();
  p.g << 1.0, -1.0, 2.0;
  const VectorXd x = VectorXd::Constant(3, 0.3);
  EXPECT_DOUBLE_EQ(kkt_residual(p, x, VectorXd(), VectorXd()), (p.H * x + p.g).cwiseAbs().maxCoeff());
  const Solution s = solve(p);
  ASSERT_EQ(s.status, Status::Optimal);
  EXPECT_NEAR(s.x(2), -0.5, 1e-8);
}

TEST(QpSolve, MatchesEnumerationOracle) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 6);
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = dim(rng);
    const int me = std::uniform_int_distribution<int>(0, std::max(0, n - 1))(rng) % 3;
    const int mi = std::uniform_int_distribution<int>(0, 8)(rng);
    const Problem p = testing::random_qp(rng, n, me, mi);
    const auto ref = testing::enumerate_active_sets(p);
    ASSERT_TRUE(ref.feasible) << "trial " << trial;
    const Solution s = solve(p);
    ASSERT_EQ(s.status, Status::Optimal) << "trial " << trial;
    EXPECT_LE(std::abs(objective(p, s.x) - ref.objective), 1e-8) << "trial " << trial;
    if (mi > 0) EXPECT_LE((p.A_in * s.x - p.b_in).maxCoeff(), 1e-8);
    if (me > 0) EXPECT_LE((p.A_eq * s.x - p.b_eq).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE(s.kkt_residual, 1e-7);
    ++compared;
  }
  EXPECT_GE(compared, 200);
}

TEST(QpSolve, DetectsInfeasibleInequalities) {
  Problem p = Problem::zeros(1, 0, 2);
  p.H.setIdentity();
  p.A_in << 1.0, -1.0;
  p.b_in << -1.0, -1.0;  // x <= -1 and x >= 1
  const Solution s = solve(p);
  EXPECT_EQ(s.status, Status::Infeasible);
  EXPECT_GE(s.violated_row, 0);
}

TEST(QpSolve, DetectsInconsistentEqualities) {
  Problem p = Problem::zeros(2, 2, 0);
  p.H.setIdentity();
  p.A_eq << 1.0, 1.0, 2.0, 2.0;
  p.b_eq << 1.0, 3.0;
  EXPECT_EQ(solve(p).status, Status::Infeasible);
}

TEST(QpSolve, RedundantEqualitiesAreAccepted) {
  Problem p = Problem::zeros(2, 2, 0);
  p.H.setIdentity();
  p.A_eq << 1.0, 1.0, 2.0, 2.0;
  p.b_eq << 1.0, 2.0;
  const Solution s = solve(p);
  ASSERT_EQ(s.status, Status::Optimal);
  EXPECT_NEAR(s.x(0), 0.5, 1e-9);
  EXPECT_LE(s.kkt_residual, 1e-8);
}

TEST(QpSolve, FarInfeasibleStartNeedsPhaseOne) {
  // Unconstrained minimizer violates a box far away from it.
  Problem p = Problem::zeros(3, 0, 6);
  p.H.setIdentity();
  p.g << 100.0, -50.0, 20.0;
  p.A_in.topRows(3).setIdentity();
  p.A_in.bottomRows(3) = -MatrixXd::Identity(3, 3);
  p.b_in << 2.0, 3.0, 4.0, -1.0, -1.0, -1.0;  // 1 <= x_i <= {2,3,4}
  const Solution s = solve(p);
  ASSERT_EQ(s.status, Status::Optimal);
  EXPECT_NEAR(s.x(0), 1.0, 1e-9);
  EXPECT_NEAR(s.x(1), 3.0, 1e-9);
  EXPECT_NEAR(s.x(2), 1.0, 1e-9);
}

TEST(QpSolve, WarmStartGivesSameOptimum) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Problem p = testing::random_qp(rng, 6, 1, 8);
    const Solution cold = solve(p);
    ASSERT_EQ(cold.status, Status::Optimal);
    Options warm_opt;
    warm_opt.warm_start = cold.active_set;
    const Solution warm = solve(p, warm_opt);
    ASSERT_EQ(warm.status, Status::Optimal);
    EXPECT_LE(std::abs(objective(p, warm.x) - objective(p, cold.x)), 1e-9);
    EXPECT_LE(warm.iterations, cold.iterations);

    // A stale warm start must not change the answer either.
    Options junk;
    junk.warm_start = std::vector<int>{0, 1, 2, 3, 4, 5, 7, 42};
    const Solution stale = solve(p, junk);
    ASSERT_EQ(stale.status, Status::Optimal);
    EXPECT_LE(std::abs(objective(p, stale.x) - objective(p, cold.x)), 1e-9);
  }
}

TEST(QpSolve, Deterministic) {
  std::mt19937_64 rng(3);
  const Problem p = testing::random_qp(rng, 6, 2, 8);
  const Solution a = solve(p);
  const Solution b = solve(p);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.active_set, b.active_set);
  for (int i = 0; i < p.num_variables(); ++i) EXPECT_EQ(a.x(i), b.x(i));
}

TEST(QpSolve, ScaleRobustness) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    Problem p = testing::random_qp(rng, 5, 1, 7);
    const Solution a = solve(p);
    p.H *= 1e3;
    p.g *= 1e3;
    const Solution b = solve(p);
    ASSERT_EQ(a.status, Status::Optimal);
    ASSERT_EQ(b.status, Status::Optimal);
    EXPECT_LE((a.x - b.x).norm(), 1e-6 * std::max(1.0, a.x.norm()));
  }
}

TEST(QpSolve, SolverObjectReusesActiveSet) {
  std::mt19937_64 rng(9);
  Problem p = testing::random_qp(rng, 6, 0, 8);
  Solver solver;
  const Solution first = solver.solve(p);
  p.g *= 1.0001;
  const Solution second = solver.solve(p);
  const Solution cold = solve(p);
  ASSERT_EQ(second.status, Status::Optimal);
  EXPECT_LE(std::abs(objective(p, second.x) - objective(p, cold.x)), 1e-9);
  EXPECT_LE(second.iterations, cold.iterations);
  (void)first;
}

TEST(QpProblem, ValidateRejectsBadShapes) {
  Problem p = Problem::zeros(2, 0, 1);
  p.H(0, 1) = 1.0;
  EXPECT_THROW(p.validate(), ConfigError);
  Problem q = Problem::zeros(2, 0, 1);
  q.b_in.resize(2);
  EXPECT_THROW(solve(q), ConfigError);
}

TEST(QpProblem, DumpRoundTrip) {
  std::mt19937_64 rng(1);
  const Problem p = testing::random_qp(rng, 4, 1, 3);
  std::stringstream ss;
  write_problem(ss, p);
  const Problem r = read_problem(ss);
  EXPECT_EQ(r.H, p.H);
  EXPECT_EQ(r.g, p.g);
  EXPECT_EQ(r.A_eq, p.A_eq);
  EXPECT_EQ(r.b_in, p.b_in);
  std::stringstream bad("walkstack-qp 2\n1 0 0\n");
  EXPECT_THROW(read_problem(bad), ConfigError);
}

}  // namespace
}  // namespace walkstack::qp
