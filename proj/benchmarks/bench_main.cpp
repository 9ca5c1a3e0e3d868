// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "walkstack/mpc.hpp"
#include "walkstack/qp.hpp"
#include "walkstack/rbd.hpp"
#include "walkstack/wbc.hpp"

namespace ws = walkstack;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

const ws::rbd::RobotModel& biped() {
  static const ws::rbd::RobotModel m = ws::rbd::load_model_file(ws::rbd::bundled_model_path("biped12.json"));
  return m;
}

// Strictly convex problem with n/4 equalities and 2n inequalities, feasible at a random point.
ws::qp::Problem random_problem(int n, std::mt19937& rng) {
  std::normal_distribution<double> g;
  const auto rnd = [&](int r, int c) { return MatrixXd::NullaryExpr(r, c, [&] { return g(rng); }); };
  const MatrixXd L = rnd(n, n);
  ws::qp::Problem p;
  p.H = L * L.transpose() + MatrixXd::Identity(n, n);
  p.g = rnd(n, 1);
  const VectorXd x0 = rnd(n, 1);
  p.A_eq = rnd(n / 4, n);
  p.b_eq = p.A_eq * x0;
  p.A_in = rnd(2 * n, n);
  p.b_in = p.A_in * x0 + rnd(2 * n, 1).cwiseAbs();
  return p;
}

void BM_QpSolve(benchmark::State& state) {
  std::mt19937 rng(1);
  const auto p = random_problem(static_cast<int>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(ws::qp::solve(p));
}
BENCHMARK(BM_QpSolve)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_MpcStep(benchmark::State& state) {
  const ws::mpc::TableCartModel m(0.8);
  const ws::mpc::MpcConfig cfg;
  const std::vector<ws::Pose2> feet = {{Vector2d(0.0, 0.045), 0.0}, {Vector2d(0.0, -0.045), 0.0}};
  const auto hs = ws::mpc::support_halfspaces(feet, ws::mpc::FootGeometry{}, cfg.margin, m);
  const std::vector<ws::mpc::HalfSpaces> sched(static_cast<std::size_t>(cfg.N), hs);
  // Reference ahead of the feet keeps polygon edges active.
  const std::vector<Vector2d> ref(static_cast<std::size_t>(cfg.N), Vector2d(0.2, 0.0));
  for (auto _ : state) benchmark::DoNotOptimize(ws::mpc::mpc_step(cfg, m, ws::mpc::Chi::Zero(), ref, sched));
}
BENCHMARK(BM_MpcStep)->Unit(benchmark::kMillisecond);

void BM_WbcStep(benchmark::State& state) {
  const auto q = ws::wbc::standing_configuration(biped());
  const auto refs = ws::wbc::TaskReferences::from_state(biped(), q);
  const VectorXd nu = VectorXd::Zero(biped().nv());
  const std::array<double, 2> share{0.5, 0.5};
  for (auto _ : state)
    benchmark::DoNotOptimize(ws::wbc::wbc_step(biped(), q, nu, refs, ws::wbc::TaskGains{}, ws::wbc::ContactSpec{},
                                               ws::wbc::WbcWeights{}, {true, true}, share));
}
BENCHMARK(BM_WbcStep)->Unit(benchmark::kMicrosecond);

void BM_MassMatrix(benchmark::State& state) {
  const auto q = ws::wbc::standing_configuration(biped());
  for (auto _ : state) benchmark::DoNotOptimize(ws::rbd::mass_matrix(biped(), q));
}
BENCHMARK(BM_MassMatrix)->Unit(benchmark::kMicrosecond);

void BM_BiasForces(benchmark::State& state) {
  const auto q = ws::wbc::standing_configuration(biped());
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const VectorXd nu = VectorXd::NullaryExpr(biped().nv(), [&] { return u(rng); });
  for (auto _ : state) benchmark::DoNotOptimize(ws::rbd::bias_forces(biped(), q, nu));
}
BENCHMARK(BM_BiasForces)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
