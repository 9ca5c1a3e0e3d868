// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "walkstack/wbc.hpp"

namespace walkstack::wbc {
namespace {

using rbd::Configuration;

const rbd::RobotModel& biped() {
  static const rbd::RobotModel m = rbd::load_model_file(rbd::bundled_model_path("biped12.json"));
  return m;
}

Configuration standing() { return standing_configuration(biped()); }

Matrix3d random_rotation(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return Eigen::Quaterniond(Eigen::Vector4d(u(rng), u(rng), u(rng), u(rng)).normalized()).toRotationMatrix();
}

double weight() { return biped().total_mass() * 9.81; }

WbcCommand static_solve(const std::array<double, 2>& share, const WbcWeights& w = {}) {
  const Configuration q = standing();
  const auto refs = TaskReferences::from_state(biped(), q);
  return wbc_step(biped(), q, VectorXd::Zero(18), refs, TaskGains{}, ContactSpec{}, w, {true, true}, share);
}

TEST(So3Error, Examples) {
  EXPECT_EQ(so3_error(Matrix3d::Identity(), Matrix3d::Identity()), Vector3d::Zero());
  const Matrix3d Rz = Eigen::AngleAxisd(0.2, Vector3d::UnitZ()).toRotationMatrix();
  EXPECT_LE((so3_error(Rz, Matrix3d::Identity()) - Vector3d(0, 0, std::sin(0.2))).norm(), 1e-15);
}

TEST(So3Error, GeodesicOracleAndAntisymmetry) {
  std::mt19937 rng(1);
  for (int k = 0; k < 500; ++k) {
    const Matrix3d A = random_rotation(rng), B = random_rotation(rng);
    // Geodesic distance from the trace.
    const double angle = std::acos(std::clamp(((A * B.transpose()).trace() - 1.0) / 2.0, -1.0, 1.0));
    EXPECT_NEAR(so3_error(A, B).norm(), std::sin(angle), 1e-10);
    if (angle < 3.1) EXPECT_GT(so3_error(A, B).norm(), 1e-10);
    EXPECT_LE(so3_error(A, A).norm(), 1e-15);
    EXPECT_LE((so3_error(A, B) + so3_error(B, A)).norm(), 1e-10);
  }
}

TEST(StandingConfiguration, BalancedAndFlat) {
  const Configuration q = standing();
  const auto l = rbd::frame_pose(biped(), q, "left_sole"), r = rbd::frame_pose(biped(), q, "right_sole");
  EXPECT_NEAR(l.p.z(), 0.0, 1e-12);
  EXPECT_NEAR(r.p.z(), 0.0, 1e-12);
  EXPECT_LE((l.R - Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_LE((r.R - Matrix3d::Identity()).norm(), 1e-12);
  const Vector3d G = rbd::com_and_jacobian(biped(), q).p;
  EXPECT_NEAR(G.x(), 0.0, 1e-12);
  EXPECT_NEAR(G.x(), 0.5 * (l.p.x() + r.p.x()), 1e-12);
  EXPECT_NEAR(q.s(3), 1.0, 0.0);
  EXPECT_THROW(standing_configuration(rbd::load_model_file(rbd::bundled_model_path("pendulum.json"))), ModelError);
}

TEST(ContactInequalities, Examples) {
  ContactSpec spec;
  const auto ci = contact_inequalities(spec);
  Vector6d w;
  w << 0, 0, weight(), 0, 0, 0;
  EXPECT_LT((ci.C * w - ci.b).maxCoeff(), 0.0);
  const double fz = 100.0;
  w << spec.mu * fz + 1e-6, 0, fz, 0, 0, 0;
  EXPECT_GT((ci.C * w - ci.b)(1), 0.0);
  // CoP at the front-left corner: m_x = y fz, m_y = -x fz.
  w << 0, 0, fz, spec.ly * fz, -spec.lx * fz, 0;
  const VectorXd r = ci.C * w - ci.b;
  EXPECT_NEAR(r(6), 0.0, 1e-10);  // -m_y <= lx fz
  EXPECT_NEAR(r(7), 0.0, 1e-10);  //  m_x <= ly fz
  EXPECT_LT(r(5), 0.0);
  EXPECT_LT(r(8), 0.0);
  w << 0, 0, fz, 0, 0, 0.5 * spec.mu * fz + 1e-6;
  EXPECT_GT((ci.C * w - ci.b)(9), 0.0);
  spec.mu = 0.0;
  EXPECT_THROW(contact_inequalities(spec), ConfigError);
}

TEST(TaskAccelerations, PdDefinition) {
  const Configuration q = standing();
  auto refs = TaskReferences::from_state(biped(), q);
  const auto t0 = task_accelerations(biped(), q, VectorXd::Zero(18), refs, TaskGains{});
  EXPECT_LE(t0.upsilon.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(t0.torso.norm(), 1e-12);
  EXPECT_LE(t0.posture.norm(), 0.0);
  const Vector3d e(0.01, -0.02, 0.005);
  refs.com_position += e;
  TaskGains g;
  g.com = {100.0, 20.0};
  const auto t1 = task_accelerations(biped(), q, VectorXd::Zero(18), refs, g);
  EXPECT_LE((t1.upsilon.head<3>() - 100.0 * e).norm(), 1e-12);
  // Rotational block goes through so3_error.
  refs = TaskReferences::from_state(biped(), q);
  const Matrix3d Rd = Eigen::AngleAxisd(0.1, Vector3d::UnitX()).toRotationMatrix();
  refs.foot(Side::Right).pose.R = Rd;
  const auto t2 = task_accelerations(biped(), q, VectorXd::Zero(18), refs, g);
  EXPECT_LE((t2.upsilon.segment<3>(12) + g.foot_angular.kp * so3_error(Matrix3d::Identity(), Rd)).norm(), 1e-12);
}

TEST(BuildWbcQp, Dimensions) {
  const Configuration q = standing();
  const auto refs = TaskReferences::from_state(biped(), q);
  const auto t = task_accelerations(biped(), q, VectorXd::Zero(18), refs, TaskGains{});
  const auto both = build_wbc_qp(dynamics_data(biped(), q, VectorXd::Zero(18), {true, true}), t, ContactSpec{},
                                 WbcWeights{}, {0.5, 0.5});
  EXPECT_EQ(both.problem.num_variables(), 24);
  EXPECT_EQ(both.problem.num_equalities(), 15);
  EXPECT_EQ(both.problem.num_inequalities(), 22);
  const auto one = build_wbc_qp(dynamics_data(biped(), q, VectorXd::Zero(18), {false, true}), t, ContactSpec{},
                                WbcWeights{}, {0.0, 1.0});
  EXPECT_EQ(one.problem.num_variables(), 18);
  EXPECT_THROW(build_wbc_qp(dynamics_data(biped(), q, VectorXd::Zero(18), {false, false}), t, ContactSpec{},
                            WbcWeights{}, {0.5, 0.5}),
               DomainError);
}

TEST(WbcStep, StaticDoubleSupportBalancesWeight) {
  const auto cmd = static_solve({0.5, 0.5});
  ASSERT_EQ(cmd.status, qp::Status::Optimal);
  const Vector3d total = cmd.wrench[0]->head<3>() + cmd.wrench[1]->head<3>();
  EXPECT_LE((total - Vector3d(0, 0, weight())).norm(), 1e-6);
  EXPECT_LE(cmd.task_residual, 1e-6);
  // Forward dynamics with the returned (tau, f).
  const Configuration q = standing();
  const MatrixXd M = rbd::mass_matrix(biped(), q);
  const auto cs = rbd::contact_stack(biped(), q, VectorXd::Zero(18), {"left_sole", "right_sole"});
  VectorXd f(12);
  f << *cmd.wrench[0], *cmd.wrench[1];
  const VectorXd nudot = M.llt().solve(rbd::selector(biped()) * cmd.tau + cs.J.transpose() * f -
                                       rbd::bias_forces(biped(), q, VectorXd::Zero(18)).h);
  EXPECT_LE(nudot.norm(), 1e-6);
  EXPECT_LE((nudot - cmd.nudot).norm(), 1e-9);
  EXPECT_LE((rbd::com_and_jacobian(biped(), q).J * nudot).norm(), 1e-6);
}

TEST(WbcStep, UnloadingWeightDrivesForceToZero) {
  WbcWeights w;
  w.unloading = 1e3;
  const auto cmd = static_solve({0.0, 1.0}, w);
  ASSERT_EQ(cmd.status, qp::Status::Optimal);
  EXPECT_LE((*cmd.wrench[0])(2), 0.01 * weight());
  const auto ci = contact_inequalities(ContactSpec{});
  for (const auto& wr : cmd.wrench) EXPECT_LE((ci.C * *wr - ci.b).maxCoeff(), 1e-8);
}

TEST(WbcStep, UnloadingIsMonotone) {
  const double f0 = (*static_solve({0.0, 1.0}).wrench[0])(2);
  const double f25 = (*static_solve({0.25, 0.75}).wrench[0])(2);
  const double f50 = (*static_solve({0.5, 0.5}).wrench[0])(2);
  EXPECT_LT(f0, f25);
  EXPECT_LT(f25, f50);
}

TEST(WbcStep, TorqueWeightNeverIncreasesTorque) {
  WbcWeights w;
  double prev = static_solve({0.5, 0.5}, w).tau.norm();
  for (int k = 0; k < 6; ++k) {
    w.torque *= 2.0;
    const double now = static_solve({0.5, 0.5}, w).tau.norm();
    EXPECT_LE(now, prev + 1e-9);
    prev = now;
  }
}

TEST(WbcStep, RandomStatesSatisfyInvariants) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto ci = contact_inequalities(ContactSpec{});
  for (int k = 0; k < 30; ++k) {
    const Configuration q = standing();
    VectorXd nu(18);
    for (int i = 0; i < 18; ++i) nu(i) = 0.05 * u(rng);
    auto refs = TaskReferences::from_state(biped(), q);
    refs.com_position += Vector3d(0.01 * u(rng), 0.01 * u(rng), 0.005 * u(rng));
    const std::array<bool, 2> active{k % 3 != 1, k % 3 != 2};
    const double fl = active[0] && active[1] ? 0.5 * (u(rng) + 1.0) : (active[0] ? 1.0 : 0.0);
    const auto cmd = wbc_step(biped(), q, nu, refs, TaskGains{}, ContactSpec{}, WbcWeights{}, active, {fl, 1.0 - fl});
    ASSERT_EQ(cmd.status, qp::Status::Optimal);
    EXPECT_LE(cmd.task_residual, 1e-6);
    EXPECT_EQ(cmd.wrench[0].has_value(), active[0]);
    EXPECT_EQ(cmd.wrench[1].has_value(), active[1]);
    // Newton: m pddot_G = sum f + m g.
    const Vector3d acc = rbd::com_and_jacobian(biped(), q).J * cmd.nudot + rbd::com_drift(biped(), q, nu);
    Vector3d forces = biped().total_mass() * rbd::kDefaultGravity;
    for (Side s : {Side::Left, Side::Right}) {
      const auto& wr = cmd.wrench[static_cast<std::size_t>(s)];
      if (!wr) continue;
      forces += wr->head<3>();
      const Matrix3d R = rbd::frame_pose(biped(), q, s == Side::Left ? "left_sole" : "right_sole").R;
      Vector6d local;
      local << R.transpose() * wr->head<3>(), R.transpose() * wr->tail<3>();
      EXPECT_LE((ci.C * local - ci.b).maxCoeff(), 1e-8);
    }
    EXPECT_LE((biped().total_mass() * acc - forces).norm(), 1e-6 * weight());
  }
}

TEST(WbcCsv, HeaderAndRow) {
  EXPECT_EQ(wbc_csv_header(2),
            "t,tau_0,tau_1,fl_fx,fl_fy,fl_fz,fl_mx,fl_my,fl_mz,fr_fx,fr_fy,fr_fz,fr_mx,fr_my,fr_mz,task_residual,qp_status");
  WbcCommand c;
  c.tau = VectorXd::Constant(2, 1.5);
  c.wrench[1] = Vector6d::Constant(2.0);
  c.status = qp::Status::Optimal;
  EXPECT_EQ(wbc_csv_row(0.5, c), "0.5,1.5,1.5,0,0,0,0,0,0,2,2,2,2,2,2,0,optimal");
}

TEST(IkStep, FixedPoint) {
  const Configuration q = standing();
  const auto r = ik_step(biped(), q, TaskReferences::from_state(biped(), q), 0.01);
  EXPECT_LE((r.q.s - q.s).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(r.nu.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(IkStep, ComShiftKeepsFeet) {
  const Configuration q = standing();
  auto refs = TaskReferences::from_state(biped(), q);
  refs.com_position.x() += 1e-3;
  const auto r = ik_step(biped(), q, refs, 0.01);
  for (Side s : {Side::Left, Side::Right}) {
    const auto p = rbd::frame_pose(biped(), r.q, s == Side::Left ? "left_sole" : "right_sole");
    EXPECT_LE((p.p - refs.foot(s).pose.p).norm(), 1e-6);
    EXPECT_LE((p.R - refs.foot(s).pose.R).norm(), 1e-6);
  }
  EXPECT_NEAR(rbd::com_and_jacobian(biped(), r.q).p.x(), refs.com_position.x(), 1e-5);
  EXPECT_GT(r.nu.head<3>().x(), 0.0);
}

TEST(IkStep, StepsFootAndRespectsLimits) {
  const Configuration q = standing();
  auto refs = TaskReferences::from_state(biped(), q);
  refs.foot(Side::Left).pose.p += Vector3d(0.05, 0.0, 0.02);
  refs.com_position.y() -= 0.02;
  const auto r = ik_step(biped(), q, refs, 0.01);
  EXPECT_LE(r.feet_residual, 1e-9);
  const VectorXd lo = biped().lower_limits(), hi = biped().upper_limits();
  EXPECT_TRUE(((r.q.s - lo).array() >= 0.0).all());
  EXPECT_TRUE(((hi - r.q.s).array() >= 0.0).all());
}

}  // namespace
}  // namespace walkstack::wbc
