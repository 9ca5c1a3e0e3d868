// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "walkstack/sim.hpp"

namespace walkstack::sim {
namespace {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;

const rbd::RobotModel& biped() {
  static const rbd::RobotModel m = rbd::load_model_file(rbd::bundled_model_path("biped12.json"));
  return m;
}

SimState standing_state() { return make_state(biped(), wbc::standing_configuration(biped()), {true, true}); }

double pose_distance(const rbd::Pose3& a, const rbd::Pose3& b) { return (a.p - b.p).norm() + (a.R - b.R).norm(); }

TEST(SimConfig, Validation) {
  SimConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.substeps(), 10);
  c.dt_sim = 0.02;
  EXPECT_THROW(c.validate(), ConfigError);
  c.dt_sim = 0.003;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SimConfig{};
  c.alpha = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(mode_from_string("torque"), Mode::Torque);
  EXPECT_EQ(to_string(Mode::Position), "position");
  EXPECT_THROW(mode_from_string("velocity"), ConfigError);
}

TEST(StepPosition, SameReferenceLeavesStateUnchanged) {
  const SimState s = standing_state();
  const SimState n = step_position(biped(), s, s.q.s, Side::Left, 0.01);
  EXPECT_LE((n.q.p - s.q.p).norm(), 1e-15);
  EXPECT_LE((n.q.R - s.q.R).norm(), 1e-15);
  EXPECT_EQ(n.q.s, s.q.s);
  EXPECT_LE(n.nu.norm(), 1e-12);
  EXPECT_DOUBLE_EQ(n.t, 0.01);
}

TEST(StepPosition, AnchorSoleStaysWorldFixed) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  SimState s = standing_state();
  for (int k = 0; k < 200; ++k) {
    const Side anchor = k % 7 < 4 ? Side::Left : Side::Right;
    const rbd::Pose3 before = rbd::frame_pose(biped(), s.q, anchor == Side::Left ? "left_sole" : "right_sole");
    VectorXd ref = s.q.s;
    for (int i = 0; i < 12; ++i) ref(i) += u(rng);
    s = step_position(biped(), s, ref, anchor, 0.01);
    const rbd::Pose3 after = rbd::frame_pose(biped(), s.q, anchor == Side::Left ? "left_sole" : "right_sole");
    EXPECT_LE(pose_distance(before, after), 1e-12);
    rbd::check_configuration(biped(), s.q);
  }
}

TEST(StepPosition, AnchorHandoverIsContinuous) {
  const SimState s = standing_state();
  auto refs = wbc::TaskReferences::from_state(biped(), s.q);
  refs.com_position += Vector3d(0.01, -0.015, -0.005);
  const auto ik = wbc::ik_step(biped(), s.q, refs, 0.01);
  ASSERT_LE(ik.feet_residual, 1e-6);
  const SimState l = step_position(biped(), s, ik.q.s, Side::Left, 0.01);
  const SimState r = step_position(biped(), s, ik.q.s, Side::Right, 0.01);
  EXPECT_LE((l.q.p - r.q.p).norm(), 1e-6);
  EXPECT_LE((l.q.R - r.q.R).norm(), 1e-6);
}

TEST(StepTorque, FreeFallAcceleratesAtGravity) {
  SimState s = make_state(biped(), wbc::standing_configuration(biped()), {false, false});
  SimConfig c;
  const VectorXd tau = VectorXd::Zero(12);
  const SimState n = step_torque(biped(), s, tau, c);
  const Vector3d acc = rbd::com_and_jacobian(biped(), s.q).J * (n.nu - s.nu) / c.dt_sim;
  EXPECT_NEAR(acc.z(), -9.81, 1e-9);
  EXPECT_NEAR(acc.x(), 0.0, 1e-9);
  EXPECT_NEAR(acc.y(), 0.0, 1e-9);
  EXPECT_FALSE(n.contact_wrench[0].has_value());
}

TEST(StepTorque, FreeFallConservesEnergy) {
  SimState s = make_state(biped(), wbc::standing_configuration(biped()), {false, false});
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 18; ++i) s.nu(i) = 0.5 * u(rng);
  SimConfig c;
  c.dt_sim = 1e-4;
  auto energy = [](const SimState& st) {
    return rbd::kinetic_energy(biped(), st.q, st.nu) + rbd::potential_energy(biped(), st.q);
  };
  const double e0 = energy(s);
  const VectorXd tau = VectorXd::Zero(12);
  for (int k = 0; k < 5000; ++k) s = step_torque(biped(), s, tau, c);
  EXPECT_NEAR(s.t, 0.5, 1e-9);
  EXPECT_LE(std::abs(energy(s) - e0), 1e-4 * std::abs(e0));
}

TEST(StepTorque, ContactAccelerationMatchesBaumgarteTarget) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SimConfig c;
  for (int k = 0; k < 20; ++k) {
    SimState s = standing_state();
    for (int i = 0; i < 18; ++i) s.nu(i) = 0.1 * u(rng);
    s.q.p += Vector3d(1e-3 * u(rng), 1e-3 * u(rng), 1e-3 * u(rng));
    VectorXd tau(12);
    for (int i = 0; i < 12; ++i) tau(i) = 20.0 * u(rng);
    const SimState n = step_torque(biped(), s, tau, c);
    const VectorXd nudot = (n.nu - s.nu) / c.dt_sim;
    // Saddle-system oracle: solve [[M, -J'], [J, 0]] with a full LU.
    const auto cs = rbd::contact_stack(biped(), s.q, s.nu, {"left_sole", "right_sole"});
    const MatrixXd M = rbd::mass_matrix(biped(), s.q);
    MatrixXd K = MatrixXd::Zero(30, 30);
    K.topLeftCorner(18, 18) = M;
    K.topRightCorner(18, 12) = -cs.J.transpose();
    K.bottomLeftCorner(12, 18) = cs.J;
    VectorXd rhs(30);
    rhs.head(18) = rbd::selector(biped()) * tau - rbd::bias_forces(biped(), s.q, s.nu).h;
    rhs.tail(12) = -cs.Jdot_nu - 2.0 * c.alpha * cs.J * s.nu - c.beta * c.beta * contact_error(biped(), s);
    const VectorXd sol = K.fullPivLu().solve(rhs);
    EXPECT_LE((nudot - sol.head(18)).norm(), 1e-8 * (1.0 + sol.head(18).norm()));
    EXPECT_LE((*n.contact_wrench[0] - sol.segment<6>(18)).norm(), 1e-8 * (1.0 + sol.tail(12).norm()));
  }
}

TEST(StepTorque, ConstraintDriftDecays) {
  const SimState ref = standing_state();
  const auto refs = wbc::TaskReferences::from_state(biped(), ref.q);
  SimState s = ref;
  s.q.p.z() += 2e-3;  // both soles 2 mm above their anchors
  SimConfig c;
  const double e0 = contact_error(biped(), s).norm();
  for (int tick = 0; tick < 30; ++tick) {
    const auto cmd = wbc::wbc_step(biped(), s.q, s.nu, refs, wbc::TaskGains{}, wbc::ContactSpec{},
                                   wbc::WbcWeights{}, {true, true}, {0.5, 0.5});
    for (int k = 0; k < c.substeps(); ++k) s = step_torque(biped(), s, cmd.tau, c);
  }
  // Critically damped error dynamics: (1 + 50 t) exp(-50 t) ~ 5e-6 at 0.3 s.
  EXPECT_LE(contact_error(biped(), s).norm(), 1e-5 * e0);
}

TEST(StepTorque, SingularContactStackIsReported) {
  // Both contacts on the same frame make the stacked Jacobian rank deficient.
  SimState s = standing_state();
  wbc::FrameNames frames;
  frames.right_sole = "left_sole";
  s.contacts[1] = s.contacts[0];
  try {
    step_torque(biped(), s, VectorXd::Zero(12), SimConfig{}, frames);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("left, right"), std::string::npos);
  }
}

TEST(StepTorque, ContactBreakWarning) {
  SimState s = standing_state();
  // Strong pull on the knees lifts the feet against the bilateral contact.
  VectorXd tau = VectorXd::Zero(12);
  tau(3) = tau(9) = -400.0;
  SimConfig c;
  for (int k = 0; k < 40 && s.warnings.empty(); ++k) s = step_torque(biped(), s, tau, c);
  ASSERT_FALSE(s.warnings.empty());
  EXPECT_NE(s.warnings.front().find("contact break"), std::string::npos);
}

TEST(StepTorque, GravityCompensationHoldsStill) {
  SimState s = standing_state();
  const auto refs = wbc::TaskReferences::from_state(biped(), s.q);
  SimConfig c;
  double worst = 0.0;
  for (int tick = 0; tick < 100; ++tick) {
    const auto cmd = wbc::wbc_step(biped(), s.q, s.nu, refs, wbc::TaskGains{}, wbc::ContactSpec{},
                                   wbc::WbcWeights{}, {true, true}, {0.5, 0.5});
    for (int k = 0; k < c.substeps(); ++k) {
      s = step_torque(biped(), s, cmd.tau, c);
      worst = std::max(worst, s.nu.norm());
    }
  }
  EXPECT_LE(worst, 1e-5);
  EXPECT_TRUE(s.warnings.empty());
}

TEST(TouchdownProjection, FixedPointWhenAlreadyConsistent) {
  const SimState s = liftoff(standing_state(), Side::Left);
  const SimState n = touchdown_projection(biped(), s, Side::Left);
  EXPECT_LE(n.nu.norm(), 0.0);
  EXPECT_TRUE(n.in_contact(Side::Left));
  EXPECT_LE(pose_distance(*n.contacts[0], *standing_state().contacts[0]), 1e-12);
}

TEST(TouchdownProjection, SingleBodyStops) {
  const auto body = rbd::RobotModel(
      "block",
      {rbd::Link{"base", "", "", rbd::JointType::Fixed, Vector3d::UnitZ(), {}, 2.0, Vector3d::Zero(),
                 Eigen::Vector3d(0.1, 0.2, 0.3).asDiagonal(), -1e9, 1e9}},
      {rbd::Frame{"left_sole", "base", {}}, rbd::Frame{"right_sole", "base", {}}});
  SimState s;
  s.q = rbd::Configuration::neutral(body);
  s.nu = VectorXd(6);
  s.nu << 0.3, -0.2, -1.5, 0.4, 0.1, -0.7;
  const SimState n = touchdown_projection(body, s, Side::Left);
  EXPECT_LE(n.nu.norm(), 1e-14);
}

TEST(TouchdownProjection, RandomStatesLoseEnergyAndSatisfyConstraint) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    SimState s = standing_state();
    const Side landing = k % 2 ? Side::Left : Side::Right;
    s = liftoff(s, landing);
    if (k % 5 == 0) s = liftoff(s, other(landing));
    for (int i = 0; i < 18; ++i) s.nu(i) = u(rng);
    const SimState n = touchdown_projection(biped(), s, landing);
    EXPECT_LE(rbd::kinetic_energy(biped(), n.q, n.nu), rbd::kinetic_energy(biped(), s.q, s.nu) + 1e-12);
    for (Side side : {Side::Left, Side::Right}) {
      if (!n.in_contact(side)) continue;
      const auto J = rbd::frame_jacobian(biped(), n.q, side == Side::Left ? "left_sole" : "right_sole");
      EXPECT_LE((J * n.nu).norm(), 1e-10);
    }
  }
}

TEST(TouchdownProjection, RejectsAirborneSole) {
  SimState s = liftoff(standing_state(), Side::Left);
  s.q.p.z() += 0.05;
  EXPECT_THROW(touchdown_projection(biped(), s, Side::Left), DomainError);
}

TEST(GroundPose, KeepsYawDropsTilt) {
  rbd::Pose3 p;
  p.R = (Eigen::AngleAxisd(0.3, Vector3d::UnitZ()) * Eigen::AngleAxisd(0.05, Vector3d::UnitY())).toRotationMatrix();
  p.p = Vector3d(1.0, 2.0, 0.004);
  const rbd::Pose3 g = ground_pose(p);
  EXPECT_LE((g.R - Eigen::AngleAxisd(0.3, Vector3d::UnitZ()).toRotationMatrix()).norm(), 1e-14);
  EXPECT_EQ(g.p, Vector3d(1.0, 2.0, 0.0));
}

}  // namespace
}  // namespace walkstack::sim
