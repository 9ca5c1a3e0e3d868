// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "walkstack/common.hpp"
#include "walkstack/qp.hpp"
#include "walkstack/rbd.hpp"

namespace walkstack::wbc {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;
using rbd::Vector6d;

/// Frame names the controller expects in the model.
struct FrameNames {
  std::string left_sole = "left_sole";
  std::string right_sole = "right_sole";
  std::string torso = "torso";

  const std::string& sole(Side s) const { return s == Side::Left ? left_sole : right_sole; }
};

/// Bent-knee stance: both soles flat on z = 0, pelvis upright, CoM above
/// the midpoint of the sole origins at x = 0. Pitch joints are found by the
/// suffixes "hip_pitch", "knee" and "ankle_pitch".
rbd::Configuration standing_configuration(const rbd::RobotModel& model, double knee = 1.0,
                                          const FrameNames& frames = {});

/// Orientation error vee(skew(R R_des')) in world axes; its norm is
/// sin(angle) of R_des' R.
Vector3d so3_error(const Matrix3d& R, const Matrix3d& R_des);

struct FootTarget {
  rbd::Pose3 pose;
  Vector6d velocity = Vector6d::Zero();      // (linear; angular), world axes
  Vector6d acceleration = Vector6d::Zero();
};

struct TaskReferences {
  Vector3d com_position = Vector3d::Zero();
  Vector3d com_velocity = Vector3d::Zero();
  Vector3d com_acceleration = Vector3d::Zero();
  std::array<FootTarget, 2> feet;  // indexed by Side
  Matrix3d torso_orientation = Matrix3d::Identity();
  VectorXd posture;

  FootTarget& foot(Side s) { return feet[static_cast<std::size_t>(s)]; }
  const FootTarget& foot(Side s) const { return feet[static_cast<std::size_t>(s)]; }

  /// References equal to the current kinematics, zero rates.
  static TaskReferences from_state(const rbd::RobotModel& model, const rbd::Configuration& q,
                                   const FrameNames& frames = {});
};

struct PdGains {
  double kp = 0.0;
  double kd = 0.0;
};

struct TaskGains {
  PdGains com{50.0, 14.0};
  PdGains foot_linear{100.0, 20.0};
  PdGains foot_angular{80.0, 16.0};
  PdGains torso{20.0, 9.0};
  PdGains posture{10.0, 6.0};

  void validate() const;
};

struct ContactSpec {
  double lx = 0.08;  // sole half-length
  double ly = 0.035; // sole half-width
  double mu = 0.5;
  double f_min = 0.0;
  /// Torsional bound |m_z| <= mu_z f_z; negative selects mu / 2.
  double mu_z = -1.0;

  double torsional() const { return mu_z < 0.0 ? 0.5 * mu : mu_z; }
  void validate() const;
};

struct WbcWeights {
  double torso = 1.0;
  double torque = 1e-7;
  double unloading = 1e-2;

  void validate() const;
};

/// Rows C w <= b on a sole-frame wrench w = (f_x, f_y, f_z, m_x, m_y, m_z):
/// unilaterality, 4-facet friction pyramid, CoP inside the rectangle and a
/// torsional bound.
struct ContactInequalities {
  Eigen::Matrix<double, Eigen::Dynamic, 6> C;
  VectorXd b;
};

ContactInequalities contact_inequalities(const ContactSpec& spec);

struct TaskAccelerations {
  VectorXd upsilon;  // CoM (3), left sole (6), right sole (6)
  Vector3d torso = Vector3d::Zero();
  VectorXd posture;
};

/// PD laws (plus feedforward accelerations) on the CoM, the soles, the
/// torso orientation and the joint posture.
TaskAccelerations task_accelerations(const rbd::RobotModel& model, const rbd::Configuration& q, const VectorXd& nu,
                                     const TaskReferences& refs, const TaskGains& gains,
                                     const FrameNames& frames = {});

/// Model quantities one control tick needs.
struct DynamicsData {
  MatrixXd M;
  VectorXd h;
  MatrixXd B;
  MatrixXd J_task;  // 15 x (n + 6): CoM, left sole, right sole
  VectorXd task_drift;
  MatrixXd J_torso;  // angular rows of the torso frame
  Vector3d torso_drift = Vector3d::Zero();
  std::vector<Side> contacts;
  MatrixXd J_contact;  // 6 per active contact
  std::vector<Matrix3d> sole_rotation;
};

DynamicsData dynamics_data(const rbd::RobotModel& model, const rbd::Configuration& q, const VectorXd& nu,
                           const std::array<bool, 2>& active_contacts, const FrameNames& frames = {});

struct WbcQp {
  qp::Problem problem;
  /// nudot = nudot_map u + nudot_offset with u = (tau, f).
  MatrixXd nudot_map;
  VectorXd nudot_offset;
  /// CoM rows moved from the hard constraints to a high-weight cost.
  bool com_relaxed = false;
};

/// QP over u = (tau, f_1..f_nc) with world-axes wrenches (force; moment
/// about the sole origin): hard task equalities, contact inequalities in
/// the sole frames, and the postural, torso, torque and unloading costs.
/// Throws InfeasibleError when the sole task rows are rank deficient.
WbcQp build_wbc_qp(const DynamicsData& data, const TaskAccelerations& targets, const ContactSpec& spec,
                   const WbcWeights& weights, const std::array<double, 2>& load_share);

struct WbcCommand {
  VectorXd tau;
  std::array<std::optional<Vector6d>, 2> wrench;  // world axes, by Side
  VectorXd nudot;
  double task_residual = 0.0;
  qp::Status status = qp::Status::IterLimit;
  int iterations = 0;
  bool com_relaxed = false;
};

/// Assembles and solves one tick. Throws InfeasibleError naming the active
/// contacts when the QP has no solution.
WbcCommand wbc_step(const rbd::RobotModel& model, const rbd::Configuration& q, const VectorXd& nu,
                    const TaskReferences& refs, const TaskGains& gains, const ContactSpec& spec,
                    const WbcWeights& weights, const std::array<bool, 2>& active_contacts,
                    const std::array<double, 2>& load_share, const FrameNames& frames = {});

/// `t, tau_0..tau_{n-1}, fl_fx..fl_mz, fr_fx..fr_mz, task_residual, qp_status`
std::string wbc_csv_header(int num_joints);
std::string wbc_csv_row(double t, const WbcCommand& cmd);

struct IkWeights {
  double com = 1e3;
  double torso = 1.0;
  double posture = 1e-2;
  double damping = 1e-8;
  int max_iterations = 8;
  double tolerance = 1e-11;
};

struct IkResult {
  rbd::Configuration q;
  VectorXd nu;  // average velocity over the step
  int iterations = 0;
  double feet_residual = 0.0;
};

/// Differential inverse kinematics toward the references at the end of the
/// step: sole poses as equality constraints, CoM, torso and posture as
/// weighted costs. The velocity QP is re-linearized until the sole error
/// falls below the tolerance; joints are clamped to the model limits.
IkResult ik_step(const rbd::RobotModel& model, const rbd::Configuration& q, const TaskReferences& refs,
                 double dt, const IkWeights& weights = {}, const FrameNames& frames = {});

}  // namespace walkstack::wbc
