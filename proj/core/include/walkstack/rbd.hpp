// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "walkstack/common.hpp"

namespace walkstack::rbd {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;
using Matrix6Xd = Eigen::Matrix<double, 6, Eigen::Dynamic>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

inline const Vector3d kDefaultGravity{0.0, 0.0, -9.81};

enum class JointType { Fixed, Revolute, Prismatic };

std::string_view to_string(JointType t);

struct Pose3 {
  Matrix3d R = Matrix3d::Identity();
  Vector3d p = Vector3d::Zero();

  Pose3 operator*(const Pose3& o) const { return {R * o.R, p + R * o.p}; }
  Vector3d operator*(const Vector3d& x) const { return p + R * x; }
  Pose3 inverse() const { return {R.transpose(), -(R.transpose() * p)}; }
};

struct Link {
  std::string name;
  std::string parent;  // empty for the root
  std::string joint_name;
  JointType joint = JointType::Fixed;
  Vector3d axis = Vector3d::UnitZ();
  /// Joint frame in the parent link frame (identity for the root).
  Pose3 origin;
  double mass = 0.0;
  Vector3d com = Vector3d::Zero();
  /// Rotational inertia about the CoM, link axes.
  Matrix3d inertia = Matrix3d::Zero();
  double lower = -1e9;
  double upper = 1e9;
};

struct Frame {
  std::string name;
  std::string link;
  Pose3 offset;
};

/// Floating-base kinematic tree. Links are stored parents-first (depth
/// first, children visited by name), which fixes the joint ordering
/// independently of the declaration order.
class RobotModel {
 public:
  /// Validates and sorts; throws ModelError naming the offending link.
  RobotModel(std::string name, std::vector<Link> links, std::vector<Frame> frames);

  const std::string& name() const { return name_; }
  int num_joints() const { return n_; }
  int nv() const { return n_ + 6; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<int>& parents() const { return parent_; }
  /// Velocity index of the link's joint (6 + joint index), -1 when fixed.
  const std::vector<int>& dof() const { return dof_; }
  const std::vector<Frame>& frames() const { return frames_; }
  int link_index(std::string_view name) const;
  int frame_index(std::string_view name) const;
  bool has_frame(std::string_view name) const;
  const Frame& frame(int index) const { return frames_[static_cast<std::size_t>(index)]; }
  int frame_link(int index) const { return frame_link_[static_cast<std::size_t>(index)]; }
  double total_mass() const { return total_mass_; }
  std::vector<std::string> joint_names() const;
  VectorXd lower_limits() const;
  VectorXd upper_limits() const;

 private:
  std::string name_;
  std::vector<Link> links_;
  std::vector<int> parent_;
  std::vector<int> dof_;
  std::vector<Frame> frames_;
  std::vector<int> frame_link_;
  int n_ = 0;
  double total_mass_ = 0.0;
};

/// JSON document with "format": "walkstack-model", "version": 1.
RobotModel load_model(std::istream& is);
RobotModel load_model_file(const std::string& path);
/// Path of a model shipped with the library (e.g. "biped12.json").
std::string bundled_model_path(const std::string& file);

struct Configuration {
  Vector3d p = Vector3d::Zero();
  Matrix3d R = Matrix3d::Identity();
  VectorXd s;

  static Configuration neutral(const RobotModel& model);
};

/// Throws DomainError unless R is a rotation (to 1e-10) and sizes match.
void check_configuration(const RobotModel& model, const Configuration& q);

/// Rodrigues formula.
Matrix3d so3_exp(const Vector3d& w);

/// q (+) nu dt: base orientation advanced by exp(omega dt) in world axes.
Configuration integrate(const Configuration& q, const VectorXd& nu, double dt);

struct Kinematics {
  std::vector<Pose3> links;
  std::vector<Pose3> frames;
};

Kinematics forward_kinematics(const RobotModel& model, const Configuration& q);
Pose3 frame_pose(const RobotModel& model, const Configuration& q, std::string_view frame);

/// Maps nu onto the frame twist (linear velocity of the frame origin;
/// angular velocity), both in world axes.
Matrix6Xd frame_jacobian(const RobotModel& model, const Configuration& q, std::string_view frame);

struct ComTerms {
  Vector3d p = Vector3d::Zero();
  Eigen::Matrix3Xd J;
};

ComTerms com_and_jacobian(const RobotModel& model, const Configuration& q);

/// dJ_G/dt nu.
Vector3d com_drift(const RobotModel& model, const Configuration& q, const VectorXd& nu);

/// Composite-rigid-body algorithm.
MatrixXd mass_matrix(const RobotModel& model, const Configuration& q);

/// Recursive Newton-Euler: M nudot + h under the convention
/// M nudot + h = B tau + J' f.
VectorXd inverse_dynamics(const RobotModel& model, const Configuration& q, const VectorXd& nu,
                          const VectorXd& nudot, const Vector3d& gravity = kDefaultGravity);

struct BiasForces {
  VectorXd h;  // C(q, nu) nu + G(q)
  VectorXd G;
};

BiasForces bias_forces(const RobotModel& model, const Configuration& q, const VectorXd& nu,
                       const Vector3d& gravity = kDefaultGravity);

/// (0_{n x 6}, I_n)'.
MatrixXd selector(const RobotModel& model);

struct ContactStack {
  std::vector<std::string> frames;
  MatrixXd J;        // 6 n_c x (n + 6), blocks in declaration order
  VectorXd Jdot_nu;  // 6 n_c

  MatrixXd J_base() const { return J.leftCols(6); }
  MatrixXd J_joints() const { return J.rightCols(J.cols() - 6); }
};

ContactStack contact_stack(const RobotModel& model, const Configuration& q, const VectorXd& nu,
                           const std::vector<std::string>& frames);

/// dJ/dt nu of one frame (linear; angular).
Vector6d frame_drift(const RobotModel& model, const Configuration& q, const VectorXd& nu, std::string_view frame);

/// 1/2 nu' M nu.
double kinetic_energy(const RobotModel& model, const Configuration& q, const VectorXd& nu);
/// -m g . p_G.
double potential_energy(const RobotModel& model, const Configuration& q, const Vector3d& gravity = kDefaultGravity);

}  // namespace walkstack::rbd
