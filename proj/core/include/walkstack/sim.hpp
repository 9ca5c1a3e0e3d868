// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "walkstack/common.hpp"
#include "walkstack/rbd.hpp"
#include "walkstack/wbc.hpp"

namespace walkstack::sim {

using Eigen::VectorXd;
using rbd::Vector6d;

enum class Mode { Position, Torque };

std::string_view to_string(Mode m);
/// "position" or "torque"; throws ConfigError otherwise.
Mode mode_from_string(std::string_view s);

struct SimConfig {
  Mode mode = Mode::Position;
  double dt_sim = 1e-3;
  double dt_ctrl = 0.01;
  /// Baumgarte gains on the contact constraint: -2 alpha J nu - beta^2 c(q).
  double alpha = 50.0;
  double beta = 70.0;
  /// A contact whose plant normal force stays negative longer than this
  /// raises a contact-break warning.
  double break_warning_time = 0.02;

  void validate() const;
  /// dt_ctrl / dt_sim.
  int substeps() const;
};

struct SimState {
  rbd::Configuration q;
  VectorXd nu;
  double t = 0.0;
  /// World pose each active sole is held at, by Side.
  std::array<std::optional<rbd::Pose3>, 2> contacts;
  /// Plant contact wrenches of the last torque step (world axes).
  std::array<std::optional<Vector6d>, 2> contact_wrench;
  std::array<double, 2> negative_normal_time{0.0, 0.0};
  std::vector<std::string> warnings;

  bool in_contact(Side s) const { return contacts[static_cast<std::size_t>(s)].has_value(); }
};

/// State at rest with the soles that are on the ground registered as
/// contacts at their current poses.
SimState make_state(const rbd::RobotModel& model, const rbd::Configuration& q, const std::array<bool, 2>& contacts,
                    double t = 0.0, const wbc::FrameNames& frames = {});

/// Ideal position control: joints jump to s_ref and the floating base is
/// recomputed so that the anchor sole keeps its world pose. nu is the finite
/// difference over dt.
SimState step_position(const rbd::RobotModel& model, const SimState& state, const VectorXd& s_ref, Side anchor,
                       double dt, const wbc::FrameNames& frames = {});

/// Constrained forward dynamics over one dt_sim with the active contacts
/// held bilaterally. nu is advanced first; q then moves with the mean of the
/// old and new velocities through the exponential map. Throws
/// InfeasibleError naming the contacts when the contact Jacobian loses rank.
SimState step_torque(const rbd::RobotModel& model, const SimState& state, const VectorXd& tau,
                     const SimConfig& config, const wbc::FrameNames& frames = {});

/// Inelastic touchdown of `side`: the sole is registered at its current
/// planar pose on z = 0 and nu is projected onto J nu = 0 for every active
/// contact in the metric M. Throws DomainError when the sole is farther than
/// `tolerance` from the ground.
SimState touchdown_projection(const rbd::RobotModel& model, const SimState& state, Side side,
                              const wbc::FrameNames& frames = {}, double tolerance = 0.01);

/// Removes `side` from the contact set.
SimState liftoff(const SimState& state, Side side);

/// Contact pose error stacked like the contact Jacobian: (p - p0;
/// so3_error(R, R0)) per active contact.
VectorXd contact_error(const rbd::RobotModel& model, const SimState& state, const wbc::FrameNames& frames = {});

/// Planar pose on the ground: yaw of the sole x axis, z = 0.
rbd::Pose3 ground_pose(const rbd::Pose3& sole);

}  // namespace walkstack::sim
