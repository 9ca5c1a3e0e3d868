// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkstack/sim.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace walkstack::sim {

namespace {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;

std::size_t idx(Side s) { return static_cast<std::size_t>(s); }

std::vector<Side> active_sides(const SimState& s) {
  std::vector<Side> out;
  for (Side side : {Side::Left, Side::Right})
    if (s.in_contact(side)) out.push_back(side);
  return out;
}

MatrixXd stacked_jacobian(const rbd::RobotModel& model, const rbd::Configuration& q, const std::vector<Side>& sides,
                          const wbc::FrameNames& frames) {
  MatrixXd J(6 * static_cast<Eigen::Index>(sides.size()), model.nv());
  for (std::size_t k = 0; k < sides.size(); ++k)
    J.middleRows(6 * static_cast<Eigen::Index>(k), 6) = rbd::frame_jacobian(model, q, frames.sole(sides[k]));
  return J;
}

std::string contact_list(const std::vector<Side>& sides) {
  std::string out;
  for (Side s : sides) out += (out.empty() ? "" : ", ") + std::string(to_string(s));
  return out.empty() ? "none" : out;
}

Vector3d log_so3(const Matrix3d& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

}  // namespace

std::string_view to_string(Mode m) { return m == Mode::Position ? "position" : "torque"; }

Mode mode_from_string(std::string_view s) {
  if (s == "position") return Mode::Position;
  if (s == "torque") return Mode::Torque;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected position or torque)");
}

void SimConfig::validate() const {
  if (!(dt_sim > 0.0) || !(dt_ctrl > 0.0)) throw ConfigError("sim: time steps must be positive");
  if (dt_sim > dt_ctrl) throw ConfigError("sim: dt_sim must not exceed dt_ctrl");
  const double ratio = dt_ctrl / dt_sim;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw ConfigError("sim: dt_ctrl must be an integer multiple of dt_sim");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("sim: Baumgarte gains must be non-negative");
  if (!(break_warning_time > 0.0)) throw ConfigError("sim: break_warning_time must be positive");
}

int SimConfig::substeps() const { return static_cast<int>(std::lround(dt_ctrl / dt_sim)); }

rbd::Pose3 ground_pose(const rbd::Pose3& sole) {
  const Vector3d x = sole.R.col(0);
  const double yaw = std::atan2(x.y(), x.x());
  return {Eigen::AngleAxisd(yaw, Vector3d::UnitZ()).toRotationMatrix(), Vector3d(sole.p.x(), sole.p.y(), 0.0)};
}

SimState make_state(const rbd::RobotModel& model, const rbd::Configuration& q, const std::array<bool, 2>& contacts,
                    double t, const wbc::FrameNames& frames) {
  rbd::check_configuration(model, q);
  SimState s;
  s.q = q;
  s.nu = VectorXd::Zero(model.nv());
  s.t = t;
  for (Side side : {Side::Left, Side::Right})
    if (contacts[idx(side)]) s.contacts[idx(side)] = rbd::frame_pose(model, q, frames.sole(side));
  return s;
}

SimState step_position(const rbd::RobotModel& model, const SimState& state, const VectorXd& s_ref, Side anchor,
                       double dt, const wbc::FrameNames& frames) {
  if (s_ref.size() != model.num_joints()) throw DomainError("step_position: joint reference size mismatch");
  if (!(dt > 0.0)) throw DomainError("step_position: dt must be positive");
  const rbd::Pose3 world_anchor = rbd::frame_pose(model, state.q, frames.sole(anchor));

  // Anchor pose relative to the base at the new joint positions.
  rbd::Configuration local = rbd::Configuration::neutral(model);
  local.s = s_ref;
  const rbd::Pose3 base_to_anchor = rbd::frame_pose(model, local, frames.sole(anchor));
  const rbd::Pose3 base = world_anchor * base_to_anchor.inverse();

  SimState next = state;
  next.q.s = s_ref;
  next.q.R = base.R;
  next.q.p = base.p;
  next.nu.resize(model.nv());
  next.nu.head<3>() = (next.q.p - state.q.p) / dt;
  next.nu.segment<3>(3) = log_so3(next.q.R * state.q.R.transpose()) / dt;
  next.nu.tail(model.num_joints()) = (s_ref - state.q.s) / dt;
  next.t = state.t + dt;
  return next;
}

VectorXd contact_error(const rbd::RobotModel& model, const SimState& state, const wbc::FrameNames& frames) {
  const auto sides = active_sides(state);
  VectorXd c(6 * static_cast<Eigen::Index>(sides.size()));
  for (std::size_t k = 0; k < sides.size(); ++k) {
    const rbd::Pose3 now = rbd::frame_pose(model, state.q, frames.sole(sides[k]));
    const rbd::Pose3& ref = *state.contacts[idx(sides[k])];
    c.segment<3>(6 * static_cast<Eigen::Index>(k)) = now.p - ref.p;
    c.segment<3>(6 * static_cast<Eigen::Index>(k) + 3) = wbc::so3_error(now.R, ref.R);
  }
  return c;
}

SimState step_torque(const rbd::RobotModel& model, const SimState& state, const VectorXd& tau,
                     const SimConfig& config, const wbc::FrameNames& frames) {
  if (tau.size() != model.num_joints()) throw DomainError("step_torque: torque size mismatch");
  const double dt = config.dt_sim;
  const auto sides = active_sides(state);
  const MatrixXd M = rbd::mass_matrix(model, state.q);
  const VectorXd h = rbd::bias_forces(model, state.q, state.nu).h;
  VectorXd rhs = -h;
  rhs.tail(model.num_joints()) += tau;
  const Eigen::LLT<MatrixXd> llt(M);

  VectorXd nudot;
  VectorXd f;
  if (sides.empty()) {
    nudot = llt.solve(rhs);
  } else {
    const MatrixXd J = stacked_jacobian(model, state.q, sides, frames);
    VectorXd drift(J.rows());
    for (std::size_t k = 0; k < sides.size(); ++k)
      drift.segment<6>(6 * static_cast<Eigen::Index>(k)) =
          rbd::frame_drift(model, state.q, state.nu, frames.sole(sides[k]));
    const VectorXd c = contact_error(model, state, frames);
    const VectorXd target = -drift - 2.0 * config.alpha * (J * state.nu) - config.beta * config.beta * c;

    // Schur complement of the saddle system [[M, -J'], [J, 0]].
    const MatrixXd MinvJt = llt.solve(J.transpose());
    const VectorXd free_acc = llt.solve(rhs);
    const MatrixXd S = J * MinvJt;
    const Eigen::JacobiSVD<MatrixXd> svd(S);
    const auto& sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > 1e-12 * sv(0))) {
      std::ostringstream os;
      os << "singular contact Jacobian at t=" << state.t << " (contacts: " << contact_list(sides)
         << ", condition " << sv(0) / sv(sv.size() - 1) << ")";
      throw InfeasibleError(os.str());
    }
    f = S.ldlt().solve(target - J * free_acc);
    nudot = free_acc + MinvJt * f;
  }

  SimState next = state;
  next.nu = state.nu + dt * nudot;
  next.q = rbd::integrate(state.q, 0.5 * (state.nu + next.nu), dt);
  next.t = state.t + dt;
  next.contact_wrench = {};
  for (std::size_t k = 0; k < sides.size(); ++k) {
    const std::size_t i = idx(sides[k]);
    next.contact_wrench[i] = f.segment<6>(6 * static_cast<Eigen::Index>(k));
    if ((*next.contact_wrench[i])(2) < 0.0) {
      const double before = next.negative_normal_time[i];
      next.negative_normal_time[i] += dt;
      if (before <= config.break_warning_time && next.negative_normal_time[i] > config.break_warning_time) {
        std::ostringstream os;
        os << "t=" << next.t << ": contact break on " << to_string(sides[k]) << " sole (normal force negative for "
           << next.negative_normal_time[i] << " s)";
        next.warnings.push_back(os.str());
      }
    } else {
      next.negative_normal_time[i] = 0.0;
    }
  }
  return next;
}

SimState touchdown_projection(const rbd::RobotModel& model, const SimState& state, Side side,
                              const wbc::FrameNames& frames, double tolerance) {
  const rbd::Pose3 sole = rbd::frame_pose(model, state.q, frames.sole(side));
  if (std::abs(sole.p.z()) > tolerance) {
    std::ostringstream os;
    os << "touchdown of " << to_string(side) << " sole at height " << sole.p.z() << " m";
    throw DomainError(os.str());
  }
  SimState next = state;
  next.contacts[idx(side)] = ground_pose(sole);
  next.negative_normal_time[idx(side)] = 0.0;
  const auto sides = active_sides(next);
  const MatrixXd J = stacked_jacobian(model, next.q, sides, frames);
  const Eigen::LLT<MatrixXd> llt(rbd::mass_matrix(model, next.q));
  const MatrixXd MinvJt = llt.solve(J.transpose());
  // nu+ = nu - M^-1 J' (J M^-1 J')^-1 J nu.
  const VectorXd lambda = (J * MinvJt).ldlt().solve(J * state.nu);
  next.nu = state.nu - MinvJt * lambda;
  return next;
}

SimState liftoff(const SimState& state, Side side) {
  SimState next = state;
  next.contacts[idx(side)].reset();
  next.contact_wrench[idx(side)].reset();
  next.negative_normal_time[idx(side)] = 0.0;
  return next;
}

}  // namespace walkstack::sim
