// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkstack/wbc.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

namespace walkstack::wbc {

namespace {

constexpr double kConditionLimit = 1e8;
constexpr double kRelaxedComWeight = 1e6;

Matrix3d skew_part(const Matrix3d& A) { return 0.5 * (A - A.transpose()); }

Vector3d vee(const Matrix3d& S) { return Vector3d(S(2, 1), S(0, 2), S(1, 0)); }

// Rotation vector of R_des R' (world axes).
Vector3d rotation_error(const Matrix3d& R, const Matrix3d& R_des) {
  const Eigen::AngleAxisd aa(R_des * R.transpose());
  return aa.angle() * aa.axis();
}

double condition_number(const MatrixXd& A) {
  if (A.rows() == 0) return 1.0;
  const Eigen::JacobiSVD<MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

}  // namespace

Vector3d so3_error(const Matrix3d& R, const Matrix3d& R_des) { return vee(skew_part(R * R_des.transpose())); }

rbd::Configuration standing_configuration(const rbd::RobotModel& model, double knee, const FrameNames& frames) {
  std::vector<int> hips, knees, ankles;
  const auto names = model.joint_names();
  auto ends_with = [](const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  for (int i = 0; i < model.num_joints(); ++i) {
    const auto& n = names[static_cast<std::size_t>(i)];
    if (ends_with(n, "hip_pitch")) hips.push_back(i);
    else if (ends_with(n, "knee")) knees.push_back(i);
    else if (ends_with(n, "ankle_pitch")) ankles.push_back(i);
  }
  if (hips.size() != 2 || knees.size() != 2 || ankles.size() != 2)
    throw ModelError("standing configuration needs two hip_pitch, knee and ankle_pitch joints");

  rbd::Configuration q = rbd::Configuration::neutral(model);
  auto pose = [&](double d) {
    for (std::size_t k = 0; k < 2; ++k) {
      q.s(hips[k]) = -0.5 * knee + d;
      q.s(knees[k]) = knee;
      q.s(ankles[k]) = -0.5 * knee - d;
    }
    const Vector3d mid =
        0.5 * (rbd::frame_pose(model, q, frames.left_sole).p + rbd::frame_pose(model, q, frames.right_sole).p);
    return rbd::com_and_jacobian(model, q).p.x() - mid.x();
  };
  // Secant on the hip/ankle counter-rotation that keeps the soles flat.
  double a = 0.0, b = 0.05, fa = pose(a), fb = pose(b);
  for (int it = 0; it < 50 && std::abs(fb) > 1e-14 && fb != fa; ++it) {
    const double c = b - fb * (b - a) / (fb - fa);
    a = b;
    fa = fb;
    b = c;
    fb = pose(b);
  }
  pose(b);
  const Vector3d G = rbd::com_and_jacobian(model, q).p;
  const double z = rbd::frame_pose(model, q, frames.left_sole).p.z();
  q.p = Vector3d(-G.x(), -G.y(), -z);
  return q;
}

TaskReferences TaskReferences::from_state(const rbd::RobotModel& model, const rbd::Configuration& q,
                                          const FrameNames& frames) {
  TaskReferences r;
  r.com_position = rbd::com_and_jacobian(model, q).p;
  for (Side s : {Side::Left, Side::Right}) r.foot(s).pose = rbd::frame_pose(model, q, frames.sole(s));
  r.torso_orientation = rbd::frame_pose(model, q, frames.torso).R;
  r.posture = q.s;
  return r;
}

void TaskGains::validate() const {
  for (const PdGains& g : {com, foot_linear, foot_angular, torso, posture}) {
    if (!(g.kp >= 0.0) || !(g.kd >= 0.0)) throw ConfigError("task gains must be non-negative");
    if (g.kp > 0.0 && !(g.kd > 0.0)) throw ConfigError("task gains: K_d must be positive where K_p is");
  }
}

void ContactSpec::validate() const {
  if (!(lx > 0.0) || !(ly > 0.0)) throw ConfigError("contact spec: sole half-lengths must be positive");
  if (!(mu > 0.0)) throw ConfigError("contact spec: friction coefficient must be positive");
  if (!(f_min >= 0.0)) throw ConfigError("contact spec: f_min must be non-negative");
}

void WbcWeights::validate() const {
  if (!(torso >= 0.0) || !(unloading >= 0.0)) throw ConfigError("wbc weights must be non-negative");
  if (!(torque > 0.0)) throw ConfigError("wbc weights: torque weight must be positive");
}

ContactInequalities contact_inequalities(const ContactSpec& spec) {
  spec.validate();
  ContactInequalities ci;
  ci.C.setZero(11, 6);
  ci.b.setZero(11);
  const double mu = spec.mu, mz = spec.torsional();
  // f = (fx, fy, fz, mx, my, mz)
  ci.C.row(0) << 0, 0, -1, 0, 0, 0;
  ci.b(0) = -spec.f_min;
  ci.C.row(1) << 1, 0, -mu, 0, 0, 0;
  ci.C.row(2) << -1, 0, -mu, 0, 0, 0;
  ci.C.row(3) << 0, 1, -mu, 0, 0, 0;
  ci.C.row(4) << 0, -1, -mu, 0, 0, 0;
  ci.C.row(5) << 0, 0, -spec.lx, 0, 1, 0;
  ci.C.row(6) << 0, 0, -spec.lx, 0, -1, 0;
  ci.C.row(7) << 0, 0, -spec.ly, 1, 0, 0;
  ci.C.row(8) << 0, 0, -spec.ly, -1, 0, 0;
  ci.C.row(9) << 0, 0, -mz, 0, 0, 1;
  ci.C.row(10) << 0, 0, -mz, 0, 0, -1;
  return ci;
}

TaskAccelerations task_accelerations(const rbd::RobotModel& model, const rbd::Configuration& q, const VectorXd& nu,
                                     const TaskReferences& refs, const TaskGains& gains, const FrameNames& frames) {
  if (refs.posture.size() != model.num_joints()) throw DomainError("task_accelerations: posture has wrong size");
  TaskAccelerations t;
  t.upsilon.resize(15);
  const auto com = rbd::com_and_jacobian(model, q);
  const Vector3d vG = com.J * nu;
  t.upsilon.head<3>() = refs.com_acceleration + gains.com.kd * (refs.com_velocity - vG) +
                        gains.com.kp * (refs.com_position - com.p);
  for (Side s : {Side::Left, Side::Right}) {
    const auto& target = refs.foot(s);
    const rbd::Pose3 pose = rbd::frame_pose(model, q, frames.sole(s));
    const Vector6d v = rbd::frame_jacobian(model, q, frames.sole(s)) * nu;
    const Eigen::Index o = s == Side::Left ? 3 : 9;
    t.upsilon.segment<3>(o) = target.acceleration.head<3>() +
                              gains.foot_linear.kd * (target.velocity.head<3>() - v.head<3>()) +
                              gains.foot_linear.kp * (target.pose.p - pose.p);
    t.upsilon.segment<3>(o + 3) = target.acceleration.tail<3>() +
                                  gains.foot_angular.kd * (target.velocity.tail<3>() - v.tail<3>()) -
                                  gains.foot_angular.kp * so3_error(pose.R, target.pose.R);
  }
  const rbd::Pose3 torso = rbd::frame_pose(model, q, frames.torso);
  const Vector3d w_torso = rbd::frame_jacobian(model, q, frames.torso).bottomRows<3>() * nu;
  t.torso = -gains.torso.kd * w_torso - gains.torso.kp * so3_error(torso.R, refs.torso_orientation);
  t.posture = gains.posture.kp * (refs.posture - q.s) - gains.posture.kd * nu.tail(model.num_joints());
  return t;
}

DynamicsData dynamics_data(const rbd::RobotModel& model, const rbd::Configuration& q, const VectorXd& nu,
                           const std::array<bool, 2>& active, const FrameNames& frames) {
  DynamicsData d;
  d.M = rbd::mass_matrix(model, q);
  d.h = rbd::bias_forces(model, q, nu).h;
  d.B = rbd::selector(model);
  const int nv = model.nv();
  d.J_task.resize(15, nv);
  d.task_drift.resize(15);
  d.J_task.topRows<3>() = rbd::com_and_jacobian(model, q).J;
  d.task_drift.head<3>() = rbd::com_drift(model, q, nu);
  for (Side s : {Side::Left, Side::Right}) {
    const Eigen::Index o = s == Side::Left ? 3 : 9;
    const auto& f = frames.sole(s);
    d.J_task.middleRows(o, 6) = rbd::frame_jacobian(model, q, f);
    d.task_drift.segment<6>(o) = rbd::frame_drift(model, q, nu, f);
    if (active[static_cast<std::size_t>(s)]) {
      d.contacts.push_back(s);
      d.sole_rotation.push_back(rbd::frame_pose(model, q, f).R);
    }
  }
  d.J_torso = rbd::frame_jacobian(model, q, frames.torso).bottomRows<3>();
  d.torso_drift = rbd::frame_drift(model, q, nu, frames.torso).tail<3>();
  d.J_contact.resize(6 * static_cast<Eigen::Index>(d.contacts.size()), nv);
  for (std::size_t k = 0; k < d.contacts.size(); ++k)
    d.J_contact.middleRows(6 * static_cast<Eigen::Index>(k), 6) = d.J_task.middleRows(d.contacts[k] == Side::Left ? 3 : 9, 6);
  return d;
}

WbcQp build_wbc_qp(const DynamicsData& d, const TaskAccelerations& targets, const ContactSpec& spec,
                   const WbcWeights& w, const std::array<double, 2>& load_share) {
  w.validate();
  if (d.contacts.empty()) throw DomainError("build_wbc_qp: at least one contact is required");
  const auto nv = d.M.rows();
  const auto n = d.B.cols();
  const auto nc = static_cast<Eigen::Index>(d.contacts.size());
  const auto nu = n + 6 * nc;

  const Eigen::LLT<MatrixXd> llt(d.M);
  if (llt.info() != Eigen::Success) throw DomainError("build_wbc_qp: mass matrix is not positive definite");
  WbcQp out;
  out.nudot_map.resize(nv, nu);
  out.nudot_map.leftCols(n) = llt.solve(d.B);
  out.nudot_map.rightCols(6 * nc) = llt.solve(d.J_contact.transpose());
  out.nudot_offset = -llt.solve(d.h);

  const MatrixXd A_task = d.J_task * out.nudot_map;
  const VectorXd b_task = targets.upsilon - d.task_drift - d.J_task * out.nudot_offset;

  MatrixXd H = MatrixXd::Zero(nu, nu);
  VectorXd g = VectorXd::Zero(nu);
  MatrixXd A_eq = A_task;
  VectorXd b_eq = b_task;
  if (condition_number(A_task) > kConditionLimit) {
    const MatrixXd feet = A_task.bottomRows(12);
    if (condition_number(feet) > kConditionLimit) {
      // Name the rows that are (numerically) combinations of earlier ones.
      std::string rows;
      for (Eigen::Index r = 1; r <= 12; ++r) {
        if (condition_number(feet.topRows(r)) > kConditionLimit) {
          rows += (rows.empty() ? "" : ", ") + std::string(r <= 6 ? "left " : "right ") +
                  std::to_string((r - 1) % 6);
        }
      }
      throw InfeasibleError("wbc: sole task rows are rank deficient (dependent rows: " + rows + ")");
    }
    out.com_relaxed = true;
    A_eq = feet;
    b_eq = b_task.tail(12);
    const MatrixXd Ac = A_task.topRows(3);
    H += kRelaxedComWeight * Ac.transpose() * Ac;
    g -= kRelaxedComWeight * Ac.transpose() * b_task.head(3);
  }

  // Posture: 1/2 |sdd(u) - sdd*|^2.
  const MatrixXd P = out.nudot_map.bottomRows(n);
  const VectorXd p0 = out.nudot_offset.tail(n) - targets.posture;
  H += P.transpose() * P;
  g += P.transpose() * p0;
  // Torso angular acceleration.
  const MatrixXd T = d.J_torso * out.nudot_map;
  const VectorXd t0 = d.J_torso * out.nudot_offset + d.torso_drift - targets.torso;
  H += w.torso * T.transpose() * T;
  g += w.torso * T.transpose() * t0;
  H.topLeftCorner(n, n) += w.torque * MatrixXd::Identity(n, n);
  for (Eigen::Index k = 0; k < nc; ++k) {
    const Side s = d.contacts[static_cast<std::size_t>(k)];
    const double share_other = load_share[static_cast<std::size_t>(other(s))];
    H.block(n + 6 * k, n + 6 * k, 6, 6) += w.unloading * share_other * MatrixXd::Identity(6, 6);
  }
  H = 0.5 * (H + H.transpose());

  const ContactInequalities ci = contact_inequalities(spec);
  const auto rows = ci.C.rows();
  out.problem.H = H;
  out.problem.g = g;
  out.problem.A_eq = A_eq;
  out.problem.b_eq = b_eq;
  out.problem.A_in = MatrixXd::Zero(rows * nc, nu);
  out.problem.b_in.resize(rows * nc);
  for (Eigen::Index k = 0; k < nc; ++k) {
    const Matrix3d Rt = d.sole_rotation[static_cast<std::size_t>(k)].transpose();
    out.problem.A_in.block(rows * k, n + 6 * k, rows, 3) = ci.C.leftCols<3>() * Rt;
    out.problem.A_in.block(rows * k, n + 6 * k + 3, rows, 3) = ci.C.rightCols<3>() * Rt;
    out.problem.b_in.segment(rows * k, rows) = ci.b;
  }
  return out;
}

WbcCommand wbc_step(const rbd::RobotModel& model, const rbd::Configuration& q, const VectorXd& nu,
                    const TaskReferences& refs, const TaskGains& gains, const ContactSpec& spec,
                    const WbcWeights& weights, const std::array<bool, 2>& active,
                    const std::array<double, 2>& load_share, const FrameNames& frames) {
  gains.validate();
  const DynamicsData d = dynamics_data(model, q, nu, active, frames);
  const TaskAccelerations targets = task_accelerations(model, q, nu, refs, gains, frames);
  const WbcQp w = build_wbc_qp(d, targets, spec, weights, load_share);
  const qp::Solution sol = qp::solve(w.problem);
  auto contact_names = [&] {
    std::string s;
    for (Side c : d.contacts) s += (s.empty() ? "" : "+") + std::string(to_string(c));
    return s;
  };
  if (sol.status != qp::Status::Optimal)
    throw InfeasibleError("wbc: QP " + std::string(qp::to_string(sol.status)) + " with contacts " + contact_names());

  WbcCommand cmd;
  const auto n = model.num_joints();
  cmd.tau = sol.x.head(n);
  for (std::size_t k = 0; k < d.contacts.size(); ++k)
    cmd.wrench[static_cast<std::size_t>(d.contacts[k])] = sol.x.segment<6>(n + 6 * static_cast<Eigen::Index>(k));
  cmd.nudot = w.nudot_map * sol.x + w.nudot_offset;
  cmd.task_residual = (d.J_task * cmd.nudot + d.task_drift - targets.upsilon).cwiseAbs().maxCoeff();
  cmd.status = sol.status;
  cmd.iterations = sol.iterations;
  cmd.com_relaxed = w.com_relaxed;
  return cmd;
}

std::string wbc_csv_header(int n) {
  std::ostringstream os;
  os << "t";
  for (int i = 0; i < n; ++i) os << ",tau_" << i;
  for (const char* f : {"fl", "fr"})
    for (const char* c : {"fx", "fy", "fz", "mx", "my", "mz"}) os << ',' << f << '_' << c;
  os << ",task_residual,qp_status";
  return os.str();
}

std::string wbc_csv_row(double t, const WbcCommand& cmd) {
  std::ostringstream os;
  os.precision(10);
  os << t;
  for (Eigen::Index i = 0; i < cmd.tau.size(); ++i) os << ',' << cmd.tau(i);
  for (const auto& w : cmd.wrench)
    for (int c = 0; c < 6; ++c) os << ',' << (w ? (*w)(c) : 0.0);
  os << ',' << cmd.task_residual << ',' << qp::to_string(cmd.status);
  return os.str();
}

IkResult ik_step(const rbd::RobotModel& model, const rbd::Configuration& q0, const TaskReferences& refs, double dt,
                 const IkWeights& iw, const FrameNames& frames) {
  if (!(dt > 0.0)) throw DomainError("ik_step: dt must be positive");
  if (refs.posture.size() != model.num_joints()) throw DomainError("ik_step: posture has wrong size");
  const int nv = model.nv();
  const int n = model.num_joints();
  IkResult r;
  r.q = q0;
  for (int it = 0; it < iw.max_iterations; ++it) {
    qp::Problem p = qp::Problem::zeros(nv, 12, 0);
    for (Side s : {Side::Left, Side::Right}) {
      const Eigen::Index o = s == Side::Left ? 0 : 6;
      const rbd::Pose3 pose = rbd::frame_pose(model, r.q, frames.sole(s));
      p.A_eq.middleRows(o, 6) = rbd::frame_jacobian(model, r.q, frames.sole(s));
      p.b_eq.segment<3>(o) = refs.foot(s).pose.p - pose.p;
      p.b_eq.segment<3>(o + 3) = rotation_error(pose.R, refs.foot(s).pose.R);
    }
    r.feet_residual = p.b_eq.cwiseAbs().maxCoeff();
    auto add_cost = [&](const MatrixXd& J, const VectorXd& e, double weight) {
      p.H += weight * J.transpose() * J;
      p.g -= weight * J.transpose() * e;
    };
    const auto com = rbd::com_and_jacobian(model, r.q);
    add_cost(com.J, refs.com_position - com.p, iw.com);
    const rbd::Pose3 torso = rbd::frame_pose(model, r.q, frames.torso);
    add_cost(rbd::frame_jacobian(model, r.q, frames.torso).bottomRows<3>(),
             rotation_error(torso.R, refs.torso_orientation), iw.torso);
    MatrixXd S = MatrixXd::Zero(n, nv);
    S.rightCols(n).setIdentity();
    add_cost(S, refs.posture - r.q.s, iw.posture);
    p.H += iw.damping * MatrixXd::Identity(nv, nv);
    p.H = 0.5 * (p.H + p.H.transpose());

    qp::Options opt;
    opt.regularization = 0.0;
    const qp::Solution sol = qp::solve(p, opt);
    if (sol.status != qp::Status::Optimal) throw InfeasibleError("ik_step: sole tasks cannot be met simultaneously");
    r.iterations = it + 1;
    r.q = rbd::integrate(r.q, sol.x, 1.0);
    if (sol.x.cwiseAbs().maxCoeff() <= iw.tolerance) break;
  }
  const VectorXd lo = model.lower_limits(), hi = model.upper_limits();
  r.q.s = r.q.s.cwiseMax(lo).cwiseMin(hi);
  r.feet_residual = 0.0;
  for (Side s : {Side::Left, Side::Right}) {
    const rbd::Pose3 pose = rbd::frame_pose(model, r.q, frames.sole(s));
    r.feet_residual = std::max({r.feet_residual, (refs.foot(s).pose.p - pose.p).cwiseAbs().maxCoeff(),
                                rotation_error(pose.R, refs.foot(s).pose.R).cwiseAbs().maxCoeff()});
  }
  r.nu.resize(nv);
  r.nu.head<3>() = (r.q.p - q0.p) / dt;
  r.nu.segment<3>(3) = rotation_error(q0.R, r.q.R) / dt;
  r.nu.tail(n) = (r.q.s - q0.s) / dt;
  return r;
}

}  // namespace walkstack::wbc
