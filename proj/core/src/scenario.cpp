// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkstack/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace walkstack::sim {

namespace {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Clock = std::chrono::steady_clock;

constexpr double kGravity = 9.81;

std::size_t idx(Side s) { return static_cast<std::size_t>(s); }

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

Matrix3d rotz(double yaw) { return Eigen::AngleAxisd(yaw, Vector3d::UnitZ()).toRotationMatrix(); }

double yaw_of(const Matrix3d& R) { return std::atan2(R(1, 0), R(0, 0)); }

FootSample sample_of(const rbd::Pose3& p) { return {p.p, yaw_of(p.R)}; }

planner::FeetPoses planar_feet(const rbd::RobotModel& model, const rbd::Configuration& q) {
  const wbc::FrameNames frames;
  planner::FeetPoses f;
  for (Side s : {Side::Left, Side::Right}) {
    const rbd::Pose3 p = rbd::frame_pose(model, q, frames.sole(s));
    f[s] = {p.p.head<2>(), yaw_of(p.R)};
  }
  return f;
}

[[noreturn]] void rethrow_as(const std::exception& e, long tick, double t, const std::string& layer) {
  std::ostringstream os;
  os << layer << " failed at tick " << tick << " (t=" << t << "): " << e.what();
  throw ScenarioError(os.str(), tick, layer);
}

}  // namespace

std::string_view to_string(ReferenceKind k) {
  switch (k) {
    case ReferenceKind::Stand: return "stand";
    case ReferenceKind::Ramp: return "ramp";
    case ReferenceKind::File: return "file";
    case ReferenceKind::FixedSteps: return "fixed_steps";
    case ReferenceKind::Live: return "live";
  }
  return "stand";
}

wbc::ContactSpec ScenarioConfig::contact() const {
  wbc::ContactSpec c;
  c.lx = 0.5 * foot.length;
  c.ly = 0.5 * foot.width;
  c.mu = mu;
  c.f_min = f_min;
  c.mu_z = mu_z;
  return c;
}

void ScenarioConfig::validate() const {
  sim.validate();
  planner.validate();
  mpc.validate();
  gains.validate();
  weights.validate();
  contact().validate();
  if (!(duration > 0.0)) throw ConfigError("duration must be positive");
  if (!(lead_in >= 0.0)) throw ConfigError("lead_in must be non-negative");
  if (!(knee > 0.0 && knee < 2.3)) throw ConfigError("stance.knee must lie in (0, 2.3)");
  if (!(foot.length > 0.0 && foot.width > 0.0)) throw ConfigError("foot dimensions must be positive");
  if (!(joystick.forward > 0.0 && joystick.lateral > 0.0)) throw ConfigError("joystick scales must be positive");
  if (ik.max_iterations < 1) throw ConfigError("ik.max_iterations must be at least 1");
  const auto& r = reference;
  switch (r.kind) {
    case ReferenceKind::Ramp:
      if (!(r.end >= r.start)) throw ConfigError("reference.end must not precede reference.start");
      break;
    case ReferenceKind::File:
      if (r.path.empty()) throw ConfigError("reference.path is required for a file reference");
      break;
    case ReferenceKind::FixedSteps:
      if (!(r.step_time > 0.0) || r.steps < 1) throw ConfigError("reference: step_time and steps must be positive");
      if (!(std::abs(r.step_length) <= 2.0 * planner.constraints.d_max))
        throw ConfigError("reference.step_length exceeds the reachable step");
      break;
    default:
      break;
  }
}

std::string resolve_model_path(const std::string& model) {
  namespace fs = std::filesystem;
  if (fs::exists(model)) return model;
  return rbd::bundled_model_path(model);
}

planner::FootstepPlan fixed_step_plan(const ReferenceConfig& ref, const planner::FeetPoses& feet, double t0) {
  planner::FootstepPlan plan;
  plan.t0 = t0;
  plan.t_prev = t0;
  plan.standing_start = true;
  plan.initial = feet;
  const Pose2 mid = planner::feet_midpose(feet);
  const Vector2d forward = rot2(mid.yaw) * Vector2d::UnitX();
  planner::FeetPoses current = feet;
  Side swing = Side::Left;
  double lead = 0.0;  // advance of the front foot along the heading
  for (int k = 1; k <= ref.steps + 1; ++k) {
    // The extra final step brings the trailing foot level with the leader.
    const double target = k <= ref.steps ? static_cast<double>(k) * ref.step_length : lead;
    planner::Footstep fs;
    fs.side = swing;
    fs.theta = current[swing].yaw;
    fs.position = feet[swing].position + target * forward;
    fs.impact_time = t0 + static_cast<double>(k) * ref.step_time;
    plan.steps.push_back(fs);
    current[swing] = fs.pose();
    lead = target;
    swing = other(swing);
  }
  return plan;
}

std::optional<Vector2d> zmp_from_wrenches(const std::vector<std::pair<Vector3d, rbd::Vector6d>>& wrenches) {
  Vector3d f = Vector3d::Zero(), n = Vector3d::Zero();
  for (const auto& [p, w] : wrenches) {
    f += w.head<3>();
    n += w.tail<3>() + p.cross(w.head<3>());
  }
  if (!(f.z() > 1e-9)) return std::nullopt;
  return Vector2d(-n.y() / f.z(), n.x() / f.z());
}

struct Scenario::Logs {
  std::filesystem::path dir;
  std::ofstream planner, mpc, wbc, state;
};

Scenario::Scenario(ScenarioConfig config)
    : config_(std::move(config)), model_(rbd::load_model_file(resolve_model_path(config_.model))) {
  config_.validate();
  initialize();
}

Scenario::~Scenario() = default;

void Scenario::initialize() {
  standing_ = wbc::standing_configuration(model_, config_.knee);
  const Vector3d com = rbd::com_and_jacobian(model_, standing_).p;
  com_height_ = com.z();
  com_start_ = com;
  state_ = make_state(model_, standing_, {true, true}, -config_.lead_in);
  mode_ = config_.sim.mode;
  t_ = -config_.lead_in;
  tick_ = 0;
  anchor_ = Side::Left;
  paused_ = false;
  joystick_ = Vector2d::Zero();
  joystick_changed_ = false;
  merges_.clear();
  history_size_ = 0;
  zmp_sq_ = mpc_ms_ = wbc_ms_ = ik_ms_ = 0.0;
  wbc_ticks_ = ik_ticks_ = 0;
  stats_ = ScenarioStats{};
  stats_.com_height_min = stats_.com_height_max = com_height_;

  const planner::FeetPoses feet = planar_feet(model_, standing_);
  const Pose2 mid = planner::feet_midpose(feet);
  const Vector2d f0 = unicycle::control_point_position({mid.position, mid.yaw}, config_.planner.control_point);
  const auto& ref = config_.reference;
  switch (ref.kind) {
    case ReferenceKind::Ramp:
      reference_ = unicycle::ReferenceSignal::ramp(f0, ref.velocity, ref.start, ref.end);
      break;
    case ReferenceKind::File:
      reference_ = unicycle::ReferenceSignal::load_csv(ref.path);
      break;
    default:
      reference_ = unicycle::ReferenceSignal::constant(f0, 0.0);
      break;
  }
  planner::FootstepPlan plan;
  try {
    if (ref.kind == ReferenceKind::FixedSteps) {
      plan = fixed_step_plan(ref, feet, 0.0);
      const auto issues = planner::audit_steps(feet, plan.t_prev, plan.steps, config_.planner.constraints);
      if (!issues.empty()) throw DomainError("fixed steps violate the step constraints: " + issues.front());
    } else {
      plan = planner::plan_walk(config_.planner, reference_, feet, 0.0);
    }
    gait_ = std::make_shared<planner::GaitReference>(planner::make_gait(plan, config_.planner));
  } catch (const Error& e) {
    rethrow_as(e, 0, 0.0, "planner");
  }
  footsteps_ = plan.steps;
  initial_plan_ = plan;

  mpc_ = std::make_unique<mpc::MpcController>(config_.mpc, mpc::TableCartModel(com_height_));
  chi_ = mpc::Chi::Zero();
  chi_.head<2>() = com.head<2>();

  record_ = TickRecord{};
  record_.t = t_;
  record_.mode = mode_;
  record_.com_desired = record_.com_measured = com;

  logs_.reset();
  if (!config_.output.empty()) {
    logs_ = std::make_unique<Logs>();
    logs_->dir = config_.output;
    std::filesystem::create_directories(logs_->dir);
    logs_->planner.open(logs_->dir / "planner.csv");
    logs_->mpc.open(logs_->dir / "mpc.csv");
    logs_->state.open(logs_->dir / "state.csv");
    for (auto* os : {&logs_->planner, &logs_->mpc, &logs_->state}) {
      if (!*os) throw Error("cannot write logs to " + logs_->dir.string());
      *os << std::setprecision(12);
    }
    logs_->planner << "t,phase_l,phase_r,lx,ly,lz,lyaw,rx,ry,rz,ryaw,zmpx,zmpy,Fl,Fr\n";
    logs_->mpc << "t,com_x,com_y,comd_x,comd_y,comdd_x,comdd_y,u_x,u_y,zmp_ref_x,zmp_ref_y,zmp_pred_x,zmp_pred_y,"
                  "qp_iters,qp_status\n";
    logs_->state << "t,com_x,com_y,com_z,com_ref_x,com_ref_y,com_ref_z,l_x,l_y,l_z,l_yaw,r_x,r_y,r_z,r_yaw,"
                    "l_ref_x,l_ref_y,l_ref_z,l_ref_yaw,r_ref_x,r_ref_y,r_ref_z,r_ref_yaw,zmp_x,zmp_y,"
                    "contact_l,contact_r\n";
    if (mode_ == Mode::Torque) {
      logs_->wbc.open(logs_->dir / "wbc.csv");
      logs_->wbc << wbc::wbc_csv_header(model_.num_joints()) << '\n';
    }
  }
}

void Scenario::reset() { initialize(); }

void Scenario::set_joystick(double vx, double vy) {
  const Vector2d j(std::clamp(vx, -1.0, 1.0), std::clamp(vy, -1.0, 1.0));
  if (j != joystick_) joystick_changed_ = true;
  joystick_ = j;
}

void Scenario::set_mode(Mode mode) {
  if (mode == mode_) return;
  if (t_ > -config_.lead_in + 1e-12)
    throw DomainError("mode can only change before the first tick; reset the session first");
  mode_ = mode;
  config_.sim.mode = mode;
  initialize();
}

unicycle::ReferenceSignal Scenario::live_reference(double t_merge) const {
  const Vector2d offset(config_.joystick.forward * joystick_.x(), config_.joystick.lateral * joystick_.y());
  const auto& path = gait_->plan.path;
  unicycle::State start;
  if (!path.samples.empty()) {
    const double kf = (t_merge - path.t0) / path.dt;
    const auto k = static_cast<std::size_t>(
        std::clamp(std::round(kf), 0.0, static_cast<double>(path.samples.size() - 1)));
    start = path.state(k);
  } else {
    const Pose2 mid = planner::feet_midpose(gait_->feet.planar(t_merge));
    start = {mid.position, mid.yaw};
  }
  return unicycle::joystick_reference(start, config_.planner.control_point, config_.planner.gain, offset, t_merge,
                                      config_.planner.horizon, config_.planner.dt, config_.planner.limits);
}

void Scenario::replan() {
  if (config_.reference.kind == ReferenceKind::FixedSteps) return;
  const bool live = config_.reference.kind == ReferenceKind::Live;
  const bool wanted =
      live ? (joystick_changed_ || joystick_.squaredNorm() > 0.0) : gait_->plan.horizon_exhausted;
  if (!wanted) return;
  // Merge only when a merge point falls on this tick, so the measured feet
  // are those at the merge instant. The start of the active plan is skipped.
  const double dt = config_.sim.dt_ctrl;
  const auto tm = gait_->timeline.next_merge_point(t_ - 0.5 * dt);
  if (!tm || *tm >= t_ + 0.5 * dt || std::abs(*tm - gait_->plan.t0) < 0.5 * dt) return;
  try {
    const unicycle::ReferenceSignal ref = live ? live_reference(*tm) : reference_;
    const auto merged = planner::merge_plan(config_.planner, *gait_, ref, planar_feet(model_, state_.q), *tm);
    gait_ = std::make_shared<planner::GaitReference>(planner::make_gait(merged.plan, config_.planner));
    const double t_merge = merged.merge_time;
    merges_.emplace_back(t_merge, merged.plan);
    footsteps_.erase(std::remove_if(footsteps_.begin(), footsteps_.end(),
                                    [t_merge](const planner::Footstep& f) { return f.impact_time > t_merge + 1e-9; }),
                     footsteps_.end());
    footsteps_.insert(footsteps_.end(), merged.plan.steps.begin(), merged.plan.steps.end());
    joystick_changed_ = false;
  } catch (const Error& e) {
    rethrow_as(e, tick_, t_, "planner");
  }
}

wbc::TaskReferences Scenario::references(double t, const mpc::Chi& chi) const {
  wbc::TaskReferences r;
  r.com_position = Vector3d(chi(0), chi(1), com_height_);
  r.com_velocity = Vector3d(chi(2), chi(3), 0.0);
  r.com_acceleration = Vector3d(chi(4), chi(5), 0.0);
  Vector2d heading = Vector2d::Zero();
  for (Side s : {Side::Left, Side::Right}) {
    const planner::FootState fs = gait_->feet.at(s, t);
    auto& ft = r.foot(s);
    ft.pose.R = rotz(fs.yaw);
    ft.pose.p = fs.position;
    ft.velocity << fs.velocity, 0.0, 0.0, fs.yaw_rate;
    ft.acceleration << fs.acceleration, 0.0, 0.0, fs.yaw_acc;
    heading += Vector2d(std::cos(fs.yaw), std::sin(fs.yaw));
  }
  r.torso_orientation = rotz(std::atan2(heading.y(), heading.x()));
  r.posture = standing_.s;
  return r;
}

void Scenario::update_contacts() {
  for (Side s : {Side::Left, Side::Right}) {
    const bool want = gait_->timeline.in_contact(s, t_);
    if (want && !state_.in_contact(s)) {
      try {
        state_ = touchdown_projection(model_, state_, s, {}, 0.02);
      } catch (const Error& e) {
        rethrow_as(e, tick_, t_, "sim");
      }
    } else if (!want && state_.in_contact(s)) {
      state_ = liftoff(state_, s);
    }
  }
}

void Scenario::control_position(double t, const mpc::Chi& chi_next, TickRecord& rec) {
  const double dt = config_.sim.dt_ctrl;
  const wbc::TaskReferences refs = references(t + dt, chi_next);
  const auto start = Clock::now();
  wbc::IkResult ik;
  try {
    ik = wbc::ik_step(model_, state_.q, refs, dt, config_.ik);
  } catch (const Error& e) {
    rethrow_as(e, tick_, t, "ik");
  }
  ik_ms_ += elapsed_ms(start);
  ++ik_ticks_;
  const planner::LoadShare w = gait_->weights.at(t + dt);
  if (w.left > w.right) anchor_ = Side::Left;
  if (w.right > w.left) anchor_ = Side::Right;
  state_ = step_position(model_, state_, ik.q.s, anchor_, dt);
  for (Side s : {Side::Left, Side::Right}) {
    const bool want = gait_->timeline.in_contact(s, t + dt);
    if (want && !state_.in_contact(s))
      state_.contacts[idx(s)] = ground_pose(rbd::frame_pose(model_, state_.q, wbc::FrameNames{}.sole(s)));
    if (!want) state_.contacts[idx(s)].reset();
  }
  rec.task_residual = ik.feet_residual;
}

void Scenario::control_torque(double t, TickRecord& rec) {
  update_contacts();
  wbc::TaskReferences refs = references(t, chi_);
  for (Side s : {Side::Left, Side::Right}) {
    if (!state_.in_contact(s)) continue;
    auto& ft = refs.foot(s);
    ft.pose = *state_.contacts[idx(s)];
    ft.velocity.setZero();
    ft.acceleration.setZero();
  }
  const std::array<bool, 2> active{state_.in_contact(Side::Left), state_.in_contact(Side::Right)};
  const planner::LoadShare w = gait_->weights.at(t);
  std::array<double, 2> share{w.left, w.right};
  if (!active[0]) share = {0.0, 1.0};
  if (!active[1]) share = {1.0, 0.0};

  const auto start = Clock::now();
  wbc::WbcCommand cmd;
  try {
    cmd = wbc::wbc_step(model_, state_.q, state_.nu, refs, config_.gains, config_.contact(), config_.weights, active,
                        share);
  } catch (const Error& e) {
    rethrow_as(e, tick_, t, "wbc");
  }
  wbc_ms_ += elapsed_ms(start);
  ++wbc_ticks_;

  // Newton consistency of the controller wrenches against its own nudot.
  const auto com = rbd::com_and_jacobian(model_, state_.q);
  const Vector3d acc = com.J * cmd.nudot + rbd::com_drift(model_, state_.q, state_.nu);
  Vector3d total = Vector3d::Zero();
  for (const auto& wr : cmd.wrench)
    if (wr) total += wr->head<3>();
  const double weight = model_.total_mass() * kGravity;
  stats_.max_force_balance_error =
      std::max(stats_.max_force_balance_error,
               (total - model_.total_mass() * (acc - rbd::kDefaultGravity)).norm() / weight);

  // Contact inequalities on the controller wrenches, in the sole frames.
  const auto ci = wbc::contact_inequalities(config_.contact());
  for (Side s : {Side::Left, Side::Right}) {
    const auto& wr = cmd.wrench[idx(s)];
    if (!wr) continue;
    const Matrix3d R = rbd::frame_pose(model_, state_.q, wbc::FrameNames{}.sole(s)).R;
    rbd::Vector6d local;
    local << R.transpose() * wr->head<3>(), R.transpose() * wr->tail<3>();
    stats_.max_contact_violation = std::max(stats_.max_contact_violation, (ci.C * local - ci.b).maxCoeff());
  }

  const std::size_t warnings_before = state_.warnings.size();
  try {
    for (int k = 0; k < config_.sim.substeps(); ++k) state_ = step_torque(model_, state_, cmd.tau, config_.sim);
  } catch (const Error& e) {
    rethrow_as(e, tick_, t, "sim");
  }
  for (std::size_t i = warnings_before; i < state_.warnings.size(); ++i) stats_.warnings.push_back(state_.warnings[i]);

  rec.wbc_status = cmd.status;
  rec.task_residual = cmd.task_residual;
  rec.wrench = cmd.wrench;
  if (cmd.status != qp::Status::Optimal) ++stats_.wbc_failures;
  if (logs_ && logs_->wbc.is_open()) logs_->wbc << wbc::wbc_csv_row(t, cmd) << '\n';
}

const TickRecord& Scenario::step() {
  if (paused_) {
    record_.paused = true;
    return record_;
  }
  const double dt = config_.sim.dt_ctrl;
  const double t = t_;

  replan();

  TickRecord rec;
  rec.tick = tick_;
  rec.mode = mode_;

  auto start = Clock::now();
  mpc::MpcResult r;
  try {
    r = mpc_->step(chi_, *gait_, t, config_.foot);
  } catch (const Error& e) {
    rethrow_as(e, tick_, t, "mpc");
  }
  mpc_ms_ += elapsed_ms(start);
  const mpc::Chi chi_next = mpc::integrate_com(chi_, r.u0, dt);
  if (r.status != qp::Status::Optimal) ++stats_.mpc_failures;

  if (mode_ == Mode::Position)
    control_position(t, chi_next, rec);
  else
    control_torque(t, rec);

  chi_ = chi_next;
  t_ = t + dt;
  ++tick_;

  // Everything below describes the state at the end of the tick.
  const double te = t_;
  rec.t = te;
  rec.mpc_status = r.status;
  rec.mpc_iterations = r.iterations;
  rec.zmp_reference = gait_->zmp.at(te);
  rec.zmp_predicted = mpc::zmp_output(chi_, mpc_->model());
  rec.com_desired = Vector3d(chi_(0), chi_(1), com_height_);
  rec.com_measured = rbd::com_and_jacobian(model_, state_.q).p;
  rec.load = gait_->weights.at(te);
  const wbc::FrameNames frames;
  for (Side s : {Side::Left, Side::Right}) {
    const planner::FootState fs = gait_->feet.at(s, te);
    rec.feet_desired[idx(s)] = {fs.position, fs.yaw};
    rec.feet_measured[idx(s)] = sample_of(rbd::frame_pose(model_, state_.q, frames.sole(s)));
    rec.phases[idx(s)] = gait_->timeline.phase(s, te);
    rec.contact[idx(s)] = state_.in_contact(s);
  }
  rec.support_polygon = mpc::support_polygon(*gait_, te, config_.foot);
  const auto& path = gait_->plan.path;
  if (!path.samples.empty()) {
    const double kf = (te - path.t0) / path.dt;
    const auto k = static_cast<std::size_t>(
        std::clamp(std::round(kf), 0.0, static_cast<double>(path.samples.size() - 1)));
    rec.unicycle = path.state(k);
  } else {
    const Pose2 mid = planner::feet_midpose(gait_->feet.planar(te));
    rec.unicycle = {mid.position, mid.yaw};
  }
  const Vector2d f_now = unicycle::control_point_position(rec.unicycle, config_.planner.control_point);
  switch (config_.reference.kind) {
    case ReferenceKind::Live:
      rec.reference_point = f_now + rot2(rec.unicycle.theta) * Vector2d(config_.joystick.forward * joystick_.x(),
                                                                        config_.joystick.lateral * joystick_.y());
      break;
    case ReferenceKind::FixedSteps:
      rec.reference_point = f_now;
      break;
    default:
      rec.reference_point = reference_.position(te);
      break;
  }
  for (const auto& f : footsteps_)
    if (f.impact_time > te && rec.footsteps.size() < kFootstepWindow) rec.footsteps.push_back(f);

  // Measured ZMP: plant wrenches in torque mode, table-cart on the measured
  // CoM (second differences) in position mode.
  if (mode_ == Mode::Torque) {
    std::vector<std::pair<Vector3d, rbd::Vector6d>> ws;
    for (Side s : {Side::Left, Side::Right})
      if (state_.contact_wrench[idx(s)])
        ws.emplace_back(rbd::frame_pose(model_, state_.q, frames.sole(s)).p, *state_.contact_wrench[idx(s)]);
    rec.zmp_measured = zmp_from_wrenches(ws).value_or(rec.com_measured.head<2>());
  } else {
    Vector3d acc = Vector3d::Zero();
    if (history_size_ >= 2)
      acc = (rec.com_measured - 2.0 * com_history_[1] + com_history_[0]) / (dt * dt);
    rec.zmp_measured = rec.com_measured.head<2>() - (rec.com_measured.z() / kGravity) * acc.head<2>();
  }
  com_history_[0] = com_history_[1];
  com_history_[1] = rec.com_measured;
  history_size_ = std::min(history_size_ + 1, 2);

  accumulate(rec);
  log_tick(rec);
  if (logs_) {
    logs_->mpc << te << ',' << chi_(0) << ',' << chi_(1) << ',' << chi_(2) << ',' << chi_(3) << ',' << chi_(4) << ','
               << chi_(5) << ',' << r.u0.x() << ',' << r.u0.y() << ',' << rec.zmp_reference.x() << ','
               << rec.zmp_reference.y() << ',' << rec.zmp_predicted.x() << ',' << rec.zmp_predicted.y() << ','
               << r.iterations << ',' << qp::to_string(r.status) << '\n';
  }
  record_ = std::move(rec);
  return record_;
}

void Scenario::accumulate(const TickRecord& rec) {
  auto& s = stats_;
  s.ticks = tick_;
  zmp_sq_ += (rec.zmp_predicted - rec.zmp_reference).squaredNorm();
  s.zmp_rms = std::sqrt(zmp_sq_ / static_cast<double>(s.ticks));
  for (Side side : {Side::Left, Side::Right}) {
    const double d = (rec.feet_measured[idx(side)].position - rec.feet_desired[idx(side)].position).norm();
    s.max_sole_drift = std::max(s.max_sole_drift, d);
    if (state_.in_contact(side)) {
      const double ds = (rec.feet_measured[idx(side)].position - state_.contacts[idx(side)]->p).norm();
      s.max_stance_drift = std::max(s.max_stance_drift, ds);
    }
  }
  s.max_com_drift = std::max(s.max_com_drift, (rec.com_measured - com_start_).norm());
  s.com_height_min = std::min(s.com_height_min, rec.com_measured.z());
  s.com_height_max = std::max(s.com_height_max, rec.com_measured.z());
  s.max_task_residual = std::max(s.max_task_residual, rec.task_residual);
  s.steps_completed = static_cast<int>(std::count_if(footsteps_.begin(), footsteps_.end(), [&](const auto& f) {
    return f.impact_time <= rec.t + 1e-9;
  }));
  s.mean_mpc_ms = mpc_ms_ / static_cast<double>(s.ticks);
  s.mean_wbc_ms = wbc_ticks_ ? wbc_ms_ / static_cast<double>(wbc_ticks_) : 0.0;
  s.mean_ik_ms = ik_ticks_ ? ik_ms_ / static_cast<double>(ik_ticks_) : 0.0;
}

void Scenario::log_tick(const TickRecord& rec) {
  if (!logs_) return;
  const double t = rec.t;
  const auto& g = *gait_;
  const planner::FootState l = g.feet.at(Side::Left, t), r = g.feet.at(Side::Right, t);
  logs_->planner << t << ',' << planner::to_string(rec.phases[0]) << ',' << planner::to_string(rec.phases[1]) << ','
                 << l.position.x() << ',' << l.position.y() << ',' << l.position.z() << ',' << l.yaw << ','
                 << r.position.x() << ',' << r.position.y() << ',' << r.position.z() << ',' << r.yaw << ','
                 << rec.zmp_reference.x() << ',' << rec.zmp_reference.y() << ',' << rec.load.left << ','
                 << rec.load.right << '\n';
  auto& os = logs_->state;
  os << t;
  for (const Vector3d& v : {rec.com_measured, rec.com_desired}) os << ',' << v.x() << ',' << v.y() << ',' << v.z();
  for (const auto* feet : {&rec.feet_measured, &rec.feet_desired})
    for (const auto& f : *feet) os << ',' << f.position.x() << ',' << f.position.y() << ',' << f.position.z() << ',' << f.yaw;
  os << ',' << rec.zmp_measured.x() << ',' << rec.zmp_measured.y() << ',' << int(rec.contact[0]) << ','
     << int(rec.contact[1]) << '\n';
}

void Scenario::run() {
  const long total = std::lround((config_.duration + config_.lead_in) / config_.sim.dt_ctrl);
  while (tick_ < total) step();
}

void Scenario::finish_logs(const std::string& status, const std::string& error) {
  if (!logs_) return;
  for (auto* os : {&logs_->planner, &logs_->mpc, &logs_->state, &logs_->wbc})
    if (os->is_open()) os->flush();
  {
    std::ofstream fs(logs_->dir / "footsteps.json");
    planner::write_footsteps_json(fs, footsteps_);
  }
  nlohmann::json files = {"planner.csv", "mpc.csv", "state.csv", "footsteps.json"};
  if (logs_->wbc.is_open()) files.push_back("wbc.csv");
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& m : merges_) merges.push_back(m.first);
  // One entry per plan segment so footsteps can be audited against the
  // stance they were planned from.
  nlohmann::json plans = nlohmann::json::array();
  auto segment = [](const planner::FootstepPlan& p) {
    auto pose = [](const Pose2& f) { return nlohmann::json{{"x", f.position.x()}, {"y", f.position.y()}, {"yaw", f.yaw}}; };
    return nlohmann::json{{"t0", p.t0},
                          {"t_prev", p.t_prev},
                          {"standing_start", p.standing_start},
                          {"initial", {{"left", pose(p.initial.left)}, {"right", pose(p.initial.right)}}}};
  };
  plans.push_back(segment(initial_plan_));
  for (const auto& m : merges_) plans.push_back(segment(m.second));
  const nlohmann::json manifest = {
      {"format", "walkstack-log"},
      {"version", 1},
      {"status", status},
      {"error", error},
      {"mode", std::string(to_string(mode_))},
      {"seed", 0},
      {"versions", {{"walkstack", WALKSTACK_VERSION}}},
      {"files", files},
      {"ticks", tick_},
      {"t_end", t_},
      {"steps_completed", stats_.steps_completed},
      {"merge_times", merges},
      {"plans", plans},
      {"warnings", stats_.warnings},
      {"mass", model_.total_mass()},
      {"com_height", com_height_},
      {"config", nlohmann::json::parse(scenario_to_json(config_))}};
  std::ofstream ms(logs_->dir / "manifest.json");
  ms << manifest.dump(2) << '\n';
}

ScenarioStats run_scenario(const ScenarioConfig& config) {
  std::unique_ptr<Scenario> owned;
  try {
    owned = std::make_unique<Scenario>(config);
  } catch (const ScenarioError& e) {
    if (!config.output.empty()) {
      std::filesystem::create_directories(config.output);
      const nlohmann::json manifest = {{"format", "walkstack-log"},
                                       {"version", 1},
                                       {"status", "error"},
                                       {"error", e.what()},
                                       {"mode", std::string(to_string(config.sim.mode))},
                                       {"versions", {{"walkstack", WALKSTACK_VERSION}}},
                                       {"files", nlohmann::json::array()},
                                       {"ticks", 0},
                                       {"config", nlohmann::json::parse(scenario_to_json(config))}};
      std::ofstream ms(std::filesystem::path(config.output) / "manifest.json");
      ms << manifest.dump(2) << '\n';
    }
    throw;
  }
  Scenario& s = *owned;
  try {
    s.run();
  } catch (const ScenarioError& e) {
    s.finish_logs("error", e.what());
    throw;
  }
  s.finish_logs();
  return s.stats();
}

}  // namespace walkstack::sim
