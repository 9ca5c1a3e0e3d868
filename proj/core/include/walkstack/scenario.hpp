// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "walkstack/common.hpp"
#include "walkstack/mpc.hpp"
#include "walkstack/planner.hpp"
#include "walkstack/rbd.hpp"
#include "walkstack/sim.hpp"
#include "walkstack/unicycle.hpp"
#include "walkstack/wbc.hpp"

namespace walkstack::sim {

enum class ReferenceKind { Stand, Ramp, File, FixedSteps, Live };

std::string_view to_string(ReferenceKind k);

struct ReferenceConfig {
  ReferenceKind kind = ReferenceKind::Stand;
  /// Ramp: constant velocity of F* over [start, end], measured from the plan start.
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double start = 0.0;
  double end = 0.0;
  /// File: CSV `t,xf_x,xf_y,vxf_x,vxf_y`, times relative to the plan start.
  std::string path;
  /// FixedSteps: each footstep lands step_length ahead of the previous one
  /// every step_time seconds; the last step closes the stance.
  double step_length = 0.14;
  double step_time = 1.25;
  int steps = 12;
};

struct JoystickScale {
  double forward = 0.4;
  double lateral = 0.2;
};

/// Everything a run needs. JSON layout documented in docs/scenario.md.
struct ScenarioConfig {
  std::string model = "biped12.json";
  SimConfig sim;
  double duration = 20.0;
  /// Standing time before the plan starts at t = 0.
  double lead_in = 1.0;
  double knee = 1.0;
  planner::PlannerConfig planner;
  mpc::MpcConfig mpc;
  mpc::FootGeometry foot;
  wbc::TaskGains gains;
  wbc::WbcWeights weights;
  double mu = 0.5;
  double f_min = 0.0;
  double mu_z = -1.0;
  wbc::IkWeights ik;
  ReferenceConfig reference;
  JoystickScale joystick;
  std::string output;

  /// Contact rectangle taken from the foot geometry.
  wbc::ContactSpec contact() const;
  /// Throws ConfigError describing the first invalid field.
  void validate() const;
};

/// Strict parse: unknown keys and wrong types raise ConfigError naming the
/// JSON path. Relative file paths resolve against `base_dir`.
ScenarioConfig parse_scenario(std::istream& is, const std::string& base_dir = "");
ScenarioConfig load_scenario(const std::string& path);
std::string scenario_to_json(const ScenarioConfig& config);

/// Bundled model name or a file path.
std::string resolve_model_path(const std::string& model);

/// Aborted run: `tick` is the control tick index, `layer` the failing layer.
class ScenarioError : public Error {
 public:
  ScenarioError(const std::string& what, long tick, std::string layer)
      : Error(what), tick_(tick), layer_(std::move(layer)) {}
  long tick() const { return tick_; }
  const std::string& layer() const { return layer_; }

 private:
  long tick_;
  std::string layer_;
};

struct FootSample {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double yaw = 0.0;
};

/// Upcoming footsteps carried by a tick record.
constexpr std::size_t kFootstepWindow = 8;

/// What one control tick produced; the telemetry frame is built from it.
struct TickRecord {
  long tick = 0;
  double t = 0.0;
  unicycle::State unicycle;
  /// Reference point F* the unicycle chases.
  Eigen::Vector2d reference_point = Eigen::Vector2d::Zero();
  std::vector<planner::Footstep> footsteps;  // upcoming, at most 8
  std::array<FootSample, 2> feet_desired;
  std::array<FootSample, 2> feet_measured;
  std::array<planner::Phase, 2> phases{planner::Phase::Stance, planner::Phase::Stance};
  std::array<bool, 2> contact{true, true};
  Eigen::Vector3d com_desired = Eigen::Vector3d::Zero();
  Eigen::Vector3d com_measured = Eigen::Vector3d::Zero();
  Eigen::Vector2d zmp_reference = Eigen::Vector2d::Zero();
  Eigen::Vector2d zmp_predicted = Eigen::Vector2d::Zero();
  Eigen::Vector2d zmp_measured = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> support_polygon;
  planner::LoadShare load;
  qp::Status mpc_status = qp::Status::Optimal;
  int mpc_iterations = 0;
  std::optional<qp::Status> wbc_status;
  double task_residual = 0.0;
  std::array<std::optional<rbd::Vector6d>, 2> wrench;  // controller wrenches
  Mode mode = Mode::Position;
  bool paused = false;
};

struct ScenarioStats {
  long ticks = 0;
  int steps_completed = 0;
  int mpc_failures = 0;
  int wbc_failures = 0;
  double zmp_rms = 0.0;
  double max_sole_drift = 0.0;
  double max_stance_drift = 0.0;
  double max_com_drift = 0.0;
  double com_height_min = 0.0;
  double com_height_max = 0.0;
  double max_task_residual = 0.0;
  double max_contact_violation = 0.0;
  /// max over ticks of |sum f - m (g + a_des)| / (m g) for the controller wrenches.
  double max_force_balance_error = 0.0;
  double mean_mpc_ms = 0.0;
  double mean_wbc_ms = 0.0;
  double mean_ik_ms = 0.0;
  std::vector<std::string> warnings;
};

/// Nested loops of one run: planner at merge points, MPC and IK or WBC at
/// dt_ctrl, physics at dt_sim. Deterministic for a given configuration.
class Scenario {
 public:
  explicit Scenario(ScenarioConfig config);
  ~Scenario();
  Scenario(const Scenario&) = delete;
  Scenario& operator=(const Scenario&) = delete;

  const ScenarioConfig& config() const { return config_; }
  const rbd::RobotModel& model() const { return model_; }
  double time() const { return t_; }
  long tick() const { return tick_; }
  bool finished() const { return t_ >= config_.duration - 1e-9; }
  double nominal_com_height() const { return com_height_; }

  /// One control tick. Throws ScenarioError.
  const TickRecord& step();
  /// Steps until the configured duration.
  void run();

  /// Joystick in [-1, 1]^2 (clamped); replanning engages at the next merge point.
  void set_joystick(double vx, double vy);
  Eigen::Vector2d joystick() const { return joystick_; }
  void set_mode(Mode mode);
  void pause() { paused_ = true; }
  void resume() { paused_ = false; }
  bool paused() const { return paused_; }
  void reset();

  const TickRecord& last() const { return record_; }
  const ScenarioStats& stats() const { return stats_; }
  const planner::GaitReference& gait() const { return *gait_; }
  /// Footsteps executed or still planned, merged across replans.
  const std::vector<planner::Footstep>& footsteps() const { return footsteps_; }
  const SimState& state() const { return state_; }
  /// Planner merges applied so far as (merge time, new plan).
  const std::vector<std::pair<double, planner::FootstepPlan>>& merges() const { return merges_; }
  /// Plan the session started with.
  const planner::FootstepPlan& initial_plan() const { return initial_plan_; }

  /// Writes footsteps.json and manifest.json; CSVs are streamed while running.
  void finish_logs(const std::string& status = "ok", const std::string& error = "");

 private:
  struct Logs;

  void initialize();
  void replan();
  unicycle::ReferenceSignal live_reference(double t_merge) const;
  void update_contacts();
  void control_position(double t, const mpc::Chi& chi_next, TickRecord& rec);
  void control_torque(double t, TickRecord& rec);
  wbc::TaskReferences references(double t, const mpc::Chi& chi) const;
  void log_tick(const TickRecord& rec);
  void accumulate(const TickRecord& rec);

  ScenarioConfig config_;
  rbd::RobotModel model_;
  double com_height_ = 0.0;
  rbd::Configuration standing_;
  SimState state_;
  std::shared_ptr<planner::GaitReference> gait_;
  std::vector<std::pair<double, planner::FootstepPlan>> merges_;
  planner::FootstepPlan initial_plan_;
  std::vector<planner::Footstep> footsteps_;
  unicycle::ReferenceSignal reference_;
  std::unique_ptr<mpc::MpcController> mpc_;
  mpc::Chi chi_ = mpc::Chi::Zero();
  double t_ = 0.0;
  long tick_ = 0;
  Side anchor_ = Side::Left;
  Eigen::Vector2d joystick_ = Eigen::Vector2d::Zero();
  bool joystick_changed_ = false;
  bool paused_ = false;
  Mode mode_ = Mode::Position;
  std::array<Eigen::Vector3d, 2> com_history_;
  int history_size_ = 0;
  Eigen::Vector3d com_start_ = Eigen::Vector3d::Zero();
  TickRecord record_;
  ScenarioStats stats_;
  double zmp_sq_ = 0.0;
  double mpc_ms_ = 0.0, wbc_ms_ = 0.0, ik_ms_ = 0.0;
  long wbc_ticks_ = 0, ik_ticks_ = 0;
  std::unique_ptr<Logs> logs_;
};

/// Runs a scenario to completion, writing the log bundle when an output
/// directory is configured. On a layer error the manifest records the
/// failure before the ScenarioError propagates.
ScenarioStats run_scenario(const ScenarioConfig& config);

/// Footstep plan for the FixedSteps reference starting from `feet` at t0.
planner::FootstepPlan fixed_step_plan(const ReferenceConfig& ref, const planner::FeetPoses& feet, double t0);

/// Table-cart ZMP from plant contact wrenches (world axes, moments about
/// each sole origin); nullopt when no normal force.
std::optional<Eigen::Vector2d> zmp_from_wrenches(const std::vector<std::pair<Eigen::Vector3d, rbd::Vector6d>>& wrenches);

}  // namespace walkstack::sim
