// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "walkstack/common.hpp"
#include "walkstack/unicycle.hpp"

namespace walkstack::planner {

enum class Phase { SwitchIn, Stance, SwitchOut, Swing };

std::string_view to_string(Phase p);

struct Footstep {
  Side side = Side::Left;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double theta = 0.0;
  double impact_time = 0.0;

  Pose2 pose() const { return {position, theta}; }
};

struct StepConstraints {
  double t_min = 1.3;
  double t_max = 5.0;
  double d_max = 0.175;
  double theta_max = 0.5;
  double w_min = 0.05;
  double m_half_width = 0.045;

  void validate() const;
};

struct CostWeights {
  double k_t = 1.0;
  double k_x = 10.0;

  void validate() const;
};

struct FeetPoses {
  Pose2 left;
  Pose2 right;

  const Pose2& operator[](Side s) const { return s == Side::Left ? left : right; }
  Pose2& operator[](Side s) { return s == Side::Left ? left : right; }
};

/// Ideal foot poses for a unicycle sample: +-m along the body lateral axis.
FeetPoses feet_from_sample(const Eigen::Vector2d& x, double theta, double m);

/// Unicycle pose halfway between the feet (mean position, mean heading).
Pose2 feet_midpose(const FeetPoses& feet);

/// k_t / dt^2 + k_x |dx|^2. Throws DomainError for dt <= 0.
double step_cost(double delta_t, const Eigen::Vector2d& delta_x, const CostWeights& w);

/// Lateral distance of the left foot in the right foot frame.
double lateral_clearance(const FeetPoses& feet);

struct InitialFeet {
  FeetPoses feet;
  /// Last impact; the first step duration is measured from here.
  double last_impact = 0.0;
  /// Forces the first swing foot (used when starting in the middle of a
  /// double support). Otherwise the foot farther from its ideal pose swings.
  std::optional<Side> swing;
  /// Lower bound on the first impact time.
  double earliest_impact = -std::numeric_limits<double>::infinity();
};

struct PlanResult {
  std::vector<Footstep> steps;
  /// The path ended before the robot could come to rest.
  bool horizon_exhausted = false;
};

/// Greedy search over the sampled impact times of the path: each step takes
/// the cheapest feasible sample in [t_prev + t_min, t_prev + t_max], earliest
/// sample on ties. Stops once both feet rest at their ideal poses relative
/// to the last path sample.
PlanResult plan_footsteps(const unicycle::DiscretizedPath& path, const StepConstraints& constraints,
                          const CostWeights& weights, const InitialFeet& initial, std::size_t max_steps = 256);

/// Footsteps plus the data needed to build references and to replan.
struct FootstepPlan {
  double t0 = 0.0;
  double t_prev = 0.0;
  bool standing_start = true;
  /// For plans starting inside a double support: progress in [0, 1) of the
  /// weight transfer at t0, which the first switch continues from.
  double switch_progress = 0.0;
  /// Foot being unloaded at t0 for plans starting inside a double support.
  std::optional<Side> unloading;
  FeetPoses initial;
  std::vector<Footstep> steps;
  bool horizon_exhausted = false;
  unicycle::DiscretizedPath path;
};

struct PhaseInterval {
  Phase phase = Phase::Stance;
  double start = 0.0;
  double end = std::numeric_limits<double>::infinity();
};

/// Half-cosine transfer of load off `unloading` between f_from and f_to.
/// The cosine runs over [ramp_start, ramp_end]; it is only evaluated inside
/// [start, end].
struct WeightRamp {
  double start = 0.0;
  double end = 0.0;
  double ramp_start = 0.0;
  double ramp_end = 0.0;
  Side unloading = Side::Left;
  double f_from = 1.0;
  double f_to = 0.0;
};

struct GaitTimeline {
  double t0 = 0.0;
  /// End of the last weight transfer; both feet stand afterwards.
  double t_end = 0.0;
  std::array<std::vector<PhaseInterval>, 2> phases;
  /// Full double-support intervals (the first switch of a plan is excluded).
  std::vector<std::pair<double, double>> double_support;
  std::vector<double> merge_points;
  std::vector<WeightRamp> ramps;

  Phase phase(Side s, double t) const;
  bool in_contact(Side s, double t) const { return phase(s, t) != Phase::Swing; }
  /// Earliest merge point >= t, if any.
  std::optional<double> next_merge_point(double t) const;
};

/// Double support lasts switch_ratio of each step duration and starts at
/// the impact that opens it. The first switch of a standing start lasts half
/// of its nominal duration, and the plan ends with a half switch back to an
/// even load. Merge points are the plan start, the midpoint of each full
/// double support (snapped to the planner grid) and the end.
GaitTimeline build_gait_timeline(const FootstepPlan& plan, double switch_ratio);

struct FootState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  double yaw_rate = 0.0;
  double yaw_acc = 0.0;

  Pose2 planar() const { return {position.head<2>(), yaw}; }
};

class FeetReference {
 public:
  struct Segment {
    double start = 0.0;
    double end = 0.0;
    Pose2 from;
    Pose2 to;
    bool swing = false;
  };

  FeetReference() = default;
  FeetReference(std::array<std::vector<Segment>, 2> segments, double h_apex)
      : segments_(std::move(segments)), h_apex_(h_apex) {}

  FootState at(Side s, double t) const;
  FeetPoses planar(double t) const { return {at(Side::Left, t).planar(), at(Side::Right, t).planar()}; }
  const std::vector<Segment>& segments(Side s) const { return segments_[static_cast<int>(s)]; }
  double h_apex() const { return h_apex_; }

 private:
  std::array<std::vector<Segment>, 2> segments_;
  double h_apex_ = 0.02;
};

/// Swing: quintic in x, y and shortest-arc yaw with zero boundary velocity
/// and acceleration; height made of two mirrored cubics peaking at h_apex.
FeetReference interpolate_feet(const GaitTimeline& timeline, const FootstepPlan& plan, double h_apex = 0.02);

struct LoadShare {
  double left = 0.5;
  double right = 0.5;

  double operator[](Side s) const { return s == Side::Left ? left : right; }
};

class WeightDistribution {
 public:
  WeightDistribution() = default;
  explicit WeightDistribution(GaitTimeline timeline) : timeline_(std::move(timeline)) {}
  LoadShare at(double t) const;

 private:
  GaitTimeline timeline_;
};

WeightDistribution weight_distribution(const GaitTimeline& timeline);

/// Load-weighted average of the foot reference points (foot center plus a
/// per-foot offset in the foot frame).
class ZmpReference {
 public:
  ZmpReference() = default;
  ZmpReference(FeetReference feet, WeightDistribution weights, std::array<Eigen::Vector2d, 2> offsets)
      : feet_(std::move(feet)), weights_(std::move(weights)), offsets_(offsets) {}
  Eigen::Vector2d at(double t) const;

 private:
  FeetReference feet_;
  WeightDistribution weights_;
  std::array<Eigen::Vector2d, 2> offsets_{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
};

ZmpReference zmp_reference(const GaitTimeline& timeline, const FeetReference& feet,
                           const std::array<Eigen::Vector2d, 2>& offsets = {Eigen::Vector2d::Zero(),
                                                                            Eigen::Vector2d::Zero()});

struct PlannerConfig {
  StepConstraints constraints;
  CostWeights weights;
  unicycle::ControlPoint control_point;
  Eigen::Matrix2d gain = Eigen::Matrix2d::Identity();
  unicycle::Limits limits;
  double horizon = 6.0;
  double dt = 0.01;
  double switch_ratio = 0.52;
  double h_apex = 0.02;
  std::array<Eigen::Vector2d, 2> zmp_offsets{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  /// A merged plan keeps at least this much of its first weight transfer.
  double min_switch_remaining = 0.1;
  std::size_t max_steps = 256;

  void validate() const;
};

/// Everything the controllers consume from one plan.
struct GaitReference {
  FootstepPlan plan;
  GaitTimeline timeline;
  FeetReference feet;
  WeightDistribution weights;
  ZmpReference zmp;
};

GaitReference make_gait(const FootstepPlan& plan, const PlannerConfig& config);

/// Plans from standing feet at t0; the unicycle starts at the feet midpose.
FootstepPlan plan_walk(const PlannerConfig& config, const unicycle::ReferenceSignal& reference,
                       const FeetPoses& feet, double t0);

struct MergeResult {
  FootstepPlan plan;
  double merge_time = 0.0;
};

/// Replans from the earliest merge point of `active` at or after t_now. The
/// unicycle restarts from the active path state at the merge time, moved by
/// the rigid motion taking the planned feet midpose onto the measured one.
/// Throws DomainError when no merge point remains.
MergeResult merge_plan(const PlannerConfig& config, const GaitReference& active,
                       const unicycle::ReferenceSignal& reference, const FeetPoses& measured, double t_now);

/// `t, phase_l, phase_r, lx, ly, lz, lyaw, rx, ry, rz, ryaw, zmpx, zmpy, Fl, Fr`
void write_plan_csv(std::ostream& os, const GaitReference& gait, double t_begin, double t_end, double dt);

/// JSON array of {side, x, y, theta, t_imp}.
void write_footsteps_json(std::ostream& os, const std::vector<Footstep>& steps);

/// Feasibility audit of consecutive footsteps; returns human readable
/// violations (empty when the plan is valid).
std::vector<std::string> audit_steps(const FeetPoses& initial, double t_prev, const std::vector<Footstep>& steps,
                                     const StepConstraints& constraints, double tol = 1e-9);

}  // namespace walkstack::planner
