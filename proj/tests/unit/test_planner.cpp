// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "planner_oracle.hpp"
#include "walkstack/common.hpp"
#include "walkstack/planner.hpp"

namespace walkstack::planner {
namespace {

using Eigen::Vector2d;
constexpr double kPi = std::numbers::pi;

PlannerConfig walking_config() {
  PlannerConfig cfg;
  cfg.gain = 0.5 * Eigen::Matrix2d::Identity();
  cfg.limits = {0.1, 0.3};
  cfg.horizon = 10.0;
  return cfg;
}

FeetPoses standing_feet(const Vector2d& mid = Vector2d::Zero(), double yaw = 0.0, double m = 0.045) {
  return feet_from_sample(mid, yaw, m);
}

// Reference for F starting where F sits when the robot stands at the origin.
unicycle::ReferenceSignal straight_reference(double speed, double duration, double start_delay = 0.0) {
  const Vector2d f0(0.2, 0.0);
  std::vector<unicycle::ReferenceSignal::Sample> s;
  if (start_delay > 0.0) s.push_back({0.0, f0, Vector2d::Zero()});
  s.push_back({start_delay, f0, Vector2d(speed, 0.0)});
  s.push_back({start_delay + duration, f0 + Vector2d(speed * duration, 0.0), Vector2d::Zero()});
  return unicycle::ReferenceSignal(std::move(s));
}

TEST(FeetFromSample, Examples) {
  FeetPoses f = feet_from_sample(Vector2d::Zero(), 0.0, 0.08);
  EXPECT_EQ(f.left.position, Vector2d(0.0, 0.08));
  EXPECT_EQ(f.right.position, Vector2d(0.0, -0.08));
  f = feet_from_sample(Vector2d(1.0, 1.0), kPi / 2, 0.08);
  EXPECT_NEAR((f.left.position - Vector2d(0.92, 1.0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((f.right.position - Vector2d(1.08, 1.0)).norm(), 0.0, 1e-15);
  EXPECT_EQ(f.left.yaw, kPi / 2);
  f = feet_from_sample(Vector2d(0.3, 0.1), 0.3, 0.08);
  const Vector2d expected = Vector2d(0.3, 0.1) + Vector2d(-std::sin(0.3) * 0.08, std::cos(0.3) * 0.08);
  EXPECT_NEAR((f.left.position - expected).norm(), 0.0, 1e-15);
}

TEST(StepCost, Examples) {
  EXPECT_NEAR(step_cost(2.0, Vector2d(0.1, 0.0), {1.0, 1.0}), 0.26, 1e-15);
  EXPECT_NEAR(step_cost(0.7, Vector2d(0.14, 0.0), {0.0, 1.0}), 0.0196, 1e-15);
  EXPECT_NEAR(step_cost(1.25, Vector2d(0.3, 0.0), {1.0, 0.0}), 0.64, 1e-15);
  EXPECT_THROW(step_cost(0.0, Vector2d::Zero(), {}), DomainError);
}

TEST(Constraints, Validation) {
  StepConstraints c;
  c.t_min = 6.0;
  EXPECT_THROW(c.validate(), ConfigError);
  CostWeights w{0.0, 0.0};
  EXPECT_THROW(w.validate(), ConfigError);
  PlannerConfig cfg;
  cfg.switch_ratio = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(PlanFootsteps, StationaryPathNeedsNoSteps) {
  PlannerConfig cfg = walking_config();
  const auto plan = plan_walk(cfg, unicycle::ReferenceSignal::constant(Vector2d(0.2, 0.0)), standing_feet(), 0.0);
  EXPECT_TRUE(plan.steps.empty());
  EXPECT_FALSE(plan.horizon_exhausted);
}

TEST(PlanFootsteps, StraightWalkSatisfiesConstraints) {
  PlannerConfig cfg = walking_config();
  cfg.limits.v_max = 0.112;
  cfg.gain = Eigen::Matrix2d::Identity();
  cfg.horizon = 20.0;
  const auto plan = plan_walk(cfg, straight_reference(0.112, 12.0), standing_feet(), 0.0);
  ASSERT_GE(plan.steps.size(), 6u);
  EXPECT_TRUE(audit_steps(plan.initial, plan.t_prev, plan.steps, cfg.constraints).empty());
  const auto audit = testing::audit_plan(plan, cfg.constraints, cfg.weights);
  EXPECT_EQ(audit.constraint_violations, 0);
  EXPECT_EQ(audit.suboptimal_choices, 0) << (audit.messages.empty() ? "" : audit.messages.front());
  // Ends at rest on the final pose.
  EXPECT_FALSE(plan.horizon_exhausted);
}

TEST(PlanFootsteps, LengthWeightShortensSteps) {
  auto mean_length = [](const FootstepPlan& p) {
    double sum = 0.0;
    for (std::size_t k = 1; k < p.steps.size(); ++k) sum += std::abs(p.steps[k].position.x() - p.steps[k - 1].position.x());
    return sum / static_cast<double>(p.steps.size() - 1);
  };
  PlannerConfig cfg = walking_config();
  cfg.horizon = 14.0;
  const auto ref = straight_reference(0.08, 10.0);
  cfg.weights = {1.0, 1e4};
  const auto shortp = plan_walk(cfg, ref, standing_feet(), 0.0);
  cfg.weights = {1.0, 1e-6};
  const auto longp = plan_walk(cfg, ref, standing_feet(), 0.0);
  ASSERT_GE(shortp.steps.size(), 3u);
  ASSERT_GE(longp.steps.size(), 3u);
  EXPECT_LT(mean_length(shortp), mean_length(longp));
  for (const auto* p : {&shortp, &longp}) {
    const auto audit = testing::audit_plan(*p, cfg.constraints, p == &shortp ? CostWeights{1.0, 1e4} : CostWeights{1.0, 1e-6});
    EXPECT_EQ(audit.constraint_violations, 0);
    EXPECT_EQ(audit.suboptimal_choices, 0);
  }
}

TEST(PlanFootsteps, RandomReferencesAreFeasibleAndOptimal) {
  std::mt19937_64 rng(99);
  PlannerConfig cfg = walking_config();
  for (int trial = 0; trial < 25; ++trial) {
    const auto ref = testing::random_reference(rng, Vector2d(0.2, 0.0), 0.0, 8.0, 0.1);
    const auto plan = plan_walk(cfg, ref, standing_feet(), 0.0);
    const auto audit = testing::audit_plan(plan, cfg.constraints, cfg.weights);
    EXPECT_EQ(audit.constraint_violations, 0) << "trial " << trial;
    EXPECT_EQ(audit.suboptimal_choices, 0) << "trial " << trial;
  }
}

TEST(PlanFootsteps, ShortPathReportsExhaustedHorizon) {
  PlannerConfig cfg = walking_config();
  cfg.horizon = 1.0;  // shorter than t_min
  const auto plan = plan_walk(cfg, straight_reference(0.1, 5.0), standing_feet(), 0.0);
  EXPECT_TRUE(plan.steps.empty());
  EXPECT_TRUE(plan.horizon_exhausted);
}

TEST(PlanFootsteps, InfeasibleWindowNamesTheBound) {
  // Reference far ahead: every candidate in the full window is too long.
  unicycle::DiscretizedPath path;
  path.dt = 0.1;
  for (int k = 0; k <= 80; ++k) path.samples.push_back({k, Vector2d(5.0, 0.0), 0.0});
  InitialFeet init;
  init.feet = standing_feet();
  try {
    plan_footsteps(path, StepConstraints{}, CostWeights{}, init);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("d_max"), std::string::npos) << e.what();
  }
}

TEST(PlanFootsteps, RejectsCrossedInitialFeet) {
  unicycle::DiscretizedPath path;
  path.samples.push_back({0, Vector2d::Zero(), 0.0});
  InitialFeet init;
  init.feet = standing_feet();
  std::swap(init.feet.left, init.feet.right);
  EXPECT_THROW(plan_footsteps(path, StepConstraints{}, CostWeights{}, init), DomainError);
}

FootstepPlan two_step_plan() {
  FootstepPlan p;
  p.t0 = 0.0;
  p.t_prev = 0.0;
  p.initial = standing_feet();
  p.path.dt = 0.001;
  p.steps.push_back({Side::Left, Vector2d(0.14, 0.045), 0.0, 2.0});
  p.steps.push_back({Side::Right, Vector2d(0.14, -0.045), 0.0, 4.0});
  return p;
}

TEST(GaitTimeline, TwoStepsScaledDoubleSupport) {
  const FootstepPlan p = two_step_plan();
  const GaitTimeline tl = build_gait_timeline(p, 0.52);
  // Only the second double support is a full one: [2, 2 + 0.52 * 2].
  ASSERT_EQ(tl.double_support.size(), 1u);
  EXPECT_NEAR(tl.double_support[0].first, 2.0, 1e-12);
  EXPECT_NEAR(tl.double_support[0].second, 3.04, 1e-12);
  ASSERT_EQ(tl.merge_points.size(), 3u);
  EXPECT_EQ(tl.merge_points.front(), 0.0);
  EXPECT_NEAR(tl.merge_points[1], 2.52, 1e-9);
  EXPECT_NEAR(tl.t_end, 4.0 + 0.52, 1e-12);
  // The first switch lasts half of its nominal duration.
  EXPECT_EQ(tl.phase(Side::Left, 0.51), Phase::SwitchOut);
  EXPECT_EQ(tl.phase(Side::Left, 0.53), Phase::Swing);
  for (int i = 0; i <= 6000; ++i) {
    const double t = i * 1e-3;
    ASSERT_TRUE(tl.in_contact(Side::Left, t) || tl.in_contact(Side::Right, t)) << t;
  }
  for (double mp : tl.merge_points)
    EXPECT_TRUE(tl.in_contact(Side::Left, mp) && tl.in_contact(Side::Right, mp));
}

TEST(GaitTimeline, EmptyPlanStandsForever) {
  FootstepPlan p;
  p.t0 = 1.5;
  p.initial = standing_feet();
  const GaitTimeline tl = build_gait_timeline(p, 0.52);
  EXPECT_EQ(tl.phase(Side::Left, 100.0), Phase::Stance);
  EXPECT_EQ(tl.phase(Side::Right, 1.5), Phase::Stance);
  ASSERT_EQ(tl.merge_points.size(), 1u);
  EXPECT_EQ(tl.merge_points[0], 1.5);
  EXPECT_THROW(build_gait_timeline(p, 1.2), ConfigError);
}

void expect_regular_cycle(const GaitTimeline& tl) {
  for (Side s : {Side::Left, Side::Right}) {
    const auto& v = tl.phases[static_cast<std::size_t>(s)];
    std::size_t begin = 0, end = v.size();
    while (begin < end && v[begin].phase == Phase::Stance && begin == 0) ++begin;
    if (end > begin && v[end - 1].phase == Phase::Stance) --end;
    for (std::size_t i = begin + 1; i < end; ++i) {
      const Phase a = v[i - 1].phase, b = v[i].phase;
      const bool ok = (a == Phase::SwitchIn && b == Phase::Stance) || (a == Phase::Stance && b == Phase::SwitchOut) ||
                      (a == Phase::SwitchOut && b == Phase::Swing) || (a == Phase::Swing && b == Phase::SwitchIn);
      EXPECT_TRUE(ok) << to_string(a) << " -> " << to_string(b);
    }
  }
}

TEST(GaitTimeline, PhasesFollowTheRegularCycle) {
  PlannerConfig cfg = walking_config();
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto plan = plan_walk(cfg, testing::random_reference(rng, Vector2d(0.2, 0.0), 0.0, 8.0, 0.1),
                                standing_feet(), 0.0);
    expect_regular_cycle(build_gait_timeline(plan, cfg.switch_ratio));
  }
}

TEST(FeetReference, SwingBoundariesApexAndRest) {
  const FootstepPlan p = two_step_plan();
  const GaitTimeline tl = build_gait_timeline(p, 0.52);
  const FeetReference feet = interpolate_feet(tl, p, 0.02);
  const double a = 0.52, b = 2.0;  // left swing
  const FootState start = feet.at(Side::Left, a);
  const FootState end = feet.at(Side::Left, b);
  EXPECT_NEAR((start.position - Eigen::Vector3d(0.0, 0.045, 0.0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((end.position - Eigen::Vector3d(0.14, 0.045, 0.0)).norm(), 0.0, 1e-12);
  EXPECT_LE(feet.at(Side::Left, a + 1e-9).velocity.norm(), 1e-10 + 1e-6);
  EXPECT_LE(feet.at(Side::Left, b - 1e-12).velocity.norm(), 1e-10);
  EXPECT_LE(end.velocity.norm(), 1e-10);
  EXPECT_NEAR(feet.at(Side::Left, 0.5 * (a + b)).position.z(), 0.02, 1e-15);
  // Stance foot does not move.
  for (double t = 0.0; t < 2.0; t += 0.01) {
    const FootState r = feet.at(Side::Right, t);
    EXPECT_EQ(r.velocity.norm(), 0.0);
    EXPECT_EQ(r.position.z(), 0.0);
  }
  // Finite differences agree with the analytic derivatives inside the swing.
  for (double t = 0.7; t < 1.9; t += 0.1) {
    const double h = 1e-6;
    const Eigen::Vector3d fd = (feet.at(Side::Left, t + h).position - feet.at(Side::Left, t - h).position) / (2 * h);
    EXPECT_LE((fd - feet.at(Side::Left, t).velocity).norm(), 1e-6);
    const Eigen::Vector3d fa = (feet.at(Side::Left, t + h).velocity - feet.at(Side::Left, t - h).velocity) / (2 * h);
    if (std::abs(t - 1.26) > 0.01) EXPECT_LE((fa - feet.at(Side::Left, t).acceleration).norm(), 1e-4) << t;
  }
}

TEST(FeetReference, YawTakesTheShortArc) {
  FootstepPlan p;
  p.initial = {{Vector2d(0.0, 0.045), 3.0}, {Vector2d(0.0, -0.045), 3.0}};
  p.path.dt = 0.01;
  p.steps.push_back({Side::Left, Vector2d(0.0, 0.045), -3.0, 2.0});
  const GaitTimeline tl = build_gait_timeline(p, 0.5);
  const FeetReference feet = interpolate_feet(tl, p);
  // Unwrapped oracle: 3.0 -> 2 pi - 3.0.
  const double target = 2.0 * kPi - 3.0;
  for (double t = 0.5; t <= 2.0; t += 0.05) {
    const double yaw = feet.at(Side::Left, t).yaw;
    EXPECT_GE(std::abs(yaw), 3.0 - 1e-12) << t;  // never passes through 0
    const double tau = (t - 0.5) / 1.5;
    const double s = tau * tau * tau * (10 - 15 * tau + 6 * tau * tau);
    EXPECT_NEAR(std::cos(yaw), std::cos(3.0 + s * (target - 3.0)), 1e-12);
    EXPECT_NEAR(std::sin(yaw), std::sin(3.0 + s * (target - 3.0)), 1e-12);
  }
}

TEST(WeightDistribution, Examples) {
  const FootstepPlan p = two_step_plan();
  const GaitTimeline tl = build_gait_timeline(p, 0.52);
  const WeightDistribution w = weight_distribution(tl);
  EXPECT_DOUBLE_EQ(w.at(0.0).left, 0.5);
  EXPECT_DOUBLE_EQ(w.at(10.0).right, 0.5);
  EXPECT_DOUBLE_EQ(w.at(1.0).left, 0.0);  // left swing
  EXPECT_DOUBLE_EQ(w.at(1.0).right, 1.0);
  EXPECT_NEAR(w.at(2.52).right, 0.5, 1e-12);  // mid switch-out of the right foot
  EXPECT_NEAR(w.at(3.04).right, 0.0, 1e-12);
  for (int i = 0; i <= 6000; ++i) {
    const LoadShare s = w.at(i * 1e-3);
    ASSERT_NEAR(s.left + s.right, 1.0, 1e-12);
    ASSERT_GE(s.left, 0.0);
    ASSERT_LE(s.left, 1.0);
  }
}

bool inside_hull_with_margin(const Vector2d& z, const std::vector<Pose2>& feet, double lx, double ly, double margin) {
  // Brute force: z is inside the convex hull shrunk by margin iff for every
  // direction the support function exceeds the projection by margin.
  for (int k = 0; k < 720; ++k) {
    const double a = k * kPi / 360.0;
    const Vector2d n(std::cos(a), std::sin(a));
    double support = -1e9;
    for (const auto& f : feet)
      for (int sx : {-1, 1})
        for (int sy : {-1, 1}) support = std::max(support, n.dot(f.position + rot2(f.yaw) * Vector2d(sx * lx, sy * ly)));
    if (n.dot(z) > support - margin + 1e-12) return false;
  }
  return true;
}

TEST(ZmpReference, ExamplesAndSupportPolygon) {
  FootstepPlan standing;
  standing.initial = standing_feet(Vector2d::Zero(), 0.0, 0.08);
  const GaitTimeline tl0 = build_gait_timeline(standing, 0.52);
  const ZmpReference z0 = zmp_reference(tl0, interpolate_feet(tl0, standing));
  EXPECT_NEAR(z0.at(3.0).norm(), 0.0, 1e-15);

  FootstepPlan p;
  p.initial = standing_feet(Vector2d::Zero(), 0.0, 0.08);
  p.path.dt = 0.01;
  p.steps.push_back({Side::Left, Vector2d(0.14, 0.08), 0.0, 1.25});
  p.steps.push_back({Side::Right, Vector2d(0.28, -0.08), 0.0, 2.5});
  const GaitTimeline tl = build_gait_timeline(p, 0.52);
  const FeetReference feet = interpolate_feet(tl, p);
  const ZmpReference z = zmp_reference(tl, feet);
  // Left single support during the right swing.
  EXPECT_NEAR((z.at(2.2) - Vector2d(0.14, 0.08)).norm(), 0.0, 1e-15);

  PlannerConfig cfg = walking_config();
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const auto plan = plan_walk(cfg, testing::random_reference(rng, Vector2d(0.2, 0.0), 0.0, 8.0, 0.1),
                                standing_feet(), 0.0);
    const auto g = make_gait(plan, cfg);
    const double t_end = g.timeline.t_end + 0.5;
    Vector2d prev = g.zmp.at(0.0);
    for (double t = 0.0; t <= t_end; t += 1e-3) {
      std::vector<Pose2> contact;
      for (Side s : {Side::Left, Side::Right})
        if (g.timeline.in_contact(s, t)) contact.push_back(g.feet.at(s, t).planar());
      const Vector2d zt = g.zmp.at(t);
      ASSERT_TRUE(inside_hull_with_margin(zt, contact, 0.08, 0.035, 0.005)) << "t=" << t;
      // No teleports: a half-cosine blend peaks at pi/2 times the mean rate.
      const double min_blend = 0.5 * cfg.switch_ratio * cfg.constraints.t_min;
      ASSERT_LE((zt - prev).norm(), 0.5 * kPi * 0.2 * 1e-3 / min_blend) << "t=" << t;
      prev = zt;
    }
  }
}

TEST(MergePlan, UnchangedReferenceReproducesRemainingSteps) {
  // The horizon is long enough for both plans to come to rest, so the
  // later horizon end of the replanned path does not change the tail.
  PlannerConfig cfg = walking_config();
  cfg.gain = Eigen::Matrix2d::Identity();
  cfg.horizon = 30.0;
  const auto ref = straight_reference(0.08, 6.0);
  const auto plan = plan_walk(cfg, ref, standing_feet(), 0.0);
  ASSERT_GE(plan.steps.size(), 4u);
  const auto gait = make_gait(plan, cfg);
  const double t_now = plan.steps[1].impact_time + 0.01;
  const auto merged = merge_plan(cfg, gait, ref, gait.feet.planar(*gait.timeline.next_merge_point(t_now)), t_now);
  EXPECT_GE(merged.merge_time, t_now);
  std::vector<Footstep> tail;
  for (const auto& s : plan.steps)
    if (s.impact_time > merged.merge_time) tail.push_back(s);
  ASSERT_EQ(merged.plan.steps.size(), tail.size());
  for (std::size_t k = 0; k < tail.size(); ++k) {
    EXPECT_EQ(merged.plan.steps[k].side, tail[k].side);
    EXPECT_NEAR(merged.plan.steps[k].impact_time, tail[k].impact_time, 1e-9);
    EXPECT_NEAR((merged.plan.steps[k].position - tail[k].position).norm(), 0.0, 1e-9);
  }
  // References agree after the merge.
  const auto mg = make_gait(merged.plan, cfg);
  for (double t = merged.merge_time; t < gait.timeline.t_end; t += 0.01) {
    EXPECT_NEAR((mg.zmp.at(t) - gait.zmp.at(t)).norm(), 0.0, 1e-9) << t;
    EXPECT_NEAR((mg.feet.at(Side::Left, t).position - gait.feet.at(Side::Left, t).position).norm(), 0.0, 1e-9);
  }
}

TEST(MergePlan, MeasuredFeetOverridePlannedOnes) {
  PlannerConfig cfg = walking_config();
  const auto ref = straight_reference(0.08, 6.0);
  const auto gait = make_gait(plan_walk(cfg, ref, standing_feet(), 0.0), cfg);
  const double tm = *gait.timeline.next_merge_point(gait.plan.steps[0].impact_time);
  FeetPoses measured = gait.feet.planar(tm);
  measured.left.position.x() += 0.005;
  measured.right.position.y() -= 0.005;
  const auto merged = merge_plan(cfg, gait, ref, measured, tm - 0.005);
  EXPECT_EQ(merged.merge_time, tm);
  const auto mg = make_gait(merged.plan, cfg);
  EXPECT_EQ(mg.feet.planar(tm).left.position, measured.left.position);
  EXPECT_EQ(mg.feet.planar(tm).right.position, measured.right.position);
  EXPECT_EQ(merged.plan.initial.left.position, measured.left.position);
}

TEST(MergePlan, HeadingChangeIsContinuous) {
  PlannerConfig cfg = walking_config();
  const auto ref = straight_reference(0.08, 10.0);
  const auto gait = make_gait(plan_walk(cfg, ref, standing_feet(), 0.0), cfg);
  const double t_now = gait.plan.steps[1].impact_time;
  const double tm = *gait.timeline.next_merge_point(t_now);
  const Vector2d f = unicycle::control_point_position({gait.plan.path.state(static_cast<std::size_t>(std::round(tm / cfg.dt)))}, cfg.control_point);
  const auto turn = unicycle::ReferenceSignal::ramp(f, Vector2d(0.0, 0.08), tm, tm + 8.0);
  const auto merged = merge_plan(cfg, gait, turn, gait.feet.planar(tm), t_now);
  const auto mg = make_gait(merged.plan, cfg);
  ASSERT_FALSE(merged.plan.steps.empty());
  EXPECT_LE((mg.zmp.at(tm) - gait.zmp.at(tm)).norm(), 1e-9);
  for (Side s : {Side::Left, Side::Right}) {
    EXPECT_LE((mg.feet.at(s, tm).position - gait.feet.at(s, tm).position).norm(), 1e-9);
    EXPECT_LE(std::abs(angle_diff(mg.feet.at(s, tm).yaw, gait.feet.at(s, tm).yaw)), 1e-9);
  }
  EXPECT_LE(std::abs(mg.weights.at(tm).left - gait.weights.at(tm).left), 1e-9);
  EXPECT_TRUE(audit_steps(merged.plan.initial, merged.plan.t_prev, merged.plan.steps, cfg.constraints).empty());
}

TEST(MergePlan, StandingPlanMergesAnyTime) {
  PlannerConfig cfg = walking_config();
  const auto ref = unicycle::ReferenceSignal::constant(Vector2d(0.2, 0.0));
  const auto gait = make_gait(plan_walk(cfg, ref, standing_feet(), 0.0), cfg);
  const auto merged = merge_plan(cfg, gait, straight_reference(0.05, 4.0), standing_feet(), 0.37);
  EXPECT_DOUBLE_EQ(merged.merge_time, 0.37);
  EXPECT_TRUE(merged.plan.standing_start);
}

TEST(MergePlan, NoMergePointLeftIsAnError) {
  PlannerConfig cfg = walking_config();
  const auto ref = straight_reference(0.08, 6.0);
  auto gait = make_gait(plan_walk(cfg, ref, standing_feet(), 0.0), cfg);
  gait.timeline.merge_points = {0.0};
  gait.timeline.t_end = 1e9;
  EXPECT_THROW(merge_plan(cfg, gait, ref, standing_feet(), 1.0), DomainError);
}

TEST(Export, CsvAndJson) {
  PlannerConfig cfg = walking_config();
  const auto gait = make_gait(plan_walk(cfg, straight_reference(0.08, 4.0), standing_feet(), 0.0), cfg);
  std::ostringstream csv;
  write_plan_csv(csv, gait, 0.0, 1.0, 0.1);
  std::istringstream in(csv.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,phase_l,phase_r,lx,ly,lz,lyaw,rx,ry,rz,ryaw,zmpx,zmpy,Fl,Fr");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 11);
  std::ostringstream js;
  write_footsteps_json(js, gait.plan.steps);
  const auto j = nlohmann::json::parse(js.str());
  ASSERT_EQ(j.size(), gait.plan.steps.size());
  EXPECT_EQ(j[0]["side"], to_string(gait.plan.steps[0].side));
  EXPECT_DOUBLE_EQ(j[0]["t_imp"].get<double>(), gait.plan.steps[0].impact_time);
}

}  // namespace
}  // namespace walkstack::planner
