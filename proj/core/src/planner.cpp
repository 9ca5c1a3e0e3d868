// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkstack/planner.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace walkstack::planner {

using Eigen::Vector2d;
using Eigen::Vector3d;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTimeEps = 1e-9;
constexpr double kRestPosTol = 5e-3;
constexpr double kRestYawTol = 2e-2;

int idx(Side s) { return static_cast<int>(s); }

// Half-cosine blend from 1 (s = 0) to 0 (s = 1).
double half_cosine(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return 0.5 * (1.0 + std::cos(kPi * s));
}

struct Quintic {
  double p, dp, ddp;
};

Quintic quintic(double tau) {
  tau = std::clamp(tau, 0.0, 1.0);
  const double t2 = tau * tau, t3 = t2 * tau;
  return {t3 * (10.0 - 15.0 * tau + 6.0 * t2), 30.0 * t2 * (1.0 - 2.0 * tau + t2), 60.0 * tau - 180.0 * t2 + 120.0 * t3};
}

bool at_rest(const FeetPoses& feet, const FeetPoses& ideal) {
  for (Side s : {Side::Left, Side::Right}) {
    if ((feet[s].position - ideal[s].position).norm() > kRestPosTol) return false;
    if (std::abs(angle_diff(feet[s].yaw, ideal[s].yaw)) > kRestYawTol) return false;
  }
  return true;
}

double distance_to_ideal(const Pose2& foot, const Pose2& ideal, double m) {
  return (foot.position - ideal.position).norm() + m * std::abs(angle_diff(foot.yaw, ideal.yaw));
}

enum Violation { kDistance = 0, kYaw, kClearance, kNumViolations };

}  // namespace

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::SwitchIn: return "switch_in";
    case Phase::Stance: return "stance";
    case Phase::SwitchOut: return "switch_out";
    case Phase::Swing: return "swing";
  }
  return "unknown";
}

void StepConstraints::validate() const {
  if (!(t_min > 0.0 && t_min < t_max)) throw ConfigError("step constraints: need 0 < t_min < t_max");
  if (!(d_max > 0.0)) throw ConfigError("step constraints: d_max must be positive");
  if (!(theta_max > 0.0 && theta_max < kPi)) throw ConfigError("step constraints: theta_max must lie in (0, pi)");
  if (!(w_min > 0.0)) throw ConfigError("step constraints: w_min must be positive");
  if (!(m_half_width > 0.0)) throw ConfigError("step constraints: m_half_width must be positive");
}

void CostWeights::validate() const {
  if (!(k_t >= 0.0 && k_x >= 0.0)) throw ConfigError("cost weights must be non-negative");
  if (k_t == 0.0 && k_x == 0.0) throw ConfigError("cost weights k_t and k_x cannot both be zero");
}

FeetPoses feet_from_sample(const Vector2d& x, double theta, double m) {
  const Eigen::Matrix2d R = rot2(theta);
  return {{x + R * Vector2d(0.0, m), theta}, {x + R * Vector2d(0.0, -m), theta}};
}

Pose2 feet_midpose(const FeetPoses& feet) {
  return {0.5 * (feet.left.position + feet.right.position),
          wrap_angle(feet.right.yaw + 0.5 * angle_diff(feet.left.yaw, feet.right.yaw))};
}

double step_cost(double delta_t, const Vector2d& delta_x, const CostWeights& w) {
  if (!(delta_t > 0.0)) throw DomainError("step_cost: undefined for delta_t <= 0");
  return w.k_t / (delta_t * delta_t) + w.k_x * delta_x.squaredNorm();
}

double lateral_clearance(const FeetPoses& feet) {
  return (rot2(feet.right.yaw).transpose() * (feet.left.position - feet.right.position)).y();
}

PlanResult plan_footsteps(const unicycle::DiscretizedPath& path, const StepConstraints& c, const CostWeights& w,
                          const InitialFeet& initial, std::size_t max_steps) {
  c.validate();
  w.validate();
  if (path.samples.empty()) throw DomainError("plan_footsteps: empty path");
  if (lateral_clearance(initial.feet) < c.w_min - kTimeEps)
    throw DomainError("plan_footsteps: initial feet violate the minimum lateral clearance w_min");
  if (std::abs(angle_diff(initial.feet.left.yaw, initial.feet.right.yaw)) > c.theta_max + kTimeEps)
    throw DomainError("plan_footsteps: initial feet violate the relative yaw bound theta_max");

  const double m = c.m_half_width;
  const std::size_t last = path.samples.size() - 1;
  const double t_last = path.time(last);
  const FeetPoses final_ideal = feet_from_sample(path.samples[last].x, path.samples[last].theta, m);

  PlanResult out;
  FeetPoses feet = initial.feet;
  double t_prev = initial.last_impact;
  Side swing = Side::Left;
  if (initial.swing) {
    swing = *initial.swing;
  } else {
    const double probe = std::min(t_prev + c.t_min, t_last);
    const auto k = static_cast<std::size_t>(std::clamp(std::round((probe - path.t0) / path.dt), 0.0,
                                                       static_cast<double>(last)));
    const FeetPoses ideal = feet_from_sample(path.samples[k].x, path.samples[k].theta, m);
    const double dl = distance_to_ideal(feet.left, ideal.left, m);
    const double dr = distance_to_ideal(feet.right, ideal.right, m);
    swing = dr > dl + 1e-12 ? Side::Right : Side::Left;
  }

  for (std::size_t n = 0; n < max_steps; ++n) {
    if (at_rest(feet, final_ideal)) return out;
    double lo = t_prev + c.t_min;
    if (n == 0) lo = std::max(lo, initial.earliest_impact);
    const double hi = t_prev + c.t_max;
    if (lo > t_last + kTimeEps) {
      out.horizon_exhausted = true;
      return out;
    }
    const bool truncated = hi > t_last + kTimeEps;
    const Side stance = other(swing);
    const Pose2& st = feet[stance];

    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    std::array<int, kNumViolations> violations{};
    const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil((lo - path.t0) / path.dt - 1e-6)));
    for (std::size_t k = first; k <= last; ++k) {
      const double t = path.time(k);
      if (t < lo - kTimeEps) continue;
      if (t > hi + kTimeEps) break;
      const FeetPoses ideal = feet_from_sample(path.samples[k].x, path.samples[k].theta, m);
      FeetPoses cand = feet;
      cand[swing] = ideal[swing];
      const Vector2d dx = cand[swing].position - st.position;
      bool ok = true;
      if (dx.norm() > c.d_max) {
        ++violations[kDistance];
        ok = false;
      }
      if (std::abs(angle_diff(cand[swing].yaw, st.yaw)) > c.theta_max) {
        ++violations[kYaw];
        ok = false;
      }
      if (lateral_clearance(cand) < c.w_min) {
        ++violations[kClearance];
        ok = false;
      }
      if (!ok) continue;
      const double cost = step_cost(t - t_prev, dx, w);
      if (cost < best_cost) {
        best_cost = cost;
        best = k;
      }
    }
    if (!std::isfinite(best_cost)) {
      if (truncated) {
        out.horizon_exhausted = true;
        return out;
      }
      std::ostringstream msg;
      msg << "plan_footsteps: no feasible impact time for step " << out.steps.size() + 1 << " (" << to_string(swing)
          << " foot, window [" << lo << ", " << hi << "] s): ";
      const char* names[] = {"d_max", "theta_max", "w_min"};
      bool sep = false;
      for (int v = 0; v < kNumViolations; ++v) {
        if (violations[static_cast<std::size_t>(v)] == 0) continue;
        msg << (sep ? ", " : "") << names[v] << " violated by " << violations[static_cast<std::size_t>(v)]
            << " candidates";
        sep = true;
      }
      throw InfeasibleError(msg.str());
    }
    const FeetPoses ideal = feet_from_sample(path.samples[best].x, path.samples[best].theta, m);
    Footstep step;
    step.side = swing;
    step.position = ideal[swing].position;
    step.theta = ideal[swing].yaw;
    step.impact_time = path.time(best);
    out.steps.push_back(step);
    feet[swing] = ideal[swing];
    t_prev = step.impact_time;
    swing = other(swing);
  }
  out.horizon_exhausted = !at_rest(feet, final_ideal);
  return out;
}

// ---------------------------------------------------------------------------
// Timeline

Phase GaitTimeline::phase(Side s, double t) const {
  const auto& v = phases[static_cast<std::size_t>(idx(s))];
  if (v.empty()) return Phase::Stance;
  if (t < v.front().start) return v.front().phase;
  for (const auto& p : v)
    if (t >= p.start && t < p.end) return p.phase;
  return v.back().phase;
}

std::optional<double> GaitTimeline::next_merge_point(double t) const {
  for (double mp : merge_points)
    if (mp >= t - kTimeEps) return mp;
  // Standing after the end: any instant is a valid merge point.
  if (t >= t_end) return t;
  return std::nullopt;
}

namespace {

void push_phase(std::vector<PhaseInterval>& v, Phase p, double start, double end) {
  if (!(end > start)) return;
  if (!v.empty() && v.back().phase == p && std::abs(v.back().end - start) < kTimeEps) {
    v.back().end = end;
    return;
  }
  v.push_back({p, start, end});
}

}  // namespace

GaitTimeline build_gait_timeline(const FootstepPlan& plan, double r) {
  if (!(r > 0.0 && r < 1.0)) throw ConfigError("switch_ratio must lie in (0, 1)");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  GaitTimeline tl;
  tl.t0 = plan.t0;
  const double grid = plan.path.dt > 0.0 ? plan.path.dt : 0.01;
  auto& L = tl.phases[0];
  auto& R = tl.phases[1];
  auto& P = tl.phases;
  tl.merge_points.push_back(plan.t0);

  const auto& steps = plan.steps;
  if (steps.empty()) {
    if (plan.standing_start || !plan.unloading) {
      push_phase(L, Phase::Stance, plan.t0, kInf);
      push_phase(R, Phase::Stance, plan.t0, kInf);
      tl.t_end = plan.t0;
      return tl;
    }
    // Inside a double support with nothing left to do: settle on both feet.
    const Side out = *plan.unloading;
    const double dur = std::max(0.05, plan.t0 - plan.t_prev);
    const double end = plan.t0 + dur;
    tl.ramps.push_back({plan.t0, end, plan.t0, end, out, half_cosine(plan.switch_progress), 0.5});
    push_phase(P[static_cast<std::size_t>(idx(other(out)))], Phase::SwitchIn, plan.t0, end);
    push_phase(P[static_cast<std::size_t>(idx(out))], Phase::Stance, plan.t0, end);
    push_phase(L, Phase::Stance, end, kInf);
    push_phase(R, Phase::Stance, end, kInf);
    tl.t_end = end;
    tl.merge_points.push_back(end);
    return tl;
  }

  double t_before = plan.t_prev;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const Side s = steps[k].side;
    const Side o = other(s);
    const double tk = steps[k].impact_time;
    const double dtk = tk - t_before;
    if (!(dtk > 0.0)) throw DomainError("build_gait_timeline: impact times must be strictly increasing");
    double ds_start = t_before;
    double ds_end = t_before + r * dtk;
    if (k == 0 && plan.standing_start) {
      ds_start = plan.t0;
      ds_end = plan.t0 + 0.5 * r * dtk;
      tl.ramps.push_back({ds_start, ds_end, ds_start, ds_end, s, 0.5, 0.0});
    } else if (k == 0) {
      ds_start = plan.t0;
      if (!(ds_end > plan.t0)) throw DomainError("build_gait_timeline: first switch ends before the plan starts");
      const double sp = std::clamp(plan.switch_progress, 0.0, 0.999);
      const double ramp_start = (plan.t0 - sp * ds_end) / (1.0 - sp);
      tl.ramps.push_back({ds_start, ds_end, ramp_start, ds_end, s, 1.0, 0.0});
    } else {
      tl.ramps.push_back({ds_start, ds_end, ds_start, ds_end, s, 1.0, 0.0});
      tl.double_support.emplace_back(ds_start, ds_end);
      const double mid = 0.5 * (ds_start + ds_end);
      double snapped = plan.t0 + std::round((mid - plan.t0) / grid) * grid;
      if (!(snapped > ds_start && snapped < ds_end)) snapped = mid;
      tl.merge_points.push_back(snapped);
    }
    push_phase(P[static_cast<std::size_t>(idx(s))], Phase::SwitchOut, ds_start, ds_end);
    push_phase(P[static_cast<std::size_t>(idx(o))], Phase::SwitchIn, ds_start, ds_end);
    push_phase(P[static_cast<std::size_t>(idx(s))], Phase::Swing, ds_end, tk);
    push_phase(P[static_cast<std::size_t>(idx(o))], Phase::Stance, ds_end, tk);
    t_before = tk;
  }
  const Side landed = steps.back().side;
  const double last_dt = steps.size() >= 2 ? steps.back().impact_time - steps[steps.size() - 2].impact_time
                                           : steps.back().impact_time - plan.t_prev;
  const double end = t_before + 0.5 * r * last_dt;
  tl.ramps.push_back({t_before, end, t_before, end, other(landed), 1.0, 0.5});
  push_phase(P[static_cast<std::size_t>(idx(landed))], Phase::SwitchIn, t_before, end);
  push_phase(P[static_cast<std::size_t>(idx(other(landed)))], Phase::Stance, t_before, end);
  push_phase(L, Phase::Stance, end, kInf);
  push_phase(R, Phase::Stance, end, kInf);
  tl.t_end = end;
  tl.merge_points.push_back(end);
  return tl;
}

// ---------------------------------------------------------------------------
// Feet, load share and ZMP

FeetReference interpolate_feet(const GaitTimeline& tl, const FootstepPlan& plan, double h_apex) {
  if (!(h_apex >= 0.0)) throw ConfigError("h_apex must be non-negative");
  std::array<std::vector<FeetReference::Segment>, 2> segs;
  for (Side s : {Side::Left, Side::Right}) {
    auto& out = segs[static_cast<std::size_t>(idx(s))];
    std::vector<std::pair<double, double>> swings;
    for (const auto& p : tl.phases[static_cast<std::size_t>(idx(s))])
      if (p.phase == Phase::Swing) swings.emplace_back(p.start, p.end);
    Pose2 current = plan.initial[s];
    double t = -std::numeric_limits<double>::infinity();
    std::size_t j = 0;
    for (const auto& step : plan.steps) {
      if (step.side != s) continue;
      if (j >= swings.size()) throw DomainError("interpolate_feet: timeline and steps disagree");
      const auto [a, b] = swings[j++];
      out.push_back({t, a, current, current, false});
      out.push_back({a, b, current, step.pose(), true});
      current = step.pose();
      t = b;
    }
    out.push_back({t, std::numeric_limits<double>::infinity(), current, current, false});
  }
  return FeetReference(std::move(segs), h_apex);
}

FootState FeetReference::at(Side s, double t) const {
  const auto& v = segments_[static_cast<std::size_t>(idx(s))];
  FootState fs;
  if (v.empty()) return fs;
  const Segment* seg = &v.back();
  for (const auto& g : v) {
    if (t < g.end) {
      seg = &g;
      break;
    }
  }
  if (!seg->swing || t <= seg->start) {
    const Pose2& p = seg->swing ? seg->from : seg->to;
    fs.position << p.position, 0.0;
    fs.yaw = p.yaw;
    return fs;
  }
  const double T = seg->end - seg->start;
  const double tau = (t - seg->start) / T;
  const Quintic q = quintic(tau);
  const Vector2d dp = seg->to.position - seg->from.position;
  const double dyaw = angle_diff(seg->to.yaw, seg->from.yaw);
  fs.position.head<2>() = seg->from.position + q.p * dp;
  fs.velocity.head<2>() = q.dp / T * dp;
  fs.acceleration.head<2>() = q.ddp / (T * T) * dp;
  fs.yaw = wrap_angle(seg->from.yaw + q.p * dyaw);
  fs.yaw_rate = q.dp / T * dyaw;
  fs.yaw_acc = q.ddp / (T * T) * dyaw;
  const double sigma = tau <= 0.5 ? 2.0 * tau : 2.0 * (1.0 - tau);
  const double dir = tau <= 0.5 ? 1.0 : -1.0;
  fs.position.z() = h_apex_ * sigma * sigma * (3.0 - 2.0 * sigma);
  fs.velocity.z() = dir * h_apex_ * 6.0 * sigma * (1.0 - sigma) * 2.0 / T;
  fs.acceleration.z() = h_apex_ * (6.0 - 12.0 * sigma) * 4.0 / (T * T);
  return fs;
}

LoadShare WeightDistribution::at(double t) const {
  t = std::max(t, timeline_.t0);
  for (const auto& r : timeline_.ramps) {
    if (t < r.start || t > r.end) continue;
    const double s = (t - r.ramp_start) / (r.ramp_end - r.ramp_start);
    const double f = r.f_to + (r.f_from - r.f_to) * half_cosine(s);
    return r.unloading == Side::Left ? LoadShare{f, 1.0 - f} : LoadShare{1.0 - f, f};
  }
  if (timeline_.phase(Side::Left, t) == Phase::Swing) return {0.0, 1.0};
  if (timeline_.phase(Side::Right, t) == Phase::Swing) return {1.0, 0.0};
  return {0.5, 0.5};
}

WeightDistribution weight_distribution(const GaitTimeline& timeline) { return WeightDistribution(timeline); }

Vector2d ZmpReference::at(double t) const {
  const LoadShare w = weights_.at(t);
  Vector2d z = Vector2d::Zero();
  for (Side s : {Side::Left, Side::Right}) {
    const double f = w[s];
    if (f == 0.0) continue;
    const FootState fs = feet_.at(s, t);
    z += f * (fs.position.head<2>() + rot2(fs.yaw) * offsets_[static_cast<std::size_t>(idx(s))]);
  }
  return z;
}

ZmpReference zmp_reference(const GaitTimeline& timeline, const FeetReference& feet,
                           const std::array<Vector2d, 2>& offsets) {
  return ZmpReference(feet, weight_distribution(timeline), offsets);
}

// ---------------------------------------------------------------------------
// Planning entry points

void PlannerConfig::validate() const {
  constraints.validate();
  weights.validate();
  unicycle::validate_gain(gain);
  if (!(horizon > 0.0) || !(dt > 0.0)) throw ConfigError("planner: horizon and dt must be positive");
  if (!(switch_ratio > 0.0 && switch_ratio < 1.0)) throw ConfigError("planner: switch_ratio must lie in (0, 1)");
  if (!(h_apex >= 0.0)) throw ConfigError("planner: h_apex must be non-negative");
  if (!(limits.v_max > 0.0 && limits.omega_max > 0.0)) throw ConfigError("planner: unicycle limits must be positive");
  if (!(min_switch_remaining >= 0.0)) throw ConfigError("planner: min_switch_remaining must be non-negative");
}

GaitReference make_gait(const FootstepPlan& plan, const PlannerConfig& config) {
  GaitReference g;
  g.plan = plan;
  g.timeline = build_gait_timeline(plan, config.switch_ratio);
  g.feet = interpolate_feet(g.timeline, plan, config.h_apex);
  g.weights = weight_distribution(g.timeline);
  g.zmp = zmp_reference(g.timeline, g.feet, config.zmp_offsets);
  return g;
}

namespace {

unicycle::DiscretizedPath simulate(const PlannerConfig& cfg, const unicycle::ReferenceSignal& ref,
                                   const unicycle::State& start, double t0) {
  unicycle::SimulationOptions opt;
  opt.limits = cfg.limits;
  opt.t0 = t0;
  return unicycle::simulate_closed_loop(start, cfg.control_point, cfg.gain, ref, cfg.horizon, cfg.dt, opt);
}

}  // namespace

FootstepPlan plan_walk(const PlannerConfig& config, const unicycle::ReferenceSignal& reference,
                       const FeetPoses& feet, double t0) {
  config.validate();
  const Pose2 mid = feet_midpose(feet);
  FootstepPlan plan;
  plan.t0 = t0;
  plan.t_prev = t0;
  plan.standing_start = true;
  plan.initial = feet;
  plan.path = simulate(config, reference, {mid.position, mid.yaw}, t0);
  InitialFeet init;
  init.feet = feet;
  init.last_impact = t0;
  PlanResult r = plan_footsteps(plan.path, config.constraints, config.weights, init, config.max_steps);
  plan.steps = std::move(r.steps);
  plan.horizon_exhausted = r.horizon_exhausted;
  return plan;
}

MergeResult merge_plan(const PlannerConfig& config, const GaitReference& active,
                       const unicycle::ReferenceSignal& reference, const FeetPoses& measured, double t_now) {
  config.validate();
  const auto& tl = active.timeline;
  const auto& old = active.plan;
  const auto tm_opt = tl.next_merge_point(t_now);
  if (!tm_opt)
    throw DomainError("merge_plan: no merge point at or after t = " + std::to_string(t_now) +
                      "; wait for the next double support");
  const double tm = *tm_opt;

  // Unicycle state: old path at tm, moved onto the measured feet.
  unicycle::State start;
  if (!old.path.samples.empty()) {
    const double kf = (tm - old.path.t0) / old.path.dt;
    const auto k = static_cast<std::size_t>(
        std::clamp(std::round(kf), 0.0, static_cast<double>(old.path.samples.size() - 1)));
    start = old.path.state(k);
  } else {
    const Pose2 mid = feet_midpose(active.feet.planar(tm));
    start = {mid.position, mid.yaw};
  }
  const Pose2 planned_mid = feet_midpose(active.feet.planar(tm));
  const Pose2 measured_mid = feet_midpose(measured);
  const double dyaw = angle_diff(measured_mid.yaw, planned_mid.yaw);
  start.x = rot2(dyaw) * (start.x - planned_mid.position) + measured_mid.position;
  start.theta = wrap_angle(start.theta + dyaw);

  FootstepPlan plan;
  plan.t0 = tm;
  plan.initial = measured;
  plan.path = simulate(config, reference, start, tm);

  InitialFeet init;
  init.feet = measured;

  // Locate the weight transfer in progress at tm, if any.
  const WeightRamp* ramp = nullptr;
  for (const auto& r : tl.ramps)
    if (tm > r.start + kTimeEps && tm < r.end - kTimeEps && r.f_to == 0.0) ramp = &r;
  bool standing = tm >= tl.t_end - kTimeEps || old.steps.empty();
  if (!standing && std::abs(tm - old.t0) < kTimeEps && old.standing_start) standing = true;

  if (standing) {
    plan.t_prev = tm;
    plan.standing_start = true;
    init.last_impact = tm;
  } else if (std::abs(tm - old.t0) < kTimeEps) {
    plan.t_prev = old.t_prev;
    plan.standing_start = false;
    plan.switch_progress = old.switch_progress;
    plan.unloading = old.unloading;
    init.last_impact = old.t_prev;
    init.swing = old.steps.front().side;
  } else {
    if (!ramp) throw DomainError("merge_plan: merge point is not inside a double support");
    double t_prev = old.t_prev;
    for (const auto& s : old.steps)
      if (s.impact_time <= tm + kTimeEps) t_prev = s.impact_time;
    plan.t_prev = t_prev;
    plan.standing_start = false;
    plan.switch_progress = (tm - ramp->ramp_start) / (ramp->ramp_end - ramp->ramp_start);
    plan.unloading = ramp->unloading;
    init.last_impact = t_prev;
    init.swing = ramp->unloading;
  }
  if (!plan.standing_start) {
    init.earliest_impact =
        plan.t_prev + (tm + config.min_switch_remaining - plan.t_prev) / config.switch_ratio;
  }
  PlanResult r = plan_footsteps(plan.path, config.constraints, config.weights, init, config.max_steps);
  plan.steps = std::move(r.steps);
  plan.horizon_exhausted = r.horizon_exhausted;
  return {std::move(plan), tm};
}

// ---------------------------------------------------------------------------
// Export and audit

void write_plan_csv(std::ostream& os, const GaitReference& g, double t_begin, double t_end, double dt) {
  if (!(dt > 0.0)) throw DomainError("write_plan_csv: dt must be positive");
  os << "t,phase_l,phase_r,lx,ly,lz,lyaw,rx,ry,rz,ryaw,zmpx,zmpy,Fl,Fr\n";
  os << std::setprecision(10);
  const auto n = static_cast<long>(std::floor((t_end - t_begin) / dt + 1e-9));
  for (long i = 0; i <= n; ++i) {
    const double t = t_begin + static_cast<double>(i) * dt;
    const FootState l = g.feet.at(Side::Left, t);
    const FootState r = g.feet.at(Side::Right, t);
    const Vector2d z = g.zmp.at(t);
    const LoadShare w = g.weights.at(t);
    os << t << ',' << to_string(g.timeline.phase(Side::Left, t)) << ',' << to_string(g.timeline.phase(Side::Right, t))
       << ',' << l.position.x() << ',' << l.position.y() << ',' << l.position.z() << ',' << l.yaw << ','
       << r.position.x() << ',' << r.position.y() << ',' << r.position.z() << ',' << r.yaw << ',' << z.x() << ','
       << z.y() << ',' << w.left << ',' << w.right << '\n';
  }
}

void write_footsteps_json(std::ostream& os, const std::vector<Footstep>& steps) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : steps)
    arr.push_back({{"side", to_string(s.side)},
                   {"x", s.position.x()},
                   {"y", s.position.y()},
                   {"theta", s.theta},
                   {"t_imp", s.impact_time}});
  os << arr.dump(2) << '\n';
}

std::vector<std::string> audit_steps(const FeetPoses& initial, double t_prev, const std::vector<Footstep>& steps,
                                     const StepConstraints& c, double tol) {
  std::vector<std::string> out;
  FeetPoses feet = initial;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const auto& s = steps[k];
    const std::string tag = "step " + std::to_string(k + 1) + ": ";
    if (k > 0 && s.side == steps[k - 1].side) out.push_back(tag + "sides do not alternate");
    const double dt = s.impact_time - t_prev;
    if (dt < c.t_min - tol || dt > c.t_max + tol) out.push_back(tag + "duration " + std::to_string(dt) + " s");
    const Pose2& st = feet[other(s.side)];
    const double dist = (s.position - st.position).norm();
    if (dist > c.d_max + tol) out.push_back(tag + "distance " + std::to_string(dist) + " m exceeds d_max");
    const double dth = std::abs(angle_diff(s.theta, st.yaw));
    if (dth > c.theta_max + tol) out.push_back(tag + "relative yaw " + std::to_string(dth) + " exceeds theta_max");
    feet[s.side] = s.pose();
    const double w = lateral_clearance(feet);
    if (w < c.w_min - tol) out.push_back(tag + "lateral clearance " + std::to_string(w) + " below w_min");
    t_prev = s.impact_time;
  }
  return out;
}

}  // namespace walkstack::planner
