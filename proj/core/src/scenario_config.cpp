// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>

#include <nlohmann/json.hpp>

#include "walkstack/scenario.hpp"

namespace walkstack::sim {

namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError((path.empty() ? "document" : path) + ": expected an object");
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  expect_object(j, path);
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(join(path, key) + ": unknown key");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return j.get<int>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + ": expected a string");
  return j.get<std::string>();
}

Eigen::Vector2d vec2(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(path + ": expected an array of 2 numbers");
  return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
}

Eigen::Matrix2d mat2(const json& j, const std::string& path) {
  if (j.is_number()) return number(j, path) * Eigen::Matrix2d::Identity();
  if (!j.is_array() || j.size() != 2) throw ConfigError(path + ": expected a number or a 2x2 array");
  Eigen::Matrix2d m;
  for (int r = 0; r < 2; ++r) m.row(r) = vec2(j[static_cast<std::size_t>(r)], path + "[" + std::to_string(r) + "]");
  return m;
}

json mat2_json(const Eigen::Matrix2d& m) { return json::array({{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}}); }

template <typename F>
void opt(const json& j, const char* key, const std::string& path, F&& apply) {
  if (j.contains(key)) apply(j.at(key), join(path, key));
}

void read_gains(const json& j, const std::string& path, wbc::PdGains& g) {
  const Eigen::Vector2d v = vec2(j, path);
  g = {v.x(), v.y()};
}

ReferenceKind reference_kind(const std::string& s, const std::string& path) {
  for (ReferenceKind k : {ReferenceKind::Stand, ReferenceKind::Ramp, ReferenceKind::File, ReferenceKind::FixedSteps,
                          ReferenceKind::Live})
    if (s == to_string(k)) return k;
  throw ConfigError(path + ": unknown reference kind '" + s + "'");
}

}  // namespace

ScenarioConfig parse_scenario(std::istream& is, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario: invalid JSON: ") + e.what());
  }
  check_keys(doc, "", {"format", "version", "model", "mode", "duration", "lead_in", "stance", "sim", "planner", "mpc",
                       "foot", "wbc", "ik", "reference", "joystick", "output"});
  if (!doc.contains("format") || doc["format"] != "walkstack-scenario")
    throw ConfigError("format: expected \"walkstack-scenario\"");
  if (!doc.contains("version") || integer(doc["version"], "version") != 1)
    throw ConfigError("version: only version 1 is supported");

  auto resolve = [&](const std::string& p) {
    namespace fs = std::filesystem;
    if (p.empty() || base_dir.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base_dir) / p).lexically_normal().string();
  };

  ScenarioConfig c;
  opt(doc, "model", "", [&](const json& j, const std::string& p) {
    const std::string m = text(j, p);
    const std::string local = resolve(m);
    c.model = std::filesystem::exists(local) ? local : m;
  });
  opt(doc, "mode", "", [&](const json& j, const std::string& p) { c.sim.mode = mode_from_string(text(j, p)); });
  opt(doc, "duration", "", [&](const json& j, const std::string& p) { c.duration = number(j, p); });
  opt(doc, "lead_in", "", [&](const json& j, const std::string& p) { c.lead_in = number(j, p); });
  opt(doc, "output", "", [&](const json& j, const std::string& p) { c.output = resolve(text(j, p)); });

  opt(doc, "stance", "", [&](const json& j, const std::string& p) {
    check_keys(j, p, {"knee"});
    opt(j, "knee", p, [&](const json& v, const std::string& q) { c.knee = number(v, q); });
  });
  opt(doc, "sim", "", [&](const json& j, const std::string& p) {
    check_keys(j, p, {"dt_sim", "dt_ctrl", "alpha", "beta", "break_warning_time"});
    opt(j, "dt_sim", p, [&](const json& v, const std::string& q) { c.sim.dt_sim = number(v, q); });
    opt(j, "dt_ctrl", p, [&](const json& v, const std::string& q) { c.sim.dt_ctrl = number(v, q); });
    opt(j, "alpha", p, [&](const json& v, const std::string& q) { c.sim.alpha = number(v, q); });
    opt(j, "beta", p, [&](const json& v, const std::string& q) { c.sim.beta = number(v, q); });
    opt(j, "break_warning_time", p,
        [&](const json& v, const std::string& q) { c.sim.break_warning_time = number(v, q); });
  });
  opt(doc, "planner", "", [&](const json& j, const std::string& p) {
    check_keys(j, p, {"t_min", "t_max", "d_max", "theta_max", "w_min", "half_width", "k_t", "k_x", "control_point",
                      "gain", "v_max", "omega_max", "horizon", "dt", "switch_ratio", "h_apex", "min_switch_remaining",
                      "max_steps"});
    auto& pc = c.planner;
    opt(j, "t_min", p, [&](const json& v, const std::string& q) { pc.constraints.t_min = number(v, q); });
    opt(j, "t_max", p, [&](const json& v, const std::string& q) { pc.constraints.t_max = number(v, q); });
    opt(j, "d_max", p, [&](const json& v, const std::string& q) { pc.constraints.d_max = number(v, q); });
    opt(j, "theta_max", p, [&](const json& v, const std::string& q) { pc.constraints.theta_max = number(v, q); });
    opt(j, "w_min", p, [&](const json& v, const std::string& q) { pc.constraints.w_min = number(v, q); });
    opt(j, "half_width", p, [&](const json& v, const std::string& q) { pc.constraints.m_half_width = number(v, q); });
    opt(j, "k_t", p, [&](const json& v, const std::string& q) { pc.weights.k_t = number(v, q); });
    opt(j, "k_x", p, [&](const json& v, const std::string& q) { pc.weights.k_x = number(v, q); });
    opt(j, "control_point", p, [&](const json& v, const std::string& q) {
      try {
        pc.control_point = unicycle::ControlPoint(vec2(v, q));
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError(q + ": " + e.what());
      }
    });
    opt(j, "gain", p, [&](const json& v, const std::string& q) { pc.gain = mat2(v, q); });
    opt(j, "v_max", p, [&](const json& v, const std::string& q) { pc.limits.v_max = number(v, q); });
    opt(j, "omega_max", p, [&](const json& v, const std::string& q) { pc.limits.omega_max = number(v, q); });
    opt(j, "horizon", p, [&](const json& v, const std::string& q) { pc.horizon = number(v, q); });
    opt(j, "dt", p, [&](const json& v, const std::string& q) { pc.dt = number(v, q); });
    opt(j, "switch_ratio", p, [&](const json& v, const std::string& q) { pc.switch_ratio = number(v, q); });
    opt(j, "h_apex", p, [&](const json& v, const std::string& q) { pc.h_apex = number(v, q); });
    opt(j, "min_switch_remaining", p,
        [&](const json& v, const std::string& q) { pc.min_switch_remaining = number(v, q); });
    opt(j, "max_steps", p, [&](const json& v, const std::string& q) {
      const int n = integer(v, q);
      if (n < 1) throw ConfigError(q + ": must be positive");
      pc.max_steps = static_cast<std::size_t>(n);
    });
  });
  opt(doc, "mpc", "", [&](const json& j, const std::string& p) {
    check_keys(j, p, {"dt", "N", "Q", "R", "margin"});
    opt(j, "dt", p, [&](const json& v, const std::string& q) { c.mpc.dt = number(v, q); });
    opt(j, "N", p, [&](const json& v, const std::string& q) { c.mpc.N = integer(v, q); });
    opt(j, "Q", p, [&](const json& v, const std::string& q) { c.mpc.Q = mat2(v, q); });
    opt(j, "R", p, [&](const json& v, const std::string& q) { c.mpc.R = mat2(v, q); });
    opt(j, "margin", p, [&](const json& v, const std::string& q) { c.mpc.margin = number(v, q); });
  });
  opt(doc, "foot", "", [&](const json& j, const std::string& p) {
    check_keys(j, p, {"length", "width"});
    opt(j, "length", p, [&](const json& v, const std::string& q) { c.foot.length = number(v, q); });
    opt(j, "width", p, [&](const json& v, const std::string& q) { c.foot.width = number(v, q); });
  });
  opt(doc, "wbc", "", [&](const json& j, const std::string& p) {
    check_keys(j, p, {"gains", "weights", "contact"});
    opt(j, "gains", p, [&](const json& g, const std::string& gp) {
      check_keys(g, gp, {"com", "foot_linear", "foot_angular", "torso", "posture"});
      opt(g, "com", gp, [&](const json& v, const std::string& q) { read_gains(v, q, c.gains.com); });
      opt(g, "foot_linear", gp, [&](const json& v, const std::string& q) { read_gains(v, q, c.gains.foot_linear); });
      opt(g, "foot_angular", gp, [&](const json& v, const std::string& q) { read_gains(v, q, c.gains.foot_angular); });
      opt(g, "torso", gp, [&](const json& v, const std::string& q) { read_gains(v, q, c.gains.torso); });
      opt(g, "posture", gp, [&](const json& v, const std::string& q) { read_gains(v, q, c.gains.posture); });
    });
    opt(j, "weights", p, [&](const json& w, const std::string& wp) {
      check_keys(w, wp, {"torso", "torque", "unloading"});
      opt(w, "torso", wp, [&](const json& v, const std::string& q) { c.weights.torso = number(v, q); });
      opt(w, "torque", wp, [&](const json& v, const std::string& q) { c.weights.torque = number(v, q); });
      opt(w, "unloading", wp, [&](const json& v, const std::string& q) { c.weights.unloading = number(v, q); });
    });
    opt(j, "contact", p, [&](const json& w, const std::string& wp) {
      check_keys(w, wp, {"mu", "f_min", "mu_z"});
      opt(w, "mu", wp, [&](const json& v, const std::string& q) { c.mu = number(v, q); });
      opt(w, "f_min", wp, [&](const json& v, const std::string& q) { c.f_min = number(v, q); });
      opt(w, "mu_z", wp, [&](const json& v, const std::string& q) { c.mu_z = number(v, q); });
    });
  });
  opt(doc, "ik", "", [&](const json& j, const std::string& p) {
    check_keys(j, p, {"com", "torso", "posture", "damping", "max_iterations", "tolerance"});
    opt(j, "com", p, [&](const json& v, const std::string& q) { c.ik.com = number(v, q); });
    opt(j, "torso", p, [&](const json& v, const std::string& q) { c.ik.torso = number(v, q); });
    opt(j, "posture", p, [&](const json& v, const std::string& q) { c.ik.posture = number(v, q); });
    opt(j, "damping", p, [&](const json& v, const std::string& q) { c.ik.damping = number(v, q); });
    opt(j, "max_iterations", p, [&](const json& v, const std::string& q) { c.ik.max_iterations = integer(v, q); });
    opt(j, "tolerance", p, [&](const json& v, const std::string& q) { c.ik.tolerance = number(v, q); });
  });
  opt(doc, "reference", "", [&](const json& j, const std::string& p) {
    check_keys(j, p, {"kind", "velocity", "start", "end", "path", "step_length", "step_time", "steps"});
    auto& r = c.reference;
    if (!j.contains("kind")) throw ConfigError(p + ".kind: required");
    r.kind = reference_kind(text(j["kind"], p + ".kind"), p + ".kind");
    opt(j, "velocity", p, [&](const json& v, const std::string& q) { r.velocity = vec2(v, q); });
    opt(j, "start", p, [&](const json& v, const std::string& q) { r.start = number(v, q); });
    opt(j, "end", p, [&](const json& v, const std::string& q) { r.end = number(v, q); });
    opt(j, "path", p, [&](const json& v, const std::string& q) { r.path = resolve(text(v, q)); });
    opt(j, "step_length", p, [&](const json& v, const std::string& q) { r.step_length = number(v, q); });
    opt(j, "step_time", p, [&](const json& v, const std::string& q) { r.step_time = number(v, q); });
    opt(j, "steps", p, [&](const json& v, const std::string& q) { r.steps = integer(v, q); });
  });
  opt(doc, "joystick", "", [&](const json& j, const std::string& p) {
    check_keys(j, p, {"forward_scale", "lateral_scale"});
    opt(j, "forward_scale", p, [&](const json& v, const std::string& q) { c.joystick.forward = number(v, q); });
    opt(j, "lateral_scale", p, [&](const json& v, const std::string& q) { c.joystick.lateral = number(v, q); });
  });
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open scenario file " + path);
  return parse_scenario(is, std::filesystem::path(path).parent_path().string());
}

std::string scenario_to_json(const ScenarioConfig& c) {
  const auto& pc = c.planner;
  auto gains = [](const wbc::PdGains& g) { return json::array({g.kp, g.kd}); };
  json ref = {{"kind", std::string(to_string(c.reference.kind))}};
  switch (c.reference.kind) {
    case ReferenceKind::Ramp:
      ref["velocity"] = {c.reference.velocity.x(), c.reference.velocity.y()};
      ref["start"] = c.reference.start;
      ref["end"] = c.reference.end;
      break;
    case ReferenceKind::File:
      ref["path"] = c.reference.path;
      break;
    case ReferenceKind::FixedSteps:
      ref["step_length"] = c.reference.step_length;
      ref["step_time"] = c.reference.step_time;
      ref["steps"] = c.reference.steps;
      break;
    default:
      break;
  }
  json doc = {
      {"format", "walkstack-scenario"},
      {"version", 1},
      {"model", c.model},
      {"mode", std::string(to_string(c.sim.mode))},
      {"duration", c.duration},
      {"lead_in", c.lead_in},
      {"stance", {{"knee", c.knee}}},
      {"sim",
       {{"dt_sim", c.sim.dt_sim},
        {"dt_ctrl", c.sim.dt_ctrl},
        {"alpha", c.sim.alpha},
        {"beta", c.sim.beta},
        {"break_warning_time", c.sim.break_warning_time}}},
      {"planner",
       {{"t_min", pc.constraints.t_min},
        {"t_max", pc.constraints.t_max},
        {"d_max", pc.constraints.d_max},
        {"theta_max", pc.constraints.theta_max},
        {"w_min", pc.constraints.w_min},
        {"half_width", pc.constraints.m_half_width},
        {"k_t", pc.weights.k_t},
        {"k_x", pc.weights.k_x},
        {"control_point", {pc.control_point.d().x(), pc.control_point.d().y()}},
        {"gain", mat2_json(pc.gain)},
        {"v_max", pc.limits.v_max},
        {"omega_max", pc.limits.omega_max},
        {"horizon", pc.horizon},
        {"dt", pc.dt},
        {"switch_ratio", pc.switch_ratio},
        {"h_apex", pc.h_apex},
        {"min_switch_remaining", pc.min_switch_remaining},
        {"max_steps", pc.max_steps}}},
      {"mpc",
       {{"dt", c.mpc.dt}, {"N", c.mpc.N}, {"Q", mat2_json(c.mpc.Q)}, {"R", mat2_json(c.mpc.R)}, {"margin", c.mpc.margin}}},
      {"foot", {{"length", c.foot.length}, {"width", c.foot.width}}},
      {"wbc",
       {{"gains",
         {{"com", gains(c.gains.com)},
          {"foot_linear", gains(c.gains.foot_linear)},
          {"foot_angular", gains(c.gains.foot_angular)},
          {"torso", gains(c.gains.torso)},
          {"posture", gains(c.gains.posture)}}},
        {"weights", {{"torso", c.weights.torso}, {"torque", c.weights.torque}, {"unloading", c.weights.unloading}}},
        {"contact", {{"mu", c.mu}, {"f_min", c.f_min}, {"mu_z", c.mu_z}}}}},
      {"ik",
       {{"com", c.ik.com},
        {"torso", c.ik.torso},
        {"posture", c.ik.posture},
        {"damping", c.ik.damping},
        {"max_iterations", c.ik.max_iterations},
        {"tolerance", c.ik.tolerance}}},
      {"reference", ref},
      {"joystick", {{"forward_scale", c.joystick.forward}, {"lateral_scale", c.joystick.lateral}}}};
  if (!c.output.empty()) doc["output"] = c.output;
  return doc.dump(2);
}

}  // namespace walkstack::sim
