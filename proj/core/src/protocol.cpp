// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkstack/protocol.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace walkstack::protocol {

using nlohmann::json;

namespace {

json xy(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }
json xyz(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json foot(const sim::FootSample& f) {
  return {{"x", f.position.x()}, {"y", f.position.y()}, {"z", f.position.z()}, {"yaw", f.yaw}};
}

double number(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ProtocolError(std::string("missing field '") + key + "'");
  const json& v = doc[key];
  if (!v.is_number()) throw ProtocolError(std::string("field '") + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ProtocolError(std::string("field '") + key + "' must be finite");
  return d;
}

CommandKind kind_from_string(std::string_view s) {
  for (CommandKind k : {CommandKind::SetReferenceVelocity, CommandKind::SetMode, CommandKind::Pause,
                        CommandKind::Resume, CommandKind::Reset})
    if (to_string(k) == s) return k;
  throw ProtocolError("unknown command kind '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(CommandKind k) {
  switch (k) {
    case CommandKind::SetReferenceVelocity: return "SetReferenceVelocity";
    case CommandKind::SetMode: return "SetMode";
    case CommandKind::Pause: return "Pause";
    case CommandKind::Resume: return "Resume";
    case CommandKind::Reset: return "Reset";
  }
  return "?";
}

Command parse_command(std::string_view text) {
  const json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ProtocolError("malformed JSON");
  if (!doc.is_object()) throw ProtocolError("message must be a JSON object");
  if (!doc.contains("type") || doc["type"] != "command") throw ProtocolError("expected type \"command\"");
  if (doc.contains("version") && doc["version"] != kProtocolVersion)
    throw ProtocolError("unsupported protocol version " + doc["version"].dump());
  if (!doc.contains("kind") || !doc["kind"].is_string()) throw ProtocolError("missing field 'kind'");
  Command c;
  c.kind = kind_from_string(doc["kind"].get<std::string>());
  if (c.kind == CommandKind::SetReferenceVelocity) {
    c.vx = std::clamp(number(doc, "vx"), -1.0, 1.0);
    c.vy = std::clamp(number(doc, "vy"), -1.0, 1.0);
  } else if (c.kind == CommandKind::SetMode) {
    if (!doc.contains("mode") || !doc["mode"].is_string()) throw ProtocolError("missing field 'mode'");
    try {
      c.mode = sim::mode_from_string(doc["mode"].get<std::string>());
    } catch (const ConfigError& e) {
      throw ProtocolError(e.what());
    }
  }
  return c;
}

std::string encode_command(const Command& command) {
  json j = {{"type", "command"}, {"version", kProtocolVersion}, {"kind", std::string(to_string(command.kind))}};
  if (command.kind == CommandKind::SetReferenceVelocity) {
    j["vx"] = command.vx;
    j["vy"] = command.vy;
  } else if (command.kind == CommandKind::SetMode) {
    j["mode"] = std::string(sim::to_string(command.mode));
  }
  return j.dump();
}

std::string apply(sim::Scenario& scenario, const Command& command) {
  try {
    switch (command.kind) {
      case CommandKind::SetReferenceVelocity: scenario.set_joystick(command.vx, command.vy); break;
      case CommandKind::SetMode: scenario.set_mode(command.mode); break;
      case CommandKind::Pause: scenario.pause(); break;
      case CommandKind::Resume: scenario.resume(); break;
      case CommandKind::Reset: scenario.reset(); break;
    }
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::string hello_message(const sim::Scenario& scenario) {
  const auto& c = scenario.config();
  return json{{"type", "hello"},
              {"version", kProtocolVersion},
              {"model", c.model},
              {"mode", std::string(sim::to_string(scenario.last().mode))},
              {"reference", std::string(sim::to_string(c.reference.kind))},
              {"dt_ctrl", c.sim.dt_ctrl},
              {"telemetry_rate", kTelemetryRate},
              {"com_height", scenario.nominal_com_height()},
              {"foot", {{"length", c.foot.length}, {"width", c.foot.width}}},
              {"joystick", {{"forward_scale", c.joystick.forward}, {"lateral_scale", c.joystick.lateral}}}}
      .dump();
}

std::string error_message(std::string_view what) {
  return json{{"type", "error"}, {"version", kProtocolVersion}, {"message", std::string(what)}}.dump();
}

std::string encode_telemetry(const sim::TickRecord& r, double t) {
  json steps = json::array();
  for (std::size_t k = 0; k < r.footsteps.size() && k < sim::kFootstepWindow; ++k) {
    const auto& f = r.footsteps[k];
    steps.push_back({{"side", std::string(to_string(f.side))},
                     {"x", f.position.x()},
                     {"y", f.position.y()},
                     {"theta", f.theta},
                     {"impact_time", f.impact_time}});
  }
  json feet = json::object();
  for (Side s : {Side::Left, Side::Right}) {
    const auto i = static_cast<std::size_t>(s);
    feet[std::string(to_string(s))] = {{"desired", foot(r.feet_desired[i])},
                                       {"measured", foot(r.feet_measured[i])},
                                       {"phase", std::string(planner::to_string(r.phases[i]))},
                                       {"contact", r.contact[i]}};
  }
  json polygon = json::array();
  for (const auto& v : r.support_polygon) polygon.push_back(xy(v));
  json wbc = nullptr;
  if (r.wbc_status) wbc = {{"status", std::string(qp::to_string(*r.wbc_status))}, {"task_residual", r.task_residual}};
  return json{{"type", "telemetry"},
              {"version", kProtocolVersion},
              {"t", t},
              {"sim_time", r.t},
              {"tick", r.tick},
              {"mode", std::string(sim::to_string(r.mode))},
              {"paused", r.paused},
              {"unicycle", {{"x", r.unicycle.x.x()}, {"y", r.unicycle.x.y()}, {"theta", r.unicycle.theta}}},
              {"reference_point", xy(r.reference_point)},
              {"footsteps", steps},
              {"feet", feet},
              {"com", {{"desired", xyz(r.com_desired)}, {"measured", xyz(r.com_measured)}}},
              {"zmp", {{"reference", xy(r.zmp_reference)}, {"predicted", xy(r.zmp_predicted)}, {"measured", xy(r.zmp_measured)}}},
              {"support_polygon", polygon},
              {"load", {{"left", r.load.left}, {"right", r.load.right}}},
              {"qp", {{"mpc", {{"status", std::string(qp::to_string(r.mpc_status))}, {"iterations", r.mpc_iterations}}},
                      {"wbc", wbc}}}}
      .dump();
}

void CommandQueue::push(Command c) {
  std::lock_guard lock(mutex_);
  queue_.push_back(c);
}

std::vector<Command> CommandQueue::drain() {
  std::lock_guard lock(mutex_);
  std::vector<Command> out(queue_.begin(), queue_.end());
  queue_.clear();
  return out;
}

TelemetryClock::TelemetryClock(double dt_ctrl, double rate) : dt_(dt_ctrl), every_(1) {
  if (!(dt_ctrl > 0.0) || !(rate > 0.0)) throw DomainError("TelemetryClock: dt and rate must be positive");
  every_ = std::max(1, static_cast<int>(std::lround(1.0 / (rate * dt_ctrl))));
}

bool TelemetryClock::tick() {
  ++count_;
  t_ = static_cast<double>(count_) * dt_;
  return count_ % every_ == 0;
}

}  // namespace walkstack::protocol
