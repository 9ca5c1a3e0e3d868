// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkstack/tools/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "walkstack/scenario.hpp"
#include "walkstack/tools/report.hpp"
#include "walkstack/tools/server.hpp"

namespace walkstack::tools {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

json error_json(const std::exception& e) {
  json err = {{"message", e.what()}};
  if (const auto* s = dynamic_cast<const sim::ScenarioError*>(&e)) {
    err["type"] = "ScenarioError";
    err["layer"] = s->layer();
    err["tick"] = s->tick();
  } else if (dynamic_cast<const ConfigError*>(&e)) {
    err["type"] = "ConfigError";
  } else if (dynamic_cast<const ModelError*>(&e)) {
    err["type"] = "ModelError";
  } else if (dynamic_cast<const DomainError*>(&e)) {
    err["type"] = "DomainError";
  } else {
    err["type"] = "Error";
  }
  return {{"status", "error"}, {"error", err}};
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const sim::ScenarioError*>(&e)) return kExitRun;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ModelError*>(&e)) return kExitUsage;
  return kExitFailure;
}

json stats_json(const sim::ScenarioStats& s) {
  return {{"ticks", s.ticks},
          {"steps_completed", s.steps_completed},
          {"mpc_failures", s.mpc_failures},
          {"wbc_failures", s.wbc_failures},
          {"zmp_rms", s.zmp_rms},
          {"max_sole_drift", s.max_sole_drift},
          {"max_stance_drift", s.max_stance_drift},
          {"max_com_drift", s.max_com_drift},
          {"com_height_min", s.com_height_min},
          {"com_height_max", s.com_height_max},
          {"max_task_residual", s.max_task_residual},
          {"max_contact_violation", s.max_contact_violation},
          {"max_force_balance_error", s.max_force_balance_error},
          {"mean_mpc_ms", s.mean_mpc_ms},
          {"mean_wbc_ms", s.mean_wbc_ms},
          {"mean_ik_ms", s.mean_ik_ms},
          {"warnings", s.warnings}};
}

PlanDocument make_plan(sim::ScenarioConfig config) {
  const auto kind = config.reference.kind;
  if (kind == sim::ReferenceKind::Live) throw ConfigError("reference.kind: live sessions cannot be planned offline");
  // Cover the whole reference in a single plan.
  double end = 0.0;
  if (kind == sim::ReferenceKind::Ramp) end = config.reference.end;
  if (kind == sim::ReferenceKind::File) end = unicycle::ReferenceSignal::load_csv(config.reference.path).end_time();
  config.planner.horizon = std::max(config.planner.horizon, end + 2.0 * config.planner.constraints.t_max);
  config.output.clear();
  const sim::Scenario scenario(config);
  const auto& plan = scenario.gait().plan;
  PlanDocument doc;
  doc.constraints = config.planner.constraints;
  doc.initial = plan.initial;
  doc.t_prev = plan.t_prev;
  doc.steps = plan.steps;
  return doc;
}

}  // namespace

std::string default_config_dir() {
  if (const char* env = std::getenv("WALKSTACK_CONFIG_DIR"); env && *env) return env;
  for (const char* dir : {WALKSTACK_CONFIG_DIR, WALKSTACK_INSTALL_CONFIG_DIR})
    if (fs::is_directory(dir)) return dir;
  return WALKSTACK_CONFIG_DIR;
}

std::string resolve_config(const std::string& name) {
  if (fs::exists(name)) return name;
  const fs::path dir(default_config_dir());
  for (const fs::path& p : {dir / name, dir / (name + ".json")})
    if (fs::exists(p)) return p.string();
  throw ConfigError("configuration '" + name + "' not found (searched " + dir.string() + ")");
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"walkstack: footstep planning, ZMP preview control and whole-body control for a biped", "walkstack"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(WALKSTACK_VERSION));

  bool json_out = false;
  std::string config_name, mode_name, out_dir, reference, static_dir, host = "127.0.0.1", report_path;
  std::vector<std::string> configs;
  double duration = -1.0, speed = 1.0;
  int port = 8080;
  bool check = false;

  auto* validate = app.add_subcommand("validate", "Check configuration files and their models");
  validate->add_option("--config", configs, "Configuration names or paths (default: every shipped config)");
  validate->add_flag("--json", json_out, "Machine-readable output");

  auto* plan = app.add_subcommand("plan", "Plan footsteps for a reference without simulating");
  plan->add_option("--config", config_name, "Configuration name or path")->required();
  plan->add_option("--reference", reference, "Reference CSV (t,xf_x,xf_y,vxf_x,vxf_y) overriding the config");
  plan->add_option("--out", out_dir, "Write the plan document here instead of stdout");
  plan->add_flag("--json", json_out, "Machine-readable errors");

  auto* walk = app.add_subcommand("walk", "Run a scenario headless and write the log bundle");
  walk->add_option("--config", config_name, "Configuration name or path")->required();
  walk->add_option("--mode", mode_name, "position or torque")->check(CLI::IsMember({"position", "torque"}));
  walk->add_option("--duration", duration, "Simulated seconds after the standing lead-in");
  walk->add_option("--out", out_dir, "Log bundle directory");
  walk->add_flag("--json", json_out, "Machine-readable output");

  auto* serve = app.add_subcommand("serve", "Live session over WebSocket");
  serve->add_option("--config", config_name, "Configuration name or path")->default_val("live");
  serve->add_option("--mode", mode_name, "position or torque")->check(CLI::IsMember({"position", "torque"}));
  serve->add_option("--port", port, "TCP port")->default_val(8080)->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Bind address")->default_val("127.0.0.1");
  serve->add_option("--static", static_dir, "Directory served over HTTP");
  serve->add_option("--speed", speed, "Simulated seconds per wall-clock second")->default_val(1.0);
  serve->add_flag("--json", json_out, "Machine-readable errors");

  auto* report = app.add_subcommand("report", "Summarize a log bundle or a plan document");
  report->add_option("path", report_path, "Bundle directory or plan file")->required();
  report->add_flag("--json", json_out, "Machine-readable output");
  report->add_flag("--check", check, "Exit with status 4 when any violation is found");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  auto load = [&](const std::string& name) {
    sim::ScenarioConfig c = sim::load_scenario(resolve_config(name));
    if (!mode_name.empty()) c.sim.mode = sim::mode_from_string(mode_name);
    if (duration >= 0.0) c.duration = duration;
    return c;
  };

  try {
    if (*validate) {
      if (configs.empty())
        for (const auto& e : fs::directory_iterator(default_config_dir()))
          if (e.path().extension() == ".json") configs.push_back(e.path().string());
      std::sort(configs.begin(), configs.end());
      json results = json::array();
      int failures = 0;
      for (const auto& name : configs) {
        json r = {{"config", name}};
        try {
          const auto c = sim::load_scenario(resolve_config(name));
          c.validate();
          const auto model = rbd::load_model_file(sim::resolve_model_path(c.model));
          if (c.reference.kind == sim::ReferenceKind::File) unicycle::ReferenceSignal::load_csv(c.reference.path);
          r["status"] = "ok";
          r["mode"] = std::string(sim::to_string(c.sim.mode));
          r["reference"] = std::string(sim::to_string(c.reference.kind));
          r["model_dof"] = model.num_joints();
        } catch (const Error& e) {
          ++failures;
          r["status"] = "error";
          r["error"] = e.what();
        }
        if (!json_out)
          out << (r["status"] == "ok" ? "ok     " : "error  ") << name
              << (r.contains("error") ? ": " + r["error"].get<std::string>() : std::string()) << '\n';
        results.push_back(r);
      }
      if (json_out) out << json{{"status", failures ? "error" : "ok"}, {"configs", results}}.dump(2) << '\n';
      return failures ? kExitUsage : kExitOk;
    }

    if (*plan) {
      sim::ScenarioConfig c = load(config_name);
      if (!reference.empty()) {
        c.reference.kind = sim::ReferenceKind::File;
        c.reference.path = fs::absolute(reference).string();
      }
      const std::string text = plan_to_json(make_plan(c));
      if (out_dir.empty()) {
        out << text << '\n';
      } else {
        std::ofstream os(out_dir);
        if (!os) throw Error("cannot write " + out_dir);
        os << text << '\n';
      }
      return kExitOk;
    }

    if (*walk) {
      sim::ScenarioConfig c = load(config_name);
      if (!out_dir.empty()) c.output = out_dir;
      const auto stats = sim::run_scenario(c);
      if (json_out) {
        out << json{{"status", "ok"}, {"output", c.output}, {"stats", stats_json(stats)}}.dump(2) << '\n';
      } else {
        out << "completed " << stats.ticks << " ticks, " << stats.steps_completed << " steps, zmp rms "
            << stats.zmp_rms << " m, mpc failures " << stats.mpc_failures << ", wbc failures " << stats.wbc_failures
            << '\n';
        if (!c.output.empty()) out << "logs written to " << c.output << '\n';
      }
      return kExitOk;
    }

    if (*serve) {
      ServerOptions opts;
      opts.host = host;
      opts.port = static_cast<std::uint16_t>(port);
      opts.static_dir = static_dir;
      opts.speed = speed;
      LiveServer server(load(config_name), opts);
      server.start();
      out << "listening on ws://" << host << ':' << server.port() << "/" << std::endl;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
      return kExitOk;
    }

    if (*report) {
      const Report r = make_report(report_path);
      if (json_out)
        out << report_to_json(r) << '\n';
      else
        print_report(out, r);
      return check && r.violation_count() > 0 ? kExitViolations : kExitOk;
    }
  } catch (const std::exception& e) {
    if (json_out)
      out << error_json(e).dump(2) << '\n';
    else
      err << "error: " << e.what() << '\n';
    return exit_code(e);
  }
  return kExitOk;
}

}  // namespace walkstack::tools
