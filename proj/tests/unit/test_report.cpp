// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "walkstack/scenario.hpp"
#include "walkstack/tools/cli.hpp"
#include "walkstack/tools/report.hpp"

namespace ws = walkstack;
namespace tools = walkstack::tools;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("walkstack_report_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ws::sim::ScenarioConfig config(const std::string& mode, const std::string& reference, double duration) {
  std::istringstream is(R"({"format": "walkstack-scenario", "version": 1, "mode": ")" + mode +
                        R"(", "duration": )" + std::to_string(duration) + R"(, "reference": )" + reference + "}");
  return ws::sim::parse_scenario(is);
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = tools::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

void replace_in_file(const fs::path& p, const std::string& from, const std::string& to) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  std::string text = ss.str();
  const auto pos = text.find(from);
  ASSERT_NE(pos, std::string::npos) << from;
  text.replace(pos, from.size(), to);
  std::ofstream(p) << text;
}

/// Short fixed-step walk shared by several tests.
const fs::path& walk_bundle() {
  static const fs::path dir = [] {
    const fs::path d = scratch_dir("walk");
    auto c = config("position", R"({"kind": "fixed_steps", "steps": 2})", 4.0);
    c.planner.constraints.t_min = 1.2;
    c.output = d.string();
    ws::sim::run_scenario(c);
    return d;
  }();
  return dir;
}

}  // namespace

TEST(CsvTable, ReadsByColumnName) {
  std::istringstream is("t,a,status\n0.5,1.25,ok\n1,-2,bad\n");
  const auto t = tools::CsvTable::read(is);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_DOUBLE_EQ(t.number(0, "a"), 1.25);
  EXPECT_DOUBLE_EQ(t.number(1, "t"), 1.0);
  EXPECT_EQ(t.text(1, "status"), "bad");
  EXPECT_THROW(t.number(0, "missing"), ws::Error);
  EXPECT_THROW(t.number(0, "status"), ws::Error);
  std::istringstream ragged("a,b\n1\n");
  EXPECT_THROW(tools::CsvTable::read(ragged), ws::Error);
  std::istringstream empty("");
  EXPECT_THROW(tools::CsvTable::read(empty), ws::Error);
}

TEST(PlanDocument, RoundTrips) {
  tools::PlanDocument p;
  p.constraints.t_min = 2.0;
  p.initial.left = {{0.0, 0.045}, 0.0};
  p.initial.right = {{0.0, -0.045}, 0.1};
  p.t_prev = 0.5;
  ws::planner::Footstep f;
  f.side = ws::Side::Right;
  f.position = {0.1, -0.04};
  f.theta = 0.2;
  f.impact_time = 3.0;
  p.steps.push_back(f);
  std::istringstream is(tools::plan_to_json(p));
  const auto back = tools::plan_from_json(is);
  EXPECT_DOUBLE_EQ(back.constraints.t_min, 2.0);
  EXPECT_DOUBLE_EQ(back.initial.right.yaw, 0.1);
  EXPECT_DOUBLE_EQ(back.t_prev, 0.5);
  ASSERT_EQ(back.steps.size(), 1u);
  EXPECT_EQ(back.steps[0].side, ws::Side::Right);
  EXPECT_DOUBLE_EQ(back.steps[0].impact_time, 3.0);
  std::istringstream bad(R"({"format": "other"})");
  EXPECT_THROW(tools::plan_from_json(bad), ws::Error);
}

TEST(Report, RecomputesRunStatisticsFromTheBundle) {
  const fs::path& dir = walk_bundle();
  const auto manifest = json::parse(std::ifstream(dir / "manifest.json"));
  // Rerun in memory for the statistics the bundle should reproduce.
  auto c = config("position", R"({"kind": "fixed_steps", "steps": 2})", 4.0);
  c.planner.constraints.t_min = 1.2;
  ws::sim::Scenario s(c);
  s.run();
  const auto& stats = s.stats();

  const auto r = tools::report_bundle(dir.string());
  EXPECT_EQ(r.kind, "bundle");
  EXPECT_EQ(r.status, "ok");
  EXPECT_EQ(static_cast<long>(r.ticks), stats.ticks);
  EXPECT_NEAR(r.zmp_rms, stats.zmp_rms, 1e-9);
  EXPECT_NEAR(r.max_sole_drift, stats.max_sole_drift, 1e-9);
  EXPECT_EQ(r.steps_completed, stats.steps_completed);
  EXPECT_EQ(r.steps_completed, manifest["steps_completed"].get<int>());
  EXPECT_EQ(r.violation_count(), 0);
  ASSERT_EQ(r.steps.size(), 3u);
  EXPECT_NEAR(r.steps[0].duration, 1.25, 1e-9);
  EXPECT_NEAR(r.steps[0].x, 0.14, 1e-9);
}

TEST(Report, CountsInjectedViolations) {
  const fs::path dir = scratch_dir("tampered");
  fs::copy(walk_bundle(), dir, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  replace_in_file(dir / "mpc.csv", ",optimal\n", ",max_iterations\n");
  replace_in_file(dir / "footsteps.json", "\"x\": 0.28", "\"x\": 0.68");
  const auto r = tools::report_bundle(dir.string());
  EXPECT_EQ(r.mpc_failures, 1);
  EXPECT_FALSE(r.step_violations.empty());
  const auto j = json::parse(tools::report_to_json(r));
  EXPECT_EQ(j["violations"]["mpc_failures"], 1);
  EXPECT_EQ(j["violations"]["total"].get<int>(), r.violation_count());
}

TEST(Report, TorqueBundleHasNoContactViolations) {
  const fs::path dir = scratch_dir("torque");
  auto c = config("torque", R"({"kind": "stand"})", 0.5);
  c.output = dir.string();
  const auto stats = ws::sim::run_scenario(c);
  const auto r = tools::report_bundle(dir.string());
  EXPECT_EQ(r.mode, "torque");
  EXPECT_EQ(r.contact_violations, 0);
  EXPECT_EQ(r.wbc_failures, 0);
  EXPECT_NEAR(r.max_task_residual, stats.max_task_residual, 1e-9);
  std::ostringstream text;
  tools::print_report(text, r);
  EXPECT_NE(text.str().find("violations 0"), std::string::npos) << text.str();
}

TEST(Cli, ValidatesShippedConfigs) {
  const auto r = cli({"validate"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("straight_position.json"), std::string::npos);
  const auto j = cli({"validate", "--json", "--config", "live"});
  EXPECT_EQ(j.code, 0);
  EXPECT_EQ(json::parse(j.out)["configs"][0]["reference"], "live");
}

TEST(Cli, ErrorsAreMachineReadable) {
  auto r = cli({"walk", "--config", "no_such_config", "--json"});
  EXPECT_EQ(r.code, tools::kExitUsage);
  auto j = json::parse(r.out);
  EXPECT_EQ(j["status"], "error");
  EXPECT_EQ(j["error"]["type"], "ConfigError");

  const fs::path dir = scratch_dir("failing");
  std::ofstream(dir / "fast.json") << R"({"format": "walkstack-scenario", "version": 1, "duration": 2,
      "reference": {"kind": "ramp", "velocity": [3.0, 0.0], "start": 0, "end": 10}, "planner": {"t_min": 3}})";
  r = cli({"walk", "--config", (dir / "fast.json").string(), "--json"});
  EXPECT_EQ(r.code, tools::kExitRun);
  j = json::parse(r.out);
  EXPECT_EQ(j["error"]["type"], "ScenarioError");
  EXPECT_EQ(j["error"]["layer"], "planner");
  EXPECT_EQ(j["error"]["tick"], 0);

  EXPECT_NE(cli({}).code, 0);
  EXPECT_NE(cli({"walk"}).code, 0);
  EXPECT_NE(cli({"walk", "--config", "live", "--mode", "hover"}).code, 0);
}

TEST(Cli, PlanOutputPassesTheReportAudit) {
  const fs::path dir = scratch_dir("plan");
  const auto r = cli({"plan", "--config", "file_position", "--out", (dir / "plan.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = json::parse(std::ifstream(dir / "plan.json"));
  EXPECT_EQ(doc["format"], "walkstack-plan");
  EXPECT_GE(doc["steps"].size(), 4u);
  const auto check = cli({"report", (dir / "plan.json").string(), "--check", "--json"});
  EXPECT_EQ(check.code, 0) << check.out;
  EXPECT_EQ(json::parse(check.out)["violations"]["total"], 0);
}

TEST(Cli, WalkHonoursOverrides) {
  const fs::path dir = scratch_dir("cli_walk");
  const auto r =
      cli({"walk", "--config", "stand_position", "--duration", "0.5", "--out", dir.string(), "--json"});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["stats"]["ticks"], 150);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  const auto rep = cli({"report", dir.string()});
  EXPECT_EQ(rep.code, 0);
  EXPECT_NE(rep.out.find("ticks 150"), std::string::npos) << rep.out;
}

TEST(Cli, ConfigDirectoryFromEnvironment) {
  const fs::path dir = scratch_dir("env");
  std::ofstream(dir / "mine.json") << R"({"format": "walkstack-scenario", "version": 1})";
  ::setenv("WALKSTACK_CONFIG_DIR", dir.c_str(), 1);
  EXPECT_EQ(tools::default_config_dir(), dir.string());
  EXPECT_EQ(tools::resolve_config("mine"), (dir / "mine.json").string());
  const auto r = cli({"validate"});
  ::unsetenv("WALKSTACK_CONFIG_DIR");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("mine.json"), std::string::npos);
  EXPECT_THROW(tools::resolve_config("mine"), ws::ConfigError);
}
