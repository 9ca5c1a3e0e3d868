// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkstack/tools/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "walkstack/scenario.hpp"
#include "walkstack/wbc.hpp"

namespace walkstack::tools {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

json read_json(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw Error("cannot open " + p.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw Error(p.string() + ": " + e.what());
  }
}

double rms(double sum_sq, std::size_t n) { return n ? std::sqrt(sum_sq / static_cast<double>(n)) : 0.0; }

json pose_json(const Pose2& p) { return {{"x", p.position.x()}, {"y", p.position.y()}, {"yaw", p.yaw}}; }

Pose2 pose_from(const json& j) {
  return {Eigen::Vector2d(j.at("x").get<double>(), j.at("y").get<double>()), j.at("yaw").get<double>()};
}

std::vector<StepRow> step_table(const planner::FeetPoses& initial, double t_prev,
                                const std::vector<planner::Footstep>& steps) {
  std::vector<StepRow> rows;
  planner::FeetPoses feet = initial;
  double last = t_prev;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const auto& s = steps[k];
    StepRow r;
    r.index = static_cast<int>(k + 1);
    r.side = s.side;
    r.x = s.position.x();
    r.y = s.position.y();
    r.theta = s.theta;
    r.impact_time = s.impact_time;
    r.duration = s.impact_time - last;
    r.distance = (s.position - feet[other(s.side)].position).norm();
    rows.push_back(r);
    feet[s.side] = {s.position, s.theta};
    last = s.impact_time;
  }
  return rows;
}

}  // namespace

CsvTable CsvTable::read(std::istream& is) {
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw Error("empty CSV");
  t.header_ = split(line);
  for (std::size_t i = 0; i < t.header_.size(); ++i) t.index_[t.header_[i]] = i;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header_.size())
      throw Error("CSV row " + std::to_string(t.text_.size() + 1) + " has " + std::to_string(cells.size()) +
                  " cells, expected " + std::to_string(t.header_.size()));
    t.text_.push_back(std::move(cells));
  }
  return t;
}

CsvTable CsvTable::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  try {
    return read(is);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw Error("CSV has no column '" + name + "'");
  return it->second;
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  const std::string& cell = text_.at(row)[column(name)];
  try {
    return std::stod(cell);
  } catch (const std::exception&) {
    throw Error("CSV cell '" + cell + "' in column '" + name + "' is not a number");
  }
}

const std::string& CsvTable::text(std::size_t row, const std::string& name) const {
  return text_.at(row)[column(name)];
}

std::string plan_to_json(const PlanDocument& plan) {
  const auto& c = plan.constraints;
  json steps = json::array();
  for (const auto& s : plan.steps)
    steps.push_back({{"side", std::string(to_string(s.side))},
                     {"x", s.position.x()},
                     {"y", s.position.y()},
                     {"theta", s.theta},
                     {"t_imp", s.impact_time}});
  return json{{"format", "walkstack-plan"},
              {"version", 1},
              {"constraints",
               {{"t_min", c.t_min},
                {"t_max", c.t_max},
                {"d_max", c.d_max},
                {"theta_max", c.theta_max},
                {"w_min", c.w_min},
                {"half_width", c.m_half_width}}},
              {"initial", {{"left", pose_json(plan.initial.left)}, {"right", pose_json(plan.initial.right)}}},
              {"t_prev", plan.t_prev},
              {"steps", steps}}
      .dump(2);
}

std::vector<planner::Footstep> read_footsteps(std::istream& is) {
  json arr;
  try {
    arr = json::parse(is);
  } catch (const json::exception& e) {
    throw Error(std::string("footsteps: ") + e.what());
  }
  if (!arr.is_array()) throw Error("footsteps: expected an array");
  std::vector<planner::Footstep> out;
  for (const auto& j : arr) {
    planner::Footstep f;
    f.side = side_from_string(j.at("side").get<std::string>());
    f.position = {j.at("x").get<double>(), j.at("y").get<double>()};
    f.theta = j.at("theta").get<double>();
    f.impact_time = j.at("t_imp").get<double>();
    out.push_back(f);
  }
  return out;
}

PlanDocument plan_from_json(std::istream& is) {
  try {
    const json doc = json::parse(is);
    if (doc.value("format", "") != "walkstack-plan") throw Error("not a walkstack plan document");
    PlanDocument p;
    const auto& c = doc.at("constraints");
    p.constraints.t_min = c.at("t_min").get<double>();
    p.constraints.t_max = c.at("t_max").get<double>();
    p.constraints.d_max = c.at("d_max").get<double>();
    p.constraints.theta_max = c.at("theta_max").get<double>();
    p.constraints.w_min = c.at("w_min").get<double>();
    p.constraints.m_half_width = c.at("half_width").get<double>();
    p.initial.left = pose_from(doc.at("initial").at("left"));
    p.initial.right = pose_from(doc.at("initial").at("right"));
    p.t_prev = doc.at("t_prev").get<double>();
    std::istringstream steps(doc.at("steps").dump());
    p.steps = read_footsteps(steps);
    return p;
  } catch (const json::exception& e) {
    throw Error(std::string("plan: ") + e.what());
  }
}

Report report_bundle(const std::string& dir_name) {
  const fs::path dir(dir_name);
  const json manifest = read_json(dir / "manifest.json");
  Report r;
  r.source = dir_name;
  r.kind = "bundle";
  r.status = manifest.value("status", "unknown");
  r.mode = manifest.value("mode", "unknown");
  if (r.status != "ok" && !manifest.contains("t_end")) return r;

  std::istringstream cfg_text(manifest.at("config").dump());
  const sim::ScenarioConfig config = sim::parse_scenario(cfg_text);

  const CsvTable mpc = CsvTable::load((dir / "mpc.csv").string());
  const CsvTable state = CsvTable::load((dir / "state.csv").string());
  const CsvTable plan = CsvTable::load((dir / "planner.csv").string());
  if (state.rows() != mpc.rows() || plan.rows() != mpc.rows())
    throw Error("bundle CSVs have different row counts");
  r.ticks = mpc.rows();
  r.t_end = r.ticks ? mpc.number(r.ticks - 1, "t") : 0.0;

  double zmp_sq = 0.0, zmp_meas_sq = 0.0, com_sq = 0.0, feet_sq = 0.0;
  for (std::size_t i = 0; i < r.ticks; ++i) {
    const double ex = mpc.number(i, "zmp_pred_x") - mpc.number(i, "zmp_ref_x");
    const double ey = mpc.number(i, "zmp_pred_y") - mpc.number(i, "zmp_ref_y");
    zmp_sq += ex * ex + ey * ey;
    if (mpc.text(i, "qp_status") != "optimal") ++r.mpc_failures;

    const double mx = state.number(i, "zmp_x") - plan.number(i, "zmpx");
    const double my = state.number(i, "zmp_y") - plan.number(i, "zmpy");
    zmp_meas_sq += mx * mx + my * my;
    for (const char* a : {"x", "y"}) {
      const double e = state.number(i, std::string("com_") + a) - state.number(i, std::string("com_ref_") + a);
      com_sq += e * e;
    }
    for (const char* f : {"l", "r"}) {
      double d2 = 0.0;
      for (const char* a : {"x", "y", "z"}) {
        const double e =
            state.number(i, std::string(f) + "_" + a) - state.number(i, std::string(f) + "_ref_" + a);
        d2 += e * e;
      }
      feet_sq += d2;
      r.max_sole_drift = std::max(r.max_sole_drift, std::sqrt(d2));
    }
  }
  r.zmp_rms = rms(zmp_sq, r.ticks);
  r.zmp_measured_rms = rms(zmp_meas_sq, r.ticks);
  r.com_rms = rms(com_sq, r.ticks);
  r.feet_rms = rms(feet_sq, 2 * r.ticks);

  if (fs::exists(dir / "wbc.csv")) {
    const CsvTable wbc = CsvTable::load((dir / "wbc.csv").string());
    const wbc::ContactInequalities ci = wbc::contact_inequalities(config.contact());
    for (std::size_t i = 0; i < wbc.rows(); ++i) {
      if (wbc.text(i, "qp_status") != "optimal") ++r.wbc_failures;
      r.max_task_residual = std::max(r.max_task_residual, wbc.number(i, "task_residual"));
      // wbc rows are stamped at the tick start; the sole yaw of the previous
      // state row is the one the controller saw.
      const std::size_t srow = i == 0 ? 0 : std::min(i - 1, state.rows() - 1);
      for (const char* f : {"l", "r"}) {
        Eigen::Matrix<double, 6, 1> w;
        int k = 0;
        for (const char* c : {"fx", "fy", "fz", "mx", "my", "mz"})
          w(k++) = wbc.number(i, std::string("f") + f + "_" + c);
        if (w.isZero(0.0)) continue;
        const double yaw = state.number(srow, std::string(f) + "_yaw");
        const Eigen::Matrix3d Rt = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix().transpose();
        Eigen::Matrix<double, 6, 1> local;
        local << Rt * w.head<3>(), Rt * w.tail<3>();
        const Eigen::VectorXd slack = ci.C * local - ci.b;
        if (slack.maxCoeff() > 1e-6 * std::max(1.0, std::abs(w(2)))) ++r.contact_violations;
      }
    }
  }

  std::ifstream fs_json(dir / "footsteps.json");
  if (!fs_json) throw Error("cannot open " + (dir / "footsteps.json").string());
  const auto steps = read_footsteps(fs_json);
  // Each plan segment is audited from the stance it was planned from; a
  // segment owns the steps landing before the next segment starts.
  struct Segment {
    double t0 = 0.0;
    double t_prev = 0.0;
    planner::FeetPoses initial;
  };
  std::vector<Segment> segments;
  if (manifest.contains("plans")) {
    for (const auto& p : manifest["plans"])
      segments.push_back({p.at("t0").get<double>(), p.at("t_prev").get<double>(),
                          {pose_from(p.at("initial").at("left")), pose_from(p.at("initial").at("right"))}});
  } else {
    Segment s;
    if (state.rows() > 0) {
      s.initial.left = {{state.number(0, "l_ref_x"), state.number(0, "l_ref_y")}, state.number(0, "l_ref_yaw")};
      s.initial.right = {{state.number(0, "r_ref_x"), state.number(0, "r_ref_y")}, state.number(0, "r_ref_yaw")};
    }
    segments.push_back(s);
  }
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const double begin = segments[k].t0;
    const double end = k + 1 < segments.size() ? segments[k + 1].t0 : std::numeric_limits<double>::infinity();
    std::vector<planner::Footstep> own;
    for (const auto& s : steps)
      if (s.impact_time > begin + 1e-9 && s.impact_time <= end + 1e-9) own.push_back(s);
    for (auto& v : planner::audit_steps(segments[k].initial, segments[k].t_prev, own, config.planner.constraints, 1e-6))
      r.step_violations.push_back(segments.size() > 1 ? "plan " + std::to_string(k + 1) + ", " + v : v);
    for (auto row : step_table(segments[k].initial, segments[k].t_prev, own)) {
      row.index = static_cast<int>(r.steps.size() + 1);
      r.steps.push_back(row);
    }
  }
  for (const auto& s : steps)
    if (s.impact_time <= r.t_end + 1e-9) ++r.steps_completed;
  return r;
}

Report report_plan(const std::string& file) {
  std::ifstream is(file);
  if (!is) throw Error("cannot open " + file);
  const PlanDocument plan = plan_from_json(is);
  Report r;
  r.source = file;
  r.kind = "plan";
  r.status = "ok";
  r.mode = "plan";
  r.step_violations = planner::audit_steps(plan.initial, plan.t_prev, plan.steps, plan.constraints, 1e-9);
  r.steps = step_table(plan.initial, plan.t_prev, plan.steps);
  r.t_end = plan.steps.empty() ? plan.t_prev : plan.steps.back().impact_time;
  return r;
}

Report make_report(const std::string& path) {
  if (fs::is_directory(path)) return report_bundle(path);
  if (fs::exists(path)) return report_plan(path);
  throw Error("no such file or directory: " + path);
}

std::string report_to_json(const Report& r) {
  json steps = json::array();
  for (const auto& s : r.steps)
    steps.push_back({{"index", s.index},
                     {"side", std::string(to_string(s.side))},
                     {"x", s.x},
                     {"y", s.y},
                     {"theta", s.theta},
                     {"t_imp", s.impact_time},
                     {"duration", s.duration},
                     {"distance", s.distance}});
  return json{{"source", r.source},
              {"kind", r.kind},
              {"status", r.status},
              {"mode", r.mode},
              {"ticks", r.ticks},
              {"t_end", r.t_end},
              {"tracking",
               {{"zmp_rms", r.zmp_rms},
                {"zmp_measured_rms", r.zmp_measured_rms},
                {"com_rms", r.com_rms},
                {"feet_rms", r.feet_rms},
                {"max_sole_drift", r.max_sole_drift},
                {"max_task_residual", r.max_task_residual}}},
              {"violations",
               {{"total", r.violation_count()},
                {"mpc_failures", r.mpc_failures},
                {"wbc_failures", r.wbc_failures},
                {"contact", r.contact_violations},
                {"steps", r.step_violations}}},
              {"steps_completed", r.steps_completed},
              {"steps", steps}}
      .dump(2);
}

void print_report(std::ostream& os, const Report& r) {
  os << r.kind << ' ' << r.source << " (" << r.mode << ", " << r.status << ")\n";
  if (r.kind == "bundle") {
    os << std::setprecision(4);
    os << "  ticks " << r.ticks << ", t_end " << r.t_end << " s, steps completed " << r.steps_completed << '\n';
    os << "  zmp rms " << r.zmp_rms << " m (measured " << r.zmp_measured_rms << " m), com rms " << r.com_rms
       << " m, feet rms " << r.feet_rms << " m, max sole drift " << r.max_sole_drift << " m\n";
    os << "  max task residual " << r.max_task_residual << '\n';
  }
  os << "  violations " << r.violation_count() << " (mpc " << r.mpc_failures << ", wbc " << r.wbc_failures
     << ", contact " << r.contact_violations << ", steps " << r.step_violations.size() << ")\n";
  for (const auto& v : r.step_violations) os << "    " << v << '\n';
  if (r.steps.empty()) return;
  os << "  #   side       x        y    theta    t_imp      dt    dist\n";
  for (const auto& s : r.steps) {
    os << "  " << std::setw(2) << s.index << "  " << std::setw(5) << to_string(s.side) << std::fixed
       << std::setprecision(3) << std::setw(8) << s.x << ' ' << std::setw(8) << s.y << ' ' << std::setw(8) << s.theta
       << ' ' << std::setw(8) << s.impact_time << ' ' << std::setw(7) << s.duration << ' ' << std::setw(7)
       << s.distance << '\n';
    os.unsetf(std::ios::fixed);
  }
}

}  // namespace walkstack::tools
