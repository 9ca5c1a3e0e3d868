// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "walkstack/planner.hpp"

namespace walkstack::tools {

/// Header-indexed numeric CSV; non-numeric cells are kept as text.
class CsvTable {
 public:
  static CsvTable read(std::istream& is);
  static CsvTable load(const std::string& path);

  std::size_t rows() const { return text_.size(); }
  bool has(const std::string& column) const { return index_.count(column) > 0; }
  double number(std::size_t row, const std::string& column) const;
  const std::string& text(std::size_t row, const std::string& column) const;
  const std::vector<std::string>& header() const { return header_; }

 private:
  std::size_t column(const std::string& name) const;
  std::vector<std::string> header_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> text_;
};

struct StepRow {
  int index = 0;
  Side side = Side::Left;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double impact_time = 0.0;
  /// Time since the previous impact (or the plan start).
  double duration = 0.0;
  /// Distance to the stance foot it is placed from.
  double distance = 0.0;
};

/// Summary of a log bundle or of a plan document, computed from the files
/// alone.
struct Report {
  std::string source;
  std::string kind;  // "bundle" or "plan"
  std::string status;
  std::string mode;
  std::size_t ticks = 0;
  double t_end = 0.0;
  double zmp_rms = 0.0;           // predicted vs reference
  double zmp_measured_rms = 0.0;  // measured vs reference
  double com_rms = 0.0;           // measured vs desired, xy
  double feet_rms = 0.0;          // measured vs desired soles
  double max_sole_drift = 0.0;
  int mpc_failures = 0;
  int wbc_failures = 0;
  int contact_violations = 0;
  double max_task_residual = 0.0;
  int steps_completed = 0;
  std::vector<std::string> step_violations;
  std::vector<StepRow> steps;

  int violation_count() const {
    return mpc_failures + wbc_failures + contact_violations + static_cast<int>(step_violations.size());
  }
};

/// Plan document written by `walkstack plan`.
struct PlanDocument {
  planner::StepConstraints constraints;
  planner::FeetPoses initial;
  double t_prev = 0.0;
  std::vector<planner::Footstep> steps;
};

std::string plan_to_json(const PlanDocument& plan);
PlanDocument plan_from_json(std::istream& is);

/// Footstep list in the bundle format (array of {side, x, y, theta, t_imp}).
std::vector<planner::Footstep> read_footsteps(std::istream& is);

/// Report for a bundle directory (manifest.json plus CSVs).
Report report_bundle(const std::string& dir);
/// Report for a plan document.
Report report_plan(const std::string& file);
/// Directory: bundle; file: plan document.
Report make_report(const std::string& path);

std::string report_to_json(const Report& report);
void print_report(std::ostream& os, const Report& report);

}  // namespace walkstack::tools
