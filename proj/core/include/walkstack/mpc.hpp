// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "walkstack/common.hpp"
#include "walkstack/planner.hpp"
#include "walkstack/qp.hpp"

namespace walkstack::mpc {

using Chi = Eigen::Matrix<double, 6, 1>;  // (p_x, p_y, v_x, v_y, a_x, a_y)
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Matrix62d = Eigen::Matrix<double, 6, 2>;
using Matrix26d = Eigen::Matrix<double, 2, 6>;

/// Point mass at constant height driven by CoM jerk.
class TableCartModel {
 public:
  explicit TableCartModel(double com_height, double gravity = 9.81);

  double com_height() const { return z_; }
  double gravity() const { return g_; }

  /// Continuous-time matrices of chi' = A chi + B u, zmp = C chi.
  Matrix6d A() const;
  Matrix62d B() const;
  Matrix26d C() const;

 private:
  double z_;
  double g_;
};

Eigen::Vector2d zmp_output(const Chi& chi, const TableCartModel& model);

/// Exact zero-order-hold discretization of the triple integrator.
std::pair<Matrix6d, Matrix62d> discretize(double dt);

/// chi+ = A_d chi + B_d u.
Chi integrate_com(const Chi& chi, const Eigen::Vector2d& jerk, double dt);

struct FootGeometry {
  double length = 0.16;
  double width = 0.07;
};

/// Rows acting on chi: feasible iff Z chi - z <= 0.
struct HalfSpaces {
  Eigen::MatrixXd Z;
  Eigen::VectorXd z;
};

/// Counter-clockwise convex hull (Andrew's monotone chain), collinear
/// points dropped.
std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> points);

/// Corners of a foot rectangle centered at the foot pose.
std::vector<Eigen::Vector2d> foot_corners(const Pose2& foot, const FootGeometry& geometry);

/// Support polygon of the given feet shrunk by margin, mapped onto chi
/// through the ZMP output map.
HalfSpaces support_halfspaces(const std::vector<Pose2>& feet, const FootGeometry& geometry, double margin,
                              const TableCartModel& model);

/// Same, using the feet in contact at time t.
HalfSpaces support_halfspaces(const planner::GaitReference& gait, double t, const FootGeometry& geometry,
                              double margin, const TableCartModel& model);

/// Vertices of the support polygon (unshrunk) at time t, counter-clockwise.
std::vector<Eigen::Vector2d> support_polygon(const planner::GaitReference& gait, double t,
                                             const FootGeometry& geometry);

struct MpcConfig {
  double dt = 0.1;
  int N = 20;
  Eigen::Matrix2d Q = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d R = 1e-6 * Eigen::Matrix2d::Identity();
  double margin = 0.01;

  void validate() const;
};

/// Multiple-shooting transcription over (chi_1..chi_N, u_0..u_{N-1}).
/// Stage weights are Q dt on the ZMP error at nodes 1..N and R dt on the
/// jerks; the shooting defects anchored at chi_bar are equalities and the
/// support polygons act on the predicted ZMP at nodes 1..N.
qp::Problem build_mpc_qp(const MpcConfig& config, const TableCartModel& model, const Chi& chi_bar,
                         const std::vector<Eigen::Vector2d>& zmp_ref, const std::vector<HalfSpaces>& schedule);

struct MpcResult {
  Eigen::Vector2d u0 = Eigen::Vector2d::Zero();
  /// chi_0 = chi_bar followed by chi_1..chi_N.
  std::vector<Chi> predicted;
  std::vector<Eigen::Vector2d> inputs;
  qp::Status status = qp::Status::IterLimit;
  int iterations = 0;
  std::vector<int> active_set;
};

class MpcInfeasibleError : public InfeasibleError {
 public:
  MpcInfeasibleError(const std::string& what, int node) : InfeasibleError(what), node_(node) {}
  /// First horizon node (1-based) whose constraints could not be met, or -1.
  int node() const { return node_; }

 private:
  int node_;
};

/// Solves the transcribed QP and returns its first input. Throws
/// MpcInfeasibleError when the QP is infeasible.
MpcResult mpc_step(const MpcConfig& config, const TableCartModel& model, const Chi& chi_bar,
                   const std::vector<Eigen::Vector2d>& zmp_ref, const std::vector<HalfSpaces>& schedule,
                   const std::optional<std::vector<int>>& warm_start = std::nullopt);

/// Receding-horizon controller keeping the previous active set.
class MpcController {
 public:
  MpcController(MpcConfig config, TableCartModel model);

  /// Samples references and polygons from the gait at t + i dt, i = 1..N.
  MpcResult step(const Chi& chi_bar, const planner::GaitReference& gait, double t, const FootGeometry& geometry);
  MpcResult step(const Chi& chi_bar, const std::vector<Eigen::Vector2d>& zmp_ref,
                 const std::vector<HalfSpaces>& schedule);
  void reset() { warm_.reset(); }

  const MpcConfig& config() const { return config_; }
  const TableCartModel& model() const { return model_; }

 private:
  MpcConfig config_;
  TableCartModel model_;
  std::optional<std::vector<int>> warm_;
};

}  // namespace walkstack::mpc
