// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkstack/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace walkstack::mpc {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

TableCartModel::TableCartModel(double com_height, double gravity) : z_(com_height), g_(gravity) {
  if (!(com_height > 0.0)) throw ConfigError("table-cart model: CoM height must be positive");
  if (!(gravity > 0.0)) throw ConfigError("table-cart model: gravity must be positive");
}

Matrix6d TableCartModel::A() const {
  Matrix6d a = Matrix6d::Zero();
  a.block<2, 2>(0, 2).setIdentity();
  a.block<2, 2>(2, 4).setIdentity();
  return a;
}

Matrix62d TableCartModel::B() const {
  Matrix62d b = Matrix62d::Zero();
  b.block<2, 2>(4, 0).setIdentity();
  return b;
}

Matrix26d TableCartModel::C() const {
  Matrix26d c = Matrix26d::Zero();
  c.block<2, 2>(0, 0).setIdentity();
  c.block<2, 2>(0, 4) = -(z_ / g_) * Eigen::Matrix2d::Identity();
  return c;
}

Vector2d zmp_output(const Chi& chi, const TableCartModel& model) { return model.C() * chi; }

std::pair<Matrix6d, Matrix62d> discretize(double dt) {
  if (!(dt > 0.0)) throw DomainError("discretize: dt must be positive");
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  Matrix6d A = Matrix6d::Identity();
  A.block<2, 2>(0, 2) = dt * I;
  A.block<2, 2>(0, 4) = 0.5 * dt * dt * I;
  A.block<2, 2>(2, 4) = dt * I;
  Matrix62d B;
  B << dt * dt * dt / 6.0 * I, 0.5 * dt * dt * I, dt * I;
  return {A, B};
}

Chi integrate_com(const Chi& chi, const Vector2d& jerk, double dt) {
  const auto [A, B] = discretize(dt);
  return A * chi + B * jerk;
}

std::vector<Vector2d> convex_hull(std::vector<Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vector2d& a, const Vector2d& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Vector2d& a, const Vector2d& b) { return (a - b).norm() < 1e-12; }),
            pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Vector2d& o, const Vector2d& a, const Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 1e-14) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 1e-14) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

std::vector<Vector2d> foot_corners(const Pose2& foot, const FootGeometry& g) {
  const Eigen::Matrix2d R = rot2(foot.yaw);
  const double hx = 0.5 * g.length, hy = 0.5 * g.width;
  return {foot.position + R * Vector2d(hx, hy), foot.position + R * Vector2d(-hx, hy),
          foot.position + R * Vector2d(-hx, -hy), foot.position + R * Vector2d(hx, -hy)};
}

HalfSpaces support_halfspaces(const std::vector<Pose2>& feet, const FootGeometry& geometry, double margin,
                              const TableCartModel& model) {
  if (feet.empty()) throw DomainError("support_halfspaces: no foot in contact");
  std::vector<Vector2d> pts;
  for (const auto& f : feet) {
    const auto c = foot_corners(f, geometry);
    pts.insert(pts.end(), c.begin(), c.end());
  }
  const auto hull = convex_hull(pts);
  const auto n = static_cast<Eigen::Index>(hull.size());
  HalfSpaces hs;
  hs.Z.resize(n, 6);
  hs.z.resize(n);
  const Matrix26d C = model.C();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector2d& a = hull[static_cast<std::size_t>(i)];
    const Vector2d& b = hull[static_cast<std::size_t>((i + 1) % n)];
    const Vector2d e = b - a;
    const Vector2d normal = Vector2d(e.y(), -e.x()).normalized();  // outward for CCW order
    hs.Z.row(i) = normal.transpose() * C;
    hs.z(i) = normal.dot(a) - margin;
  }
  return hs;
}

namespace {

std::vector<Pose2> contact_feet(const planner::GaitReference& gait, double t) {
  std::vector<Pose2> feet;
  for (Side s : {Side::Left, Side::Right})
    if (gait.timeline.in_contact(s, t)) feet.push_back(gait.feet.at(s, t).planar());
  return feet;
}

}  // namespace

HalfSpaces support_halfspaces(const planner::GaitReference& gait, double t, const FootGeometry& geometry,
                              double margin, const TableCartModel& model) {
  return support_halfspaces(contact_feet(gait, t), geometry, margin, model);
}

std::vector<Vector2d> support_polygon(const planner::GaitReference& gait, double t, const FootGeometry& geometry) {
  std::vector<Vector2d> pts;
  for (const auto& f : contact_feet(gait, t)) {
    const auto c = foot_corners(f, geometry);
    pts.insert(pts.end(), c.begin(), c.end());
  }
  return convex_hull(pts);
}

void MpcConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("mpc: dt must be positive");
  if (N < 2) throw ConfigError("mpc: horizon N must be at least 2");
  if (!(margin >= 0.0)) throw ConfigError("mpc: margin must be non-negative");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> q(0.5 * (Q + Q.transpose()));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> r(0.5 * (R + R.transpose()));
  if ((Q - Q.transpose()).norm() > 1e-12 || q.eigenvalues().minCoeff() < 0.0)
    throw ConfigError("mpc: Q must be symmetric positive semidefinite");
  if ((R - R.transpose()).norm() > 1e-12 || !(r.eigenvalues().minCoeff() > 0.0))
    throw ConfigError("mpc: R must be symmetric positive definite");
}

qp::Problem build_mpc_qp(const MpcConfig& cfg, const TableCartModel& model, const Chi& chi_bar,
                         const std::vector<Vector2d>& zmp_ref, const std::vector<HalfSpaces>& schedule) {
  cfg.validate();
  const int N = cfg.N;
  if (static_cast<int>(zmp_ref.size()) != N) throw DomainError("build_mpc_qp: reference length must equal N");
  if (static_cast<int>(schedule.size()) != N) throw DomainError("build_mpc_qp: schedule length must equal N");
  for (const auto& hs : schedule)
    if (hs.Z.cols() != 6 || hs.Z.rows() != hs.z.size()) throw DomainError("build_mpc_qp: malformed half-space set");

  const int nx = 6 * N;
  const int n = nx + 2 * N;
  int m_in = 0;
  for (const auto& hs : schedule) m_in += static_cast<int>(hs.Z.rows());
  qp::Problem p = qp::Problem::zeros(n, nx, m_in);

  const auto [Ad, Bd] = discretize(cfg.dt);
  const Matrix26d C = model.C();
  const Matrix6d CtQC = C.transpose() * cfg.Q * C * cfg.dt;
  const Eigen::Matrix2d Rdt = cfg.R * cfg.dt;

  int row = 0;
  for (int i = 0; i < N; ++i) {
    const int xi = 6 * i;       // chi_{i+1}
    const int ui = nx + 2 * i;  // u_i
    p.H.block<6, 6>(xi, xi) = 2.0 * CtQC;
    p.g.segment<6>(xi) = -2.0 * cfg.dt * C.transpose() * cfg.Q * zmp_ref[static_cast<std::size_t>(i)];
    p.H.block<2, 2>(ui, ui) = 2.0 * Rdt;

    // chi_{i+1} - A chi_i - B u_i = 0, chi_0 = chi_bar.
    p.A_eq.block<6, 6>(6 * i, xi).setIdentity();
    if (i > 0) p.A_eq.block<6, 6>(6 * i, xi - 6) = -Ad;
    p.A_eq.block<6, 2>(6 * i, ui) = -Bd;
    p.b_eq.segment<6>(6 * i) = i == 0 ? Chi(Ad * chi_bar) : Chi::Zero();

    const auto& hs = schedule[static_cast<std::size_t>(i)];
    const auto rows = hs.Z.rows();
    p.A_in.block(row, xi, rows, 6) = hs.Z;
    p.b_in.segment(row, rows) = hs.z;
    row += static_cast<int>(rows);
  }
  return p;
}

namespace {

// Smallest k such that the constraints of nodes 1..k alone are infeasible.
int first_infeasible_node(const MpcConfig& cfg, const TableCartModel& model, const Chi& chi_bar,
                          const std::vector<Vector2d>& zmp_ref, const std::vector<HalfSpaces>& schedule) {
  auto feasible = [&](int k) {
    std::vector<HalfSpaces> prefix(schedule.begin(), schedule.begin() + k);
    prefix.resize(schedule.size(), HalfSpaces{MatrixXd(0, 6), VectorXd(0)});
    qp::Options opt;
    opt.regularization = 0.0;
    return qp::solve(build_mpc_qp(cfg, model, chi_bar, zmp_ref, prefix), opt).status != qp::Status::Infeasible;
  };
  int lo = 0, hi = static_cast<int>(schedule.size());
  if (feasible(hi)) return -1;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (feasible(mid))
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

}  // namespace

MpcResult mpc_step(const MpcConfig& cfg, const TableCartModel& model, const Chi& chi_bar,
                   const std::vector<Vector2d>& zmp_ref, const std::vector<HalfSpaces>& schedule,
                   const std::optional<std::vector<int>>& warm_start) {
  const qp::Problem p = build_mpc_qp(cfg, model, chi_bar, zmp_ref, schedule);
  qp::Options opt;
  // R > 0 makes the Hessian reduced onto the dynamics PD.
  opt.regularization = 0.0;
  opt.warm_start = warm_start;
  const qp::Solution s = qp::solve(p, opt);
  if (s.status != qp::Status::Optimal) {
    const int node = s.status == qp::Status::Infeasible ? first_infeasible_node(cfg, model, chi_bar, zmp_ref, schedule) : -1;
    throw MpcInfeasibleError("mpc: QP " + std::string(qp::to_string(s.status)) +
                                 (node > 0 ? " (first violated node " + std::to_string(node) + ")" : ""),
                             node);
  }
  MpcResult r;
  const int N = cfg.N;
  r.predicted.reserve(static_cast<std::size_t>(N) + 1);
  r.predicted.push_back(chi_bar);
  for (int i = 0; i < N; ++i) r.predicted.push_back(s.x.segment<6>(6 * i));
  for (int i = 0; i < N; ++i) r.inputs.push_back(s.x.segment<2>(6 * N + 2 * i));
  r.u0 = r.inputs.front();
  r.status = s.status;
  r.iterations = s.iterations;
  r.active_set = s.active_set;
  return r;
}

MpcController::MpcController(MpcConfig config, TableCartModel model)
    : config_(std::move(config)), model_(std::move(model)) {
  config_.validate();
}

MpcResult MpcController::step(const Chi& chi_bar, const std::vector<Vector2d>& zmp_ref,
                              const std::vector<HalfSpaces>& schedule) {
  MpcResult r = mpc_step(config_, model_, chi_bar, zmp_ref, schedule, warm_);
  warm_ = r.active_set;
  return r;
}

MpcResult MpcController::step(const Chi& chi_bar, const planner::GaitReference& gait, double t,
                              const FootGeometry& geometry) {
  std::vector<Vector2d> ref;
  std::vector<HalfSpaces> schedule;
  ref.reserve(static_cast<std::size_t>(config_.N));
  schedule.reserve(static_cast<std::size_t>(config_.N));
  for (int i = 1; i <= config_.N; ++i) {
    const double ti = t + i * config_.dt;
    ref.push_back(gait.zmp.at(ti));
    schedule.push_back(support_halfspaces(gait, ti, geometry, config_.margin, model_));
  }
  return step(chi_bar, ref, schedule);
}

}  // namespace walkstack::mpc
