// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkstack/rbd.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace walkstack::rbd {

namespace {

using Matrix6d = Eigen::Matrix<double, 6, 6>;

Matrix3d skew(const Vector3d& v) {
  Matrix3d s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

// Spatial vectors are Pluecker coordinates at the world origin: motion
// (omega; v_O), force (n_O; f).
Vector6d crm(const Vector6d& V, const Vector6d& m) {
  Vector6d r;
  r.head<3>() = V.head<3>().cross(m.head<3>());
  r.tail<3>() = V.head<3>().cross(m.tail<3>()) + V.tail<3>().cross(m.head<3>());
  return r;
}

Vector6d crf(const Vector6d& V, const Vector6d& f) {
  Vector6d r;
  r.head<3>() = V.head<3>().cross(f.head<3>()) + V.tail<3>().cross(f.tail<3>());
  r.tail<3>() = V.head<3>().cross(f.tail<3>());
  return r;
}

Matrix6d spatial_inertia(double m, const Vector3d& c, const Matrix3d& Ic) {
  const Matrix3d C = skew(c);
  Matrix6d I;
  I.topLeftCorner<3, 3>() = Ic - m * C * C;
  I.topRightCorner<3, 3>() = m * C;
  I.bottomLeftCorner<3, 3>() = -m * C;
  I.bottomRightCorner<3, 3>() = m * Matrix3d::Identity();
  return I;
}

// Base motion subspace: nu_B = (pdot_B, omega_B) -> (omega; v_O).
Matrix6d base_subspace(const Vector3d& pB) {
  Matrix6d S = Matrix6d::Zero();
  S.topRightCorner<3, 3>().setIdentity();
  S.bottomLeftCorner<3, 3>().setIdentity();
  S.bottomRightCorner<3, 3>() = skew(pB);
  return S;
}

Pose3 joint_transform(const Link& l, double s) {
  Pose3 t;
  if (l.joint == JointType::Revolute) t.R = Eigen::AngleAxisd(s, l.axis).toRotationMatrix();
  if (l.joint == JointType::Prismatic) t.p = s * l.axis;
  return t;
}

struct Pass {
  std::vector<Pose3> X;
  std::vector<Vector6d> S;
  Matrix6d SB;
};

Pass kinematic_pass(const RobotModel& model, const Configuration& q) {
  check_configuration(model, q);
  const auto& links = model.links();
  const auto nb = links.size();
  Pass w;
  w.X.resize(nb);
  w.S.assign(nb, Vector6d::Zero());
  w.X[0] = {q.R, q.p};
  for (std::size_t i = 1; i < nb; ++i) {
    const Link& l = links[i];
    const int d = model.dof()[i];
    const double s = d >= 0 ? q.s(d - 6) : 0.0;
    w.X[i] = w.X[static_cast<std::size_t>(model.parents()[i])] * l.origin * joint_transform(l, s);
    if (l.joint == JointType::Fixed) continue;
    const Vector3d a = w.X[i].R * l.axis;
    if (l.joint == JointType::Revolute) {
      w.S[i].head<3>() = a;
      w.S[i].tail<3>() = w.X[i].p.cross(a);
    } else {
      w.S[i].tail<3>() = a;
    }
  }
  w.SB = base_subspace(q.p);
  return w;
}

// Link velocities and accelerations (nudot given, a0 added to the base).
void motion_pass(const RobotModel& model, const Pass& w, const VectorXd& nu,
                 const VectorXd* nudot, const Vector6d& a0, std::vector<Vector6d>& V, std::vector<Vector6d>& A) {
  const auto nb = model.links().size();
  V.resize(nb);
  A.resize(nb);
  const Vector3d pd = nu.head<3>(), om = nu.segment<3>(3);
  V[0] = w.SB * nu.head<6>();
  A[0] = a0;
  A[0].tail<3>() += pd.cross(om);
  if (nudot) A[0] += w.SB * nudot->head<6>();
  for (std::size_t i = 1; i < nb; ++i) {
    const auto p = static_cast<std::size_t>(model.parents()[i]);
    const int d = model.dof()[i];
    V[i] = V[p];
    A[i] = A[p];
    if (d < 0) continue;
    V[i] += w.S[i] * nu(d);
    A[i] += crm(V[i], w.S[i]) * nu(d);
    if (nudot) A[i] += w.S[i] * (*nudot)(d);
  }
}

Matrix6d link_inertia(const Link& l, const Pose3& X) {
  return spatial_inertia(l.mass, X * l.com, X.R * l.inertia * X.R.transpose());
}

// Spatial (Pluecker) Jacobian of a link.
Matrix6Xd link_jacobian(const RobotModel& model, const Pass& w, int link) {
  Matrix6Xd J = Matrix6Xd::Zero(6, model.nv());
  for (int j = link; j > 0; j = model.parents()[static_cast<std::size_t>(j)]) {
    const int d = model.dof()[static_cast<std::size_t>(j)];
    if (d >= 0) J.col(d) = w.S[static_cast<std::size_t>(j)];
  }
  J.leftCols<6>() = w.SB;
  return J;
}

// Pluecker motion -> point twist (v_x; omega) at world point x.
Matrix6Xd point_jacobian(const Matrix6Xd& Js, const Vector3d& x) {
  Matrix6Xd J(6, Js.cols());
  J.topRows<3>() = Js.bottomRows<3>() - skew(x) * Js.topRows<3>();
  J.bottomRows<3>() = Js.topRows<3>();
  return J;
}

Vector3d point_acceleration(const Vector6d& V, const Vector6d& A, const Vector3d& x) {
  const Vector3d om = V.head<3>();
  const Vector3d xd = V.tail<3>() + om.cross(x);
  return A.tail<3>() + A.head<3>().cross(x) + om.cross(xd);
}

void check_nu(const RobotModel& model, const VectorXd& nu, const char* what) {
  if (nu.size() != model.nv()) throw DomainError(std::string(what) + ": velocity has wrong size");
  if (!nu.allFinite()) throw DomainError(std::string(what) + ": velocity is not finite");
}

Matrix3d rpy_matrix(const Vector3d& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vector3d::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vector3d::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vector3d::UnitX()))
      .toRotationMatrix();
}

}  // namespace

std::string_view to_string(JointType t) {
  switch (t) {
    case JointType::Fixed:
      return "fixed";
    case JointType::Revolute:
      return "revolute";
    case JointType::Prismatic:
      return "prismatic";
  }
  return "?";
}

RobotModel::RobotModel(std::string name, std::vector<Link> links, std::vector<Frame> frames)
    : name_(std::move(name)) {
  if (links.empty()) throw ModelError("model has no links");
  std::map<std::string, std::size_t, std::less<>> by_name;
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (links[i].name.empty()) throw ModelError("link " + std::to_string(i) + ": empty name");
    if (!by_name.emplace(links[i].name, i).second) throw ModelError("link " + links[i].name + ": duplicate name");
  }
  int root = -1;
  std::vector<std::vector<std::size_t>> children(links.size());
  for (std::size_t i = 0; i < links.size(); ++i) {
    const Link& l = links[i];
    if (l.parent.empty()) {
      if (root >= 0) throw ModelError("link " + l.name + ": second root (root is " + links[static_cast<std::size_t>(root)].name + ")");
      root = static_cast<int>(i);
      continue;
    }
    const auto it = by_name.find(l.parent);
    if (it == by_name.end()) throw ModelError("link " + l.name + ": missing parent " + l.parent);
    children[it->second].push_back(i);
  }
  if (root < 0) throw ModelError("model has no root link (every link has a parent: cycle)");

  for (const Link& l : links) {
    const std::string who = "link " + l.name + ": ";
    if (!l.parent.empty() && l.joint != JointType::Fixed && std::abs(l.axis.norm() - 1.0) > 1e-9)
      throw ModelError(who + "joint axis must have unit norm");
    if (l.parent.empty() && l.joint != JointType::Fixed)
      throw ModelError(who + "root link cannot carry a joint (the base is floating)");
    if (!(l.mass >= 0.0) || !std::isfinite(l.mass)) throw ModelError(who + "mass must be non-negative");
    if (l.mass == 0.0 && (l.parent.empty() || l.joint != JointType::Fixed))
      throw ModelError(who + "mass must be positive for a dynamic link");
    if ((l.inertia - l.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw ModelError(who + "inertia must be symmetric");
    if (l.mass > 0.0) {
      Eigen::SelfAdjointEigenSolver<Matrix3d> es(l.inertia);
      if (!(es.eigenvalues().minCoeff() > 0.0))
        throw ModelError(who + "inertia must be positive definite (min eigenvalue " +
                         std::to_string(es.eigenvalues().minCoeff()) + ")");
    } else if (!l.inertia.isZero(0.0)) {
      throw ModelError(who + "massless link must have zero inertia");
    }
    if (!(l.lower <= l.upper)) throw ModelError(who + "joint lower limit exceeds upper limit");
    if ((l.origin.R.transpose() * l.origin.R - Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-10)
      throw ModelError(who + "origin rotation is not orthonormal");
  }

  // Depth first from the root, children in name order.
  std::vector<int> old_parent(links.size(), -1);
  std::vector<std::size_t> order;
  std::vector<bool> seen(links.size(), false);
  std::function<void(std::size_t)> visit = [&](std::size_t i) {
    seen[i] = true;
    order.push_back(i);
    auto ch = children[i];
    std::sort(ch.begin(), ch.end(), [&](std::size_t a, std::size_t b) { return links[a].name < links[b].name; });
    for (std::size_t c : ch) visit(c);
  };
  visit(static_cast<std::size_t>(root));
  if (order.size() != links.size()) {
    for (std::size_t i = 0; i < links.size(); ++i)
      if (!seen[i]) throw ModelError("link " + links[i].name + ": part of a cycle (not reachable from the root)");
  }
  std::vector<int> new_index(links.size());
  for (std::size_t k = 0; k < order.size(); ++k) new_index[order[k]] = static_cast<int>(k);
  for (std::size_t k = 0; k < order.size(); ++k) {
    Link l = links[order[k]];
    if (l.parent.empty()) l.origin = Pose3{};
    if (l.joint_name.empty()) l.joint_name = l.name;
    links_.push_back(l);
    parent_.push_back(l.parent.empty() ? -1 : new_index[by_name.find(l.parent)->second]);
    dof_.push_back(l.joint == JointType::Fixed ? -1 : 6 + n_++);
    total_mass_ += l.mass;
  }

  std::map<std::string, int, std::less<>> frame_names;
  bool has_base = false;
  for (const Frame& f : frames) has_base = has_base || f.name == "base";
  if (!has_base) frames.insert(frames.begin(), Frame{"base", links_.front().name, {}});
  for (const Frame& f : frames) {
    if (!frame_names.emplace(f.name, 0).second) throw ModelError("frame " + f.name + ": duplicate name");
    const int li = link_index(f.link);
    frames_.push_back(f);
    frame_link_.push_back(li);
  }
}

int RobotModel::link_index(std::string_view name) const {
  for (std::size_t i = 0; i < links_.size(); ++i)
    if (links_[i].name == name) return static_cast<int>(i);
  throw ModelError("unknown link " + std::string(name));
}

int RobotModel::frame_index(std::string_view name) const {
  for (std::size_t i = 0; i < frames_.size(); ++i)
    if (frames_[i].name == name) return static_cast<int>(i);
  throw ModelError("unknown frame " + std::string(name));
}

bool RobotModel::has_frame(std::string_view name) const {
  return std::any_of(frames_.begin(), frames_.end(), [&](const Frame& f) { return f.name == name; });
}

std::vector<std::string> RobotModel::joint_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < links_.size(); ++i)
    if (dof_[i] >= 0) out.push_back(links_[i].joint_name);
  return out;
}

VectorXd RobotModel::lower_limits() const {
  VectorXd v(n_);
  for (std::size_t i = 0; i < links_.size(); ++i)
    if (dof_[i] >= 0) v(dof_[i] - 6) = links_[i].lower;
  return v;
}

VectorXd RobotModel::upper_limits() const {
  VectorXd v(n_);
  for (std::size_t i = 0; i < links_.size(); ++i)
    if (dof_[i] >= 0) v(dof_[i] - 6) = links_[i].upper;
  return v;
}

RobotModel load_model(std::istream& is) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw ModelError(std::string("model document does not parse: ") + e.what());
  }
  auto vec3 = [](const json& j, const std::string& ctx) {
    if (!j.is_array() || j.size() != 3) throw ModelError(ctx + ": expected a 3-vector");
    return Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  };
  auto pose = [&](const json& j, const std::string& ctx) {
    Pose3 p;
    if (j.contains("xyz")) p.p = vec3(j["xyz"], ctx + ".xyz");
    if (j.contains("rpy")) p.R = rpy_matrix(vec3(j["rpy"], ctx + ".rpy"));
    return p;
  };
  try {
    if (doc.value("format", "") != "walkstack-model") throw ModelError("model document: format must be walkstack-model");
    if (doc.value("version", 0) != 1) throw ModelError("model document: unsupported version");
    std::vector<Link> links;
    for (const auto& jl : doc.at("links")) {
      Link l;
      l.name = jl.at("name").get<std::string>();
      const std::string ctx = "link " + l.name;
      if (jl.contains("parent") && !jl["parent"].is_null()) l.parent = jl["parent"].get<std::string>();
      l.mass = jl.value("mass", 0.0);
      if (jl.contains("com")) l.com = vec3(jl["com"], ctx + ".com");
      if (jl.contains("inertia")) {
        const auto& in = jl["inertia"];
        const double ixx = in.value("ixx", 0.0), iyy = in.value("iyy", 0.0), izz = in.value("izz", 0.0);
        const double ixy = in.value("ixy", 0.0), ixz = in.value("ixz", 0.0), iyz = in.value("iyz", 0.0);
        l.inertia << ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz;
      }
      if (jl.contains("joint")) {
        const auto& jj = jl["joint"];
        const std::string type = jj.value("type", "fixed");
        if (type == "revolute")
          l.joint = JointType::Revolute;
        else if (type == "prismatic")
          l.joint = JointType::Prismatic;
        else if (type == "fixed")
          l.joint = JointType::Fixed;
        else
          throw ModelError(ctx + ": unknown joint type " + type);
        l.joint_name = jj.value("name", l.name);
        if (jj.contains("axis")) l.axis = vec3(jj["axis"], ctx + ".axis");
        if (jj.contains("origin")) l.origin = pose(jj["origin"], ctx + ".origin");
        if (jj.contains("limits")) {
          const auto& lim = jj["limits"];
          if (!lim.is_array() || lim.size() != 2) throw ModelError(ctx + ": limits must be [lower, upper]");
          l.lower = lim[0].get<double>();
          l.upper = lim[1].get<double>();
        }
      }
      links.push_back(std::move(l));
    }
    std::vector<Frame> frames;
    if (doc.contains("frames")) {
      for (const auto& jf : doc["frames"]) {
        Frame f;
        f.name = jf.at("name").get<std::string>();
        f.link = jf.at("link").get<std::string>();
        f.offset = pose(jf, "frame " + f.name);
        frames.push_back(std::move(f));
      }
    }
    return RobotModel(doc.value("name", "robot"), std::move(links), std::move(frames));
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("model document: ") + e.what());
  }
}

RobotModel load_model_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ModelError("cannot open model file " + path);
  return load_model(f);
}

std::string bundled_model_path(const std::string& file) {
  namespace fs = std::filesystem;
  if (const char* env = std::getenv("WALKSTACK_MODEL_DIR"); env && *env) return (fs::path(env) / file).string();
  for (const char* dir : {WALKSTACK_MODEL_DIR, WALKSTACK_INSTALL_MODEL_DIR}) {
    const fs::path p = fs::path(dir) / file;
    if (fs::exists(p)) return p.string();
  }
  return (fs::path(WALKSTACK_MODEL_DIR) / file).string();
}

Configuration Configuration::neutral(const RobotModel& model) {
  Configuration q;
  q.s = VectorXd::Zero(model.num_joints());
  return q;
}

void check_configuration(const RobotModel& model, const Configuration& q) {
  if (q.s.size() != model.num_joints()) throw DomainError("configuration: joint vector has wrong size");
  if (!q.p.allFinite() || !q.R.allFinite() || !q.s.allFinite()) throw DomainError("configuration: not finite");
  if ((q.R.transpose() * q.R - Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-10 || q.R.determinant() < 0.0)
    throw DomainError("configuration: base orientation is not a rotation");
}

Matrix3d so3_exp(const Vector3d& w) {
  const double th = w.norm();
  if (th < 1e-12) return Matrix3d::Identity() + skew(w);
  return Eigen::AngleAxisd(th, w / th).toRotationMatrix();
}

Configuration integrate(const Configuration& q, const VectorXd& nu, double dt) {
  Configuration r = q;
  r.p += dt * nu.head<3>();
  r.R = so3_exp(dt * nu.segment<3>(3)) * q.R;
  // Re-orthonormalize against round-off accumulation.
  const Eigen::JacobiSVD<Matrix3d> svd(r.R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  r.R = svd.matrixU() * svd.matrixV().transpose();
  r.s += dt * nu.tail(nu.size() - 6);
  return r;
}

Kinematics forward_kinematics(const RobotModel& model, const Configuration& q) {
  const Pass w = kinematic_pass(model, q);
  Kinematics k;
  k.links = w.X;
  for (std::size_t f = 0; f < model.frames().size(); ++f)
    k.frames.push_back(w.X[static_cast<std::size_t>(model.frame_link(static_cast<int>(f)))] * model.frames()[f].offset);
  return k;
}

Pose3 frame_pose(const RobotModel& model, const Configuration& q, std::string_view frame) {
  const int f = model.frame_index(frame);
  const Pass w = kinematic_pass(model, q);
  return w.X[static_cast<std::size_t>(model.frame_link(f))] * model.frame(f).offset;
}

Matrix6Xd frame_jacobian(const RobotModel& model, const Configuration& q, std::string_view frame) {
  const int f = model.frame_index(frame);
  const Pass w = kinematic_pass(model, q);
  const int li = model.frame_link(f);
  const Vector3d x = w.X[static_cast<std::size_t>(li)] * model.frame(f).offset.p;
  return point_jacobian(link_jacobian(model, w, li), x);
}

ComTerms com_and_jacobian(const RobotModel& model, const Configuration& q) {
  const Pass w = kinematic_pass(model, q);
  ComTerms c;
  c.J = Eigen::Matrix3Xd::Zero(3, model.nv());
  for (std::size_t i = 0; i < model.links().size(); ++i) {
    const Link& l = model.links()[i];
    if (l.mass == 0.0) continue;
    const Vector3d x = w.X[i] * l.com;
    c.p += l.mass * x;
    c.J += l.mass * point_jacobian(link_jacobian(model, w, static_cast<int>(i)), x).topRows<3>();
  }
  c.p /= model.total_mass();
  c.J /= model.total_mass();
  return c;
}

Vector3d com_drift(const RobotModel& model, const Configuration& q, const VectorXd& nu) {
  check_nu(model, nu, "com_drift");
  const Pass w = kinematic_pass(model, q);
  std::vector<Vector6d> V, A;
  motion_pass(model, w, nu, nullptr, Vector6d::Zero(), V, A);
  Vector3d acc = Vector3d::Zero();
  for (std::size_t i = 0; i < model.links().size(); ++i) {
    const Link& l = model.links()[i];
    if (l.mass == 0.0) continue;
    acc += l.mass * point_acceleration(V[i], A[i], w.X[i] * l.com);
  }
  return acc / model.total_mass();
}

MatrixXd mass_matrix(const RobotModel& model, const Configuration& q) {
  const Pass w = kinematic_pass(model, q);
  const auto& links = model.links();
  const auto nb = links.size();
  std::vector<Matrix6d> Ic(nb);
  for (std::size_t i = 0; i < nb; ++i) Ic[i] = link_inertia(links[i], w.X[i]);
  for (std::size_t i = nb; i-- > 1;) Ic[static_cast<std::size_t>(model.parents()[i])] += Ic[i];

  MatrixXd M = MatrixXd::Zero(model.nv(), model.nv());
  for (std::size_t i = 1; i < nb; ++i) {
    const int d = model.dof()[i];
    if (d < 0) continue;
    const Vector6d F = Ic[i] * w.S[i];
    M(d, d) = w.S[i].dot(F);
    for (int j = model.parents()[i]; j > 0; j = model.parents()[static_cast<std::size_t>(j)]) {
      const int dj = model.dof()[static_cast<std::size_t>(j)];
      if (dj < 0) continue;
      M(dj, d) = M(d, dj) = w.S[static_cast<std::size_t>(j)].dot(F);
    }
    const Vector6d Mb = w.SB.transpose() * F;
    M.block<6, 1>(0, d) = Mb;
    M.block<1, 6>(d, 0) = Mb.transpose();
  }
  M.topLeftCorner<6, 6>() = w.SB.transpose() * Ic[0] * w.SB;
  return M;
}

VectorXd inverse_dynamics(const RobotModel& model, const Configuration& q, const VectorXd& nu,
                          const VectorXd& nudot, const Vector3d& gravity) {
  check_nu(model, nu, "inverse_dynamics");
  check_nu(model, nudot, "inverse_dynamics");
  const Pass w = kinematic_pass(model, q);
  const auto& links = model.links();
  const auto nb = links.size();
  Vector6d a0 = Vector6d::Zero();
  a0.tail<3>() = -gravity;
  std::vector<Vector6d> V, A;
  motion_pass(model, w, nu, &nudot, a0, V, A);
  std::vector<Vector6d> f(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    const Matrix6d I = link_inertia(links[i], w.X[i]);
    f[i] = I * A[i] + crf(V[i], I * V[i]);
  }
  for (std::size_t i = nb; i-- > 1;) f[static_cast<std::size_t>(model.parents()[i])] += f[i];
  VectorXd tau(model.nv());
  for (std::size_t i = 1; i < nb; ++i)
    if (model.dof()[i] >= 0) tau(model.dof()[i]) = w.S[i].dot(f[i]);
  tau.head<6>() = w.SB.transpose() * f[0];
  return tau;
}

BiasForces bias_forces(const RobotModel& model, const Configuration& q, const VectorXd& nu, const Vector3d& gravity) {
  const VectorXd zero = VectorXd::Zero(model.nv());
  return {inverse_dynamics(model, q, nu, zero, gravity), inverse_dynamics(model, q, zero, zero, gravity)};
}

MatrixXd selector(const RobotModel& model) {
  MatrixXd B = MatrixXd::Zero(model.nv(), model.num_joints());
  B.bottomRows(model.num_joints()).setIdentity();
  return B;
}

Vector6d frame_drift(const RobotModel& model, const Configuration& q, const VectorXd& nu, std::string_view frame) {
  check_nu(model, nu, "frame_drift");
  const int f = model.frame_index(frame);
  const Pass w = kinematic_pass(model, q);
  std::vector<Vector6d> V, A;
  motion_pass(model, w, nu, nullptr, Vector6d::Zero(), V, A);
  const auto li = static_cast<std::size_t>(model.frame_link(f));
  Vector6d r;
  r.head<3>() = point_acceleration(V[li], A[li], w.X[li] * model.frame(f).offset.p);
  r.tail<3>() = A[li].head<3>();
  return r;
}

ContactStack contact_stack(const RobotModel& model, const Configuration& q, const VectorXd& nu,
                           const std::vector<std::string>& frames) {
  check_nu(model, nu, "contact_stack");
  const Pass w = kinematic_pass(model, q);
  std::vector<Vector6d> V, A;
  motion_pass(model, w, nu, nullptr, Vector6d::Zero(), V, A);
  ContactStack cs;
  cs.frames = frames;
  const auto nc = static_cast<Eigen::Index>(frames.size());
  cs.J.resize(6 * nc, model.nv());
  cs.Jdot_nu.resize(6 * nc);
  for (Eigen::Index k = 0; k < nc; ++k) {
    const int f = model.frame_index(frames[static_cast<std::size_t>(k)]);
    const int li = model.frame_link(f);
    const auto lu = static_cast<std::size_t>(li);
    const Vector3d x = w.X[lu] * model.frame(f).offset.p;
    cs.J.middleRows(6 * k, 6) = point_jacobian(link_jacobian(model, w, li), x);
    cs.Jdot_nu.segment<3>(6 * k) = point_acceleration(V[lu], A[lu], x);
    cs.Jdot_nu.segment<3>(6 * k + 3) = A[lu].head<3>();
  }
  return cs;
}

double kinetic_energy(const RobotModel& model, const Configuration& q, const VectorXd& nu) {
  check_nu(model, nu, "kinetic_energy");
  return 0.5 * nu.dot(mass_matrix(model, q) * nu);
}

double potential_energy(const RobotModel& model, const Configuration& q, const Vector3d& gravity) {
  return -model.total_mass() * gravity.dot(com_and_jacobian(model, q).p);
}

}  // namespace walkstack::rbd
