// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkstack/unicycle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

#include "walkstack/common.hpp"

namespace walkstack::unicycle {

using Eigen::Matrix2d;
using Eigen::Vector2d;

ControlPoint::ControlPoint(const Vector2d& d) : d_(d) {
  if (!(d.x() > 0.0) || !d.allFinite())
    throw ConfigError("unicycle: control point d1 must be strictly positive (got " + std::to_string(d.x()) + ")");
}

ReferenceSignal::ReferenceSignal(std::vector<Sample> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw ConfigError("reference signal: no samples");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!std::isfinite(s.t) || !s.position.allFinite() || !s.velocity.allFinite())
      throw ConfigError("reference signal: non-finite value at row " + std::to_string(i));
    if (i > 0 && !(s.t > samples_[i - 1].t))
      throw ConfigError("reference signal: times must be strictly increasing (row " + std::to_string(i) + ")");
  }
}

ReferenceSignal ReferenceSignal::constant(const Vector2d& position, double t0) {
  return ReferenceSignal({Sample{t0, position, Vector2d::Zero()}});
}

ReferenceSignal ReferenceSignal::ramp(const Vector2d& start, const Vector2d& velocity, double t0, double t1) {
  if (!(t1 > t0)) throw DomainError("reference ramp: t1 must exceed t0");
  return ReferenceSignal(
      {Sample{t0, start, velocity}, Sample{t1, start + velocity * (t1 - t0), velocity}});
}

ReferenceSignal ReferenceSignal::from_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("reference csv: empty input");
  line.erase(std::remove_if(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\r'; }), line.end());
  if (line != "t,xf_x,xf_y,vxf_x,vxf_y")
    throw ConfigError("reference csv: expected header 't,xf_x,xf_y,vxf_x,vxf_y'");
  std::vector<Sample> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    Sample s;
    if (!(ls >> s.t >> s.position.x() >> s.position.y() >> s.velocity.x() >> s.velocity.y()))
      throw ConfigError("reference csv: malformed row at line " + std::to_string(lineno));
    rows.push_back(s);
  }
  return ReferenceSignal(std::move(rows));
}

ReferenceSignal ReferenceSignal::load_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("reference csv: cannot open '" + path + "'");
  return from_csv(f);
}

void ReferenceSignal::write_csv(std::ostream& os) const {
  os << "t,xf_x,xf_y,vxf_x,vxf_y\n" << std::setprecision(12);
  for (const auto& s : samples_)
    os << s.t << ',' << s.position.x() << ',' << s.position.y() << ',' << s.velocity.x() << ','
       << s.velocity.y() << '\n';
}

std::size_t ReferenceSignal::segment(double t) const {
  auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                             [](double v, const Sample& s) { return v < s.t; });
  return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - samples_.begin()) - 1));
}

Vector2d ReferenceSignal::position(double t) const {
  if (samples_.empty()) throw DomainError("reference signal is empty");
  if (t <= samples_.front().t) return samples_.front().position;
  if (t >= samples_.back().t) return samples_.back().position;
  const std::size_t i = segment(t);
  const auto& a = samples_[i];
  const auto& b = samples_[i + 1];
  const double w = (t - a.t) / (b.t - a.t);
  return (1.0 - w) * a.position + w * b.position;
}

Vector2d ReferenceSignal::velocity(double t) const {
  if (samples_.empty()) throw DomainError("reference signal is empty");
  if (samples_.size() == 1) return samples_.front().velocity;
  // Past the window the position is frozen, so the feedforward is zero.
  if (t < samples_.front().t || t > samples_.back().t) return Vector2d::Zero();
  if (t == samples_.back().t) return samples_.back().velocity;
  const std::size_t i = segment(t);
  const auto& a = samples_[i];
  const auto& b = samples_[i + 1];
  const double w = (t - a.t) / (b.t - a.t);
  return (1.0 - w) * a.velocity + w * b.velocity;
}

double ReferenceSignal::start_time() const { return samples_.empty() ? 0.0 : samples_.front().t; }
double ReferenceSignal::end_time() const { return samples_.empty() ? 0.0 : samples_.back().t; }

ReferenceSignal ReferenceSignal::shifted_to(double t0) const {
  if (samples_.empty()) return {};
  std::vector<Sample> out = samples_;
  const double shift = t0 - samples_.front().t;
  for (auto& s : out) s.t += shift;
  return ReferenceSignal(std::move(out));
}

Matrix2d output_matrix(double theta, const ControlPoint& d) {
  const Matrix2d R = rot2(theta);
  Matrix2d S;
  S << 0.0, -1.0, 1.0, 0.0;
  Matrix2d B;
  B.col(0) = R.col(0);
  B.col(1) = R * S * d.d();
  return B;
}

Vector2d control_point_position(const State& s, const ControlPoint& d) { return s.x + rot2(s.theta) * d.d(); }

void validate_gain(const Matrix2d& K) {
  if (!K.allFinite() || std::abs(K(0, 1) - K(1, 0)) > 1e-12 * std::max(1.0, K.cwiseAbs().maxCoeff()))
    throw ConfigError("unicycle: gain K must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix2d> es(K);
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw ConfigError("unicycle: gain K must be positive definite");
}

Command feedback_control(const State& s, const ControlPoint& d, const Matrix2d& K, const ReferenceSignal& ref,
                         double t, const Limits& limits) {
  const Vector2d err = control_point_position(s, d) - ref.position(t);
  const Vector2d rhs = ref.velocity(t) - K * err;
  const Matrix2d B = output_matrix(s.theta, d);
  const Vector2d u = B.inverse() * rhs;
  return {std::clamp(u.x(), -limits.v_max, limits.v_max), std::clamp(u.y(), -limits.omega_max, limits.omega_max)};
}

State integrate(const State& s, const Command& u, double dt) {
  const double half = 0.5 * u.omega * dt;
  const double sinc = std::abs(half) < 1e-8 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
  const double chord = u.v * dt * sinc;
  State out;
  out.x = s.x + chord * Vector2d(std::cos(s.theta + half), std::sin(s.theta + half));
  out.theta = wrap_angle(s.theta + u.omega * dt);
  return out;
}

DiscretizedPath simulate_closed_loop(const State& initial, const ControlPoint& d, const Matrix2d& K,
                                     const ReferenceSignal& ref, double T, double dt,
                                     const SimulationOptions& options) {
  if (!(T > 0.0)) throw DomainError("simulate_closed_loop: T must be positive");
  if (!(dt > 0.0)) throw DomainError("simulate_closed_loop: dt must be positive");
  validate_gain(K);
  const double steps_real = std::floor(T / dt + 1e-9);
  if (steps_real + 1.0 > static_cast<double>(options.max_samples))
    throw ConfigError("simulate_closed_loop: " + std::to_string(static_cast<long long>(steps_real + 1)) +
                      " samples exceed the budget of " + std::to_string(options.max_samples));
  const int steps = static_cast<int>(steps_real);
  DiscretizedPath path;
  path.t0 = options.t0;
  path.dt = dt;
  path.samples.reserve(static_cast<std::size_t>(steps) + 1);
  State s = initial;
  s.theta = wrap_angle(s.theta);
  path.samples.push_back({0, s.x, s.theta});
  for (int k = 0; k < steps; ++k) {
    const double t = options.t0 + k * dt;
    s = integrate(s, feedback_control(s, d, K, ref, t, options.limits), dt);
    path.samples.push_back({k + 1, s.x, s.theta});
  }
  return path;
}

ReferenceSignal joystick_reference(const State& initial, const ControlPoint& d, const Matrix2d& K,
                                   const Vector2d& offset, double t0, double T, double dt, const Limits& limits) {
  if (!(T > 0.0) || !(dt > 0.0)) throw DomainError("joystick_reference: T and dt must be positive");
  validate_gain(K);
  const int steps = static_cast<int>(std::floor(T / dt + 1e-9));
  std::vector<ReferenceSignal::Sample> samples;
  samples.reserve(static_cast<std::size_t>(steps) + 1);
  State s = initial;
  for (int k = 0; k <= steps; ++k) {
    const Vector2d target = control_point_position(s, d) + rot2(s.theta) * offset;
    samples.push_back({t0 + k * dt, target, Vector2d::Zero()});
    if (k == steps) break;
    const ReferenceSignal carrot = ReferenceSignal::constant(target, t0 + k * dt);
    s = integrate(s, feedback_control(s, d, K, carrot, t0 + k * dt, limits), dt);
  }
  return ReferenceSignal(std::move(samples));
}

}  // namespace walkstack::unicycle
