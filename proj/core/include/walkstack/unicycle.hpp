// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace walkstack::unicycle {

struct State {
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  double theta = 0.0;  // kept in (-pi, pi]
};

struct Command {
  double v = 0.0;
  double omega = 0.0;
};

/// Point F rigidly attached to the unicycle, expressed in the body frame.
/// The output-feedback law is singular for d1 = 0, so d1 must be positive.
class ControlPoint {
 public:
  ControlPoint() : ControlPoint(Eigen::Vector2d(0.2, 0.0)) {}
  explicit ControlPoint(const Eigen::Vector2d& d);

  const Eigen::Vector2d& d() const { return d_; }

 private:
  Eigen::Vector2d d_;
};

struct Limits {
  double v_max = 0.5;
  double omega_max = 1.0;
};

/// Time-indexed desired position and velocity of F, linearly interpolated
/// between samples and clamped to the end samples outside the window.
class ReferenceSignal {
 public:
  struct Sample {
    double t = 0.0;
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  };

  ReferenceSignal() = default;
  /// Samples must have strictly increasing times.
  explicit ReferenceSignal(std::vector<Sample> samples);

  static ReferenceSignal constant(const Eigen::Vector2d& position, double t0 = 0.0);
  /// Straight ramp position(t) = start + velocity * (t - t0) for t in [t0, t1].
  static ReferenceSignal ramp(const Eigen::Vector2d& start, const Eigen::Vector2d& velocity, double t0,
                              double t1);
  /// CSV with header `t,xf_x,xf_y,vxf_x,vxf_y`.
  static ReferenceSignal from_csv(std::istream& is);
  static ReferenceSignal load_csv(const std::string& path);
  void write_csv(std::ostream& os) const;

  Eigen::Vector2d position(double t) const;
  Eigen::Vector2d velocity(double t) const;
  double start_time() const;
  double end_time() const;
  bool empty() const { return samples_.empty(); }
  const std::vector<Sample>& samples() const { return samples_; }

  /// Copy shifted in time so that the first sample sits at t0.
  ReferenceSignal shifted_to(double t0) const;

 private:
  std::size_t segment(double t) const;
  std::vector<Sample> samples_;
};

struct PathSample {
  int k = 0;
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  double theta = 0.0;
};

/// Closed-loop trajectory sampled at a fixed period; sample k is at t0 + k*dt.
struct DiscretizedPath {
  double t0 = 0.0;
  double dt = 0.01;
  std::vector<PathSample> samples;

  double time(std::size_t i) const { return t0 + static_cast<double>(samples[i].k) * dt; }
  State state(std::size_t i) const { return {samples[i].x, samples[i].theta}; }
};

/// B(theta) = [R(theta) e1 | R(theta) S d], so that xdot_F = B(theta) u.
Eigen::Matrix2d output_matrix(double theta, const ControlPoint& d);

/// World position of F.
Eigen::Vector2d control_point_position(const State& s, const ControlPoint& d);

/// Throws ConfigError unless K is symmetric positive definite.
void validate_gain(const Eigen::Matrix2d& K);

/// u = B(theta)^-1 (xdot_F* - K (x_F - x_F*)), saturated componentwise.
Command feedback_control(const State& s, const ControlPoint& d, const Eigen::Matrix2d& K,
                         const ReferenceSignal& ref, double t, const Limits& limits = {});

/// Exact integration of a constant (v, omega) over dt.
State integrate(const State& s, const Command& u, double dt);

struct SimulationOptions {
  Limits limits;
  std::size_t max_samples = 1'000'000;
  double t0 = 0.0;
};

/// Alternates feedback_control and integrate; floor(T/dt)+1 samples.
DiscretizedPath simulate_closed_loop(const State& initial, const ControlPoint& d, const Eigen::Matrix2d& K,
                                     const ReferenceSignal& ref, double T, double dt,
                                     const SimulationOptions& options = {});

/// Reference produced by a joystick that keeps F* at a fixed body-frame
/// offset from F. The returned signal is what a closed-loop unicycle
/// starting at `initial` would chase over [t0, t0 + T].
ReferenceSignal joystick_reference(const State& initial, const ControlPoint& d, const Eigen::Matrix2d& K,
                                   const Eigen::Vector2d& offset, double t0, double T, double dt,
                                   const Limits& limits = {});

}  // namespace walkstack::unicycle
