// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace walkstack {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters detected when a component is configured.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument value does not hold (e.g. a non-positive
/// time step).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A robot model document failed validation.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// An optimization layer could not produce a feasible answer.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

enum class Side { Left, Right };

constexpr Side other(Side s) { return s == Side::Left ? Side::Right : Side::Left; }
constexpr std::string_view to_string(Side s) { return s == Side::Left ? "left" : "right"; }
Side side_from_string(std::string_view s);

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

/// Signed shortest rotation taking `from` onto `to`.
inline double angle_diff(double to, double from) { return wrap_angle(to - from); }

inline Eigen::Matrix2d rot2(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

/// Planar pose of a foot or of the unicycle.
struct Pose2 {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double yaw = 0.0;
};

}  // namespace walkstack
