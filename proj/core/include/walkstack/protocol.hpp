// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "walkstack/common.hpp"
#include "walkstack/scenario.hpp"
#include "walkstack/sim.hpp"

/// JSON messages exchanged with live clients. Layout documented in
/// docs/protocol.md.
namespace walkstack::protocol {

constexpr int kProtocolVersion = 1;
/// Telemetry is decimated to this rate.
constexpr double kTelemetryRate = 50.0;

class ProtocolError : public Error {
 public:
  using Error::Error;
};

enum class CommandKind { SetReferenceVelocity, SetMode, Pause, Resume, Reset };

std::string_view to_string(CommandKind k);

struct Command {
  CommandKind kind = CommandKind::Pause;
  /// SetReferenceVelocity: normalized joystick, clamped to [-1, 1].
  double vx = 0.0;
  double vy = 0.0;
  /// SetMode.
  sim::Mode mode = sim::Mode::Position;
};

/// Parses a client message. Throws ProtocolError on malformed JSON, unknown
/// kinds, missing or non-numeric fields and version mismatches. Joystick
/// values are clamped; non-finite values are rejected.
Command parse_command(std::string_view text);
std::string encode_command(const Command& command);

/// Applies a command to the session. Returns an error message when the
/// session refused it (for example a mode change after the first tick).
std::string apply(sim::Scenario& scenario, const Command& command);

/// Sent once per connection.
std::string hello_message(const sim::Scenario& scenario);
std::string error_message(std::string_view what);

/// Telemetry frame for a tick record. `t` is the stream clock, which keeps
/// increasing across session resets; the record time is sent as sim_time.
std::string encode_telemetry(const sim::TickRecord& record, double t);

/// Thread-safe command inbox drained once per control tick.
class CommandQueue {
 public:
  void push(Command c);
  std::vector<Command> drain();

 private:
  std::mutex mutex_;
  std::deque<Command> queue_;
};

/// Decides which control ticks produce a telemetry frame and keeps the
/// stream clock strictly increasing.
class TelemetryClock {
 public:
  explicit TelemetryClock(double dt_ctrl, double rate = kTelemetryRate);

  /// Called after every executed tick; returns true when a frame is due.
  bool tick();
  double time() const { return t_; }
  int decimation() const { return every_; }

 private:
  double dt_;
  int every_;
  long count_ = 0;
  double t_ = 0.0;
};

}  // namespace walkstack::protocol
