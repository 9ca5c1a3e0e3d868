// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "walkstack/scenario.hpp"

namespace walkstack::tools {

struct ServerOptions {
  std::string host = "127.0.0.1";
  /// 0 picks a free port; see LiveServer::port().
  std::uint16_t port = 8080;
  /// Directory served over plain HTTP; empty disables static serving.
  std::string static_dir;
  /// Simulated seconds per wall-clock second.
  double speed = 1.0;
  /// Per-client backlog beyond which telemetry frames are dropped.
  std::size_t max_queue = 32;
};

/// Live session: one simulation loop paced by the wall clock, WebSocket
/// clients receiving telemetry at 50 Hz and sending commands that are
/// applied at the next control tick. Requests that are not WebSocket
/// upgrades are answered from the static directory.
class LiveServer {
 public:
  LiveServer(sim::ScenarioConfig config, ServerOptions options);
  ~LiveServer();
  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  /// Binds and starts the network and simulation threads.
  void start();
  /// Blocks until stop() is called from another thread.
  void wait();
  void stop();

  std::uint16_t port() const;
  /// Frames broadcast so far.
  std::uint64_t frames_sent() const;
  /// Commands applied so far, in order of application.
  std::uint64_t commands_applied() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

/// Content type for a static file name.
std::string mime_type(const std::string& path);

/// Maps a request target onto a file below `root`. Returns an empty string
/// for targets that escape the root or contain invalid characters.
std::string static_file_path(const std::string& root, const std::string& target);

}  // namespace walkstack::tools
