// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include "walkstack/tools/server.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <mutex>
#include <thread>
#include <vector>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "walkstack/protocol.hpp"

namespace walkstack::tools {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

std::string mime_type(const std::string& path) {
  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".wasm") return "application/wasm";
  if (ext == ".txt") return "text/plain; charset=utf-8";
  return "application/octet-stream";
}

std::string static_file_path(const std::string& root, const std::string& target) {
  std::string path = target.substr(0, target.find_first_of("?#"));
  if (path.empty() || path.front() != '/') return "";
  if (path.find_first_of("\\%") != std::string::npos || path.find('\0') != std::string::npos) return "";
  std::size_t start = 1;
  while (start <= path.size()) {
    const std::size_t end = std::min(path.find('/', start), path.size());
    const std::string segment = path.substr(start, end - start);
    if (segment == ".." || segment == ".") return "";
    start = end + 1;
  }
  if (path.back() == '/') path += "index.html";
  return root + path;
}

namespace {

class WsSession;

struct Pending {
  std::weak_ptr<WsSession> from;
  protocol::Command command;
};

}  // namespace

struct LiveServer::Impl {
  sim::ScenarioConfig config;
  ServerOptions options;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::thread net_thread;
  std::thread sim_thread;
  std::atomic<bool> running{false};
  std::atomic<std::uint64_t> frames{0};
  std::atomic<std::uint64_t> applied{0};

  std::mutex mutex;  // guards everything below
  std::vector<std::weak_ptr<WsSession>> sessions;
  std::deque<Pending> inbox;
  std::string hello;
  std::condition_variable stopped;

  void accept();
  void simulate();
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, LiveServer::Impl& server) : ws_(std::move(socket)), server_(server) {}

  void run(http::request<http::string_body> request) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(request, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

  /// Thread-safe; telemetry is dropped when the client falls behind.
  void send(std::shared_ptr<const std::string> message, bool droppable) {
    net::post(ws_.get_executor(), [self = shared_from_this(), message, droppable] {
      if (droppable && self->outbox_.size() >= self->server_.options.max_queue) return;
      self->outbox_.push_back(message);
      if (self->outbox_.size() == 1) self->write();
    });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::string hello;
    {
      std::lock_guard lock(server_.mutex);
      server_.sessions.push_back(weak_from_this());
      hello = server_.hello;
    }
    send(std::make_shared<const std::string>(std::move(hello)), false);
    read();
  }

  void read() { ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this())); }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;  // closed or broken; the simulation carries on
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    try {
      if (!ws_.got_text()) throw protocol::ProtocolError("binary messages are not supported");
      const protocol::Command c = protocol::parse_command(text);
      std::lock_guard lock(server_.mutex);
      server_.inbox.push_back({weak_from_this(), c});
    } catch (const protocol::ProtocolError& e) {
      send(std::make_shared<const std::string>(protocol::error_message(e.what())), false);
    }
    read();
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(*outbox_.front()),
                    beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      outbox_.clear();
      return;
    }
    outbox_.pop_front();
    if (!outbox_.empty()) write();
  }

  websocket::stream<beast::tcp_stream> ws_;
  LiveServer::Impl& server_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> outbox_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, LiveServer::Impl& server) : stream_(std::move(socket)), server_(server) {}

  void run() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, request_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

 private:
  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;
    if (websocket::is_upgrade(request_)) {
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), server_)->run(std::move(request_));
      return;
    }
    respond();
  }

  void respond() {
    auto error = [this](http::status status, const std::string& body) {
      auto res = std::make_shared<http::response<http::string_body>>(status, request_.version());
      res->set(http::field::content_type, "text/plain; charset=utf-8");
      res->keep_alive(false);
      res->body() = body;
      res->prepare_payload();
      send(res);
    };
    if (request_.method() != http::verb::get && request_.method() != http::verb::head)
      return error(http::status::method_not_allowed, "method not allowed\n");
    if (server_.options.static_dir.empty()) return error(http::status::not_found, "static serving disabled\n");
    const std::string path = static_file_path(server_.options.static_dir, std::string(request_.target()));
    if (path.empty()) return error(http::status::bad_request, "bad request target\n");
    http::file_body::value_type file;
    beast::error_code ec;
    if (std::filesystem::is_regular_file(path)) file.open(path.c_str(), beast::file_mode::scan, ec);
    if (!std::filesystem::is_regular_file(path) || ec) return error(http::status::not_found, "not found\n");
    const auto size = file.size();
    if (request_.method() == http::verb::head) {
      auto res = std::make_shared<http::response<http::empty_body>>(http::status::ok, request_.version());
      res->set(http::field::content_type, mime_type(path));
      res->content_length(size);
      res->keep_alive(false);
      return send(res);
    }
    auto res = std::make_shared<http::response<http::file_body>>(
        std::piecewise_construct, std::make_tuple(std::move(file)), std::make_tuple(http::status::ok, request_.version()));
    res->set(http::field::content_type, mime_type(path));
    res->content_length(size);
    res->keep_alive(false);
    send(res);
  }

  template <class Response>
  void send(std::shared_ptr<Response> res) {
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  LiveServer::Impl& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
};

}  // namespace

void LiveServer::Impl::accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (!running) return;
    if (!ec) std::make_shared<HttpSession>(std::move(socket), *this)->run();
    accept();
  });
}

void LiveServer::Impl::simulate() {
  sim::Scenario scenario(config);
  protocol::TelemetryClock clock(config.sim.dt_ctrl);
  using Clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(config.sim.dt_ctrl / options.speed));
  auto next = Clock::now();
  while (running) {
    std::deque<Pending> commands;
    {
      std::lock_guard lock(mutex);
      commands.swap(inbox);
    }
    for (const auto& p : commands) {
      const std::string refused = protocol::apply(scenario, p.command);
      ++applied;
      if (!refused.empty()) {
        if (auto s = p.from.lock()) s->send(std::make_shared<const std::string>(protocol::error_message(refused)), false);
      } else if (p.command.kind == protocol::CommandKind::Reset || p.command.kind == protocol::CommandKind::SetMode) {
        std::lock_guard lock(mutex);
        hello = protocol::hello_message(scenario);
      }
    }
    if (!scenario.finished()) {
      try {
        scenario.step();
      } catch (const sim::ScenarioError& e) {
        const auto msg = std::make_shared<const std::string>(protocol::error_message(e.what()));
        {
          std::lock_guard lock(mutex);
          for (const auto& w : sessions)
            if (auto s = w.lock()) s->send(msg, false);
        }
        scenario.reset();
      }
    }
    if (clock.tick()) {
      const auto frame = std::make_shared<const std::string>(protocol::encode_telemetry(scenario.last(), clock.time()));
      ++frames;
      std::lock_guard lock(mutex);
      std::erase_if(sessions, [](const auto& w) { return w.expired(); });
      for (const auto& w : sessions)
        if (auto s = w.lock()) s->send(frame, true);
    }
    next += period;
    const auto now = Clock::now();
    // Far behind (debugger, suspended host): resynchronize instead of bursting.
    if (now - next > std::chrono::milliseconds(500)) next = now;
    std::this_thread::sleep_until(next);
  }
}

LiveServer::LiveServer(sim::ScenarioConfig config, ServerOptions options) : impl_(std::make_unique<Impl>()) {
  if (!(options.speed > 0.0)) throw ConfigError("speed must be positive");
  config.output.clear();
  config.validate();
  impl_->config = std::move(config);
  impl_->options = std::move(options);
}

LiveServer::~LiveServer() { stop(); }

void LiveServer::start() {
  auto& s = *impl_;
  // Construct once up front so configuration errors surface here.
  {
    const sim::Scenario probe(s.config);
    s.hello = protocol::hello_message(probe);
  }
  const tcp::endpoint endpoint(net::ip::make_address(s.options.host), s.options.port);
  s.acceptor.open(endpoint.protocol());
  s.acceptor.set_option(net::socket_base::reuse_address(true));
  s.acceptor.bind(endpoint);
  s.acceptor.listen(net::socket_base::max_listen_connections);
  s.running = true;
  s.accept();
  s.net_thread = std::thread([&s] { s.ioc.run(); });
  s.sim_thread = std::thread([&s] { s.simulate(); });
}

void LiveServer::wait() {
  std::unique_lock lock(impl_->mutex);
  impl_->stopped.wait(lock, [this] { return !impl_->running; });
}

void LiveServer::stop() {
  auto& s = *impl_;
  {
    std::lock_guard lock(s.mutex);
    s.running = false;
  }
  s.stopped.notify_all();
  if (s.sim_thread.joinable()) s.sim_thread.join();
  s.ioc.stop();
  if (s.net_thread.joinable()) s.net_thread.join();
  beast::error_code ignored;
  s.acceptor.close(ignored);
}

std::uint16_t LiveServer::port() const { return impl_->acceptor.local_endpoint().port(); }
std::uint64_t LiveServer::frames_sent() const { return impl_->frames; }
std::uint64_t LiveServer::commands_applied() const { return impl_->applied; }

}  // namespace walkstack::tools
