#pragma once

// System under test: answers every HTTP request with "Hello World".
//
// Socket input goes through ::read so that a preloaded interposer of the
// `read` symbol sees every request byte the server consumes.

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include "hookbench/error.hpp"
#include "hookbench/http.hpp"
#include "hookbench/net.hpp"

namespace hookbench::sut {

struct SutConfig {
  std::uint16_t listen_port = 18080;
  std::uint32_t delay_us = 0;  // synthetic busy-wait per request
  std::size_t max_connections = 128;
};

/// Spins (does not sleep) for the given duration on the monotonic clock.
inline void busy_wait(std::chrono::microseconds duration) {
  if (duration.count() <= 0) return;
  const auto until = std::chrono::steady_clock::now() + duration;
  while (std::chrono::steady_clock::now() < until) {
  }
}

class Server {
 public:
  explicit Server(SutConfig config)
      : config_(config), listener_(net::listen_tcp(config.listen_port)), state_(std::make_shared<State>()) {
    if (config_.max_connections == 0) throw Error("max_connections must be positive");
    port_ = net::local_port(listener_.get());
  }

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  std::uint64_t requests_served() const noexcept { return state_->served.load(); }
  std::size_t active_connections() const {
    std::lock_guard lock(state_->mu);
    return state_->fds.size();
  }

  /// Accepts connections until `stop` becomes true, then tears down every
  /// open connection and returns once all handlers have finished.
  void run(const std::atomic<bool>& stop) {
    while (!stop.load()) {
      pollfd pfd{listener_.get(), POLLIN, 0};
      const int rc = ::poll(&pfd, 1, 50);
      if (rc <= 0) continue;
      const int fd = ::accept4(listener_.get(), nullptr, nullptr, SOCK_CLOEXEC);
      if (fd < 0) continue;
      {
        std::lock_guard lock(state_->mu);
        if (state_->fds.size() >= config_.max_connections) {
          ::close(fd);
          continue;
        }
        state_->fds.insert(fd);
      }
      net::set_nodelay(fd);
      std::thread(handle_connection, fd, std::chrono::microseconds(config_.delay_us), state_).detach();
    }
    listener_.reset();
    std::unique_lock lock(state_->mu);
    for (int fd : state_->fds) ::shutdown(fd, SHUT_RDWR);
    state_->cv.wait(lock, [&] { return state_->fds.empty(); });
  }

 private:
  struct State {
    mutable std::mutex mu;
    std::condition_variable cv;
    std::set<int> fds;
    std::atomic<std::uint64_t> served{0};
  };

  static void handle_connection(int fd, std::chrono::microseconds delay, std::shared_ptr<State> state) {
    serve_connection(fd, delay, state->served);
    std::lock_guard lock(state->mu);
    state->fds.erase(fd);
    ::close(fd);
    state->cv.notify_all();
  }

  static void serve_connection(int fd, std::chrono::microseconds delay, std::atomic<std::uint64_t>& served) {
    std::string buffer;
    char chunk[4096];
    for (;;) {
      const ssize_t n = ::read(fd, chunk, sizeof(chunk));
      if (n == 0) return;
      if (n < 0) {
        if (errno == EINTR) continue;
        return;  // includes a hook refusing the bytes
      }
      buffer.append(chunk, static_cast<std::size_t>(n));
      for (;;) {
        http::Boundary boundary;
        try {
          boundary = http::parse_request_boundary(buffer);
        } catch (const http::MalformedRequest&) {
          return;
        }
        if (!boundary.complete()) break;
        const bool close_after = http::wants_close(std::string_view(buffer).substr(0, boundary.end));
        buffer.erase(0, boundary.end);
        busy_wait(delay);
        if (!net::write_all(fd, http::render_response())) return;
        served.fetch_add(1);
        if (close_after) return;
      }
    }
  }

  SutConfig config_;
  net::UniqueFd listener_;
  std::uint16_t port_ = 0;
  std::shared_ptr<State> state_;
};

}  // namespace hookbench::sut
