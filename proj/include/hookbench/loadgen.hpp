#pragma once

// Closed-loop load generator with embedded RTT monitoring. One request is
// outstanding at any time; each exchange is timed on the monotonic clock from
// just before the first request byte is sent to just after the last response
// byte arrives.

#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hookbench/error.hpp"
#include "hookbench/http.hpp"
#include "hookbench/net.hpp"
#include "hookbench/stats.hpp"

namespace hookbench::loadgen {

enum class Status { ok, blocked, transport_error };

inline std::string_view to_string(Status s) {
  switch (s) {
    case Status::ok: return "ok";
    case Status::blocked: return "blocked";
    case Status::transport_error: return "transport_error";
  }
  return "transport_error";
}

inline std::optional<Status> parse_status(std::string_view s) {
  if (s == "ok") return Status::ok;
  if (s == "blocked") return Status::blocked;
  if (s == "transport_error") return Status::transport_error;
  return std::nullopt;
}

struct RttSample {
  std::uint64_t seq = 0;
  std::uint64_t rtt_ns = 0;
  Status status = Status::ok;

  friend bool operator==(const RttSample&, const RttSample&) = default;
};

struct LoadConfig {
  net::Endpoint target;
  std::uint64_t total_requests = 50000;
  std::optional<std::string> keyword_payload;
  std::optional<std::uint64_t> keyword_every;  // every k-th request; 1 when unset
  bool reconnect_per_request = false;
  std::chrono::milliseconds receive_timeout{10000};

  bool carries_keyword(std::uint64_t seq) const {
    if (!keyword_payload) return false;
    const std::uint64_t k = keyword_every.value_or(1);
    return (seq + 1) % k == 0;
  }

  void validate() const {
    if (total_requests < 1) throw Error("total_requests must be >= 1");
    if (keyword_every && *keyword_every < 1) throw Error("keyword_every must be >= 1");
    if (target.port == 0) throw Error("target port must be set");
  }
};

struct LoadResult {
  std::vector<RttSample> samples;  // every attempt, seq 0..total-1
  std::uint64_t ok_count = 0;
  std::uint64_t blocked_count = 0;
  std::uint64_t transport_error_count = 0;

  /// RTTs of successful exchanges, in order.
  stats::RttSeries series(std::string label = {}) const {
    std::vector<std::uint64_t> values;
    values.reserve(ok_count);
    for (const auto& s : samples) {
      if (s.status == Status::ok) values.push_back(s.rtt_ns);
    }
    return stats::RttSeries(std::move(values), std::move(label));
  }
};

inline LoadResult tally(std::vector<RttSample> samples) {
  LoadResult r;
  r.samples = std::move(samples);
  for (const auto& s : r.samples) {
    switch (s.status) {
      case Status::ok: ++r.ok_count; break;
      case Status::blocked: ++r.blocked_count; break;
      case Status::transport_error: ++r.transport_error_count; break;
    }
  }
  return r;
}

/// One request/response interchange on an open connection. A failure status
/// means the connection is no longer usable.
inline RttSample single_exchange(int fd, std::string_view request, std::uint64_t seq,
                                 bool carries_keyword) {
  using clock = std::chrono::steady_clock;
  RttSample sample;
  sample.seq = seq;
  const Status failure = carries_keyword ? Status::blocked : Status::transport_error;

  std::string buffer;
  char chunk[4096];
  const auto start = clock::now();
  bool ok = net::write_all(fd, request);
  std::optional<http::ResponseFrame> frame;
  while (ok) {
    const ssize_t n = ::read(fd, chunk, sizeof(chunk));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      ok = false;
      break;
    }
    buffer.append(chunk, static_cast<std::size_t>(n));
    try {
      frame = http::parse_response_frame(buffer);
    } catch (const http::MalformedRequest&) {
      const auto end = clock::now();
      sample.rtt_ns = static_cast<std::uint64_t>(std::chrono::nanoseconds(end - start).count());
      sample.status = Status::transport_error;
      return sample;
    }
    if (frame) break;
  }
  const auto end = clock::now();
  sample.rtt_ns = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(end - start).count()));
  if (!ok) {
    sample.status = failure;
  } else if (frame->status != 200 || frame->total_size != buffer.size()) {
    sample.status = Status::transport_error;
  } else {
    sample.status = Status::ok;
  }
  return sample;
}

/// Runs exactly `total_requests` sequential attempts. Throws RuntimeFailure if
/// the target cannot be reached before the first request.
inline LoadResult run_load(const LoadConfig& config) {
  config.validate();
  auto connect = [&] {
    auto fd = net::connect_tcp(config.target);
    net::set_receive_timeout(fd.get(), config.receive_timeout);
    return fd;
  };

  net::UniqueFd conn = connect();
  const std::string host = config.target.to_string();
  const std::string plain = http::build_request(host, std::nullopt, config.reconnect_per_request);
  std::string keyworded;
  if (config.keyword_payload) {
    keyworded = http::build_request(host, std::string_view(*config.keyword_payload),
                                    config.reconnect_per_request);
  }

  std::vector<RttSample> samples;
  samples.reserve(config.total_requests);
  for (std::uint64_t seq = 0; seq < config.total_requests; ++seq) {
    const bool keyword = config.carries_keyword(seq);
    if (!conn) {
      try {
        conn = connect();
      } catch (const RuntimeFailure&) {
        samples.push_back({seq, 0, Status::transport_error});
        continue;
      }
    }
    auto sample = single_exchange(conn.get(), keyword ? keyworded : plain, seq, keyword);
    if (sample.status != Status::ok || config.reconnect_per_request) conn.reset();
    samples.push_back(sample);
  }
  return tally(std::move(samples));
}

}  // namespace hookbench::loadgen
