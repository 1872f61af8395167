#pragma once

// The HTTP/1.1 subset spoken between the load generator and the SUT:
// header-only requests, one fixed 200 response.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "hookbench/error.hpp"

namespace hookbench::http {

inline constexpr std::size_t kMaxHeaderBytes = 64 * 1024;
inline constexpr std::string_view kHeaderTerminator = "\r\n\r\n";
inline constexpr std::string_view kBody = "Hello World";

class MalformedRequest : public Error {
 public:
  using Error::Error;
};

enum class BoundaryState { complete, incomplete };

struct Boundary {
  BoundaryState state = BoundaryState::incomplete;
  std::size_t end = 0;  // one past the terminator when complete

  bool complete() const noexcept { return state == BoundaryState::complete; }
};

inline Boundary parse_request_boundary(std::string_view buffer) {
  const auto pos = buffer.find(kHeaderTerminator);
  if (pos != std::string_view::npos) {
    return {BoundaryState::complete, pos + kHeaderTerminator.size()};
  }
  if (buffer.size() > kMaxHeaderBytes) {
    throw MalformedRequest("request header exceeds " + std::to_string(kMaxHeaderBytes) +
                           " bytes without terminator");
  }
  return {};
}

inline const std::string& render_response() {
  static const std::string response =
      "HTTP/1.1 200 OK\r\n"
      "Content-Length: 11\r\n"
      "Content-Type: text/plain\r\n"
      "Connection: keep-alive\r\n"
      "\r\n"
      "Hello World";
  return response;
}

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::ranges::transform(out, out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Case-insensitive lookup of a header value inside a header block.
inline std::optional<std::string> header_value(std::string_view head, std::string_view name) {
  const auto wanted = detail::lower(name);
  std::size_t line_start = head.find("\r\n");
  while (line_start != std::string_view::npos) {
    line_start += 2;
    const auto line_end = head.find("\r\n", line_start);
    const auto line = head.substr(line_start, line_end == std::string_view::npos
                                                  ? std::string_view::npos
                                                  : line_end - line_start);
    if (line.empty()) break;
    const auto colon = line.find(':');
    if (colon != std::string_view::npos && detail::lower(detail::trim(line.substr(0, colon))) == wanted) {
      return std::string(detail::trim(line.substr(colon + 1)));
    }
    line_start = line_end;
  }
  return std::nullopt;
}

inline bool wants_close(std::string_view request_head) {
  const auto v = header_value(request_head, "Connection");
  return v && detail::lower(*v) == "close";
}

/// GET request, optionally carrying `keyword` in the request target.
inline std::string build_request(std::string_view host, std::optional<std::string_view> keyword,
                                 bool close_connection) {
  std::string req = "GET /";
  if (keyword) {
    req += "?q=";
    req += *keyword;
  }
  req += " HTTP/1.1\r\nHost: ";
  req += host;
  req += "\r\n";
  if (close_connection) req += "Connection: close\r\n";
  req += "\r\n";
  return req;
}

struct ResponseFrame {
  int status = 0;
  std::size_t total_size = 0;  // head + body
};

/// Returns the frame once the buffer holds a complete response, nullopt while
/// more bytes are needed. Throws MalformedRequest for unparseable heads.
inline std::optional<ResponseFrame> parse_response_frame(std::string_view buffer) {
  const auto head_end = buffer.find(kHeaderTerminator);
  if (head_end == std::string_view::npos) {
    if (buffer.size() > kMaxHeaderBytes) throw MalformedRequest("response header too large");
    return std::nullopt;
  }
  const auto head = buffer.substr(0, head_end + 2);
  if (!head.starts_with("HTTP/1.")) throw MalformedRequest("not an HTTP/1.x response");
  ResponseFrame frame;
  const auto sp = head.find(' ');
  if (sp == std::string_view::npos || sp + 4 > head.size()) throw MalformedRequest("bad status line");
  const auto code = head.substr(sp + 1, 3);
  if (!std::ranges::all_of(code, [](char c) { return c >= '0' && c <= '9'; })) {
    throw MalformedRequest("bad status code");
  }
  frame.status = std::stoi(std::string(code));
  std::size_t body = 0;
  if (auto cl = header_value(head, "Content-Length")) {
    try {
      body = std::stoul(*cl);
    } catch (const std::exception&) {
      throw MalformedRequest("bad Content-Length");
    }
  }
  frame.total_size = head_end + kHeaderTerminator.size() + body;
  if (buffer.size() < frame.total_size) return std::nullopt;
  return frame;
}

}  // namespace hookbench::http
