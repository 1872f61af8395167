#pragma once

// Sample files: `seq,rtt_ns,status` with a header row, LF line endings.
// Hook timing files: `scan_ns,matched`, optional header row.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hookbench/error.hpp"
#include "hookbench/loadgen.hpp"

namespace hookbench::io {

inline constexpr std::string_view kSamplesHeader = "seq,rtt_ns,status";

inline std::string samples_to_csv(const std::vector<loadgen::RttSample>& samples) {
  std::string out;
  out.reserve(32 * (samples.size() + 1));
  out += kSamplesHeader;
  out += '\n';
  for (const auto& s : samples) {
    out += std::to_string(s.seq);
    out += ',';
    out += std::to_string(s.rtt_ns);
    out += ',';
    out += loadgen::to_string(s.status);
    out += '\n';
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeFailure("cannot open " + path.string() + " for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw RuntimeFailure("write failed: " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw RuntimeFailure("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_samples_csv(const std::vector<loadgen::RttSample>& samples,
                              const std::filesystem::path& path) {
  write_file(path, samples_to_csv(samples));
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
  return v;
}

// Calls fn(line, line_number) for each non-empty line; tolerates a trailing CR.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    fn(line, line_no);
  }
}

}  // namespace detail

inline std::vector<loadgen::RttSample> parse_samples_csv(std::string_view text) {
  std::vector<loadgen::RttSample> out;
  bool header_seen = false;
  detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (!header_seen) {
      if (line != kSamplesHeader) throw ParseError("expected header '" + std::string(kSamplesHeader) + "'", line_no);
      header_seen = true;
      return;
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != 3) throw ParseError("expected 3 fields", line_no);
    const auto seq = detail::parse_u64(fields[0]);
    const auto rtt = detail::parse_u64(fields[1]);
    const auto status = loadgen::parse_status(fields[2]);
    if (!seq) throw ParseError("bad seq '" + std::string(fields[0]) + "'", line_no);
    if (!rtt) throw ParseError("bad rtt_ns '" + std::string(fields[1]) + "'", line_no);
    if (!status) throw ParseError("bad status '" + std::string(fields[2]) + "'", line_no);
    if (*status == loadgen::Status::ok && *rtt == 0) throw ParseError("ok sample with rtt_ns = 0", line_no);
    out.push_back({*seq, *rtt, *status});
  });
  if (!header_seen) throw ParseError("missing header", 1);
  return out;
}

inline std::vector<loadgen::RttSample> read_samples_csv(const std::filesystem::path& path) {
  try {
    return parse_samples_csv(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

struct HookTimingRecord {
  std::uint64_t scan_ns = 0;
  bool matched = false;
};

struct HookTimingSummary {
  std::size_t records = 0;
  std::size_t matched = 0;
  double mean_scan_ns = 0.0;
  double sd_scan_ns = 0.0;  // 0 when fewer than 2 records
};

inline std::vector<HookTimingRecord> parse_hook_timing(std::string_view text) {
  std::vector<HookTimingRecord> out;
  bool first = true;
  detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const bool header_allowed = std::exchange(first, false);
    if (header_allowed && line == "scan_ns,matched") return;
    const auto fields = detail::split(line, ',');
    if (fields.size() != 2) throw ParseError("expected 'scan_ns,matched'", line_no);
    const auto scan = detail::parse_u64(fields[0]);
    if (!scan) throw ParseError("bad scan_ns '" + std::string(fields[0]) + "'", line_no);
    bool matched = false;
    if (fields[1] == "1" || fields[1] == "true") {
      matched = true;
    } else if (fields[1] != "0" && fields[1] != "false") {
      throw ParseError("bad matched flag '" + std::string(fields[1]) + "'", line_no);
    }
    out.push_back({*scan, matched});
  });
  return out;
}

inline HookTimingSummary summarize_hook_timing(const std::vector<HookTimingRecord>& records) {
  HookTimingSummary s;
  s.records = records.size();
  if (records.empty()) return s;
  double sum = 0.0;
  for (const auto& r : records) {
    sum += static_cast<double>(r.scan_ns);
    if (r.matched) ++s.matched;
  }
  s.mean_scan_ns = sum / static_cast<double>(records.size());
  if (records.size() >= 2) {
    double ss = 0.0;
    for (const auto& r : records) {
      const double d = static_cast<double>(r.scan_ns) - s.mean_scan_ns;
      ss += d * d;
    }
    s.sd_scan_ns = std::sqrt(ss / static_cast<double>(records.size() - 1));
  }
  return s;
}

inline HookTimingSummary read_hook_timing_summary(const std::filesystem::path& path) {
  return summarize_hook_timing(parse_hook_timing(read_file(path)));
}

}  // namespace hookbench::io
