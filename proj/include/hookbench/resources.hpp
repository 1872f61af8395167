#pragma once

// Periodic CPU / resident-memory sampling of running processes via /proc, so
// a report can show whether a run hit resource limits.

#include <sys/types.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

namespace hookbench::resources {

inline constexpr double kCpuFlagThreshold = 90.0;  // percent of one core
inline constexpr std::size_t kCpuFlagMinSamples = 5;

struct ResourceSample {
  double t_s = 0.0;  // seconds since watch start
  double cpu_percent = 0.0;
  std::uint64_t rss_bytes = 0;
};

/// Inclusive range of consecutive samples over the CPU threshold.
struct CpuFlag {
  std::size_t first = 0;
  std::size_t last = 0;
};

struct ProcessTrace {
  std::string role;
  pid_t pid = 0;
  std::vector<ResourceSample> samples;
  std::vector<CpuFlag> flags;
  bool truncated = false;  // process exited while being watched
};

struct WatchTarget {
  std::string role;
  pid_t pid = 0;
};

struct ProcStat {
  char state = '?';
  std::uint64_t cpu_ticks = 0;  // utime + stime
};

inline std::optional<ProcStat> read_proc_stat(pid_t pid) {
  std::ifstream f("/proc/" + std::to_string(pid) + "/stat");
  if (!f) return std::nullopt;
  std::string line;
  std::getline(f, line);
  const auto rparen = line.rfind(')');
  if (rparen == std::string::npos) return std::nullopt;
  std::istringstream rest(line.substr(rparen + 2));
  // Fields after the command name start at field 3 (state); utime/stime are 14/15.
  std::vector<std::string> fields;
  std::string tok;
  while (rest >> tok && fields.size() < 13) fields.push_back(tok);
  if (fields.size() < 13) return std::nullopt;
  ProcStat s;
  s.state = fields[0].empty() ? '?' : fields[0][0];
  s.cpu_ticks = std::stoull(fields[11]) + std::stoull(fields[12]);
  return s;
}

inline std::optional<std::uint64_t> read_rss_bytes(pid_t pid) {
  std::ifstream f("/proc/" + std::to_string(pid) + "/statm");
  std::uint64_t size = 0, resident = 0;
  if (!(f >> size >> resident)) return std::nullopt;
  return resident * static_cast<std::uint64_t>(::sysconf(_SC_PAGESIZE));
}

inline std::vector<CpuFlag> flag_sustained_cpu(const std::vector<ResourceSample>& samples,
                                               double threshold = kCpuFlagThreshold,
                                               std::size_t min_samples = kCpuFlagMinSamples) {
  std::vector<CpuFlag> flags;
  std::size_t run_start = 0, run_len = 0;
  for (std::size_t i = 0; i <= samples.size(); ++i) {
    const bool hot = i < samples.size() && samples[i].cpu_percent > threshold;
    if (hot) {
      if (run_len++ == 0) run_start = i;
      continue;
    }
    if (run_len >= min_samples) flags.push_back({run_start, run_start + run_len - 1});
    run_len = 0;
  }
  return flags;
}

/// Samples every target at a fixed interval on a background thread until stop().
class ResourceWatcher {
 public:
  ResourceWatcher(std::vector<WatchTarget> targets, std::chrono::milliseconds interval)
      : interval_(interval) {
    for (auto& t : targets) traces_.push_back({std::move(t.role), t.pid, {}, {}, false});
    thread_ = std::jthread([this](std::stop_token st) { loop(st); });
  }

  ResourceWatcher(const ResourceWatcher&) = delete;
  ResourceWatcher& operator=(const ResourceWatcher&) = delete;
  ~ResourceWatcher() { stop(); }

  std::vector<ProcessTrace> stop() {
    if (thread_.joinable()) {
      thread_.request_stop();
      cv_.notify_all();
      thread_.join();
      for (auto& t : traces_) t.flags = flag_sustained_cpu(t.samples);
    }
    return traces_;
  }

 private:
  void loop(std::stop_token st) {
    using clock = std::chrono::steady_clock;
    const double ticks_per_s = static_cast<double>(::sysconf(_SC_CLK_TCK));
    const auto start = clock::now();
    std::vector<std::optional<std::uint64_t>> last_ticks(traces_.size());
    auto last_time = start;
    for (std::size_t i = 0; i < traces_.size(); ++i) {
      if (auto s = read_proc_stat(traces_[i].pid)) last_ticks[i] = s->cpu_ticks;
    }
    std::mutex mu;
    auto next = start + interval_;
    while (!st.stop_requested()) {
      {
        std::unique_lock lock(mu);
        cv_.wait_until(lock, st, next, [] { return false; });
      }
      if (st.stop_requested()) break;
      const auto now = clock::now();
      const double elapsed = std::chrono::duration<double>(now - last_time).count();
      last_time = now;
      next += interval_;
      for (std::size_t i = 0; i < traces_.size(); ++i) {
        auto& trace = traces_[i];
        if (trace.truncated) continue;
        const auto stat = read_proc_stat(trace.pid);
        const auto rss = read_rss_bytes(trace.pid);
        if (!stat || !rss || stat->state == 'Z' || stat->state == 'X') {
          trace.truncated = true;
          continue;
        }
        ResourceSample sample;
        sample.t_s = std::chrono::duration<double>(now - start).count();
        sample.rss_bytes = *rss;
        if (last_ticks[i] && elapsed > 0) {
          sample.cpu_percent =
              100.0 * static_cast<double>(stat->cpu_ticks - *last_ticks[i]) / ticks_per_s / elapsed;
        }
        last_ticks[i] = stat->cpu_ticks;
        trace.samples.push_back(sample);
      }
    }
  }

  std::chrono::milliseconds interval_;
  std::vector<ProcessTrace> traces_;
  std::condition_variable_any cv_;
  std::jthread thread_;
};

}  // namespace hookbench::resources
