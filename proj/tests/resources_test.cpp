#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "hookbench/process.hpp"
#include "hookbench/resources.hpp"

using namespace hookbench;
using namespace hookbench::resources;
using namespace std::chrono_literals;

namespace {

std::vector<ResourceSample> cpu_trace(std::initializer_list<double> cpu) {
  std::vector<ResourceSample> out;
  for (double c : cpu) out.push_back({static_cast<double>(out.size()) * 0.1, c, 0});
  return out;
}

}  // namespace

TEST(CpuFlags, NeedFiveConsecutiveSamplesAboveNinety) {
  EXPECT_TRUE(flag_sustained_cpu(cpu_trace({95, 95, 95, 95})).empty());
  EXPECT_TRUE(flag_sustained_cpu(cpu_trace({95, 95, 90, 95, 95, 95})).empty());  // 90 is not above
  const auto f = flag_sustained_cpu(cpu_trace({10, 91, 92, 93, 94, 95, 96, 20}));
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].first, 1u);
  EXPECT_EQ(f[0].last, 6u);
}

TEST(CpuFlags, RunAtEndOfTraceCounts) {
  const auto f = flag_sustained_cpu(cpu_trace({99, 99, 99, 99, 99, 0, 99, 99, 99, 99, 99}));
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[1].first, 6u);
  EXPECT_EQ(f[1].last, 10u);
}

TEST(ProcStat, ReadsOwnProcess) {
  const auto s = read_proc_stat(::getpid());
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->state, 'R');
  EXPECT_GT(read_rss_bytes(::getpid()).value_or(0), 0u);
  EXPECT_FALSE(read_proc_stat(-1).has_value());
}

TEST(ResourceWatcher, SamplesABusyProcess) {
  std::atomic<bool> stop{false};
  std::thread spinner([&] {
    while (!stop.load(std::memory_order_relaxed)) {
    }
  });
  ResourceWatcher watcher({{"self", ::getpid()}}, 50ms);
  std::this_thread::sleep_for(600ms);
  const auto traces = watcher.stop();
  stop = true;
  spinner.join();
  ASSERT_EQ(traces.size(), 1u);
  const auto& t = traces[0];
  EXPECT_EQ(t.role, "self");
  EXPECT_FALSE(t.truncated);
  ASSERT_GE(t.samples.size(), 5u);
  double total = 0;
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    EXPECT_GT(t.samples[i].rss_bytes, 0u);
    if (i) {
      EXPECT_GT(t.samples[i].t_s, t.samples[i - 1].t_s);
    }
    total += t.samples[i].cpu_percent;
  }
  EXPECT_GT(total / static_cast<double>(t.samples.size()), 20.0);
}

TEST(ResourceWatcher, ExitedProcessMarksTraceTruncated) {
  auto child = process::ChildProcess::spawn({"/bin/sleep", "0.2"}, process::current_environment());
  ResourceWatcher watcher({{"sleeper", child.pid()}}, 25ms);
  std::this_thread::sleep_for(600ms);
  const auto traces = watcher.stop();
  EXPECT_TRUE(traces[0].truncated);
  child.terminate();
}

TEST(ResourceWatcher, StopIsIdempotentAndPrompt) {
  ResourceWatcher watcher({{"self", ::getpid()}}, 10s);
  const auto start = std::chrono::steady_clock::now();
  watcher.stop();
  watcher.stop();
  EXPECT_LT(std::chrono::steady_clock::now() - start, 1s);
}
