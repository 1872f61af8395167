#pragma once

// Experiment runner: for each condition, start a SUT process (with the
// preloaded hook's environment when configured), wait for readiness, drive
// the closed-loop load, stop the SUT. Conditions run strictly one after the
// other. Afterwards the samples go through the report pipeline.

#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hookbench/config.hpp"
#include "hookbench/error.hpp"
#include "hookbench/loadgen.hpp"
#include "hookbench/net.hpp"
#include "hookbench/plots.hpp"
#include "hookbench/process.hpp"
#include "hookbench/report.hpp"
#include "hookbench/resources.hpp"
#include "hookbench/samples_csv.hpp"

namespace hookbench {

inline std::filesystem::path resolve_sut_binary(const ExperimentConfig& cfg) {
  return cfg.sut_binary ? *cfg.sut_binary : process::self_executable();
}

inline process::ChildProcess launch_sut(const Condition& cond, const std::filesystem::path& binary,
                                        const std::filesystem::path& log_path,
                                        const std::vector<std::string>& base_env = process::current_environment()) {
  const std::vector<std::string> argv{binary.string(), "serve", "--port", std::to_string(cond.sut.listen_port),
                                      "--delay-us", std::to_string(cond.sut.delay_us), "--max-connections",
                                      std::to_string(cond.sut.max_connections)};
  return process::ChildProcess::spawn(argv, process::build_sut_environment(base_env, cond.hook), log_path);
}

/// Polls with throwaway requests until one succeeds. Throws RuntimeFailure when
/// the child exits or the budget runs out.
inline void wait_ready(const net::Endpoint& target, process::ChildProcess& child, std::chrono::milliseconds budget) {
  const auto deadline = std::chrono::steady_clock::now() + budget;
  const auto request = http::build_request(target.to_string(), std::nullopt, false);
  while (std::chrono::steady_clock::now() < deadline) {
    if (!child.running()) throw RuntimeFailure("SUT exited before becoming ready");
    try {
      auto fd = net::connect_tcp(target);
      net::set_receive_timeout(fd.get(), std::chrono::milliseconds(500));
      if (loadgen::single_exchange(fd.get(), request, 0, false).status == loadgen::Status::ok) return;
    } catch (const RuntimeFailure&) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  throw RuntimeFailure("SUT not ready on " + target.to_string() + " within " + std::to_string(budget.count()) +
                       " ms");
}

struct ConditionRun {
  loadgen::LoadResult load;
  std::optional<io::HookTimingSummary> hook_timing;
  std::vector<resources::ProcessTrace> traces;
  int sut_wait_status = 0;
};

inline ConditionRun run_condition(const ExperimentConfig& cfg, const Condition& cond) {
  const auto& label = cond.descriptor.label;
  if (cond.hook && cond.hook->timing_path) std::filesystem::remove(*cond.hook->timing_path);
  // A stale listener on the port would answer the readiness probe in place of our SUT.
  try {
    net::listen_tcp(cond.sut.listen_port);
  } catch (const RuntimeFailure&) {
    throw RuntimeFailure("condition '" + label + "' aborted: port " + std::to_string(cond.sut.listen_port) +
                         " already in use");
  }

  auto child = launch_sut(cond, resolve_sut_binary(cfg), cfg.output_dir / (label + ".sut.log"));
  const net::Endpoint target{cfg.load.host, cond.sut.listen_port};
  try {
    wait_ready(target, child, cfg.readiness_timeout);
  } catch (const RuntimeFailure& e) {
    child.terminate(std::chrono::milliseconds(1000));
    throw RuntimeFailure("condition '" + label + "' aborted: " + e.what());
  }

  loadgen::LoadConfig load;
  load.target = target;
  load.total_requests = cfg.load.total_requests;
  load.keyword_payload = cfg.load.keyword;
  load.keyword_every = cfg.load.keyword_every;
  load.reconnect_per_request = cfg.load.reconnect_per_request;

  ConditionRun run;
  {
    resources::ResourceWatcher watcher({{"sut:" + label, child.pid()}, {"loadgen:" + label, ::getpid()}},
                                       cfg.resource_interval);
    try {
      run.load = loadgen::run_load(load);
    } catch (const RuntimeFailure& e) {
      watcher.stop();
      child.terminate();
      throw RuntimeFailure("condition '" + label + "' aborted: " + e.what());
    }
    run.traces = watcher.stop();
  }
  run.sut_wait_status = child.terminate();
  if (cond.hook && cond.hook->timing_path && std::filesystem::exists(*cond.hook->timing_path)) {
    run.hook_timing = io::read_hook_timing_summary(*cond.hook->timing_path);
  }
  return run;
}

/// Runs both conditions and writes config.json, <label>.samples.csv,
/// report.json and (when enabled) the SVG plots into output_dir. Partial
/// artifacts stay on disk if a condition aborts.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.conditions.size() != 2) throw ConfigError({"exactly two conditions are required"});
  std::filesystem::create_directories(cfg.output_dir);
  const auto echo = to_json(cfg);
  io::write_file(cfg.output_dir / "config.json", echo.dump(2) + "\n");

  const auto sut_binary = resolve_sut_binary(cfg);
  const auto sut_hash = process::sha256_file(sut_binary);

  std::array<ConditionInput, 2> inputs;
  std::vector<resources::ProcessTrace> traces;
  std::vector<std::string> notes;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& cond = cfg.conditions[i];
    auto run = run_condition(cfg, cond);
    const auto csv = cfg.output_dir / (cond.descriptor.label + ".samples.csv");
    io::write_samples_csv(run.load.samples, csv);

    auto& in = inputs[i];
    in.descriptor = cond.descriptor;
    in.samples = std::move(run.load.samples);
    in.samples_file = csv.filename().string();
    in.hook_timing = run.hook_timing;
    in.sut_binary_sha256 = sut_hash;
    if (cond.hook && std::filesystem::exists(cond.hook->library)) {
      in.hook_library_sha256 = process::sha256_file(cond.hook->library);
    }
    for (auto& t : run.traces) {
      if (t.truncated) notes.push_back("resource trace of " + t.role + " truncated: process exited mid-run");
      if (!t.flags.empty()) notes.push_back("sustained CPU above 90% observed for " + t.role);
      traces.push_back(std::move(t));
    }
  }

  auto report = build_report(std::move(inputs), cfg.warmup_count, cfg.alpha, echo);
  report.keep_alive = !cfg.load.reconnect_per_request;
  report.resources = std::move(traces);
  report.notes.insert(report.notes.end(), notes.begin(), notes.end());
  io::write_file(cfg.output_dir / "report.json", render_report_json(report));
  if (cfg.plots) plots::render_plots(report, cfg.output_dir);
  return report;
}

}  // namespace hookbench
