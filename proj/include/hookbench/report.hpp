#pragma once

// Turns two conditions' samples into an ExperimentReport (trim, equalize,
// describe, test, summarize) and serializes it as a fixed-order JSON document.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hookbench/config.hpp"
#include "hookbench/loadgen.hpp"
#include "hookbench/resources.hpp"
#include "hookbench/samples_csv.hpp"
#include "hookbench/stats.hpp"

namespace hookbench {

inline constexpr std::string_view kReportFormat = "hookbench-report/1";

struct ConditionInput {
  ConditionDescriptor descriptor;
  std::vector<loadgen::RttSample> samples;
  std::string samples_file;
  std::optional<io::HookTimingSummary> hook_timing;
  std::optional<std::string> sut_binary_sha256;
  std::optional<std::string> hook_library_sha256;
};

struct ConditionReport {
  ConditionDescriptor descriptor;
  std::string samples_file;
  std::uint64_t total = 0;
  std::uint64_t ok = 0;
  std::uint64_t blocked = 0;
  std::uint64_t transport_error = 0;
  stats::RttSeries raw;      // successful RTTs including warm-up (lag plot input)
  stats::RttSeries trimmed;  // after warm-up trim and equalization (test input)
  std::optional<stats::SeriesStats> raw_stats;
  stats::SeriesStats trimmed_stats;
  stats::BoxplotSummary boxplot;
  std::size_t lag_pair_count = 0;
  std::optional<std::size_t> suggested_warmup;
  std::optional<io::HookTimingSummary> hook_timing;
  std::optional<std::string> sut_binary_sha256;
  std::optional<std::string> hook_library_sha256;
};

struct Equalization {
  bool applied = false;
  std::size_t n_a_after_trim = 0;
  std::size_t n_b_after_trim = 0;
  std::size_t n_used = 0;
};

struct ExperimentReport {
  std::string generated_at;
  ojson config;
  std::size_t warmup_count = stats::kDefaultWarmup;
  double alpha = stats::kDefaultAlpha;
  std::optional<bool> keep_alive;
  std::array<ConditionReport, 2> conditions;
  Equalization equalization;
  stats::TTestResult t_test;
  std::optional<double> sd_ratio_a_over_b;
  std::optional<std::vector<resources::ProcessTrace>> resources;
  std::vector<std::string> notes;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  ::gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Trims warm-up, truncates the longer series to the shorter one, and runs the
/// pooled-variance t-test (a minus b). Throws StatsError when fewer than two
/// samples per condition remain.
inline ExperimentReport build_report(std::array<ConditionInput, 2> inputs, std::size_t warmup_count, double alpha,
                                     ojson config_echo = ojson::object()) {
  ExperimentReport report;
  report.generated_at = utc_timestamp();
  report.config = std::move(config_echo);
  report.warmup_count = warmup_count;
  report.alpha = alpha;

  for (std::size_t i = 0; i < 2; ++i) {
    auto& in = inputs[i];
    auto& c = report.conditions[i];
    const auto tallied = loadgen::tally(std::move(in.samples));
    c.descriptor = std::move(in.descriptor);
    c.samples_file = std::move(in.samples_file);
    c.total = tallied.samples.size();
    c.ok = tallied.ok_count;
    c.blocked = tallied.blocked_count;
    c.transport_error = tallied.transport_error_count;
    c.raw = tallied.series(c.descriptor.label);
    if (c.raw.size() >= 2) c.raw_stats = stats::describe(c.raw);
    c.trimmed = stats::trim_warmup(c.raw, warmup_count);
    c.lag_pair_count = stats::lag_pairs(c.raw).size();
    c.suggested_warmup = stats::suggest_warmup(c.raw);
    c.hook_timing = in.hook_timing;
    c.sut_binary_sha256 = std::move(in.sut_binary_sha256);
    c.hook_library_sha256 = std::move(in.hook_library_sha256);
  }

  auto& eq = report.equalization;
  eq.n_a_after_trim = report.conditions[0].trimmed.size();
  eq.n_b_after_trim = report.conditions[1].trimmed.size();
  eq.n_used = std::min(eq.n_a_after_trim, eq.n_b_after_trim);
  eq.applied = eq.n_a_after_trim != eq.n_b_after_trim;
  for (auto& c : report.conditions) {
    if (c.trimmed.size() < 2) {
      throw StatsError("condition '" + c.descriptor.label + "' has " + std::to_string(c.trimmed.size()) +
                       " successful samples after a warm-up of " + std::to_string(warmup_count) +
                       "; at least 2 are needed");
    }
    c.trimmed.values.resize(eq.n_used);
    c.trimmed_stats = stats::describe(c.trimmed);
    c.boxplot = stats::boxplot_summary(c.trimmed);
  }
  if (eq.applied) {
    report.notes.push_back("series truncated to " + std::to_string(eq.n_used) +
                           " samples each to satisfy the equal-sample-size assumption");
  }
  report.t_test = stats::t_test(report.conditions[0].trimmed_stats, report.conditions[1].trimmed_stats, alpha);
  if (report.conditions[1].trimmed_stats.sd > 0.0) {
    report.sd_ratio_a_over_b =
        stats::variability_ratio(report.conditions[0].trimmed_stats, report.conditions[1].trimmed_stats);
  }
  return report;
}

namespace detail {

inline ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(); }

template <typename T>
ojson opt(const std::optional<T>& v) {
  return v ? ojson(*v) : ojson();
}

inline ojson to_json(const stats::SeriesStats& s) {
  ojson j;
  j["n"] = s.n;
  j["mean_ns"] = number_or_null(s.mean);
  j["variance_ns2"] = number_or_null(s.variance);
  j["sd_ns"] = number_or_null(s.sd);
  return j;
}

inline ojson to_json(const stats::BoxplotSummary& b) {
  ojson j;
  j["q1_ns"] = b.q1;
  j["median_ns"] = b.median;
  j["q3_ns"] = b.q3;
  j["whisker_low_ns"] = b.whisker_low;
  j["whisker_high_ns"] = b.whisker_high;
  j["outlier_count"] = b.outliers.size();
  j["outliers_ns"] = b.outliers;
  return j;
}

inline ojson to_json(const resources::ProcessTrace& t) {
  ojson j;
  j["role"] = t.role;
  j["pid"] = t.pid;
  j["samples"] = t.samples.size();
  double mean_cpu = 0.0, max_cpu = 0.0;
  std::uint64_t max_rss = 0;
  for (const auto& s : t.samples) {
    mean_cpu += s.cpu_percent;
    max_cpu = std::max(max_cpu, s.cpu_percent);
    max_rss = std::max(max_rss, s.rss_bytes);
  }
  if (!t.samples.empty()) mean_cpu /= static_cast<double>(t.samples.size());
  j["mean_cpu_percent"] = mean_cpu;
  j["max_cpu_percent"] = max_cpu;
  j["max_rss_bytes"] = max_rss;
  j["truncated"] = t.truncated;
  ojson flags = ojson::array();
  for (const auto& f : t.flags) {
    flags.push_back({{"first_sample", f.first},
                     {"last_sample", f.last},
                     {"start_s", t.samples[f.first].t_s},
                     {"end_s", t.samples[f.last].t_s}});
  }
  j["cpu_flags"] = std::move(flags);
  ojson trace = ojson::array();
  for (const auto& s : t.samples) trace.push_back({s.t_s, s.cpu_percent, s.rss_bytes});
  j["trace_t_s_cpu_percent_rss_bytes"] = std::move(trace);
  return j;
}

}  // namespace detail

inline ojson to_json(const ExperimentReport& r) {
  using detail::opt;
  ojson j;
  j["format"] = kReportFormat;
  j["generated_at"] = r.generated_at;
  j["units"] = {{"rtt", "ns"}, {"variance", "ns^2"}};
  j["config"] = r.config;
  j["warmup_count"] = r.warmup_count;
  j["alpha"] = r.alpha;
  j["keep_alive"] = opt(r.keep_alive);
  ojson conds = ojson::array();
  for (const auto& c : r.conditions) {
    ojson cj;
    cj["label"] = c.descriptor.label;
    cj["environment"] = c.descriptor.environment;
    cj["environment_kind"] = is_known_environment(c.descriptor.environment) ? "known" : "custom";
    cj["hook_layer"] = to_string(c.descriptor.hook_layer);
    cj["notes"] = c.descriptor.notes;
    cj["samples_file"] = c.samples_file;
    cj["requests"] = {{"total", c.total}, {"ok", c.ok}, {"blocked", c.blocked}, {"transport_error", c.transport_error}};
    cj["raw"] = c.raw_stats ? detail::to_json(*c.raw_stats) : ojson();
    cj["trimmed"] = detail::to_json(c.trimmed_stats);
    cj["boxplot"] = detail::to_json(c.boxplot);
    cj["lag_pair_count"] = c.lag_pair_count;
    cj["suggested_warmup"] = opt(c.suggested_warmup);
    if (c.hook_timing) {
      cj["hook_timing"] = {{"records", c.hook_timing->records},
                           {"matched", c.hook_timing->matched},
                           {"mean_scan_ns", c.hook_timing->mean_scan_ns},
                           {"sd_scan_ns", c.hook_timing->sd_scan_ns}};
    } else {
      cj["hook_timing"] = nullptr;
    }
    cj["sut_binary_sha256"] = opt(c.sut_binary_sha256);
    cj["hook_library_sha256"] = opt(c.hook_library_sha256);
    conds.push_back(std::move(cj));
  }
  j["conditions"] = std::move(conds);
  j["equalization"] = {{"applied", r.equalization.applied},
                       {"n_a_after_trim", r.equalization.n_a_after_trim},
                       {"n_b_after_trim", r.equalization.n_b_after_trim},
                       {"n_used", r.equalization.n_used}};
  const auto& t = r.t_test;
  j["t_test"] = {{"kind", "independent two-sample, pooled variance, equal n"},
                 {"t", detail::number_or_null(t.t)},
                 {"df", t.df},
                 {"n", t.n},
                 {"pooled_sd_ns", t.pooled_sd},
                 {"p_value", t.p_value},
                 {"alpha", t.alpha},
                 {"significant", t.significant}};
  j["variability"] = {{"sd_ratio_a_over_b", opt(r.sd_ratio_a_over_b)}, {"pooled_sd_ns", t.pooled_sd}};
  if (r.resources) {
    ojson res = ojson::array();
    for (const auto& trace : *r.resources) res.push_back(detail::to_json(trace));
    j["resources"] = std::move(res);
  } else {
    j["resources"] = nullptr;
  }
  j["notes"] = r.notes;
  return j;
}

inline std::string render_report_json(const ExperimentReport& r) { return to_json(r).dump(2) + "\n"; }

}  // namespace hookbench
