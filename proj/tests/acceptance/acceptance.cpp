// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "../svg_probe.hpp"
#include "hookbench/hookbench.hpp"

using namespace hookbench;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("hookbench-acceptance-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// Statistics vs. brute-force oracle over small integer series.

// All series of length n over {1..5}, in lexicographic order.
std::vector<std::vector<int>> all_series(std::size_t n) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(n, 1);
  for (;;) {
    out.push_back(cur);
    std::size_t i = n;
    while (i > 0 && cur[i - 1] == 5) cur[--i] = 1;
    if (i == 0) break;
    ++cur[i - 1];
  }
  return out;
}

// Non-decreasing series of length n over {1..5}: one representative per multiset.
std::vector<std::vector<int>> all_multisets(std::size_t n) {
  std::vector<std::vector<int>> out;
  for (auto& s : all_series(n)) {
    if (std::is_sorted(s.begin(), s.end())) out.push_back(s);
  }
  return out;
}

struct OracleEntry {
  oracle::Moments m;
  stats::SeriesStats s;
};

class PValueOracle {
 public:
  double operator()(long double t, long df) {
    const auto key = std::make_pair(df, std::llround(t * 1e9L));
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      it = cache_.emplace(key, oracle::two_sided_p_by_quadrature(static_cast<double>(t), static_cast<double>(df))).first;
    }
    return it->second;
  }
  std::size_t size() const { return cache_.size(); }

 private:
  std::map<std::pair<long, long long>, double> cache_;
};

struct BruteForceTally {
  std::uint64_t pairs = 0;
  std::uint64_t degenerate = 0;
  double worst_t = 0, worst_p = 0, worst_mean = 0, worst_var = 0;
  std::uint64_t failures = 0;
  std::string first_failure;
};

void check_describe(const std::vector<int>& xs, const stats::SeriesStats& s, const oracle::Moments& m,
                    BruteForceTally& tally) {
  const double dm = std::fabs(s.mean - static_cast<double>(m.mean));
  const double dv = std::fabs(s.variance - static_cast<double>(m.variance));
  tally.worst_mean = std::max(tally.worst_mean, dm);
  tally.worst_var = std::max(tally.worst_var, dv);
  if (dm > 1e-12 || dv > 1e-12) {
    if (tally.failures++ == 0) tally.first_failure = "describe mismatch on series of length " + std::to_string(xs.size());
  }
}

void check_pair(const OracleEntry& a, const OracleEntry& b, PValueOracle& p_oracle, BruteForceTally& tally) {
  ++tally.pairs;
  const long double sp2 = (a.m.variance + b.m.variance) / 2;
  const long double diff = a.m.mean - b.m.mean;
  const long df = static_cast<long>(2 * a.s.n - 2);
  if (sp2 == 0) {
    ++tally.degenerate;
    if (diff != 0) {
      try {
        stats::t_test(a.s, b.s);
        if (tally.failures++ == 0) tally.first_failure = "infinite t not rejected";
      } catch (const StatsError&) {
      }
    } else {
      const auto r = stats::t_test(a.s, b.s);
      if (r.t != 0.0 || r.p_value != 1.0) {
        if (tally.failures++ == 0) tally.first_failure = "identical constant series not t=0, p=1";
      }
    }
    return;
  }
  const auto r = stats::t_test(a.s, b.s);
  const long double n = static_cast<long double>(a.s.n);
  const long double t_ref = diff / (std::sqrt(sp2) * std::sqrt(2 / n));
  const double dt = std::fabs(r.t - static_cast<double>(t_ref));
  const double dp = std::fabs(r.p_value - p_oracle(t_ref, df));
  tally.worst_t = std::max(tally.worst_t, dt);
  tally.worst_p = std::max(tally.worst_p, dp);
  if (dt > 1e-9 || dp > 1e-6 || r.df != df) {
    if (tally.failures++ == 0) {
      tally.first_failure = fmt("n=%zu t=%.17g ref=%.17Lg p=%.17g", a.s.n, r.t, t_ref, r.p_value);
    }
  }
}

Verdict statistics_oracle_equivalence() {
  const auto start = Clock::now();
  BruteForceTally tally;
  PValueOracle p_oracle;
  auto entries_for = [&](const std::vector<std::vector<int>>& set) {
    std::vector<OracleEntry> out;
    out.reserve(set.size());
    for (const auto& xs : set) {
      OracleEntry e{oracle::naive_moments(xs), stats::describe(xs)};
      check_describe(xs, e.s, e.m, tally);
      out.push_back(e);
    }
    return out;
  };

  // Length 1: no variance, no test.
  bool length_one_rejected = true;
  try {
    stats::describe(std::vector<int>{3});
    length_one_rejected = false;
  } catch (const StatsError&) {
  }

  // Lengths 2..5: every ordered pair of series.
  for (std::size_t n = 2; n <= 5; ++n) {
    const auto entries = entries_for(all_series(n));
    for (const auto& a : entries) {
      for (const auto& b : entries) check_pair(a, b, p_oracle, tally);
    }
  }
  // Length 6: describe is checked on every ordering; the test statistic only
  // sees (n, mean, variance), so pairs of multisets cover every ordered pair.
  entries_for(all_series(6));
  const auto reps = entries_for(all_multisets(6));
  for (const auto& a : reps) {
    for (const auto& b : reps) check_pair(a, b, p_oracle, tally);
  }

  const double secs = seconds_since(start);
  Verdict v;
  v.pass = tally.failures == 0 && length_one_rejected && secs < 30.0;
  v.detail = fmt("%llu pairs (%llu zero-variance), max|dt|=%.2e max|dp|=%.2e, %zu distinct p, %.1f s",
                 static_cast<unsigned long long>(tally.pairs), static_cast<unsigned long long>(tally.degenerate),
                 tally.worst_t, tally.worst_p, p_oracle.size(), secs);
  if (!tally.first_failure.empty()) v.detail += "; first failure: " + tally.first_failure;
  if (!length_one_rejected) v.detail += "; length-1 series accepted";
  return v;
}

// ---------------------------------------------------------------------------

Verdict student_t_accuracy() {
  double worst = 0, worst_cauchy = 0;
  for (long df : {1L, 2L, 5L, 30L, 1000L}) {
    for (int k = -10; k <= 10; ++k) {
      const double t = 0.5 * k;
      const double got = stats::student_t_cdf(t, df);
      worst = std::max(worst, std::fabs(got - oracle::t_cdf_by_quadrature(t, static_cast<double>(df))));
      if (df == 1) worst_cauchy = std::max(worst_cauchy, std::fabs(got - oracle::cauchy_cdf(t)));
    }
  }
  return {worst <= 1e-8 && worst_cauchy <= 1e-12,
          fmt("max|cdf - quadrature|=%.2e (tol 1e-8), max|cdf - cauchy|=%.2e (tol 1e-12)", worst, worst_cauchy)};
}

// ---------------------------------------------------------------------------

Verdict reported_arithmetic() {
  std::vector<std::uint64_t> values(50000);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = 100000 + i % 977;
  const auto trimmed = stats::trim_warmup(stats::RttSeries(values), 4000);
  const bool first_kept = !trimmed.empty() && trimmed.values.front() == values[4000];
  const double ratio = stats::variability_ratio(1.95, 0.50);
  const bool sig = stats::is_significant(0.2713, 0.05);
  const bool pass = trimmed.size() == 46000 && first_kept && std::fabs(ratio - 3.9) <= 1e-12 && !sig;
  return {pass, fmt("trimmed n=%zu, ratio=%.17g, p=0.2713 %s at alpha=0.05", trimmed.size(), ratio,
                    sig ? "significant" : "not significant")};
}

// ---------------------------------------------------------------------------

Verdict synthetic_end_to_end() {
  const auto start = Clock::now();
  const auto dir = scratch("e2e");
  ExperimentConfig cfg;
  Condition base, slow;
  base.descriptor.label = "baseline";
  base.sut.listen_port = net::pick_free_port();
  slow.descriptor.label = "delay200";
  slow.sut.listen_port = net::pick_free_port();
  slow.sut.delay_us = 200;
  cfg.conditions = {base, slow};
  cfg.load.total_requests = 2000;
  cfg.warmup_count = 200;
  cfg.output_dir = dir;
  cfg.sut_binary = HOOKBENCH_CLI;
  try {
    const auto report = run_experiment(cfg);
    const double secs = seconds_since(start);
    const auto& t = report.t_test;
    const bool files = std::filesystem::exists(dir / "report.json") && std::filesystem::exists(dir / "boxplot.svg");
    const bool pass = t.significant && t.p_value < 1e-4 && t.n == 1800 && files && secs < 120.0;
    std::filesystem::remove_all(dir);
    return {pass, fmt("n=%zu t=%.3f p=%.3g significant=%s, mean %.0f ns vs %.0f ns, %.1f s", t.n, t.t, t.p_value,
                      t.significant ? "true" : "false", report.conditions[0].trimmed_stats.mean,
                      report.conditions[1].trimmed_stats.mean, secs)};
  } catch (const std::exception& e) {
    return {false, std::string("run failed: ") + e.what()};
  }
}

// ---------------------------------------------------------------------------

Verdict deviation_scaling() {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<std::size_t> len(2, 200);
  std::lognormal_distribution<double> rtt(11.5, 0.4);
  std::normal_distribution<double> shift(0.0, 20000.0);
  constexpr double c = 2.0;
  double worst = 0;
  int flips = 0, trials = 0;
  for (; trials < 5000; ++trials) {
    const std::size_t n = len(rng);
    std::vector<double> a(n), b(n);
    const double off = shift(rng);
    for (auto& x : a) x = rtt(rng);
    for (auto& x : b) x = rtt(rng) + off;
    const auto sa = stats::describe(a), sb = stats::describe(b);
    std::vector<double> a2(n), b2(n);
    for (std::size_t i = 0; i < n; ++i) {
      a2[i] = sa.mean + c * (a[i] - sa.mean);
      b2[i] = sb.mean + c * (b[i] - sb.mean);
    }
    const double t1 = stats::t_test(sa, sb).t;
    const double t2 = stats::t_test(stats::describe(a2), stats::describe(b2)).t;
    worst = std::max(worst, std::fabs(std::fabs(t2) - std::fabs(t1) / c));
    if (t1 != 0 && (t1 > 0) != (t2 > 0)) ++flips;
  }
  return {worst <= 1e-9 && flips == 0,
          fmt("%d random pairs, max||t'| - |t|/2|=%.2e (tol 1e-9), sign flips=%d", trials, worst, flips)};
}

// ---------------------------------------------------------------------------
// analyze on the golden CSVs.

int run_shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string without_timestamp(std::string json) {
  static const std::regex stamp(R"re("generated_at": "[^"]*")re");
  return std::regex_replace(json, stamp, "\"generated_at\": \"\"");
}

struct BoxCheck {
  double worst_px = 0;
  std::size_t elements = 0;
  bool structure_ok = true;
};

void check_box_svg(const std::string& svg, const std::vector<stats::BoxplotSummary>& expected, BoxCheck& bc) {
  using namespace testsupport;
  const auto roots = svg_elements(svg, "svg");
  if (roots.empty()) {
    bc.structure_ok = false;
    return;
  }
  const auto& root = roots[0];
  const plots::LinearAxis y{num(root, "data-y-lo"), num(root, "data-y-hi"), num(root, "data-px-lo"),
                            num(root, "data-px-hi")};
  const auto iqr = svg_by_class(svg, "rect", "iqr");
  const auto med = svg_by_class(svg, "line", "median");
  const auto lo = svg_by_class(svg, "line", "whisker-low");
  const auto hi = svg_by_class(svg, "line", "whisker-high");
  const auto outliers = svg_by_class(svg, "circle", "outlier");
  std::size_t total_outliers = 0;
  for (const auto& b : expected) total_outliers += b.outliers.size();
  if (iqr.size() != expected.size() || med.size() != expected.size() || lo.size() != expected.size() ||
      hi.size() != expected.size() || outliers.size() != total_outliers) {
    bc.structure_ok = false;
    return;
  }
  auto near = [&](double px, double value) {
    bc.worst_px = std::max(bc.worst_px, std::fabs(px - y.map(value)));
    ++bc.elements;
  };
  std::size_t o = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& b = expected[i];
    near(num(iqr[i], "y"), b.q3);
    near(num(iqr[i], "y") + num(iqr[i], "height"), b.q1);
    near(num(med[i], "y1"), b.median);
    near(num(lo[i], "y1"), b.whisker_low);
    near(num(lo[i], "y2"), b.q1);
    near(num(hi[i], "y1"), b.q3);
    near(num(hi[i], "y2"), b.whisker_high);
    for (double v : b.outliers) near(num(outliers[o++], "cy"), v);
  }
}

Verdict golden_artifacts() {
  const std::filesystem::path data = HOOKBENCH_TEST_DATA;
  const auto dir = scratch("golden");
  constexpr std::size_t kWarmup = 100;
  auto analyze = [&](const std::string& tag) {
    const auto out = dir / tag;
    std::filesystem::create_directories(out);
    const std::string cmd = "cd '" + data.string() + "' && '" + HOOKBENCH_CLI +
                            "' analyze --a golden_baseline.csv --b golden_hooked.csv --label-a baseline"
                            " --label-b hooked --warmup " +
                            std::to_string(kWarmup) + " --out '" + (out / "report.json").string() + "' --plots '" +
                            out.string() + "' > /dev/null";
    return run_shell(cmd);
  };
  if (analyze("first") != 0 || analyze("second") != 0) return {false, "analyze exited non-zero"};

  std::vector<std::string> problems;
  const auto first = without_timestamp(io::read_file(dir / "first" / "report.json"));
  const auto second = without_timestamp(io::read_file(dir / "second" / "report.json"));
  if (first != second) problems.push_back("report differs between runs");
  const auto golden_path = data / "golden_report.json";
  if (!std::filesystem::exists(golden_path)) {
    problems.push_back("missing golden_report.json");
  } else if (without_timestamp(io::read_file(golden_path)) != first) {
    problems.push_back("report differs from golden_report.json");
  }
  for (const char* svg : {"boxplot.svg", "lag_baseline.svg", "lag_hooked.svg"}) {
    if (io::read_file(dir / "first" / svg) != io::read_file(dir / "second" / svg)) {
      problems.push_back(std::string(svg) + " differs between runs");
    }
  }

  // Expected box statistics, recomputed in-process from the same files.
  std::vector<stats::BoxplotSummary> expected;
  std::size_t n_used = SIZE_MAX;
  std::vector<stats::RttSeries> series;
  for (const char* f : {"golden_baseline.csv", "golden_hooked.csv"}) {
    auto s = stats::trim_warmup(loadgen::tally(io::read_samples_csv(data / f)).series(f), kWarmup);
    n_used = std::min(n_used, s.size());
    series.push_back(std::move(s));
  }
  for (auto& s : series) {
    s.values.resize(n_used);
    expected.push_back(stats::boxplot_summary(s));
  }
  BoxCheck bc;
  check_box_svg(io::read_file(dir / "first" / "boxplot.svg"), expected, bc);
  if (!bc.structure_ok) problems.push_back("boxplot element counts do not match the summaries");
  // Coordinates are printed with three decimals.
  if (bc.worst_px > 5e-4 + 1e-9) problems.push_back(fmt("boxplot coordinate off by %.4f px", bc.worst_px));

  // The JSON summary must agree with the in-process summary too.
  const auto j = nlohmann::json::parse(first);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& jb = j["conditions"][i]["boxplot"];
    if (jb["q1_ns"].get<double>() != expected[i].q1 || jb["median_ns"].get<double>() != expected[i].median ||
        jb["q3_ns"].get<double>() != expected[i].q3 || jb["whisker_low_ns"].get<double>() != expected[i].whisker_low ||
        jb["whisker_high_ns"].get<double>() != expected[i].whisker_high ||
        jb["outlier_count"].get<std::size_t>() != expected[i].outliers.size()) {
      problems.push_back("report boxplot of condition " + std::to_string(i) + " disagrees");
    }
  }
  std::filesystem::remove_all(dir);

  Verdict v;
  v.pass = problems.empty();
  v.detail = fmt("%zu box coordinates checked, max deviation %.4f px", bc.elements, bc.worst_px);
  for (const auto& p : problems) v.detail += "; " + p;
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"statistics oracle equivalence", statistics_oracle_equivalence},
      {"student-t accuracy", student_t_accuracy},
      {"reported arithmetic reproduced", reported_arithmetic},
      {"synthetic end-to-end significance", synthetic_end_to_end},
      {"deviation-scaling property", deviation_scaling},
      {"plot/report artifacts", golden_artifacts},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " acceptance criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
