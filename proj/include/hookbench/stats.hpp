#pragma once

// Statistics over round-trip-time series: warm-up trimming, descriptive
// statistics, the equal-n pooled-variance two-sample t-test, Student-t tail
// probabilities and the reductions behind lag plots and Tukey boxplots.
//
// Everything here is a pure function of its arguments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ranges>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hookbench/error.hpp"

namespace hookbench::stats {

/// Round-trip times in nanoseconds, in acquisition order.
struct RttSeries {
  std::vector<std::uint64_t> values;
  std::string condition_label;

  RttSeries() = default;
  explicit RttSeries(std::vector<std::uint64_t> v, std::string label = {})
      : values(std::move(v)), condition_label(std::move(label)) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] == 0) {
        throw StatsError("RTT values must be positive (index " + std::to_string(i) + ")");
      }
    }
  }

  std::size_t size() const noexcept { return values.size(); }
  bool empty() const noexcept { return values.empty(); }
  auto begin() const noexcept { return values.begin(); }
  auto end() const noexcept { return values.end(); }

  friend bool operator==(const RttSeries&, const RttSeries&) = default;
};

struct SeriesStats {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // n - 1 denominator
  double sd = 0.0;
};

struct TTestResult {
  double t = 0.0;
  long df = 0;
  double pooled_sd = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  bool significant = false;
  std::size_t n = 0;  // per condition
};

struct BoxplotSummary {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;  // ascending
};

using LagPairs = std::vector<std::pair<double, double>>;

inline constexpr std::size_t kDefaultWarmup = 4000;
inline constexpr double kDefaultAlpha = 0.05;

inline RttSeries trim_warmup(const RttSeries& series, std::size_t warmup_count) {
  RttSeries out;
  out.condition_label = series.condition_label;
  if (warmup_count < series.size()) {
    out.values.assign(series.values.begin() + static_cast<std::ptrdiff_t>(warmup_count),
                      series.values.end());
  }
  return out;
}

/// Mean and sample variance (two-pass). Accepts any range of arithmetic values.
template <std::ranges::input_range R>
  requires std::is_arithmetic_v<std::ranges::range_value_t<R>>
SeriesStats describe(const R& values) {
  std::size_t n = 0;
  double sum = 0.0;
  for (auto v : values) {
    sum += static_cast<double>(v);
    ++n;
  }
  if (n < 2) {
    throw StatsError("variance is undefined for fewer than 2 samples (got " + std::to_string(n) +
                     ")");
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (auto v : values) {
    const double d = static_cast<double>(v) - mean;
    ss += d * d;
  }
  const double variance = ss / static_cast<double>(n - 1);
  return {n, mean, variance, std::sqrt(variance)};
}

inline SeriesStats describe(const RttSeries& series) { return describe(series.values); }

inline double pooled_sd(const SeriesStats& a, const SeriesStats& b) {
  if (a.n != b.n) {
    throw StatsError("pooled deviation requires equal sample sizes (" + std::to_string(a.n) +
                     " vs " + std::to_string(b.n) + "); truncate the longer series first");
  }
  return std::sqrt((a.variance + b.variance) / 2.0);
}

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 20000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw StatsError("incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b). `one_minus_x` is passed separately so
/// callers can supply it without cancellation when x is close to 1.
inline double regularized_incomplete_beta(double a, double b, double x, double one_minus_x) {
  if (x <= 0.0) return 0.0;
  if (one_minus_x <= 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log(one_minus_x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * detail::beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * detail::beta_continued_fraction(b, a, one_minus_x) / b;
}

inline double regularized_incomplete_beta(double a, double b, double x) {
  return regularized_incomplete_beta(a, b, x, 1.0 - x);
}

/// Two-sided tail P(|T| >= |t|) for Student's t with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, long df) {
  if (df < 1) throw StatsError("degrees of freedom must be >= 1");
  if (std::isnan(t)) throw StatsError("t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  const double v = static_cast<double>(df);
  const double t2 = t * t;
  const double denom = v + t2;
  return std::clamp(regularized_incomplete_beta(v / 2.0, 0.5, v / denom, t2 / denom), 0.0, 1.0);
}

inline double student_t_cdf(double t, long df) {
  if (df < 1) throw StatsError("degrees of freedom must be >= 1");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double half_tail = 0.5 * student_t_two_sided_p(t, df);
  return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

inline bool is_significant(double p_value, double alpha) { return p_value < alpha; }

/// Independent two-sample t-test with equal sample sizes and pooled variance.
inline TTestResult t_test(const SeriesStats& a, const SeriesStats& b, double alpha = kDefaultAlpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw StatsError("alpha must lie in (0, 1)");
  const double sp = pooled_sd(a, b);
  if (a.n < 2) throw StatsError("t-test needs at least 2 samples per condition");

  TTestResult r;
  r.n = a.n;
  r.df = static_cast<long>(2 * a.n - 2);
  r.pooled_sd = sp;
  r.alpha = alpha;
  const double diff = a.mean - b.mean;
  if (sp == 0.0) {
    if (diff != 0.0) {
      throw StatsError("t statistic is infinite: both series are constant with different means");
    }
    r.t = 0.0;
    r.p_value = 1.0;
  } else {
    r.t = diff / (sp * std::sqrt(2.0 / static_cast<double>(a.n)));
    r.p_value = student_t_two_sided_p(r.t, r.df);
  }
  r.significant = is_significant(r.p_value, alpha);
  return r;
}

/// Ratio of two deviations, e.g. pooled deviations of two environments.
inline double variability_ratio(double numerator_sd, double denominator_sd) {
  if (denominator_sd == 0.0) throw StatsError("variability ratio with zero denominator deviation");
  return numerator_sd / denominator_sd;
}

inline double variability_ratio(const SeriesStats& a, const SeriesStats& b) {
  return variability_ratio(a.sd, b.sd);
}

/// Quantile by linear interpolation at 0-based position (n - 1) * q of sorted data.
inline double interpolated_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw StatsError("quantile of an empty series");
  const double pos = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

template <std::ranges::input_range R>
  requires std::is_arithmetic_v<std::ranges::range_value_t<R>>
BoxplotSummary boxplot_summary(const R& values) {
  std::vector<double> sorted;
  for (auto v : values) sorted.push_back(static_cast<double>(v));
  if (sorted.empty()) throw StatsError("boxplot of an empty series");
  std::ranges::sort(sorted);

  BoxplotSummary box;
  box.q1 = interpolated_quantile(sorted, 0.25);
  box.median = interpolated_quantile(sorted, 0.5);
  box.q3 = interpolated_quantile(sorted, 0.75);
  const double iqr = box.q3 - box.q1;
  const double lo_fence = box.q1 - 1.5 * iqr;
  const double hi_fence = box.q3 + 1.5 * iqr;

  // With interpolated quartiles (small n) the nearest in-fence point can sit
  // inside the box; the whisker then collapses onto the quartile.
  const double lowest_inside = *std::ranges::find_if(sorted, [&](double v) { return v >= lo_fence; });
  const double highest_inside =
      *std::ranges::find_if(sorted | std::views::reverse, [&](double v) { return v <= hi_fence; });
  box.whisker_low = std::min(lowest_inside, box.q1);
  box.whisker_high = std::max(highest_inside, box.q3);
  for (double v : sorted) {
    if (v < lo_fence || v > hi_fence) box.outliers.push_back(v);
  }
  return box;
}

inline BoxplotSummary boxplot_summary(const RttSeries& series) {
  return boxplot_summary(series.values);
}

template <std::ranges::input_range R>
LagPairs lag_pairs(const R& values) {
  LagPairs pairs;
  std::optional<double> prev;
  for (auto v : values) {
    const auto cur = static_cast<double>(v);
    if (prev) pairs.emplace_back(*prev, cur);
    prev = cur;
  }
  return pairs;
}

inline LagPairs lag_pairs(const RttSeries& series) { return lag_pairs(series.values); }

/// Stabilization heuristic for choosing a warm-up length. Splits the series
/// into consecutive windows and returns the start of the first window whose
/// mean differs from the following window's mean by less than `rel_tol`.
/// Advisory only: callers report it, they never apply it automatically.
inline std::optional<std::size_t> suggest_warmup(const RttSeries& series,
                                                 std::size_t window = 500,
                                                 double rel_tol = 0.01) {
  if (window == 0) throw StatsError("window must be positive");
  const std::size_t windows = series.size() / window;
  if (windows < 2) return std::nullopt;
  std::vector<double> means(windows);
  for (std::size_t w = 0; w < windows; ++w) {
    double sum = 0.0;
    for (std::size_t i = w * window; i < (w + 1) * window; ++i) sum += static_cast<double>(series.values[i]);
    means[w] = sum / static_cast<double>(window);
  }
  for (std::size_t w = 0; w + 1 < windows; ++w) {
    if (std::fabs(means[w + 1] - means[w]) / means[w] < rel_tol) return w * window;
  }
  return std::nullopt;
}

}  // namespace hookbench::stats
