#pragma once

// Self-contained SVG renderings: a log-log lag plot per condition and one
// grouped Tukey boxplot across conditions. Output is a pure function of the
// report, so identical input gives identical bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "hookbench/report.hpp"
#include "hookbench/samples_csv.hpp"
#include "hookbench/stats.hpp"

namespace hookbench::plots {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Maps values onto a pixel interval with a base-10 logarithmic scale. The
/// domain is widened to whole decades.
struct LogAxis {
  double lo_decade = 0.0;
  double hi_decade = 1.0;
  double px_start = 0.0;  // pixel of lo_decade
  double px_end = 1.0;    // pixel of hi_decade

  static LogAxis fit(double min_value, double max_value, double px_start, double px_end) {
    if (!(min_value > 0.0) || !(max_value > 0.0)) throw StatsError("log axis needs positive values");
    LogAxis a;
    a.lo_decade = std::floor(std::log10(min_value));
    a.hi_decade = std::ceil(std::log10(max_value));
    if (a.hi_decade <= a.lo_decade) a.hi_decade = a.lo_decade + 1.0;
    a.px_start = px_start;
    a.px_end = px_end;
    return a;
  }

  double map(double v) const {
    return px_start + (std::log10(v) - lo_decade) / (hi_decade - lo_decade) * (px_end - px_start);
  }
};

struct LinearAxis {
  double lo = 0.0;
  double hi = 1.0;
  double px_start = 0.0;  // pixel of lo
  double px_end = 1.0;    // pixel of hi

  double map(double v) const { return px_start + (v - lo) / (hi - lo) * (px_end - px_start); }
  double unmap(double px) const { return lo + (px - px_start) / (px_end - px_start) * (hi - lo); }
};

namespace detail {

inline constexpr double kWidth = 640, kHeight = 480;
inline constexpr double kLeft = 80, kRight = 600, kTop = 40, kBottom = 420;

inline std::string svg_open(const std::string& extra_attrs) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
         "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\"" + extra_attrs + ">\n" +
         "<style>text{font-family:sans-serif;font-size:12px}.axis{stroke:#000;stroke-width:1}"
         ".grid{stroke:#ddd;stroke-width:0.5}.pt{fill:#1f77b4;fill-opacity:0.35}"
         ".iqr{fill:#aec7e8;stroke:#1f77b4}.median{stroke:#d62728;stroke-width:2}"
         ".whisker,.cap{stroke:#1f77b4}.outlier{fill:none;stroke:#7f7f7f}</style>\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
}

inline std::string decade_label(double decade) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "1e%d", static_cast<int>(decade));
  return buf;
}

}  // namespace detail

/// Scatter of each RTT against its successor, both axes log10.
inline std::string render_lag_plot(const stats::RttSeries& series, const std::string& title) {
  using namespace detail;
  const auto pairs = stats::lag_pairs(series);
  double lo = 1.0, hi = 10.0;
  if (!series.empty()) {
    const auto [mn, mx] = std::ranges::minmax(series.values);
    lo = static_cast<double>(mn);
    hi = static_cast<double>(mx);
  }
  const auto x = LogAxis::fit(lo, hi, kLeft, kRight);
  const auto y = LogAxis::fit(lo, hi, kBottom, kTop);

  std::string svg = svg_open(" data-kind=\"lag\" data-log-lo=\"" + fmt(x.lo_decade) + "\" data-log-hi=\"" +
                             fmt(x.hi_decade) + "\"");
  svg += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\">" + xml_escape(title) + "</text>\n";
  for (double d = x.lo_decade; d <= x.hi_decade; d += 1.0) {
    const double v = std::pow(10.0, d);
    const auto px = fmt(x.map(v)), py = fmt(y.map(v));
    svg += "<line class=\"grid\" x1=\"" + px + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + px + "\" y2=\"" + fmt(kBottom) +
           "\"/>\n";
    svg += "<line class=\"grid\" x1=\"" + fmt(kLeft) + "\" y1=\"" + py + "\" x2=\"" + fmt(kRight) + "\" y2=\"" + py +
           "\"/>\n";
    svg += "<text class=\"tick-x\" x=\"" + px + "\" y=\"" + fmt(kBottom + 16) + "\" text-anchor=\"middle\">" +
           decade_label(d) + "</text>\n";
    svg += "<text class=\"tick-y\" x=\"" + fmt(kLeft - 6) + "\" y=\"" + py + "\" text-anchor=\"end\">" +
           decade_label(d) + "</text>\n";
  }
  svg += "<line class=\"axis\" x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kBottom) + "\" x2=\"" + fmt(kRight) +
         "\" y2=\"" + fmt(kBottom) + "\"/>\n";
  svg += "<line class=\"axis\" x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(kLeft) + "\" y2=\"" +
         fmt(kBottom) + "\"/>\n";
  svg += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"" + fmt(kHeight - 20) +
         "\" text-anchor=\"middle\">RTT(i) [ns]</text>\n";
  svg += "<text x=\"16\" y=\"" + fmt((kTop + kBottom) / 2) + "\" transform=\"rotate(-90 16 " +
         fmt((kTop + kBottom) / 2) + ")\" text-anchor=\"middle\">RTT(i+1) [ns]</text>\n";
  svg += "<g class=\"points\">\n";
  for (const auto& [a, b] : pairs) {
    svg += "<circle class=\"pt\" cx=\"" + fmt(x.map(a)) + "\" cy=\"" + fmt(y.map(b)) + "\" r=\"1.5\"/>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

/// Value axis shared by all boxes: covers whiskers and outliers with 5% padding.
inline LinearAxis boxplot_axis(const std::vector<stats::BoxplotSummary>& boxes) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& b : boxes) {
    lo = std::min(lo, b.whisker_low);
    hi = std::max(hi, b.whisker_high);
    for (double o : b.outliers) {
      lo = std::min(lo, o);
      hi = std::max(hi, o);
    }
  }
  if (boxes.empty()) lo = 0.0, hi = 1.0;
  const double pad = hi > lo ? 0.05 * (hi - lo) : 1.0;
  return {lo - pad, hi + pad, detail::kBottom, detail::kTop};
}

inline std::string render_boxplot(const std::vector<std::string>& labels,
                                  const std::vector<stats::BoxplotSummary>& boxes, const std::string& title) {
  using namespace detail;
  const auto y = boxplot_axis(boxes);
  std::string svg = svg_open(" data-kind=\"boxplot\" data-y-lo=\"" + fmt(y.lo) + "\" data-y-hi=\"" + fmt(y.hi) +
                             "\" data-px-lo=\"" + fmt(y.px_start) + "\" data-px-hi=\"" + fmt(y.px_end) + "\"");
  svg += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\">" + xml_escape(title) + "</text>\n";
  svg += "<line class=\"axis\" x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(kLeft) + "\" y2=\"" +
         fmt(kBottom) + "\"/>\n";
  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double v = y.lo + (y.hi - y.lo) * i / kTicks;
    const auto py = fmt(y.map(v));
    svg += "<line class=\"grid\" x1=\"" + fmt(kLeft) + "\" y1=\"" + py + "\" x2=\"" + fmt(kRight) + "\" y2=\"" + py +
           "\"/>\n";
    char label[32];
    std::snprintf(label, sizeof(label), "%.0f", v);
    svg += "<text class=\"tick-y\" x=\"" + fmt(kLeft - 6) + "\" y=\"" + py + "\" text-anchor=\"end\">" + label +
           "</text>\n";
  }
  svg += "<text x=\"16\" y=\"" + fmt((kTop + kBottom) / 2) + "\" transform=\"rotate(-90 16 " +
         fmt((kTop + kBottom) / 2) + ")\" text-anchor=\"middle\">RTT [ns]</text>\n";

  const double slot = (kRight - kLeft) / static_cast<double>(std::max<std::size_t>(1, boxes.size()));
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double half = std::min(40.0, slot * 0.3);
    const auto x0 = fmt(cx - half), x1 = fmt(cx + half), xc = fmt(cx);
    const auto cap0 = fmt(cx - half / 2), cap1 = fmt(cx + half / 2);
    const std::string label = i < labels.size() ? labels[i] : std::to_string(i);
    svg += "<g class=\"box\" data-label=\"" + xml_escape(label) + "\">\n";
    svg += "<line class=\"whisker whisker-low\" x1=\"" + xc + "\" y1=\"" + fmt(y.map(b.whisker_low)) + "\" x2=\"" +
           xc + "\" y2=\"" + fmt(y.map(b.q1)) + "\"/>\n";
    svg += "<line class=\"whisker whisker-high\" x1=\"" + xc + "\" y1=\"" + fmt(y.map(b.q3)) + "\" x2=\"" + xc +
           "\" y2=\"" + fmt(y.map(b.whisker_high)) + "\"/>\n";
    svg += "<line class=\"cap cap-low\" x1=\"" + cap0 + "\" y1=\"" + fmt(y.map(b.whisker_low)) + "\" x2=\"" + cap1 +
           "\" y2=\"" + fmt(y.map(b.whisker_low)) + "\"/>\n";
    svg += "<line class=\"cap cap-high\" x1=\"" + cap0 + "\" y1=\"" + fmt(y.map(b.whisker_high)) + "\" x2=\"" +
           cap1 + "\" y2=\"" + fmt(y.map(b.whisker_high)) + "\"/>\n";
    // Height from the printed edges, so y + height lands on q1 as printed.
    const auto top = fmt(y.map(b.q3)), bottom = fmt(y.map(b.q1));
    svg += "<rect class=\"iqr\" x=\"" + x0 + "\" y=\"" + top + "\" width=\"" + fmt(2 * half) + "\" height=\"" +
           fmt(std::stod(bottom) - std::stod(top)) + "\"/>\n";
    svg += "<line class=\"median\" x1=\"" + x0 + "\" y1=\"" + fmt(y.map(b.median)) + "\" x2=\"" + x1 + "\" y2=\"" +
           fmt(y.map(b.median)) + "\"/>\n";
    for (double o : b.outliers) {
      svg += "<circle class=\"outlier\" cx=\"" + xc + "\" cy=\"" + fmt(y.map(o)) + "\" r=\"2\"/>\n";
    }
    svg += "<text x=\"" + xc + "\" y=\"" + fmt(kBottom + 18) + "\" text-anchor=\"middle\">" + xml_escape(label) +
           "</text>\n";
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

/// Writes lag_<label>.svg per condition and boxplot.svg; returns the paths in that order.
inline std::vector<std::filesystem::path> render_plots(const ExperimentReport& report,
                                                       const std::filesystem::path& output_dir) {
  std::filesystem::create_directories(output_dir);
  std::vector<std::filesystem::path> written;
  std::vector<std::string> labels;
  std::vector<stats::BoxplotSummary> boxes;
  for (const auto& c : report.conditions) {
    const auto path = output_dir / ("lag_" + c.descriptor.label + ".svg");
    io::write_file(path, render_lag_plot(c.raw, "Lag plot: " + c.descriptor.label));
    written.push_back(path);
    labels.push_back(c.descriptor.label);
    boxes.push_back(c.boxplot);
  }
  const auto box_path = output_dir / "boxplot.svg";
  io::write_file(box_path, render_boxplot(labels, boxes,
                                          "RTT after " + std::to_string(report.warmup_count) + " warm-up requests"));
  written.push_back(box_path);
  return written;
}

}  // namespace hookbench::plots
