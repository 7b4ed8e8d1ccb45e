#include "p2pdrl/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "p2pdrl/errors.hpp"
#include "p2pdrl/evaluation.hpp"
#include "p2pdrl/metrics.hpp"

namespace p2pdrl {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
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

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

// Pads degenerate ranges and rounds outward to a step of 1, 2 or 5 x 10^k.
std::vector<double> nice_ticks(Range& r) {
  if (!(r.hi > r.lo)) {
    const double pad = std::abs(r.lo) > 0 ? 0.5 * std::abs(r.lo) : 1.0;
    r.lo -= pad;
    r.hi += pad;
  }
  const double raw = (r.hi - r.lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (raw <= step) break;
  }
  r.lo = std::floor(r.lo / step) * step;
  r.hi = std::ceil(r.hi / step) * step;
  std::vector<double> ticks;
  for (double t = r.lo; t <= r.hi + 0.5 * step; t += step) ticks.push_back(t);
  return ticks;
}

}  // namespace

Series aggregate_series(const std::string& label,
                        const std::map<double, std::vector<double>>& samples) {
  Series s;
  s.label = label;
  for (const auto& [x, ys] : samples) {
    s.x.push_back(x);
    s.y.push_back(mean_of(ys));
    s.err.push_back(stderr_of(ys));
  }
  return s;
}

std::string render_svg(const Chart& chart) {
  Range xr{INFINITY, -INFINITY}, yr{INFINITY, -INFINITY};
  std::size_t points = 0;
  for (const Series& s : chart.series) {
    if (s.x.size() != s.y.size() || (!s.err.empty() && s.err.size() != s.y.size())) {
      throw ShapeError("series '" + s.label + "' has mismatched lengths");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      const double e = s.err.empty() || !std::isfinite(s.err[i]) ? 0.0 : s.err[i];
      xr.lo = std::min(xr.lo, s.x[i]);
      xr.hi = std::max(xr.hi, s.x[i]);
      yr.lo = std::min(yr.lo, s.y[i] - e);
      yr.hi = std::max(yr.hi, s.y[i] + e);
      ++points;
    }
  }
  if (points == 0) throw StateError("chart '" + chart.title + "' has no data");

  const auto xticks = nice_ticks(xr);
  const auto yticks = nice_ticks(yr);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" + escape(chart.title) + "</text>\n";

  for (double t : xticks) {
    svg += "<line x1=\"" + num(px(t)) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(px(t)) +
           "\" y2=\"" + num(kTop + ph) + "\" stroke=\"#e5e5e5\"/>\n";
    svg += "<text x=\"" + num(px(t)) + "\" y=\"" + num(kTop + ph + 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           tick_label(t) + "</text>\n";
  }
  for (double t : yticks) {
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py(t)) + "\" x2=\"" + num(kLeft + pw) +
           "\" y2=\"" + num(py(t)) + "\" stroke=\"#e5e5e5\"/>\n";
    svg += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(t) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           tick_label(t) + "</text>\n";
  }
  svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) +
         "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 18) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
         escape(chart.x_label) + "</text>\n";
  svg += "<text transform=\"translate(20," + num(kTop + ph / 2) +
         ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
         escape(chart.y_label) + "</text>\n";

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const Series& s = chart.series[k];
    const std::string color = kPalette[k % std::size(kPalette)];
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) idx.push_back(i);
    }
    if (idx.empty()) continue;
    auto err = [&](std::size_t i) {
      return s.err.empty() || !std::isfinite(s.err[i]) ? 0.0 : s.err[i];
    };
    bool any_band = false;
    for (std::size_t i : idx) any_band = any_band || err(i) > 0.0;
    if (any_band && idx.size() > 1) {
      std::string band;
      for (std::size_t i : idx) band += num(px(s.x[i])) + "," + num(py(s.y[i] + err(i))) + " ";
      for (auto it = idx.rbegin(); it != idx.rend(); ++it) {
        band += num(px(s.x[*it])) + "," + num(py(s.y[*it] - err(*it))) + " ";
      }
      band.pop_back();
      svg += "<polygon class=\"band\" points=\"" + band + "\" fill=\"" + color +
             "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    }
    std::string line;
    for (std::size_t i : idx) line += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
    line.pop_back();
    svg += "<polyline class=\"series\" data-label=\"" + escape(s.label) + "\" points=\"" + line +
           "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    if (idx.size() == 1) {
      svg += "<circle cx=\"" + num(px(s.x[idx[0]])) + "\" cy=\"" + num(py(s.y[idx[0]])) +
             "\" r=\"4\" fill=\"" + color + "\"/>\n";
    }
    const double ly = kTop + 14.0 + 20.0 * static_cast<double>(k);
    svg += "<line x1=\"" + num(kLeft + pw + 12) + "\" y1=\"" + num(ly) + "\" x2=\"" +
           num(kLeft + pw + 36) + "\" y2=\"" + num(ly) + "\" stroke=\"" + color +
           "\" stroke-width=\"3\"/>\n";
    svg += "<text x=\"" + num(kLeft + pw + 42) + "\" y=\"" + num(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + escape(s.label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void write_svg(const std::filesystem::path& path, const Chart& chart) {
  write_text_file(path, render_svg(chart));
}

}  // namespace p2pdrl
