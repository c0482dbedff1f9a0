#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sqhardnet {

/// A median line with an optional shaded band [lower, upper].
struct BandSeries {
  std::string label;
  std::string color;
  std::vector<double> median;
  std::vector<double> lower;  // empty: no band
  std::vector<double> upper;
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label = "epoch";
  std::string y_label;
  std::vector<double> x;
  std::vector<BandSeries> series;
};

namespace detail {

inline std::string svg_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Roughly five round tick values covering [lo, hi].
inline std::vector<double> nice_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step)
    ticks.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
  return ticks;
}

}  // namespace detail

/// Self-contained SVG line plot with IQR-style shaded bands.
inline std::string render_svg(const PlotSpec& plot) {
  if (plot.x.empty()) throw std::invalid_argument("plot has no x values");
  constexpr double W = 720, H = 440, L = 70, R = 170, T = 40, B = 55;
  double x_lo = plot.x.front(), x_hi = plot.x.back();
  double y_lo = std::numeric_limits<double>::infinity();
  double y_hi = -y_lo;
  for (const auto& s : plot.series) {
    if (s.median.size() != plot.x.size())
      throw std::invalid_argument("series length does not match x");
    for (const auto* v : {&s.median, &s.lower, &s.upper})
      for (double y : *v)
        if (std::isfinite(y)) {
          y_lo = std::min(y_lo, y);
          y_hi = std::max(y_hi, y);
        }
  }
  if (!std::isfinite(y_lo)) y_lo = 0.0, y_hi = 1.0;
  y_lo = std::min(0.0, y_lo);
  if (y_hi <= y_lo) y_hi = y_lo + 1.0;
  y_hi += 0.05 * (y_hi - y_lo);
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;

  auto px = [&](double x) { return L + (x - x_lo) / (x_hi - x_lo) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y_lo) / (y_hi - y_lo) * (H - T - B); };
  using detail::svg_number;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_number(W) +
         "\" height=\"" + svg_number(H) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + svg_number((L + W - R) / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::svg_escape(plot.title) + "</text>\n";

  for (double t : detail::nice_ticks(y_lo, y_hi)) {
    out += "<line x1=\"" + svg_number(L) + "\" x2=\"" + svg_number(W - R) + "\" y1=\"" +
           svg_number(py(t)) + "\" y2=\"" + svg_number(py(t)) + "\" stroke=\"#e0e0e0\"/>\n";
    out += "<text x=\"" + svg_number(L - 6) + "\" y=\"" + svg_number(py(t) + 4) +
           "\" text-anchor=\"end\">" + detail::tick_label(t) + "</text>\n";
  }
  for (double t : detail::nice_ticks(x_lo, x_hi))
    out += "<text x=\"" + svg_number(px(t)) + "\" y=\"" + svg_number(H - B + 18) +
           "\" text-anchor=\"middle\">" + detail::tick_label(t) + "</text>\n";
  out += "<rect x=\"" + svg_number(L) + "\" y=\"" + svg_number(T) + "\" width=\"" +
         svg_number(W - L - R) + "\" height=\"" + svg_number(H - T - B) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  out += "<text x=\"" + svg_number((L + W - R) / 2) + "\" y=\"" + svg_number(H - 14) +
         "\" text-anchor=\"middle\">" + detail::svg_escape(plot.x_label) + "</text>\n";
  out += "<text transform=\"translate(18," + svg_number((T + H - B) / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + detail::svg_escape(plot.y_label) +
         "</text>\n";

  double legend_y = T + 10;
  for (const auto& s : plot.series) {
    if (!s.lower.empty()) {
      std::string pts;
      for (std::size_t i = 0; i < plot.x.size(); ++i)
        pts += svg_number(px(plot.x[i])) + "," + svg_number(py(s.upper[i])) + " ";
      for (std::size_t i = plot.x.size(); i-- > 0;)
        pts += svg_number(px(plot.x[i])) + "," + svg_number(py(s.lower[i])) + " ";
      out += "<polygon points=\"" + pts + "\" fill=\"" + s.color +
             "\" fill-opacity=\"0.25\" stroke=\"none\"/>\n";
    }
    std::string pts;
    for (std::size_t i = 0; i < plot.x.size(); ++i)
      pts += svg_number(px(plot.x[i])) + "," + svg_number(py(s.median[i])) + " ";
    out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + s.color +
           "\" stroke-width=\"1.5\"" + (s.dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
    out += "<line x1=\"" + svg_number(W - R + 12) + "\" x2=\"" + svg_number(W - R + 36) +
           "\" y1=\"" + svg_number(legend_y) + "\" y2=\"" + svg_number(legend_y) +
           "\" stroke=\"" + s.color + "\" stroke-width=\"2\"" +
           (s.dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
    out += "<text x=\"" + svg_number(W - R + 42) + "\" y=\"" + svg_number(legend_y + 4) +
           "\">" + detail::svg_escape(s.label) + "</text>\n";
    legend_y += 20;
  }
  out += "</svg>\n";
  return out;
}

inline void write_svg(const std::string& path, const PlotSpec& plot) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << render_svg(plot);
}

}  // namespace sqhardnet
