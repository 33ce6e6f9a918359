#pragma once

/**
 * @file svg.hpp
 * @brief Minimal SVG 1.1 line chart: one polyline, framed axes, min/max tick
 * labels, optional log-scale y axis.
 */

#include "penalty_stab/harness/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>

namespace penalty_stab::harness {

struct LineChart {
  std::string title;
  std::string x_label = "t";
  std::string y_label;
  bool log_y = false;
  int width = 640;
  int height = 400;
};

namespace detail {
inline std::string xml_escape(const std::string &s) {
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

inline std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}
} // namespace detail

/// Render to a string. Points with non-finite coordinates, or y <= 0 on a
/// log axis, are skipped.
inline std::string render_svg(std::span<const double> xs, std::span<const double> ys,
                              const LineChart &chart) {
  const double left = 70, right = 20, top = 36, bottom = 50;
  const double pw = chart.width - left - right, ph = chart.height - top - bottom;

  std::vector<std::pair<double, double>> pts;
  const std::size_t n = std::min(xs.size(), ys.size());
  for (std::size_t i = 0; i < n; ++i) {
    double y = ys[i];
    if (chart.log_y) {
      if (!(y > 0.0)) continue;
      y = std::log10(y);
    }
    if (std::isfinite(xs[i]) && std::isfinite(y)) pts.emplace_back(xs[i], y);
  }

  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!pts.empty()) {
    x0 = x1 = pts.front().first;
    y0 = y1 = pts.front().second;
    for (const auto &[x, y] : pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };
  auto label_y = [&](double y) { return detail::short_number(chart.log_y ? std::pow(10.0, y) : y); };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
       std::to_string(chart.width) + "\" height=\"" + std::to_string(chart.height) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + format_number(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" " +
       "font-family=\"sans-serif\" font-size=\"14\">" + detail::xml_escape(chart.title) +
       "</text>\n";
  s += "<rect x=\"" + format_number(left) + "\" y=\"" + format_number(top) + "\" width=\"" +
       format_number(pw) + "\" height=\"" + format_number(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";

  auto text = [&](double x, double y, const std::string &anchor, const std::string &body) {
    s += "<text x=\"" + format_number(x) + "\" y=\"" + format_number(y) + "\" text-anchor=\"" +
         anchor + "\" font-family=\"sans-serif\" font-size=\"11\">" + detail::xml_escape(body) +
         "</text>\n";
  };
  text(left, top + ph + 16, "start", detail::short_number(x0));
  text(left + pw, top + ph + 16, "end", detail::short_number(x1));
  text(left - 6, top + ph, "end", label_y(y0));
  text(left - 6, top + 10, "end", label_y(y1));
  text(left + pw / 2, top + ph + 36, "middle", chart.x_label);
  text(16, top + ph / 2, "middle",
       chart.y_label + (chart.log_y ? " (log)" : ""));

  if (!pts.empty()) {
    s += "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) s += ' ';
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f,%.2f", px(pts[i].first), py(pts[i].second));
      s += buf;
    }
    s += "\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

inline void write_svg(const std::filesystem::path &path, std::span<const double> xs,
                      std::span<const double> ys, const LineChart &chart) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw OutputError("cannot open " + path.string() + " for writing");
  out << render_svg(xs, ys, chart);
  if (!out) throw OutputError("write failed for " + path.string());
}

} // namespace penalty_stab::harness
