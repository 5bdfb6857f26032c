#pragma once

// Self-contained SVG line and scatter plots for the experiment panels.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "adagibbs/data.hpp"
#include "adagibbs/error.hpp"

namespace adagibbs {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool points = false;  // markers instead of a polyline
  int color = -1;       // palette index; -1 uses the series position
  double radius = 2.0;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<PlotSeries> series;
};

namespace detail {

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
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

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;
  double map(double v, double p0, double p1) const {
    const double t = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
    return p0 + t * (p1 - p0);
  }
  double value_at(double t) const { return log ? std::pow(10.0, lo + t * (hi - lo)) : lo + t * (hi - lo); }
};

inline Axis fit_axis(const std::vector<const std::vector<double>*>& data, bool log) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto* v : data)
    for (double x : *v) {
      if (!std::isfinite(x) || (log && x <= 0.0)) continue;
      const double t = log ? std::log10(x) : x;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.03 * (hi - lo);
  return {lo - pad, hi + pad, log};
}

}  // namespace detail

inline std::string render_svg(const Plot& plot) {
  constexpr double W = 660, H = 420, L = 90, R = 150, T = 40, B = 55;
  std::vector<const std::vector<double>*> xs, ys;
  for (const auto& s : plot.series) {
    if (s.x.size() != s.y.size()) throw DataError("plot: series '" + s.label + "' has mismatched x and y");
    xs.push_back(&s.x);
    ys.push_back(&s.y);
  }
  const auto ax = detail::fit_axis(xs, plot.log_x);
  const auto ay = detail::fit_axis(ys, plot.log_y);
  const double x0 = L, x1 = W - R, y0 = H - B, y1 = T;

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << detail::num((x0 + x1) / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << detail::escape_xml(plot.title) << "</text>\n";
  o << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double t = i / 4.0;
    const double px = x0 + t * (x1 - x0), py = y0 + t * (y1 - y0);
    o << "<line x1=\"" << detail::num(px) << "\" y1=\"" << y0 << "\" x2=\"" << detail::num(px) << "\" y2=\"" << y0 + 5
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << detail::num(px) << "\" y=\"" << y0 + 18 << "\" text-anchor=\"middle\">"
      << detail::tick(ax.value_at(t)) << "</text>\n";
    o << "<line x1=\"" << x0 - 5 << "\" y1=\"" << detail::num(py) << "\" x2=\"" << x0 << "\" y2=\"" << detail::num(py)
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << x0 - 8 << "\" y=\"" << detail::num(py + 4) << "\" text-anchor=\"end\">"
      << detail::tick(ay.value_at(t)) << "</text>\n";
  }
  o << "<text x=\"" << detail::num((x0 + x1) / 2) << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
    << detail::escape_xml(plot.x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << detail::num((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << detail::num((y0 + y1) / 2) << ")\">" << detail::escape_xml(plot.y_label) << "</text>\n";

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const std::size_t ci = s.color >= 0 ? static_cast<std::size_t>(s.color) : k;
    const char* color = detail::kPalette[ci % std::size(detail::kPalette)];
    auto usable = [&](std::size_t i) {
      return std::isfinite(s.x[i]) && std::isfinite(s.y[i]) && (!plot.log_x || s.x[i] > 0) && (!plot.log_y || s.y[i] > 0);
    };
    if (s.points) {
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (usable(i))
          o << "<circle cx=\"" << detail::num(ax.map(s.x[i], x0, x1)) << "\" cy=\"" << detail::num(ay.map(s.y[i], y0, y1))
            << "\" r=\"" << detail::num(s.radius) << "\" fill=\"" << color << "\"/>\n";
    } else {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      bool first = true;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!usable(i)) continue;
        o << (first ? "" : " ") << detail::num(ax.map(s.x[i], x0, x1)) << ',' << detail::num(ay.map(s.y[i], y0, y1));
        first = false;
      }
      o << "\"/>\n";
    }
    const double ly = T + 14 + 18.0 * static_cast<double>(k);
    o << "<rect x=\"" << x1 + 12 << "\" y=\"" << detail::num(ly - 9) << "\" width=\"12\" height=\"10\" fill=\"" << color
      << "\"/>\n";
    o << "<text x=\"" << x1 + 30 << "\" y=\"" << detail::num(ly) << "\">" << detail::escape_xml(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

inline void write_svg(const std::filesystem::path& path, const Plot& plot) {
  auto out = detail::open_for_write(path);
  out << render_svg(plot);
}

}  // namespace adagibbs
