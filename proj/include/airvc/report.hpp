#pragma once

// CSV tables and SVG figures for density profiles and accuracy curves.
// Each SVG plots its polyline in data coordinates (a transform maps them to
// the canvas), so the numbers in the figure are the numbers in its CSV twin.

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "airvc/estimation.hpp"
#include "airvc/prediction.hpp"
#include "airvc/simulator.hpp"

namespace airvc::report {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
  std::string color;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  std::vector<Series> series;
  std::vector<std::pair<double, std::string>> markers;  // vertical lines at x
  std::optional<std::pair<double, double>> band;        // shaded x interval
};

inline void write_svg(std::ostream& os, const Plot& p) {
  constexpr double W = 720, H = 400, L = 60, R = 20, T = 40, B = 50;
  const double pw = W - L - R, ph = H - T - B;
  const double sx = pw / (p.x_hi - p.x_lo > 0 ? p.x_hi - p.x_lo : 1.0);
  const double sy = ph / (p.y_hi - p.y_lo > 0 ? p.y_hi - p.y_lo : 1.0);
  auto px = [&](double x) { return L + (x - p.x_lo) * sx; };
  auto py = [&](double y) { return T + ph - (y - p.y_lo) * sy; };
  const std::string data_transform = "matrix(" + num(sx) + " 0 0 " + num(-sy) + " " + num(L - p.x_lo * sx) + " " +
                                     num(T + ph + p.y_lo * sy) + ")";

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
     << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << p.title << "</text>\n";
  if (p.band)
    os << "<rect x=\"" << num(px(p.band->first)) << "\" y=\"" << T << "\" width=\""
       << num((p.band->second - p.band->first) * sx) << "\" height=\"" << ph
       << "\" fill=\"#f4d58d\" fill-opacity=\"0.5\"/>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double x = p.x_lo + (p.x_hi - p.x_lo) * k / 4, y = p.y_lo + (p.y_hi - p.y_lo) * k / 4;
    os << "<text x=\"" << num(px(x)) << "\" y=\"" << T + ph + 16 << "\" text-anchor=\"middle\">" << num(x)
       << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << num(y) << "</text>\n";
  }
  os << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << p.x_label << "</text>\n";
  os << "<text transform=\"translate(16 " << T + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << p.y_label
     << "</text>\n";
  for (const auto& [x, label] : p.markers) {
    os << "<line x1=\"" << num(px(x)) << "\" x2=\"" << num(px(x)) << "\" y1=\"" << T << "\" y2=\"" << T + ph
       << "\" stroke=\"#c0392b\" stroke-dasharray=\"6 3\"/>\n";
    os << "<text x=\"" << num(px(x) + 4) << "\" y=\"" << T + 14 << "\" fill=\"#c0392b\">" << label << "</text>\n";
  }
  for (std::size_t i = 0; i < p.series.size(); ++i) {
    const auto& s = p.series[i];
    os << "<polyline class=\"series\" data-name=\"" << s.name << "\" fill=\"none\" stroke=\"" << s.color
       << "\" stroke-width=\"1.5\" vector-effect=\"non-scaling-stroke\" transform=\"" << data_transform
       << "\" points=\"";
    for (std::size_t k = 0; k < s.points.size(); ++k)
      os << (k ? " " : "") << num(s.points[k].first) << ',' << num(s.points[k].second);
    os << "\"/>\n";
    os << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 + 14 * static_cast<double>(i) << "\" text-anchor=\"end\" fill=\""
       << s.color << "\">" << s.name << "</text>\n";
  }
  os << "</svg>\n";
}

// density profile

inline void write_density_csv(std::ostream& os, const DensityProfile& d) {
  os << "position,mass,smoothed,in_hddr\n";
  for (std::size_t p = 0; p < d.masses.size(); ++p)
    os << p << ',' << num(d.masses[p]) << ',' << num(d.smoothed[p]) << ','
       << (d.hddr.contains(static_cast<int>(p)) ? 1 : 0) << '\n';
}

inline Plot density_plot(const DensityProfile& d, const CountingLine& cl_o) {
  Plot p;
  p.title = "Detection density along the flow axis";
  p.x_label = "position (px)";
  p.y_label = "box area per line";
  p.x_hi = std::max<double>(1, static_cast<double>(d.masses.size()) - 1);
  double top = 0;
  for (double m : d.masses) top = std::max(top, m);
  p.y_hi = top > 0 ? top * 1.05 : 1.0;
  Series raw{"mass", {}, "#95a5a6"}, smooth{"smoothed", {}, "#2c3e50"};
  for (std::size_t i = 0; i < d.masses.size(); ++i) {
    raw.points.push_back({static_cast<double>(i), d.masses[i]});
    smooth.points.push_back({static_cast<double>(i), d.smoothed[i]});
  }
  p.series = {raw, smooth};
  if (!d.hddr.empty()) p.band = std::pair<double, double>(d.hddr.lo, d.hddr.hi + 1);
  p.markers = {{static_cast<double>(cl_o.position), "cl_o"}};
  return p;
}

// accuracy curve

inline void write_curve_csv(std::ostream& os, const std::vector<sim::CurvePoint>& curve, int cl_o) {
  os << "position,predicted,truth,accuracy,is_cl_o\n";
  for (const auto& c : curve)
    os << c.position << ',' << c.predicted << ',' << c.truth << ',' << (c.accuracy ? num(*c.accuracy) : "") << ','
       << (c.position == cl_o ? 1 : 0) << '\n';
}

inline Plot curve_plot(const std::vector<sim::CurvePoint>& curve, int cl_o, int extent) {
  Plot p;
  p.title = "Counting accuracy versus line position";
  p.x_label = "line position (px)";
  p.y_label = "accuracy (%)";
  p.x_hi = extent;
  p.y_hi = 100;
  Series s{"accuracy", {}, "#2c3e50"};
  for (const auto& c : curve)
    if (c.accuracy) s.points.push_back({c.position, *c.accuracy});
  p.series = {s};
  p.markers = {{static_cast<double>(cl_o), "cl_o"}};
  return p;
}

/// Curve lines: `n` uniform positions plus cl_o, sorted and deduplicated.
inline std::vector<int> curve_positions(int n, int extent, int cl_o) {
  auto lines = sim::uniform_lines(n, extent);
  lines.push_back(cl_o);
  std::sort(lines.begin(), lines.end());
  lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
  return lines;
}

}  // namespace airvc::report
