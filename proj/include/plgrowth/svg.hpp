#pragma once

// Log-log growth plot as a standalone SVG document.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "verify.hpp"

namespace plgrowth {

/// Points log M(r) against log r, the least-squares line and, if given, a
/// reference line of slope `alpha_ref` through the first point.
inline void write_growth_svg(const GrowthTable& t, std::optional<double> alpha_ref, std::ostream& os) {
  constexpr double W = 480, H = 360, L = 60, Rm = 20, T = 20, B = 50;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < t.radii.size(); ++k)
    if (t.M_values[k] > 0.0) pts.emplace_back(std::log10(t.radii[k]), std::log10(t.M_values[k]));

  char buf[256];
  auto out = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof buf, fmt, args...);
    os << buf;
  };
  out("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" viewBox=\"0 0 %g %g\">\n", W, H, W, H);
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (pts.empty()) {
    out("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"14\">no positive M(r)</text>\n", L, H / 2);
    os << "</svg>\n";
    return;
  }

  double x_lo = pts.front().first, x_hi = pts.back().first;
  double y_lo = pts.front().second, y_hi = pts.front().second;
  for (auto [x, y] : pts) {
    y_lo = std::min(y_lo, y);
    y_hi = std::max(y_hi, y);
  }
  auto line_at = [&](double slope, double x) { return pts.front().second + slope * (x - pts.front().first); };
  if (alpha_ref) {
    y_lo = std::min({y_lo, line_at(*alpha_ref, x_lo), line_at(*alpha_ref, x_hi)});
    y_hi = std::max({y_hi, line_at(*alpha_ref, x_lo), line_at(*alpha_ref, x_hi)});
  }
  if (x_hi - x_lo < 1e-9) { x_lo -= 0.5; x_hi += 0.5; }
  if (y_hi - y_lo < 1e-9) { y_lo -= 0.5; y_hi += 0.5; }
  const double px = 0.05 * (x_hi - x_lo), py = 0.05 * (y_hi - y_lo);
  x_lo -= px; x_hi += px; y_lo -= py; y_hi += py;
  auto sx = [&](double x) { return L + (x - x_lo) / (x_hi - x_lo) * (W - L - Rm); };
  auto sy = [&](double y) { return H - B - (y - y_lo) / (y_hi - y_lo) * (H - T - B); };

  out("<path d=\"M%g %g L%g %g L%g %g\" fill=\"none\" stroke=\"black\"/>\n", L, T, L, H - B, W - Rm, H - B);
  out("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">log10 r</text>\n",
      (L + W - Rm) / 2, H - 15);
  out("<text x=\"15\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 15 %g)\">log10 M(r)</text>\n",
      (T + H - B) / 2, (T + H - B) / 2);
  for (int k = 0; k <= 4; ++k) {
    const double x = x_lo + (x_hi - x_lo) * k / 4, y = y_lo + (y_hi - y_lo) * k / 4;
    out("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">%.2f</text>\n",
        sx(x), H - B + 15, x);
    out("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">%.2f</text>\n",
        L - 4, sy(y) + 3, y);
  }

  if (std::isfinite(t.alpha_fit) && pts.size() >= 2) {
    double mx = 0, my = 0;
    for (auto [x, y] : pts) { mx += x; my += y; }
    mx /= pts.size();
    my /= pts.size();
    const double a = pts.front().first, b = pts.back().first;
    out("<path d=\"M%g %g L%g %g\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n", sx(a),
        sy(my + t.alpha_fit * (a - mx)), sx(b), sy(my + t.alpha_fit * (b - mx)));
    out("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\" fill=\"steelblue\">fit %.4f</text>\n",
        L + 10, T + 14, t.alpha_fit);
  }
  if (alpha_ref) {
    out("<path d=\"M%g %g L%g %g\" stroke=\"firebrick\" stroke-dasharray=\"5,4\"/>\n", sx(pts.front().first),
        sy(line_at(*alpha_ref, pts.front().first)), sx(pts.back().first), sy(line_at(*alpha_ref, pts.back().first)));
    out("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\" fill=\"firebrick\">alpha %.4f</text>\n",
        L + 10, T + 30, *alpha_ref);
  }
  for (auto [x, y] : pts) out("<circle cx=\"%g\" cy=\"%g\" r=\"3.5\" fill=\"black\"/>\n", sx(x), sy(y));
  os << "</svg>\n";
}

}  // namespace plgrowth
