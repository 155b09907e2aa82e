/*
 * Copyright 2026 The stabren Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace svgplot {

namespace {

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 70, kRight = 20, kTop = 36, kBottom = 50;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// "Nice" tick spacing of roughly `target` intervals.
double tick_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  const double nice = r < 1.5 ? 1 : r < 3 ? 2 : r < 7 ? 5 : 10;
  return nice * mag;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0, hi = 1;
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      const double pad = std::max(1e-3, std::abs(hi) * 0.05);
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

bool write(const Chart& chart, const std::string& path) {
  auto ty = [&](double v) { return chart.log_y ? std::log10(v) : v; };
  Range rx, ry;
  for (const auto& s : chart.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (chart.log_y && !(s.y[i] > 0)) continue;
      rx.add(s.x[i]);
      ry.add(ty(s.y[i]));
    }
  }
  rx.finish();
  ry.finish();
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  if (chart.equal_axes) {
    const double sx = (rx.hi - rx.lo) / pw, sy = (ry.hi - ry.lo) / ph;
    if (sx > sy) {
      const double c = 0.5 * (ry.lo + ry.hi), h = 0.5 * sx * ph;
      ry.lo = c - h, ry.hi = c + h;
    } else {
      const double c = 0.5 * (rx.lo + rx.hi), h = 0.5 * sy * pw;
      rx.lo = c - h, rx.hi = c + h;
    }
  }
  auto px = [&](double v) { return kLeft + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto py = [&](double v) {
    return kTop + ph - (v - ry.lo) / (ry.hi - ry.lo) * ph;
  };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
    << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
    << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
       "font-size=\"14\">"
    << esc(chart.title) << "</text>\n";

  const double xs = tick_step(rx.hi - rx.lo, 6);
  for (double t = std::ceil(rx.lo / xs) * xs; t <= rx.hi + 1e-9 * xs; t += xs) {
    o << "<line x1=\"" << px(t) << "\" y1=\"" << kTop << "\" x2=\"" << px(t)
      << "\" y2=\"" << kTop + ph << "\" stroke=\"#eee\"/>\n";
    o << "<text x=\"" << px(t) << "\" y=\"" << kTop + ph + 15
      << "\" text-anchor=\"middle\">" << num(std::abs(t) < 1e-12 * xs ? 0 : t)
      << "</text>\n";
  }
  const double ys = chart.log_y ? std::max(1.0, std::round(tick_step(ry.hi - ry.lo, 6)))
                                : tick_step(ry.hi - ry.lo, 6);
  for (double t = std::ceil(ry.lo / ys) * ys; t <= ry.hi + 1e-9 * ys; t += ys) {
    o << "<line x1=\"" << kLeft << "\" y1=\"" << py(t) << "\" x2=\""
      << kLeft + pw << "\" y2=\"" << py(t) << "\" stroke=\"#eee\"/>\n";
    const double label = chart.log_y ? std::pow(10.0, t)
                                     : (std::abs(t) < 1e-12 * ys ? 0 : t);
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(t) + 4
      << "\" text-anchor=\"end\">" << num(label) << "</text>\n";
  }
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw
    << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12
    << "\" text-anchor=\"middle\">" << esc(chart.x_label) << "</text>\n";
  o << "<text transform=\"translate(16," << kTop + ph / 2
    << ") rotate(-90)\" text-anchor=\"middle\">" << esc(chart.y_label)
    << "</text>\n";

  o << "<g clip-path=\"url(#plot)\">\n";
  o << "<clipPath id=\"plot\"><rect x=\"" << kLeft << "\" y=\"" << kTop
    << "\" width=\"" << pw << "\" height=\"" << ph << "\"/></clipPath>\n";
  std::size_t idx = 0;
  for (const auto& s : chart.series) {
    const std::string color =
        s.color.empty() ? kPalette[idx % (sizeof kPalette / sizeof *kPalette)]
                        : s.color;
    ++idx;
    o << "<polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.4\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (chart.log_y && !(s.y[i] > 0)) continue;
      o << px(s.x[i]) << "," << py(ty(s.y[i])) << " ";
    }
    o << "\"/>\n";
    if (s.markers) {
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if (chart.log_y && !(s.y[i] > 0)) continue;
        o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(ty(s.y[i]))
          << "\" r=\"2.2\" fill=\"" << color << "\"/>\n";
      }
    }
  }
  o << "</g>\n";

  if (chart.legend) {
    double ly = kTop + 14;
    idx = 0;
    for (const auto& s : chart.series) {
      const std::string color =
          s.color.empty() ? kPalette[idx % (sizeof kPalette / sizeof *kPalette)]
                          : s.color;
      ++idx;
      if (s.label.empty()) continue;
      o << "<line x1=\"" << kLeft + pw - 130 << "\" y1=\"" << ly - 4
        << "\" x2=\"" << kLeft + pw - 110 << "\" y2=\"" << ly - 4
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      o << "<text x=\"" << kLeft + pw - 104 << "\" y=\"" << ly << "\">"
        << esc(s.label) << "</text>\n";
      ly += 15;
    }
  }
  o << "</svg>\n";

  std::ofstream f(path);
  if (!f) return false;
  f << o.str();
  return static_cast<bool>(f);
}

}  // namespace svgplot
