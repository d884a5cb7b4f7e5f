/*
 * Copyright (C) 2026 The dkws Authors. All rights reserved.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the License); you may
 * not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an AS IS BASIS, WITHOUT
 * WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "dkws/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "dkws/error.hpp"

namespace dkws::plot {

namespace {

constexpr std::array<const char *, 6> kColors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

std::string num(double v) { return fmt::format("{:.2f}", v); }

std::string tick(double v) {
  if (v == 0.0) return "0";
  const double a = std::abs(v);
  if (a >= 1000 || a < 0.01) return fmt::format("{:.3g}", v);
  return fmt::format("{:.4g}", v);
}

}  // namespace

std::string xml_escape(const std::string &s) {
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

std::string render_svg(const LineChart &c) {
  const double left = 60, right = 110, top = 30, bottom = 45;
  const double pw = c.width - left - right;
  const double ph = c.height - top - bottom;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto &s : c.series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) {
      if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
  }
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      c.width, c.height);
  svg += fmt::format("<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
                     num(left + pw / 2), xml_escape(c.title));
  if (!std::isfinite(x0) || !std::isfinite(y0)) {
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">no data</text>\n</svg>\n",
                       num(left + pw / 2), num(top + ph / 2));
    return svg;
  }
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1.0;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  const auto py = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
                     num(left), num(top), num(pw), num(ph));
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double yv = y0 + (y1 - y0) * i / 4.0;
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", num(px(xv)),
                       num(top + ph + 14), tick(xv));
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", num(left - 4), num(py(yv) + 4),
                       tick(yv));
    svg += fmt::format("<line x1=\"{0}\" x2=\"{1}\" y1=\"{2}\" y2=\"{2}\" stroke=\"#ddd\"/>\n", num(left),
                       num(left + pw), num(py(yv)));
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", num(left + pw / 2),
                     num(c.height - 8), xml_escape(c.x_label));
  svg += fmt::format("<text transform=\"translate(14,{}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
                     num(top + ph / 2), xml_escape(c.y_label));
  for (std::size_t k = 0; k < c.series.size(); ++k) {
    const auto &s = c.series[k];
    const char *color = kColors[k % kColors.size()];
    std::string pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      pts += fmt::format("{}{},{}", pts.empty() ? "" : " ", num(px(s.x[i])), num(py(s.y[i])));
      svg += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{}\"/>\n", num(px(s.x[i])), num(py(s.y[i])),
                         color);
    }
    svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n", pts, color);
    const double ly = top + 12 + 16.0 * static_cast<double>(k);
    svg += fmt::format("<line x1=\"{0}\" x2=\"{1}\" y1=\"{2}\" y2=\"{2}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                       num(left + pw + 8), num(left + pw + 24), num(ly), color);
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", num(left + pw + 28), num(ly + 4), xml_escape(s.name));
  }
  svg += "</svg>\n";
  return svg;
}

std::string render_svg(const HeatMap &m) {
  const int rows = static_cast<int>(m.row_labels.size());
  const int cols = static_cast<int>(m.columns.size());
  const int left = 90, top = 28, bottom = 30;
  const int width = left + cols * m.cell_w + 20;
  const int height = top + rows * m.cell_h + bottom;
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"10\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      width, height);
  svg += fmt::format("<text x=\"{}\" y=\"16\" font-size=\"12\">{}</text>\n", left, xml_escape(m.title));
  const double span = m.v_max > m.v_min ? m.v_max - m.v_min : 1.0;
  for (int x = 0; x < cols; ++x) {
    for (int r = 0; r < rows && r < static_cast<int>(m.columns[x].size()); ++r) {
      const double t = std::clamp((m.columns[x][r] - m.v_min) / span, 0.0, 1.0);
      // Dark blue (low) to yellow (high).
      const int red = static_cast<int>(std::lround(20 + 235 * t));
      const int green = static_cast<int>(std::lround(30 + 200 * t));
      const int blue = static_cast<int>(std::lround(90 - 60 * t));
      svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"rgb({},{},{})\"/>\n",
                         left + x * m.cell_w, top + (rows - 1 - r) * m.cell_h, m.cell_w, m.cell_h, red, green, blue);
    }
  }
  for (int r = 0; r < rows; ++r) {
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", left - 4,
                       top + (rows - 1 - r) * m.cell_h + m.cell_h - 3, xml_escape(m.row_labels[r]));
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", left + cols * m.cell_w / 2,
                     height - 8, xml_escape(m.x_label));
  svg += "</svg>\n";
  return svg;
}

void save_text(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::io, fmt::format("cannot write '{}'", path));
  out << text;
  if (!out) throw Error(ErrorCategory::io, fmt::format("write to '{}' failed", path));
}

}  // namespace dkws::plot
