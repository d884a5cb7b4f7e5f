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

/*
 * Minimal static SVG charts for the CLI: line charts over a shared x axis and
 * heat maps (feature images). Output is deterministic text.
 */

#pragma once

#include <string>
#include <vector>

namespace dkws::plot {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  int width = 480;
  int height = 300;
};

std::string render_svg(const LineChart &chart);

struct HeatMap {
  std::string title;
  std::string x_label;                  // e.g. "frame"
  std::vector<std::string> row_labels;  // bottom row first
  std::vector<std::vector<double>> columns;  // columns[x][row]
  double v_min = 0.0;
  double v_max = 1.0;
  int cell_w = 8;
  int cell_h = 14;
};

std::string render_svg(const HeatMap &map);

/// Escapes &, <, >, " for SVG/HTML text.
std::string xml_escape(const std::string &s);

void save_text(const std::string &path, const std::string &text);

}  // namespace dkws::plot
