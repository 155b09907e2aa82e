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

#pragma once

// Minimal static SVG line charts for the CLI outputs.

#include <string>
#include <vector>

namespace svgplot {

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::string color;  // empty: palette
  bool markers = false;
};

struct Chart {
  std::string title, x_label, y_label;
  bool log_y = false;
  bool equal_axes = false;
  std::vector<Series> series;
  bool legend = true;
};

/// Returns false if the file cannot be written.
bool write(const Chart& chart, const std::string& path);

}  // namespace svgplot
