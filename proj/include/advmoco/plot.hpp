// Copyright 2026 The advmoco Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

namespace advmoco {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;  // NaN points are skipped
};

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series);

// values[s][c]: bar for series s in category c. errors (optional) has the same shape.
std::string svg_bar_chart(const std::string& title, const std::string& y_label,
                          const std::vector<std::string>& categories, const std::vector<std::string>& series,
                          const std::vector<std::vector<double>>& values,
                          const std::vector<std::vector<double>>& errors = {});

// Blue-to-red ramp for v in [0, 1].
void heat_color(double v, double rgb[3]);

// Renders every figure the run directory has data for into <run_dir>/plots,
// each next to a CSV of the plotted numbers. Throws UsageError (and writes
// nothing) when the directory holds no metrics, reports, attention maps or
// ablation results.
std::vector<std::string> make_plots(const std::string& run_dir);

}  // namespace advmoco
