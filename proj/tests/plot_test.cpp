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

#include <cmath>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "advmoco/evalharness.hpp"
#include "advmoco/experiment.hpp"
#include "advmoco/fileio.hpp"
#include "advmoco/plot.hpp"
#include "advmoco/trainloop.hpp"
#include "testing.hpp"

namespace advmoco {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> csv_rows(const std::string& text) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) rows.push_back(line);
  return rows;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

PredictionReport report(std::vector<double> p, int label) {
  PredictionReport r;
  r.probabilities = p;
  r.prediction = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  r.entropy = entropy(p);
  r.label = label;
  r.correct = r.prediction == label;
  return r;
}

TEST(Plots, EmptyDirectoryIsAnErrorAndWritesNothing) {
  const std::string dir = testing::temp_dir("plot_empty");
  EXPECT_THROW(make_plots(dir), UsageError);
  EXPECT_FALSE(fs::exists(fs::path(dir) / "plots"));
}

TEST(Plots, LossCsvMatchesMetrics) {
  const std::string dir = testing::temp_dir("plot_loss");
  std::string metrics = metric_header() + "\n";
  std::vector<StepRecord> log;
  for (int s = 1; s <= 5; ++s) {
    StepRecord r;
    r.step = s;
    r.epoch = s > 2 ? 2 : 1;
    r.phase = s > 2 ? "adversarial" : "warmup";
    r.infonce_loss = 4.0 - 0.1 * s;
    if (s > 2) r.decayed_loss = 3.0 - 0.1 * s;
    if (s > 2) r.generator_l1 = 0.01 * s;
    r.queue_len = 8 * s;
    log.push_back(r);
    metrics += format_record(r) + "\n";
  }
  write_file_atomic(dir + "/metrics.csv", metrics);
  const auto files = make_plots(dir);
  EXPECT_FALSE(files.empty());
  ASSERT_TRUE(fs::exists(dir + "/plots/loss_curve.svg"));
  const auto rows = csv_rows(read_file(dir + "/plots/loss_curve.csv"));
  ASSERT_EQ(rows.size(), log.size() + 1);
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto f = split(rows[i + 1]);
    ASSERT_EQ(f.size(), 6u);
    EXPECT_EQ(std::stoll(f[0]), log[i].step);
    EXPECT_EQ(f[2], log[i].phase);
    EXPECT_EQ(std::stod(f[3]), log[i].infonce_loss);
    if (std::isnan(log[i].decayed_loss)) {
      EXPECT_TRUE(f[4].empty());
    } else {
      EXPECT_EQ(std::stod(f[4]), log[i].decayed_loss);
    }
  }
  const std::string svg = read_file(dir + "/plots/loss_curve.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Plots, EntropyBarsMatchReportAggregates) {
  const std::string dir = testing::temp_dir("plot_entropy");
  OcclusionReport rep;
  rep.rows.push_back({0, report({0.7, 0.1, 0.1, 0.1}, 0), report({0.4, 0.2, 0.2, 0.2}, 0)});
  rep.rows.push_back({1, report({0.1, 0.6, 0.2, 0.1}, 2), report({0.25, 0.25, 0.25, 0.25}, 2)});
  write_file_atomic(dir + "/report.tsv", report_tsv(rep));
  make_plots(dir);
  const auto rows = csv_rows(read_file(dir + "/plots/entropy_bars.csv"));
  ASSERT_EQ(rows.size(), 2u);
  const auto f = split(rows[1]);
  const double clean = (rep.rows[0].clean.entropy + rep.rows[1].clean.entropy) / 2.0;
  const double occl = (rep.rows[0].occluded.entropy + rep.rows[1].occluded.entropy) / 2.0;
  EXPECT_EQ(std::stoi(f[1]), 2);
  EXPECT_NEAR(std::stod(f[2]), clean, 1e-15);
  EXPECT_NEAR(std::stod(f[3]), occl, 1e-15);
  EXPECT_NEAR(std::stod(f[4]), occl - clean, 1e-15);
}

TEST(Plots, HeatColorEndpoints) {
  double lo[3], hi[3];
  heat_color(0.0, lo);
  heat_color(1.0, hi);
  EXPECT_GT(lo[2], lo[0]);
  EXPECT_GT(hi[0], hi[2]);
  double clamped[3];
  heat_color(7.0, clamped);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(clamped[c], hi[c]);
}

TEST(Plots, BarChartRejectsRaggedValues) {
  EXPECT_ANY_THROW(svg_bar_chart("t", "y", {"a", "b"}, {"s"}, {{1.0}}));
}

}  // namespace
}  // namespace advmoco
