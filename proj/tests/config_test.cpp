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
#include <fstream>

#include <gtest/gtest.h>

#include "advmoco/config.hpp"
#include "testing.hpp"

namespace advmoco {
namespace {

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(validate(ExperimentConfig{})); }

TEST(Config, DumpParseRoundTrip) {
  ExperimentConfig c = testing::small_run_config();
  c.train.decay = 0.987654321;
  c.ablation.cells = {{MaskMode::kRandom, 3, 1.0}, {MaskMode::kAdversarial, 2, 0.999}};
  const std::string text = dump_config(c);
  const ExperimentConfig back = parse_config(text);
  EXPECT_EQ(dump_config(back), text);
  EXPECT_EQ(back.train.decay, 0.987654321);
  ASSERT_EQ(back.ablation.cells.size(), 2u);
  EXPECT_EQ(back.ablation.cells[1].mode, MaskMode::kAdversarial);
  EXPECT_EQ(back.ablation.cells[1].decay, 0.999);
}

TEST(Config, PartialFileKeepsDefaults) {
  const ExperimentConfig c = parse_config("seed: 9\ntrain:\n  drop_count: 2\n");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.train.drop_count, 2);
  EXPECT_EQ(c.train.queue_size, ExperimentConfig{}.train.queue_size);
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_THROW(parse_config("train:\n  dropcount: 2\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("bogus: 1\n"), std::invalid_argument);
}

TEST(Config, InvalidValuesRejected) {
  EXPECT_THROW(parse_config("train:\n  temperature: 0\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("train:\n  drop_count: 16\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("train:\n  decay: 1.5\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("train:\n  mask_mode: sometimes\n"), std::invalid_argument);
}

TEST(Config, AutoDecayHalvesOldestKey) {
  ExperimentConfig c;
  c.train.decay.reset();
  const double t = c.train.resolved_decay();
  EXPECT_NEAR(std::pow(t, c.train.queue_size), 0.5, 1e-12);
}

TEST(Config, SetValueByDottedKey) {
  ExperimentConfig c;
  set_config_value(c, "train.drop_count", "8");
  set_config_value(c, "train.mask_mode", "random");
  set_config_value(c, "seed", "42");
  set_config_value(c, "model.encoder_widths", "[4, 5, 6]");
  EXPECT_EQ(c.train.drop_count, 8);
  EXPECT_EQ(c.train.mask_mode, MaskMode::kRandom);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.model.encoder_widths, (std::vector<int>{4, 5, 6}));
  EXPECT_THROW(set_config_value(c, "train.nope", "1"), std::invalid_argument);
}

TEST(Config, HashTracksEveryField) {
  const ExperimentConfig a;
  ExperimentConfig b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b.train.mask_mode = MaskMode::kRandom;
  EXPECT_NE(config_hash(a), config_hash(b));
  ExperimentConfig c;
  c.eval.probe_lr = 0.25;
  EXPECT_NE(config_hash(a), config_hash(c));
}

TEST(Config, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Config, DefaultGridScalesWithClipLength) {
  ExperimentConfig c;  // T = 16, K = 4096
  const auto cells = default_ablation_cells(c);
  std::vector<int> adversarial_k;
  for (const auto& cell : cells)
    if (cell.mode == MaskMode::kAdversarial && cell.decay == 1.0) adversarial_k.push_back(cell.drop_count);
  EXPECT_EQ(adversarial_k, (std::vector<int>{2, 4, 6, 8, 12}));
  EXPECT_EQ(cells.front().mode, MaskMode::kNone);
  EXPECT_EQ(cells[1].mode, MaskMode::kRandom);
  // Each decayed cell keeps its reference t^65536 at this queue size.
  int decayed = 0;
  for (const auto& cell : cells) {
    if (cell.mode != MaskMode::kAdversarial || cell.decay == 1.0) continue;
    ++decayed;
    const double at_capacity = std::pow(cell.decay, 4096.0);
    EXPECT_GT(at_capacity, 0.0);
    EXPECT_LT(at_capacity, 1.0);
  }
  EXPECT_EQ(decayed, 5);
  const double mid = std::exp(std::log(0.99999) * 16.0);
  bool found = false;
  for (const auto& cell : cells) found |= std::abs(cell.decay - mid) < 1e-15;
  EXPECT_TRUE(found);
}

TEST(Config, LoadFromFile) {
  const std::string dir = testing::temp_dir("config_load");
  const std::string path = dir + "/c.yaml";
  std::ofstream(path) << dump_config(testing::tiny_config());
  EXPECT_EQ(dump_config(load_config(path)), dump_config(testing::tiny_config()));
  EXPECT_THROW(load_config(dir + "/missing.yaml"), std::runtime_error);
}

}  // namespace
}  // namespace advmoco
