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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "advmoco/experiment.hpp"
#include "advmoco/fileio.hpp"
#include "testing.hpp"

namespace advmoco {
namespace {

namespace fs = std::filesystem;

int count_lines(const std::string& path) {
  std::ifstream in(path);
  int n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

class CommandTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root = testing::temp_dir(std::string("cmd_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    cfg = testing::small_run_config();
    write_config();
    opts.config_path = root + "/config.yaml";
    opts.out = root + "/run";
  }
  void write_config() { write_file_atomic(root + "/config.yaml", dump_config(cfg)); }

  std::string root;
  ExperimentConfig cfg;
  CommandOptions opts;
  std::ostringstream log;
};

TEST_F(CommandTest, ResolveAppliesSeedThenOverrides) {
  opts.seed = 11;
  opts.overrides = {"train.drop_count=3"};
  const ExperimentConfig c = resolve_config(opts, false);
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.train.drop_count, 3);
  opts.overrides = {"seed=5"};
  EXPECT_EQ(resolve_config(opts, false).seed, 5u);
  opts.overrides = {"train.nope=1"};
  EXPECT_ANY_THROW(resolve_config(opts, false));
}

TEST_F(CommandTest, SynthIsIdempotentAndGuarded) {
  cmd_synth(opts, log);
  const std::string manifest = opts.out + "/manifest.jsonl";
  ASSERT_TRUE(fs::exists(manifest));
  const std::string first = read_file(manifest);
  EXPECT_EQ(count_lines(manifest), 1 + cfg.dataset.train_videos + cfg.dataset.test_videos);  // header line
  cmd_synth(opts, log);
  EXPECT_EQ(read_file(manifest), first);
  opts.seed = 99;
  EXPECT_THROW(cmd_synth(opts, log), UsageError);
  opts.force = true;
  cmd_synth(opts, log);
  EXPECT_NE(read_file(manifest), first);
}

TEST_F(CommandTest, PretrainNeedsManifest) { EXPECT_THROW(cmd_pretrain(opts, log), UsageError); }

TEST_F(CommandTest, PretrainWritesCheckpointsAndLog) {
  cmd_synth(opts, log);
  cmd_pretrain(opts, log);
  const int epochs = cfg.train.warmup_epochs + cfg.train.adversarial_epochs;
  EXPECT_TRUE(fs::exists(checkpoint_path(opts.out, epochs)));
  EXPECT_TRUE(fs::exists(checkpoint_path(opts.out, 1)));
  const int steps_per_epoch = cfg.dataset.train_videos / cfg.train.batch_size;
  EXPECT_EQ(count_lines(opts.out + "/metrics.csv"), epochs * steps_per_epoch + 1);
  EXPECT_TRUE(fs::exists(opts.out + "/pretrain.json"));
  EXPECT_THROW(cmd_pretrain(opts, log), UsageError);
  const std::string before = read_file(opts.out + "/metrics.csv");
  opts.force = true;
  cmd_pretrain(opts, log);
  EXPECT_EQ(read_file(opts.out + "/metrics.csv"), before);
}

TEST_F(CommandTest, ResumeRequiresSameConfig) {
  cmd_synth(opts, log);
  cmd_pretrain(opts, log);
  opts.resume = true;
  cmd_pretrain(opts, log);  // already complete: no-op continuation
  opts.overrides = {"train.lr_d=0.2"};
  EXPECT_THROW(cmd_pretrain(opts, log), UsageError);
}

TEST_F(CommandTest, ProbeEvalDiagnoseProduceArtifacts) {
  cmd_synth(opts, log);
  cmd_pretrain(opts, log);
  cmd_probe(opts, log);
  EXPECT_TRUE(fs::exists(opts.out + "/probe.ckpt"));
  EXPECT_TRUE(fs::exists(opts.out + "/probe.json"));
  cmd_eval(opts, log);
  EXPECT_EQ(count_lines(opts.out + "/report.tsv"), cfg.dataset.test_videos + 1);
  EXPECT_TRUE(fs::exists(opts.out + "/summary.json"));
  EXPECT_THROW(cmd_eval(opts, log), UsageError);
  cmd_diagnose(opts, log);
  EXPECT_TRUE(fs::exists(opts.out + "/diagnose.json"));
  int maps = 0;
  for (const auto& e : fs::directory_iterator(opts.out + "/attention")) maps += e.path().extension() == ".tsv";
  EXPECT_EQ(maps, cfg.eval.diagnose_videos);
}

TEST_F(CommandTest, EvalBeforeProbeIsUsageError) {
  cmd_synth(opts, log);
  cmd_pretrain(opts, log);
  EXPECT_THROW(cmd_eval(opts, log), UsageError);
}

TEST_F(CommandTest, AblateRowsAndSkipOnRerun) {
  cfg.ablation.cells = {{MaskMode::kAdversarial, 2, 1.0}, {MaskMode::kNone, 0, 1.0}};
  cfg.ablation.seeds = {1};
  write_config();
  cmd_ablate(opts, log);
  const std::string csv = opts.out + "/ablate.csv";
  EXPECT_EQ(count_lines(csv), 3);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "mode,k,t,seed,probe_top1,finetune_top1,final_loss,wall_seconds");
  EXPECT_EQ(ablation_csv_header(), header);

  std::vector<fs::file_time_type> stamps;
  std::vector<std::string> dirs;
  for (const auto& e : fs::directory_iterator(opts.out + "/cells")) dirs.push_back(e.path().string());
  ASSERT_EQ(dirs.size(), 2u);
  for (const auto& d : dirs) stamps.push_back(fs::last_write_time(d + "/result.json"));
  const std::string first = read_file(csv);
  std::ostringstream second_log;
  cmd_ablate(opts, second_log);
  for (std::size_t i = 0; i < dirs.size(); ++i) EXPECT_EQ(fs::last_write_time(dirs[i] + "/result.json"), stamps[i]);
  EXPECT_NE(second_log.str().find("[skip]"), std::string::npos);
  EXPECT_EQ(second_log.str().find("[run]"), std::string::npos);
  EXPECT_EQ(read_file(csv), first);
}

TEST(CellConfig, DiffersOnlyInCellFields) {
  const ExperimentConfig base = testing::small_run_config();
  const ExperimentConfig none = cell_config(base, {MaskMode::kNone, 0, 1.0}, 7);
  const ExperimentConfig adv = cell_config(base, {MaskMode::kAdversarial, 4, 0.999}, 7);
  std::istringstream a(dump_config(none)), b(dump_config(adv));
  std::vector<std::string> diff;
  for (std::string la, lb; std::getline(a, la) && std::getline(b, lb);)
    if (la != lb) diff.push_back(la.substr(0, la.find(':')));
  for (const auto& key : diff) {
    const bool allowed = key.find("mask_mode") != std::string::npos || key.find("drop_count") != std::string::npos ||
                         key.find("decay") != std::string::npos;
    EXPECT_TRUE(allowed) << key;
  }
  EXPECT_EQ(none.seed, 7u);
  EXPECT_TRUE(adv.ablation.cells.empty());
  EXPECT_NE(cell_run_id(none), cell_run_id(adv));
}

TEST(CellResultCsv, RoundTrip) {
  CellResult r{{MaskMode::kRandom, 4, 0.99999}, 3, 0.625, std::nullopt, 3.25, 12.5};
  const CellResult back = parse_cell_result(format_cell_result(r));
  EXPECT_EQ(back.cell.mode, r.cell.mode);
  EXPECT_EQ(back.cell.drop_count, 4);
  EXPECT_EQ(back.cell.decay, 0.99999);
  EXPECT_EQ(back.probe_top1, 0.625);
  EXPECT_FALSE(back.finetune_top1.has_value());
  r.finetune_top1 = 0.5;
  EXPECT_EQ(parse_cell_result(format_cell_result(r)).finetune_top1, 0.5);
}

TEST(CellSummaries, MeanAndSampleStd) {
  std::vector<CellResult> rs;
  for (double p : {0.5, 0.7, 0.9}) rs.push_back({{MaskMode::kNone, 0, 1.0}, 1, p, std::nullopt, 1.0, 0.0});
  rs.push_back({{MaskMode::kRandom, 2, 1.0}, 1, 0.4, std::nullopt, 2.0, 0.0});
  const auto s = summarize_cells(rs);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].seeds, 3);
  EXPECT_NEAR(s[0].probe_mean, 0.7, 1e-15);
  EXPECT_NEAR(s[0].probe_std, 0.2, 1e-15);
  EXPECT_EQ(s[1].probe_std, 0.0);
}

TEST(OutputRoot, EnvironmentOverrides) {
  const std::string root = testing::temp_dir("cmd_env_root");
  ::setenv(kOutRootEnv, root.c_str(), 1);
  EXPECT_EQ(output_root(), root);
  CommandOptions o;
  const ExperimentConfig c = testing::small_run_config();
  EXPECT_EQ(run_directory(o, c), (fs::path(root) / ("run-" + config_hash(c).substr(0, 12))).string());
  ::unsetenv(kOutRootEnv);
  EXPECT_EQ(output_root(), kDefaultOutRoot);
  o.out = "/x/y";
  EXPECT_EQ(run_directory(o, c), "/x/y");
}

TEST(ManifestPath, Resolution) {
  ExperimentConfig c;
  EXPECT_EQ(manifest_path(c, "/r"), "/r/manifest.jsonl");
  c.manifest = "/abs/m.jsonl";
  EXPECT_EQ(manifest_path(c, "/r"), "/abs/m.jsonl");
  c.manifest = "../m.jsonl";
  EXPECT_EQ(manifest_path(c, "/r/s"), "/r/m.jsonl");
}

}  // namespace
}  // namespace advmoco
