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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace advmoco {

enum class MaskMode { kNone, kRandom, kAdversarial };

std::string_view to_string(MaskMode mode);
MaskMode parse_mask_mode(std::string_view text);

struct DatasetConfig {
  int classes = 4;
  int train_videos = 1024;
  int test_videos = 256;
  int video_frames = 20;
  int render_size = 36;
  double min_speed = 0.6;
  double max_speed = 1.4;
  int min_sprite = 4;
  int max_sprite = 7;
  // Gray levels drawn uniformly per video.
  double min_sprite_intensity = 0.55;
  double max_sprite_intensity = 1.0;
  double min_background_intensity = 0.0;
  double max_background_intensity = 0.35;
  double noise_std = 0.03;
  // Number of clips written as per-frame image stacks by `synth`.
  int export_frames = 0;
};

struct ModelConfig {
  int clip_frames = 16;
  int input_size = 32;
  int channels = 3;
  std::vector<int> encoder_widths{8, 16, 32};
  int embed_dim = 64;
  bool encoder_layer_norm = true;
  std::vector<int> generator_widths{8, 16};
  int generator_hidden = 64;
};

struct AugmentConfig {
  double jitter = 0.1;
  double decolorize_prob = 0.2;
  double flip_prob = 0.0;
};

struct TrainConfig {
  double temperature = 0.07;
  double momentum = 0.999;
  int queue_size = 4096;
  // Unset means 0.5^(1/queue_size): the oldest slot weighs one half.
  std::optional<double> decay;
  bool decay_enabled = true;
  bool decay_in_warmup = false;
  int drop_count = 4;
  MaskMode mask_mode = MaskMode::kAdversarial;
  double lr_d = 0.02;
  double lr_g = 0.002;
  double sgd_momentum = 0.9;
  int batch_size = 64;
  int warmup_epochs = 10;
  int adversarial_epochs = 10;

  double resolved_decay() const;
};

struct EvalConfig {
  int probe_epochs = 100;
  double probe_lr = 0.01;
  int probe_batch = 32;
  int finetune_epochs = 10;
  double finetune_lr = 0.05;
  int finetune_batch = 32;
  int eval_clips = 10;
  // Occlusion geometry, as fractions of the video: a centered temporal span and
  // a centered square region.
  double occlusion_frame_fraction = 0.5;
  double occlusion_area_fraction = 0.5;
  double occlusion_fill = 0.5;
  // 0 means every test video.
  int eval_videos = 0;
  int diagnose_videos = 4;
  bool ablate_finetune = false;
};

struct AblationCell {
  MaskMode mode = MaskMode::kNone;
  int drop_count = 0;
  // 1.0 disables decay.
  double decay = 1.0;
};

struct AblationConfig {
  // Empty means the default grid (see default_ablation_cells).
  std::vector<AblationCell> cells;
  std::vector<std::uint64_t> seeds{1, 2, 3};
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  // Empty means <run dir>/manifest.jsonl.
  std::string manifest;
  DatasetConfig dataset;
  ModelConfig model;
  AugmentConfig augment;
  TrainConfig train;
  EvalConfig eval;
  AblationConfig ablation;
};

// Throws std::invalid_argument naming the offending key.
void validate(const ExperimentConfig& config);

ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::string& path);
std::string dump_config(const ExperimentConfig& config);
// Dotted-key override, e.g. ("train.drop_count", "8").
void set_config_value(ExperimentConfig& config, const std::string& key,
                      const std::string& value);
// Applies every assignment before validating, so related fields can change together.
void set_config_values(ExperimentConfig& config,
                       const std::vector<std::pair<std::string, std::string>>& assignments);
// Stable 64-bit FNV-1a of the canonical dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);
std::uint64_t fnv1a64(std::string_view bytes);

// Table-1/Table-2 style grid: baseline, random dropout, adversarial k sweep,
// and a decay sweep rescaled so each t keeps its t^65536 value at this
// queue size.
std::vector<AblationCell> default_ablation_cells(const ExperimentConfig& config);

}  // namespace advmoco
