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
#include <span>
#include <string>
#include <vector>

#include "advmoco/clipgen.hpp"
#include "advmoco/config.hpp"
#include "advmoco/models.hpp"

namespace advmoco {

// Linear classifier on encoder embeddings.
struct ProbeHead {
  Matrix weight;  // classes x dim
  Vector bias;

  int classes() const { return static_cast<int>(weight.rows()); }
  int dim() const { return static_cast<int>(weight.cols()); }
  static ProbeHead init(int dim, int classes, std::uint64_t seed);
  Vector logits(const Vector& feature) const;
  bool operator==(const ProbeHead& other) const;
};

Vector softmax(const Vector& logits);

// Shannon entropy in nats; 0 log 0 = 0. Throws unless p >= 0 and sums to 1 +- 1e-6.
double entropy(std::span<const double> p);

enum class FinetuneMode { kLinearProbe, kFinetune };

struct FinetuneOptions {
  FinetuneMode mode = FinetuneMode::kLinearProbe;
  int epochs = 100;
  double lr = 0.5;
  int batch = 32;
  double momentum = 0.9;
  std::uint64_t seed = 1;
};

struct FinetuneResult {
  ParamSet encoder;
  ProbeHead head;
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;
};

// Cross-entropy training of a fresh head. Linear-probe mode leaves the encoder
// untouched and trains on cached embeddings; finetune mode updates both.
FinetuneResult finetune(const Encoder& encoder, const ParamSet& params, std::span<const VideoClip> clips,
                        std::span<const int> labels, int classes, const FinetuneOptions& options);

FinetuneOptions probe_options(const ExperimentConfig& config);
FinetuneOptions finetune_options(const ExperimentConfig& config);

// round() of n evenly spaced points over [0, video_frames - clip_frames].
std::vector<int> clip_starts(int video_frames, int clip_frames, int n);

// Center-cropped subclips of every training video at clip_starts(..., per_video).
struct LabeledClips {
  std::vector<VideoClip> clips;
  std::vector<int> labels;
};
LabeledClips labeled_clips(const ExperimentConfig& config, const Dataset& dataset,
                           std::span<const ClipRecord> records, int per_video);

struct PredictionReport {
  std::vector<double> probabilities;
  int prediction = 0;
  double entropy = 0.0;
  std::optional<int> label;
  bool correct = false;
};

struct ClipEvaluator {
  const Encoder& encoder;
  const ParamSet& params;
  const ProbeHead& head;
  int clip_frames = 16;
  int crop_size = 32;
  int clips_per_video = 10;
};

PredictionReport predict_video(const ClipEvaluator& eval, const VideoClip& video);

struct OcclusionSpec {
  double frame_fraction = 0.5;  // centered span of the video's frames
  double area_fraction = 0.5;   // centered square covering this share of the frame
  double fill = kDefaultOcclusionFill;

  static OcclusionSpec from(const EvalConfig& config);
};

// Frames and region that `spec` covers on a video of the given shape.
std::vector<int> occluded_frames(const OcclusionSpec& spec, int frames);
Region occluded_region(const OcclusionSpec& spec, int height, int width);

struct OcclusionRow {
  int id = 0;
  PredictionReport clean;
  PredictionReport occluded;
};

struct OcclusionSummary {
  int videos = 0;
  double top1_clean = 0.0;
  double top1_occluded = 0.0;
  double mean_entropy_clean = 0.0;
  double mean_entropy_occluded = 0.0;
  double mean_entropy_delta = 0.0;
};

struct OcclusionReport {
  std::vector<OcclusionRow> rows;
  OcclusionSummary summary;
};

OcclusionReport occlusion_report(const ClipEvaluator& eval, const Dataset& dataset,
                                 std::span<const ClipRecord> records, const OcclusionSpec& spec);

// One row per video: id, label, prediction, correct, entropy_clean, entropy_occluded.
std::string report_tsv(const OcclusionReport& report);
std::string summary_json(const OcclusionSummary& summary);
OcclusionReport parse_report_tsv(const std::string& text);

// Per-frame heat maps from the last encoder stage: channel mean of |activation|,
// min-max normalized per temporal slot (all zeros when flat), bilinearly
// upsampled. Each input frame t shows slot floor(t * slots / frames).
struct AttentionMap {
  int frames = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;  // frames x height x width

  double at(int t, int y, int x) const { return values[(static_cast<std::size_t>(t) * height + y) * width + x]; }
};

AttentionMap attention_map(const Encoder& encoder, const ParamSet& params, const VideoClip& clip);
// The same reduction applied to an explicit last-stage volume.
AttentionMap attention_from_volume(const Volume& last_stage, int frames, int height, int width);

}  // namespace advmoco
