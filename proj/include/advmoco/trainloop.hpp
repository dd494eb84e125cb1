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
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "advmoco/checkpoint.hpp"
#include "advmoco/clipgen.hpp"
#include "advmoco/config.hpp"
#include "advmoco/memqueue.hpp"
#include "advmoco/models.hpp"
#include "advmoco/optim.hpp"

namespace advmoco {

inline constexpr double kNotComputed = std::numeric_limits<double>::quiet_NaN();

struct StepRecord {
  std::int64_t step = 0;
  int epoch = 0;
  std::string phase;
  double infonce_loss = kNotComputed;  // plain InfoNCE on the step's batch
  double decayed_loss = kNotComputed;  // decay-weighted InfoNCE, only when it drives the update
  double generator_l1 = kNotComputed;  // generator L1 objective before its update
  int queue_len = 0;                   // after enqueue
  std::vector<int> mask_histogram;     // drop counts per frame index over the batch

  bool operator==(const StepRecord& other) const;
};

std::string metric_header();
std::string format_record(const StepRecord& record);
StepRecord parse_record(const std::string& line);

struct TrainState {
  ParamSet encoder_q;
  ParamSet encoder_k;
  ParamSet generator;
  SgdMomentum opt_d;
  SgdMomentum opt_g;
  DecayedQueue queue;
  int epoch = 0;            // completed epochs
  std::int64_t step = 0;    // completed optimization steps
};

class NanLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Augmented views of one batch; the query and key sides draw independently.
struct BatchViews {
  std::vector<VideoClip> query;
  std::vector<VideoClip> key;
};

class Trainer {
 public:
  explicit Trainer(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  const Encoder& encoder() const { return encoder_; }
  const Generator& generator() const { return generator_; }

  TrainState init_state() const;

  // Views for the batch of optimization step `step` (1-based).
  BatchViews make_views(std::span<const VideoClip> clips, std::int64_t step) const;

  // Encodes one batch with the momentum encoder and enqueues it as step 0.
  void prefill(TrainState& state, std::span<const VideoClip> clips) const;

  // Contrastive step without the generator.
  StepRecord warmup_step(TrainState& state, std::span<const VideoClip> clips) const;
  // Generator update (adversarial mode only), then encoder update on the
  // refreshed query, momentum update, enqueue.
  StepRecord adversarial_step(TrainState& state, std::span<const VideoClip> clips) const;

  // One ascent step on the generator's L1 objective with the encoder frozen.
  // Returns the objective evaluated before the update.
  double generator_update(TrainState& state, std::span<const VideoClip> query_views) const;
  // L1 objective for the current generator, no update.
  double generator_value(const TrainState& state, std::span<const VideoClip> query_views) const;

  // Masks the D-update would use at `step`.
  std::vector<TemporalMask> query_masks(const TrainState& state, std::span<const VideoClip> query_views,
                                        std::int64_t step) const;

  Checkpoint to_checkpoint(const TrainState& state) const;
  TrainState from_checkpoint(const Checkpoint& checkpoint) const;

 private:
  StepRecord discriminator_update(TrainState& state, const BatchViews& views,
                                  const std::vector<TemporalMask>& masks, bool use_decay) const;

  ExperimentConfig config_;
  Encoder encoder_;
  Generator generator_;
};

struct PretrainResult {
  TrainState state;
  std::vector<StepRecord> log;
};

struct PretrainOptions {
  // Empty: no files are written.
  std::string run_dir;
  bool resume = false;
  // Stop after this many total completed epochs (simulates an interruption).
  int stop_after_epoch = -1;
  std::function<void(const StepRecord&)> on_step;
  // Start from another run's state and log instead of initializing (ignored
  // when a checkpoint is resumed). The state must not be past the warmup
  // phase, and the source run must share every setting that warmup reads;
  // see warmup_signature. The queue adopts this run's decay.
  const PretrainResult* warm_start = nullptr;
};

// Training subclip for `record` in `epoch`: random start, seeded per clip.
VideoClip training_clip(const ExperimentConfig& config, const Dataset& dataset, const ClipRecord& record, int epoch);

PretrainResult run_pretrain(const ExperimentConfig& config, const Dataset& dataset, const PretrainOptions& options);

// Hash of the settings that the warmup phase depends on. Runs with equal
// signatures follow bit-identical trajectories through warmup.
std::string warmup_signature(const ExperimentConfig& config);

std::string checkpoint_path(const std::string& run_dir, int epoch);
// Highest-epoch checkpoint in run_dir/checkpoints, or empty.
std::string latest_checkpoint(const std::string& run_dir);

}  // namespace advmoco
