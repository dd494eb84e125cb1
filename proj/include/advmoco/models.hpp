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
#include <random>
#include <span>
#include <vector>

#include "advmoco/clipgen.hpp"
#include "advmoco/config.hpp"
#include "advmoco/nn.hpp"

namespace advmoco {

// Unit-L2-norm output of the encoder.
using Embedding = Vector;

struct EncoderArch {
  int frames = 16;
  int height = 32;
  int width = 32;
  int channels = 3;
  std::vector<int> widths{8, 16, 32};
  int embed_dim = 64;
  bool layer_norm = true;

  static EncoderArch from(const ModelConfig& config);
};

// 3x3x3 stride-2 conv stages (optionally layer-normalized) with ReLU, global
// average pool, linear projection, L2 normalization.
class Encoder {
 public:
  struct Tape {
    std::vector<Volume> inputs;
    std::vector<Matrix> columns;
    std::vector<Volume> activations;
    // Pre-ReLU layer-norm outputs and their inverse standard deviations.
    std::vector<Matrix> normalized;
    std::vector<double> inv_stds;
    Vector pooled;
    double norm = 0.0;
    Embedding embedding;
  };

  explicit Encoder(EncoderArch arch);

  const EncoderArch& arch() const { return arch_; }
  ParamSet init_params(std::uint64_t seed) const;
  void check_clip(const VideoClip& clip) const;
  void check_params(const ParamSet& params) const;

  Embedding encode(const ParamSet& params, const VideoClip& clip, Tape* tape = nullptr) const;

  // Accumulates d(embedding . d_embedding)/d(params) into d_params (if given;
  // resized to zeros when empty). When d_clip is given it receives the
  // gradient with respect to the input clip.
  void backward(const ParamSet& params, const Tape& tape, const Vector& d_embedding,
                Vector* d_params, VideoClip* d_clip = nullptr) const;

 private:
  EncoderArch arch_;
  std::vector<Conv3dGeometry> stages_;
};

struct GeneratorArch {
  int frames = 16;
  int height = 32;
  int width = 32;
  int channels = 3;
  std::vector<int> widths{8, 16};
  int hidden = 64;

  static GeneratorArch from(const ModelConfig& config);
};

// Per-frame 3x3 stride-2 convs, spatial average pool, one LSTM over time and
// a scalar head per step: the frame importance score.
class Generator {
 public:
  struct Tape {
    std::vector<Volume> inputs;
    std::vector<Matrix> columns;
    std::vector<Volume> activations;
    LstmTape lstm;
  };

  explicit Generator(GeneratorArch arch);

  const GeneratorArch& arch() const { return arch_; }
  ParamSet init_params(std::uint64_t seed) const;
  void check_clip(const VideoClip& clip) const;

  std::vector<double> score_frames(const ParamSet& params, const VideoClip& clip,
                                   Tape* tape = nullptr) const;
  void backward(const ParamSet& params, const Tape& tape, std::span<const double> d_scores,
                Vector& d_params) const;

 private:
  GeneratorArch arch_;
  std::vector<Conv3dGeometry> stages_;
};

// Theta_k <- m * theta_k + (1 - m) * theta_q, elementwise.
ParamSet momentum_update(const ParamSet& key, const ParamSet& query, double m);
void momentum_update_in_place(ParamSet& key, const ParamSet& query, double m);

struct TemporalMask {
  // 1 keeps a frame, 0 drops it.
  std::vector<std::uint8_t> keep;

  int length() const { return static_cast<int>(keep.size()); }
  int drop_count() const;
  std::vector<int> dropped() const;
  static TemporalMask all_keep(int frames);
  bool operator==(const TemporalMask&) const = default;
};

// Drops the k highest scores; equal scores drop the lower index first.
TemporalMask make_mask(std::span<const double> importance, int k);
TemporalMask random_mask(int frames, int k, std::mt19937_64& rng);
// Dropped frames are zero-filled; length is preserved.
VideoClip apply_mask(const VideoClip& clip, const TemporalMask& mask);

struct QueryResult {
  VideoClip query;
  TemporalMask mask;
  std::vector<double> scores;  // empty unless adversarial
};

QueryResult generate_query(const Generator& generator, const ParamSet& params,
                           const VideoClip& clip, int k, MaskMode mode, std::mt19937_64& rng);

}  // namespace advmoco
