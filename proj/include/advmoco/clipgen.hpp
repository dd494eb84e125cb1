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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "advmoco/config.hpp"

namespace advmoco {

// Dense T x H x W x C clip, channels fastest. Values live in [0,1].
struct VideoClip {
  int frames = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;
  std::optional<int> label;

  VideoClip() = default;
  VideoClip(int t, int h, int w, int c, double fill = 0.0);

  std::size_t frame_size() const {
    return static_cast<std::size_t>(height) * width * channels;
  }
  std::size_t index(int t, int y, int x, int c) const {
    return ((static_cast<std::size_t>(t) * height + y) * width + x) * channels + c;
  }
  double& at(int t, int y, int x, int c) { return data[index(t, y, x, c)]; }
  double at(int t, int y, int x, int c) const { return data[index(t, y, x, c)]; }
  std::span<double> frame(int t) { return {data.data() + t * frame_size(), frame_size()}; }
  std::span<const double> frame(int t) const {
    return {data.data() + t * frame_size(), frame_size()};
  }
  bool same_shape(const VideoClip& other) const {
    return frames == other.frames && height == other.height && width == other.width &&
           channels == other.channels;
  }
  bool operator==(const VideoClip&) const = default;
};

enum class SpriteShape { kSquare = 0, kDisc = 1, kCross = 2 };

struct SpriteSceneSpec {
  SpriteShape shape = SpriteShape::kSquare;
  double size = 5.0;
  // Top-left corner at frame 0, in pixels.
  double start_x = 0.0;
  double start_y = 0.0;
  // Pixels per frame; motion reflects off the frame borders.
  double velocity_x = 0.0;
  double velocity_y = 0.0;
  // Gray levels, replicated over the color channels.
  double sprite_intensity = 1.0;
  double background_intensity = 0.0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  int direction_classes = 4;
};

// Nearest of `classes` canonical directions (class c points at angle 2*pi*c/classes,
// x right, y down). Empty for zero velocity.
std::optional<int> direction_class(double vx, double vy, int classes);

// Renders a 3-channel clip with 4x4 supersampled sprite coverage.
VideoClip synth_clip(const SpriteSceneSpec& spec, int frames, int height, int width);

// Sprite top-left coordinate along one axis at frame t (reflective borders).
double reflected_position(double start, double velocity, int t, double travel);

VideoClip sample_subclip(const VideoClip& source, int frames, int start);

struct AugmentParams {
  int crop_y = 0;
  int crop_x = 0;
  int crop_height = 0;
  int crop_width = 0;
  bool flip = false;
  // Additive per-channel shift, applied before clamping to [0,1].
  std::vector<double> jitter;
  bool decolorize = false;
  std::uint64_t seed = 0;
};

// One draw per clip: every frame gets the same spatial transform.
AugmentParams draw_augment(std::mt19937_64& rng, const VideoClip& clip, int crop_size,
                           const AugmentConfig& config);
AugmentParams center_view(const VideoClip& clip, int crop_size);
VideoClip augment(const VideoClip& clip, const AugmentParams& params);

struct Region {
  int y = 0;
  int x = 0;
  int height = 0;
  int width = 0;
};

inline constexpr double kDefaultOcclusionFill = 0.5;

VideoClip occlude(const VideoClip& clip, std::span<const int> frame_ids, const Region& region,
                  double fill = kDefaultOcclusionFill);

struct ClipRecord {
  int id = 0;
  int label = 0;
  SpriteSceneSpec spec;
};

struct Dataset {
  DatasetConfig config;
  std::uint64_t seed = 0;
  std::vector<ClipRecord> train;
  std::vector<ClipRecord> test;

  VideoClip render(const ClipRecord& record) const;
};

// Labels cycle through the classes so every split is balanced to within one.
Dataset build_dataset(const DatasetConfig& config, std::uint64_t seed);

std::string manifest_text(const Dataset& dataset);
Dataset parse_manifest(const std::string& text);
void write_manifest(const Dataset& dataset, const std::string& path);
Dataset read_manifest(const std::string& path);

// Lossless-at-16-bit per-frame image stack (binary PPM/PGM, maxval 65535).
void export_frames(const VideoClip& clip, const std::string& directory);

}  // namespace advmoco
