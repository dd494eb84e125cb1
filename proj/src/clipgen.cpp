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

#include "advmoco/clipgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "advmoco/rng.hpp"
#include "json.hpp"

namespace advmoco {

namespace {

using nlohmann::json;

constexpr int kSupersample = 4;

bool sprite_contains(SpriteShape shape, double size, double u, double v) {
  // (u, v) relative to the sprite's top-left corner.
  if (u < 0.0 || v < 0.0 || u > size || v > size) return false;
  const double half = size / 2.0;
  switch (shape) {
    case SpriteShape::kSquare: return true;
    case SpriteShape::kDisc: return (u - half) * (u - half) + (v - half) * (v - half) <= half * half;
    case SpriteShape::kCross: {
      const double arm = size / 6.0;
      return std::abs(u - half) <= arm || std::abs(v - half) <= arm;
    }
  }
  return false;
}

std::string_view shape_name(SpriteShape s) {
  switch (s) {
    case SpriteShape::kSquare: return "square";
    case SpriteShape::kDisc: return "disc";
    case SpriteShape::kCross: return "cross";
  }
  return "square";
}

SpriteShape parse_shape(const std::string& s) {
  if (s == "square") return SpriteShape::kSquare;
  if (s == "disc") return SpriteShape::kDisc;
  if (s == "cross") return SpriteShape::kCross;
  throw std::invalid_argument(fmt::format("manifest: unknown sprite shape '{}'", s));
}

json dataset_header(const Dataset& d) {
  const auto& c = d.config;
  return json{{"kind", "dataset"},
              {"version", 1},
              {"seed", d.seed},
              {"classes", c.classes},
              {"train_videos", c.train_videos},
              {"test_videos", c.test_videos},
              {"video_frames", c.video_frames},
              {"render_size", c.render_size},
              {"min_speed", c.min_speed},
              {"max_speed", c.max_speed},
              {"min_sprite", c.min_sprite},
              {"max_sprite", c.max_sprite},
              {"min_sprite_intensity", c.min_sprite_intensity},
              {"max_sprite_intensity", c.max_sprite_intensity},
              {"min_background_intensity", c.min_background_intensity},
              {"max_background_intensity", c.max_background_intensity},
              {"noise_std", c.noise_std},
              {"export_frames", c.export_frames}};
}

json clip_record(const ClipRecord& r, std::string_view split) {
  const auto& s = r.spec;
  return json{{"kind", "clip"},
              {"id", r.id},
              {"split", split},
              {"label", r.label},
              {"seed", s.seed},
              {"shape", shape_name(s.shape)},
              {"size", s.size},
              {"x", s.start_x},
              {"y", s.start_y},
              {"vx", s.velocity_x},
              {"vy", s.velocity_y},
              {"sprite", s.sprite_intensity},
              {"background", s.background_intensity},
              {"noise_std", s.noise_std},
              {"classes", s.direction_classes}};
}

}  // namespace

VideoClip::VideoClip(int t, int h, int w, int c, double fill)
    : frames(t), height(h), width(w), channels(c) {
  if (t <= 0 || h <= 0 || w <= 0 || c <= 0)
    throw std::invalid_argument(fmt::format("clip dims must be positive, got {}x{}x{}x{}", t, h, w, c));
  data.assign(static_cast<std::size_t>(t) * h * w * c, fill);
}

std::optional<int> direction_class(double vx, double vy, int classes) {
  if (classes <= 0) throw std::invalid_argument("direction_class: classes must be positive");
  if (vx == 0.0 && vy == 0.0) return std::nullopt;
  double angle = std::atan2(vy, vx);
  if (angle < 0.0) angle += 2.0 * std::numbers::pi;
  const double sector = 2.0 * std::numbers::pi / classes;
  return static_cast<int>(std::lround(angle / sector)) % classes;
}

double reflected_position(double start, double velocity, int t, double travel) {
  if (travel <= 0.0) return 0.0;
  const double period = 2.0 * travel;
  double p = std::fmod(start + velocity * t, period);
  if (p < 0.0) p += period;
  return p > travel ? period - p : p;
}

VideoClip synth_clip(const SpriteSceneSpec& spec, int frames, int height, int width) {
  if (frames <= 0 || height <= 0 || width <= 0)
    throw std::invalid_argument("synth_clip: dims must be positive");
  if (spec.size <= 0.0 || spec.size > std::min(height, width))
    throw std::invalid_argument("synth_clip: sprite size must fit inside the frame");
  VideoClip clip(frames, height, width, 3);
  clip.label = direction_class(spec.velocity_x, spec.velocity_y, spec.direction_classes);

  const double travel_x = width - spec.size;
  const double travel_y = height - spec.size;
  auto noise_rng = make_rng(spec.seed, Stream::kNoise);
  const double step = 1.0 / kSupersample;
  const double sub_area = step * step;

  std::vector<double> coverage(static_cast<std::size_t>(height) * width);
  for (int t = 0; t < frames; ++t) {
    const double px = reflected_position(spec.start_x, spec.velocity_x, t, travel_x);
    const double py = reflected_position(spec.start_y, spec.velocity_y, t, travel_y);
    std::fill(coverage.begin(), coverage.end(), 0.0);
    const int x0 = std::max(0, static_cast<int>(std::floor(px)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(px + spec.size)));
    const int y0 = std::max(0, static_cast<int>(std::floor(py)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(py + spec.size)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        double cov = 0.0;
        for (int sy = 0; sy < kSupersample; ++sy)
          for (int sx = 0; sx < kSupersample; ++sx) {
            const double u = x + (sx + 0.5) * step - px;
            const double v = y + (sy + 0.5) * step - py;
            if (sprite_contains(spec.shape, spec.size, u, v)) cov += sub_area;
          }
        coverage[static_cast<std::size_t>(y) * width + x] = cov;
      }
    }
    auto frame = clip.frame(t);
    for (int i = 0; i < height * width; ++i) {
      const double cov = coverage[i];
      for (int c = 0; c < 3; ++c) {
        double value = spec.background_intensity * (1.0 - cov) + spec.sprite_intensity * cov;
        if (spec.noise_std > 0.0) value += spec.noise_std * standard_normal(noise_rng);
        frame[static_cast<std::size_t>(i) * 3 + c] = std::clamp(value, 0.0, 1.0);
      }
    }
  }
  return clip;
}

VideoClip sample_subclip(const VideoClip& source, int frames, int start) {
  if (frames <= 0 || start < 0 || start + frames > source.frames)
    throw std::out_of_range(fmt::format("sample_subclip: [{}, {}) outside [0, {})", start,
                                        start + frames, source.frames));
  VideoClip out(frames, source.height, source.width, source.channels);
  out.label = source.label;
  std::copy_n(source.data.begin() + static_cast<std::ptrdiff_t>(start * source.frame_size()),
              out.data.size(), out.data.begin());
  return out;
}

AugmentParams draw_augment(std::mt19937_64& rng, const VideoClip& clip, int crop_size,
                           const AugmentConfig& config) {
  if (crop_size > clip.height || crop_size > clip.width)
    throw std::invalid_argument("draw_augment: crop larger than clip");
  AugmentParams p;
  p.seed = rng();
  auto local = std::mt19937_64(p.seed);
  p.crop_height = p.crop_width = crop_size;
  p.crop_y = static_cast<int>(uniform_index(local, clip.height - crop_size + 1));
  p.crop_x = static_cast<int>(uniform_index(local, clip.width - crop_size + 1));
  p.flip = uniform01(local) < config.flip_prob;
  p.jitter.resize(clip.channels);
  for (auto& j : p.jitter) j = uniform(local, -config.jitter, config.jitter);
  p.decolorize = uniform01(local) < config.decolorize_prob;
  return p;
}

AugmentParams center_view(const VideoClip& clip, int crop_size) {
  if (crop_size > clip.height || crop_size > clip.width)
    throw std::invalid_argument("center_view: crop larger than clip");
  AugmentParams p;
  p.crop_height = p.crop_width = crop_size;
  p.crop_y = (clip.height - crop_size) / 2;
  p.crop_x = (clip.width - crop_size) / 2;
  p.jitter.assign(clip.channels, 0.0);
  return p;
}

VideoClip augment(const VideoClip& clip, const AugmentParams& p) {
  if (p.crop_height <= 0 || p.crop_width <= 0 || p.crop_y < 0 || p.crop_x < 0 ||
      p.crop_y + p.crop_height > clip.height || p.crop_x + p.crop_width > clip.width)
    throw std::invalid_argument("augment: crop window outside clip");
  if (!p.jitter.empty() && static_cast<int>(p.jitter.size()) != clip.channels)
    throw std::invalid_argument("augment: jitter length must equal channel count");

  VideoClip out(clip.frames, p.crop_height, p.crop_width, clip.channels);
  out.label = clip.label;
  const int C = clip.channels;
  for (int t = 0; t < clip.frames; ++t)
    for (int y = 0; y < p.crop_height; ++y)
      for (int x = 0; x < p.crop_width; ++x) {
        const int sx = p.flip ? p.crop_x + p.crop_width - 1 - x : p.crop_x + x;
        double mean = 0.0;
        for (int c = 0; c < C; ++c) {
          double v = clip.at(t, p.crop_y + y, sx, c);
          if (!p.jitter.empty()) v = std::clamp(v + p.jitter[c], 0.0, 1.0);
          out.at(t, y, x, c) = v;
          mean += v;
        }
        if (p.decolorize) {
          mean /= C;
          for (int c = 0; c < C; ++c) out.at(t, y, x, c) = mean;
        }
      }
  return out;
}

VideoClip occlude(const VideoClip& clip, std::span<const int> frame_ids, const Region& region,
                  double fill) {
  if (region.y < 0 || region.x < 0 || region.height < 0 || region.width < 0 ||
      region.y + region.height > clip.height || region.x + region.width > clip.width)
    throw std::invalid_argument("occlude: region outside frame bounds");
  for (int t : frame_ids)
    if (t < 0 || t >= clip.frames) throw std::invalid_argument("occlude: frame id out of range");
  VideoClip out = clip;
  for (int t : frame_ids)
    for (int y = region.y; y < region.y + region.height; ++y)
      for (int x = region.x; x < region.x + region.width; ++x)
        for (int c = 0; c < clip.channels; ++c) out.at(t, y, x, c) = fill;
  return out;
}

VideoClip Dataset::render(const ClipRecord& record) const {
  VideoClip clip = synth_clip(record.spec, config.video_frames, config.render_size, config.render_size);
  clip.label = record.label;
  return clip;
}

Dataset build_dataset(const DatasetConfig& config, std::uint64_t seed) {
  Dataset d;
  d.config = config;
  d.seed = seed;
  const double two_pi = 2.0 * std::numbers::pi;
  auto make = [&](int split, int index) {
    auto rng = make_rng(seed, Stream::kDataset, {static_cast<std::uint64_t>(split),
                                                 static_cast<std::uint64_t>(index)});
    ClipRecord r;
    r.id = index;
    r.label = index % config.classes;
    auto& s = r.spec;
    s.direction_classes = config.classes;
    s.shape = static_cast<SpriteShape>(uniform_index(rng, 3));
    s.size = static_cast<double>(config.min_sprite +
                                 static_cast<int>(uniform_index(rng, config.max_sprite - config.min_sprite + 1)));
    const double speed = uniform(rng, config.min_speed, config.max_speed);
    const double angle = two_pi * r.label / config.classes;
    s.velocity_x = speed * std::cos(angle);
    s.velocity_y = speed * std::sin(angle);
    if (std::abs(s.velocity_x) < 1e-12) s.velocity_x = 0.0;
    if (std::abs(s.velocity_y) < 1e-12) s.velocity_y = 0.0;
    const double travel = config.render_size - s.size;
    s.start_x = uniform(rng, 0.0, travel);
    s.start_y = uniform(rng, 0.0, travel);
    s.sprite_intensity = uniform(rng, config.min_sprite_intensity, config.max_sprite_intensity);
    s.background_intensity = uniform(rng, config.min_background_intensity, config.max_background_intensity);
    s.noise_std = config.noise_std;
    s.seed = rng();
    return r;
  };
  for (int i = 0; i < config.train_videos; ++i) d.train.push_back(make(0, i));
  for (int i = 0; i < config.test_videos; ++i) d.test.push_back(make(1, i));
  return d;
}

std::string manifest_text(const Dataset& dataset) {
  std::string out = dataset_header(dataset).dump() + "\n";
  for (const auto& r : dataset.train) out += clip_record(r, "train").dump() + "\n";
  for (const auto& r : dataset.test) out += clip_record(r, "test").dump() + "\n";
  return out;
}

Dataset parse_manifest(const std::string& text) {
  Dataset d;
  bool have_header = false;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      const std::string kind = j.at("kind");
      if (kind == "dataset") {
        auto& c = d.config;
        d.seed = j.at("seed");
        c.classes = j.at("classes");
        c.train_videos = j.at("train_videos");
        c.test_videos = j.at("test_videos");
        c.video_frames = j.at("video_frames");
        c.render_size = j.at("render_size");
        c.min_speed = j.at("min_speed");
        c.max_speed = j.at("max_speed");
        c.min_sprite = j.at("min_sprite");
        c.max_sprite = j.at("max_sprite");
        c.min_sprite_intensity = j.at("min_sprite_intensity");
        c.max_sprite_intensity = j.at("max_sprite_intensity");
        c.min_background_intensity = j.at("min_background_intensity");
        c.max_background_intensity = j.at("max_background_intensity");
        c.noise_std = j.at("noise_std");
        c.export_frames = j.value("export_frames", 0);
        have_header = true;
      } else if (kind == "clip") {
        ClipRecord r;
        r.id = j.at("id");
        r.label = j.at("label");
        auto& s = r.spec;
        s.seed = j.at("seed");
        s.shape = parse_shape(j.at("shape"));
        s.size = j.at("size");
        s.start_x = j.at("x");
        s.start_y = j.at("y");
        s.velocity_x = j.at("vx");
        s.velocity_y = j.at("vy");
        s.sprite_intensity = j.at("sprite");
        s.background_intensity = j.at("background");
        s.noise_std = j.at("noise_std");
        s.direction_classes = j.at("classes");
        const std::string split = j.at("split");
        if (split == "train")
          d.train.push_back(r);
        else if (split == "test")
          d.test.push_back(r);
        else
          throw std::invalid_argument("unknown split " + split);
      } else {
        throw std::invalid_argument("unknown record kind " + kind);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("manifest line {}: {}", line_no, e.what()));
    }
  }
  if (!have_header) throw std::runtime_error("manifest: missing dataset header record");
  return d;
}

void write_manifest(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write manifest {}", path));
  out << manifest_text(dataset);
  if (!out) throw std::runtime_error(fmt::format("failed writing manifest {}", path));
}

Dataset read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open manifest {}", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str());
}

void export_frames(const VideoClip& clip, const std::string& directory) {
  std::filesystem::create_directories(directory);
  const bool color = clip.channels == 3;
  if (!color && clip.channels != 1) throw std::invalid_argument("export_frames: need 1 or 3 channels");
  for (int t = 0; t < clip.frames; ++t) {
    const auto path = std::filesystem::path(directory) /
                      fmt::format("frame_{:03d}.{}", t, color ? "ppm" : "pgm");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    out << (color ? "P6" : "P5") << "\n" << clip.width << " " << clip.height << "\n65535\n";
    for (double v : clip.frame(t)) {
      const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
      const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
      out.write(bytes, 2);
    }
  }
}

}  // namespace advmoco
