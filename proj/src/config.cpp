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

#include "advmoco/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace advmoco {

std::string_view to_string(MaskMode mode) {
  switch (mode) {
    case MaskMode::kNone: return "none";
    case MaskMode::kRandom: return "random";
    case MaskMode::kAdversarial: return "adversarial";
  }
  return "none";
}

MaskMode parse_mask_mode(std::string_view text) {
  if (text == "none") return MaskMode::kNone;
  if (text == "random") return MaskMode::kRandom;
  if (text == "adversarial") return MaskMode::kAdversarial;
  throw std::invalid_argument(fmt::format("unknown mask mode '{}'", text));
}

double TrainConfig::resolved_decay() const {
  return decay.value_or(std::pow(0.5, 1.0 / static_cast<double>(queue_size)));
}

namespace {

void require(bool ok, std::string_view key, std::string_view what) {
  if (!ok) throw std::invalid_argument(fmt::format("config: {} {}", key, what));
}

// Reads known keys from one mapping and rejects anything else.
class Reader {
 public:
  Reader(const YAML::Node& node, std::string prefix)
      : node_(node), prefix_(std::move(prefix)) {
    if (node_ && !node_.IsNull() && !node_.IsMap())
      throw std::invalid_argument(fmt::format("config: {} must be a mapping", prefix_));
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_ || node_.IsNull() || !node_[key]) return;
    try {
      out = node_[key].template as<T>();
    } catch (const YAML::Exception&) {
      throw std::invalid_argument(fmt::format("config: bad value for {}{}", prefix_, key));
    }
  }

  void get_mode(const std::string& key, MaskMode& out) {
    std::string text{to_string(out)};
    get(key, text);
    out = parse_mask_mode(text);
  }

  void get_optional(const std::string& key, std::optional<double>& out) {
    seen_.insert(key);
    if (!node_ || node_.IsNull() || !node_[key]) return;
    const std::string text = node_[key].as<std::string>();
    if (text == "auto") {
      out.reset();
      return;
    }
    try {
      out = node_[key].as<double>();
    } catch (const YAML::Exception&) {
      throw std::invalid_argument(fmt::format("config: bad value for {}{}", prefix_, key));
    }
  }

  YAML::Node child(const std::string& key) {
    seen_.insert(key);
    if (!node_ || node_.IsNull()) return YAML::Node();
    return node_[key];
  }

  void finish() const {
    if (!node_ || node_.IsNull()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.contains(key))
        throw std::invalid_argument(fmt::format("config: unknown key {}{}", prefix_, key));
    }
  }

 private:
  YAML::Node node_;
  std::string prefix_;
  std::set<std::string> seen_;
};

template <class T>
void emit_seq(YAML::Emitter& out, const char* key, const std::vector<T>& values) {
  out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& v : values) out << v;
  out << YAML::EndSeq;
}

}  // namespace

void validate(const ExperimentConfig& c) {
  const auto& d = c.dataset;
  require(d.classes >= 2, "dataset.classes", "must be >= 2");
  require(d.train_videos > 0, "dataset.train_videos", "must be positive");
  require(d.test_videos >= 0, "dataset.test_videos", "must be non-negative");
  require(d.video_frames >= c.model.clip_frames, "dataset.video_frames", "must be >= model.clip_frames");
  require(d.render_size >= c.model.input_size, "dataset.render_size", "must be >= model.input_size");
  require(d.min_speed >= 0.0 && d.max_speed >= d.min_speed, "dataset.min_speed/max_speed", "must satisfy 0 <= min <= max");
  require(d.min_sprite > 0 && d.max_sprite >= d.min_sprite && d.max_sprite < d.render_size,
          "dataset.min_sprite/max_sprite", "must satisfy 0 < min <= max < render_size");
  require(0.0 <= d.min_sprite_intensity && d.min_sprite_intensity <= d.max_sprite_intensity &&
              d.max_sprite_intensity <= 1.0,
          "dataset.min_sprite_intensity/max_sprite_intensity", "must satisfy 0 <= min <= max <= 1");
  require(0.0 <= d.min_background_intensity && d.min_background_intensity <= d.max_background_intensity &&
              d.max_background_intensity <= 1.0,
          "dataset.min_background_intensity/max_background_intensity", "must satisfy 0 <= min <= max <= 1");
  require(d.noise_std >= 0.0, "dataset.noise_std", "must be non-negative");
  require(d.export_frames >= 0, "dataset.export_frames", "must be non-negative");

  const auto& m = c.model;
  require(m.clip_frames > 0 && m.input_size > 0, "model.clip_frames/input_size", "must be positive");
  require(m.channels == 3, "model.channels", "must be 3 (rendered clips are RGB)");
  require(!m.encoder_widths.empty(), "model.encoder_widths", "must not be empty");
  for (int w : m.encoder_widths) require(w > 0, "model.encoder_widths", "must be positive");
  require(!m.generator_widths.empty(), "model.generator_widths", "must not be empty");
  for (int w : m.generator_widths) require(w > 0, "model.generator_widths", "must be positive");
  require(m.embed_dim > 0, "model.embed_dim", "must be positive");
  require(m.generator_hidden > 0, "model.generator_hidden", "must be positive");

  const auto& a = c.augment;
  require(a.jitter >= 0.0, "augment.jitter", "must be non-negative");
  require(a.decolorize_prob >= 0.0 && a.decolorize_prob <= 1.0, "augment.decolorize_prob", "must be in [0,1]");
  require(a.flip_prob >= 0.0 && a.flip_prob <= 1.0, "augment.flip_prob", "must be in [0,1]");

  const auto& t = c.train;
  require(t.temperature > 0.0, "train.temperature", "must be > 0");
  require(t.momentum >= 0.0 && t.momentum <= 1.0, "train.momentum", "must be in [0,1]");
  require(t.queue_size > 0, "train.queue_size", "must be positive");
  const double decay = t.resolved_decay();
  require(decay > 0.0 && decay <= 1.0, "train.decay", "must be in (0,1]");
  require(t.drop_count >= 0 && t.drop_count < m.clip_frames, "train.drop_count", "must be in [0, clip_frames)");
  require(t.lr_d > 0.0 && t.lr_g > 0.0, "train.lr_d/lr_g", "must be positive");
  require(t.sgd_momentum >= 0.0 && t.sgd_momentum < 1.0, "train.sgd_momentum", "must be in [0,1)");
  require(t.batch_size > 0, "train.batch_size", "must be positive");
  require(t.warmup_epochs >= 0 && t.adversarial_epochs >= 0, "train.warmup_epochs/adversarial_epochs", "must be non-negative");

  const auto& e = c.eval;
  require(e.probe_epochs >= 0 && e.probe_lr > 0.0 && e.probe_batch > 0, "eval.probe_*", "out of range");
  require(e.finetune_epochs >= 0 && e.finetune_lr > 0.0 && e.finetune_batch > 0, "eval.finetune_*", "out of range");
  require(e.eval_clips > 0, "eval.eval_clips", "must be positive");
  require(e.occlusion_frame_fraction >= 0.0 && e.occlusion_frame_fraction <= 1.0, "eval.occlusion_frame_fraction", "must be in [0,1]");
  require(e.occlusion_area_fraction >= 0.0 && e.occlusion_area_fraction <= 1.0, "eval.occlusion_area_fraction", "must be in [0,1]");
  require(e.occlusion_fill >= 0.0 && e.occlusion_fill <= 1.0, "eval.occlusion_fill", "must be in [0,1]");
  require(e.eval_videos >= 0 && e.diagnose_videos >= 0, "eval.eval_videos/diagnose_videos", "must be non-negative");

  for (const auto& cell : c.ablation.cells) {
    require(cell.drop_count >= 0 && cell.drop_count < m.clip_frames, "ablation.cells.k", "must be in [0, clip_frames)");
    require(cell.decay > 0.0 && cell.decay <= 1.0, "ablation.cells.t", "must be in (0,1]");
  }
}

ExperimentConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument(fmt::format("config: YAML parse error: {}", e.what()));
  }
  ExperimentConfig c;
  Reader top(root, "");
  top.get("seed", c.seed);
  top.get("manifest", c.manifest);

  Reader ds(top.child("dataset"), "dataset.");
  ds.get("classes", c.dataset.classes);
  ds.get("train_videos", c.dataset.train_videos);
  ds.get("test_videos", c.dataset.test_videos);
  ds.get("video_frames", c.dataset.video_frames);
  ds.get("render_size", c.dataset.render_size);
  ds.get("min_speed", c.dataset.min_speed);
  ds.get("max_speed", c.dataset.max_speed);
  ds.get("min_sprite", c.dataset.min_sprite);
  ds.get("max_sprite", c.dataset.max_sprite);
  ds.get("min_sprite_intensity", c.dataset.min_sprite_intensity);
  ds.get("max_sprite_intensity", c.dataset.max_sprite_intensity);
  ds.get("min_background_intensity", c.dataset.min_background_intensity);
  ds.get("max_background_intensity", c.dataset.max_background_intensity);
  ds.get("noise_std", c.dataset.noise_std);
  ds.get("export_frames", c.dataset.export_frames);
  ds.finish();

  Reader md(top.child("model"), "model.");
  md.get("clip_frames", c.model.clip_frames);
  md.get("input_size", c.model.input_size);
  md.get("channels", c.model.channels);
  md.get("encoder_widths", c.model.encoder_widths);
  md.get("embed_dim", c.model.embed_dim);
  md.get("encoder_layer_norm", c.model.encoder_layer_norm);
  md.get("generator_widths", c.model.generator_widths);
  md.get("generator_hidden", c.model.generator_hidden);
  md.finish();

  Reader au(top.child("augment"), "augment.");
  au.get("jitter", c.augment.jitter);
  au.get("decolorize_prob", c.augment.decolorize_prob);
  au.get("flip_prob", c.augment.flip_prob);
  au.finish();

  Reader tr(top.child("train"), "train.");
  tr.get("temperature", c.train.temperature);
  tr.get("momentum", c.train.momentum);
  tr.get("queue_size", c.train.queue_size);
  tr.get_optional("decay", c.train.decay);
  tr.get("decay_enabled", c.train.decay_enabled);
  tr.get("decay_in_warmup", c.train.decay_in_warmup);
  tr.get("drop_count", c.train.drop_count);
  tr.get_mode("mask_mode", c.train.mask_mode);
  tr.get("lr_d", c.train.lr_d);
  tr.get("lr_g", c.train.lr_g);
  tr.get("sgd_momentum", c.train.sgd_momentum);
  tr.get("batch_size", c.train.batch_size);
  tr.get("warmup_epochs", c.train.warmup_epochs);
  tr.get("adversarial_epochs", c.train.adversarial_epochs);
  tr.finish();

  Reader ev(top.child("eval"), "eval.");
  ev.get("probe_epochs", c.eval.probe_epochs);
  ev.get("probe_lr", c.eval.probe_lr);
  ev.get("probe_batch", c.eval.probe_batch);
  ev.get("finetune_epochs", c.eval.finetune_epochs);
  ev.get("finetune_lr", c.eval.finetune_lr);
  ev.get("finetune_batch", c.eval.finetune_batch);
  ev.get("eval_clips", c.eval.eval_clips);
  ev.get("occlusion_frame_fraction", c.eval.occlusion_frame_fraction);
  ev.get("occlusion_area_fraction", c.eval.occlusion_area_fraction);
  ev.get("occlusion_fill", c.eval.occlusion_fill);
  ev.get("eval_videos", c.eval.eval_videos);
  ev.get("diagnose_videos", c.eval.diagnose_videos);
  ev.get("ablate_finetune", c.eval.ablate_finetune);
  ev.finish();

  Reader ab(top.child("ablation"), "ablation.");
  ab.get("seeds", c.ablation.seeds);
  const YAML::Node cells = ab.child("cells");
  if (cells && !cells.IsNull()) {
    if (!cells.IsSequence()) throw std::invalid_argument("config: ablation.cells must be a list");
    for (const auto& item : cells) {
      AblationCell cell;
      Reader cr(item, "ablation.cells[].");
      cr.get_mode("mode", cell.mode);
      cr.get("k", cell.drop_count);
      cr.get("t", cell.decay);
      cr.finish();
      c.ablation.cells.push_back(cell);
    }
  }
  ab.finish();
  top.finish();

  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open config file {}", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

namespace {

// Shortest text that parses back to the same double.
std::string real(double v) { return fmt::format("{}", v); }

}  // namespace

std::string dump_config(const ExperimentConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "manifest" << YAML::Value << c.manifest;

  out << YAML::Key << "dataset" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "classes" << YAML::Value << c.dataset.classes;
  out << YAML::Key << "train_videos" << YAML::Value << c.dataset.train_videos;
  out << YAML::Key << "test_videos" << YAML::Value << c.dataset.test_videos;
  out << YAML::Key << "video_frames" << YAML::Value << c.dataset.video_frames;
  out << YAML::Key << "render_size" << YAML::Value << c.dataset.render_size;
  out << YAML::Key << "min_speed" << YAML::Value << real(c.dataset.min_speed);
  out << YAML::Key << "max_speed" << YAML::Value << real(c.dataset.max_speed);
  out << YAML::Key << "min_sprite" << YAML::Value << c.dataset.min_sprite;
  out << YAML::Key << "max_sprite" << YAML::Value << c.dataset.max_sprite;
  out << YAML::Key << "min_sprite_intensity" << YAML::Value << real(c.dataset.min_sprite_intensity);
  out << YAML::Key << "max_sprite_intensity" << YAML::Value << real(c.dataset.max_sprite_intensity);
  out << YAML::Key << "min_background_intensity" << YAML::Value << real(c.dataset.min_background_intensity);
  out << YAML::Key << "max_background_intensity" << YAML::Value << real(c.dataset.max_background_intensity);
  out << YAML::Key << "noise_std" << YAML::Value << real(c.dataset.noise_std);
  out << YAML::Key << "export_frames" << YAML::Value << c.dataset.export_frames;
  out << YAML::EndMap;

  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "clip_frames" << YAML::Value << c.model.clip_frames;
  out << YAML::Key << "input_size" << YAML::Value << c.model.input_size;
  out << YAML::Key << "channels" << YAML::Value << c.model.channels;
  emit_seq(out, "encoder_widths", c.model.encoder_widths);
  out << YAML::Key << "embed_dim" << YAML::Value << c.model.embed_dim;
  out << YAML::Key << "encoder_layer_norm" << YAML::Value << c.model.encoder_layer_norm;
  emit_seq(out, "generator_widths", c.model.generator_widths);
  out << YAML::Key << "generator_hidden" << YAML::Value << c.model.generator_hidden;
  out << YAML::EndMap;

  out << YAML::Key << "augment" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "jitter" << YAML::Value << real(c.augment.jitter);
  out << YAML::Key << "decolorize_prob" << YAML::Value << real(c.augment.decolorize_prob);
  out << YAML::Key << "flip_prob" << YAML::Value << real(c.augment.flip_prob);
  out << YAML::EndMap;

  out << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "temperature" << YAML::Value << real(c.train.temperature);
  out << YAML::Key << "momentum" << YAML::Value << real(c.train.momentum);
  out << YAML::Key << "queue_size" << YAML::Value << c.train.queue_size;
  if (c.train.decay)
    out << YAML::Key << "decay" << YAML::Value << real(*c.train.decay);
  else
    out << YAML::Key << "decay" << YAML::Value << "auto";
  out << YAML::Key << "decay_enabled" << YAML::Value << c.train.decay_enabled;
  out << YAML::Key << "decay_in_warmup" << YAML::Value << c.train.decay_in_warmup;
  out << YAML::Key << "drop_count" << YAML::Value << c.train.drop_count;
  out << YAML::Key << "mask_mode" << YAML::Value << std::string(to_string(c.train.mask_mode));
  out << YAML::Key << "lr_d" << YAML::Value << real(c.train.lr_d);
  out << YAML::Key << "lr_g" << YAML::Value << real(c.train.lr_g);
  out << YAML::Key << "sgd_momentum" << YAML::Value << real(c.train.sgd_momentum);
  out << YAML::Key << "batch_size" << YAML::Value << c.train.batch_size;
  out << YAML::Key << "warmup_epochs" << YAML::Value << c.train.warmup_epochs;
  out << YAML::Key << "adversarial_epochs" << YAML::Value << c.train.adversarial_epochs;
  out << YAML::EndMap;

  out << YAML::Key << "eval" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "probe_epochs" << YAML::Value << c.eval.probe_epochs;
  out << YAML::Key << "probe_lr" << YAML::Value << real(c.eval.probe_lr);
  out << YAML::Key << "probe_batch" << YAML::Value << c.eval.probe_batch;
  out << YAML::Key << "finetune_epochs" << YAML::Value << c.eval.finetune_epochs;
  out << YAML::Key << "finetune_lr" << YAML::Value << real(c.eval.finetune_lr);
  out << YAML::Key << "finetune_batch" << YAML::Value << c.eval.finetune_batch;
  out << YAML::Key << "eval_clips" << YAML::Value << c.eval.eval_clips;
  out << YAML::Key << "occlusion_frame_fraction" << YAML::Value << real(c.eval.occlusion_frame_fraction);
  out << YAML::Key << "occlusion_area_fraction" << YAML::Value << real(c.eval.occlusion_area_fraction);
  out << YAML::Key << "occlusion_fill" << YAML::Value << real(c.eval.occlusion_fill);
  out << YAML::Key << "eval_videos" << YAML::Value << c.eval.eval_videos;
  out << YAML::Key << "diagnose_videos" << YAML::Value << c.eval.diagnose_videos;
  out << YAML::Key << "ablate_finetune" << YAML::Value << c.eval.ablate_finetune;
  out << YAML::EndMap;

  out << YAML::Key << "ablation" << YAML::Value << YAML::BeginMap;
  emit_seq(out, "seeds", c.ablation.seeds);
  out << YAML::Key << "cells" << YAML::Value << YAML::BeginSeq;
  for (const auto& cell : c.ablation.cells) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "mode" << YAML::Value << std::string(to_string(cell.mode));
    out << YAML::Key << "k" << YAML::Value << cell.drop_count;
    out << YAML::Key << "t" << YAML::Value << real(cell.decay);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void set_config_values(ExperimentConfig& config,
                       const std::vector<std::pair<std::string, std::string>>& assignments) {
  YAML::Node root = YAML::Load(dump_config(config));
  for (const auto& [key, value] : assignments) {
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
    if (parts.empty()) throw std::invalid_argument("config: empty key");

    YAML::Node node = root;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      if (!node[parts[i]] || !node[parts[i]].IsMap())
        throw std::invalid_argument(fmt::format("config: unknown key {}", key));
      node.reset(node[parts[i]]);
    }
    if (!node.IsMap() || !node[parts.back()])
      throw std::invalid_argument(fmt::format("config: unknown key {}", key));
    YAML::Node parsed;
    try {
      parsed = YAML::Load(value);
    } catch (const YAML::Exception&) {
      throw std::invalid_argument(fmt::format("config: bad value for {}", key));
    }
    node[parts.back()] = parsed;
  }
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << root;
  config = parse_config(out.c_str());
}

void set_config_value(ExperimentConfig& config, const std::string& key,
                      const std::string& value) {
  set_config_values(config, {{key, value}});
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& config) {
  return fmt::format("{:016x}", fnv1a64(dump_config(config)));
}

std::vector<AblationCell> default_ablation_cells(const ExperimentConfig& config) {
  const int frames = config.model.clip_frames;
  const int base_k = std::max(1, frames / 4);
  const double queue = static_cast<double>(config.train.queue_size);
  // Keep t^65536 fixed when the queue is smaller than the reference 65536.
  auto rescale = [&](double t) { return std::exp(std::log(t) * 65536.0 / queue); };

  std::vector<AblationCell> cells;
  auto add = [&](MaskMode mode, int k, double t) {
    k = std::clamp(k, 0, frames - 1);
    for (const auto& c : cells)
      if (c.mode == mode && c.drop_count == k && c.decay == t) return;
    cells.push_back({mode, k, t});
  };
  add(MaskMode::kNone, base_k, 1.0);
  add(MaskMode::kRandom, base_k, 1.0);
  for (int num : {1, 2, 3, 4, 6}) add(MaskMode::kAdversarial, std::max(1, num * frames / 8), 1.0);
  for (double t : {0.999, 0.9999, 0.99999, 0.999999, 0.9999999})
    add(MaskMode::kAdversarial, base_k, rescale(t));
  add(MaskMode::kNone, base_k, rescale(0.99999));
  return cells;
}

}  // namespace advmoco
