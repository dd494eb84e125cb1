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

#include "advmoco/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "advmoco/optim.hpp"
#include "advmoco/rng.hpp"
#include "json.hpp"

namespace advmoco {

namespace {

constexpr double kNormalizationTolerance = 1e-6;
constexpr double kProbeVarianceFloor = 1e-12;

// Cross-entropy of softmax(logits) against `label`; writes dL/dlogits.
double cross_entropy(const Vector& logits, int label, Vector& d_logits) {
  d_logits = softmax(logits);
  const double loss = -std::log(std::max(d_logits[label], 1e-300));
  d_logits[label] -= 1.0;
  return loss;
}

int argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<int> shuffled(int n, std::mt19937_64& rng) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[uniform_index(rng, i + 1)]);
  return order;
}

OcclusionSummary summarize(const std::vector<OcclusionRow>& rows) {
  OcclusionSummary s;
  s.videos = static_cast<int>(rows.size());
  for (const auto& row : rows) {
    s.top1_clean += row.clean.correct;
    s.top1_occluded += row.occluded.correct;
    s.mean_entropy_clean += row.clean.entropy;
    s.mean_entropy_occluded += row.occluded.entropy;
  }
  if (s.videos > 0) {
    s.top1_clean /= s.videos;
    s.top1_occluded /= s.videos;
    s.mean_entropy_clean /= s.videos;
    s.mean_entropy_occluded /= s.videos;
  }
  s.mean_entropy_delta = s.mean_entropy_occluded - s.mean_entropy_clean;
  return s;
}

}  // namespace

ProbeHead ProbeHead::init(int dim, int classes, std::uint64_t seed) {
  if (dim <= 0 || classes <= 1) throw std::invalid_argument("ProbeHead: need dim > 0 and at least 2 classes");
  auto rng = make_rng(seed, Stream::kProbe, {0});
  ProbeHead h{Matrix(classes, dim), Vector::Zero(classes)};
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Eigen::Index i = 0; i < h.weight.size(); ++i) h.weight.data()[i] = scale * standard_normal(rng);
  return h;
}

Vector ProbeHead::logits(const Vector& feature) const {
  if (feature.size() != weight.cols())
    throw std::invalid_argument(fmt::format("ProbeHead: feature dim {} != {}", feature.size(), weight.cols()));
  return weight * feature + bias;
}

bool ProbeHead::operator==(const ProbeHead& o) const {
  return weight.rows() == o.weight.rows() && weight.cols() == o.weight.cols() && weight == o.weight &&
         bias == o.bias;
}

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

double entropy(std::span<const double> p) {
  if (p.empty()) throw std::invalid_argument("entropy: empty probability vector");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw std::invalid_argument("entropy: negative or NaN probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kNormalizationTolerance)
    throw std::invalid_argument(fmt::format("entropy: probabilities sum to {}", sum));
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return std::clamp(h, 0.0, std::log(static_cast<double>(p.size())));
}

FinetuneResult finetune(const Encoder& encoder, const ParamSet& params, std::span<const VideoClip> clips,
                        std::span<const int> labels, int classes, const FinetuneOptions& options) {
  if (clips.size() != labels.size()) throw std::invalid_argument("finetune: clip/label count mismatch");
  if (clips.empty()) throw std::invalid_argument("finetune: no training clips");
  for (int l : labels)
    if (l < 0 || l >= classes)
      throw std::invalid_argument(fmt::format("finetune: label {} outside [0, {})", l, classes));
  if (options.epochs < 0 || options.batch <= 0 || !(options.lr > 0.0))
    throw std::invalid_argument("finetune: bad epochs/batch/lr");

  const int n = static_cast<int>(clips.size());
  const int dim = encoder.arch().embed_dim;
  const bool probe_only = options.mode == FinetuneMode::kLinearProbe;
  FinetuneResult r{params, ProbeHead::init(dim, classes, options.seed), {}, 0.0};
  SgdMomentum opt_encoder(options.lr, options.momentum);
  Matrix vel_w = Matrix::Zero(classes, dim);
  Vector vel_b = Vector::Zero(classes);

  // The probe trains on standardized features; the scaling is folded back
  // into the head afterwards so it still acts on raw embeddings.
  std::vector<Vector> raw, features;
  Vector mean = Vector::Zero(dim);
  Vector inv_std = Vector::Ones(dim);
  if (probe_only) {
    raw.reserve(clips.size());
    for (const auto& clip : clips) raw.push_back(encoder.encode(params, clip));
    for (const auto& f : raw) mean += f / n;
    Vector var = Vector::Zero(dim);
    for (const auto& f : raw) var += (f - mean).cwiseAbs2() / n;
    inv_std = (var.array() + kProbeVarianceFloor).rsqrt().matrix();
    features.reserve(raw.size());
    for (const auto& f : raw) features.push_back((f - mean).cwiseProduct(inv_std));
  }

  std::vector<Encoder::Tape> tapes(probe_only ? 0 : options.batch);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    auto rng = make_rng(options.seed, Stream::kProbe, {1, static_cast<std::uint64_t>(epoch)});
    const auto order = shuffled(n, rng);
    double total = 0.0;
    for (int begin = 0; begin < n; begin += options.batch) {
      const int end = std::min(n, begin + options.batch);
      const double inv = 1.0 / (end - begin);
      Matrix grad_w = Matrix::Zero(classes, dim);
      Vector grad_b = Vector::Zero(classes);
      Vector grad_enc;
      for (int i = begin; i < end; ++i) {
        const int idx = order[i];
        const Vector f = probe_only ? features[idx] : encoder.encode(r.encoder, clips[idx], &tapes[i - begin]);
        Vector d_logits;
        total += cross_entropy(r.head.logits(f), labels[idx], d_logits);
        d_logits *= inv;
        grad_w.noalias() += d_logits * f.transpose();
        grad_b += d_logits;
        if (!probe_only) encoder.backward(r.encoder, tapes[i - begin], r.head.weight.transpose() * d_logits, &grad_enc);
      }
      vel_w = options.momentum * vel_w + grad_w;
      vel_b = options.momentum * vel_b + grad_b;
      r.head.weight -= options.lr * vel_w;
      r.head.bias -= options.lr * vel_b;
      if (!probe_only) opt_encoder.step(r.encoder, grad_enc);
    }
    r.epoch_loss.push_back(total / n);
    if (!std::isfinite(total)) throw std::runtime_error(fmt::format("finetune: non-finite loss in epoch {}", epoch));
  }
  if (probe_only) {
    r.head.weight = r.head.weight * inv_std.asDiagonal();
    r.head.bias -= r.head.weight * mean;
  }

  int correct = 0;
  for (int i = 0; i < n; ++i) {
    const Vector f = probe_only ? raw[i] : encoder.encode(r.encoder, clips[i]);
    const Vector logits = r.head.logits(f);
    correct += argmax({logits.data(), static_cast<std::size_t>(logits.size())}) == labels[i];
  }
  r.train_accuracy = static_cast<double>(correct) / n;
  return r;
}

FinetuneOptions probe_options(const ExperimentConfig& config) {
  const auto& e = config.eval;
  return {FinetuneMode::kLinearProbe, e.probe_epochs, e.probe_lr, e.probe_batch, 0.9, config.seed};
}

FinetuneOptions finetune_options(const ExperimentConfig& config) {
  const auto& e = config.eval;
  return {FinetuneMode::kFinetune, e.finetune_epochs, e.finetune_lr, e.finetune_batch, 0.9, config.seed};
}

std::vector<int> clip_starts(int video_frames, int clip_frames, int n) {
  if (clip_frames <= 0 || n <= 0) throw std::invalid_argument("clip_starts: need positive clip length and count");
  if (video_frames < clip_frames)
    throw std::invalid_argument(fmt::format("video has {} frames, shorter than one {}-frame clip", video_frames,
                                            clip_frames));
  const int span = video_frames - clip_frames;
  std::vector<int> starts(n, 0);
  for (int i = 0; i < n && n > 1; ++i)
    starts[i] = static_cast<int>(std::lround(static_cast<double>(span) * i / (n - 1)));
  return starts;
}

LabeledClips labeled_clips(const ExperimentConfig& config, const Dataset& dataset,
                           std::span<const ClipRecord> records, int per_video) {
  LabeledClips out;
  const int sub = config.model.clip_frames;
  for (const auto& rec : records) {
    const VideoClip video = dataset.render(rec);
    for (int start : clip_starts(video.frames, sub, per_video)) {
      const VideoClip clip = sample_subclip(video, sub, start);
      out.clips.push_back(augment(clip, center_view(clip, config.model.input_size)));
      out.labels.push_back(rec.label);
    }
  }
  return out;
}

PredictionReport predict_video(const ClipEvaluator& ev, const VideoClip& video) {
  PredictionReport r;
  Vector mean = Vector::Zero(ev.head.classes());
  const auto starts = clip_starts(video.frames, ev.clip_frames, ev.clips_per_video);
  for (int start : starts) {
    const VideoClip clip = sample_subclip(video, ev.clip_frames, start);
    const Vector f = ev.encoder.encode(ev.params, augment(clip, center_view(clip, ev.crop_size)));
    mean += softmax(ev.head.logits(f));
  }
  mean /= static_cast<double>(starts.size());
  r.probabilities.assign(mean.data(), mean.data() + mean.size());
  r.prediction = argmax(r.probabilities);
  r.entropy = entropy(r.probabilities);
  r.label = video.label;
  r.correct = video.label && *video.label == r.prediction;
  return r;
}

OcclusionSpec OcclusionSpec::from(const EvalConfig& c) {
  return {c.occlusion_frame_fraction, c.occlusion_area_fraction, c.occlusion_fill};
}

std::vector<int> occluded_frames(const OcclusionSpec& spec, int frames) {
  if (spec.frame_fraction < 0.0 || spec.frame_fraction > 1.0)
    throw std::invalid_argument("occlusion frame fraction must lie in [0, 1]");
  const int count = static_cast<int>(std::lround(spec.frame_fraction * frames));
  const int first = (frames - count) / 2;
  std::vector<int> ids(count);
  std::iota(ids.begin(), ids.end(), first);
  return ids;
}

Region occluded_region(const OcclusionSpec& spec, int height, int width) {
  if (spec.area_fraction < 0.0 || spec.area_fraction > 1.0)
    throw std::invalid_argument("occlusion area fraction must lie in [0, 1]");
  const int side = std::min({height, width,
                             static_cast<int>(std::lround(std::sqrt(spec.area_fraction * height * width)))});
  return {(height - side) / 2, (width - side) / 2, side, side};
}

OcclusionReport occlusion_report(const ClipEvaluator& ev, const Dataset& dataset,
                                 std::span<const ClipRecord> records, const OcclusionSpec& spec) {
  if (!(spec.fill >= 0.0 && spec.fill <= 1.0)) throw std::invalid_argument("occlusion fill must lie in [0, 1]");
  OcclusionReport rep;
  for (const auto& rec : records) {
    const VideoClip video = dataset.render(rec);
    const auto frames = occluded_frames(spec, video.frames);
    const Region region = occluded_region(spec, video.height, video.width);
    OcclusionRow row{rec.id, predict_video(ev, video), {}};
    row.occluded = (frames.empty() || region.height == 0) ? row.clean
                                                          : predict_video(ev, occlude(video, frames, region, spec.fill));
    rep.rows.push_back(std::move(row));
  }
  std::sort(rep.rows.begin(), rep.rows.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  rep.summary = summarize(rep.rows);
  return rep;
}

std::string report_tsv(const OcclusionReport& report) {
  std::string out = "id\tlabel\tprediction\tcorrect\tentropy_clean\tentropy_occluded\tprediction_occluded\n";
  for (const auto& r : report.rows)
    out += fmt::format("{}\t{}\t{}\t{}\t{:.17g}\t{:.17g}\t{}\n", r.id, r.clean.label ? *r.clean.label : -1,
                       r.clean.prediction, r.clean.correct ? 1 : 0, r.clean.entropy, r.occluded.entropy,
                       r.occluded.prediction);
  return out;
}

std::string summary_json(const OcclusionSummary& s) {
  nlohmann::ordered_json j{{"videos", s.videos},
                           {"top1_clean", s.top1_clean},
                           {"top1_occluded", s.top1_occluded},
                           {"mean_entropy_clean", s.mean_entropy_clean},
                           {"mean_entropy_occluded", s.mean_entropy_occluded},
                           {"mean_entropy_delta", s.mean_entropy_delta}};
  return j.dump(2) + "\n";
}

OcclusionReport parse_report_tsv(const std::string& text) {
  OcclusionReport rep;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("id\t", 0) != 0) throw std::runtime_error("report: missing header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    OcclusionRow row;
    int label = 0, correct = 0;
    fields >> row.id >> label >> row.clean.prediction >> correct >> row.clean.entropy >> row.occluded.entropy >>
        row.occluded.prediction;
    if (!fields) throw std::runtime_error(fmt::format("report: malformed row '{}'", line));
    if (label >= 0) row.clean.label = row.occluded.label = label;
    row.clean.correct = correct != 0;
    row.occluded.correct = row.occluded.label && *row.occluded.label == row.occluded.prediction;
    rep.rows.push_back(row);
  }
  rep.summary = summarize(rep.rows);
  return rep;
}

AttentionMap attention_from_volume(const Volume& v, int frames, int height, int width) {
  if (v.positions() != v.data.rows() || v.positions() == 0) throw std::invalid_argument("attention: bad volume");
  AttentionMap m{frames, height, width, std::vector<double>(static_cast<std::size_t>(frames) * height * width)};
  const Eigen::VectorXd energy = v.data.cwiseAbs().rowwise().mean();
  const int hw = v.height * v.width;
  for (int t = 0; t < frames; ++t) {
    const int slot = static_cast<int>(static_cast<long long>(t) * v.frames / frames);
    const auto e = energy.segment(static_cast<Eigen::Index>(slot) * hw, hw);
    const double lo = e.minCoeff(), hi = e.maxCoeff();
    for (int y = 0; y < height; ++y) {
      // Align pixel centers; clamp at the borders.
      const double sy = std::clamp((y + 0.5) * v.height / height - 0.5, 0.0, v.height - 1.0);
      const int y0 = static_cast<int>(sy), y1 = std::min(y0 + 1, v.height - 1);
      const double fy = sy - y0;
      for (int x = 0; x < width; ++x) {
        const double sx = std::clamp((x + 0.5) * v.width / width - 0.5, 0.0, v.width - 1.0);
        const int x0 = static_cast<int>(sx), x1 = std::min(x0 + 1, v.width - 1);
        const double fx = sx - x0;
        double val = 0.0;
        if (hi > lo) {
          auto n = [&](int yy, int xx) { return (e[yy * v.width + xx] - lo) / (hi - lo); };
          val = (1 - fy) * ((1 - fx) * n(y0, x0) + fx * n(y0, x1)) + fy * ((1 - fx) * n(y1, x0) + fx * n(y1, x1));
        }
        m.values[(static_cast<std::size_t>(t) * height + y) * width + x] = std::clamp(val, 0.0, 1.0);
      }
    }
  }
  return m;
}

AttentionMap attention_map(const Encoder& encoder, const ParamSet& params, const VideoClip& clip) {
  Encoder::Tape tape;
  encoder.encode(params, clip, &tape);
  return attention_from_volume(tape.activations.back(), clip.frames, clip.height, clip.width);
}

}  // namespace advmoco
