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

#include "advmoco/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "advmoco/rng.hpp"

namespace advmoco {

namespace {

Volume clip_volume(const VideoClip& clip) {
  Volume v;
  v.frames = clip.frames;
  v.height = clip.height;
  v.width = clip.width;
  v.data = Eigen::Map<const Matrix>(clip.data.data(), static_cast<Eigen::Index>(clip.frames) * clip.height * clip.width,
                                    clip.channels);
  return v;
}

constexpr double kLayerNormEps = 1e-5;

void relu_in_place(Matrix& m) { m = m.cwiseMax(0.0); }

void fill_normal(std::span<double> values, double stddev, std::mt19937_64& rng) {
  for (double& v : values) v = stddev * standard_normal(rng);
}

void fill_uniform(std::span<double> values, double bound, std::mt19937_64& rng) {
  for (double& v : values) v = uniform(rng, -bound, bound);
}

// Runs conv(+layer norm)+ReLU stages, recording what backward needs. The
// norm standardizes each stage output over all positions and channels of
// the clip, without learned scale or shift.
Volume run_stages(const std::vector<Conv3dGeometry>& stages, const ParamSet& params, Volume x, bool normalize,
                  std::vector<Volume>* inputs, std::vector<Matrix>* columns, std::vector<Volume>* activations,
                  std::vector<Matrix>* normalized, std::vector<double>* inv_stds) {
  for (std::size_t s = 0; s < stages.size(); ++s) {
    Matrix cols;
    Volume y;
    conv3d_forward(stages[s], params.view(2 * s), params.view(2 * s + 1), x, cols, y);
    double inv_std = 1.0;
    if (normalize) {
      y.data.array() -= y.data.mean();
      inv_std = 1.0 / std::sqrt(y.data.squaredNorm() / static_cast<double>(y.data.size()) + kLayerNormEps);
      y.data *= inv_std;
      if (normalized != nullptr) normalized->push_back(y.data);
    }
    relu_in_place(y.data);
    if (inputs != nullptr) {
      inputs->push_back(std::move(x));
      columns->push_back(std::move(cols));
      activations->push_back(y);
      if (inv_stds != nullptr) inv_stds->push_back(inv_std);
    }
    x = std::move(y);
  }
  return x;
}

// d_act is the gradient on the last stage's post-ReLU output. Empty
// `normalized` means the stages ran without layer norm.
void backprop_stages(const std::vector<Conv3dGeometry>& stages, const ParamSet& params,
                     const std::vector<Volume>& inputs, const std::vector<Matrix>& columns,
                     const std::vector<Volume>& activations, const std::vector<Matrix>& normalized,
                     const std::vector<double>& inv_stds, Matrix d_act, Vector* d_params, Volume* d_input) {
  for (std::size_t s = stages.size(); s-- > 0;) {
    d_act.array() *= (activations[s].data.array() > 0.0).cast<double>();
    if (!normalized.empty()) {
      const Matrix& xhat = normalized[s];
      const double n = static_cast<double>(xhat.size());
      const double mean_d = d_act.sum() / n;
      const double mean_dx = d_act.cwiseProduct(xhat).sum() / n;
      d_act = (inv_stds[s] * (d_act.array() - mean_d - xhat.array() * mean_dx)).matrix();
    }
    const bool need_input = s > 0 || d_input != nullptr;
    Volume d_in;
    std::span<double> dw, db;
    if (d_params != nullptr) {
      dw = segment(*d_params, params.blocks()[2 * s]);
      db = segment(*d_params, params.blocks()[2 * s + 1]);
    }
    conv3d_backward(stages[s], params.view(2 * s), inputs[s], columns[s], d_act, dw, db,
                    need_input ? &d_in : nullptr);
    if (!need_input) break;
    if (s == 0) {
      *d_input = std::move(d_in);
    } else {
      d_act = std::move(d_in.data);
    }
  }
}

}  // namespace

EncoderArch EncoderArch::from(const ModelConfig& c) {
  return EncoderArch{c.clip_frames, c.input_size, c.input_size, c.channels, c.encoder_widths, c.embed_dim,
                     c.encoder_layer_norm};
}

Encoder::Encoder(EncoderArch arch) : arch_(std::move(arch)) {
  if (arch_.frames <= 0 || arch_.height <= 0 || arch_.width <= 0 || arch_.channels <= 0 ||
      arch_.embed_dim <= 0 || arch_.widths.empty())
    throw std::invalid_argument("Encoder: invalid architecture");
  int cin = arch_.channels;
  std::array<int, 3> dims{arch_.frames, arch_.height, arch_.width};
  for (int w : arch_.widths) {
    Conv3dGeometry g;
    g.in_channels = cin;
    g.out_channels = w;
    g.kernel = {3, 3, 3};
    g.stride = {2, 2, 2};
    g.padding = {1, 1, 1};
    dims = g.output_dims(dims[0], dims[1], dims[2]);
    stages_.push_back(g);
    cin = w;
  }
}

ParamSet Encoder::init_params(std::uint64_t seed) const {
  ParamSet p;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const auto& g = stages_[s];
    p.add(fmt::format("conv{}.weight", s), {g.patch_size(), g.out_channels});
    p.add(fmt::format("conv{}.bias", s), {g.out_channels});
  }
  const int last = arch_.widths.back();
  p.add("proj.weight", {last, arch_.embed_dim});
  p.add("proj.bias", {arch_.embed_dim});

  auto rng = make_rng(seed, Stream::kInitEncoder);
  for (std::size_t s = 0; s < stages_.size(); ++s)
    fill_normal(p.view(2 * s), std::sqrt(2.0 / stages_[s].patch_size()), rng);
  fill_normal(p.view(2 * stages_.size()), 1.0 / std::sqrt(static_cast<double>(last)), rng);
  return p;
}

void Encoder::check_clip(const VideoClip& clip) const {
  if (clip.frames != arch_.frames || clip.height != arch_.height || clip.width != arch_.width ||
      clip.channels != arch_.channels)
    throw std::invalid_argument(fmt::format("encoder expects {}x{}x{}x{} clips, got {}x{}x{}x{}",
                                            arch_.frames, arch_.height, arch_.width, arch_.channels,
                                            clip.frames, clip.height, clip.width, clip.channels));
}

void Encoder::check_params(const ParamSet& params) const {
  if (params.blocks().size() != 2 * stages_.size() + 2)
    throw std::invalid_argument("encoder parameter layout mismatch");
  for (std::size_t s = 0; s < stages_.size(); ++s)
    if (params.blocks()[2 * s].size != static_cast<std::size_t>(stages_[s].patch_size()) * stages_[s].out_channels)
      throw std::invalid_argument("encoder parameter layout mismatch");
}

Embedding Encoder::encode(const ParamSet& params, const VideoClip& clip, Tape* tape) const {
  check_clip(clip);
  check_params(params);
  Tape local;
  Tape& tp = tape != nullptr ? *tape : local;
  tp.inputs.clear();
  tp.columns.clear();
  tp.activations.clear();
  tp.normalized.clear();
  tp.inv_stds.clear();
  const bool record = tape != nullptr;
  const Volume top =
      run_stages(stages_, params, clip_volume(clip), arch_.layer_norm, record ? &tp.inputs : nullptr,
                 record ? &tp.columns : nullptr, record ? &tp.activations : nullptr,
                 record ? &tp.normalized : nullptr, record ? &tp.inv_stds : nullptr);

  const std::size_t s = stages_.size();
  tp.pooled = top.data.colwise().mean().transpose();
  Eigen::Map<const Matrix> w(params.view(2 * s).data(), arch_.widths.back(), arch_.embed_dim);
  Eigen::Map<const Vector> b(params.view(2 * s + 1).data(), arch_.embed_dim);
  Vector z = w.transpose() * tp.pooled + b;
  tp.norm = std::max(z.norm(), 1e-12);
  tp.embedding = z / tp.norm;
  return tp.embedding;
}

void Encoder::backward(const ParamSet& params, const Tape& tape, const Vector& d_embedding,
                       Vector* d_params, VideoClip* d_clip) const {
  if (tape.activations.size() != stages_.size())
    throw std::logic_error("Encoder::backward needs a recorded tape");
  if (d_params != nullptr && d_params->size() != static_cast<Eigen::Index>(params.size()))
    *d_params = Vector::Zero(params.size());
  const std::size_t s = stages_.size();
  const Vector& e = tape.embedding;
  const Vector dz = (d_embedding - e * e.dot(d_embedding)) / tape.norm;

  Eigen::Map<const Matrix> w(params.view(2 * s).data(), arch_.widths.back(), arch_.embed_dim);
  if (d_params != nullptr) {
    Eigen::Map<Matrix> dw(segment(*d_params, params.blocks()[2 * s]).data(), arch_.widths.back(), arch_.embed_dim);
    Eigen::Map<Vector> db(segment(*d_params, params.blocks()[2 * s + 1]).data(), arch_.embed_dim);
    dw.noalias() += tape.pooled * dz.transpose();
    db += dz;
  }
  const Vector d_pooled = w * dz;

  const Volume& top = tape.activations.back();
  Matrix d_act(top.positions(), top.channels());
  d_act.rowwise() = d_pooled.transpose() / static_cast<double>(top.positions());

  Volume d_input;
  backprop_stages(stages_, params, tape.inputs, tape.columns, tape.activations, tape.normalized, tape.inv_stds,
                  std::move(d_act), d_params, d_clip != nullptr ? &d_input : nullptr);
  if (d_clip != nullptr) {
    *d_clip = VideoClip(arch_.frames, arch_.height, arch_.width, arch_.channels);
    std::copy_n(d_input.data.data(), d_clip->data.size(), d_clip->data.begin());
  }
}

GeneratorArch GeneratorArch::from(const ModelConfig& c) {
  return GeneratorArch{c.clip_frames, c.input_size, c.input_size, c.channels, c.generator_widths,
                       c.generator_hidden};
}

Generator::Generator(GeneratorArch arch) : arch_(std::move(arch)) {
  if (arch_.frames <= 0 || arch_.height <= 0 || arch_.width <= 0 || arch_.channels <= 0 ||
      arch_.hidden <= 0 || arch_.widths.empty())
    throw std::invalid_argument("Generator: invalid architecture");
  int cin = arch_.channels;
  std::array<int, 3> dims{arch_.frames, arch_.height, arch_.width};
  for (int w : arch_.widths) {
    Conv3dGeometry g;
    g.in_channels = cin;
    g.out_channels = w;
    g.kernel = {1, 3, 3};
    g.stride = {1, 2, 2};
    g.padding = {0, 1, 1};
    dims = g.output_dims(dims[0], dims[1], dims[2]);
    stages_.push_back(g);
    cin = w;
  }
}

ParamSet Generator::init_params(std::uint64_t seed) const {
  ParamSet p;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const auto& g = stages_[s];
    p.add(fmt::format("conv{}.weight", s), {g.patch_size(), g.out_channels});
    p.add(fmt::format("conv{}.bias", s), {g.out_channels});
  }
  const int feat = arch_.widths.back();
  const int h = arch_.hidden;
  p.add("lstm.weight_ih", {4 * h, feat});
  p.add("lstm.weight_hh", {4 * h, h});
  p.add("lstm.bias", {4 * h});
  p.add("head.weight", {h});
  p.add("head.bias", {1});

  auto rng = make_rng(seed, Stream::kInitGenerator);
  for (std::size_t s = 0; s < stages_.size(); ++s)
    fill_normal(p.view(2 * s), std::sqrt(2.0 / stages_[s].patch_size()), rng);
  const std::size_t base = 2 * stages_.size();
  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  fill_uniform(p.view(base), bound, rng);
  fill_uniform(p.view(base + 1), bound, rng);
  auto bias = p.view(base + 2);
  std::fill(bias.begin() + h, bias.begin() + 2 * h, 1.0);
  fill_normal(p.view(base + 3), bound, rng);
  return p;
}

void Generator::check_clip(const VideoClip& clip) const {
  if (clip.frames != arch_.frames || clip.height != arch_.height || clip.width != arch_.width ||
      clip.channels != arch_.channels)
    throw std::invalid_argument(fmt::format("generator expects {}x{}x{}x{} clips, got {}x{}x{}x{}",
                                            arch_.frames, arch_.height, arch_.width, arch_.channels,
                                            clip.frames, clip.height, clip.width, clip.channels));
}

std::vector<double> Generator::score_frames(const ParamSet& params, const VideoClip& clip, Tape* tape) const {
  check_clip(clip);
  Tape local;
  Tape& tp = tape != nullptr ? *tape : local;
  tp.inputs.clear();
  tp.columns.clear();
  tp.activations.clear();
  const Volume top = run_stages(stages_, params, clip_volume(clip), false, &tp.inputs, &tp.columns, &tp.activations,
                                nullptr, nullptr);

  // Spatial mean per frame.
  const int per_frame = top.height * top.width;
  Matrix pooled(top.frames, top.channels());
  for (int t = 0; t < top.frames; ++t)
    pooled.row(t) = top.data.middleRows(static_cast<Eigen::Index>(t) * per_frame, per_frame).colwise().mean();

  const std::size_t base = 2 * stages_.size();
  lstm_forward(arch_.hidden, params.view(base), params.view(base + 1), params.view(base + 2), pooled, tp.lstm);
  Eigen::Map<const Vector> head(params.view(base + 3).data(), arch_.hidden);
  const double head_bias = params.view(base + 4)[0];
  std::vector<double> scores(top.frames);
  for (int t = 0; t < top.frames; ++t) scores[t] = tp.lstm.hiddens.row(t).dot(head.transpose()) + head_bias;
  return scores;
}

void Generator::backward(const ParamSet& params, const Tape& tape, std::span<const double> d_scores,
                         Vector& d_params) const {
  if (tape.activations.size() != stages_.size()) throw std::logic_error("Generator::backward needs a tape");
  if (static_cast<int>(d_scores.size()) != arch_.frames)
    throw std::invalid_argument("Generator::backward: score gradient length mismatch");
  if (d_params.size() != static_cast<Eigen::Index>(params.size())) d_params = Vector::Zero(params.size());
  const std::size_t base = 2 * stages_.size();
  const auto& blocks = params.blocks();
  Eigen::Map<const Vector> head(params.view(base + 3).data(), arch_.hidden);
  Eigen::Map<Vector> d_head(segment(d_params, blocks[base + 3]).data(), arch_.hidden);

  Matrix d_hidden(arch_.frames, arch_.hidden);
  double d_head_bias = 0.0;
  for (int t = 0; t < arch_.frames; ++t) {
    d_hidden.row(t) = d_scores[t] * head.transpose();
    d_head += d_scores[t] * tape.lstm.hiddens.row(t).transpose();
    d_head_bias += d_scores[t];
  }
  segment(d_params, blocks[base + 4])[0] += d_head_bias;

  Matrix d_pooled;
  lstm_backward(arch_.hidden, params.view(base), params.view(base + 1), tape.lstm, d_hidden,
                segment(d_params, blocks[base]), segment(d_params, blocks[base + 1]),
                segment(d_params, blocks[base + 2]), &d_pooled);

  const Volume& top = tape.activations.back();
  const int per_frame = top.height * top.width;
  Matrix d_act(top.positions(), top.channels());
  for (int t = 0; t < top.frames; ++t)
    d_act.middleRows(static_cast<Eigen::Index>(t) * per_frame, per_frame).rowwise() =
        d_pooled.row(t) / static_cast<double>(per_frame);
  backprop_stages(stages_, params, tape.inputs, tape.columns, tape.activations, {}, {}, std::move(d_act), &d_params,
                  nullptr);
}

ParamSet momentum_update(const ParamSet& key, const ParamSet& query, double m) {
  ParamSet out = key;
  momentum_update_in_place(out, query, m);
  return out;
}

void momentum_update_in_place(ParamSet& key, const ParamSet& query, double m) {
  if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("momentum_update: m must be in [0,1]");
  if (!key.same_layout(query)) throw std::invalid_argument("momentum_update: parameter shapes differ");
  auto& k = key.values();
  const auto& q = query.values();
  for (Eigen::Index i = 0; i < k.size(); ++i)
    if (k[i] != q[i]) k[i] = m * k[i] + (1.0 - m) * q[i];
}

int TemporalMask::drop_count() const {
  return static_cast<int>(std::count(keep.begin(), keep.end(), std::uint8_t{0}));
}

std::vector<int> TemporalMask::dropped() const {
  std::vector<int> out;
  for (int i = 0; i < length(); ++i)
    if (keep[i] == 0) out.push_back(i);
  return out;
}

TemporalMask TemporalMask::all_keep(int frames) {
  return TemporalMask{std::vector<std::uint8_t>(frames, 1)};
}

TemporalMask make_mask(std::span<const double> importance, int k) {
  const int frames = static_cast<int>(importance.size());
  if (k < 0 || k >= frames)
    throw std::invalid_argument(fmt::format("make_mask: k={} outside [0, {})", k, frames));
  for (double s : importance)
    if (std::isnan(s)) throw std::invalid_argument("make_mask: NaN importance score");
  std::vector<int> order(frames);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return importance[a] > importance[b]; });
  TemporalMask mask = TemporalMask::all_keep(frames);
  for (int i = 0; i < k; ++i) mask.keep[order[i]] = 0;
  return mask;
}

TemporalMask random_mask(int frames, int k, std::mt19937_64& rng) {
  if (k < 0 || k >= frames)
    throw std::invalid_argument(fmt::format("random_mask: k={} outside [0, {})", k, frames));
  std::vector<int> order(frames);
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(uniform_index(rng, frames - i));
    std::swap(order[i], order[j]);
  }
  TemporalMask mask = TemporalMask::all_keep(frames);
  for (int i = 0; i < k; ++i) mask.keep[order[i]] = 0;
  return mask;
}

VideoClip apply_mask(const VideoClip& clip, const TemporalMask& mask) {
  if (mask.length() != clip.frames)
    throw std::invalid_argument(fmt::format("apply_mask: mask length {} != clip frames {}", mask.length(), clip.frames));
  VideoClip out = clip;
  for (int t = 0; t < clip.frames; ++t)
    if (mask.keep[t] == 0) std::fill(out.frame(t).begin(), out.frame(t).end(), 0.0);
  return out;
}

QueryResult generate_query(const Generator& generator, const ParamSet& params, const VideoClip& clip, int k,
                           MaskMode mode, std::mt19937_64& rng) {
  QueryResult r;
  switch (mode) {
    case MaskMode::kNone:
      r.mask = TemporalMask::all_keep(clip.frames);
      r.query = clip;
      return r;
    case MaskMode::kRandom:
      r.mask = random_mask(clip.frames, k, rng);
      break;
    case MaskMode::kAdversarial:
      r.scores = generator.score_frames(params, clip);
      r.mask = make_mask(r.scores, k);
      break;
  }
  r.query = apply_mask(clip, r.mask);
  return r;
}

}  // namespace advmoco
