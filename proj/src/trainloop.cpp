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

#include "advmoco/trainloop.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include <fmt/format.h>

#include "advmoco/losses.hpp"
#include "advmoco/rng.hpp"
#include "json.hpp"

namespace advmoco {

namespace fs = std::filesystem;

namespace {

bool same_double(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

std::string format_double(double v) { return std::isnan(v) ? "" : fmt::format("{:.17g}", v); }

double parse_double(const std::string& s) { return s.empty() ? kNotComputed : std::stod(s); }

std::vector<int> epoch_order(std::uint64_t seed, int epoch, int count) {
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed, Stream::kShuffle, {static_cast<std::uint64_t>(epoch)});
  for (int i = count - 1; i > 0; --i) std::swap(order[i], order[uniform_index(rng, i + 1)]);
  return order;
}

bool all_keep(const TemporalMask& m) {
  return std::all_of(m.keep.begin(), m.keep.end(), [](std::uint8_t k) { return k != 0; });
}

}  // namespace

bool StepRecord::operator==(const StepRecord& o) const {
  return step == o.step && epoch == o.epoch && phase == o.phase && same_double(infonce_loss, o.infonce_loss) &&
         same_double(decayed_loss, o.decayed_loss) && same_double(generator_l1, o.generator_l1) && queue_len == o.queue_len &&
         mask_histogram == o.mask_histogram;
}

std::string metric_header() { return "step,epoch,phase,infonce_loss,decayed_loss,generator_l1,queue_len,mask_histogram"; }

std::string format_record(const StepRecord& r) {
  std::string hist;
  for (std::size_t i = 0; i < r.mask_histogram.size(); ++i) hist += (i ? "|" : "") + std::to_string(r.mask_histogram[i]);
  return fmt::format("{},{},{},{},{},{},{},{}", r.step, r.epoch, r.phase, format_double(r.infonce_loss),
                     format_double(r.decayed_loss), format_double(r.generator_l1), r.queue_len, hist);
}

StepRecord parse_record(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  for (std::string item; std::getline(ss, item, ',');) f.push_back(item);
  if (!line.empty() && line.back() == ',') f.emplace_back();
  if (f.size() != 8) throw std::runtime_error(fmt::format("metric log: malformed line '{}'", line));
  StepRecord r;
  r.step = std::stoll(f[0]);
  r.epoch = std::stoi(f[1]);
  r.phase = f[2];
  r.infonce_loss = parse_double(f[3]);
  r.decayed_loss = parse_double(f[4]);
  r.generator_l1 = parse_double(f[5]);
  r.queue_len = std::stoi(f[6]);
  std::stringstream hs(f[7]);
  for (std::string item; std::getline(hs, item, '|');) r.mask_histogram.push_back(std::stoi(item));
  return r;
}

Trainer::Trainer(ExperimentConfig config)
    : config_((validate(config), std::move(config))),
      encoder_(EncoderArch::from(config_.model)),
      generator_(GeneratorArch::from(config_.model)) {}

TrainState Trainer::init_state() const {
  const auto& t = config_.train;
  ParamSet q = encoder_.init_params(config_.seed);
  ParamSet k = q;
  return TrainState{std::move(q),
                    std::move(k),
                    generator_.init_params(config_.seed),
                    SgdMomentum(t.lr_d, t.sgd_momentum),
                    SgdMomentum(t.lr_g, t.sgd_momentum),
                    DecayedQueue(t.queue_size, config_.model.embed_dim, t.resolved_decay()),
                    0,
                    0};
}

BatchViews Trainer::make_views(std::span<const VideoClip> clips, std::int64_t step) const {
  BatchViews v;
  const int size = config_.model.input_size;
  for (std::size_t b = 0; b < clips.size(); ++b) {
    auto rq = make_rng(config_.seed, Stream::kQueryView, {static_cast<std::uint64_t>(step), b});
    auto rk = make_rng(config_.seed, Stream::kKeyView, {static_cast<std::uint64_t>(step), b});
    v.query.push_back(augment(clips[b], draw_augment(rq, clips[b], size, config_.augment)));
    v.key.push_back(augment(clips[b], draw_augment(rk, clips[b], size, config_.augment)));
  }
  return v;
}

void Trainer::prefill(TrainState& state, std::span<const VideoClip> clips) const {
  const int size = config_.model.input_size;
  Matrix keys(static_cast<Eigen::Index>(clips.size()), config_.model.embed_dim);
  for (std::size_t b = 0; b < clips.size(); ++b) {
    auto rng = make_rng(config_.seed, Stream::kPrefill, {b});
    keys.row(static_cast<Eigen::Index>(b)) =
        encoder_.encode(state.encoder_k, augment(clips[b], draw_augment(rng, clips[b], size, config_.augment)))
            .transpose();
  }
  state.queue.enqueue_batch(keys, 0);
}

std::vector<TemporalMask> Trainer::query_masks(const TrainState& state, std::span<const VideoClip> query_views,
                                               std::int64_t step) const {
  const int k = config_.train.drop_count;
  std::vector<TemporalMask> masks;
  for (std::size_t b = 0; b < query_views.size(); ++b) {
    const auto& view = query_views[b];
    switch (config_.train.mask_mode) {
      case MaskMode::kNone: masks.push_back(TemporalMask::all_keep(view.frames)); break;
      case MaskMode::kRandom: {
        auto rng = make_rng(config_.seed, Stream::kRandomMask, {static_cast<std::uint64_t>(step), b});
        masks.push_back(random_mask(view.frames, k, rng));
        break;
      }
      case MaskMode::kAdversarial:
        masks.push_back(make_mask(generator_.score_frames(state.generator, view), k));
        break;
    }
  }
  return masks;
}

StepRecord Trainer::discriminator_update(TrainState& state, const BatchViews& views,
                                         const std::vector<TemporalMask>& masks, bool use_decay) const {
  if (state.queue.empty()) throw std::logic_error("contrastive step needs a non-empty key queue");
  const auto B = static_cast<Eigen::Index>(views.query.size());
  const int d = config_.model.embed_dim;
  const std::int64_t step = state.step + 1;

  Matrix queries(B, d);
  Matrix keys(B, d);
  std::vector<Encoder::Tape> tapes(views.query.size());
  StepRecord rec;
  rec.mask_histogram.assign(config_.model.clip_frames, 0);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& view = views.query[b];
    const auto& mask = masks[b];
    for (int t : mask.dropped()) ++rec.mask_histogram[t];
    if (all_keep(mask)) {
      queries.row(b) = encoder_.encode(state.encoder_q, view, &tapes[b]).transpose();
    } else {
      queries.row(b) = encoder_.encode(state.encoder_q, apply_mask(view, mask), &tapes[b]).transpose();
    }
    keys.row(b) = encoder_.encode(state.encoder_k, views.key[b]).transpose();
  }

  // A diverged encoder can also yield zero vectors (NaN swallowed by ReLU).
  const auto unit = [](const Matrix& m) { return ((m.rowwise().norm().array() - 1.0).abs() <= 1e-6).all(); };
  if (!queries.allFinite() || !keys.allFinite() || !unit(queries) || !unit(keys))
    throw NanLossError(fmt::format("non-finite or degenerate embedding at step {}", step));

  const QueueSnapshot snap = state.queue.snapshot();
  const Vector ones = Vector::Ones(snap.keys.rows());
  const double tau = config_.train.temperature;
  LossResult plain = infonce({queries, keys, snap.keys, ones, tau});
  LossResult decayed{kNotComputed, {}};
  if (use_decay) decayed = decayed_infonce({queries, keys, snap.keys, snap.weights, tau});
  const LossResult& chosen = use_decay ? decayed : plain;
  if (!std::isfinite(chosen.value) || !std::isfinite(plain.value))
    throw NanLossError(fmt::format("non-finite contrastive loss at step {} (infonce={}, decayed={})", step, plain.value, decayed.value));

  Vector grad = Vector::Zero(state.encoder_q.size());
  for (Eigen::Index b = 0; b < B; ++b)
    encoder_.backward(state.encoder_q, tapes[b], chosen.grad_queries.row(b).transpose(), &grad);
  if (!grad.allFinite()) throw NanLossError(fmt::format("non-finite encoder gradient at step {}", step));

  state.opt_d.step(state.encoder_q, grad);
  momentum_update_in_place(state.encoder_k, state.encoder_q, config_.train.momentum);
  state.queue.enqueue_batch(keys, step);
  state.step = step;

  rec.step = step;
  rec.epoch = state.epoch;
  rec.infonce_loss = plain.value;
  rec.decayed_loss = decayed.value;
  rec.queue_len = state.queue.size();
  return rec;
}

StepRecord Trainer::warmup_step(TrainState& state, std::span<const VideoClip> clips) const {
  const std::int64_t step = state.step + 1;
  const BatchViews views = make_views(clips, step);
  std::vector<TemporalMask> masks(clips.size(), TemporalMask::all_keep(config_.model.clip_frames));
  const bool use_decay = config_.train.decay_enabled && config_.train.decay_in_warmup;
  StepRecord rec = discriminator_update(state, views, masks, use_decay);
  rec.phase = "warmup";
  return rec;
}

StepRecord Trainer::adversarial_step(TrainState& state, std::span<const VideoClip> clips) const {
  const std::int64_t step = state.step + 1;
  const BatchViews views = make_views(clips, step);
  double adv = kNotComputed;
  if (config_.train.mask_mode == MaskMode::kAdversarial) adv = generator_update(state, views.query);
  // The encoder defends against the generator's latest masks.
  const auto masks = query_masks(state, views.query, step);
  StepRecord rec = discriminator_update(state, views, masks, config_.train.decay_enabled);
  rec.phase = "adversarial";
  rec.generator_l1 = adv;
  return rec;
}

double Trainer::generator_value(const TrainState& state, std::span<const VideoClip> query_views) const {
  const auto B = static_cast<Eigen::Index>(query_views.size());
  const int d = config_.model.embed_dim;
  Matrix dropped(B, d), full(B, d);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& view = query_views[b];
    const auto mask = make_mask(generator_.score_frames(state.generator, view), config_.train.drop_count);
    dropped.row(b) = encoder_.encode(state.encoder_q, apply_mask(view, mask)).transpose();
    full.row(b) = encoder_.encode(state.encoder_q, view).transpose();
  }
  return generator_objective(dropped, full).value;
}

double Trainer::generator_update(TrainState& state, std::span<const VideoClip> query_views) const {
  const auto B = static_cast<Eigen::Index>(query_views.size());
  const int d = config_.model.embed_dim;
  const int k = config_.train.drop_count;
  Matrix dropped(B, d), full(B, d);
  std::vector<Generator::Tape> gen_tapes(query_views.size());
  std::vector<Encoder::Tape> enc_tapes(query_views.size());
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& view = query_views[b];
    const auto scores = generator_.score_frames(state.generator, view, &gen_tapes[b]);
    const auto mask = make_mask(scores, k);
    dropped.row(b) = encoder_.encode(state.encoder_q, apply_mask(view, mask), &enc_tapes[b]).transpose();
    full.row(b) = encoder_.encode(state.encoder_q, view).transpose();
  }
  const LossResult objective = generator_objective(dropped, full);
  if (!std::isfinite(objective.value))
    throw NanLossError(fmt::format("non-finite generator objective at step {}", state.step + 1));

  // Straight-through: the hard keep mask passes the score through identity,
  // so dL/dscore_t = dL/dkeep_t. The generator minimizes -L.
  Vector grad = Vector::Zero(state.generator.size());
  std::vector<double> d_scores(config_.model.clip_frames);
  for (Eigen::Index b = 0; b < B; ++b) {
    VideoClip d_input;
    encoder_.backward(state.encoder_q, enc_tapes[b], objective.grad_queries.row(b).transpose(), nullptr, &d_input);
    const auto& view = query_views[b];
    for (int t = 0; t < view.frames; ++t) {
      const auto g = d_input.frame(t);
      const auto x = view.frame(t);
      double d_keep = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) d_keep += g[i] * x[i];
      d_scores[t] = -d_keep;
    }
    generator_.backward(state.generator, gen_tapes[b], d_scores, grad);
  }
  if (!grad.allFinite()) throw NanLossError("non-finite generator gradient");
  state.opt_g.step(state.generator, grad);
  return objective.value;
}

Checkpoint Trainer::to_checkpoint(const TrainState& s) const {
  Checkpoint c;
  c.put_string("config", dump_config(config_));
  c.put_params("encoder_q", s.encoder_q);
  c.put_params("encoder_k", s.encoder_k);
  c.put_params("generator", s.generator);
  c.put_vector("opt_d.velocity", s.opt_d.velocity());
  c.put_vector("opt_g.velocity", s.opt_g.velocity());
  Matrix keys(0, s.queue.dim());
  if (!s.queue.empty()) keys = s.queue.snapshot().keys;
  c.put_matrix("queue.keys", keys);
  c.put_ints("queue.steps", s.queue.steps());
  c.put_int("queue.capacity", s.queue.capacity());
  c.put_doubles("queue.decay", {1}, {s.queue.decay()});
  c.put_int("epoch", s.epoch);
  c.put_int("step", s.step);
  c.put_ints("rng.seed", {static_cast<std::int64_t>(config_.seed)});
  return c;
}

TrainState Trainer::from_checkpoint(const Checkpoint& c) const {
  TrainState s = init_state();
  c.get_params("encoder_q", s.encoder_q);
  c.get_params("encoder_k", s.encoder_k);
  c.get_params("generator", s.generator);
  s.opt_d.velocity() = c.vector("opt_d.velocity");
  s.opt_g.velocity() = c.vector("opt_g.velocity");
  if (c.integer("queue.capacity") != s.queue.capacity() || c.doubles("queue.decay").values.at(0) != s.queue.decay())
    throw std::runtime_error("checkpoint queue settings do not match the config");
  s.queue.restore(c.matrix("queue.keys"), c.ints("queue.steps"));
  s.epoch = static_cast<int>(c.integer("epoch"));
  s.step = c.integer("step");
  if (static_cast<std::uint64_t>(c.ints("rng.seed").at(0)) != config_.seed)
    throw std::runtime_error("checkpoint seed does not match the config");
  return s;
}

VideoClip training_clip(const ExperimentConfig& config, const Dataset& dataset, const ClipRecord& record, int epoch) {
  const VideoClip video = dataset.render(record);
  const int starts = video.frames - config.model.clip_frames + 1;
  auto rng = make_rng(config.seed, Stream::kSubclip,
                      {static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(record.id)});
  return sample_subclip(video, config.model.clip_frames, static_cast<int>(uniform_index(rng, starts)));
}

std::string warmup_signature(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  auto& t = c.train;
  const bool decay_matters = t.decay_enabled && t.decay_in_warmup;
  t.mask_mode = MaskMode::kNone;
  t.drop_count = 0;
  t.adversarial_epochs = 0;
  if (!decay_matters) {
    t.decay = 1.0;
    t.decay_enabled = false;
  }
  c.eval = EvalConfig{};
  c.ablation = AblationConfig{};
  return config_hash(c);
}

std::string checkpoint_path(const std::string& run_dir, int epoch) {
  return (fs::path(run_dir) / "checkpoints" / fmt::format("epoch_{:04d}.ckpt", epoch)).string();
}

std::string latest_checkpoint(const std::string& run_dir) {
  const fs::path dir = fs::path(run_dir) / "checkpoints";
  if (!fs::exists(dir)) return {};
  static const std::regex pattern(R"(epoch_(\d{4})\.ckpt)");
  int best = -1;
  std::string best_path;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern) && std::stoi(m[1]) > best) {
      best = std::stoi(m[1]);
      best_path = entry.path().string();
    }
  }
  return best_path;
}

PretrainResult run_pretrain(const ExperimentConfig& config, const Dataset& dataset, const PretrainOptions& options) {
  if (dataset.train.empty()) throw std::invalid_argument("run_pretrain: dataset has no training clips");
  if (dataset.config.video_frames < config.model.clip_frames)
    throw std::invalid_argument("run_pretrain: videos are shorter than the training clip length");
  Trainer trainer(config);
  PretrainResult result{trainer.init_state(), {}};
  TrainState& state = result.state;
  const bool write = !options.run_dir.empty();
  const fs::path metrics_path = fs::path(options.run_dir) / "metrics.csv";

  if (write) fs::create_directories(fs::path(options.run_dir) / "checkpoints");
  bool restored = false;
  if (options.resume && write) {
    const std::string latest = latest_checkpoint(options.run_dir);
    if (!latest.empty()) {
      restored = true;
      state = trainer.from_checkpoint(Checkpoint::load(latest));
      std::ifstream in(metrics_path);
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        StepRecord r = parse_record(line);
        if (r.step <= state.step) result.log.push_back(std::move(r));
      }
      if (static_cast<std::int64_t>(result.log.size()) != state.step)
        throw std::runtime_error("resume: metric log does not cover the checkpointed steps");
    }
  }

  if (!restored && options.warm_start) {
    const PretrainResult& warm = *options.warm_start;
    if (warm.state.epoch > config.train.warmup_epochs)
      throw std::invalid_argument("warm start must not go past the warmup phase");
    TrainState copy = warm.state;
    DecayedQueue queue(state.queue.capacity(), state.queue.dim(), state.queue.decay());
    if (!copy.queue.empty()) queue.restore(copy.queue.snapshot().keys, copy.queue.steps());
    copy.queue = std::move(queue);
    state = std::move(copy);
    result.log = warm.log;
    if (write && state.epoch > 0)
      trainer.to_checkpoint(state).save(checkpoint_path(options.run_dir, state.epoch));
  }

  std::ofstream metrics;
  if (write) {
    metrics.open(metrics_path, std::ios::trunc);
    if (!metrics) throw std::runtime_error(fmt::format("cannot write {}", metrics_path.string()));
    metrics << metric_header() << "\n";
    for (const auto& r : result.log) metrics << format_record(r) << "\n";
    metrics.flush();
  }

  const auto& tc = config.train;
  const int total_epochs = tc.warmup_epochs + tc.adversarial_epochs;
  const int n = static_cast<int>(dataset.train.size());
  auto batch_clips = [&](const std::vector<int>& order, int begin, int epoch) {
    std::vector<VideoClip> clips;
    for (int i = begin; i < std::min(n, begin + tc.batch_size); ++i)
      clips.push_back(training_clip(config, dataset, dataset.train[order[i]], epoch));
    return clips;
  };

  try {
    if (state.step == 0 && state.queue.empty() && total_epochs > 0)
      trainer.prefill(state, batch_clips(epoch_order(config.seed, 0, n), 0, 0));

    for (int epoch = state.epoch; epoch < total_epochs; ++epoch) {
      if (options.stop_after_epoch >= 0 && epoch >= options.stop_after_epoch) break;
      const auto order = epoch_order(config.seed, epoch, n);
      for (int begin = 0; begin < n; begin += tc.batch_size) {
        const auto clips = batch_clips(order, begin, epoch);
        StepRecord rec = epoch < tc.warmup_epochs ? trainer.warmup_step(state, clips)
                                                  : trainer.adversarial_step(state, clips);
        if (write) metrics << format_record(rec) << "\n" << std::flush;
        if (options.on_step) options.on_step(rec);
        result.log.push_back(std::move(rec));
      }
      state.epoch = epoch + 1;
      if (write) trainer.to_checkpoint(state).save(checkpoint_path(options.run_dir, state.epoch));
    }
  } catch (const NanLossError& e) {
    if (write) {
      nlohmann::json dump{{"error", e.what()},
                          {"step", state.step},
                          {"epoch", state.epoch},
                          {"encoder_q_norm", state.encoder_q.values().norm()},
                          {"encoder_k_norm", state.encoder_k.values().norm()},
                          {"generator_norm", state.generator.values().norm()},
                          {"queue_len", state.queue.size()}};
      std::ofstream(fs::path(options.run_dir) / "nan_dump.json") << dump.dump(2) << "\n";
    }
    throw;
  }
  return result;
}

}  // namespace advmoco
