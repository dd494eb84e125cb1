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

#include "advmoco/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "advmoco/checkpoint.hpp"
#include "advmoco/fileio.hpp"
#include "advmoco/plot.hpp"
#include "json.hpp"

namespace advmoco {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr const char* kConfigFile = "config.yaml";
constexpr const char* kProbeFile = "probe.ckpt";

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// Writes config.yaml unless the directory already holds a different one.
void write_run_config(const std::string& dir, const ExperimentConfig& config, bool force) {
  const std::string path = path_in(dir, kConfigFile);
  const std::string text = dump_config(config);
  if (fs::exists(path) && !force && read_file(path) != text)
    throw UsageError(fmt::format("{} holds a different config; pass --force or choose another --out", dir));
  write_file_atomic(path, text);
}

Dataset load_dataset(const ExperimentConfig& config, const std::string& dir) {
  const std::string path = manifest_path(config, dir);
  if (!fs::exists(path)) throw UsageError(fmt::format("no dataset manifest at {}; run synth first", path));
  return read_manifest(path);
}

std::vector<ClipRecord> first_records(const std::vector<ClipRecord>& records, int count) {
  if (count <= 0 || count >= static_cast<int>(records.size())) return records;
  return {records.begin(), records.begin() + count};
}

TrainState load_latest(const Trainer& trainer, const std::string& dir) {
  const std::string ckpt = latest_checkpoint(dir);
  if (ckpt.empty()) throw UsageError(fmt::format("no checkpoint in {}; run pretrain first", dir));
  return trainer.from_checkpoint(Checkpoint::load(ckpt));
}

struct ProbeArtifact {
  ParamSet encoder;
  ProbeHead head;
};

ProbeArtifact load_probe(const Trainer& trainer, const std::string& dir) {
  const std::string path = path_in(dir, kProbeFile);
  if (!fs::exists(path)) throw UsageError(fmt::format("no {} in {}; run probe first", kProbeFile, dir));
  const Checkpoint c = Checkpoint::load(path);
  ProbeArtifact a{trainer.encoder().init_params(0), {c.matrix("head.weight"), c.vector("head.bias")}};
  c.get_params("encoder", a.encoder);
  return a;
}

void refuse_overwrite(const std::string& path, bool force) {
  if (fs::exists(path) && !force) throw UsageError(fmt::format("{} exists; pass --force to overwrite", path));
}

double training_loss(const StepRecord& r) { return std::isnan(r.decayed_loss) ? r.infonce_loss : r.decayed_loss; }

double final_epoch_loss(const std::vector<StepRecord>& log) {
  if (log.empty()) return kNotComputed;
  const int last = log.back().epoch;
  double sum = 0.0;
  int n = 0;
  for (const auto& r : log)
    if (r.epoch == last) {
      sum += training_loss(r);
      ++n;
    }
  return sum / n;
}

std::string format_optional(std::optional<double> v) { return v ? fmt::format("{:.17g}", *v) : ""; }

nlohmann::ordered_json cell_json(const CellResult& r) {
  nlohmann::ordered_json j{{"mode", to_string(r.cell.mode)},
                           {"k", r.cell.drop_count},
                           {"t", r.cell.decay},
                           {"seed", r.seed},
                           {"probe_top1", r.probe_top1},
                           {"finetune_top1", nullptr},
                           {"final_loss", r.final_loss},
                           {"wall_seconds", r.wall_seconds}};
  if (r.finetune_top1) j["finetune_top1"] = *r.finetune_top1;
  return j;
}

CellResult cell_from_json(const nlohmann::json& j) {
  CellResult r;
  r.cell = {parse_mask_mode(j.at("mode").get<std::string>()), j.at("k").get<int>(), j.at("t").get<double>()};
  r.seed = j.at("seed").get<std::uint64_t>();
  r.probe_top1 = j.at("probe_top1").get<double>();
  if (!j.at("finetune_top1").is_null()) r.finetune_top1 = j.at("finetune_top1").get<double>();
  r.final_loss = j.at("final_loss").get<double>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  return r;
}

}  // namespace

std::string output_root() {
  const char* env = std::getenv(kOutRootEnv);
  return env && *env ? env : kDefaultOutRoot;
}

ExperimentConfig resolve_config(const CommandOptions& options, bool use_run_config) {
  ExperimentConfig config;
  if (!options.config_path.empty()) {
    config = load_config(options.config_path);
  } else if (use_run_config && !options.out.empty() && fs::exists(path_in(options.out, kConfigFile))) {
    config = load_config(path_in(options.out, kConfigFile));
  }
  if (options.seed) config.seed = *options.seed;
  std::vector<std::pair<std::string, std::string>> assignments;
  for (const auto& item : options.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError(fmt::format("override '{}' is not key=value", item));
    assignments.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  if (!assignments.empty()) set_config_values(config, assignments);
  validate(config);
  return config;
}

std::string run_directory(const CommandOptions& options, const ExperimentConfig& config) {
  if (!options.out.empty()) return options.out;
  return (fs::path(output_root()) / ("run-" + config_hash(config).substr(0, 12))).string();
}

std::string manifest_path(const ExperimentConfig& config, const std::string& run_dir) {
  if (config.manifest.empty()) return path_in(run_dir, "manifest.jsonl");
  const fs::path p(config.manifest);
  return p.is_absolute() ? p.string() : (fs::path(run_dir) / p).lexically_normal().string();
}

void cmd_synth(const CommandOptions& options, std::ostream& log) {
  const ExperimentConfig config = resolve_config(options, false);
  const std::string dir = run_directory(options, config);
  const Dataset dataset = build_dataset(config.dataset, config.seed);
  const std::string text = manifest_text(dataset);
  const std::string path = manifest_path(config, dir);
  fs::create_directories(dir);
  write_run_config(dir, config, options.force);
  if (fs::exists(path) && read_file(path) == text) {
    log << "manifest unchanged: " << path << "\n";
  } else {
    refuse_overwrite(path, options.force);
    write_file_atomic(path, text);
    log << fmt::format("wrote {} ({} train / {} test videos)\n", path, dataset.train.size(), dataset.test.size());
  }
  for (int i = 0; i < std::min<int>(config.dataset.export_frames, static_cast<int>(dataset.train.size())); ++i) {
    const auto& rec = dataset.train[i];
    export_frames(dataset.render(rec), path_in(dir, fmt::format("frames/clip_{:05d}", rec.id)));
  }
}

void cmd_pretrain(const CommandOptions& options, std::ostream& log) {
  const ExperimentConfig config = resolve_config(options, true);
  const std::string dir = run_directory(options, config);
  const Dataset dataset = load_dataset(config, dir);
  const bool existing = fs::exists(path_in(dir, "metrics.csv")) || !latest_checkpoint(dir).empty();
  if (existing && !options.resume && !options.force)
    throw UsageError(fmt::format("{} already has a training run; pass --resume or --force", dir));
  if (options.resume) {
    const std::string cfg = path_in(dir, kConfigFile);
    if (fs::exists(cfg) && read_file(cfg) != dump_config(config))
      throw UsageError("--resume needs the run's own config; drop --config/--set or start a new run");
  }
  if (options.force && !options.resume) {
    fs::remove(path_in(dir, "metrics.csv"));
    fs::remove(path_in(dir, "nan_dump.json"));
    fs::remove_all(path_in(dir, "checkpoints"));
  }
  write_run_config(dir, config, options.force);

  const auto t0 = Clock::now();
  PretrainOptions po;
  po.run_dir = dir;
  po.resume = options.resume;
  po.on_step = [&](const StepRecord& r) {
    if (r.step % 4 == 0)
      log << fmt::format("step {:5d} epoch {:3d} {:11s} loss {:.4f} gen {:.4f}  {:.0f}s\n", r.step, r.epoch, r.phase,
                         training_loss(r), r.generator_l1, seconds_since(t0));
  };
  const PretrainResult result = run_pretrain(config, dataset, po);
  nlohmann::ordered_json summary{{"steps", result.state.step},
                                 {"epochs", result.state.epoch},
                                 {"final_loss", final_epoch_loss(result.log)},
                                 {"wall_seconds", seconds_since(t0)},
                                 {"config_hash", config_hash(config)}};
  write_file_atomic(path_in(dir, "pretrain.json"), summary.dump(2) + "\n");
  log << fmt::format("pretrained {} steps into {}\n", result.state.step, dir);
}

ProbeOutcome probe_encoder(const ExperimentConfig& config, const Dataset& dataset, const ParamSet& params,
                           FinetuneMode mode) {
  const Encoder encoder(EncoderArch::from(config.model));
  const bool probe = mode == FinetuneMode::kLinearProbe;
  const LabeledClips train = labeled_clips(config, dataset, dataset.train, probe ? config.eval.eval_clips : 1);
  ProbeOutcome out{finetune(encoder, params, train.clips, train.labels, config.dataset.classes,
                            probe ? probe_options(config) : finetune_options(config)),
                   0.0};
  const ClipEvaluator ev{encoder, out.fit.encoder, out.fit.head, config.model.clip_frames, config.model.input_size,
                         config.eval.eval_clips};
  int correct = 0;
  for (const auto& rec : dataset.test) correct += predict_video(ev, dataset.render(rec)).correct;
  out.test_top1 = dataset.test.empty() ? 0.0 : static_cast<double>(correct) / dataset.test.size();
  return out;
}

void cmd_probe(const CommandOptions& options, std::ostream& log) {
  const ExperimentConfig config = resolve_config(options, true);
  const std::string dir = run_directory(options, config);
  refuse_overwrite(path_in(dir, kProbeFile), options.force);
  const Trainer trainer(config);
  const TrainState state = load_latest(trainer, dir);
  const Dataset dataset = load_dataset(config, dir);
  const auto t0 = Clock::now();
  const ProbeOutcome out = probe_encoder(config, dataset, state.encoder_q, FinetuneMode::kLinearProbe);

  Checkpoint c;
  c.put_params("encoder", out.fit.encoder);
  c.put_matrix("head.weight", out.fit.head.weight);
  c.put_vector("head.bias", out.fit.head.bias);
  c.put_int("source_epoch", state.epoch);
  c.save(path_in(dir, kProbeFile));
  nlohmann::ordered_json summary{{"mode", "linear_probe"},
                                 {"source_epoch", state.epoch},
                                 {"train_accuracy", out.fit.train_accuracy},
                                 {"test_top1", out.test_top1},
                                 {"final_train_loss", out.fit.epoch_loss.empty() ? 0.0 : out.fit.epoch_loss.back()},
                                 {"wall_seconds", seconds_since(t0)}};
  write_file_atomic(path_in(dir, "probe.json"), summary.dump(2) + "\n");
  log << fmt::format("linear probe: train {:.3f}, test top-1 {:.3f}\n", out.fit.train_accuracy, out.test_top1);
}

void cmd_eval(const CommandOptions& options, std::ostream& log) {
  const ExperimentConfig config = resolve_config(options, true);
  const std::string dir = run_directory(options, config);
  refuse_overwrite(path_in(dir, "report.tsv"), options.force);
  const Trainer trainer(config);
  const ProbeArtifact probe = load_probe(trainer, dir);
  const Dataset dataset = load_dataset(config, dir);
  const ClipEvaluator ev{trainer.encoder(), probe.encoder, probe.head, config.model.clip_frames,
                         config.model.input_size, config.eval.eval_clips};
  const auto records = first_records(dataset.test, config.eval.eval_videos);
  const OcclusionReport report = occlusion_report(ev, dataset, records, OcclusionSpec::from(config.eval));
  write_file_atomic(path_in(dir, "report.tsv"), report_tsv(report));
  write_file_atomic(path_in(dir, "summary.json"), summary_json(report.summary));
  const auto& s = report.summary;
  log << fmt::format("{} videos: top-1 {:.3f} clean / {:.3f} occluded, entropy {:.4f} -> {:.4f} nats\n", s.videos,
                     s.top1_clean, s.top1_occluded, s.mean_entropy_clean, s.mean_entropy_occluded);
}

void cmd_diagnose(const CommandOptions& options, std::ostream& log) {
  const ExperimentConfig config = resolve_config(options, true);
  const std::string dir = run_directory(options, config);
  const std::string out_dir = path_in(dir, "attention");
  refuse_overwrite(path_in(dir, "diagnose.json"), options.force);
  const Trainer trainer(config);
  const TrainState state = load_latest(trainer, dir);
  const ProbeArtifact probe = load_probe(trainer, dir);
  const Dataset dataset = load_dataset(config, dir);
  const ClipEvaluator ev{trainer.encoder(), probe.encoder, probe.head, config.model.clip_frames,
                         config.model.input_size, config.eval.eval_clips};
  const int sub = config.model.clip_frames;

  nlohmann::ordered_json videos = nlohmann::ordered_json::array();
  for (const auto& rec : first_records(dataset.test, config.eval.diagnose_videos)) {
    const VideoClip video = dataset.render(rec);
    const VideoClip clip = sample_subclip(video, sub, (video.frames - sub) / 2);
    const VideoClip view = augment(clip, center_view(clip, config.model.input_size));
    const AttentionMap map = attention_map(trainer.encoder(), probe.encoder, view);
    std::string tsv = "t\ty\tx\tattention\tr\tg\tb\n";
    for (int t = 0; t < map.frames; ++t)
      for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) {
          const int c = view.channels;
          auto px = [&](int ch) { return view.at(t, y, x, std::min(ch, c - 1)); };
          tsv += fmt::format("{}\t{}\t{}\t{:.9g}\t{:.6g}\t{:.6g}\t{:.6g}\n", t, y, x, map.at(t, y, x), px(0), px(1),
                             px(2));
        }
    write_file_atomic(path_in(out_dir, fmt::format("video_{:05d}.tsv", rec.id)), tsv);

    const auto scores = trainer.generator().score_frames(state.generator, view);
    const TemporalMask mask = make_mask(scores, config.train.drop_count);
    const PredictionReport pred = predict_video(ev, video);
    videos.push_back({{"id", rec.id},
                      {"label", rec.label},
                      {"prediction", pred.prediction},
                      {"entropy", pred.entropy},
                      {"probabilities", pred.probabilities},
                      {"generator_scores", scores},
                      {"dropped_frames", mask.dropped()}});
  }
  nlohmann::ordered_json summary{{"method", "activation_magnitude"}, {"videos", videos}};
  write_file_atomic(path_in(dir, "diagnose.json"), summary.dump(2) + "\n");
  log << fmt::format("wrote attention maps for {} videos to {}\n", videos.size(), out_dir);
}

ExperimentConfig cell_config(const ExperimentConfig& base, const AblationCell& cell, std::uint64_t seed) {
  ExperimentConfig c = base;
  c.seed = seed;
  c.train.mask_mode = cell.mode;
  c.train.drop_count = cell.drop_count;
  c.train.decay = cell.decay;
  c.train.decay_enabled = cell.decay < 1.0;
  c.ablation = AblationConfig{};
  // Cells live two levels below the sweep directory that holds the manifest.
  const fs::path m(base.manifest.empty() ? "manifest.jsonl" : base.manifest);
  c.manifest = m.is_absolute() ? m.string() : (fs::path("..") / ".." / m).string();
  validate(c);
  return c;
}

std::string cell_run_id(const ExperimentConfig& c) {
  return fmt::format("{}-k{}-t{:.8g}-s{}-{}", to_string(c.train.mask_mode), c.train.drop_count,
                     c.train.decay_enabled ? c.train.resolved_decay() : 1.0, c.seed, config_hash(c).substr(0, 10));
}

std::string ablation_csv_header() { return "mode,k,t,seed,probe_top1,finetune_top1,final_loss,wall_seconds"; }

std::string format_cell_result(const CellResult& r) {
  return fmt::format("{},{},{:.17g},{},{:.17g},{},{:.17g},{:.3f}", to_string(r.cell.mode), r.cell.drop_count,
                     r.cell.decay, r.seed, r.probe_top1, format_optional(r.finetune_top1), r.final_loss,
                     r.wall_seconds);
}

CellResult parse_cell_result(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  for (std::string item; std::getline(ss, item, ',');) f.push_back(item);
  if (f.size() != 8) throw std::runtime_error(fmt::format("ablation csv: malformed line '{}'", line));
  CellResult r;
  r.cell = {parse_mask_mode(f[0]), std::stoi(f[1]), std::stod(f[2])};
  r.seed = std::stoull(f[3]);
  r.probe_top1 = std::stod(f[4]);
  if (!f[5].empty()) r.finetune_top1 = std::stod(f[5]);
  r.final_loss = std::stod(f[6]);
  r.wall_seconds = std::stod(f[7]);
  return r;
}

std::vector<CellSummary> summarize_cells(const std::vector<CellResult>& results) {
  std::vector<CellSummary> out;
  std::vector<std::vector<double>> probes;
  for (const auto& r : results) {
    auto it = std::find_if(out.begin(), out.end(), [&](const CellSummary& s) {
      return s.cell.mode == r.cell.mode && s.cell.drop_count == r.cell.drop_count && s.cell.decay == r.cell.decay;
    });
    if (it == out.end()) {
      out.push_back({r.cell, 0, 0.0, 0.0, 0.0});
      probes.emplace_back();
      it = out.end() - 1;
    }
    ++it->seeds;
    it->final_loss_mean += r.final_loss;
    probes[it - out.begin()].push_back(r.probe_top1);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& p = probes[i];
    const double n = static_cast<double>(p.size());
    out[i].final_loss_mean /= n;
    for (double v : p) out[i].probe_mean += v / n;
    double ss = 0.0;
    for (double v : p) ss += (v - out[i].probe_mean) * (v - out[i].probe_mean);
    out[i].probe_std = p.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return out;
}

std::vector<CellResult> run_ablation(const ExperimentConfig& base, const Dataset& dataset,
                                     const std::vector<AblationCell>& cells,
                                     const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
                                     std::ostream& log) {
  if (cells.empty() || seeds.empty()) throw UsageError("ablation grid is empty");
  struct Warm {
    PretrainResult result;
    double seconds = 0.0;
  };
  std::map<std::string, Warm> warm;
  std::vector<CellResult> results;
  for (std::uint64_t seed : seeds) {
    for (const auto& cell : cells) {
      const ExperimentConfig cfg = cell_config(base, cell, seed);
      const std::string id = cell_run_id(cfg);
      const std::string dir = path_in(path_in(out_dir, "cells"), id);
      const std::string result_path = path_in(dir, "result.json");
      if (fs::exists(result_path)) {
        results.push_back(cell_from_json(nlohmann::json::parse(read_file(result_path))));
        log << fmt::format("[skip] {} (done)\n", id);
        continue;
      }
      fs::create_directories(dir);
      write_run_config(dir, cfg, false);
      log << fmt::format("[run] {}\n", id);

      const auto t0 = Clock::now();
      PretrainOptions po;
      po.run_dir = dir;
      po.resume = true;
      double warm_seconds = 0.0;
      const int warm_epochs = cfg.train.warmup_epochs;
      if (warm_epochs > 0 && latest_checkpoint(dir).empty()) {
        const std::string sig = warmup_signature(cfg);
        auto it = warm.find(sig);
        if (it == warm.end()) {
          PretrainOptions wo;
          wo.stop_after_epoch = warm_epochs;
          it = warm.emplace(sig, Warm{run_pretrain(cfg, dataset, wo), seconds_since(t0)}).first;
        }
        po.warm_start = &it->second.result;
        warm_seconds = it->second.seconds;
      }
      const auto t1 = Clock::now();
      const PretrainResult trained = run_pretrain(cfg, dataset, po);

      CellResult r{cell, seed, 0.0, std::nullopt, final_epoch_loss(trained.log), 0.0};
      r.probe_top1 = probe_encoder(cfg, dataset, trained.state.encoder_q, FinetuneMode::kLinearProbe).test_top1;
      if (cfg.eval.ablate_finetune)
        r.finetune_top1 = probe_encoder(cfg, dataset, trained.state.encoder_q, FinetuneMode::kFinetune).test_top1;
      // Shared warmup time is charged to every cell that uses it.
      r.wall_seconds = seconds_since(t1) + warm_seconds;
      write_file_atomic(result_path, cell_json(r).dump(2) + "\n");
      log << fmt::format("      probe top-1 {:.4f}  final loss {:.4f}  {:.0f}s\n", r.probe_top1, r.final_loss,
                         r.wall_seconds);
      results.push_back(r);
    }
  }
  return results;
}

void cmd_ablate(const CommandOptions& options, std::ostream& log) {
  const ExperimentConfig config = resolve_config(options, false);
  const std::string dir = run_directory(options, config);
  fs::create_directories(dir);
  if (options.force) fs::remove_all(path_in(dir, "cells"));
  write_run_config(dir, config, options.force);
  const std::string mpath = manifest_path(config, dir);
  if (!fs::exists(mpath)) {
    write_file_atomic(mpath, manifest_text(build_dataset(config.dataset, config.seed)));
    log << "wrote " << mpath << "\n";
  }
  const Dataset dataset = read_manifest(mpath);
  const auto cells = config.ablation.cells.empty() ? default_ablation_cells(config) : config.ablation.cells;
  const auto results = run_ablation(config, dataset, cells, config.ablation.seeds, dir, log);

  std::string csv = ablation_csv_header() + "\n";
  for (const auto& r : results) csv += format_cell_result(r) + "\n";
  write_file_atomic(path_in(dir, "ablate.csv"), csv);
  std::string summary = "mode,k,t,seeds,probe_top1_mean,probe_top1_std,final_loss_mean\n";
  for (const auto& s : summarize_cells(results))
    summary += fmt::format("{},{},{:.17g},{},{:.17g},{:.17g},{:.17g}\n", to_string(s.cell.mode), s.cell.drop_count,
                           s.cell.decay, s.seeds, s.probe_mean, s.probe_std, s.final_loss_mean);
  write_file_atomic(path_in(dir, "ablate_summary.csv"), summary);
  log << fmt::format("{} runs; results in {}\n", results.size(), path_in(dir, "ablate.csv"));
}

void cmd_plot(const CommandOptions& options, std::ostream& log) {
  if (options.out.empty()) throw UsageError("plot needs --out RUN_DIR");
  for (const auto& f : make_plots(options.out)) log << "wrote " << f << "\n";
}

std::string cmd_print_config(const CommandOptions& options) { return dump_config(resolve_config(options, true)); }

}  // namespace advmoco
