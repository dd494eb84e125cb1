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
#include <ostream>
#include <string>
#include <vector>

#include "advmoco/config.hpp"
#include "advmoco/evalharness.hpp"
#include "advmoco/trainloop.hpp"

namespace advmoco {

inline constexpr const char* kOutRootEnv = "ADVMOCO_OUT_ROOT";
inline constexpr const char* kDefaultOutRoot = "runs";

// Thrown for conditions the user can fix (missing inputs, refusing to
// overwrite). The CLI maps it to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommandOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  // Run directory. Empty: <output root>/run-<config hash>.
  std::string out;
  bool resume = false;
  bool force = false;
  // key=value overrides applied after the config file and --seed.
  std::vector<std::string> overrides;
};

// Defaults, then the config file (or <out>/config.yaml for commands that read
// an existing run when no file is given), then --seed, then overrides.
ExperimentConfig resolve_config(const CommandOptions& options, bool use_run_config);
std::string output_root();
std::string run_directory(const CommandOptions& options, const ExperimentConfig& config);
std::string manifest_path(const ExperimentConfig& config, const std::string& run_dir);

// Each command writes into the run directory and logs progress to `log`.
void cmd_synth(const CommandOptions& options, std::ostream& log);
void cmd_pretrain(const CommandOptions& options, std::ostream& log);
void cmd_probe(const CommandOptions& options, std::ostream& log);
void cmd_eval(const CommandOptions& options, std::ostream& log);
void cmd_diagnose(const CommandOptions& options, std::ostream& log);
void cmd_ablate(const CommandOptions& options, std::ostream& log);
void cmd_plot(const CommandOptions& options, std::ostream& log);
std::string cmd_print_config(const CommandOptions& options);

struct CellResult {
  AblationCell cell;
  std::uint64_t seed = 0;
  double probe_top1 = 0.0;
  std::optional<double> finetune_top1;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
};

// Config of one ablation run: base settings with the cell's mode, k, t and seed.
ExperimentConfig cell_config(const ExperimentConfig& base, const AblationCell& cell, std::uint64_t seed);
std::string cell_run_id(const ExperimentConfig& cell_config);

std::string ablation_csv_header();
std::string format_cell_result(const CellResult& result);
CellResult parse_cell_result(const std::string& csv_line);

// Mean and sample std of probe top-1 per (mode, k, t) over seeds, in grid order.
struct CellSummary {
  AblationCell cell;
  int seeds = 0;
  double probe_mean = 0.0;
  double probe_std = 0.0;
  double final_loss_mean = 0.0;
};
std::vector<CellSummary> summarize_cells(const std::vector<CellResult>& results);

// Runs the grid in-process. Cells that share a warmup signature and seed
// reuse one warmup trajectory. Completed cells (result.json present) are
// read back instead of rerun.
std::vector<CellResult> run_ablation(const ExperimentConfig& base, const Dataset& dataset,
                                     const std::vector<AblationCell>& cells,
                                     const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
                                     std::ostream& log);

// Test-set top-1 of a fresh linear probe (or finetune) on `params`.
struct ProbeOutcome {
  FinetuneResult fit;
  double test_top1 = 0.0;
};
ProbeOutcome probe_encoder(const ExperimentConfig& config, const Dataset& dataset, const ParamSet& params,
                           FinetuneMode mode);

}  // namespace advmoco
