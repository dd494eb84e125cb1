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

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "advmoco/advmoco.h"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool resume = false;
  bool force = false;
  std::vector<std::string> overrides;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "YAML config file");
  sub->add_option("--seed", f.seed, "Override the config seed");
  sub->add_option("--out", f.out, "Run directory (default: $ADVMOCO_OUT_ROOT/run-<config hash>)");
  sub->add_flag("--resume", f.resume, "Continue from the latest checkpoint");
  sub->add_flag("--force", f.force, "Overwrite existing outputs");
  sub->add_option("--set", f.overrides, "Config override key=value (repeatable)");
}

int exit_code(amc_status s) {
  if (s == AMC_OK) return 0;
  std::fprintf(stderr, "error: %s\n", amc_last_error());
  switch (s) {
    case AMC_ERR_USAGE:
    case AMC_ERR_INVALID_ARGUMENT: return 2;
    case AMC_ERR_NAN: return 3;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial frame dropout with decayed momentum contrast on synthetic video"};
  app.require_subcommand(1);
  app.set_version_flag("--version", amc_version());
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"synth", "Generate the synthetic dataset manifest"},
      {"pretrain", "Adversarial contrastive pretraining"},
      {"probe", "Train a linear probe on the latest checkpoint"},
      {"eval", "Occlusion report with prediction entropies"},
      {"diagnose", "Attention maps and generator frame scores"},
      {"ablate", "Sweep mask mode, drop count and decay over seeds"},
      {"plot", "Render figures with their data files"},
      {"print-config", "Print the fully resolved config"}};
  for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), flags);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  amc_options* options = nullptr;
  if (amc_options_create(&options) != AMC_OK) return exit_code(AMC_ERR_INTERNAL);
  amc_options_set_config_path(options, flags.config.c_str());
  if (flags.seed) amc_options_set_seed(options, *flags.seed);
  amc_options_set_out(options, flags.out.c_str());
  amc_options_set_resume(options, flags.resume);
  amc_options_set_force(options, flags.force);
  for (const auto& kv : flags.overrides) amc_options_add_override(options, kv.c_str());

  const std::string name = app.get_subcommands().front()->get_name();
  amc_status status;
  if (name == "print-config") {
    char* text = nullptr;
    status = amc_print_config(options, &text);
    if (status == AMC_OK) {
      std::fputs(text, stdout);
      amc_string_free(text);
    }
  } else {
    status = amc_run_command(name.c_str(), options);
  }
  amc_options_destroy(options);
  return exit_code(status);
}
