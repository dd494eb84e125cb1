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
#include <string>

#include "advmoco/config.hpp"
#include "advmoco/nn.hpp"

namespace advmoco::testing {

// Rows drawn from a Gaussian and normalized to unit length.
Matrix random_unit_rows(std::mt19937_64& rng, int rows, int dim);

// T=4, 8x8 crops, d=8: small enough for finite differences.
ExperimentConfig tiny_config();

// A few-second end-to-end config: 16 train / 8 test videos.
ExperimentConfig small_run_config();

// Fresh empty directory under the system temp dir.
std::string temp_dir(const std::string& tag);

double relative_error(double analytic, double numeric);

}  // namespace advmoco::testing
