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

#include "advmoco/nn.hpp"

namespace advmoco {

// Queries and positives are B x d, negatives N x d; all rows unit-norm.
// `weights` (length N) scales each negative's exp-logit in the denominator.
struct ContrastiveBatch {
  const Matrix& queries;
  const Matrix& positives;
  const Matrix& negatives;
  const Vector& weights;
  double temperature;
};

struct LossResult {
  double value = 0.0;
  Matrix grad_queries;  // d value / d queries
};

inline constexpr double kUnitNormTolerance = 1e-4;

// Mean over the batch of -log softmax of the positive logit against the
// negatives; ignores `weights`.
LossResult infonce(const ContrastiveBatch& batch);

// Same with each negative term multiplied by its weight; the positive keeps
// weight 1.
LossResult decayed_infonce(const ContrastiveBatch& batch);

// Encoder-side adversarial objective; identical to decayed_infonce.
LossResult discriminator_objective(const ContrastiveBatch& batch);

// Mean over rows of ||query - full||_1. The generator maximizes it.
// grad_queries is d value / d query (subgradient 0 at ties).
LossResult generator_objective(const Matrix& query_embeddings, const Matrix& full_embeddings);

}  // namespace advmoco
