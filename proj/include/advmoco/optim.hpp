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

// Heavy-ball SGD: v <- mu * v + g; theta <- theta - lr * v.
class SgdMomentum {
 public:
  SgdMomentum() = default;
  SgdMomentum(double learning_rate, double momentum) : lr_(learning_rate), momentum_(momentum) {}

  void step(ParamSet& params, const Vector& grad);

  double learning_rate() const { return lr_; }
  double momentum() const { return momentum_; }
  Vector& velocity() { return velocity_; }
  const Vector& velocity() const { return velocity_; }

 private:
  double lr_ = 0.0;
  double momentum_ = 0.0;
  Vector velocity_;
};

}  // namespace advmoco
