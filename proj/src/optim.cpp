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

#include "advmoco/optim.hpp"

#include <stdexcept>

namespace advmoco {

void SgdMomentum::step(ParamSet& params, const Vector& grad) {
  if (grad.size() != static_cast<Eigen::Index>(params.size()))
    throw std::invalid_argument("SgdMomentum::step: gradient size mismatch");
  if (velocity_.size() != grad.size()) velocity_ = Vector::Zero(grad.size());
  velocity_ = momentum_ * velocity_ + grad;
  params.values() -= lr_ * velocity_;
}

}  // namespace advmoco
