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
#include <vector>

#include "advmoco/nn.hpp"

namespace advmoco {

// t^i evaluated as exp(i * ln t). Throws for t outside (0,1] or i < 0.
double decay_weight(double t, double i);

struct QueueSnapshot {
  Matrix keys;      // row j = entry at position j (0 = newest)
  Vector weights;   // t^j
};

// FIFO dictionary of momentum-encoded keys, newest first. Capacity K; when
// full, the oldest entries are evicted. Single writer.
class DecayedQueue {
 public:
  static constexpr double kNormTolerance = 1e-4;

  DecayedQueue(int capacity, int dim, double decay);

  int capacity() const { return capacity_; }
  int dim() const { return dim_; }
  double decay() const { return decay_; }
  int size() const { return size_; }
  bool empty() const { return size_ == 0; }

  // Row b of `keys` lands at position b. Rejects rows whose norm is not 1.
  void enqueue_batch(const Matrix& keys, std::int64_t step);

  Vector key(int position) const;
  std::int64_t enqueue_step(int position) const;
  Vector weights() const;
  QueueSnapshot snapshot() const;

  // Raw state for checkpointing: entries in logical order.
  std::vector<std::int64_t> steps() const;
  void restore(const Matrix& keys, const std::vector<std::int64_t>& steps);

 private:
  int physical(int position) const { return (head_ + position) % capacity_; }

  int capacity_;
  int dim_;
  double decay_;
  int head_ = 0;
  int size_ = 0;
  Matrix storage_;
  std::vector<std::int64_t> steps_;
};

}  // namespace advmoco
