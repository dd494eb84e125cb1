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

#include "advmoco/memqueue.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace advmoco {

double decay_weight(double t, double i) {
  if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument(fmt::format("decay_weight: t={} outside (0,1]", t));
  if (!(i >= 0.0)) throw std::invalid_argument("decay_weight: position must be non-negative");
  return std::pow(t, i);
}

DecayedQueue::DecayedQueue(int capacity, int dim, double decay)
    : capacity_(capacity), dim_(dim), decay_(decay) {
  if (capacity <= 0 || dim <= 0) throw std::invalid_argument("DecayedQueue: capacity and dim must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("DecayedQueue: decay outside (0,1]");
  storage_.setZero(capacity, dim);
  steps_.assign(capacity, 0);
}

void DecayedQueue::enqueue_batch(const Matrix& keys, std::int64_t step) {
  if (keys.cols() != dim_)
    throw std::invalid_argument(fmt::format("enqueue_batch: key dim {} != {}", keys.cols(), dim_));
  for (Eigen::Index b = 0; b < keys.rows(); ++b) {
    const double n = keys.row(b).norm();
    if (!(std::abs(n - 1.0) <= kNormTolerance))
      throw std::invalid_argument(fmt::format("enqueue_batch: key {} has norm {}", b, n));
  }
  // Only the first `capacity` keys of an oversized batch survive.
  const int b = static_cast<int>(std::min<Eigen::Index>(keys.rows(), capacity_));
  head_ = ((head_ - b) % capacity_ + capacity_) % capacity_;
  for (int j = 0; j < b; ++j) {
    storage_.row(physical(j)) = keys.row(j);
    steps_[physical(j)] = step;
  }
  size_ = std::min(capacity_, size_ + b);
}

Vector DecayedQueue::key(int position) const {
  if (position < 0 || position >= size_) throw std::out_of_range("DecayedQueue::key: position out of range");
  return storage_.row(physical(position)).transpose();
}

std::int64_t DecayedQueue::enqueue_step(int position) const {
  if (position < 0 || position >= size_) throw std::out_of_range("DecayedQueue::enqueue_step: position out of range");
  return steps_[physical(position)];
}

Vector DecayedQueue::weights() const {
  Vector w(size_);
  for (int j = 0; j < size_; ++j) w[j] = decay_weight(decay_, j);
  return w;
}

QueueSnapshot DecayedQueue::snapshot() const {
  if (size_ == 0) throw std::logic_error("snapshot of an empty queue");
  QueueSnapshot s;
  s.keys.resize(size_, dim_);
  // At most two contiguous runs in the ring.
  const int first = std::min(size_, capacity_ - head_);
  s.keys.topRows(first) = storage_.middleRows(head_, first);
  if (first < size_) s.keys.bottomRows(size_ - first) = storage_.topRows(size_ - first);
  s.weights = weights();
  return s;
}

std::vector<std::int64_t> DecayedQueue::steps() const {
  std::vector<std::int64_t> out(size_);
  for (int j = 0; j < size_; ++j) out[j] = steps_[physical(j)];
  return out;
}

void DecayedQueue::restore(const Matrix& keys, const std::vector<std::int64_t>& steps) {
  if (keys.rows() > capacity_ || keys.cols() != dim_ || static_cast<std::size_t>(keys.rows()) != steps.size())
    throw std::invalid_argument("DecayedQueue::restore: shape mismatch");
  storage_.setZero();
  head_ = 0;
  size_ = static_cast<int>(keys.rows());
  storage_.topRows(size_) = keys;
  std::copy(steps.begin(), steps.end(), steps_.begin());
}

}  // namespace advmoco
