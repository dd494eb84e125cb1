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

#include <cmath>
#include <deque>
#include <random>

#include <gtest/gtest.h>

#include "advmoco/memqueue.hpp"
#include "testing.hpp"

namespace advmoco {
namespace {

Matrix unit_rows(std::initializer_list<double> angles) {
  Matrix m(static_cast<Eigen::Index>(angles.size()), 2);
  int i = 0;
  for (double a : angles) {
    m(i, 0) = std::cos(a);
    m(i, 1) = std::sin(a);
    ++i;
  }
  return m;
}

TEST(DecayWeight, PowerArithmetic) {
  EXPECT_EQ(decay_weight(0.3, 0), 1.0);
  EXPECT_EQ(decay_weight(1.0, 123456), 1.0);
  // Reference value of 0.999^8000 from exact exponentiation.
  EXPECT_NEAR(decay_weight(0.999, 8000), 3.3412256585375113e-4, 1e-15);
  EXPECT_NEAR(decay_weight(0.999, 8000), 3.35e-4, 1e-6);
  EXPECT_NEAR(decay_weight(0.99999, 65536), 0.5190, 0.001);
  EXPECT_NEAR(decay_weight(0.5, 2), 0.25, 1e-16);
  EXPECT_THROW(decay_weight(0.0, 1), std::invalid_argument);
  EXPECT_THROW(decay_weight(1.1, 1), std::invalid_argument);
  EXPECT_THROW(decay_weight(0.5, -1), std::invalid_argument);
}

TEST(DecayedQueue, FifoNewestFirst) {
  DecayedQueue q(4, 2, 1.0);
  const Matrix ab = unit_rows({0.1, 0.2}), cd = unit_rows({0.3, 0.4}), ef = unit_rows({0.5, 0.6});
  q.enqueue_batch(ab, 1);
  EXPECT_EQ(q.size(), 2);
  q.enqueue_batch(cd, 2);
  q.enqueue_batch(ef, 3);
  ASSERT_EQ(q.size(), 4);
  const QueueSnapshot s = q.snapshot();
  EXPECT_EQ(Vector(s.keys.row(0).transpose()), Vector(ef.row(0).transpose()));
  EXPECT_EQ(Vector(s.keys.row(1).transpose()), Vector(ef.row(1).transpose()));
  EXPECT_EQ(Vector(s.keys.row(2).transpose()), Vector(cd.row(0).transpose()));
  EXPECT_EQ(Vector(s.keys.row(3).transpose()), Vector(cd.row(1).transpose()));
  EXPECT_EQ(q.enqueue_step(0), 3);
  EXPECT_EQ(q.enqueue_step(3), 2);
}

TEST(DecayedQueue, Weights) {
  DecayedQueue q(8, 2, 0.5);
  q.enqueue_batch(unit_rows({0.1, 0.2, 0.3}), 1);
  const Vector w = q.weights();
  ASSERT_EQ(w.size(), 3);
  EXPECT_EQ(w[0], 1.0);
  EXPECT_NEAR(w[1], 0.5, 1e-16);
  EXPECT_NEAR(w[2], 0.25, 1e-16);
  DecayedQueue flat(8, 2, 1.0);
  flat.enqueue_batch(unit_rows({0.1, 0.2, 0.3}), 1);
  EXPECT_EQ(flat.weights(), Vector::Ones(3));
  DecayedQueue decaying(16, 2, 0.9);
  for (int i = 0; i < 4; ++i) decaying.enqueue_batch(unit_rows({0.1 * i, 0.2, 0.3}), i);
  const Vector d = decaying.weights();
  for (Eigen::Index j = 1; j < d.size(); ++j) EXPECT_LT(d[j], d[j - 1]);
}

TEST(DecayedQueue, LengthSaturatesAtCapacity) {
  std::mt19937_64 rng(1);
  for (int K : {5, 8, 13}) {
    for (int b : {1, 3, 4}) {
      DecayedQueue q(K, 3, 0.9);
      const int batches = (K + b - 1) / b + 3;
      for (int i = 0; i < batches; ++i) {
        q.enqueue_batch(testing::random_unit_rows(rng, b, 3), i);
        EXPECT_EQ(q.size(), std::min(K, (i + 1) * b));
      }
      EXPECT_EQ(q.size(), K);
    }
  }
}

TEST(DecayedQueue, SnapshotShiftsByBatch) {
  std::mt19937_64 rng(2);
  DecayedQueue q(10, 3, 0.8);
  q.enqueue_batch(testing::random_unit_rows(rng, 4, 3), 1);
  const QueueSnapshot before = q.snapshot();
  EXPECT_EQ(q.snapshot().keys, before.keys);
  q.enqueue_batch(testing::random_unit_rows(rng, 3, 3), 2);
  const QueueSnapshot after = q.snapshot();
  ASSERT_EQ(after.keys.rows(), 7);
  for (int j = 0; j < 4; ++j) EXPECT_EQ(Vector(after.keys.row(j + 3)), Vector(before.keys.row(j)));
}

TEST(DecayedQueue, OversizedBatchKeepsFirstRows) {
  std::mt19937_64 rng(3);
  DecayedQueue q(3, 2, 1.0);
  const Matrix keys = testing::random_unit_rows(rng, 5, 2);
  q.enqueue_batch(keys, 1);
  ASSERT_EQ(q.size(), 3);
  for (int j = 0; j < 3; ++j) EXPECT_EQ(q.key(j), Vector(keys.row(j).transpose()));
}

TEST(DecayedQueue, RejectsBadInput) {
  EXPECT_THROW(DecayedQueue(0, 2, 0.5), std::invalid_argument);
  EXPECT_THROW(DecayedQueue(4, 2, 0.0), std::invalid_argument);
  DecayedQueue q(4, 2, 0.5);
  EXPECT_THROW(q.snapshot(), std::logic_error);
  Matrix not_unit(1, 2);
  not_unit << 1.0, 1.0;
  EXPECT_THROW(q.enqueue_batch(not_unit, 0), std::invalid_argument);
  EXPECT_THROW(q.enqueue_batch(Matrix::Zero(1, 3), 0), std::invalid_argument);
}

TEST(DecayedQueue, RestoreRoundTrip) {
  std::mt19937_64 rng(4);
  DecayedQueue q(6, 2, 0.7);
  for (int i = 0; i < 5; ++i) q.enqueue_batch(testing::random_unit_rows(rng, 2, 2), i);
  DecayedQueue r(6, 2, 0.7);
  r.restore(q.snapshot().keys, q.steps());
  EXPECT_EQ(r.snapshot().keys, q.snapshot().keys);
  EXPECT_EQ(r.steps(), q.steps());
  const Matrix more = testing::random_unit_rows(rng, 3, 2);
  q.enqueue_batch(more, 9);
  r.enqueue_batch(more, 9);
  EXPECT_EQ(r.snapshot().keys, q.snapshot().keys);
}

}  // namespace
}  // namespace advmoco
