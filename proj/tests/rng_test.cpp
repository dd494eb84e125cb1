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
#include <set>

#include <gtest/gtest.h>

#include "advmoco/rng.hpp"

namespace advmoco {
namespace {

TEST(Rng, SplitmixKnownValue) {
  // First output of the reference splitmix64 generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(Rng, SameCoordinatesSameStream) {
  auto a = make_rng(7, Stream::kShuffle, {3, 4});
  auto b = make_rng(7, Stream::kShuffle, {3, 4});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Rng, DistinctCoordinatesDiffer) {
  std::set<std::uint64_t> seeds{derive_seed(1, Stream::kShuffle), derive_seed(2, Stream::kShuffle),
                                derive_seed(1, Stream::kQueryView), derive_seed(1, Stream::kShuffle, {0}),
                                derive_seed(1, Stream::kShuffle, {1}), derive_seed(1, Stream::kShuffle, {0, 1}),
                                derive_seed(1, Stream::kShuffle, {1, 0})};
  EXPECT_EQ(seeds.size(), 7u);
}

TEST(Rng, Uniform01Range) {
  auto rng = make_rng(3, Stream::kNoise);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = uniform01(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 20000, 0.5, 0.01);
}

TEST(Rng, NormalMoments) {
  auto rng = make_rng(5, Stream::kNoise);
  double s = 0.0, s2 = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double z = standard_normal(rng);
    ASSERT_TRUE(std::isfinite(z));
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(s2 / n, 1.0, 0.03);
}

TEST(Rng, UniformIndexCoversRange) {
  auto rng = make_rng(9, Stream::kShuffle);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto k = uniform_index(rng, 7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, 1000, 150);
  EXPECT_EQ(uniform_index(rng, 1), 0u);
}

}  // namespace
}  // namespace advmoco
