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
#include <initializer_list>
#include <random>

namespace advmoco {

// Stream tags keep independent consumers of randomness from aliasing.
enum class Stream : std::uint64_t {
  kDataset = 1,
  kShuffle = 2,
  kQueryView = 3,
  kKeyView = 4,
  kRandomMask = 5,
  kInitEncoder = 6,
  kInitGenerator = 7,
  kPrefill = 8,
  kProbe = 9,
  kSubclip = 10,
  kNoise = 11,
};

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based derivation: the same (seed, stream, path) always yields the
// same generator, independent of how many other streams were consumed.
std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                          std::initializer_list<std::uint64_t> path = {});

std::mt19937_64 make_rng(std::uint64_t seed, Stream stream,
                         std::initializer_list<std::uint64_t> path = {});

// Uniform double in [0,1) from 53 high bits; stable across standard libraries.
double uniform01(std::mt19937_64& rng);
double uniform(std::mt19937_64& rng, double lo, double hi);
// Box-Muller, no cached second value so the stream position is explicit.
double standard_normal(std::mt19937_64& rng);
// Uniform integer in [0, n).
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n);

}  // namespace advmoco
