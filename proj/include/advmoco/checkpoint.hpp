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
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "advmoco/nn.hpp"

namespace advmoco {

// Versioned little-endian binary container of named float64 / int64 arrays and
// strings, with a trailing FNV-1a checksum. float64 payloads round-trip
// bit-exactly.
class Checkpoint {
 public:
  static constexpr std::uint32_t kVersion = 1;

  struct Doubles {
    std::vector<std::uint64_t> shape;
    std::vector<double> values;
    bool operator==(const Doubles&) const = default;
  };
  using Ints = std::vector<std::int64_t>;
  using Entry = std::variant<Doubles, Ints, std::string>;

  void put_doubles(const std::string& name, std::vector<std::uint64_t> shape, std::vector<double> values);
  void put_vector(const std::string& name, const Vector& v);
  void put_matrix(const std::string& name, const Matrix& m);
  void put_ints(const std::string& name, Ints values);
  void put_int(const std::string& name, std::int64_t value) { put_ints(name, {value}); }
  void put_string(const std::string& name, std::string value);
  // Values plus a layout descriptor checked on load.
  void put_params(const std::string& name, const ParamSet& params);

  bool contains(const std::string& name) const { return entries_.contains(name); }
  const Doubles& doubles(const std::string& name) const;
  Vector vector(const std::string& name) const;
  Matrix matrix(const std::string& name) const;
  const Ints& ints(const std::string& name) const;
  std::int64_t integer(const std::string& name) const;
  const std::string& string(const std::string& name) const;
  // `into` must already have the stored layout.
  void get_params(const std::string& name, ParamSet& into) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

  bool operator==(const Checkpoint& other) const;

 private:
  const Entry& entry(const std::string& name) const;
  std::map<std::string, Entry> entries_;
};

std::string layout_descriptor(const ParamSet& params);

}  // namespace advmoco
