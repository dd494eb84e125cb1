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

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace advmoco {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct ParamBlock {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Named tensors over one flat float64 buffer. Gradients and optimizer state
// share the layout as plain Vectors of size().
class ParamSet {
 public:
  std::size_t add(std::string name, std::vector<int> shape);

  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  std::size_t find(std::string_view name) const;

  std::span<double> view(std::size_t block) {
    return {values_.data() + blocks_[block].offset, blocks_[block].size};
  }
  std::span<const double> view(std::size_t block) const {
    return {values_.data() + blocks_[block].offset, blocks_[block].size};
  }

  Vector& values() { return values_; }
  const Vector& values() const { return values_; }

  bool same_layout(const ParamSet& other) const;
  bool operator==(const ParamSet& other) const;

 private:
  std::vector<ParamBlock> blocks_;
  Vector values_;
};

inline std::span<double> segment(Vector& v, const ParamBlock& b) {
  return {v.data() + b.offset, b.size};
}

// Activations of a 3D feature map: one row per (t, y, x) position, one column
// per channel.
struct Volume {
  int frames = 0;
  int height = 0;
  int width = 0;
  Matrix data;

  int channels() const { return static_cast<int>(data.cols()); }
  int positions() const { return frames * height * width; }
};

struct Conv3dGeometry {
  int in_channels = 0;
  int out_channels = 0;
  std::array<int, 3> kernel{3, 3, 3};
  std::array<int, 3> stride{1, 1, 1};
  std::array<int, 3> padding{0, 0, 0};

  std::array<int, 3> output_dims(int t, int h, int w) const;
  int patch_size() const { return kernel[0] * kernel[1] * kernel[2] * in_channels; }
};

// Weight layout: patch_size() x out_channels, row-major, patch index ordered
// (dt, dy, dx, c_in).
void conv3d_forward(const Conv3dGeometry& g, std::span<const double> weight,
                    std::span<const double> bias, const Volume& in, Matrix& columns,
                    Volume& out);

// Accumulates into d_weight/d_bias (skipped when d_weight is empty). d_in
// (optional) is overwritten.
void conv3d_backward(const Conv3dGeometry& g, std::span<const double> weight,
                     const Volume& in, const Matrix& columns, const Matrix& d_out,
                     std::span<double> d_weight, std::span<double> d_bias, Volume* d_in);

struct LstmTape {
  Matrix inputs;   // T x in
  Matrix gates;    // T x 4h, post-activation, order (i, f, g, o)
  Matrix cells;    // T x h
  Matrix hiddens;  // T x h
};

// weight_ih: 4h x in, weight_hh: 4h x h (row-major), bias: 4h.
void lstm_forward(int hidden, std::span<const double> weight_ih, std::span<const double> weight_hh,
                  std::span<const double> bias, const Matrix& inputs, LstmTape& tape);

// d_hidden: T x h gradient on every emitted hidden state. Accumulates
// parameter gradients; d_inputs (optional) is overwritten.
void lstm_backward(int hidden, std::span<const double> weight_ih, std::span<const double> weight_hh,
                   const LstmTape& tape, const Matrix& d_hidden, std::span<double> d_weight_ih,
                   std::span<double> d_weight_hh, std::span<double> d_bias, Matrix* d_inputs);

}  // namespace advmoco
