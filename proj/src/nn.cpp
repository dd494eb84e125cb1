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

#include "advmoco/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <fmt/format.h>

namespace advmoco {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::size_t ParamSet::add(std::string name, std::vector<int> shape) {
  for (const auto& b : blocks_)
    if (b.name == name) throw std::invalid_argument(fmt::format("ParamSet: duplicate block {}", name));
  std::size_t n = 1;
  for (int s : shape) {
    if (s <= 0) throw std::invalid_argument(fmt::format("ParamSet: bad shape for {}", name));
    n *= static_cast<std::size_t>(s);
  }
  ParamBlock b{std::move(name), std::move(shape), size(), n};
  const auto old = values_.size();
  values_.conservativeResize(old + static_cast<Eigen::Index>(n));
  values_.tail(static_cast<Eigen::Index>(n)).setZero();
  blocks_.push_back(std::move(b));
  return blocks_.size() - 1;
}

std::size_t ParamSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].name == name) return i;
  throw std::out_of_range(fmt::format("ParamSet: no block named {}", name));
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].name != other.blocks_[i].name || blocks_[i].shape != other.blocks_[i].shape)
      return false;
  return true;
}

bool ParamSet::operator==(const ParamSet& other) const {
  return same_layout(other) && values_.size() == other.values_.size() &&
         std::memcmp(values_.data(), other.values_.data(),
                     sizeof(double) * static_cast<std::size_t>(values_.size())) == 0;
}

std::array<int, 3> Conv3dGeometry::output_dims(int t, int h, int w) const {
  const std::array<int, 3> in{t, h, w};
  std::array<int, 3> out{};
  for (int i = 0; i < 3; ++i) {
    out[i] = (in[i] + 2 * padding[i] - kernel[i]) / stride[i] + 1;
    if (out[i] <= 0) throw std::invalid_argument("conv3d: input smaller than kernel");
  }
  return out;
}

void conv3d_forward(const Conv3dGeometry& g, std::span<const double> weight,
                    std::span<const double> bias, const Volume& in, Matrix& columns, Volume& out) {
  if (in.channels() != g.in_channels)
    throw std::invalid_argument(fmt::format("conv3d: expected {} input channels, got {}",
                                            g.in_channels, in.channels()));
  const auto [ot, oh, ow] = g.output_dims(in.frames, in.height, in.width);
  const int cin = g.in_channels;
  const int patch = g.patch_size();
  columns.resize(static_cast<Eigen::Index>(ot) * oh * ow, patch);

  const double* src = in.data.data();
  for (int t = 0; t < ot; ++t)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double* row = columns.data() + ((static_cast<std::size_t>(t) * oh + y) * ow + x) * patch;
        for (int dt = 0; dt < g.kernel[0]; ++dt) {
          const int it = t * g.stride[0] - g.padding[0] + dt;
          for (int dy = 0; dy < g.kernel[1]; ++dy) {
            const int iy = y * g.stride[1] - g.padding[1] + dy;
            for (int dx = 0; dx < g.kernel[2]; ++dx, row += cin) {
              const int ix = x * g.stride[2] - g.padding[2] + dx;
              if (it < 0 || it >= in.frames || iy < 0 || iy >= in.height || ix < 0 || ix >= in.width) {
                std::fill_n(row, cin, 0.0);
              } else {
                std::memcpy(row, src + ((static_cast<std::size_t>(it) * in.height + iy) * in.width + ix) * cin,
                            sizeof(double) * cin);
              }
            }
          }
        }
      }

  ConstMap w(weight.data(), patch, g.out_channels);
  Eigen::Map<const Eigen::RowVectorXd> b(bias.data(), g.out_channels);
  out.frames = ot;
  out.height = oh;
  out.width = ow;
  out.data.noalias() = columns * w;
  out.data.rowwise() += b;
}

void conv3d_backward(const Conv3dGeometry& g, std::span<const double> weight, const Volume& in,
                     const Matrix& columns, const Matrix& d_out, std::span<double> d_weight,
                     std::span<double> d_bias, Volume* d_in) {
  const int patch = g.patch_size();
  ConstMap w(weight.data(), patch, g.out_channels);
  if (!d_weight.empty()) {
    MutMap dw(d_weight.data(), patch, g.out_channels);
    Eigen::Map<Eigen::RowVectorXd> db(d_bias.data(), g.out_channels);
    dw.noalias() += columns.transpose() * d_out;
    db += d_out.colwise().sum();
  }
  if (d_in == nullptr) return;

  const Matrix d_columns = d_out * w.transpose();
  const auto [ot, oh, ow] = g.output_dims(in.frames, in.height, in.width);
  const int cin = g.in_channels;
  d_in->frames = in.frames;
  d_in->height = in.height;
  d_in->width = in.width;
  d_in->data.setZero(in.positions(), cin);
  double* dst = d_in->data.data();
  for (int t = 0; t < ot; ++t)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        const double* row = d_columns.data() + ((static_cast<std::size_t>(t) * oh + y) * ow + x) * patch;
        for (int dt = 0; dt < g.kernel[0]; ++dt) {
          const int it = t * g.stride[0] - g.padding[0] + dt;
          for (int dy = 0; dy < g.kernel[1]; ++dy) {
            const int iy = y * g.stride[1] - g.padding[1] + dy;
            for (int dx = 0; dx < g.kernel[2]; ++dx, row += cin) {
              const int ix = x * g.stride[2] - g.padding[2] + dx;
              if (it < 0 || it >= in.frames || iy < 0 || iy >= in.height || ix < 0 || ix >= in.width)
                continue;
              double* target = dst + ((static_cast<std::size_t>(it) * in.height + iy) * in.width + ix) * cin;
              for (int c = 0; c < cin; ++c) target[c] += row[c];
            }
          }
        }
      }
}

void lstm_forward(int hidden, std::span<const double> weight_ih, std::span<const double> weight_hh,
                  std::span<const double> bias, const Matrix& inputs, LstmTape& tape) {
  const int steps = static_cast<int>(inputs.rows());
  const int in = static_cast<int>(inputs.cols());
  ConstMap wih(weight_ih.data(), 4 * hidden, in);
  ConstMap whh(weight_hh.data(), 4 * hidden, hidden);
  Eigen::Map<const Vector> b(bias.data(), 4 * hidden);

  tape.inputs = inputs;
  tape.gates.resize(steps, 4 * hidden);
  tape.cells.resize(steps, hidden);
  tape.hiddens.resize(steps, hidden);
  // Input projections for all steps at once.
  const Matrix projected = inputs * wih.transpose();

  Vector h = Vector::Zero(hidden);
  Vector c = Vector::Zero(hidden);
  for (int t = 0; t < steps; ++t) {
    Vector pre = projected.row(t).transpose() + b;
    pre.noalias() += whh * h;
    for (int j = 0; j < hidden; ++j) {
      const double ig = sigmoid(pre[j]);
      const double fg = sigmoid(pre[hidden + j]);
      const double gg = std::tanh(pre[2 * hidden + j]);
      const double og = sigmoid(pre[3 * hidden + j]);
      c[j] = fg * c[j] + ig * gg;
      h[j] = og * std::tanh(c[j]);
      tape.gates(t, j) = ig;
      tape.gates(t, hidden + j) = fg;
      tape.gates(t, 2 * hidden + j) = gg;
      tape.gates(t, 3 * hidden + j) = og;
    }
    tape.cells.row(t) = c.transpose();
    tape.hiddens.row(t) = h.transpose();
  }
}

void lstm_backward(int hidden, std::span<const double> weight_ih, std::span<const double> weight_hh,
                   const LstmTape& tape, const Matrix& d_hidden, std::span<double> d_weight_ih,
                   std::span<double> d_weight_hh, std::span<double> d_bias, Matrix* d_inputs) {
  const int steps = static_cast<int>(tape.inputs.rows());
  const int in = static_cast<int>(tape.inputs.cols());
  ConstMap wih(weight_ih.data(), 4 * hidden, in);
  ConstMap whh(weight_hh.data(), 4 * hidden, hidden);
  MutMap dwih(d_weight_ih.data(), 4 * hidden, in);
  MutMap dwhh(d_weight_hh.data(), 4 * hidden, hidden);
  Eigen::Map<Vector> db(d_bias.data(), 4 * hidden);

  Matrix d_pre(steps, 4 * hidden);
  Vector dh_next = Vector::Zero(hidden);
  Vector dc_next = Vector::Zero(hidden);
  for (int t = steps - 1; t >= 0; --t) {
    Vector dh = d_hidden.row(t).transpose() + dh_next;
    for (int j = 0; j < hidden; ++j) {
      const double ig = tape.gates(t, j);
      const double fg = tape.gates(t, hidden + j);
      const double gg = tape.gates(t, 2 * hidden + j);
      const double og = tape.gates(t, 3 * hidden + j);
      const double ct = tape.cells(t, j);
      const double c_prev = t > 0 ? tape.cells(t - 1, j) : 0.0;
      const double tanh_c = std::tanh(ct);
      const double dc = dc_next[j] + dh[j] * og * (1.0 - tanh_c * tanh_c);
      d_pre(t, j) = dc * gg * ig * (1.0 - ig);
      d_pre(t, hidden + j) = dc * c_prev * fg * (1.0 - fg);
      d_pre(t, 2 * hidden + j) = dc * ig * (1.0 - gg * gg);
      d_pre(t, 3 * hidden + j) = dh[j] * tanh_c * og * (1.0 - og);
      dc_next[j] = dc * fg;
    }
    dh_next.noalias() = whh.transpose() * d_pre.row(t).transpose();
    if (t > 0) dwhh.noalias() += d_pre.row(t).transpose() * tape.hiddens.row(t - 1);
  }
  dwih.noalias() += d_pre.transpose() * tape.inputs;
  db += d_pre.colwise().sum().transpose();
  if (d_inputs != nullptr) *d_inputs = d_pre * wih;
}

}  // namespace advmoco
