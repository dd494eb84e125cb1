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

#include "advmoco/losses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace advmoco {

namespace {

void check_unit_rows(const Matrix& m, const char* what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double n = m.row(r).norm();
    if (!(std::abs(n - 1.0) <= kUnitNormTolerance))
      throw std::invalid_argument(fmt::format("{} row {} has norm {}, expected 1", what, r, n));
  }
}

LossResult contrastive(const ContrastiveBatch& batch, bool use_weights) {
  const auto& q = batch.queries;
  const auto& pos = batch.positives;
  const auto& neg = batch.negatives;
  if (!(batch.temperature > 0.0)) throw std::invalid_argument("contrastive loss: temperature must be > 0");
  if (q.rows() == 0) throw std::invalid_argument("contrastive loss: empty batch");
  if (neg.rows() == 0) throw std::invalid_argument("contrastive loss: no negatives");
  if (pos.rows() != q.rows() || pos.cols() != q.cols() || neg.cols() != q.cols())
    throw std::invalid_argument("contrastive loss: shape mismatch");
  if (use_weights && batch.weights.size() != neg.rows())
    throw std::invalid_argument(fmt::format("decayed loss: {} weights for {} negatives", batch.weights.size(), neg.rows()));
  check_unit_rows(q, "query");
  check_unit_rows(pos, "positive");
  check_unit_rows(neg, "negative");

  const double inv_tau = 1.0 / batch.temperature;
  const Eigen::Index B = q.rows();
  const Eigen::Index N = neg.rows();
  const Matrix neg_logits = (q * neg.transpose()) * inv_tau;  // B x N

  LossResult r;
  r.grad_queries.setZero(B, q.cols());
  for (Eigen::Index b = 0; b < B; ++b) {
    const double lp = q.row(b).dot(pos.row(b)) * inv_tau;
    double mx = lp;
    for (Eigen::Index i = 0; i < N; ++i) {
      const double w = use_weights ? batch.weights[i] : 1.0;
      if (w > 0.0) mx = std::max(mx, neg_logits(b, i));
    }
    double z = std::exp(lp - mx);
    Vector term(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      const double w = use_weights ? batch.weights[i] : 1.0;
      term[i] = w > 0.0 ? w * std::exp(neg_logits(b, i) - mx) : 0.0;
      z += term[i];
    }
    r.value += std::log(z) + mx - lp;
    // d/dq = ((p_pos - 1) k+ + sum_i p_i n_i) / tau
    const double p_pos = std::exp(lp - mx) / z;
    r.grad_queries.row(b) = (p_pos - 1.0) * pos.row(b) + (term.transpose() / z) * neg;
  }
  r.value /= static_cast<double>(B);
  r.grad_queries *= inv_tau / static_cast<double>(B);
  return r;
}

}  // namespace

LossResult infonce(const ContrastiveBatch& batch) { return contrastive(batch, false); }

LossResult decayed_infonce(const ContrastiveBatch& batch) { return contrastive(batch, true); }

LossResult discriminator_objective(const ContrastiveBatch& batch) { return decayed_infonce(batch); }

LossResult generator_objective(const Matrix& query_embeddings, const Matrix& full_embeddings) {
  if (query_embeddings.rows() != full_embeddings.rows() || query_embeddings.cols() != full_embeddings.cols())
    throw std::invalid_argument("generator_objective: shape mismatch");
  if (query_embeddings.rows() == 0) throw std::invalid_argument("generator_objective: empty batch");
  const double B = static_cast<double>(query_embeddings.rows());
  const Matrix diff = query_embeddings - full_embeddings;
  LossResult r;
  r.value = diff.cwiseAbs().rowwise().sum().mean();
  r.grad_queries = diff.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }) / B;
  return r;
}

}  // namespace advmoco
