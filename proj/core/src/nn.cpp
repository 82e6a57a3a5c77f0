// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "gpn/nn.hpp"

#include <cmath>

namespace gpn {

MlpLayout::MlpLayout(std::vector<Index> widths, Activation hidden, Activation output, Index base_offset)
    : widths_(std::move(widths)), hidden_(hidden), output_(output), base_offset_(base_offset) {
  require(widths_.size() >= 2, ErrorCode::kConfig, "an MLP needs at least an input and an output width");
  Index offset = base_offset_;
  for (size_t i = 0; i + 1 < widths_.size(); ++i) {
    require(widths_[i] > 0 && widths_[i + 1] > 0, ErrorCode::kConfig, "MLP widths must be positive");
    DenseLayout l{widths_[i], widths_[i + 1], offset};
    offset += l.size();
    layers_.push_back(l);
  }
  param_count_ = offset - base_offset_;
}

MatX MlpLayout::forward(std::span<const Real> params, const MatX& x, MlpCache* cache) const {
  require(x.rows() == in_dim(), ErrorCode::kShapeMismatch, "MLP input has the wrong feature count");
  require(static_cast<Index>(params.size()) >= end_offset(), ErrorCode::kShapeMismatch,
          "MLP parameter vector too short");
  // Activations are written in place (into the cache when there is one);
  // bias and ReLU are applied in a single pass over each output.
  std::vector<MatX> local;
  std::vector<MatX>& acts = cache ? cache->activations : local;
  acts.clear();
  if (cache) {
    acts.reserve(layers_.size() + 1);
    acts.push_back(x);
  }
  const MatX* h = &x;
  MatX out;
  for (size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    MatX y(l.out, h->cols());
    y.noalias() = weight_view(params, l) * *h;
    const auto b = bias_view(params, l);
    const bool relu = activation_of(i) == Activation::kRelu;
    for (Index c = 0; c < y.cols(); ++c) {
      Real* col = y.col(c).data();
      for (Index r = 0; r < l.out; ++r) {
        const Real v = col[r] + b[r];
        col[r] = relu ? (v > 0.0 ? v : 0.0) : v;
      }
    }
    if (cache) {
      acts.push_back(std::move(y));
      h = &acts.back();
    } else {
      out = std::move(y);
      h = &out;
    }
  }
  return cache ? acts.back() : out;
}

MatX MlpLayout::backward(std::span<const Real> params, const MlpCache& cache, MatX d_out, std::span<Real> grads,
                         bool need_input_grad) const {
  require(cache.activations.size() == layers_.size() + 1, ErrorCode::kShapeMismatch, "MLP cache is stale");
  MatX delta = std::move(d_out);
  for (size_t li = layers_.size(); li-- > 0;) {
    const auto& l = layers_[li];
    if (activation_of(li) == Activation::kRelu) {
      delta = (cache.activations[li + 1].array() > 0.0).select(delta, 0.0);
    }
    const MatX& input = cache.activations[li];
    weight_view(grads, l).noalias() += delta * input.transpose();
    bias_view(grads, l) += delta.rowwise().sum();
    if (li == 0 && !need_input_grad) return {};
    MatX next(l.in, delta.cols());
    next.noalias() = weight_view(params, l).transpose() * delta;
    delta = std::move(next);
  }
  return delta;
}

void init_dense_uniform(std::span<Real> params, const DenseLayout& layer, Rng& rng) {
  const Real bound = 1.0 / std::sqrt(static_cast<Real>(layer.in));
  for (Index i = 0; i < layer.size(); ++i) params[static_cast<size_t>(layer.offset + i)] = rng.uniform(-bound, bound);
}

void init_mlp_uniform(std::span<Real> params, const MlpLayout& mlp, Rng& rng) {
  for (const auto& l : mlp.layers()) init_dense_uniform(params, l, rng);
}

void AdamW::step(std::span<Real> params, std::span<const Real> grads) {
  require(params.size() == static_cast<size_t>(m_.size()) && grads.size() == params.size(),
          ErrorCode::kShapeMismatch, "optimizer state does not match parameter count");
  ++t_;
  const Real bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<Real>(t_));
  const Real bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<Real>(t_));
  const Real step = cfg_.lr / bc1;
  const Real decay = 1.0 - cfg_.lr * cfg_.weight_decay;
  const Real b1 = cfg_.beta1, b2 = cfg_.beta2, eps = cfg_.eps, inv_bc2 = 1.0 / bc2;
  Real* m = m_.data();
  Real* v = v_.data();
  Real* p = params.data();
  const Real* g = grads.data();
  const Index n = m_.size();
  for (Index i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] = decay * p[i] - step * m[i] / (std::sqrt(v[i] * inv_bc2) + eps);
  }
}

void AdamW::restore(std::int64_t t, VecX m, VecX v) {
  require(m.size() == m_.size() && v.size() == v_.size(), ErrorCode::kShapeMismatch,
          "restored optimizer moments have the wrong size");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

Real clip_global_norm(std::span<const std::span<Real>> blocks, Real max_norm) {
  Real sq = 0.0;
  for (auto b : blocks) sq += ConstVecMap(b.data(), static_cast<Index>(b.size())).squaredNorm();
  const Real norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const Real s = max_norm / norm;
    for (auto b : blocks) VecMap(b.data(), static_cast<Index>(b.size())) *= s;
  }
  return norm;
}

}  // namespace gpn
