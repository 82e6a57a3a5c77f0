// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gpn/common.hpp"

namespace gpn {

enum class Activation { kIdentity, kRelu };

/// Offsets of one fully connected layer inside a flat parameter vector.
/// The weight block is out x in, column-major, followed by the out-sized bias.
struct DenseLayout {
  Index in = 0;
  Index out = 0;
  Index offset = 0;

  Index weight_size() const { return in * out; }
  Index size() const { return in * out + out; }
  Index bias_offset() const { return offset + in * out; }
};

using ConstMatMap = Eigen::Map<const MatX>;
using MatMap = Eigen::Map<MatX>;
using ConstVecMap = Eigen::Map<const VecX>;
using VecMap = Eigen::Map<VecX>;

inline ConstMatMap weight_view(std::span<const Real> p, const DenseLayout& l) {
  return {p.data() + l.offset, l.out, l.in};
}
inline ConstVecMap bias_view(std::span<const Real> p, const DenseLayout& l) {
  return {p.data() + l.bias_offset(), l.out};
}
inline MatMap weight_view(std::span<Real> p, const DenseLayout& l) { return {p.data() + l.offset, l.out, l.in}; }
inline VecMap bias_view(std::span<Real> p, const DenseLayout& l) { return {p.data() + l.bias_offset(), l.out}; }

/// Activations saved by a forward pass; activations[l] is the input of layer l
/// and activations.back() the network output.
struct MlpCache {
  std::vector<MatX> activations;
};

/// A stack of dense layers evaluated over column batches (features x batch).
/// Parameters live outside the object so the same layout serves directly
/// trained networks and hypernetwork-generated ones.
class MlpLayout {
 public:
  MlpLayout() = default;
  /// widths = {input, hidden..., output}; hidden layers always use `hidden`.
  MlpLayout(std::vector<Index> widths, Activation hidden, Activation output, Index base_offset = 0);

  Index param_count() const { return param_count_; }
  Index in_dim() const { return widths_.front(); }
  Index out_dim() const { return widths_.back(); }
  Index end_offset() const { return base_offset_ + param_count_; }
  const std::vector<DenseLayout>& layers() const { return layers_; }
  const std::vector<Index>& widths() const { return widths_; }
  Activation activation_of(size_t layer) const { return layer + 1 == layers_.size() ? output_ : hidden_; }

  MatX forward(std::span<const Real> params, const MatX& x, MlpCache* cache) const;
  /// Accumulates parameter gradients into `grads` and returns d loss / d input.
  /// `need_input_grad = false` skips the last (first-layer) input product.
  MatX backward(std::span<const Real> params, const MlpCache& cache, MatX d_out, std::span<Real> grads,
                bool need_input_grad = true) const;

 private:
  std::vector<Index> widths_;
  std::vector<DenseLayout> layers_;
  Activation hidden_ = Activation::kRelu;
  Activation output_ = Activation::kIdentity;
  Index base_offset_ = 0;
  Index param_count_ = 0;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
void init_dense_uniform(std::span<Real> params, const DenseLayout& layer, Rng& rng);
void init_mlp_uniform(std::span<Real> params, const MlpLayout& mlp, Rng& rng);

struct AdamWConfig {
  Real lr = 1e-3;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;
  Real weight_decay = 1e-2;
};

/// Adaptive moments with decoupled weight decay.
class AdamW {
 public:
  AdamW() = default;
  AdamW(Index size, AdamWConfig cfg) : cfg_(cfg), m_(VecX::Zero(size)), v_(VecX::Zero(size)) {}

  void step(std::span<Real> params, std::span<const Real> grads);

  const AdamWConfig& config() const { return cfg_; }
  void set_lr(Real lr) { cfg_.lr = lr; }
  std::int64_t steps() const { return t_; }
  const VecX& first_moment() const { return m_; }
  const VecX& second_moment() const { return v_; }
  void restore(std::int64_t t, VecX m, VecX v);

 private:
  AdamWConfig cfg_;
  VecX m_;
  VecX v_;
  std::int64_t t_ = 0;
};

/// Rescales all gradient blocks jointly so their global L2 norm is <= max_norm.
/// Returns the norm before clipping.
Real clip_global_norm(std::span<const std::span<Real>> blocks, Real max_norm);

inline Real softplus(Real x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline Real sigmoid(Real x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace gpn
