// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "gpn/hypernet.hpp"

#include <cmath>

namespace gpn {

Hypernet::Hypernet(Index latent_dim, HypernetConfig cfg, FieldArchitecture arch, std::uint64_t seed)
    : latent_dim_(latent_dim), cfg_(std::move(cfg)), arch_(arch) {
  require(latent_dim_ >= 1, ErrorCode::kConfig, "hypernetwork latent dim must be >= 1");
  require(!cfg_.trunk_widths.empty(), ErrorCode::kConfig, "hypernetwork trunk must have at least one layer");
  const MlpLayout target = arch_.layout();

  std::vector<Index> sizes;
  for (const auto& l : target.layers()) sizes.push_back(l.size());
  if (!cfg_.head_sizes.empty()) {
    Index total = 0;
    for (Index s : cfg_.head_sizes) total += s;
    require(cfg_.head_sizes == sizes, ErrorCode::kConfig,
            "hypernetwork heads emit " + std::to_string(total) + " values in " +
                std::to_string(cfg_.head_sizes.size()) + " heads but the field needs " +
                std::to_string(weight_count(arch_)) + " in " + std::to_string(sizes.size()));
  }
  cfg_.head_sizes = sizes;

  std::vector<Index> widths{latent_dim_};
  widths.insert(widths.end(), cfg_.trunk_widths.begin(), cfg_.trunk_widths.end());
  trunk_ = MlpLayout(widths, Activation::kRelu, Activation::kRelu);
  Index offset = trunk_.end_offset();
  Index out_offset = 0;
  for (Index s : sizes) {
    heads_.push_back({trunk_.out_dim(), s, offset});
    head_out_offsets_.push_back(out_offset);
    offset += heads_.back().size();
    out_offset += s;
  }
  output_size_ = out_offset;
  params_ = VecX::Zero(offset);

  Rng rng(seed);
  auto p = as_span(params_);
  init_mlp_uniform(p, trunk_, rng);
  const Real w_bound = cfg_.head_weight_scale / std::sqrt(static_cast<Real>(trunk_.out_dim()));
  for (size_t h = 0; h < heads_.size(); ++h) {
    auto w = weight_view(p, heads_[h]);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-w_bound, w_bound);
    // The head bias is the generated layer at z-independent init: a standard
    // fan-in-scaled draw for that layer's weights and biases.
    const Real fan_bound = 1.0 / std::sqrt(static_cast<Real>(target.layers()[h].in));
    auto b = bias_view(p, heads_[h]);
    for (Index i = 0; i < b.size(); ++i) b[i] = rng.uniform(-fan_bound, fan_bound);
  }
}

FieldWeights Hypernet::forward(const VecX& z, Cache* cache) const {
  require(z.size() == latent_dim_, ErrorCode::kShapeMismatch,
          "latent has dim " + std::to_string(z.size()) + ", hypernetwork expects " + std::to_string(latent_dim_));
  require(z.allFinite(), ErrorCode::kNonFinite, "latent code is not finite");
  const auto p = as_span(params_);
  MatX zin = z;
  const MatX h = trunk_.forward(p, zin, cache ? &cache->trunk : nullptr);
  FieldWeights out;
  out.arch = arch_;
  out.flat.resize(output_size_);
  for (size_t i = 0; i < heads_.size(); ++i) {
    const auto& head = heads_[i];
    out.flat.segment(head_out_offsets_[i], head.out).noalias() = weight_view(p, head) * h.col(0);
    out.flat.segment(head_out_offsets_[i], head.out) += bias_view(p, head);
  }
  return out;
}

VecX Hypernet::backward(const Cache& cache, const VecX& d_flat, std::span<Real> grads) const {
  require(d_flat.size() == output_size_, ErrorCode::kShapeMismatch, "hypernetwork output gradient has wrong size");
  const auto p = as_span(params_);
  const VecX h = cache.trunk.activations.back().col(0);
  VecX d_h = VecX::Zero(h.size());
  for (size_t i = 0; i < heads_.size(); ++i) {
    const auto& head = heads_[i];
    const auto d = d_flat.segment(head_out_offsets_[i], head.out);
    weight_view(grads, head).noalias() += d * h.transpose();
    bias_view(grads, head) += d;
    d_h.noalias() += weight_view(p, head).transpose() * d;
  }
  MatX d_z = trunk_.backward(p, cache.trunk, d_h, grads, true);
  return d_z.col(0);
}

}  // namespace gpn
