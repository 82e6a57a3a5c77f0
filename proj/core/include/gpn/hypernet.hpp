// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gpn/field.hpp"
#include "gpn/nn.hpp"

namespace gpn {

struct HypernetConfig {
  std::vector<Index> trunk_widths{256, 512};
  /// Output size of each per-layer head. Empty means "derive from the field
  /// architecture"; when given it must match the architecture exactly.
  std::vector<Index> head_sizes;
  /// Scale of the head weights at init; heads start close to a fixed,
  /// fan-in-initialized field.
  Real head_weight_scale = 1e-3;
};

/// Maps a latent code to every weight and bias of the radiance-field MLP:
/// a shared ReLU trunk followed by one linear head per target layer.
class Hypernet {
 public:
  Hypernet() = default;
  Hypernet(Index latent_dim, HypernetConfig cfg, FieldArchitecture arch, std::uint64_t seed);

  Index latent_dim() const { return latent_dim_; }
  const HypernetConfig& config() const { return cfg_; }
  const FieldArchitecture& architecture() const { return arch_; }
  Index param_count() const { return static_cast<Index>(params_.size()); }
  Index output_size() const { return output_size_; }
  VecX& params() { return params_; }
  const VecX& params() const { return params_; }

  struct Cache {
    MlpCache trunk;
  };

  FieldWeights generate(const VecX& z) const { return forward(z, nullptr); }
  FieldWeights forward(const VecX& z, Cache* cache) const;
  /// Accumulates d loss / d psi into `grads` and returns d loss / d z.
  VecX backward(const Cache& cache, const VecX& d_flat, std::span<Real> grads) const;

 private:
  Index latent_dim_ = 0;
  HypernetConfig cfg_;
  FieldArchitecture arch_;
  MlpLayout trunk_;
  std::vector<DenseLayout> heads_;
  std::vector<Index> head_out_offsets_;
  Index output_size_ = 0;
  VecX params_;
};

}  // namespace gpn
