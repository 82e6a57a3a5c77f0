// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gpn/geometry.hpp"
#include "gpn/nn.hpp"

namespace gpn {

inline constexpr Real kLogvarMin = -10.0;
inline constexpr Real kLogvarMax = 10.0;

/// Diagonal Gaussian over the latent space; logvar is the natural log of the variance.
struct GaussianLatent {
  VecX mean;
  VecX logvar;

  Index dim() const { return mean.size(); }
};

struct EncoderConfig {
  Index latent_dim = 256;
  std::vector<Index> widths{64, 128, 256};
  Index input_points = 2048;
  /// Bias of the log-variance head at initialization.
  Real initial_logvar = 0.0;

  void validate() const;
};

/// z = mean + exp(logvar / 2) * eta with eta ~ N(0, I) drawn from `seed`.
VecX reparameterize(const GaussianLatent& g, std::uint64_t seed);
/// Same map with caller-supplied noise (kept for backpropagation).
VecX reparameterize(const GaussianLatent& g, const VecX& eta);
VecX standard_normal(Index dim, std::uint64_t seed);

/// PointNet-style encoder: shared per-point MLP over (x, y, z, r, g, b),
/// symmetric max pooling, then linear heads for mean and log-variance.
class Encoder {
 public:
  Encoder() = default;
  Encoder(EncoderConfig cfg, std::uint64_t seed);

  const EncoderConfig& config() const { return cfg_; }
  Index param_count() const { return static_cast<Index>(params_.size()); }
  VecX& params() { return params_; }
  const VecX& params() const { return params_; }

  struct Cache {
    Index points = 0;
    MlpCache point_mlp;
    VecX pooled;
    std::vector<Index> argmax;
    VecX raw_logvar;
  };

  GaussianLatent encode(const ColoredPointCloud& cloud) const { return forward(cloud, nullptr); }
  GaussianLatent forward(const ColoredPointCloud& cloud, Cache* cache) const;
  /// Accumulates parameter gradients; returns d loss / d input as a 6 x N matrix.
  MatX backward(const Cache& cache, const VecX& d_mean, const VecX& d_logvar, std::span<Real> grads,
                bool need_input_grad = false) const;

 private:
  EncoderConfig cfg_;
  MlpLayout point_mlp_;
  DenseLayout mean_head_;
  DenseLayout logvar_head_;
  VecX params_;
};

}  // namespace gpn
