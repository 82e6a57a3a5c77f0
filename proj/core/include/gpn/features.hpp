// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "gpn/field.hpp"
#include "gpn/geometry.hpp"

namespace gpn {

struct FeatureExtractorConfig {
  Index resolution = 16;
  /// Output channels of each 3x3x3 convolution; the last entry is the feature width F.
  std::vector<Index> channels{8, 8};

  Index feature_dim() const { return channels.empty() ? 0 : channels.back(); }
};

/// Occupancy + mean color splatted to the nearest grid vertex (4 channels).
FeatureVolume voxelize(const ColoredPointCloud& cloud, Index resolution);

/// Small convolutional stack turning the voxelized cloud into a feature
/// volume: a single-volume stand-in for a triple-plane UNet extractor.
class FeatureExtractor {
 public:
  static constexpr Index kInputChannels = 4;

  FeatureExtractor() = default;
  FeatureExtractor(FeatureExtractorConfig cfg, std::uint64_t seed);

  const FeatureExtractorConfig& config() const { return cfg_; }
  Index param_count() const { return static_cast<Index>(params_.size()); }
  VecX& params() { return params_; }
  const VecX& params() const { return params_; }

  struct Cache {
    std::vector<FeatureVolume> activations;
  };

  FeatureVolume forward(const ColoredPointCloud& cloud, Cache* cache) const;
  /// Accumulates parameter gradients for d loss / d output volume.
  void backward(const Cache& cache, const FeatureVolume& d_out, std::span<Real> grads) const;

 private:
  struct ConvLayout {
    Index in = 0;
    Index out = 0;
    Index offset = 0;
  };
  FeatureVolume conv_forward(const FeatureVolume& x, const ConvLayout& l, bool relu) const;

  FeatureExtractorConfig cfg_;
  std::vector<ConvLayout> layers_;
  VecX params_;
};

}  // namespace gpn
