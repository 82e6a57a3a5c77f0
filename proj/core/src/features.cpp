// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "gpn/features.hpp"

#include <algorithm>
#include <cmath>

namespace gpn {

FeatureVolume voxelize(const ColoredPointCloud& cloud, Index resolution) {
  require(resolution >= 2, ErrorCode::kInvalidArgument, "voxel resolution must be >= 2");
  FeatureVolume vol(resolution, FeatureExtractor::kInputChannels);
  std::vector<Real> counts(static_cast<size_t>(resolution * resolution * resolution), 0.0);
  const Real scale = 0.5 * static_cast<Real>(resolution - 1);
  for (Index n = 0; n < cloud.size(); ++n) {
    Index idx[3];
    for (int a = 0; a < 3; ++a) {
      const Real g = (std::clamp(cloud.positions(a, n), -1.0, 1.0) + 1.0) * scale;
      idx[a] = std::clamp<Index>(static_cast<Index>(std::lround(g)), 0, resolution - 1);
    }
    Real* f = vol.feature(idx[0], idx[1], idx[2]);
    f[1] += cloud.colors(0, n);
    f[2] += cloud.colors(1, n);
    f[3] += cloud.colors(2, n);
    counts[static_cast<size_t>(vol.vertex_index(idx[0], idx[1], idx[2]))] += 1.0;
  }
  for (Index v = 0; v < resolution * resolution * resolution; ++v) {
    const Real c = counts[static_cast<size_t>(v)];
    Real* f = vol.data.data() + v * vol.channels;
    if (c > 0) {
      f[0] = 1.0;
      f[1] /= c;
      f[2] /= c;
      f[3] /= c;
    }
  }
  return vol;
}

FeatureExtractor::FeatureExtractor(FeatureExtractorConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  require(!cfg_.channels.empty() && cfg_.resolution >= 2, ErrorCode::kConfig, "invalid feature extractor config");
  Index in = kInputChannels;
  Index offset = 0;
  for (Index out : cfg_.channels) {
    require(out > 0, ErrorCode::kConfig, "feature channels must be positive");
    layers_.push_back({in, out, offset});
    offset += out * in * 27 + out;
    in = out;
  }
  params_ = VecX::Zero(offset);
  Rng rng(seed);
  for (const auto& l : layers_) {
    const Real bound = 1.0 / std::sqrt(static_cast<Real>(l.in * 27));
    for (Index i = 0; i < l.out * l.in * 27 + l.out; ++i) params_[l.offset + i] = rng.uniform(-bound, bound);
  }
}

FeatureVolume FeatureExtractor::conv_forward(const FeatureVolume& x, const ConvLayout& l, bool relu) const {
  const Index r = x.resolution;
  FeatureVolume y(r, l.out);
  const Real* w = params_.data() + l.offset;  // [out][in][27]
  const Real* b = w + l.out * l.in * 27;
  for (Index k = 0; k < r; ++k) {
    for (Index j = 0; j < r; ++j) {
      for (Index i = 0; i < r; ++i) {
        Real* out = y.feature(i, j, k);
        for (Index o = 0; o < l.out; ++o) out[o] = b[o];
        int tap = 0;
        for (int dz = -1; dz <= 1; ++dz) {
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx, ++tap) {
              const Index ii = i + dx, jj = j + dy, kk = k + dz;
              if (ii < 0 || jj < 0 || kk < 0 || ii >= r || jj >= r || kk >= r) continue;
              const Real* in = x.feature(ii, jj, kk);
              for (Index o = 0; o < l.out; ++o) {
                const Real* wo = w + (o * l.in) * 27 + tap;
                Real acc = 0.0;
                for (Index c = 0; c < l.in; ++c) acc += wo[c * 27] * in[c];
                out[o] += acc;
              }
            }
          }
        }
        if (relu) {
          for (Index o = 0; o < l.out; ++o) out[o] = std::max(out[o], 0.0);
        }
      }
    }
  }
  return y;
}

FeatureVolume FeatureExtractor::forward(const ColoredPointCloud& cloud, Cache* cache) const {
  FeatureVolume h = voxelize(cloud, cfg_.resolution);
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(h);
  }
  for (size_t li = 0; li < layers_.size(); ++li) {
    h = conv_forward(h, layers_[li], li + 1 < layers_.size());
    if (cache) cache->activations.push_back(h);
  }
  return h;
}

void FeatureExtractor::backward(const Cache& cache, const FeatureVolume& d_out, std::span<Real> grads) const {
  require(cache.activations.size() == layers_.size() + 1, ErrorCode::kShapeMismatch, "feature cache is stale");
  FeatureVolume delta = d_out;
  for (size_t li = layers_.size(); li-- > 0;) {
    const auto& l = layers_[li];
    const FeatureVolume& x = cache.activations[li];
    const FeatureVolume& y = cache.activations[li + 1];
    const bool relu = li + 1 < layers_.size();
    if (relu) {
      for (Index v = 0; v < delta.data.size(); ++v) {
        if (y.data[v] <= 0.0) delta.data[v] = 0.0;
      }
    }
    const Index r = x.resolution;
    const Real* w = params_.data() + l.offset;
    Real* gw = grads.data() + l.offset;
    Real* gb = gw + l.out * l.in * 27;
    FeatureVolume d_in(r, l.in);
    for (Index k = 0; k < r; ++k) {
      for (Index j = 0; j < r; ++j) {
        for (Index i = 0; i < r; ++i) {
          const Real* dy = delta.feature(i, j, k);
          for (Index o = 0; o < l.out; ++o) gb[o] += dy[o];
          int tap = 0;
          for (int dz = -1; dz <= 1; ++dz) {
            for (int dyo = -1; dyo <= 1; ++dyo) {
              for (int dx = -1; dx <= 1; ++dx, ++tap) {
                const Index ii = i + dx, jj = j + dyo, kk = k + dz;
                if (ii < 0 || jj < 0 || kk < 0 || ii >= r || jj >= r || kk >= r) continue;
                const Real* in = x.feature(ii, jj, kk);
                Real* din = d_in.feature(ii, jj, kk);
                for (Index o = 0; o < l.out; ++o) {
                  if (dy[o] == 0.0) continue;
                  const Index base = (o * l.in) * 27 + tap;
                  for (Index c = 0; c < l.in; ++c) {
                    gw[base + c * 27] += dy[o] * in[c];
                    din[c] += dy[o] * w[base + c * 27];
                  }
                }
              }
            }
          }
        }
      }
    }
    delta = std::move(d_in);
  }
}

}  // namespace gpn
