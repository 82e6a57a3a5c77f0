// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "gpn/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gpn {

std::vector<Index> FieldArchitecture::widths() const {
  std::vector<Index> w;
  w.push_back(input_dim());
  for (Index i = 0; i + 1 < depth; ++i) w.push_back(hidden);
  w.push_back(output_dim);
  return w;
}

MlpLayout FieldArchitecture::layout() const {
  validate();
  return MlpLayout(widths(), Activation::kRelu, Activation::kIdentity);
}

void FieldArchitecture::validate() const {
  require(depth >= 2, ErrorCode::kConfig, "field MLP depth must be >= 2");
  require(output_dim == 4, ErrorCode::kConfig, "field MLP must output rgb + sigma");
  require(hidden >= 1 && pe_bands >= 0 && feature_dim >= 0, ErrorCode::kConfig, "invalid field architecture");
}

Index weight_count(const FieldArchitecture& arch) {
  arch.validate();
  const auto w = arch.widths();
  Index p = 0;
  for (size_t i = 0; i + 1 < w.size(); ++i) p += w[i] * w[i + 1] + w[i + 1];
  return p;
}

void FieldWeights::validate() const {
  require(flat.size() == weight_count(arch), ErrorCode::kShapeMismatch,
          "field weight vector length " + std::to_string(flat.size()) + " does not match architecture (" +
              std::to_string(weight_count(arch)) + ")");
}

VecX positional_encode(const Vec3& p, Index bands) {
  require(bands >= 0, ErrorCode::kInvalidArgument, "positional encoding needs bands >= 0");
  VecX out(3 + 6 * bands);
  out.head<3>() = p;
  Real freq = std::numbers::pi;
  for (Index b = 0; b < bands; ++b) {
    for (int k = 0; k < 3; ++k) {
      out[3 + 6 * b + k] = std::sin(freq * p[k]);
      out[3 + 6 * b + 3 + k] = std::cos(freq * p[k]);
    }
    freq *= 2.0;
  }
  return out;
}

MatX positional_encode(const Mat3X& positions, Index bands) {
  require(bands >= 0, ErrorCode::kInvalidArgument, "positional encoding needs bands >= 0");
  MatX out(3 + 6 * bands, positions.cols());
  for (Index c = 0; c < positions.cols(); ++c) {
    Real* o = out.col(c).data();
    for (int k = 0; k < 3; ++k) o[k] = positions(k, c);
    if (bands == 0) continue;
    // Higher octaves by the double-angle recurrence; the error grows by at
    // most 2x per band, far below anything the MLP can resolve.
    Real s[3], co[3];
    for (int k = 0; k < 3; ++k) {
      s[k] = std::sin(std::numbers::pi * positions(k, c));
      co[k] = std::cos(std::numbers::pi * positions(k, c));
    }
    for (Index b = 0; b < bands; ++b) {
      for (int k = 0; k < 3; ++k) {
        o[3 + 6 * b + k] = s[k];
        o[3 + 6 * b + 3 + k] = co[k];
        const Real s2 = 2.0 * s[k] * co[k];
        co[k] = (co[k] - s[k]) * (co[k] + s[k]);
        s[k] = s2;
      }
    }
  }
  return out;
}

namespace {

struct TrilinearCell {
  Index i0, j0, k0;
  Real fx, fy, fz;
};

TrilinearCell locate(const Vec3& p, Index res) {
  const Real scale = 0.5 * static_cast<Real>(res - 1);
  TrilinearCell c{};
  Real g[3];
  for (int a = 0; a < 3; ++a) g[a] = (std::clamp(p[a], -1.0, 1.0) + 1.0) * scale;
  auto split = [&](Real v, Index& i, Real& f) {
    i = std::min<Index>(static_cast<Index>(std::floor(v)), res - 2);
    f = v - static_cast<Real>(i);
  };
  split(g[0], c.i0, c.fx);
  split(g[1], c.j0, c.fy);
  split(g[2], c.k0, c.fz);
  return c;
}

}  // namespace

VecX FeatureVolume::sample(const Vec3& p) const {
  require(resolution >= 2, ErrorCode::kInvalidArgument, "feature volume resolution must be >= 2");
  const auto c = locate(p, resolution);
  VecX out = VecX::Zero(channels);
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const Real w = (dx ? c.fx : 1 - c.fx) * (dy ? c.fy : 1 - c.fy) * (dz ? c.fz : 1 - c.fz);
        if (w == 0.0) continue;
        out += w * ConstVecMap(feature(c.i0 + dx, c.j0 + dy, c.k0 + dz), channels);
      }
    }
  }
  return out;
}

MatX FeatureVolume::sample(const Mat3X& positions) const {
  MatX out(channels, positions.cols());
  for (Index m = 0; m < positions.cols(); ++m) out.col(m) = sample(Vec3(positions.col(m)));
  return out;
}

void FeatureVolume::scatter_add(const Mat3X& positions, const MatX& grad) {
  for (Index m = 0; m < positions.cols(); ++m) {
    const auto c = locate(positions.col(m), resolution);
    for (int dz = 0; dz < 2; ++dz) {
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const Real w = (dx ? c.fx : 1 - c.fx) * (dy ? c.fy : 1 - c.fy) * (dz ? c.fz : 1 - c.fz);
          if (w == 0.0) continue;
          VecMap(feature(c.i0 + dx, c.j0 + dy, c.k0 + dz), channels) += w * grad.col(m);
        }
      }
    }
  }
}

namespace {

MatX field_input(const FieldArchitecture& arch, const Mat3X& positions, const FeatureVolume* volume) {
  MatX encoded = positional_encode(positions, arch.pe_bands);
  if (arch.feature_dim == 0) return encoded;
  require(volume != nullptr && volume->channels == arch.feature_dim, ErrorCode::kShapeMismatch,
          "field architecture expects a feature volume with " + std::to_string(arch.feature_dim) + " channels");
  MatX input(arch.input_dim(), positions.cols());
  input.topRows(encoded.rows()) = encoded;
  input.bottomRows(arch.feature_dim) = volume->sample(positions);
  return input;
}

}  // namespace

// Batches are padded to a multiple of this with copies of the first column so
// every sample goes through the same GEMM kernel path: a sample's value then
// does not depend on which batch it was evaluated in.
constexpr Index kColumnQuantum = 16;

Mat4X field_forward(const FieldWeights& weights, const Mat3X& positions, const FeatureVolume* volume,
                    FieldCache* cache) {
  weights.validate();
  const MlpLayout layout = weights.arch.layout();
  const Index n = positions.cols();
  if (n == 0) {
    if (cache) *cache = FieldCache{};
    return Mat4X(4, 0);
  }
  const Index padded = ((n + kColumnQuantum - 1) / kColumnQuantum) * kColumnQuantum;
  Mat3X pos(3, padded);
  pos.leftCols(n) = positions;
  for (Index i = n; i < padded; ++i) pos.col(i) = positions.col(0);
  const MatX input = field_input(weights.arch, pos, volume);
  Mat4X raw = layout.forward(as_span(weights.flat), input, cache ? &cache->mlp : nullptr).leftCols(n);
  Mat4X out(4, n);
  out.topRows(3) = (1.0 / (1.0 + (-raw.topRows(3).array()).exp())).matrix();
  for (Index m = 0; m < raw.cols(); ++m) out(3, m) = softplus(raw(3, m));
  if (cache) {
    cache->positions = positions;
    cache->raw = std::move(raw);
  }
  return out;
}

void field_backward(const FieldWeights& weights, const FeatureVolume* volume, const FieldCache& cache,
                    const Mat4X& d_out, std::span<Real> d_flat, FeatureVolume* d_volume) {
  const MlpLayout layout = weights.arch.layout();
  require(d_out.cols() == cache.raw.cols(), ErrorCode::kShapeMismatch, "field output gradient count mismatch");
  if (d_out.cols() == 0) return;
  MatX d_raw = MatX::Zero(4, cache.mlp.activations.front().cols());
  for (Index m = 0; m < d_out.cols(); ++m) {
    for (int c = 0; c < 3; ++c) {
      const Real s = sigmoid(cache.raw(c, m));
      d_raw(c, m) = d_out(c, m) * s * (1.0 - s);
    }
    d_raw(3, m) = d_out(3, m) * sigmoid(cache.raw(3, m));
  }
  const bool want_features = d_volume != nullptr && weights.arch.feature_dim > 0;
  MatX d_input = layout.backward(as_span(weights.flat), cache.mlp, std::move(d_raw), d_flat, want_features);
  if (want_features) {
    require(volume != nullptr, ErrorCode::kShapeMismatch, "feature gradient requested without a volume");
    d_volume->scatter_add(cache.positions, d_input.bottomRows(weights.arch.feature_dim).leftCols(d_out.cols()));
  }
}

NeuralField::NeuralField(FieldWeights weights, std::optional<FeatureVolume> volume)
    : weights_(std::move(weights)), volume_(std::move(volume)) {
  weights_.validate();
  if (weights_.arch.feature_dim > 0) {
    require(volume_.has_value(), ErrorCode::kShapeMismatch, "feature-conditioned field needs a volume");
  }
}

Mat4X NeuralField::evaluate(const Mat3X& positions) const {
  return field_forward(weights_, positions, volume(), nullptr);
}

Mat4X FunctionField::evaluate(const Mat3X& positions) const {
  Mat4X out(4, positions.cols());
  for (Index m = 0; m < positions.cols(); ++m) out.col(m) = fn_(positions.col(m));
  return out;
}

}  // namespace gpn
