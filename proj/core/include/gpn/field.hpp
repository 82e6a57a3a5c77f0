// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "gpn/common.hpp"
#include "gpn/nn.hpp"

namespace gpn {

/// Shape of the radiance-field MLP: encoded position (plus optional voxel
/// features) -> `depth` dense layers of width `hidden` -> (r, g, b, sigma).
struct FieldArchitecture {
  Index pe_bands = 6;
  Index feature_dim = 0;
  Index hidden = 64;
  Index depth = 4;
  Index output_dim = 4;

  /// Width of the first layer's input: 3 + 6 * pe_bands + feature_dim.
  Index input_dim() const { return 3 + 6 * pe_bands + feature_dim; }
  std::vector<Index> widths() const;
  MlpLayout layout() const;
  void validate() const;
  bool operator==(const FieldArchitecture&) const = default;
};

/// Exact parameter count P = sum over layers of fan_in * fan_out + fan_out.
Index weight_count(const FieldArchitecture& arch);

struct FieldWeights {
  VecX flat;
  FieldArchitecture arch;

  void validate() const;
};

/// [p, sin(2^0 pi p), cos(2^0 pi p), ..., sin(2^(b-1) pi p), cos(2^(b-1) pi p)].
VecX positional_encode(const Vec3& p, Index bands);
MatX positional_encode(const Mat3X& positions, Index bands);

/// Vertex-centred grid of F-dim features over [-1, 1]^3. Vertex (i, j, k)
/// sits at -1 + 2 * (i, j, k) / (R - 1); storage is feature-fastest.
struct FeatureVolume {
  Index resolution = 0;
  Index channels = 0;
  VecX data;

  FeatureVolume() = default;
  FeatureVolume(Index res, Index ch) : resolution(res), channels(ch), data(VecX::Zero(res * res * res * ch)) {}

  Index vertex_index(Index i, Index j, Index k) const { return (i + resolution * (j + resolution * k)); }
  Real* feature(Index i, Index j, Index k) { return data.data() + vertex_index(i, j, k) * channels; }
  const Real* feature(Index i, Index j, Index k) const { return data.data() + vertex_index(i, j, k) * channels; }

  /// Trilinear interpolation; positions are clamped to the box.
  VecX sample(const Vec3& p) const;
  MatX sample(const Mat3X& positions) const;
  /// Adjoint of sample(): adds grad(:, m) to the 8 vertices around positions(:, m).
  void scatter_add(const Mat3X& positions, const MatX& grad);
};

struct FieldCache {
  Mat3X positions;
  MlpCache mlp;
  Mat4X raw;
};

/// rgb = sigmoid(raw[0:3]), sigma = softplus(raw[3]). No view direction enters.
Mat4X field_forward(const FieldWeights& weights, const Mat3X& positions, const FeatureVolume* volume,
                    FieldCache* cache);

/// Backpropagates d loss / d (rgb, sigma) into the flat weights (accumulated)
/// and, if given, into the feature-volume gradient.
void field_backward(const FieldWeights& weights, const FeatureVolume* volume, const FieldCache& cache,
                    const Mat4X& d_out, std::span<Real> d_flat, FeatureVolume* d_volume);

/// Anything that maps positions (3 x M) to rgb + sigma (4 x M).
class RadianceField {
 public:
  virtual ~RadianceField() = default;
  virtual Mat4X evaluate(const Mat3X& positions) const = 0;
};

class NeuralField final : public RadianceField {
 public:
  explicit NeuralField(FieldWeights weights, std::optional<FeatureVolume> volume = std::nullopt);

  Mat4X evaluate(const Mat3X& positions) const override;
  const FieldWeights& weights() const { return weights_; }
  const FeatureVolume* volume() const { return volume_ ? &*volume_ : nullptr; }

 private:
  FieldWeights weights_;
  std::optional<FeatureVolume> volume_;
};

/// Adapts a per-point callable; handy for analytic fixtures in tests.
class FunctionField final : public RadianceField {
 public:
  using Fn = std::function<Vec4(const Vec3&)>;
  explicit FunctionField(Fn fn) : fn_(std::move(fn)) {}
  Mat4X evaluate(const Mat3X& positions) const override;

 private:
  Fn fn_;
};

}  // namespace gpn
