// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gpn/encoder.hpp"
#include "gpn/features.hpp"
#include "gpn/field.hpp"
#include "gpn/hypernet.hpp"

namespace gpn {

enum class ModelKind { kGeneration, kCompletion };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct ModelConfig {
  ModelKind kind = ModelKind::kGeneration;
  /// Per-encoder settings; in completion mode each of the two encoders emits
  /// encoder.latent_dim values and the field code is their concatenation.
  EncoderConfig encoder;
  HypernetConfig hypernet;
  /// Field shape; feature_dim is derived from `features` when present.
  FieldArchitecture field;
  std::optional<FeatureExtractorConfig> features;

  static ModelConfig generation();
  static ModelConfig completion();

  Index latent_dim() const { return kind == ModelKind::kCompletion ? 2 * encoder.latent_dim : encoder.latent_dim; }
  FieldArchitecture field_architecture() const;
  void validate() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

/// Seed used for the fixed input subsample at inference time.
inline constexpr std::uint64_t kInferenceSubsampleSeed = 0x9a11;

/// Encoder(s), hypernetwork and optional feature extractor.
class Model {
 public:
  Model() = default;
  Model(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ModelKind kind() const { return cfg_.kind; }
  Index latent_dim() const { return cfg_.latent_dim(); }

  /// Generation encoder, or the existing-part encoder in completion mode.
  Encoder& encoder() { return encoder_; }
  const Encoder& encoder() const { return encoder_; }
  /// Missing-part encoder (completion only).
  Encoder& encoder_m() { return encoder_m_; }
  const Encoder& encoder_m() const { return encoder_m_; }
  Hypernet& hypernet() { return hypernet_; }
  const Hypernet& hypernet() const { return hypernet_; }
  bool has_features() const { return features_.has_value(); }
  FeatureExtractor* features() { return features_ ? &*features_ : nullptr; }
  const FeatureExtractor* features() const { return features_ ? &*features_ : nullptr; }

  /// Named parameter arrays in a fixed order (checkpoint and optimizer layout).
  std::vector<std::pair<std::string, VecX*>> parameter_blocks();
  std::vector<std::pair<std::string, const VecX*>> parameter_blocks() const;

  /// The encoder's fixed-size input drawn from a cloud.
  ColoredPointCloud encoder_input(const ColoredPointCloud& cloud, std::uint64_t seed) const;

  /// Deterministic code: the encoder mean (generation), or mean(eps_e(P_e)) ++
  /// mean(eps_m(P_m)) when both parts are given (completion).
  VecX mean_latent(const ColoredPointCloud& cloud) const;
  VecX mean_latent(const ColoredPointCloud& existing, const ColoredPointCloud& missing) const;

  FieldWeights generate(const VecX& z) const { return hypernet_.generate(z); }
  /// Volume from the cloud the features are conditioned on, when enabled.
  std::optional<FeatureVolume> feature_volume(const ColoredPointCloud& cloud) const;
  NeuralField field(const VecX& z, const ColoredPointCloud* feature_cloud = nullptr) const;

 private:
  ModelConfig cfg_;
  Encoder encoder_;
  Encoder encoder_m_;
  Hypernet hypernet_;
  std::optional<FeatureExtractor> features_;
};

/// 1/2 sum (exp(logvar) + mean^2 - 1 - logvar).
Real kl_divergence(const GaussianLatent& g);
/// Mean over rays of the squared L2 pixel error.
Real color_loss(const Mat3X& rendered, const Mat3X& target);

}  // namespace gpn
