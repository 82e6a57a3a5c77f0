// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gpn/model.hpp"
#include "gpn/renderer.hpp"

namespace gpn {

/// A posed observation used as fine-tuning supervision.
struct View {
  Camera camera;
  Image image;
};

struct FinetuneConfig {
  enum class Mode { kLatent, kLatentHypernet };

  Mode mode = Mode::kLatent;
  Real lr = 1e-2;
  /// Learning rate for the hypernetwork in kLatentHypernet mode.
  Real hypernet_lr = 1e-4;
  Index iterations = 200;
  Index rays = 400;
  std::uint64_t seed = 0;
  RenderConfig render;
  /// The best-so-far state is judged on a fixed set of rays per view.
  Index eval_rays_per_view = 512;
  Index eval_interval = 10;
  Index occupancy_interval = 16;

  void validate() const;
};

struct FinetuneResult {
  VecX z;
  FieldWeights weights;
  /// Present in kLatentHypernet mode.
  std::optional<Hypernet> hypernet;
  Real initial_loss = 0.0;
  Real final_loss = 0.0;
  /// Best evaluation loss after each evaluation point (non-increasing).
  std::vector<Real> best_trace;
};

/// phi = hypernet(mean of the encoder); no images involved.
FieldWeights infer_zero_view(const Model& model, const ColoredPointCloud& cloud);

/// Auto-decoder refinement of the latent (and optionally the hypernetwork)
/// against posed views, starting at the encoder mean. With no views it
/// returns the zero-view result unchanged.
FinetuneResult finetune_latent(const Model& model, const ColoredPointCloud& cloud, const std::vector<View>& views,
                               const FinetuneConfig& cfg);

/// Only z_m is optimized; z_e stays at the existing-part encoder mean and z_m
/// starts from a prior draw seeded by `prior_seed`.
FinetuneResult finetune_completion(const Model& model, const ColoredPointCloud& existing,
                                   const std::vector<View>& views, const FinetuneConfig& cfg,
                                   std::uint64_t prior_seed);

/// Prior completion without supervision: z_e ++ eta, eta ~ N(0, I).
VecX prior_completion_latent(const Model& model, const ColoredPointCloud& existing, std::uint64_t prior_seed);

/// z(t) = (1 - t) zA + t zB for t = i / (steps - 1); endpoints reproduce zA and zB exactly.
std::vector<VecX> interpolate_codes(const VecX& za, const VecX& zb, Index steps);
std::vector<FieldWeights> interpolate_latents(const Model& model, const VecX& za, const VecX& zb, Index steps);

/// z = mean(eps_e(partA)) ++ mean(eps_m(partB)).
FieldWeights stitch_parts(const Model& model, const ColoredPointCloud& part_a, const ColoredPointCloud& part_b);

/// Mean color loss of a field over a fixed ray set (for evaluation).
Real view_loss(const FieldWeights& weights, const FeatureVolume* volume, const std::vector<View>& views,
               const std::vector<std::vector<Index>>& pixels, const OccupancyGrid& grid, const RenderConfig& cfg);

}  // namespace gpn
