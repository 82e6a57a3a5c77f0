// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "gpn/checkpoint.hpp"
#include "gpn/dataset.hpp"

namespace gpn {

struct StepStats {
  std::int64_t step = 0;
  Index scene = 0;
  Real loss_color = 0.0;
  Real loss_kl = 0.0;
  Real loss = 0.0;
  Real grad_norm = 0.0;
  /// PSNR implied by the step's color loss (per-channel MSE).
  Real psnr_probe = 0.0;
  /// Completion mode: no valid plane split was found and the step was skipped.
  bool skipped = false;
};

/// {"step", "loss_color", "loss_kl", "psnr_probe"} on one line.
std::string log_row_json(const StepStats& s);

/// Joint optimization of encoder(s), hypernetwork and optional feature
/// extractor. The radiance field itself is never an optimizer variable: its
/// weights are regenerated from the latent at every step.
class Trainer {
 public:
  Trainer(Model model, TrainConfig cfg, std::vector<const Scene*> scenes);
  /// Resumes from a checkpoint; `scenes` must be the same list in the same order.
  Trainer(Checkpoint ckpt, std::vector<const Scene*> scenes);

  StepStats step();
  /// Runs until `iterations` total steps have been taken (counting resumed ones).
  void run(Index iterations, const std::function<void(const StepStats&)>& on_step = {});

  Checkpoint checkpoint() const;
  const Model& model() const { return model_; }
  Model& model() { return model_; }
  const TrainConfig& config() const { return cfg_; }
  std::int64_t steps_done() const { return state_.step; }
  const std::vector<OccupancyGrid>& grids() const { return state_.grids; }

  /// Learning rate used at a given step.
  Real learning_rate(std::int64_t step) const;

 private:
  struct Grads {
    std::vector<VecX> blocks;
  };
  void init_state();
  void accumulate_generation(const Scene& scene, Index scene_index, std::uint64_t seed, Rng& rng, Grads& g,
                             StepStats& stats, FieldWeights& phi, std::optional<FeatureVolume>& vol);
  bool accumulate_completion(const Scene& scene, Index scene_index, std::uint64_t seed, Rng& rng, Grads& g,
                             StepStats& stats, FieldWeights& phi, std::optional<FeatureVolume>& vol);
  /// Renders random rays of one view, returns the color loss and accumulates
  /// d loss / d phi (and d loss / d volume).
  Real render_loss(const Scene& scene, Index scene_index, Rng& rng, std::uint64_t seed, const FieldWeights& phi,
                   const std::optional<FeatureVolume>& vol, VecX& d_phi, std::optional<FeatureVolume>& d_vol);
  void snapshot_and_abort(const StepStats& stats, const std::string& what) const;

  Model model_;
  TrainConfig cfg_;
  std::vector<const Scene*> scenes_;
  TrainState state_;
};

Checkpoint train_generation(const std::vector<const Scene*>& scenes, const ModelConfig& model_cfg,
                            const TrainConfig& cfg, std::ostream* log = nullptr);
Checkpoint train_completion(const std::vector<const Scene*>& scenes, const ModelConfig& model_cfg,
                            const TrainConfig& cfg, std::ostream* log = nullptr);

/// Pixel subset drawn without replacement (with replacement if k exceeds the image).
std::vector<Index> sample_pixels(Index pixel_count, Index k, Rng& rng);

}  // namespace gpn
