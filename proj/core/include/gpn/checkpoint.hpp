// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gpn/model.hpp"
#include "gpn/nn.hpp"
#include "gpn/renderer.hpp"

namespace gpn {

struct TrainConfig {
  Index iterations = 2000;
  Index rays = 400;
  Real lr = 1e-3;
  /// The learning rate decays exponentially to lr * lr_final_ratio at the last iteration.
  Real lr_final_ratio = 0.1;
  Real weight_decay = 1e-2;
  /// KL weight.
  Real beta = 1e-4;
  Real clip_norm = 1.0;
  Index scenes_per_step = 1;
  std::uint64_t seed = 0;
  Index occupancy_interval = 16;
  /// Completion mode: also pull the existing-part code toward the prior.
  bool kl_on_concat = false;
  Index split_retries = 8;
  RenderConfig render;
  /// Where a diagnostic snapshot goes if the loss turns non-finite (empty: none).
  std::string diagnostic_path;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
};

std::string render_config_to_json(const RenderConfig& cfg);
RenderConfig render_config_from_json(const std::string& text);

/// Everything besides the parameters needed to continue a run bit-exactly.
struct TrainState {
  std::int64_t step = 0;
  /// One optimizer per Model::parameter_blocks() entry, same order.
  std::vector<AdamW> optimizers;
  /// One occupancy grid per training scene.
  std::vector<OccupancyGrid> grids;
};

struct Checkpoint {
  Model model;
  TrainConfig train;
  TrainState state;
};

/// Container: "GPNCKPT1", uint64 manifest length, JSON manifest (model and
/// training configuration, array directory), then raw little-endian float64 arrays.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws kIncompatibleCheckpoint when the checkpoint holds the other model kind.
void require_kind(const Checkpoint& ckpt, ModelKind kind);

/// Order-sensitive hash of all model parameters.
std::uint64_t parameter_checksum(const Model& model);

}  // namespace gpn
