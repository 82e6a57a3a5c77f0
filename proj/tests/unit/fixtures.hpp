// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "gpn/dataset.hpp"
#include "gpn/model.hpp"
#include "gpn/training.hpp"

namespace gpn::test {

// Small enough that a training step takes a few milliseconds.
inline ModelConfig small_model(ModelKind kind = ModelKind::kGeneration) {
  ModelConfig c;
  c.kind = kind;
  c.encoder.latent_dim = 8;
  c.encoder.widths = {16, 32};
  c.encoder.input_points = 128;
  c.hypernet.trunk_widths = {32};
  c.field.pe_bands = 2;
  c.field.hidden = 16;
  c.field.depth = 2;
  return c;
}

inline TrainConfig small_train(Index iterations) {
  TrainConfig t;
  t.iterations = iterations;
  t.rays = 64;
  t.lr = 3e-3;
  t.render.grid_resolution = 16;
  t.render.step = 2.0 * 1.7320508075688772 / 48.0;
  t.occupancy_interval = 8;
  return t;
}

inline Scene small_scene(std::uint64_t seed, int views = 4, int resolution = 16) {
  SceneSpec spec;
  spec.n_points = 1024;
  spec.n_views = views;
  spec.resolution = resolution;
  Rng rng(seed);
  return make_scene(AnalyticShape::random(ShapeKind::kSphere, rng), spec, seed);
}

}  // namespace gpn::test
