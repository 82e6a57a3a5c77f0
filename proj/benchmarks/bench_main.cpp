// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "gpn/dataset.hpp"
#include "gpn/field.hpp"
#include "gpn/metrics.hpp"
#include "gpn/model.hpp"
#include "gpn/renderer.hpp"
#include "gpn/training.hpp"

using namespace gpn;

namespace {

Mat3X cube_points(Index n, std::uint64_t seed) {
  Rng rng(seed);
  Mat3X p(3, n);
  for (Index i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform(-1.0, 1.0);
  return p;
}

void BM_FieldForward(benchmark::State& state) {
  const Model model(ModelConfig::generation(), 1);
  const FieldWeights w = model.generate(VecX::Zero(model.latent_dim()));
  const Mat3X pts = cube_points(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(field_forward(w, pts, nullptr, nullptr));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FieldForward)->Arg(1024)->Arg(16384);

void BM_Composite(benchmark::State& state) {
  const Index n = state.range(0);
  Rng rng(3);
  Mat4X s(4, n);
  std::vector<Real> delta(static_cast<size_t>(n), 0.027), t(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    s.col(i) << rng.uniform(), rng.uniform(), rng.uniform(), 5.0 * rng.uniform();
    t[static_cast<size_t>(i)] = 0.027 * static_cast<Real>(i);
  }
  for (auto _ : state) benchmark::DoNotOptimize(composite(s, delta, t, Vec3::Zero()));
}
BENCHMARK(BM_Composite)->Arg(128)->Arg(256);

void BM_RenderView(benchmark::State& state) {
  const AnalyticField field(AnalyticShape::sphere(Vec3::Zero(), 0.5, Vec3(0.9, 0.2, 0.1), Vec3(0.1, 0.3, 0.9)));
  RenderConfig cfg;
  cfg.stratified = false;
  const OccupancyGrid grid = occupancy_for_field(field, cfg, 1);
  const int res = static_cast<int>(state.range(0));
  const Camera cam = Camera::look_at(Vec3(1.3, 0.2, 0.7), Vec3::Zero(), res, res, 0.75 * res);
  for (auto _ : state) benchmark::DoNotOptimize(render_image(cam, field, grid, cfg));
}
BENCHMARK(BM_RenderView)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Chamfer(benchmark::State& state) {
  const Mat3X p = cube_points(state.range(0), 4), q = cube_points(state.range(0), 5);
  for (auto _ : state) benchmark::DoNotOptimize(chamfer(p, q));
  state.SetItemsProcessed(state.iterations() * 2 * state.range(0));
}
BENCHMARK(BM_Chamfer)->Arg(2048)->Arg(16384)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const Scene scene = make_scene(AnalyticShape::sphere(Vec3::Zero(), 0.45, Vec3(0.9, 0.3, 0.1), Vec3(0.2, 0.4, 0.8)),
                                 SceneSpec::desk(), 7);
  TrainConfig cfg;
  cfg.iterations = 1 << 20;
  cfg.rays = state.range(0);
  cfg.render.grid_resolution = 32;
  Trainer trainer(Model(ModelConfig::generation(), 1), cfg, {&scene});
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step());
}
BENCHMARK(BM_TrainStep)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
