// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"
#include "gpn/checkpoint.hpp"
#include "gpn/finetune.hpp"
#include "gpn/geometry.hpp"
#include "gpn/metrics.hpp"
#include "test_util.hpp"

using namespace gpn;
using gpn::test::small_model;
using gpn::test::small_scene;
using gpn::test::small_train;

namespace {

const Scene& scene_a() {
  static const Scene s = small_scene(21, 6);
  return s;
}

const Scene& scene_b() {
  static const Scene s = small_scene(22, 6);
  return s;
}

// Briefly trained so fine-tuning starts from a meaningful prior.
const Model& generation_model() {
  static const Model m = [] {
    Trainer t(Model(small_model(), 5), small_train(150), {&scene_a(), &scene_b()});
    t.run(150);
    return t.model();
  }();
  return m;
}

const Model& completion_model() {
  static const Model m = [] {
    Trainer t(Model(small_model(ModelKind::kCompletion), 6), small_train(60), {&scene_a()});
    t.run(60);
    return t.model();
  }();
  return m;
}

FinetuneConfig small_finetune(Index iterations) {
  FinetuneConfig c;
  c.iterations = iterations;
  c.rays = 64;
  c.eval_rays_per_view = 128;
  c.render = small_train(1).render;
  return c;
}

std::vector<View> views_of(const Scene& s, std::initializer_list<int> ids) {
  std::vector<View> v;
  for (int i : ids) v.push_back({s.cameras[static_cast<size_t>(i)], s.images[static_cast<size_t>(i)]});
  return v;
}

Real view_psnr(const FieldWeights& w, const View& v) {
  RenderConfig rc = small_finetune(0).render;
  rc.stratified = false;
  const NeuralField f(w);
  const OccupancyGrid g = occupancy_for_field(f, rc, 1);
  return psnr(render_image(v.camera, f, g, rc), v.image);
}

}  // namespace

TEST_CASE("zero-view inference") {
  const Model& m = generation_model();
  const FieldWeights a = infer_zero_view(m, scene_a().cloud);
  CHECK(a.flat == infer_zero_view(m, scene_a().cloud).flat);
  CHECK(a.flat == m.generate(m.mean_latent(scene_a().cloud)).flat);
  CHECK(a.flat != infer_zero_view(m, scene_b().cloud).flat);
  CHECK_GPN_ERROR(infer_zero_view(completion_model(), scene_a().cloud), ErrorCode::kIncompatibleCheckpoint);

  SUBCASE("unseen shape of the same family gives a non-degenerate field") {
    const AnalyticShape novel = AnalyticShape::sphere(Vec3(0.05, 0, 0), 0.35, Vec3(0.8, 0.7, 0.1), Vec3(0.2, 0.6, 0.3));
    const FieldWeights w = infer_zero_view(m, novel.sample_surface(1024, 3));
    REQUIRE(w.flat.allFinite());
    RenderConfig rc = small_finetune(0).render;
    rc.stratified = false;
    const NeuralField f(w);
    const Camera cam = scene_a().cameras[0];
    const ViewRender out = render_view(cam, f, occupancy_for_field(f, rc, 1), rc);
    const Real lo = out.opacity.minCoeff(), hi = out.opacity.maxCoeff();
    CHECK(lo < 0.5);
    CHECK(hi > 0.5);
  }
}

TEST_CASE("latent fine-tuning") {
  const Model& m = generation_model();
  const std::uint64_t psi = parameter_checksum(m);

  SUBCASE("0 iterations is zero-view inference") {
    const FinetuneResult r = finetune_latent(m, scene_a().cloud, views_of(scene_a(), {0}), small_finetune(0));
    CHECK(r.weights.flat == infer_zero_view(m, scene_a().cloud).flat);
    CHECK(r.z == m.mean_latent(scene_a().cloud));
    CHECK(r.final_loss == r.initial_loss);
  }
  SUBCASE("no views is zero-view inference") {
    const FinetuneResult r = finetune_latent(m, scene_a().cloud, {}, small_finetune(50));
    CHECK(r.weights.flat == infer_zero_view(m, scene_a().cloud).flat);
  }
  SUBCASE("one view improves that view") {
    const auto views = views_of(scene_a(), {2});
    const FinetuneResult r = finetune_latent(m, scene_a().cloud, views, small_finetune(100));
    CHECK(r.final_loss <= r.initial_loss);
    for (size_t i = 1; i < r.best_trace.size(); ++i) CHECK(r.best_trace[i] <= r.best_trace[i - 1]);
    CHECK(r.best_trace.front() == r.initial_loss);
    CHECK(r.best_trace.back() == r.final_loss);
    const Real before = view_psnr(infer_zero_view(m, scene_a().cloud), views[0]);
    const Real after = view_psnr(r.weights, views[0]);
    MESSAGE("view PSNR " << before << " -> " << after);
    CHECK(after > before);
    CHECK_FALSE(r.hypernet.has_value());
    CHECK(parameter_checksum(m) == psi);
  }
  SUBCASE("latent and hypernetwork mode") {
    FinetuneConfig c = small_finetune(30);
    c.mode = FinetuneConfig::Mode::kLatentHypernet;
    const FinetuneResult r = finetune_latent(m, scene_a().cloud, views_of(scene_a(), {1, 3}), c);
    REQUIRE(r.hypernet.has_value());
    CHECK(r.hypernet->params() != m.hypernet().params());
    CHECK(r.weights.flat == r.hypernet->generate(r.z).flat);
    CHECK(r.final_loss <= r.initial_loss);
    CHECK(parameter_checksum(m) == psi);
  }
  SUBCASE("deterministic") {
    const auto views = views_of(scene_b(), {0, 4});
    const FinetuneResult a = finetune_latent(m, scene_b().cloud, views, small_finetune(20));
    const FinetuneResult b = finetune_latent(m, scene_b().cloud, views, small_finetune(20));
    CHECK(a.z == b.z);
    CHECK(a.best_trace == b.best_trace);
  }
  SUBCASE("config checks") {
    FinetuneConfig c = small_finetune(-1);
    CHECK_GPN_ERROR(finetune_latent(m, scene_a().cloud, views_of(scene_a(), {0}), c), ErrorCode::kConfig);
    CHECK_GPN_ERROR(finetune_latent(completion_model(), scene_a().cloud, views_of(scene_a(), {0}), small_finetune(1)),
                    ErrorCode::kIncompatibleCheckpoint);
  }
}

TEST_CASE("completion fine-tuning") {
  const Model& m = completion_model();
  const SplitResult parts = split_by_plane(scene_a().cloud, SplitPlane::make(Vec3::UnitX(), 0.0));
  const Index d = m.config().encoder.latent_dim;

  SUBCASE("prior latent keeps z_e at the encoder mean") {
    const VecX z = prior_completion_latent(m, parts.existing, 4);
    CHECK(z.size() == 2 * d);
    CHECK(z.head(d) == m.encoder().encode(m.encoder_input(parts.existing, kInferenceSubsampleSeed)).mean);
    CHECK(z.tail(d) == standard_normal(d, 4));
    CHECK(prior_completion_latent(m, parts.existing, 5).tail(d) != z.tail(d));
  }
  SUBCASE("only z_m moves and the loss does not increase") {
    const VecX z0 = prior_completion_latent(m, parts.existing, 4);
    const FinetuneResult r = finetune_completion(m, parts.existing, views_of(scene_a(), {0, 3}), small_finetune(40), 4);
    CHECK(r.z.head(d) == z0.head(d));
    CHECK(r.z.tail(d) != z0.tail(d));
    CHECK(r.final_loss <= r.initial_loss);
    for (size_t i = 1; i < r.best_trace.size(); ++i) CHECK(r.best_trace[i] <= r.best_trace[i - 1]);
  }
  SUBCASE("different prior draws give different completions") {
    const FinetuneResult a = finetune_completion(m, parts.existing, {}, small_finetune(0), 1);
    const FinetuneResult b = finetune_completion(m, parts.existing, {}, small_finetune(0), 2);
    CHECK(a.weights.flat != b.weights.flat);
  }
  CHECK_GPN_ERROR(prior_completion_latent(generation_model(), parts.existing, 1), ErrorCode::kIncompatibleCheckpoint);
}

TEST_CASE("latent interpolation") {
  const Model& m = generation_model();
  const VecX za = m.mean_latent(scene_a().cloud), zb = m.mean_latent(scene_b().cloud);
  const auto codes = interpolate_codes(za, zb, 5);
  REQUIRE(codes.size() == 5);
  CHECK(codes.front() == za);
  CHECK(codes.back() == zb);
  CHECK((codes[2] - 0.5 * (za + zb)).cwiseAbs().maxCoeff() < 1e-15);
  const auto two = interpolate_latents(m, za, zb, 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].flat == m.generate(za).flat);
  CHECK(two[1].flat == m.generate(zb).flat);
  CHECK_GPN_ERROR(interpolate_codes(za, VecX::Zero(za.size() + 1), 3), ErrorCode::kShapeMismatch);
  CHECK_GPN_ERROR(interpolate_codes(za, zb, 1), ErrorCode::kInvalidArgument);
}

TEST_CASE("part stitching") {
  const Model& m = completion_model();
  const SplitResult a = split_by_plane(scene_a().cloud, SplitPlane::make(Vec3::UnitZ(), 0.0));
  const SplitResult b = split_by_plane(scene_b().cloud, SplitPlane::make(Vec3::UnitZ(), 0.0));
  const FieldWeights ab = stitch_parts(m, a.existing, b.missing);
  CHECK(ab.flat == m.generate(m.mean_latent(a.existing, b.missing)).flat);
  CHECK(ab.flat != stitch_parts(m, b.missing, a.existing).flat);
  CHECK_GPN_ERROR(stitch_parts(m, a.existing, ColoredPointCloud{}), ErrorCode::kEmptyPart);
  CHECK_GPN_ERROR(stitch_parts(generation_model(), a.existing, b.missing), ErrorCode::kIncompatibleCheckpoint);
}
