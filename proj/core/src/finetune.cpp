// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "gpn/finetune.hpp"

#include "gpn/training.hpp"

namespace gpn {

void FinetuneConfig::validate() const {
  require(iterations >= 0, ErrorCode::kConfig, "fine-tuning iterations must be >= 0");
  require(lr > 0.0 && hypernet_lr > 0.0, ErrorCode::kConfig, "fine-tuning learning rates must be positive");
  require(rays >= 1 && eval_rays_per_view >= 1, ErrorCode::kConfig, "fine-tuning needs at least one ray");
  require(eval_interval >= 1 && occupancy_interval >= 1, ErrorCode::kConfig, "fine-tuning intervals must be >= 1");
  render.validate();
}

Real view_loss(const FieldWeights& weights, const FeatureVolume* volume, const std::vector<View>& views,
               const std::vector<std::vector<Index>>& pixels, const OccupancyGrid& grid, const RenderConfig& cfg) {
  require(views.size() == pixels.size(), ErrorCode::kShapeMismatch, "one pixel list per view");
  Real total = 0.0;
  Index rays = 0;
  for (size_t v = 0; v < views.size(); ++v) {
    std::vector<Ray> r;
    std::vector<std::uint64_t> seeds;
    Mat3X target(3, static_cast<Index>(pixels[v].size()));
    for (size_t i = 0; i < pixels[v].size(); ++i) {
      r.push_back(ray_for_pixel(views[v].camera, pixels[v][i]));
      seeds.push_back(derive_seed(cfg.seed, static_cast<std::uint64_t>(pixels[v][i])));
      target.col(static_cast<Index>(i)) = views[v].image.pixel(pixels[v][i]);
    }
    const Mat3X rgb = render_rays_forward(weights, volume, r, seeds, grid, cfg, nullptr);
    total += (rgb - target).colwise().squaredNorm().sum();
    rays += static_cast<Index>(r.size());
  }
  return total / static_cast<Real>(std::max<Index>(rays, 1));
}

FieldWeights infer_zero_view(const Model& model, const ColoredPointCloud& cloud) {
  return model.generate(model.mean_latent(cloud));
}

namespace {

// Gradient descent on z.segment(first, count) (and optionally the
// hypernetwork) against the views; keeps the best state on a fixed ray set.
FinetuneResult optimize_latent(const Model& model, VecX z, Index first, Index count,
                               const std::optional<FeatureVolume>& volume, const std::vector<View>& views,
                               const FinetuneConfig& cfg) {
  cfg.validate();
  const FeatureVolume* vol = volume ? &*volume : nullptr;
  const bool tune_hypernet = cfg.mode == FinetuneConfig::Mode::kLatentHypernet;
  Hypernet hyper = model.hypernet();

  RenderConfig eval_cfg = cfg.render;
  eval_cfg.stratified = false;
  std::vector<std::vector<Index>> eval_pixels;
  for (size_t v = 0; v < views.size(); ++v) {
    Rng rng(derive_seed(cfg.seed, 99, v));
    const Index n = views[v].camera.pixel_count();
    eval_pixels.push_back(sample_pixels(n, std::min(cfg.eval_rays_per_view, n), rng));
  }

  FinetuneResult result;
  FieldWeights phi = hyper.generate(z);
  OccupancyGrid grid = occupancy_for_field(NeuralField(phi, volume), cfg.render, derive_seed(cfg.seed, 5));
  result.initial_loss = view_loss(phi, vol, views, eval_pixels, grid, eval_cfg);
  Real best = result.initial_loss;
  VecX best_z = z;
  std::optional<VecX> best_psi;
  if (tune_hypernet) best_psi = hyper.params();
  result.best_trace.push_back(best);

  AdamWConfig zc;
  zc.lr = cfg.lr;
  zc.weight_decay = 0.0;
  AdamW z_opt(count, zc);
  AdamWConfig hc;
  hc.lr = cfg.hypernet_lr;
  hc.weight_decay = 0.0;
  AdamW h_opt(tune_hypernet ? hyper.param_count() : 0, hc);

  for (Index it = 0; it < cfg.iterations; ++it) {
    const std::uint64_t seed = derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(it));
    Rng rng(seed);
    const View& view = views[static_cast<size_t>(rng.index(static_cast<Index>(views.size())))];
    const auto pixels = sample_pixels(view.camera.pixel_count(), cfg.rays, rng);
    std::vector<Ray> rays;
    std::vector<std::uint64_t> seeds;
    Mat3X target(3, static_cast<Index>(pixels.size()));
    for (size_t i = 0; i < pixels.size(); ++i) {
      rays.push_back(ray_for_pixel(view.camera, pixels[i]));
      seeds.push_back(derive_seed(seed, static_cast<std::uint64_t>(pixels[i])));
      target.col(static_cast<Index>(i)) = view.image.pixel(pixels[i]);
    }
    Hypernet::Cache cache;
    phi = hyper.forward(z, &cache);
    RenderTape tape;
    const Mat3X rgb = render_rays_forward(phi, vol, rays, seeds, grid, cfg.render, &tape);
    const Mat3X d_rgb = (2.0 / static_cast<Real>(rays.size())) * (rgb - target);
    VecX d_phi = VecX::Zero(phi.flat.size());
    render_rays_backward(phi, vol, tape, d_rgb, cfg.render, as_span(d_phi), nullptr);
    VecX d_psi = VecX::Zero(tune_hypernet ? hyper.param_count() : 0);
    VecX scratch;
    if (!tune_hypernet) scratch = VecX::Zero(hyper.param_count());
    const VecX dz = hyper.backward(cache, d_phi, tune_hypernet ? as_span(d_psi) : as_span(scratch));
    VecX dz_part = dz.segment(first, count);
    require(dz_part.allFinite(), ErrorCode::kNumerical, "latent gradient is not finite");
    VecX part = z.segment(first, count);
    z_opt.step(as_span(part), as_span(dz_part));
    z.segment(first, count) = part;
    if (tune_hypernet) h_opt.step(as_span(hyper.params()), as_span(d_psi));

    if ((it + 1) % cfg.occupancy_interval == 0) {
      update_occupancy(grid, NeuralField(hyper.generate(z), volume), cfg.render, derive_seed(seed, 5));
    }
    if ((it + 1) % cfg.eval_interval == 0 || it + 1 == cfg.iterations) {
      const Real loss = view_loss(hyper.generate(z), vol, views, eval_pixels, grid, eval_cfg);
      if (loss < best) {
        best = loss;
        best_z = z;
        if (tune_hypernet) best_psi = hyper.params();
      }
      result.best_trace.push_back(best);
    }
  }

  if (tune_hypernet) {
    hyper.params() = *best_psi;
    result.hypernet = hyper;
  }
  result.z = best_z;
  result.weights = hyper.generate(best_z);
  result.final_loss = best;
  return result;
}

}  // namespace

FinetuneResult finetune_latent(const Model& model, const ColoredPointCloud& cloud, const std::vector<View>& views,
                               const FinetuneConfig& cfg) {
  require(model.kind() == ModelKind::kGeneration, ErrorCode::kIncompatibleCheckpoint,
          "latent fine-tuning needs a generation model");
  const VecX z = model.mean_latent(cloud);
  if (views.empty() || cfg.iterations == 0) {
    FinetuneResult r;
    r.z = z;
    r.weights = model.generate(z);
    if (!views.empty()) {
      // Report the loss the untouched code reaches, for symmetry with real runs.
      const auto vol = model.feature_volume(cloud);
      RenderConfig eval_cfg = cfg.render;
      eval_cfg.stratified = false;
      std::vector<std::vector<Index>> pixels;
      for (size_t v = 0; v < views.size(); ++v) {
        Rng rng(derive_seed(cfg.seed, 99, v));
        const Index n = views[v].camera.pixel_count();
        pixels.push_back(sample_pixels(n, std::min(cfg.eval_rays_per_view, n), rng));
      }
      const OccupancyGrid grid = occupancy_for_field(NeuralField(r.weights, vol), cfg.render, derive_seed(cfg.seed, 5));
      r.initial_loss = r.final_loss = view_loss(r.weights, vol ? &*vol : nullptr, views, pixels, grid, eval_cfg);
      r.best_trace.push_back(r.initial_loss);
    }
    return r;
  }
  return optimize_latent(model, z, 0, z.size(), model.feature_volume(cloud), views, cfg);
}

VecX prior_completion_latent(const Model& model, const ColoredPointCloud& existing, std::uint64_t prior_seed) {
  require(model.kind() == ModelKind::kCompletion, ErrorCode::kIncompatibleCheckpoint,
          "completion needs a completion model");
  const Index d = model.config().encoder.latent_dim;
  VecX z(2 * d);
  z.head(d) = model.encoder().encode(model.encoder_input(existing, kInferenceSubsampleSeed)).mean;
  z.tail(d) = standard_normal(d, prior_seed);
  return z;
}

FinetuneResult finetune_completion(const Model& model, const ColoredPointCloud& existing,
                                   const std::vector<View>& views, const FinetuneConfig& cfg,
                                   std::uint64_t prior_seed) {
  const VecX z = prior_completion_latent(model, existing, prior_seed);
  const Index d = model.config().encoder.latent_dim;
  if (views.empty() || cfg.iterations == 0) {
    FinetuneResult r;
    r.z = z;
    r.weights = model.generate(z);
    return r;
  }
  FinetuneConfig c = cfg;
  c.mode = FinetuneConfig::Mode::kLatent;
  return optimize_latent(model, z, d, d, model.feature_volume(existing), views, c);
}

std::vector<VecX> interpolate_codes(const VecX& za, const VecX& zb, Index steps) {
  require(za.size() == zb.size(), ErrorCode::kShapeMismatch,
          "latent dims differ: " + std::to_string(za.size()) + " vs " + std::to_string(zb.size()));
  require(steps >= 2, ErrorCode::kInvalidArgument, "interpolation needs at least two steps");
  std::vector<VecX> out;
  for (Index i = 0; i < steps; ++i) {
    if (i == 0) {
      out.push_back(za);
    } else if (i + 1 == steps) {
      out.push_back(zb);
    } else {
      const Real t = static_cast<Real>(i) / static_cast<Real>(steps - 1);
      out.push_back((1.0 - t) * za + t * zb);
    }
  }
  return out;
}

std::vector<FieldWeights> interpolate_latents(const Model& model, const VecX& za, const VecX& zb, Index steps) {
  std::vector<FieldWeights> out;
  for (const VecX& z : interpolate_codes(za, zb, steps)) out.push_back(model.generate(z));
  return out;
}

FieldWeights stitch_parts(const Model& model, const ColoredPointCloud& part_a, const ColoredPointCloud& part_b) {
  return model.generate(model.mean_latent(part_a, part_b));
}

}  // namespace gpn
