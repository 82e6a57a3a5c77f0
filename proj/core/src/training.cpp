// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "gpn/training.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "gpn/io.hpp"
#include "gpn/metrics.hpp"

namespace gpn {

namespace {

struct BlockIndex {
  int encoder = 0;
  int encoder_m = -1;
  int hypernet = 1;
  int features = -1;
};

BlockIndex block_index(const Model& m) {
  BlockIndex b;
  int next = 1;
  if (m.kind() == ModelKind::kCompletion) b.encoder_m = next++;
  b.hypernet = next++;
  if (m.has_features()) b.features = next++;
  return b;
}

// d loss / d (mean, logvar) through z = mean + exp(logvar / 2) * eta.
void reparam_backward(const GaussianLatent& g, const VecX& eta, const VecX& dz, VecX& d_mean, VecX& d_logvar) {
  d_mean += dz;
  d_logvar.array() += dz.array() * eta.array() * 0.5 * (0.5 * g.logvar.array()).exp();
}

void kl_backward(const GaussianLatent& g, Real beta, VecX& d_mean, VecX& d_logvar) {
  if (beta == 0.0) return;
  d_mean += beta * g.mean;
  d_logvar.array() += beta * 0.5 * (g.logvar.array().exp() - 1.0);
}

}  // namespace

std::string log_row_json(const StepStats& s) {
  nlohmann::json j = {
      {"step", s.step}, {"loss_color", s.loss_color}, {"loss_kl", s.loss_kl}, {"psnr_probe", s.psnr_probe}};
  return j.dump();
}

std::vector<Index> sample_pixels(Index pixel_count, Index k, Rng& rng) {
  require(pixel_count >= 1 && k >= 1, ErrorCode::kInvalidArgument, "pixel sampling needs pixels and k >= 1");
  std::vector<Index> out(static_cast<size_t>(k));
  if (k > pixel_count) {
    for (auto& p : out) p = rng.index(pixel_count);
    return out;
  }
  std::vector<Index> all(static_cast<size_t>(pixel_count));
  std::iota(all.begin(), all.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    const Index j = i + rng.index(pixel_count - i);
    std::swap(all[static_cast<size_t>(i)], all[static_cast<size_t>(j)]);
    out[static_cast<size_t>(i)] = all[static_cast<size_t>(i)];
  }
  return out;
}

Trainer::Trainer(Model model, TrainConfig cfg, std::vector<const Scene*> scenes)
    : model_(std::move(model)), cfg_(std::move(cfg)), scenes_(std::move(scenes)) {
  cfg_.validate();
  require(!scenes_.empty(), ErrorCode::kInvalidArgument, "training needs at least one scene");
  for (const Scene* s : scenes_) {
    require(s != nullptr && s->view_count() >= 1 && s->cloud.size() >= 2, ErrorCode::kInvalidArgument,
            "every training scene needs a cloud and at least one view");
  }
  init_state();
}

Trainer::Trainer(Checkpoint ckpt, std::vector<const Scene*> scenes)
    : model_(std::move(ckpt.model)), cfg_(std::move(ckpt.train)), scenes_(std::move(scenes)), state_(std::move(ckpt.state)) {
  require(!scenes_.empty(), ErrorCode::kInvalidArgument, "training needs at least one scene");
  if (state_.optimizers.empty() || state_.grids.size() != scenes_.size()) {
    const auto step = state_.step;
    auto grids = std::move(state_.grids);
    auto opts = std::move(state_.optimizers);
    init_state();
    state_.step = step;
    if (!opts.empty()) state_.optimizers = std::move(opts);
    if (grids.size() == scenes_.size()) state_.grids = std::move(grids);
  }
}

void Trainer::init_state() {
  state_.step = 0;
  state_.optimizers.clear();
  AdamWConfig oc;
  oc.lr = cfg_.lr;
  oc.weight_decay = cfg_.weight_decay;
  for (const auto& [name, p] : model_.parameter_blocks()) state_.optimizers.emplace_back(p->size(), oc);
  state_.grids.assign(scenes_.size(), OccupancyGrid(cfg_.render.grid_resolution, true));
}

Real Trainer::learning_rate(std::int64_t step) const {
  if (cfg_.iterations <= 1) return cfg_.lr;
  const Real f = std::min<Real>(1.0, static_cast<Real>(step) / static_cast<Real>(cfg_.iterations - 1));
  return cfg_.lr * std::pow(cfg_.lr_final_ratio, f);
}

Real Trainer::render_loss(const Scene& scene, Index scene_index, Rng& rng, std::uint64_t seed,
                          const FieldWeights& phi, const std::optional<FeatureVolume>& vol, VecX& d_phi,
                          std::optional<FeatureVolume>& d_vol) {
  const Index view = rng.index(scene.view_count());
  const Camera& cam = scene.cameras[static_cast<size_t>(view)];
  const Image& image = scene.images[static_cast<size_t>(view)];
  const auto pixels = sample_pixels(cam.pixel_count(), cfg_.rays, rng);
  std::vector<Ray> rays;
  std::vector<std::uint64_t> seeds;
  Mat3X target(3, static_cast<Index>(pixels.size()));
  for (size_t i = 0; i < pixels.size(); ++i) {
    rays.push_back(ray_for_pixel(cam, pixels[i]));
    seeds.push_back(derive_seed(seed, 3, static_cast<std::uint64_t>(pixels[i])));
    target.col(static_cast<Index>(i)) = image.pixel(pixels[i]);
  }
  RenderTape tape;
  const FeatureVolume* vp = vol ? &*vol : nullptr;
  const Mat3X rgb =
      render_rays_forward(phi, vp, rays, seeds, state_.grids[static_cast<size_t>(scene_index)], cfg_.render, &tape);
  const Real loss = color_loss(rgb, target);
  const Mat3X d_rgb = (2.0 / static_cast<Real>(rays.size())) * (rgb - target);
  d_phi = VecX::Zero(phi.flat.size());
  if (vol) d_vol = FeatureVolume(vol->resolution, vol->channels);
  render_rays_backward(phi, vp, tape, d_rgb, cfg_.render, as_span(d_phi), d_vol ? &*d_vol : nullptr);
  return loss;
}

void Trainer::accumulate_generation(const Scene& scene, Index scene_index, std::uint64_t seed, Rng& rng, Grads& g,
                                    StepStats& stats, FieldWeights& phi, std::optional<FeatureVolume>& vol) {
  const BlockIndex bi = block_index(model_);
  const ColoredPointCloud input = model_.encoder_input(scene.cloud, derive_seed(seed, 1));
  Encoder::Cache ec;
  const GaussianLatent lat = model_.encoder().forward(input, &ec);
  const VecX eta = standard_normal(lat.dim(), derive_seed(seed, 2));
  const VecX z = reparameterize(lat, eta);
  Hypernet::Cache hc;
  phi = model_.hypernet().forward(z, &hc);
  FeatureExtractor::Cache fc;
  vol.reset();
  if (model_.has_features()) vol = model_.features()->forward(input, &fc);

  VecX d_phi;
  std::optional<FeatureVolume> d_vol;
  const Real lc = render_loss(scene, scene_index, rng, seed, phi, vol, d_phi, d_vol);
  const Real kl = kl_divergence(lat);
  stats.loss_color += lc;
  stats.loss_kl += kl;

  const VecX dz = model_.hypernet().backward(hc, d_phi, as_span(g.blocks[static_cast<size_t>(bi.hypernet)]));
  VecX d_mean = VecX::Zero(lat.dim()), d_logvar = VecX::Zero(lat.dim());
  reparam_backward(lat, eta, dz, d_mean, d_logvar);
  kl_backward(lat, cfg_.beta, d_mean, d_logvar);
  model_.encoder().backward(ec, d_mean, d_logvar, as_span(g.blocks[static_cast<size_t>(bi.encoder)]));
  if (d_vol) model_.features()->backward(fc, *d_vol, as_span(g.blocks[static_cast<size_t>(bi.features)]));
}

bool Trainer::accumulate_completion(const Scene& scene, Index scene_index, std::uint64_t seed, Rng& rng, Grads& g,
                                    StepStats& stats, FieldWeights& phi, std::optional<FeatureVolume>& vol) {
  const BlockIndex bi = block_index(model_);
  std::optional<SplitResult> parts;
  for (Index attempt = 0; attempt < cfg_.split_retries && !parts; ++attempt) {
    try {
      parts = split_by_plane(scene.cloud, random_split_plane(scene.cloud, rng));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyPart) throw;
    }
  }
  if (!parts) return false;

  const ColoredPointCloud in_e = model_.encoder_input(parts->existing, derive_seed(seed, 1));
  const ColoredPointCloud in_m = model_.encoder_input(parts->missing, derive_seed(seed, 4));
  Encoder::Cache ce, cm;
  const GaussianLatent ge = model_.encoder().forward(in_e, &ce);
  const GaussianLatent gm = model_.encoder_m().forward(in_m, &cm);
  const Index d = ge.dim();
  const VecX eta = standard_normal(d, derive_seed(seed, 2));
  VecX z(2 * d);
  z.head(d) = ge.mean;
  z.tail(d) = reparameterize(gm, eta);
  Hypernet::Cache hc;
  phi = model_.hypernet().forward(z, &hc);
  FeatureExtractor::Cache fc;
  vol.reset();
  if (model_.has_features()) vol = model_.features()->forward(in_e, &fc);

  VecX d_phi;
  std::optional<FeatureVolume> d_vol;
  const Real lc = render_loss(scene, scene_index, rng, seed, phi, vol, d_phi, d_vol);
  Real kl = kl_divergence(gm);
  if (cfg_.kl_on_concat) kl += kl_divergence(ge);
  stats.loss_color += lc;
  stats.loss_kl += kl;

  const VecX dz = model_.hypernet().backward(hc, d_phi, as_span(g.blocks[static_cast<size_t>(bi.hypernet)]));
  VecX d_mean_e = dz.head(d), d_logvar_e = VecX::Zero(d);
  if (cfg_.kl_on_concat) kl_backward(ge, cfg_.beta, d_mean_e, d_logvar_e);
  VecX d_mean_m = VecX::Zero(d), d_logvar_m = VecX::Zero(d);
  reparam_backward(gm, eta, dz.tail(d), d_mean_m, d_logvar_m);
  kl_backward(gm, cfg_.beta, d_mean_m, d_logvar_m);
  model_.encoder().backward(ce, d_mean_e, d_logvar_e, as_span(g.blocks[static_cast<size_t>(bi.encoder)]));
  model_.encoder_m().backward(cm, d_mean_m, d_logvar_m, as_span(g.blocks[static_cast<size_t>(bi.encoder_m)]));
  if (d_vol) model_.features()->backward(fc, *d_vol, as_span(g.blocks[static_cast<size_t>(bi.features)]));
  return true;
}

void Trainer::snapshot_and_abort(const StepStats& stats, const std::string& what) const {
  if (!cfg_.diagnostic_path.empty()) {
    nlohmann::json j = {{"step", stats.step},           {"scene", stats.scene},
                        {"loss_color", stats.loss_color}, {"loss_kl", stats.loss_kl},
                        {"grad_norm", stats.grad_norm}, {"reason", what},
                        {"lr", learning_rate(stats.step)}};
    for (const auto& [name, p] : model_.parameter_blocks()) {
      j["param_finite"][name] = p->allFinite();
      j["param_max_abs"][name] = p->size() ? p->cwiseAbs().maxCoeff() : 0.0;
    }
    write_text_file(cfg_.diagnostic_path, j.dump(2) + "\n");
  }
  fail(ErrorCode::kNumerical, "training diverged at step " + std::to_string(stats.step) + ": " + what);
}

StepStats Trainer::step() {
  StepStats stats;
  stats.step = state_.step;
  const std::uint64_t step_seed = derive_seed(cfg_.seed, static_cast<std::uint64_t>(state_.step));
  Rng rng(step_seed);
  auto blocks = model_.parameter_blocks();
  Grads g;
  for (const auto& [name, p] : blocks) g.blocks.push_back(VecX::Zero(p->size()));

  FieldWeights phi;
  std::optional<FeatureVolume> vol;
  Index used = 0;
  for (Index b = 0; b < cfg_.scenes_per_step; ++b) {
    const Index s = rng.index(static_cast<Index>(scenes_.size()));
    stats.scene = s;
    const std::uint64_t seed = derive_seed(step_seed, 100 + static_cast<std::uint64_t>(b));
    if (model_.kind() == ModelKind::kGeneration) {
      accumulate_generation(*scenes_[static_cast<size_t>(s)], s, seed, rng, g, stats, phi, vol);
      ++used;
    } else if (accumulate_completion(*scenes_[static_cast<size_t>(s)], s, seed, rng, g, stats, phi, vol)) {
      ++used;
    }
    if (used > 0 && (state_.step + 1) % cfg_.occupancy_interval == 0 && b + 1 == cfg_.scenes_per_step) {
      // Refresh the last scene's grid with the field generated at this step.
      update_occupancy(state_.grids[static_cast<size_t>(s)], NeuralField(phi, vol), cfg_.render,
                       derive_seed(step_seed, 7));
    }
  }
  if (used == 0) {
    stats.skipped = true;
    ++state_.step;
    return stats;
  }
  const Real inv = 1.0 / static_cast<Real>(used);
  stats.loss_color *= inv;
  stats.loss_kl *= inv;
  stats.loss = stats.loss_color + cfg_.beta * stats.loss_kl;
  stats.psnr_probe = psnr_from_mse(stats.loss_color / 3.0);
  if (!std::isfinite(stats.loss)) snapshot_and_abort(stats, "non-finite loss");

  std::vector<std::span<Real>> spans;
  for (auto& v : g.blocks) {
    v *= inv;
    spans.push_back(as_span(v));
  }
  stats.grad_norm = clip_global_norm(spans, cfg_.clip_norm);
  if (!std::isfinite(stats.grad_norm)) snapshot_and_abort(stats, "non-finite gradient");

  const Real lr = learning_rate(state_.step);
  for (size_t i = 0; i < blocks.size(); ++i) {
    state_.optimizers[i].set_lr(lr);
    state_.optimizers[i].step(as_span(*blocks[i].second), as_span(g.blocks[i]));
  }
  ++state_.step;
  return stats;
}

void Trainer::run(Index iterations, const std::function<void(const StepStats&)>& on_step) {
  while (state_.step < iterations) {
    const StepStats s = step();
    if (on_step) on_step(s);
  }
}

Checkpoint Trainer::checkpoint() const { return {model_, cfg_, state_}; }

namespace {

Checkpoint train_impl(const std::vector<const Scene*>& scenes, ModelConfig model_cfg, ModelKind kind,
                      const TrainConfig& cfg, std::ostream* log) {
  model_cfg.kind = kind;
  Trainer trainer(Model(model_cfg, derive_seed(cfg.seed, 0xabc)), cfg, scenes);
  trainer.run(cfg.iterations, [&](const StepStats& s) {
    if (log && !s.skipped) *log << log_row_json(s) << '\n';
  });
  if (log) log->flush();
  return trainer.checkpoint();
}

}  // namespace

Checkpoint train_generation(const std::vector<const Scene*>& scenes, const ModelConfig& model_cfg,
                            const TrainConfig& cfg, std::ostream* log) {
  return train_impl(scenes, model_cfg, ModelKind::kGeneration, cfg, log);
}

Checkpoint train_completion(const std::vector<const Scene*>& scenes, const ModelConfig& model_cfg,
                            const TrainConfig& cfg, std::ostream* log) {
  return train_impl(scenes, model_cfg, ModelKind::kCompletion, cfg, log);
}

}  // namespace gpn
