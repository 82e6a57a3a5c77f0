// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "gpn/renderer.hpp"

#include <algorithm>
#include <cmath>

namespace gpn {

void RenderConfig::validate() const {
  require(step > 0.0 && std::isfinite(step), ErrorCode::kConfig, "render step must be positive");
  require(max_samples >= 1, ErrorCode::kConfig, "samples per ray must be >= 1");
  require(near >= 0.0 && far > near, ErrorCode::kConfig, "render near/far must satisfy 0 <= near < far");
  require(grid_resolution >= 1 && probes_per_cell >= 1, ErrorCode::kConfig, "invalid occupancy grid settings");
  require(density_threshold >= 0.0, ErrorCode::kConfig, "density threshold must be >= 0");
}

OccupancyGrid::OccupancyGrid(Index resolution, bool occupied)
    : resolution_(resolution),
      bits_(static_cast<size_t>(resolution * resolution * resolution), occupied ? 1 : 0),
      ema_(static_cast<size_t>(resolution * resolution * resolution), 0.0) {
  require(resolution >= 1, ErrorCode::kInvalidArgument, "occupancy grid resolution must be >= 1");
}

Index OccupancyGrid::cell_of(const Vec3& p) const {
  Index idx[3];
  for (int a = 0; a < 3; ++a) {
    if (!(p[a] >= -1.0 && p[a] <= 1.0)) return -1;
    idx[a] = std::min<Index>(static_cast<Index>((p[a] + 1.0) * 0.5 * static_cast<Real>(resolution_)), resolution_ - 1);
  }
  return cell_index(idx[0], idx[1], idx[2]);
}

bool OccupancyGrid::occupied(const Vec3& p) const {
  const Index c = cell_of(p);
  return c >= 0 && bits_[static_cast<size_t>(c)] != 0;
}

Index OccupancyGrid::occupied_count() const {
  return static_cast<Index>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Vec3 OccupancyGrid::cell_min(Index cell) const {
  const Index i = cell % resolution_;
  const Index j = (cell / resolution_) % resolution_;
  const Index k = cell / (resolution_ * resolution_);
  return Vec3(static_cast<Real>(i), static_cast<Real>(j), static_cast<Real>(k)) * cell_size() - Vec3::Ones();
}

void OccupancyGrid::restore(std::vector<std::uint8_t> bits, std::vector<Real> ema, bool has_estimate) {
  require(static_cast<Index>(bits.size()) == cell_count() && static_cast<Index>(ema.size()) == cell_count(),
          ErrorCode::kShapeMismatch, "restored occupancy grid has the wrong size");
  bits_ = std::move(bits);
  ema_ = std::move(ema);
  has_estimate_ = has_estimate;
}

void OccupancyGrid::fold(const std::vector<Real>& probe_max, Real decay, Real threshold) {
  require(static_cast<Index>(probe_max.size()) == cell_count(), ErrorCode::kShapeMismatch,
          "occupancy probe count does not match the grid");
  for (size_t c = 0; c < probe_max.size(); ++c) {
    ema_[c] = has_estimate_ ? std::max(decay * ema_[c], probe_max[c]) : probe_max[c];
    bits_[c] = ema_[c] >= threshold ? 1 : 0;
  }
  has_estimate_ = true;
}

RaySamples march_ray(const Ray& ray, const OccupancyGrid& grid, const RenderConfig& cfg, Rng* jitter) {
  RaySamples out;
  Ray clipped = ray;
  clipped.near = std::max(ray.near, cfg.near);
  clipped.far = std::min(ray.far, cfg.far);
  Real t0 = 0.0, t1 = 0.0;
  if (!intersect_box(clipped, -1.0, 1.0, t0, t1)) return out;
  for (Index k = 0; k < cfg.max_samples; ++k) {
    const Real a = t0 + static_cast<Real>(k) * cfg.step;
    if (a >= t1) break;
    const Real b = std::min(a + cfg.step, t1);
    const Real u = jitter ? jitter->uniform() : 0.5;
    const Real t = a + u * (b - a);
    if (!grid.occupied(ray.at(t))) continue;
    out.t.push_back(t);
    out.delta.push_back(b - a);
  }
  return out;
}

std::vector<Real> compositing_weights(std::span<const Real> sigma, std::span<const Real> delta, Real* t_final) {
  std::vector<Real> w(sigma.size());
  Real trans = 1.0;
  for (size_t i = 0; i < sigma.size(); ++i) {
    const Real survive = std::exp(-sigma[i] * delta[i]);
    w[i] = trans * (1.0 - survive);
    trans *= survive;
  }
  if (t_final) *t_final = trans;
  return w;
}

CompositeResult composite(const Eigen::Ref<const Mat4X>& samples, std::span<const Real> delta,
                          std::span<const Real> t, const Vec3& background) {
  CompositeResult out;
  Real trans = 1.0;
  Real depth_acc = 0.0;
  for (Index i = 0; i < samples.cols(); ++i) {
    const size_t s = static_cast<size_t>(i);
    const Real survive = std::exp(-samples(3, i) * delta[s]);
    const Real w = trans * (1.0 - survive);
    out.rgb += w * samples.block<3, 1>(0, i);
    depth_acc += w * t[s];
    trans *= survive;
  }
  out.rgb += trans * background;
  out.opacity = 1.0 - trans;
  out.depth = depth_acc / std::max(out.opacity, 1e-10);
  return out;
}

void composite_backward(const Eigen::Ref<const Mat4X>& samples, std::span<const Real> delta,
                        const Vec3& background, const Vec3& d_rgb, Eigen::Ref<Mat4X> d_samples) {
  const Index n = samples.cols();
  std::vector<Real> trans_after(static_cast<size_t>(n));
  std::vector<Real> weight(static_cast<size_t>(n));
  Real trans = 1.0;
  for (Index i = 0; i < n; ++i) {
    const Real survive = std::exp(-samples(3, i) * delta[static_cast<size_t>(i)]);
    weight[static_cast<size_t>(i)] = trans * (1.0 - survive);
    trans *= survive;
    trans_after[static_cast<size_t>(i)] = trans;
  }
  // suffix = sum_{i>k} w_i (g . c_i) + T_final (g . background)
  Real suffix = trans * d_rgb.dot(background);
  for (Index k = n; k-- > 0;) {
    const size_t s = static_cast<size_t>(k);
    const Real gc = d_rgb.dot(samples.block<3, 1>(0, k));
    d_samples.block<3, 1>(0, k) = weight[s] * d_rgb;
    d_samples(3, k) = delta[s] * (trans_after[s] * gc - suffix);
    suffix += weight[s] * gc;
  }
}

SampleBatch build_samples(std::span<const Ray> rays, std::span<const std::uint64_t> ray_seeds,
                          const OccupancyGrid& grid, const RenderConfig& cfg) {
  require(ray_seeds.size() == rays.size(), ErrorCode::kShapeMismatch, "one stratification seed per ray");
  SampleBatch batch;
  batch.offsets.reserve(rays.size() + 1);
  batch.offsets.push_back(0);
  for (size_t r = 0; r < rays.size(); ++r) {
    RaySamples s;
    if (cfg.stratified) {
      Rng rng(ray_seeds[r]);
      s = march_ray(rays[r], grid, cfg, &rng);
    } else {
      s = march_ray(rays[r], grid, cfg, nullptr);
    }
    batch.t.insert(batch.t.end(), s.t.begin(), s.t.end());
    batch.delta.insert(batch.delta.end(), s.delta.begin(), s.delta.end());
    batch.offsets.push_back(static_cast<Index>(batch.t.size()));
  }
  batch.positions.resize(3, batch.sample_count());
  for (Index r = 0; r < batch.ray_count(); ++r) {
    const Ray& ray = rays[static_cast<size_t>(r)];
    for (Index i = batch.offsets[static_cast<size_t>(r)]; i < batch.offsets[static_cast<size_t>(r) + 1]; ++i) {
      batch.positions.col(i) = ray.at(batch.t[static_cast<size_t>(i)]);
    }
  }
  return batch;
}

namespace {

void composite_batch(const SampleBatch& batch, const Mat4X& samples, const Vec3& background, RenderOutput& out,
                     Index first_ray) {
  for (Index r = 0; r < batch.ray_count(); ++r) {
    const Index b = batch.offsets[static_cast<size_t>(r)];
    const Index e = batch.offsets[static_cast<size_t>(r) + 1];
    const auto n = static_cast<size_t>(e - b);
    const CompositeResult c =
        composite(samples.middleCols(b, e - b), std::span<const Real>(batch.delta.data() + b, n),
                  std::span<const Real>(batch.t.data() + b, n), background);
    out.rgb.col(first_ray + r) = c.rgb;
    out.opacity[first_ray + r] = c.opacity;
    out.depth[first_ray + r] = c.depth;
  }
}

}  // namespace

RenderOutput render_rays(const RadianceField& field, std::span<const Ray> rays,
                         std::span<const std::uint64_t> ray_seeds, const OccupancyGrid& grid,
                         const RenderConfig& cfg) {
  cfg.validate();
  require(ray_seeds.size() == rays.size(), ErrorCode::kShapeMismatch, "one stratification seed per ray");
  const Index n = static_cast<Index>(rays.size());
  RenderOutput out{Mat3X(3, n), VecX(n), VecX(n)};
  const Index chunk = std::max<Index>(1, cfg.sample_budget / std::max<Index>(1, cfg.max_samples));
  for (Index first = 0; first < n; first += chunk) {
    const Index count = std::min(chunk, n - first);
    const auto sub_rays = rays.subspan(static_cast<size_t>(first), static_cast<size_t>(count));
    const auto sub_seeds = ray_seeds.subspan(static_cast<size_t>(first), static_cast<size_t>(count));
    const SampleBatch batch = build_samples(sub_rays, sub_seeds, grid, cfg);
    const Mat4X samples = batch.sample_count() > 0 ? field.evaluate(batch.positions) : Mat4X(4, 0);
    composite_batch(batch, samples, cfg.background, out, first);
  }
  return out;
}

RenderOutput render_pixels(const Camera& cam, const RadianceField& field, std::span<const Index> pixels,
                           const OccupancyGrid& grid, const RenderConfig& cfg) {
  cam.validate();
  std::vector<Ray> rays;
  std::vector<std::uint64_t> seeds;
  rays.reserve(pixels.size());
  seeds.reserve(pixels.size());
  for (Index p : pixels) {
    require(p >= 0 && p < cam.pixel_count(), ErrorCode::kInvalidArgument, "pixel index out of range");
    rays.push_back(ray_for_pixel(cam, p));
    seeds.push_back(derive_seed(cfg.seed, static_cast<std::uint64_t>(p)));
  }
  return render_rays(field, rays, seeds, grid, cfg);
}

ViewRender render_view(const Camera& cam, const RadianceField& field, const OccupancyGrid& grid,
                       const RenderConfig& cfg) {
  std::vector<Index> pixels(static_cast<size_t>(cam.pixel_count()));
  for (Index i = 0; i < cam.pixel_count(); ++i) pixels[static_cast<size_t>(i)] = i;
  RenderOutput out = render_pixels(cam, field, pixels, grid, cfg);
  ViewRender view{Image(cam.width, cam.height), std::move(out.opacity), std::move(out.depth)};
  for (Index i = 0; i < cam.pixel_count(); ++i) view.rgb.set_pixel(i, out.rgb.col(i));
  return view;
}

Image render_image(const Camera& cam, const RadianceField& field, const OccupancyGrid& grid,
                   const RenderConfig& cfg) {
  return render_view(cam, field, grid, cfg).rgb;
}

ViewRender reference_render(const Camera& cam, const RadianceField& field, const RenderConfig& cfg) {
  RenderConfig dense = cfg;
  dense.step = cfg.step / 16.0;
  dense.max_samples = static_cast<Index>(std::ceil(2.0 * std::sqrt(3.0) / dense.step)) + 2;
  dense.stratified = false;
  return render_view(cam, field, OccupancyGrid(1, true), dense);
}

void update_occupancy(OccupancyGrid& grid, const RadianceField& field, const RenderConfig& cfg,
                      std::uint64_t seed) {
  cfg.validate();
  const Index cells = grid.cell_count();
  const Index k = cfg.probes_per_cell;
  const Real size = grid.cell_size();
  std::vector<Real> probe_max(static_cast<size_t>(cells), 0.0);
  Rng rng(seed);
  const Index chunk = std::max<Index>(1, cfg.sample_budget / k);
  for (Index first = 0; first < cells; first += chunk) {
    const Index count = std::min(chunk, cells - first);
    Mat3X pts(3, count * k);
    for (Index c = 0; c < count; ++c) {
      const Vec3 lo = grid.cell_min(first + c);
      for (Index s = 0; s < k; ++s) {
        pts.col(c * k + s) = lo + size * Vec3(rng.uniform(), rng.uniform(), rng.uniform());
      }
    }
    const Mat4X out = field.evaluate(pts);
    for (Index c = 0; c < count; ++c) {
      Real m = 0.0;
      for (Index s = 0; s < k; ++s) m = std::max(m, out(3, c * k + s));
      probe_max[static_cast<size_t>(first + c)] = m;
    }
  }
  grid.fold(probe_max, cfg.ema_decay, cfg.density_threshold);
}

OccupancyGrid occupancy_for_field(const RadianceField& field, const RenderConfig& cfg, std::uint64_t seed) {
  OccupancyGrid grid(cfg.grid_resolution, true);
  update_occupancy(grid, field, cfg, seed);
  return grid;
}

Mat3X render_rays_forward(const FieldWeights& weights, const FeatureVolume* volume, std::span<const Ray> rays,
                          std::span<const std::uint64_t> ray_seeds, const OccupancyGrid& grid,
                          const RenderConfig& cfg, RenderTape* tape) {
  cfg.validate();
  RenderTape local;
  RenderTape& tp = tape ? *tape : local;
  tp.batch = build_samples(rays, ray_seeds, grid, cfg);
  tp.samples = tp.batch.sample_count() > 0 ? field_forward(weights, tp.batch.positions, volume, &tp.field)
                                           : Mat4X(4, 0);
  const Index n = tp.batch.ray_count();
  RenderOutput out{Mat3X(3, n), VecX(n), VecX(n)};
  composite_batch(tp.batch, tp.samples, cfg.background, out, 0);
  return out.rgb;
}

void render_rays_backward(const FieldWeights& weights, const FeatureVolume* volume, const RenderTape& tape,
                          const Mat3X& d_rgb, const RenderConfig& cfg, std::span<Real> d_flat,
                          FeatureVolume* d_volume) {
  const SampleBatch& batch = tape.batch;
  require(d_rgb.cols() == batch.ray_count(), ErrorCode::kShapeMismatch, "ray gradient count mismatch");
  if (batch.sample_count() == 0) return;
  Mat4X d_samples(4, batch.sample_count());
  for (Index r = 0; r < batch.ray_count(); ++r) {
    const Index b = batch.offsets[static_cast<size_t>(r)];
    const Index e = batch.offsets[static_cast<size_t>(r) + 1];
    if (e == b) continue;
    composite_backward(tape.samples.middleCols(b, e - b),
                       std::span<const Real>(batch.delta.data() + b, static_cast<size_t>(e - b)), cfg.background,
                       d_rgb.col(r), d_samples.middleCols(b, e - b));
  }
  field_backward(weights, volume, tape.field, d_samples, d_flat, d_volume);
}

}  // namespace gpn
