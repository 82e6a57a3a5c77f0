// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gpn/field.hpp"
#include "gpn/geometry.hpp"
#include "gpn/image.hpp"

namespace gpn {

struct RenderConfig {
  /// Marching step delta; 128 steps span the box diagonal.
  Real step = 2.0 * 1.7320508075688772 / 128.0;
  /// Upper bound S on samples per ray.
  Index max_samples = 256;
  Real near = 0.0;
  Real far = 1e3;
  Vec3 background = Vec3::Zero();
  /// tau_sigma: cells whose (smoothed) max density falls below this are skipped.
  Real density_threshold = 0.01;
  Real ema_decay = 0.95;
  Index grid_resolution = 64;
  Index probes_per_cell = 2;
  /// Random position inside each step when true, step midpoint otherwise.
  bool stratified = true;
  std::uint64_t seed = 0;
  /// Soft cap on samples evaluated per field call.
  Index sample_budget = 1 << 16;

  void validate() const;
};

/// Binary occupancy over [-1, 1]^3 at resolution G^3 plus the running density
/// estimate it is thresholded from.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  explicit OccupancyGrid(Index resolution, bool occupied = true);

  Index resolution() const { return resolution_; }
  Index cell_count() const { return resolution_ * resolution_ * resolution_; }
  Index cell_index(Index i, Index j, Index k) const { return i + resolution_ * (j + resolution_ * k); }
  /// -1 for points outside the box.
  Index cell_of(const Vec3& p) const;
  bool occupied(const Vec3& p) const;
  bool occupied_cell(Index cell) const { return bits_[static_cast<size_t>(cell)] != 0; }
  void set_cell(Index cell, bool value) { bits_[static_cast<size_t>(cell)] = value ? 1 : 0; }
  Index occupied_count() const;
  Vec3 cell_min(Index cell) const;
  Real cell_size() const { return 2.0 / static_cast<Real>(resolution_); }

  bool has_estimate() const { return has_estimate_; }
  const std::vector<Real>& density_estimate() const { return ema_; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  /// Restores a saved state (checkpointing).
  void restore(std::vector<std::uint8_t> bits, std::vector<Real> ema, bool has_estimate);

  /// Folds a new max-density probe per cell into the estimate:
  /// first update copies it, later ones use max(decay * old, new).
  void fold(const std::vector<Real>& probe_max, Real decay, Real threshold);

 private:
  Index resolution_ = 0;
  std::vector<std::uint8_t> bits_;
  std::vector<Real> ema_;
  bool has_estimate_ = false;
};

/// Samples along one ray: distances t_i and interval lengths delta_i.
struct RaySamples {
  std::vector<Real> t;
  std::vector<Real> delta;
};

/// Steps through the in-box segment with stride cfg.step; one sample per step
/// (jittered when `jitter` is non-null) kept only if its cell is occupied.
RaySamples march_ray(const Ray& ray, const OccupancyGrid& grid, const RenderConfig& cfg, Rng* jitter);

struct CompositeResult {
  Vec3 rgb = Vec3::Zero();
  Real opacity = 0.0;
  Real depth = 0.0;
};

/// Emission-absorption quadrature. `samples` is 4 x n (rgb rows, sigma row).
/// alpha_i = 1 - exp(-sigma_i delta_i), T_i = prod_{j<i} (1 - alpha_j).
CompositeResult composite(const Eigen::Ref<const Mat4X>& samples, std::span<const Real> delta,
                          std::span<const Real> t, const Vec3& background);

/// Gradient of composite().rgb contracted with d_rgb, written into d_samples (4 x n).
void composite_backward(const Eigen::Ref<const Mat4X>& samples, std::span<const Real> delta,
                        const Vec3& background, const Vec3& d_rgb, Eigen::Ref<Mat4X> d_samples);

/// Per-sample weights T_i alpha_i; `t_final` receives the residual transmittance.
std::vector<Real> compositing_weights(std::span<const Real> sigma, std::span<const Real> delta, Real* t_final);

/// Flattened samples for a batch of rays.
struct SampleBatch {
  std::vector<Index> offsets;  // rays + 1 entries
  std::vector<Real> t;
  std::vector<Real> delta;
  Mat3X positions;

  Index ray_count() const { return static_cast<Index>(offsets.size()) - 1; }
  Index sample_count() const { return static_cast<Index>(t.size()); }
};

/// Stratification seeds are per ray so a subset of rays reproduces the same
/// samples it would get inside a full-image render.
SampleBatch build_samples(std::span<const Ray> rays, std::span<const std::uint64_t> ray_seeds,
                          const OccupancyGrid& grid, const RenderConfig& cfg);

struct RenderOutput {
  Mat3X rgb;
  VecX opacity;
  VecX depth;
};

RenderOutput render_rays(const RadianceField& field, std::span<const Ray> rays,
                         std::span<const std::uint64_t> ray_seeds, const OccupancyGrid& grid,
                         const RenderConfig& cfg);

/// Renders the listed pixels of `cam` (seed of pixel i = derive_seed(cfg.seed, i)).
RenderOutput render_pixels(const Camera& cam, const RadianceField& field, std::span<const Index> pixels,
                           const OccupancyGrid& grid, const RenderConfig& cfg);

struct ViewRender {
  Image rgb;
  VecX opacity;
  VecX depth;
};

ViewRender render_view(const Camera& cam, const RadianceField& field, const OccupancyGrid& grid,
                       const RenderConfig& cfg);
Image render_image(const Camera& cam, const RadianceField& field, const OccupancyGrid& grid,
                   const RenderConfig& cfg);

/// Dense midpoint quadrature at cfg.step / 16 with no occupancy culling.
ViewRender reference_render(const Camera& cam, const RadianceField& field, const RenderConfig& cfg);

/// Probes K random points per cell and folds their max density into the grid.
void update_occupancy(OccupancyGrid& grid, const RadianceField& field, const RenderConfig& cfg,
                      std::uint64_t seed);
/// Fresh grid at cfg.grid_resolution after a single update.
OccupancyGrid occupancy_for_field(const RadianceField& field, const RenderConfig& cfg, std::uint64_t seed);

/// Differentiable rendering of a ray batch through generated field weights.
struct RenderTape {
  SampleBatch batch;
  FieldCache field;
  Mat4X samples;
};

Mat3X render_rays_forward(const FieldWeights& weights, const FeatureVolume* volume, std::span<const Ray> rays,
                          std::span<const std::uint64_t> ray_seeds, const OccupancyGrid& grid,
                          const RenderConfig& cfg, RenderTape* tape);

void render_rays_backward(const FieldWeights& weights, const FeatureVolume* volume, const RenderTape& tape,
                          const Mat3X& d_rgb, const RenderConfig& cfg, std::span<Real> d_flat,
                          FeatureVolume* d_volume);

}  // namespace gpn
