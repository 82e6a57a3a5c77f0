// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gpn/field.hpp"
#include "gpn/geometry.hpp"
#include "gpn/image.hpp"
#include "gpn/renderer.hpp"

namespace gpn {

/// Sphere or axis-aligned box. Two-tone coloring splits the primitive by the
/// plane through its center with normal `tone_axis`: the positive side gets
/// color_a, the rest color_b, with a narrow smooth blend across the seam. A
/// zero axis means a constant color_a.
struct Primitive {
  enum class Type { kSphere, kBox };

  Type type = Type::kSphere;
  Vec3 center = Vec3::Zero();
  Real radius = 0.5;
  Vec3 half_extent = Vec3::Constant(0.4);
  Vec3 color_a = Vec3(0.9, 0.2, 0.15);
  Vec3 color_b = Vec3(0.15, 0.3, 0.9);
  Vec3 tone_axis = Vec3::UnitZ();

  Real sdf(const Vec3& p) const;
  Vec3 color(const Vec3& p) const;
  Real surface_area() const;
  /// Uniform-by-area point on the surface.
  Vec3 sample_surface(Rng& rng) const;
  Vec3 bounds_min() const;
  Vec3 bounds_max() const;
};

enum class ShapeKind { kSphere, kBox, kUnion };

const char* to_string(ShapeKind kind);
ShapeKind shape_kind_from_string(const std::string& name);

/// Analytic colored solid. Density is a smoothed indicator of the interior,
/// sigma_max * sigmoid(-sdf / sharpness), so reference renders stay well
/// resolved by dense quadrature.
struct AnalyticShape {
  ShapeKind kind = ShapeKind::kSphere;
  std::vector<Primitive> parts;
  Real sigma_max = 40.0;
  Real sharpness = 0.015;

  static AnalyticShape sphere(const Vec3& center, Real radius, const Vec3& color_a, const Vec3& color_b,
                              const Vec3& tone_axis = Vec3::UnitZ());
  static AnalyticShape box(const Vec3& center, const Vec3& half_extent, const Vec3& color_a, const Vec3& color_b,
                           const Vec3& tone_axis = Vec3::UnitZ());
  static AnalyticShape union_of(const Primitive& a, const Primitive& b);
  /// Random member of a family, fitting in [-0.8, 0.8]^3.
  static AnalyticShape random(ShapeKind kind, Rng& rng);

  void validate() const;
  /// Union SDF (min over parts); exact outside the shape and for single primitives.
  Real sdf(const Vec3& p) const;
  /// Color of the part nearest to p (blended near the equidistant surface).
  Vec3 color(const Vec3& p) const;
  Real density(const Vec3& p) const;
  /// Density level at the surface (sdf = 0).
  Real surface_density() const { return 0.5 * sigma_max; }

  /// Exact surface samples of the union with colors from the color function.
  ColoredPointCloud sample_surface(Index n, std::uint64_t seed) const;

  std::string to_json() const;
  static AnalyticShape from_json(const std::string& text);
};

class AnalyticField final : public RadianceField {
 public:
  explicit AnalyticField(AnalyticShape shape) : shape_(std::move(shape)) {}
  Mat4X evaluate(const Mat3X& positions) const override;
  const AnalyticShape& shape() const { return shape_; }

 private:
  AnalyticShape shape_;
};

struct SceneSpec {
  Index n_points = 16384;
  Index n_views = 100;
  Real radius = 1.5;
  int resolution = 200;
  /// Focal length as a fraction of the image width.
  Real focal_ratio = 0.75;

  static SceneSpec full() { return {}; }
  static SceneSpec desk() { return {16384, 20, 1.5, 64, 0.75}; }
};

struct Scene {
  ColoredPointCloud cloud;
  std::vector<Camera> cameras;
  std::vector<Image> images;
  std::optional<AnalyticShape> shape;
  std::uint64_t seed = 0;

  Index view_count() const { return static_cast<Index>(cameras.size()); }
  void validate() const;
};

/// Cameras uniform on the upper hemisphere (z >= 0) at `radius`, looking at the origin.
std::vector<Camera> hemisphere_cameras(Index n_views, Real radius, int resolution, Real focal_ratio,
                                       std::uint64_t seed);

Scene make_scene(const AnalyticShape& shape, const SceneSpec& spec, std::uint64_t seed,
                 const RenderConfig& render = {});

/// Directory layout: cloud.ply, cameras.json, images/view_%03d.png, meta.json.
void save_scene(const std::filesystem::path& dir, const Scene& scene);
Scene load_scene(const std::filesystem::path& dir);

std::string view_filename(Index view);

}  // namespace gpn
