// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gpn/common.hpp"

namespace gpn {

/// N colored points stored column-wise: positions(:, i) and colors(:, i)
/// describe point i. Colors are RGB in [0, 1].
struct ColoredPointCloud {
  Mat3X positions;
  Mat3X colors;

  ColoredPointCloud() = default;
  ColoredPointCloud(Mat3X p, Mat3X c);

  Index size() const { return positions.cols(); }
  bool empty() const { return positions.cols() == 0; }

  /// Throws kShapeMismatch / kNonFinite / kInvalidArgument on broken invariants.
  void validate() const;

  /// 6 x N matrix with rows (x, y, z, r, g, b).
  MatX stacked() const;

  ColoredPointCloud select(std::span<const Index> indices) const;
  static ColoredPointCloud concat(const ColoredPointCloud& a, const ColoredPointCloud& b);
};

/// Affine map from input coordinates to the normalized [-1, 1]^3 frame:
/// normalized = scale * (p + translation).
struct NormalizeTransform {
  Real scale = 1.0;
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (p + translation); }
  Vec3 invert(const Vec3& q) const { return q / scale - translation; }
  Mat3X invert(const Mat3X& q) const;
};

struct NormalizeResult {
  ColoredPointCloud cloud;
  NormalizeTransform transform;
};

/// Centers the bounding box at the origin and scales so max |coordinate| = 1.
NormalizeResult normalize(const ColoredPointCloud& cloud);

/// Points with normal . p - offset >= 0 belong to the "existing" side.
struct SplitPlane {
  Vec3 normal = Vec3::UnitZ();
  Real offset = 0.0;

  /// Rescales a non-unit normal (and the offset with it) onto the unit sphere.
  static SplitPlane make(const Vec3& normal, Real offset);
  Real signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
  SplitPlane flipped() const { return {-normal, -offset}; }
};

struct SplitResult {
  ColoredPointCloud existing;
  ColoredPointCloud missing;
};

SplitResult split_by_plane(const ColoredPointCloud& cloud, const SplitPlane& plane);

/// Random plane through a point drawn inside the central part of the cloud's
/// bounding box, with a uniformly random orientation.
SplitPlane random_split_plane(const ColoredPointCloud& cloud, Rng& rng);

/// Pinhole camera. The camera looks down its local -Z axis with +Y up; image
/// rows grow downwards. c2w maps camera coordinates to world coordinates.
struct Camera {
  int width = 0;
  int height = 0;
  Real focal = 1.0;
  Real cx = 0.0;
  Real cy = 0.0;
  Mat4 c2w = Mat4::Identity();

  static Camera look_at(const Vec3& eye, const Vec3& target, int width, int height, Real focal);

  Vec3 center() const { return c2w.block<3, 1>(0, 3); }
  Mat3 rotation() const { return c2w.block<3, 3>(0, 0); }
  /// World-space optical axis (camera -Z).
  Vec3 forward() const { return -c2w.block<3, 1>(0, 2); }
  Index pixel_count() const { return static_cast<Index>(width) * height; }

  void validate() const;

  /// Continuous pixel coordinates (pixel centers at i + 0.5) and the distance
  /// along the optical axis. Returns false for points behind the camera.
  bool project(const Vec3& world, Vec2& pixel, Real& axial_depth) const;
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = -Vec3::UnitZ();
  Real near = 0.0;
  Real far = 1e3;

  Vec3 at(Real t) const { return origin + t * direction; }
};

Ray ray_for_pixel(const Camera& cam, Index pixel);

/// One ray per pixel through the pixel center, row-major (index = y * W + x).
std::vector<Ray> rays_for_camera(const Camera& cam);

/// k points uniformly at random: without replacement when k <= N, with
/// replacement otherwise. Deterministic for a fixed seed.
ColoredPointCloud subsample(const ColoredPointCloud& cloud, Index k, std::uint64_t seed);

/// Entry and exit distances of a ray through the axis-aligned box [lo, hi]^3.
/// Returns false when the ray misses the box.
bool intersect_box(const Ray& ray, Real lo, Real hi, Real& t_enter, Real& t_exit);

}  // namespace gpn
