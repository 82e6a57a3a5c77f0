// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "gpn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Geometry>

namespace gpn {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDegenerateExtent: return "degenerate-extent";
    case ErrorCode::kEmptyPart: return "empty-part";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kCountMismatch: return "count-mismatch";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kEmptySet: return "empty-set";
    case ErrorCode::kEmptyMesh: return "empty-mesh";
    case ErrorCode::kNonFinite: return "non-finite";
    case ErrorCode::kIncompatibleCheckpoint: return "incompatible-checkpoint";
    case ErrorCode::kNumerical: return "numerical";
  }
  return "unknown";
}

ColoredPointCloud::ColoredPointCloud(Mat3X p, Mat3X c) : positions(std::move(p)), colors(std::move(c)) {
  require(positions.cols() == colors.cols(), ErrorCode::kShapeMismatch,
          "point cloud positions and colors differ in count");
}

void ColoredPointCloud::validate() const {
  require(positions.cols() == colors.cols(), ErrorCode::kShapeMismatch,
          "point cloud positions and colors differ in count");
  require(positions.allFinite(), ErrorCode::kNonFinite, "point cloud has non-finite coordinates");
  require(colors.allFinite() && (colors.array() >= 0.0).all() && (colors.array() <= 1.0).all(),
          ErrorCode::kInvalidArgument, "point colors must lie in [0, 1]");
}

MatX ColoredPointCloud::stacked() const {
  MatX out(6, size());
  out.topRows(3) = positions;
  out.bottomRows(3) = colors;
  return out;
}

ColoredPointCloud ColoredPointCloud::select(std::span<const Index> indices) const {
  Mat3X p(3, static_cast<Index>(indices.size()));
  Mat3X c(3, static_cast<Index>(indices.size()));
  for (size_t i = 0; i < indices.size(); ++i) {
    p.col(static_cast<Index>(i)) = positions.col(indices[i]);
    c.col(static_cast<Index>(i)) = colors.col(indices[i]);
  }
  return {std::move(p), std::move(c)};
}

ColoredPointCloud ColoredPointCloud::concat(const ColoredPointCloud& a, const ColoredPointCloud& b) {
  Mat3X p(3, a.size() + b.size());
  Mat3X c(3, a.size() + b.size());
  p << a.positions, b.positions;
  c << a.colors, b.colors;
  return {std::move(p), std::move(c)};
}

Mat3X NormalizeTransform::invert(const Mat3X& q) const {
  return (q / scale).colwise() - translation;
}

NormalizeResult normalize(const ColoredPointCloud& cloud) {
  require(cloud.size() >= 1, ErrorCode::kInvalidArgument, "normalize needs at least one point");
  const Vec3 lo = cloud.positions.rowwise().minCoeff();
  const Vec3 hi = cloud.positions.rowwise().maxCoeff();
  const Vec3 center = 0.5 * (lo + hi);
  const Real half_extent = (0.5 * (hi - lo)).maxCoeff();
  require(half_extent > 0.0, ErrorCode::kDegenerateExtent,
          "all points coincide; cannot normalize a zero-extent cloud");

  NormalizeTransform tf;
  tf.translation = -center;
  tf.scale = 1.0 / half_extent;

  NormalizeResult out;
  out.transform = tf;
  out.cloud.positions = tf.scale * (cloud.positions.colwise() + tf.translation);
  out.cloud.colors = cloud.colors;
  return out;
}

SplitPlane SplitPlane::make(const Vec3& normal, Real offset) {
  const Real n = normal.norm();
  require(n > 0.0 && std::isfinite(n), ErrorCode::kInvalidArgument, "split plane normal must be nonzero");
  return {normal / n, offset / n};
}

SplitResult split_by_plane(const ColoredPointCloud& cloud, const SplitPlane& plane) {
  require(cloud.size() >= 2, ErrorCode::kInvalidArgument, "split_by_plane needs at least two points");
  std::vector<Index> existing;
  std::vector<Index> missing;
  for (Index i = 0; i < cloud.size(); ++i) {
    if (plane.signed_distance(cloud.positions.col(i)) >= 0.0) {
      existing.push_back(i);
    } else {
      missing.push_back(i);
    }
  }
  require(!existing.empty() && !missing.empty(), ErrorCode::kEmptyPart,
          "split plane leaves one side empty (existing=" + std::to_string(existing.size()) +
              ", missing=" + std::to_string(missing.size()) + ")");
  return {cloud.select(existing), cloud.select(missing)};
}

SplitPlane random_split_plane(const ColoredPointCloud& cloud, Rng& rng) {
  const Vec3 lo = cloud.positions.rowwise().minCoeff();
  const Vec3 hi = cloud.positions.rowwise().maxCoeff();
  const Vec3 center = 0.5 * (lo + hi);
  const Vec3 half = 0.5 * (hi - lo);
  // Anchor inside the middle half of the box so both sides usually get points.
  Vec3 anchor;
  for (int k = 0; k < 3; ++k) anchor[k] = center[k] + 0.5 * half[k] * rng.uniform(-1.0, 1.0);
  const Vec3 n = rng.unit_vector();
  return {n, n.dot(anchor)};
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, int width, int height, Real focal) {
  const Vec3 back = (eye - target).normalized();
  Vec3 up = Vec3::UnitZ();
  if (std::abs(back.dot(up)) > 1.0 - 1e-9) up = Vec3::UnitY();
  const Vec3 right = up.cross(back).normalized();
  const Vec3 true_up = back.cross(right);

  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.focal = focal;
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  cam.c2w.setIdentity();
  cam.c2w.block<3, 1>(0, 0) = right;
  cam.c2w.block<3, 1>(0, 1) = true_up;
  cam.c2w.block<3, 1>(0, 2) = back;
  cam.c2w.block<3, 1>(0, 3) = eye;
  return cam;
}

void Camera::validate() const {
  require(width > 0 && height > 0, ErrorCode::kInvalidArgument, "camera size must be positive");
  require(focal > 0.0 && std::isfinite(focal), ErrorCode::kInvalidArgument, "camera focal must be positive");
  require(c2w.allFinite(), ErrorCode::kNonFinite, "camera transform is not finite");
  const Mat3 r = rotation();
  const Real err = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  require(err < 1e-6, ErrorCode::kInvalidArgument, "camera rotation block is not orthonormal");
}

bool Camera::project(const Vec3& world, Vec2& pixel, Real& axial_depth) const {
  const Vec3 local = rotation().transpose() * (world - center());
  axial_depth = -local.z();
  if (axial_depth <= 1e-12) return false;
  pixel.x() = cx + focal * local.x() / axial_depth;
  pixel.y() = cy - focal * local.y() / axial_depth;
  return true;
}

Ray ray_for_pixel(const Camera& cam, Index pixel) {
  const Index x = pixel % cam.width;
  const Index y = pixel / cam.width;
  const Vec3 local((static_cast<Real>(x) + 0.5 - cam.cx) / cam.focal,
                   -(static_cast<Real>(y) + 0.5 - cam.cy) / cam.focal, -1.0);
  Ray ray;
  ray.origin = cam.center();
  ray.direction = (cam.rotation() * local).normalized();
  return ray;
}

std::vector<Ray> rays_for_camera(const Camera& cam) {
  cam.validate();
  std::vector<Ray> rays(static_cast<size_t>(cam.pixel_count()));
  for (Index i = 0; i < cam.pixel_count(); ++i) rays[static_cast<size_t>(i)] = ray_for_pixel(cam, i);
  return rays;
}

ColoredPointCloud subsample(const ColoredPointCloud& cloud, Index k, std::uint64_t seed) {
  require(cloud.size() >= 1 && k >= 1, ErrorCode::kInvalidArgument, "subsample needs N >= 1 and k >= 1");
  Rng rng(seed);
  const Index n = cloud.size();
  std::vector<Index> idx;
  if (k <= n) {
    idx.resize(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
    for (Index i = 0; i < k; ++i) {
      const Index j = i + rng.index(n - i);
      std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }
    idx.resize(static_cast<size_t>(k));
  } else {
    idx.resize(static_cast<size_t>(k));
    for (auto& v : idx) v = rng.index(n);
  }
  return cloud.select(idx);
}

bool intersect_box(const Ray& ray, Real lo, Real hi, Real& t_enter, Real& t_exit) {
  t_enter = ray.near;
  t_exit = ray.far;
  for (int k = 0; k < 3; ++k) {
    const Real d = ray.direction[k];
    const Real o = ray.origin[k];
    if (std::abs(d) < 1e-15) {
      if (o < lo || o > hi) return false;
      continue;
    }
    Real t0 = (lo - o) / d;
    Real t1 = (hi - o) / d;
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
  }
  return t_exit > t_enter;
}

}  // namespace gpn
