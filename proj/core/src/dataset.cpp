// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "gpn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "gpn/io.hpp"

namespace gpn {

namespace {

using json = nlohmann::json;

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 json_vec(const json& j) {
  require(j.is_array() && j.size() == 3, ErrorCode::kParse, "expected a 3-vector");
  return {j[0].get<Real>(), j[1].get<Real>(), j[2].get<Real>()};
}

const Vec3 kPalette[] = {
    {0.85, 0.20, 0.15}, {0.15, 0.35, 0.85}, {0.20, 0.75, 0.25}, {0.90, 0.75, 0.15},
    {0.70, 0.25, 0.75}, {0.15, 0.75, 0.75}, {0.90, 0.50, 0.15}, {0.85, 0.85, 0.85},
};

void random_colors(Primitive& p, Rng& rng) {
  const Index n = static_cast<Index>(std::size(kPalette));
  const Index a = rng.index(n);
  Index b = rng.index(n - 1);
  if (b >= a) ++b;
  p.color_a = kPalette[a];
  p.color_b = kPalette[b];
  const Index axis = rng.index(3);
  p.tone_axis = Vec3::Unit(axis);
}

}  // namespace

Real Primitive::sdf(const Vec3& p) const {
  if (type == Type::kSphere) return (p - center).norm() - radius;
  const Vec3 q = (p - center).cwiseAbs() - half_extent;
  return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
}

namespace {

// Color seams are blended over a thin band so the analytic scenes have
// continuous radiance and dense quadrature converges at second order.
constexpr Real kSeamHalfWidth = 0.02;

Real seam_weight(Real d) {
  const Real x = std::clamp(0.5 + 0.5 * d / kSeamHalfWidth, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

}  // namespace

Vec3 Primitive::color(const Vec3& p) const {
  const Real n = tone_axis.norm();
  if (n == 0.0) return color_a;
  const Real w = seam_weight(tone_axis.dot(p - center) / n);
  return w * color_a + (1.0 - w) * color_b;
}

Real Primitive::surface_area() const {
  if (type == Type::kSphere) return 4.0 * std::numbers::pi * radius * radius;
  const Vec3& h = half_extent;
  return 8.0 * (h.x() * h.y() + h.y() * h.z() + h.x() * h.z());
}

Vec3 Primitive::sample_surface(Rng& rng) const {
  if (type == Type::kSphere) return center + radius * rng.unit_vector();
  const Vec3& h = half_extent;
  const Real face_area[3] = {h.y() * h.z(), h.x() * h.z(), h.x() * h.y()};
  const Real pick = rng.uniform() * (face_area[0] + face_area[1] + face_area[2]);
  const int axis = pick < face_area[0] ? 0 : (pick < face_area[0] + face_area[1] ? 1 : 2);
  Vec3 p;
  for (int a = 0; a < 3; ++a) p[a] = rng.uniform(-h[a], h[a]);
  p[axis] = rng.uniform() < 0.5 ? -h[axis] : h[axis];
  return center + p;
}

Vec3 Primitive::bounds_min() const {
  return type == Type::kSphere ? Vec3(center.array() - radius) : Vec3(center - half_extent);
}

Vec3 Primitive::bounds_max() const {
  return type == Type::kSphere ? Vec3(center.array() + radius) : Vec3(center + half_extent);
}

const char* to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kSphere: return "sphere";
    case ShapeKind::kBox: return "box";
    case ShapeKind::kUnion: return "union";
  }
  return "unknown";
}

ShapeKind shape_kind_from_string(const std::string& name) {
  if (name == "sphere") return ShapeKind::kSphere;
  if (name == "box") return ShapeKind::kBox;
  if (name == "union") return ShapeKind::kUnion;
  fail(ErrorCode::kInvalidArgument, "unknown shape kind '" + name + "' (expected sphere, box or union)");
}

AnalyticShape AnalyticShape::sphere(const Vec3& center, Real radius, const Vec3& color_a, const Vec3& color_b,
                                    const Vec3& tone_axis) {
  Primitive p;
  p.type = Primitive::Type::kSphere;
  p.center = center;
  p.radius = radius;
  p.color_a = color_a;
  p.color_b = color_b;
  p.tone_axis = tone_axis;
  AnalyticShape s;
  s.kind = ShapeKind::kSphere;
  s.parts = {p};
  s.validate();
  return s;
}

AnalyticShape AnalyticShape::box(const Vec3& center, const Vec3& half_extent, const Vec3& color_a,
                                 const Vec3& color_b, const Vec3& tone_axis) {
  Primitive p;
  p.type = Primitive::Type::kBox;
  p.center = center;
  p.half_extent = half_extent;
  p.color_a = color_a;
  p.color_b = color_b;
  p.tone_axis = tone_axis;
  AnalyticShape s;
  s.kind = ShapeKind::kBox;
  s.parts = {p};
  s.validate();
  return s;
}

AnalyticShape AnalyticShape::union_of(const Primitive& a, const Primitive& b) {
  AnalyticShape s;
  s.kind = ShapeKind::kUnion;
  s.parts = {a, b};
  s.validate();
  return s;
}

AnalyticShape AnalyticShape::random(ShapeKind kind, Rng& rng) {
  auto jitter = [&](Real r) { return Vec3(rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r)); };
  Primitive p;
  switch (kind) {
    case ShapeKind::kSphere: {
      p.type = Primitive::Type::kSphere;
      p.center = jitter(0.1);
      p.radius = std::min(rng.uniform(0.35, 0.6), 0.8 - p.center.cwiseAbs().maxCoeff());
      random_colors(p, rng);
      AnalyticShape s;
      s.kind = kind;
      s.parts = {p};
      s.validate();
      return s;
    }
    case ShapeKind::kBox: {
      p.type = Primitive::Type::kBox;
      p.center = jitter(0.1);
      for (int a = 0; a < 3; ++a) p.half_extent[a] = rng.uniform(0.25, 0.5);
      random_colors(p, rng);
      AnalyticShape s;
      s.kind = kind;
      s.parts = {p};
      s.validate();
      return s;
    }
    case ShapeKind::kUnion: {
      // A box base with a sphere sitting on one side, overlapping it.
      Primitive base;
      base.type = Primitive::Type::kBox;
      base.half_extent = Vec3(rng.uniform(0.25, 0.4), rng.uniform(0.25, 0.4), rng.uniform(0.15, 0.25));
      base.center = Vec3(0.0, 0.0, -0.15) + jitter(0.05);
      base.tone_axis = Vec3::Zero();
      random_colors(base, rng);
      base.tone_axis = Vec3::Zero();
      Primitive top;
      top.type = Primitive::Type::kSphere;
      top.radius = rng.uniform(0.2, 0.3);
      top.center = base.center + Vec3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                                      base.half_extent.z() + 0.5 * top.radius);
      random_colors(top, rng);
      top.tone_axis = Vec3::Zero();
      return union_of(base, top);
    }
  }
  fail(ErrorCode::kInvalidArgument, "unknown shape kind");
}

void AnalyticShape::validate() const {
  require(!parts.empty() && parts.size() <= 2, ErrorCode::kInvalidArgument, "shape needs one or two primitives");
  require(sigma_max > 0.0 && sharpness > 0.0, ErrorCode::kInvalidArgument, "shape density parameters must be positive");
  for (const auto& p : parts) {
    require(p.type != Primitive::Type::kSphere || p.radius > 0.0, ErrorCode::kInvalidArgument,
            "sphere radius must be positive");
    require(p.type != Primitive::Type::kBox || (p.half_extent.array() > 0.0).all(), ErrorCode::kInvalidArgument,
            "box half extents must be positive");
    require((p.bounds_min().array() >= -0.8 - 1e-12).all() && (p.bounds_max().array() <= 0.8 + 1e-12).all(),
            ErrorCode::kInvalidArgument, "shape must fit inside [-0.8, 0.8]^3");
  }
}

Real AnalyticShape::sdf(const Vec3& p) const {
  Real d = parts[0].sdf(p);
  for (size_t i = 1; i < parts.size(); ++i) d = std::min(d, parts[i].sdf(p));
  return d;
}

Vec3 AnalyticShape::color(const Vec3& p) const {
  if (parts.size() == 1) return parts[0].color(p);
  // Two parts: the nearer one wins, blended across the equidistant surface.
  const Real w = seam_weight(parts[1].sdf(p) - parts[0].sdf(p));
  return w * parts[0].color(p) + (1.0 - w) * parts[1].color(p);
}

Real AnalyticShape::density(const Vec3& p) const { return sigma_max * sigmoid(-sdf(p) / sharpness); }

ColoredPointCloud AnalyticShape::sample_surface(Index n, std::uint64_t seed) const {
  require(n >= 1, ErrorCode::kInvalidArgument, "surface sample count must be >= 1");
  validate();
  Rng rng(seed);
  std::vector<Real> cumulative;
  Real total = 0.0;
  for (const auto& p : parts) cumulative.push_back(total += p.surface_area());
  ColoredPointCloud cloud(Mat3X(3, n), Mat3X(3, n));
  Index filled = 0;
  while (filled < n) {
    const Real pick = rng.uniform() * total;
    const size_t which = static_cast<size_t>(std::lower_bound(cumulative.begin(), cumulative.end(), pick) -
                                             cumulative.begin());
    const Primitive& prim = parts[std::min(which, parts.size() - 1)];
    const Vec3 x = prim.sample_surface(rng);
    // Keep only points on the union's boundary.
    bool buried = false;
    for (const auto& other : parts) {
      if (&other != &prim && other.sdf(x) < 0.0) buried = true;
    }
    if (buried) continue;
    cloud.positions.col(filled) = x;
    cloud.colors.col(filled) = prim.color(x);
    ++filled;
  }
  return cloud;
}

std::string AnalyticShape::to_json() const {
  json j;
  j["kind"] = to_string(kind);
  j["sigma_max"] = sigma_max;
  j["sharpness"] = sharpness;
  j["parts"] = json::array();
  for (const auto& p : parts) {
    json jp;
    jp["type"] = p.type == Primitive::Type::kSphere ? "sphere" : "box";
    jp["center"] = vec_json(p.center);
    jp["radius"] = p.radius;
    jp["half_extent"] = vec_json(p.half_extent);
    jp["color_a"] = vec_json(p.color_a);
    jp["color_b"] = vec_json(p.color_b);
    jp["tone_axis"] = vec_json(p.tone_axis);
    j["parts"].push_back(jp);
  }
  return j.dump();
}

AnalyticShape AnalyticShape::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    AnalyticShape s;
    s.kind = shape_kind_from_string(j.at("kind").get<std::string>());
    s.sigma_max = j.at("sigma_max").get<Real>();
    s.sharpness = j.at("sharpness").get<Real>();
    for (const auto& jp : j.at("parts")) {
      Primitive p;
      const std::string type = jp.at("type").get<std::string>();
      require(type == "sphere" || type == "box", ErrorCode::kParse, "unknown primitive type '" + type + "'");
      p.type = type == "sphere" ? Primitive::Type::kSphere : Primitive::Type::kBox;
      p.center = json_vec(jp.at("center"));
      p.radius = jp.at("radius").get<Real>();
      p.half_extent = json_vec(jp.at("half_extent"));
      p.color_a = json_vec(jp.at("color_a"));
      p.color_b = json_vec(jp.at("color_b"));
      p.tone_axis = json_vec(jp.at("tone_axis"));
      s.parts.push_back(p);
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed shape description: ") + e.what());
  }
}

Mat4X AnalyticField::evaluate(const Mat3X& positions) const {
  Mat4X out(4, positions.cols());
  for (Index m = 0; m < positions.cols(); ++m) {
    const Vec3 p = positions.col(m);
    out.block<3, 1>(0, m) = shape_.color(p);
    out(3, m) = shape_.density(p);
  }
  return out;
}

void Scene::validate() const {
  cloud.validate();
  require(cameras.size() == images.size(), ErrorCode::kCountMismatch,
          "scene has " + std::to_string(cameras.size()) + " cameras but " + std::to_string(images.size()) +
              " images");
  for (size_t i = 0; i < images.size(); ++i) {
    cameras[i].validate();
    require(images[i].same_shape(images.front()), ErrorCode::kShapeMismatch, "scene images differ in size");
    require(images[i].width == cameras[i].width && images[i].height == cameras[i].height,
            ErrorCode::kShapeMismatch, "image " + std::to_string(i) + " does not match its camera");
  }
}

std::vector<Camera> hemisphere_cameras(Index n_views, Real radius, int resolution, Real focal_ratio,
                                       std::uint64_t seed) {
  require(radius > 1.0, ErrorCode::kInvalidArgument, "camera radius must exceed 1 to stay outside the box");
  require(n_views >= 1 && resolution >= 1, ErrorCode::kInvalidArgument, "need at least one view and pixel");
  Rng rng(seed);
  std::vector<Camera> cams;
  cams.reserve(static_cast<size_t>(n_views));
  for (Index v = 0; v < n_views; ++v) {
    const Real cos_theta = rng.uniform();
    const Real phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Real sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    const Vec3 eye = radius * Vec3(sin_theta * std::cos(phi), sin_theta * std::sin(phi), cos_theta);
    cams.push_back(Camera::look_at(eye, Vec3::Zero(), resolution, resolution, focal_ratio * resolution));
  }
  return cams;
}

Scene make_scene(const AnalyticShape& shape, const SceneSpec& spec, std::uint64_t seed, const RenderConfig& render) {
  shape.validate();
  Scene scene;
  scene.shape = shape;
  scene.seed = seed;
  scene.cloud = shape.sample_surface(spec.n_points, derive_seed(seed, 1));
  scene.cameras = hemisphere_cameras(spec.n_views, spec.radius, spec.resolution, spec.focal_ratio,
                                     derive_seed(seed, 2));
  const AnalyticField field(shape);
  for (const auto& cam : scene.cameras) {
    // Stored views are what the PNG files hold, so a reload is bit-exact.
    scene.images.push_back(quantize8(reference_render(cam, field, render).rgb));
  }
  return scene;
}

std::string view_filename(Index view) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "view_%03lld.png", static_cast<long long>(view));
  return buf;
}

void save_scene(const std::filesystem::path& dir, const Scene& scene) {
  scene.validate();
  std::filesystem::create_directories(dir / "images");
  write_point_cloud_ply(dir / "cloud.ply", scene.cloud);
  write_cameras_json(dir / "cameras.json", scene.cameras);
  for (size_t i = 0; i < scene.images.size(); ++i) {
    write_png(dir / "images" / view_filename(static_cast<Index>(i)), scene.images[i]);
  }
  json meta;
  meta["seed"] = scene.seed;
  meta["views"] = scene.images.size();
  meta["points"] = scene.cloud.size();
  if (scene.shape) meta["shape"] = json::parse(scene.shape->to_json());
  write_text_file(dir / "meta.json", meta.dump(2) + "\n");
}

Scene load_scene(const std::filesystem::path& dir) {
  require(std::filesystem::is_directory(dir), ErrorCode::kIo, "scene directory '" + dir.string() + "' not found");
  Scene scene;
  scene.cloud = read_point_cloud_ply(dir / "cloud.ply");
  scene.cameras = read_cameras_json(dir / "cameras.json");

  Index image_files = 0;
  if (std::filesystem::is_directory(dir / "images")) {
    for (const auto& entry : std::filesystem::directory_iterator(dir / "images")) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("view_", 0) == 0 && entry.path().extension() == ".png") ++image_files;
    }
  }
  require(image_files == scene.view_count(), ErrorCode::kCountMismatch,
          "cameras.json lists " + std::to_string(scene.view_count()) + " cameras but images/ holds " +
              std::to_string(image_files) + " views");
  for (Index v = 0; v < scene.view_count(); ++v) {
    const auto path = dir / "images" / view_filename(v);
    require(std::filesystem::exists(path), ErrorCode::kIo, "missing view image " + path.string());
    scene.images.push_back(read_png(path));
  }

  const auto meta_path = dir / "meta.json";
  if (std::filesystem::exists(meta_path)) {
    json meta;
    try {
      meta = json::parse(read_text_file(meta_path));
    } catch (const json::exception& e) {
      fail(ErrorCode::kParse, "malformed meta.json: " + std::string(e.what()));
    }
    scene.seed = meta.value("seed", std::uint64_t{0});
    if (meta.contains("shape")) scene.shape = AnalyticShape::from_json(meta["shape"].dump());
  }
  scene.validate();
  return scene;
}

}  // namespace gpn
