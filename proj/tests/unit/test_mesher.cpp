// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/QR>

#include "gpn/dataset.hpp"
#include "gpn/io.hpp"
#include "gpn/mesher.hpp"
#include "test_util.hpp"

using namespace gpn;
using gpn::test::TempDir;

namespace {

class ZeroField final : public RadianceField {
 public:
  Mat4X evaluate(const Mat3X& positions) const override { return Mat4X::Zero(4, positions.cols()); }
};

AnalyticShape sphere(const Vec3& a, const Vec3& b) { return AnalyticShape::sphere(Vec3::Zero(), 0.5, a, b); }

Real mean_radial_error(const TriangleMesh& m) {
  Real s = 0.0;
  for (Index i = 0; i < m.vertex_count(); ++i) s += std::abs(m.vertices.col(i).norm() - 0.5);
  return s / static_cast<Real>(m.vertex_count());
}

RenderConfig plain_render() {
  RenderConfig cfg;
  cfg.stratified = false;
  return cfg;
}

}  // namespace

TEST_CASE("marching cubes on the analytic sphere") {
  const AnalyticField field(sphere(Vec3::Ones(), Vec3::Ones()));
  const TriangleMesh m = extract_mesh(field, 64, 20.0);
  REQUIRE(m.vertex_count() > 0);
  CHECK_NOTHROW(m.validate());
  for (Index i = 0; i < m.vertex_count(); ++i) CHECK(std::abs(m.vertices.col(i).norm() - 0.5) <= 2.0 / 64.0);
  CHECK(boundary_edge_count(m) == 0);
  // Euler characteristic of a sphere.
  std::set<std::pair<Index, Index>> edges;
  for (const auto& f : m.faces)
    for (int e = 0; e < 3; ++e) edges.insert(std::minmax(f[e], f[(e + 1) % 3]));
  CHECK(m.vertex_count() - static_cast<Index>(edges.size()) + m.face_count() == 2);
  CHECK(surface_area(m) == doctest::Approx(4.0 * std::numbers::pi * 0.25).epsilon(0.02));
  CHECK(m.vertices.cwiseAbs().maxCoeff() <= 1.0);
  CHECK_FALSE(m.has_colors());
}

TEST_CASE("hidden cavities are filled") {
  // Hollow shell: dense for 0.3 < r < 0.5 with smooth walls, empty inside and outside.
  const FunctionField shell([](const Vec3& p) {
    const Real d = 0.1 - std::abs(p.norm() - 0.4);
    return Vec4(1, 1, 1, 40.0 / (1.0 + std::exp(-d / 0.01)));
  });
  const TriangleMesh hollow = extract_mesh(shell, 48, 20.0, false);
  const TriangleMesh solid = extract_mesh(shell, 48, 20.0);
  // Without filling the inner wall is meshed too.
  CHECK(surface_area(hollow) == doctest::Approx(4.0 * std::numbers::pi * (0.25 + 0.09)).epsilon(0.05));
  CHECK(surface_area(solid) == doctest::Approx(4.0 * std::numbers::pi * 0.25).epsilon(0.05));
  CHECK(boundary_edge_count(solid) == 0);
  for (Index i = 0; i < solid.vertex_count(); ++i) CHECK(solid.vertices.col(i).norm() > 0.4);

  SUBCASE("grid-level semantics") {
    const Index r = 5;
    std::vector<Real> v(static_cast<size_t>(r * r * r), 0.0);
    auto at = [&](Index i, Index j, Index k) -> Real& { return v[static_cast<size_t>(i + r * (j + r * k))]; };
    for (Index k = 1; k < 4; ++k)
      for (Index j = 1; j < 4; ++j)
        for (Index i = 1; i < 4; ++i) at(i, j, k) = 5.0;
    at(2, 2, 2) = 0.0;
    std::vector<Real> open = v;
    CHECK(fill_cavities(v, r, 1.0) == 1);
    CHECK(at(2, 2, 2) == 2.0);
    // A channel to the border keeps the pocket outside.
    open[static_cast<size_t>(2 + r * (2 + r * 2))] = 0.0;
    open[static_cast<size_t>(2 + r * (2 + r * 1))] = 0.0;
    CHECK(fill_cavities(open, r, 1.0) == 0);
    CHECK_GPN_ERROR(fill_cavities(open, 4, 1.0), ErrorCode::kShapeMismatch);
  }
}

TEST_CASE("iso calibration") {
  const std::vector<Camera> cams = lattice_cameras(1.5, 24, 0.75);
  SUBCASE("uniform interior density") {
    for (Real sigma : {5.0, 40.0}) {
      const FunctionField ball([sigma](const Vec3& p) { return Vec4(1, 1, 1, p.norm() < 0.5 ? sigma : 0.0); });
      CHECK(calibrate_iso(ball, cams, OccupancyGrid(32, true), plain_render()) == doctest::Approx(0.5 * sigma));
    }
  }
  SUBCASE("synthetic shape lands near its own surface density") {
    const AnalyticField field(sphere(Vec3::Ones(), Vec3::Ones()));
    const Real iso = calibrate_iso(field, cams, occupancy_for_field(field, plain_render(), 1), plain_render());
    CHECK(iso > 10.0);
    CHECK(iso < 20.0);
  }
  CHECK_GPN_ERROR(calibrate_iso(ZeroField(), cams, OccupancyGrid(16, true), plain_render()), ErrorCode::kEmptyMesh);
}

TEST_CASE("mesh refinement converges") {
  const AnalyticField field(sphere(Vec3::Ones(), Vec3::Ones()));
  const Real coarse = mean_radial_error(extract_mesh(field, 32, 20.0));
  const Real fine = mean_radial_error(extract_mesh(field, 64, 20.0));
  MESSAGE("mean radial error R=32 " << coarse << ", R=64 " << fine);
  CHECK(coarse / fine >= 1.5);
}

TEST_CASE("empty level set") {
  CHECK_GPN_ERROR(extract_mesh(ZeroField(), 16, 20.0), ErrorCode::kEmptyMesh);
  CHECK_GPN_ERROR(extract_mesh(ZeroField(), 4, 20.0), ErrorCode::kInvalidArgument);
}

TEST_CASE("random grids give closed surfaces") {
  // Random interior values exercise every ambiguous face configuration.
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Index r = 9;
    std::vector<Real> v(static_cast<size_t>(r * r * r));
    Rng rng(s);
    for (Index k = 0; k < r; ++k)
      for (Index j = 0; j < r; ++j)
        for (Index i = 0; i < r; ++i) {
          const bool border = std::min({i, j, k}) == 0 || std::max({i, j, k}) == r - 1;
          v[static_cast<size_t>(i + r * (j + r * k))] = border ? 0.0 : rng.uniform();
        }
    const TriangleMesh m = marching_cubes(v, r, 0.5);
    REQUIRE(m.face_count() > 0);
    CHECK(boundary_edge_count(m) == 0);
    CHECK_NOTHROW(m.validate());
    for (Index f = 0; f < m.face_count(); ++f) CHECK(triangle_area(m, f) > 1e-12);
  }
}

TEST_CASE("single inside vertex gives a closed octahedron-like blob") {
  const Index r = 5;
  std::vector<Real> v(static_cast<size_t>(r * r * r), 0.0);
  v[static_cast<size_t>(2 + r * (2 + r * 2))] = 1.0;
  const TriangleMesh m = marching_cubes(v, r, 0.5);
  CHECK(m.vertex_count() == 6);
  CHECK(m.face_count() == 8);
  CHECK(boundary_edge_count(m) == 0);
  // Outward orientation: normals point away from the center vertex.
  const Mat3X n = vertex_normals(m);
  for (Index i = 0; i < m.vertex_count(); ++i) CHECK(n.col(i).dot(m.vertices.col(i)) > 0.0);
}

TEST_CASE("lattice cameras") {
  const auto cams = lattice_cameras(1.5, 16, 0.75);
  CHECK(cams.size() == 26);
  for (const auto& c : cams) {
    CHECK(c.center().norm() == doctest::Approx(1.5));
    CHECK((c.forward() + c.center().normalized()).norm() < 1e-9);
  }
}

TEST_CASE("vertex coloring") {
  const OccupancyGrid grid(16, true);
  const auto cams = lattice_cameras(1.5, 48, 0.75);
  SUBCASE("uniform red") {
    const AnalyticField field(sphere(Vec3(1, 0, 0), Vec3(1, 0, 0)));
    ColoringStats stats;
    const TriangleMesh m = color_vertices(extract_mesh(field, 32, 20.0), field, cams, grid, plain_render(), &stats);
    REQUIRE(m.has_colors());
    CHECK(stats.from_views + stats.fallback == m.vertex_count());
    CHECK(stats.from_views > m.vertex_count() / 2);
    for (Index i = 0; i < m.vertex_count(); ++i) CHECK((m.colors.col(i) - Vec3(1, 0, 0)).cwiseAbs().maxCoeff() <= 0.02);
  }
  SUBCASE("two-tone sphere follows hemisphere membership") {
    const AnalyticField field(sphere(Vec3(1, 0, 0), Vec3(0, 0, 1)));
    const TriangleMesh m = color_vertices(extract_mesh(field, 32, 20.0), field, cams, grid, plain_render());
    Index right = 0;
    for (Index i = 0; i < m.vertex_count(); ++i) {
      const bool top = m.vertices(2, i) >= 0.0;
      const bool red = m.colors(0, i) > m.colors(2, i);
      right += top == red;
    }
    CHECK(static_cast<Real>(right) >= 0.95 * static_cast<Real>(m.vertex_count()));
  }
  SUBCASE("single camera colors its side and falls back elsewhere") {
    const AnalyticField field(sphere(Vec3(1, 0, 0), Vec3(0, 0, 1)));
    const std::vector<Camera> one = {Camera::look_at(Vec3(0, 0, 1.5), Vec3::Zero(), 48, 48, 36.0)};
    ColoringStats stats;
    const TriangleMesh m = color_vertices(extract_mesh(field, 32, 20.0), field, one, grid, plain_render(), &stats);
    CHECK(stats.from_views > 0);
    CHECK(stats.fallback > 0);
    CHECK(stats.from_views + stats.fallback == m.vertex_count());
    for (Index i = 0; i < m.vertex_count(); ++i) {
      // The far side is only reachable through the field fallback, which is exact.
      if (m.vertices(2, i) < -0.1) CHECK((m.colors.col(i) - Vec3(0, 0, 1)).norm() < 1e-9);
    }
  }
  SUBCASE("no cameras") {
    const AnalyticField field(sphere(Vec3(1, 0, 0), Vec3(1, 0, 0)));
    CHECK_GPN_ERROR(color_vertices(extract_mesh(field, 16, 20.0), field, {}, grid, plain_render()),
                    ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("sample_mesh") {
  const AnalyticField field(sphere(Vec3(1, 0, 0), Vec3(0, 0, 1)));
  TriangleMesh m = extract_mesh(field, 24, 20.0);
  m.colors = m.vertices.cwiseAbs();
  std::vector<Index> faces;
  const ColoredPointCloud c = sample_mesh(m, 2000, 3, &faces);
  REQUIRE(c.size() == 2000);
  REQUIRE(faces.size() == 2000);
  for (Index i = 0; i < c.size(); ++i) {
    const auto& f = m.faces[static_cast<size_t>(faces[static_cast<size_t>(i)])];
    const Vec3 a = m.vertices.col(f[0]), b = m.vertices.col(f[1]), t = m.vertices.col(f[2]);
    // Solve for barycentric coordinates in the triangle plane.
    Eigen::Matrix<Real, 3, 2> e;
    e << b - a, t - a;
    const Eigen::Vector2d uv = e.colPivHouseholderQr().solve(c.positions.col(i) - a);
    const Vec3 rebuilt = a + e * uv;
    CHECK((rebuilt - c.positions.col(i)).norm() < 1e-9);
    CHECK(uv.minCoeff() > -1e-9);
    CHECK(uv.sum() < 1.0 + 1e-9);
    const Vec3 col = (1 - uv.sum()) * m.colors.col(f[0]) + uv[0] * m.colors.col(f[1]) + uv[1] * m.colors.col(f[2]);
    CHECK((col - c.colors.col(i)).norm() < 1e-9);
  }
  SUBCASE("n = 1") { CHECK(sample_mesh(m, 1, 5).size() == 1); }
  SUBCASE("same seed, same cloud") {
    CHECK(sample_mesh(m, 500, 9).positions == sample_mesh(m, 500, 9).positions);
    CHECK(sample_mesh(m, 500, 9).positions != sample_mesh(m, 500, 10).positions);
  }
  SUBCASE("uncolored mesh samples white") {
    TriangleMesh bare = m;
    bare.colors.resize(3, 0);
    CHECK(sample_mesh(bare, 20, 1).colors.minCoeff() == 1.0);
  }
}

TEST_CASE("resample_cloud") {
  const AnalyticField field(sphere(Vec3(1, 0, 0), Vec3(0, 0, 1)));
  MeshingConfig mc;
  mc.resolution = 32;
  mc.camera_resolution = 32;
  const OccupancyGrid grid(16, true);
  const ColoredPointCloud a = resample_cloud(field, 300, 4, mc, grid, plain_render());
  const ColoredPointCloud b = resample_cloud(field, 300, 4, mc, grid, plain_render());
  CHECK(a.positions == b.positions);
  CHECK(a.colors == b.colors);
  for (Index i = 0; i < a.size(); ++i) CHECK(std::abs(a.positions.col(i).norm() - 0.5) < 2.0 / 32.0);
  const ColoredPointCloud one = resample_cloud(field, 1, 4, mc, grid, plain_render());
  CHECK(one.size() == 1);
  CHECK(std::abs(one.positions.col(0).norm() - 0.5) < 2.0 / 32.0);
  CHECK_GPN_ERROR(resample_cloud(ZeroField(), 10, 1, mc, grid, plain_render()), ErrorCode::kEmptyMesh);
}

TEST_CASE("mesh writers") {
  const AnalyticField field(sphere(Vec3(1, 0, 0), Vec3(0, 0, 1)));
  TriangleMesh m = extract_mesh(field, 16, 20.0);
  TempDir dir("mesh");
  CHECK_FALSE(write_mesh_obj(dir.path() / "bare.obj", m));
  m.colors = Mat3X::Constant(3, m.vertex_count(), 0.5);
  write_mesh_ply(dir.path() / "m.ply", m);
  CHECK(write_mesh_obj(dir.path() / "m.obj", m));

  const std::string ply = read_text_file(dir.path() / "m.ply");
  CHECK(ply.rfind("ply\nformat binary_little_endian 1.0\n", 0) == 0);
  CHECK(ply.find("element vertex " + std::to_string(m.vertex_count())) != std::string::npos);
  CHECK(ply.find("element face " + std::to_string(m.face_count())) != std::string::npos);
  const size_t body = ply.find("end_header\n") + 11;
  // xyz float + rgb uchar per vertex, count uchar + 3 int per face.
  CHECK(ply.size() - body == static_cast<size_t>(m.vertex_count() * 15 + m.face_count() * 13));

  const std::string obj = read_text_file(dir.path() / "m.obj");
  Index v = 0, f = 0;
  std::istringstream in(obj);
  for (std::string line; std::getline(in, line);) {
    v += line.rfind("v ", 0) == 0;
    f += line.rfind("f ", 0) == 0;
  }
  CHECK(v == m.vertex_count());
  CHECK(f == m.face_count());
}
