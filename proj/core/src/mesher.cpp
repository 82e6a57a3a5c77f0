// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "gpn/mesher.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <utility>

#include <Eigen/Geometry>

namespace gpn {

void TriangleMesh::validate() const {
  require(colors.cols() == 0 || colors.cols() == vertices.cols(), ErrorCode::kShapeMismatch,
          "mesh colors must be empty or one per vertex");
  for (const auto& f : faces) {
    for (Index v : f) {
      require(v >= 0 && v < vertex_count(), ErrorCode::kShapeMismatch, "mesh face index out of range");
    }
  }
}

Real triangle_area(const TriangleMesh& mesh, Index face) {
  const auto& f = mesh.faces[static_cast<size_t>(face)];
  const Vec3 a = mesh.vertices.col(f[0]);
  return 0.5 * (Vec3(mesh.vertices.col(f[1])) - a).cross(Vec3(mesh.vertices.col(f[2])) - a).norm();
}

Real surface_area(const TriangleMesh& mesh) {
  Real total = 0.0;
  for (Index f = 0; f < mesh.face_count(); ++f) total += triangle_area(mesh, f);
  return total;
}

Mat3X vertex_normals(const TriangleMesh& mesh) {
  Mat3X n = Mat3X::Zero(3, mesh.vertex_count());
  for (const auto& f : mesh.faces) {
    const Vec3 a = mesh.vertices.col(f[0]);
    const Vec3 c = (Vec3(mesh.vertices.col(f[1])) - a).cross(Vec3(mesh.vertices.col(f[2])) - a);
    for (Index v : f) n.col(v) += c;
  }
  for (Index v = 0; v < n.cols(); ++v) {
    const Real len = n.col(v).norm();
    if (len > 0.0) n.col(v) /= len;
  }
  return n;
}

Index boundary_edge_count(const TriangleMesh& mesh) {
  std::map<std::pair<Index, Index>, int> uses;
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      Index a = f[static_cast<size_t>(e)], b = f[static_cast<size_t>((e + 1) % 3)];
      if (a > b) std::swap(a, b);
      ++uses[{a, b}];
    }
  }
  Index boundary = 0;
  for (const auto& [edge, count] : uses) {
    if (count == 1) ++boundary;
  }
  return boundary;
}

namespace {

// Cube corner c sits at offset (c & 1, (c >> 1) & 1, (c >> 2) & 1).
// Edge e joins corners kEdgeCorners[e]; its axis is the differing bit.
struct CubeTables {
  int edge_corners[12][2];
  int edge_axis[12];
  int face_corners[6][4];  // counter-clockwise seen from outside the cube
  int face_edges[6][4];    // face_edges[f][i] joins face_corners[f][i] and [i + 1]

  CubeTables() {
    int e = 0;
    for (int axis = 0; axis < 3; ++axis) {
      for (int c = 0; c < 8; ++c) {
        if (c & (1 << axis)) continue;
        edge_corners[e][0] = c;
        edge_corners[e][1] = c | (1 << axis);
        edge_axis[e] = axis;
        ++e;
      }
    }
    for (int axis = 0; axis < 3; ++axis) {
      for (int side = 0; side < 2; ++side) {
        const int f = 2 * axis + side;
        const int u = (axis + 1) % 3, v = (axis + 2) % 3;
        const int base = side << axis;
        int ring[4] = {base, base | (1 << u), base | (1 << u) | (1 << v), base | (1 << v)};
        // (u, v, axis) is a right-handed frame, so this ring winds around +axis.
        if (side == 0) std::swap(ring[1], ring[3]);
        for (int i = 0; i < 4; ++i) face_corners[f][i] = ring[i];
        for (int i = 0; i < 4; ++i) face_edges[f][i] = edge_between(ring[i], ring[(i + 1) % 4]);
      }
    }
  }

  int edge_between(int a, int b) const {
    for (int e = 0; e < 12; ++e) {
      if ((edge_corners[e][0] == a && edge_corners[e][1] == b) || (edge_corners[e][0] == b && edge_corners[e][1] == a))
        return e;
    }
    return -1;
  }
};

const CubeTables& tables() {
  static const CubeTables t;
  return t;
}

}  // namespace

TriangleMesh marching_cubes(const std::vector<Real>& values, Index res, Real iso) {
  require(res >= 2, ErrorCode::kInvalidArgument, "marching cubes needs a grid resolution >= 2");
  require(static_cast<Index>(values.size()) == res * res * res, ErrorCode::kShapeMismatch,
          "density grid has the wrong number of samples");
  const auto& T = tables();
  auto vid = [res](Index i, Index j, Index k) { return i + res * (j + res * k); };
  auto pos = [res](Index i, Index j, Index k) {
    const Real s = 2.0 / static_cast<Real>(res - 1);
    return Vec3(-1.0 + s * static_cast<Real>(i), -1.0 + s * static_cast<Real>(j), -1.0 + s * static_cast<Real>(k));
  };

  TriangleMesh mesh;
  std::vector<Vec3> verts;
  std::vector<Index> edge_vertex(static_cast<size_t>(res * res * res * 3), -1);

  for (Index k = 0; k + 1 < res; ++k) {
    for (Index j = 0; j + 1 < res; ++j) {
      for (Index i = 0; i + 1 < res; ++i) {
        Real f[8];
        bool in[8];
        int inside = 0;
        for (int c = 0; c < 8; ++c) {
          f[c] = values[static_cast<size_t>(vid(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1)))] - iso;
          in[c] = f[c] > 0.0;
          inside += in[c];
        }
        if (inside == 0 || inside == 8) continue;

        // Each face contributes oriented segments from an entering edge to an
        // exiting edge; chaining them gives closed loops around the cell.
        int next[12];
        std::fill(std::begin(next), std::end(next), -1);
        for (int face = 0; face < 6; ++face) {
          const int* q = T.face_corners[face];
          int active[4], kind[4], n = 0;  // kind: +1 enter, -1 exit
          for (int s = 0; s < 4; ++s) {
            const bool a = in[q[s]], b = in[q[(s + 1) % 4]];
            if (a == b) continue;
            active[n] = T.face_edges[face][s];
            kind[n] = b ? 1 : -1;
            ++n;
          }
          if (n == 2) {
            const int enter = kind[0] > 0 ? active[0] : active[1];
            const int exit = kind[0] > 0 ? active[1] : active[0];
            next[enter] = exit;
          } else if (n == 4) {
            // Asymptotic decider: inside corners are joined across the face
            // iff the bilinear saddle lies inside, i.e. the product of the
            // inside diagonal beats the product of the outside one.
            const int d0 = in[q[0]] ? 0 : 1;
            const bool joined = f[q[d0]] * f[q[d0 + 2]] > f[q[1 - d0]] * f[q[3 - d0]];
            for (int s = 0; s < 4; ++s) {
              if (kind[s] < 0) continue;
              next[active[s]] = active[joined ? (s + 3) % 4 : (s + 1) % 4];
            }
          }
        }

        auto vertex_for = [&](int e) {
          const int ca = T.edge_corners[e][0], cb = T.edge_corners[e][1];
          const Index gi = i + (ca & 1), gj = j + ((ca >> 1) & 1), gk = k + ((ca >> 2) & 1);
          const size_t key = static_cast<size_t>(vid(gi, gj, gk) * 3 + T.edge_axis[e]);
          if (edge_vertex[key] < 0) {
            const Real t = f[ca] / (f[ca] - f[cb]);
            const Vec3 pa = pos(gi, gj, gk);
            const Vec3 pb = pos(i + (cb & 1), j + ((cb >> 1) & 1), k + ((cb >> 2) & 1));
            edge_vertex[key] = static_cast<Index>(verts.size());
            verts.push_back(pa + t * (pb - pa));
          }
          return edge_vertex[key];
        };

        bool seen[12] = {false};
        for (int start = 0; start < 12; ++start) {
          if (next[start] < 0 || seen[start]) continue;
          std::vector<Index> loop;
          int e = start;
          while (!seen[e]) {
            seen[e] = true;
            loop.push_back(vertex_for(e));
            e = next[e];
            require(e >= 0, ErrorCode::kNumerical, "marching cubes produced an open contour");
          }
          for (size_t v = 1; v + 1 < loop.size(); ++v) mesh.faces.push_back({loop[0], loop[v], loop[v + 1]});
        }
      }
    }
  }

  mesh.vertices.resize(3, static_cast<Index>(verts.size()));
  for (size_t v = 0; v < verts.size(); ++v) mesh.vertices.col(static_cast<Index>(v)) = verts[v];
  std::erase_if(mesh.faces, [&](const std::array<Index, 3>& f) {
    const Vec3 a = mesh.vertices.col(f[0]);
    return 0.5 * (Vec3(mesh.vertices.col(f[1])) - a).cross(Vec3(mesh.vertices.col(f[2])) - a).norm() < 1e-12;
  });
  require(!mesh.faces.empty(), ErrorCode::kEmptyMesh, "density never crosses the iso level " + std::to_string(iso));
  return mesh;
}

Index fill_cavities(std::vector<Real>& values, Index res, Real iso) {
  require(static_cast<Index>(values.size()) == res * res * res, ErrorCode::kShapeMismatch,
          "value grid does not match the resolution");
  std::vector<char> outside(values.size(), 0);
  std::vector<Index> stack;
  auto visit = [&](Index v) {
    if (!outside[static_cast<size_t>(v)] && values[static_cast<size_t>(v)] < iso) {
      outside[static_cast<size_t>(v)] = 1;
      stack.push_back(v);
    }
  };
  for (Index k = 0; k < res; ++k)
    for (Index j = 0; j < res; ++j)
      for (Index i = 0; i < res; ++i)
        if (i == 0 || j == 0 || k == 0 || i == res - 1 || j == res - 1 || k == res - 1) visit(i + res * (j + res * k));
  while (!stack.empty()) {
    const Index v = stack.back();
    stack.pop_back();
    const Index i = v % res, j = (v / res) % res, k = v / (res * res);
    if (i > 0) visit(v - 1);
    if (i + 1 < res) visit(v + 1);
    if (j > 0) visit(v - res);
    if (j + 1 < res) visit(v + res);
    if (k > 0) visit(v - res * res);
    if (k + 1 < res) visit(v + res * res);
  }
  Index filled = 0;
  for (size_t v = 0; v < values.size(); ++v) {
    if (!outside[v] && values[v] < iso) {
      values[v] = 2.0 * iso;
      ++filled;
    }
  }
  return filled;
}

Real calibrate_iso(const RadianceField& field, const std::vector<Camera>& cameras, const OccupancyGrid& grid,
                   const RenderConfig& cfg) {
  RenderConfig view_cfg = cfg;
  view_cfg.stratified = false;
  std::vector<Vec3> hits;
  for (const Camera& cam : cameras) {
    const ViewRender v = render_view(cam, field, grid, view_cfg);
    for (Index p = 0; p < v.opacity.size(); ++p) {
      if (v.opacity[p] <= 0.5) continue;
      const Ray r = ray_for_pixel(cam, p);
      hits.push_back(r.origin + v.depth[p] * r.direction);
    }
  }
  require(!hits.empty(), ErrorCode::kEmptyMesh, "no view sees an opaque pixel; cannot calibrate the iso level");
  Mat3X pts(3, static_cast<Index>(hits.size()));
  for (size_t i = 0; i < hits.size(); ++i) pts.col(static_cast<Index>(i)) = hits[i];
  const Mat4X out = field.evaluate(pts);
  std::vector<Real> sigma;
  sigma.reserve(hits.size());
  for (Index i = 0; i < out.cols(); ++i) sigma.push_back(out(3, i));
  const auto mid = sigma.begin() + static_cast<std::ptrdiff_t>(sigma.size() / 2);
  std::nth_element(sigma.begin(), mid, sigma.end());
  require(*mid > 0.0, ErrorCode::kEmptyMesh, "zero density at the rendered surface");
  return 0.5 * *mid;
}

TriangleMesh extract_mesh(const RadianceField& field, Index res, Real iso, bool fill_interior) {
  require(res >= 8, ErrorCode::kInvalidArgument, "mesh grid resolution must be >= 8");
  require(iso > 0.0, ErrorCode::kInvalidArgument, "iso level must be positive");
  std::vector<Real> values(static_cast<size_t>(res * res * res), 0.0);
  const Real s = 2.0 / static_cast<Real>(res - 1);
  Mat3X slab(3, res * res);
  for (Index k = 1; k + 1 < res; ++k) {
    for (Index j = 0; j < res; ++j) {
      for (Index i = 0; i < res; ++i) {
        slab.col(i + res * j) = Vec3(-1.0 + s * i, -1.0 + s * j, -1.0 + s * k);
      }
    }
    const Mat4X out = field.evaluate(slab);
    for (Index j = 1; j + 1 < res; ++j) {
      for (Index i = 1; i + 1 < res; ++i) {
        values[static_cast<size_t>(i + res * (j + res * k))] = out(3, i + res * j);
      }
    }
  }
  if (fill_interior) fill_cavities(values, res, iso);
  return marching_cubes(values, res, iso);
}

std::vector<Camera> lattice_cameras(Real radius, int resolution, Real focal_ratio) {
  std::vector<Camera> cams;
  for (int z = -1; z <= 1; ++z) {
    for (int y = -1; y <= 1; ++y) {
      for (int x = -1; x <= 1; ++x) {
        if (x == 0 && y == 0 && z == 0) continue;
        const Vec3 eye = radius * Vec3(x, y, z).normalized();
        cams.push_back(Camera::look_at(eye, Vec3::Zero(), resolution, resolution, focal_ratio * resolution));
      }
    }
  }
  return cams;
}

TriangleMesh color_vertices(const TriangleMesh& mesh, const RadianceField& field, const std::vector<Camera>& cameras,
                            const OccupancyGrid& grid, const RenderConfig& cfg, ColoringStats* stats) {
  require(!cameras.empty(), ErrorCode::kInvalidArgument, "vertex coloring needs at least one camera");
  mesh.validate();
  std::vector<ViewRender> views;
  views.reserve(cameras.size());
  for (const auto& cam : cameras) views.push_back(render_view(cam, field, grid, cfg));

  const Mat3X normals = vertex_normals(mesh);
  // Depth agreement tolerance: a few marching steps plus a margin for the
  // blur of the expected termination depth.
  const Real tolerance = 0.05 + 2.0 * cfg.step;
  TriangleMesh out = mesh;
  out.colors.resize(3, mesh.vertex_count());
  std::vector<Index> fallback;
  for (Index v = 0; v < mesh.vertex_count(); ++v) {
    const Vec3 p = mesh.vertices.col(v);
    const Vec3 n = normals.col(v);
    Real best_score = 0.0;
    Vec3 best_color = Vec3::Zero();
    bool found = false;
    for (size_t c = 0; c < cameras.size(); ++c) {
      const Camera& cam = cameras[c];
      const Vec3 to_cam = cam.center() - p;
      const Real dist = to_cam.norm();
      const Real score = n.dot(to_cam) / dist;
      if (score <= 0.0 || (found && score <= best_score)) continue;
      Vec2 px;
      Real axial = 0.0;
      if (!cam.project(p, px, axial)) continue;
      if (px.x() < 0.0 || px.y() < 0.0 || px.x() >= cam.width || px.y() >= cam.height) continue;
      const Index pixel = static_cast<Index>(px.y()) * cam.width + static_cast<Index>(px.x());
      const ViewRender& view = views[c];
      if (view.opacity[pixel] < 0.5 || std::abs(view.depth[pixel] - dist) > tolerance) continue;
      best_score = score;
      best_color = view.rgb.sample_bilinear(px.x(), px.y());
      found = true;
    }
    if (found) {
      out.colors.col(v) = best_color.cwiseMax(0.0).cwiseMin(1.0);
    } else {
      fallback.push_back(v);
    }
  }
  if (!fallback.empty()) {
    Mat3X pts(3, static_cast<Index>(fallback.size()));
    for (size_t i = 0; i < fallback.size(); ++i) pts.col(static_cast<Index>(i)) = mesh.vertices.col(fallback[i]);
    const Mat4X direct = field.evaluate(pts);
    for (size_t i = 0; i < fallback.size(); ++i) out.colors.col(fallback[i]) = direct.block<3, 1>(0, static_cast<Index>(i));
  }
  if (stats) {
    stats->fallback = static_cast<Index>(fallback.size());
    stats->from_views = mesh.vertex_count() - stats->fallback;
  }
  return out;
}

ColoredPointCloud sample_mesh(const TriangleMesh& mesh, Index n, std::uint64_t seed, std::vector<Index>* faces_out) {
  require(mesh.face_count() > 0, ErrorCode::kEmptyMesh, "cannot sample an empty mesh");
  require(n >= 1, ErrorCode::kInvalidArgument, "sample count must be >= 1");
  std::vector<Real> cumulative(static_cast<size_t>(mesh.face_count()));
  Real total = 0.0;
  for (Index f = 0; f < mesh.face_count(); ++f) cumulative[static_cast<size_t>(f)] = total += triangle_area(mesh, f);
  Rng rng(seed);
  ColoredPointCloud cloud(Mat3X(3, n), Mat3X(3, n));
  if (faces_out) faces_out->resize(static_cast<size_t>(n));
  for (Index s = 0; s < n; ++s) {
    const Real pick = rng.uniform() * total;
    const Index f = std::min<Index>(
        static_cast<Index>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin()),
        mesh.face_count() - 1);
    const Real r1 = std::sqrt(rng.uniform());
    const Real r2 = rng.uniform();
    const Vec3 w(1.0 - r1, r1 * (1.0 - r2), r1 * r2);
    const auto& face = mesh.faces[static_cast<size_t>(f)];
    Vec3 p = Vec3::Zero(), c = Vec3::Ones();
    for (int i = 0; i < 3; ++i) p += w[i] * mesh.vertices.col(face[static_cast<size_t>(i)]);
    if (mesh.has_colors()) {
      c.setZero();
      for (int i = 0; i < 3; ++i) c += w[i] * mesh.colors.col(face[static_cast<size_t>(i)]);
    }
    cloud.positions.col(s) = p;
    cloud.colors.col(s) = c.cwiseMax(0.0).cwiseMin(1.0);
    if (faces_out) (*faces_out)[static_cast<size_t>(s)] = f;
  }
  return cloud;
}

TriangleMesh mesh_field(const RadianceField& field, const MeshingConfig& mesh_cfg, const OccupancyGrid& grid,
                        const RenderConfig& cfg, ColoringStats* stats) {
  RenderConfig view_cfg = cfg;
  view_cfg.stratified = false;
  const std::vector<Camera> cams =
      lattice_cameras(mesh_cfg.camera_radius, mesh_cfg.camera_resolution, mesh_cfg.focal_ratio);
  const Real iso = mesh_cfg.iso ? *mesh_cfg.iso : calibrate_iso(field, cams, grid, view_cfg);
  TriangleMesh mesh = extract_mesh(field, mesh_cfg.resolution, iso);
  return color_vertices(mesh, field, cams, grid, view_cfg, stats);
}

ColoredPointCloud resample_cloud(const RadianceField& field, Index n, std::uint64_t seed,
                                 const MeshingConfig& mesh_cfg, const OccupancyGrid& grid, const RenderConfig& cfg) {
  return sample_mesh(mesh_field(field, mesh_cfg, grid, cfg), n, seed);
}

void write_mesh_ply(const std::filesystem::path& path, const TriangleMesh& mesh) {
  mesh.validate();
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << mesh.vertex_count() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "element face " << mesh.face_count() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  for (Index v = 0; v < mesh.vertex_count(); ++v) {
    for (int a = 0; a < 3; ++a) {
      const float x = static_cast<float>(mesh.vertices(a, v));
      out.write(reinterpret_cast<const char*>(&x), 4);
    }
    for (int a = 0; a < 3; ++a) {
      const Real c = mesh.has_colors() ? mesh.colors(a, v) : 1.0;
      const auto u = static_cast<unsigned char>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
      out.write(reinterpret_cast<const char*>(&u), 1);
    }
  }
  for (const auto& f : mesh.faces) {
    const unsigned char three = 3;
    out.write(reinterpret_cast<const char*>(&three), 1);
    for (Index v : f) {
      const auto i = static_cast<std::int32_t>(v);
      out.write(reinterpret_cast<const char*>(&i), 4);
    }
  }
  require(out.good(), ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

bool write_mesh_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  mesh.validate();
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.precision(9);
  for (Index v = 0; v < mesh.vertex_count(); ++v) {
    out << "v " << mesh.vertices(0, v) << ' ' << mesh.vertices(1, v) << ' ' << mesh.vertices(2, v) << '\n';
  }
  for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  require(out.good(), ErrorCode::kIo, "failed writing '" + path.string() + "'");
  return mesh.has_colors();
}

}  // namespace gpn
