// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "gpn/field.hpp"
#include "gpn/geometry.hpp"
#include "gpn/renderer.hpp"

namespace gpn {

struct TriangleMesh {
  Mat3X vertices;
  std::vector<std::array<Index, 3>> faces;
  /// Per-vertex RGB; empty until colored.
  Mat3X colors;

  Index vertex_count() const { return vertices.cols(); }
  Index face_count() const { return static_cast<Index>(faces.size()); }
  bool has_colors() const { return colors.cols() == vertices.cols() && vertices.cols() > 0; }
  void validate() const;
};

/// Area-weighted vertex normals (unit length, zero for isolated vertices).
Mat3X vertex_normals(const TriangleMesh& mesh);
Real triangle_area(const TriangleMesh& mesh, Index face);
Real surface_area(const TriangleMesh& mesh);
/// Edges used by exactly one face; zero for a closed surface.
Index boundary_edge_count(const TriangleMesh& mesh);

/// Marching cubes over a density grid sampled at R^3 vertices spanning
/// [-1, 1]^3 (vertex i at -1 + 2 i / (R - 1)). Ambiguous faces are resolved
/// with the asymptotic decider, which adjacent cells agree on, and vertices
/// are shared by grid edge, so the surface is watertight wherever it does not
/// reach the grid border.
TriangleMesh marching_cubes(const std::vector<Real>& values, Index resolution, Real iso);

/// Marks grid vertices below `iso` that cannot reach the grid border through
/// other below-iso vertices (6-connectivity) as solid. Learned fields only
/// constrain the visible shell; this removes hidden interior cavities.
/// Returns the number of vertices filled.
Index fill_cavities(std::vector<Real>& values, Index resolution, Real iso);

/// Samples the field density on the grid and runs marching_cubes; the
/// surface separates density above `iso` (inside) from below. The outer layer
/// of vertices is treated as empty so the result is always closed.
TriangleMesh extract_mesh(const RadianceField& field, Index resolution, Real iso, bool fill_interior = true);

/// Iso level for a field whose density scale is not known in advance: half the
/// median density at the expected ray-termination points of the pixels that
/// the views see as opaque (opacity > 0.5). Throws kEmptyMesh when no pixel
/// is opaque.
Real calibrate_iso(const RadianceField& field, const std::vector<Camera>& cameras, const OccupancyGrid& grid,
                   const RenderConfig& cfg);

/// Viewpoints on the {-1, 0, 1}^3 lattice minus the origin (26 directions),
/// at `radius`, each looking at the origin.
std::vector<Camera> lattice_cameras(Real radius, int resolution, Real focal_ratio);

struct ColoringStats {
  Index from_views = 0;
  Index fallback = 0;
};

/// Colors each vertex from the most frontal camera whose render sees it
/// (projected depth agrees with the rendered depth); invisible vertices fall
/// back to the field's own color at the vertex.
TriangleMesh color_vertices(const TriangleMesh& mesh, const RadianceField& field, const std::vector<Camera>& cameras,
                            const OccupancyGrid& grid, const RenderConfig& cfg, ColoringStats* stats = nullptr);

/// n points uniform by area on the mesh, colors interpolated barycentrically.
/// `faces_out` receives the source triangle of each point.
ColoredPointCloud sample_mesh(const TriangleMesh& mesh, Index n, std::uint64_t seed,
                              std::vector<Index>* faces_out = nullptr);

struct MeshingConfig {
  Index resolution = 128;
  /// Density level of the surface. Unset means calibrate_iso over the lattice
  /// cameras. The synthetic shapes put sdf = 0 at half their peak density (20).
  std::optional<Real> iso;
  int camera_resolution = 96;
  Real camera_radius = 1.5;
  Real focal_ratio = 0.75;
};

/// extract_mesh (at the configured or calibrated iso) + color_vertices over
/// the lattice cameras.
TriangleMesh mesh_field(const RadianceField& field, const MeshingConfig& mesh_cfg, const OccupancyGrid& grid,
                        const RenderConfig& cfg, ColoringStats* stats = nullptr);

/// Point cloud output for up-sampling and hole filling: mesh_field + sample_mesh.
ColoredPointCloud resample_cloud(const RadianceField& field, Index n, std::uint64_t seed,
                                 const MeshingConfig& mesh_cfg, const OccupancyGrid& grid, const RenderConfig& cfg);

/// Binary PLY with per-vertex uchar colors (white when uncolored).
void write_mesh_ply(const std::filesystem::path& path, const TriangleMesh& mesh);
/// OBJ cannot carry vertex colors portably; they are dropped. Returns
/// true when colors were discarded.
bool write_mesh_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

}  // namespace gpn
