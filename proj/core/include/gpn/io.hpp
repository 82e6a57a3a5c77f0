// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gpn/geometry.hpp"

namespace gpn {

/// Binary little-endian PLY with float32 x,y,z and uint8 red,green,blue.
void write_point_cloud_ply(const std::filesystem::path& path, const ColoredPointCloud& cloud);
ColoredPointCloud read_point_cloud_ply(const std::filesystem::path& path);
/// Parses an in-memory PLY buffer; errors report the byte offset of the failure.
ColoredPointCloud parse_point_cloud_ply(const std::string& bytes);

/// Camera record: {"width","height","focal","cx","cy","c2w": 16 row-major numbers}.
std::string camera_to_json(const Camera& cam);
Camera camera_from_json(const std::string& text);
void write_cameras_json(const std::filesystem::path& path, const std::vector<Camera>& cameras);
std::vector<Camera> read_cameras_json(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// 64-bit FNV-1a of a file's bytes, used for run manifests.
std::uint64_t hash_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

/// Raw little-endian float64 vector with a small header; used for latent codes.
void write_vector_file(const std::filesystem::path& path, const VecX& values);
VecX read_vector_file(const std::filesystem::path& path);

}  // namespace gpn
