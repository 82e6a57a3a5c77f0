// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpn/checkpoint.hpp"
#include "gpn/dataset.hpp"

namespace gpn::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitMissingCheckpoint = 3;
inline constexpr int kExitIncompatibleCheckpoint = 4;

struct ExitError : std::runtime_error {
  ExitError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

/// Relative inputs that do not exist under the working directory are looked
/// up under $GPN_DATA_ROOT.
std::filesystem::path resolve_input(const std::filesystem::path& p);

Checkpoint load_checkpoint_checked(const std::filesystem::path& path, std::optional<ModelKind> kind);

/// A scene directory, or a parent holding scene directories (sorted by name).
std::vector<std::filesystem::path> scene_dirs(const std::filesystem::path& root);

ColoredPointCloud load_cloud(const std::filesystem::path& path);

class RunManifest {
 public:
  RunManifest(std::string command, std::string resolved_config, std::uint64_t seed, bool deterministic);
  void add_input(const std::filesystem::path& p);
  /// Must be called before any work starts.
  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  std::string config_;
  std::uint64_t seed_;
  bool deterministic_;
  std::map<std::string, std::string> inputs_;
};

/// "x,y,z,offset" -> plane.
SplitPlane parse_plane(const std::string& text);

void require_finite(const VecX& v, const std::string& what);

}  // namespace gpn::cli
