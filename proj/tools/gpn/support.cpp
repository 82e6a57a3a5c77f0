// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "gpn/io.hpp"

#ifndef GPN_VERSION
#define GPN_VERSION "unknown"
#endif

namespace gpn::cli {

namespace fs = std::filesystem;

fs::path resolve_input(const fs::path& p) {
  if (p.is_absolute() || fs::exists(p)) return p;
  if (const char* root = std::getenv("GPN_DATA_ROOT"); root && *root) {
    const fs::path alt = fs::path(root) / p;
    if (fs::exists(alt)) return alt;
  }
  return p;
}

Checkpoint load_checkpoint_checked(const fs::path& path, std::optional<ModelKind> kind) {
  const fs::path p = resolve_input(path);
  if (!fs::is_regular_file(p)) throw ExitError(kExitMissingCheckpoint, "checkpoint '" + p.string() + "' not found");
  Checkpoint ckpt = load_checkpoint(p);
  if (kind) {
    try {
      require_kind(ckpt, *kind);
    } catch (const Error& e) {
      throw ExitError(kExitIncompatibleCheckpoint, e.what());
    }
  }
  return ckpt;
}

std::vector<fs::path> scene_dirs(const fs::path& root_in) {
  const fs::path root = resolve_input(root_in);
  require(fs::is_directory(root), ErrorCode::kIo, "'" + root.string() + "' is not a directory");
  if (fs::exists(root / "cameras.json")) return {root};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && fs::exists(e.path() / "cameras.json")) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  require(!out.empty(), ErrorCode::kIo, "no scene directories under '" + root.string() + "'");
  return out;
}

ColoredPointCloud load_cloud(const fs::path& path) {
  fs::path p = resolve_input(path);
  if (fs::is_directory(p)) p /= "cloud.ply";
  return read_point_cloud_ply(p);
}

RunManifest::RunManifest(std::string command, std::string resolved_config, std::uint64_t seed, bool deterministic)
    : command_(std::move(command)), config_(std::move(resolved_config)), seed_(seed), deterministic_(deterministic) {}

void RunManifest::add_input(const fs::path& p) {
  if (fs::is_regular_file(p)) {
    inputs_[p.string()] = hex64(hash_file(p));
  } else if (fs::is_directory(p)) {
    for (const char* f : {"cloud.ply", "cameras.json"})
      if (fs::is_regular_file(p / f)) inputs_[(p / f).string()] = hex64(hash_file(p / f));
  }
}

void RunManifest::write(const fs::path& path) const {
  nlohmann::json j;
  j["command"] = command_;
  j["config"] = config_;
  j["inputs"] = inputs_;
  j["seed"] = seed_;
  j["deterministic"] = deterministic_;
  j["version"] = GPN_VERSION;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text_file(path, j.dump(2) + "\n");
}

SplitPlane parse_plane(const std::string& text) {
  std::stringstream ss(text);
  std::vector<Real> v;
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      v.push_back(std::stod(tok));
    } catch (const std::exception&) {
      fail(ErrorCode::kInvalidArgument, "bad plane component '" + tok + "'");
    }
  }
  require(v.size() == 4, ErrorCode::kInvalidArgument, "plane must be 'nx,ny,nz,offset'");
  return SplitPlane::make(Vec3(v[0], v[1], v[2]), v[3]);
}

void require_finite(const VecX& v, const std::string& what) {
  require(v.allFinite(), ErrorCode::kNonFinite, what + " is not finite");
}

}  // namespace gpn::cli
