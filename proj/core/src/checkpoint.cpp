// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "gpn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

namespace gpn {

namespace {

using json = nlohmann::json;

constexpr char kMagic[8] = {'G', 'P', 'N', 'C', 'K', 'P', 'T', '1'};

json render_json(const RenderConfig& c) {
  return {{"step", c.step},
          {"max_samples", c.max_samples},
          {"near", c.near},
          {"far", c.far},
          {"background", {c.background.x(), c.background.y(), c.background.z()}},
          {"density_threshold", c.density_threshold},
          {"ema_decay", c.ema_decay},
          {"grid_resolution", c.grid_resolution},
          {"probes_per_cell", c.probes_per_cell},
          {"stratified", c.stratified},
          {"seed", c.seed},
          {"sample_budget", c.sample_budget}};
}

RenderConfig render_from(const json& j) {
  RenderConfig c;
  c.step = j.at("step").get<Real>();
  c.max_samples = j.at("max_samples").get<Index>();
  c.near = j.at("near").get<Real>();
  c.far = j.at("far").get<Real>();
  const auto& bg = j.at("background");
  c.background = Vec3(bg.at(0).get<Real>(), bg.at(1).get<Real>(), bg.at(2).get<Real>());
  c.density_threshold = j.at("density_threshold").get<Real>();
  c.ema_decay = j.at("ema_decay").get<Real>();
  c.grid_resolution = j.at("grid_resolution").get<Index>();
  c.probes_per_cell = j.at("probes_per_cell").get<Index>();
  c.stratified = j.at("stratified").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.sample_budget = j.at("sample_budget").get<Index>();
  c.validate();
  return c;
}

json train_json(const TrainConfig& c) {
  return {{"iterations", c.iterations},
          {"rays", c.rays},
          {"lr", c.lr},
          {"lr_final_ratio", c.lr_final_ratio},
          {"weight_decay", c.weight_decay},
          {"beta", c.beta},
          {"clip_norm", c.clip_norm},
          {"scenes_per_step", c.scenes_per_step},
          {"seed", c.seed},
          {"occupancy_interval", c.occupancy_interval},
          {"kl_on_concat", c.kl_on_concat},
          {"split_retries", c.split_retries},
          {"render", render_json(c.render)},
          {"diagnostic_path", c.diagnostic_path}};
}

TrainConfig train_from(const json& j) {
  TrainConfig c;
  c.iterations = j.at("iterations").get<Index>();
  c.rays = j.at("rays").get<Index>();
  c.lr = j.at("lr").get<Real>();
  c.lr_final_ratio = j.at("lr_final_ratio").get<Real>();
  c.weight_decay = j.at("weight_decay").get<Real>();
  c.beta = j.at("beta").get<Real>();
  c.clip_norm = j.at("clip_norm").get<Real>();
  c.scenes_per_step = j.at("scenes_per_step").get<Index>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.occupancy_interval = j.at("occupancy_interval").get<Index>();
  c.kl_on_concat = j.at("kl_on_concat").get<bool>();
  c.split_retries = j.at("split_retries").get<Index>();
  c.render = render_from(j.at("render"));
  c.diagnostic_path = j.value("diagnostic_path", std::string());
  c.validate();
  return c;
}

struct ArrayRef {
  std::string name;
  const Real* data;
  Index count;
};

}  // namespace

void TrainConfig::validate() const {
  require(lr > 0.0 && std::isfinite(lr), ErrorCode::kConfig, "learning rate must be positive");
  require(lr_final_ratio > 0.0 && lr_final_ratio <= 1.0, ErrorCode::kConfig, "lr_final_ratio must be in (0, 1]");
  require(rays >= 1, ErrorCode::kConfig, "rays per iteration must be >= 1");
  require(beta >= 0.0, ErrorCode::kConfig, "KL weight must be >= 0");
  require(iterations >= 0, ErrorCode::kConfig, "iterations must be >= 0");
  require(clip_norm > 0.0, ErrorCode::kConfig, "clip norm must be positive");
  require(scenes_per_step >= 1, ErrorCode::kConfig, "scenes per step must be >= 1");
  require(occupancy_interval >= 1, ErrorCode::kConfig, "occupancy interval must be >= 1");
  require(split_retries >= 1, ErrorCode::kConfig, "split retries must be >= 1");
  render.validate();
}

std::string TrainConfig::to_json() const { return train_json(*this).dump(); }

TrainConfig TrainConfig::from_json(const std::string& text) {
  try {
    return train_from(json::parse(text));
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed training configuration: ") + e.what());
  }
}

std::string render_config_to_json(const RenderConfig& cfg) { return render_json(cfg).dump(); }

RenderConfig render_config_from_json(const std::string& text) {
  try {
    return render_from(json::parse(text));
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed render configuration: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto blocks = ckpt.model.parameter_blocks();
  require(ckpt.state.optimizers.empty() || ckpt.state.optimizers.size() == blocks.size(), ErrorCode::kShapeMismatch,
          "optimizer count does not match the model's parameter blocks");

  // Grid bits are stored as float64 0/1 so every array shares one codec.
  std::vector<std::vector<Real>> bit_storage;
  std::vector<ArrayRef> arrays;
  json manifest;
  manifest["format"] = "gpn-checkpoint";
  manifest["version"] = 1;
  manifest["model"] = json::parse(ckpt.model.config().to_json());
  manifest["train"] = train_json(ckpt.train);
  manifest["step"] = ckpt.state.step;
  manifest["optimizer_steps"] = json::array();
  for (const auto& [name, p] : blocks) arrays.push_back({"param/" + name, p->data(), p->size()});
  for (size_t i = 0; i < ckpt.state.optimizers.size(); ++i) {
    const AdamW& opt = ckpt.state.optimizers[i];
    manifest["optimizer_steps"].push_back(opt.steps());
    manifest["optimizer_lr"].push_back(opt.config().lr);
    arrays.push_back({"adam/" + blocks[i].first + "/m", opt.first_moment().data(), opt.first_moment().size()});
    arrays.push_back({"adam/" + blocks[i].first + "/v", opt.second_moment().data(), opt.second_moment().size()});
  }
  manifest["grids"] = json::array();
  bit_storage.reserve(ckpt.state.grids.size());
  for (size_t g = 0; g < ckpt.state.grids.size(); ++g) {
    const OccupancyGrid& grid = ckpt.state.grids[g];
    manifest["grids"].push_back({{"resolution", grid.resolution()}, {"has_estimate", grid.has_estimate()}});
    bit_storage.emplace_back(grid.bits().begin(), grid.bits().end());
    arrays.push_back({"grid/" + std::to_string(g) + "/bits", bit_storage.back().data(),
                      static_cast<Index>(bit_storage.back().size())});
    arrays.push_back({"grid/" + std::to_string(g) + "/ema", grid.density_estimate().data(),
                      static_cast<Index>(grid.density_estimate().size())});
  }
  Index offset = 0;
  manifest["arrays"] = json::array();
  for (const auto& a : arrays) {
    manifest["arrays"].push_back({{"name", a.name}, {"offset", offset}, {"count", a.count}});
    offset += a.count;
  }

  const std::string header = manifest.dump();
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t len = header.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& a : arrays) {
    out.write(reinterpret_cast<const char*>(a.data), static_cast<std::streamsize>(a.count * sizeof(Real)));
  }
  require(out.good(), ErrorCode::kIo, "failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "checkpoint '" + path.string() + "' not found");
  char magic[8];
  in.read(magic, sizeof(magic));
  require(in.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0, ErrorCode::kParse,
          "'" + path.string() + "' is not a gpn checkpoint");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  require(in.good() && len < (1ULL << 32), ErrorCode::kParse, "corrupt checkpoint header");
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  require(in.good(), ErrorCode::kParse, "truncated checkpoint manifest");

  json manifest;
  try {
    manifest = json::parse(header);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed checkpoint manifest: ") + e.what());
  }

  std::map<std::string, std::pair<Index, Index>> directory;
  Index total = 0;
  for (const auto& a : manifest.at("arrays")) {
    const Index off = a.at("offset").get<Index>(), count = a.at("count").get<Index>();
    directory[a.at("name").get<std::string>()] = {off, count};
    total = std::max(total, off + count);
  }
  std::vector<Real> payload(static_cast<size_t>(total));
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(total * sizeof(Real)));
  require(in.gcount() == static_cast<std::streamsize>(total * sizeof(Real)), ErrorCode::kParse,
          "checkpoint payload is truncated: expected " + std::to_string(total * sizeof(Real)) + " bytes");

  auto fetch = [&](const std::string& name, Index expected) {
    const auto it = directory.find(name);
    require(it != directory.end(), ErrorCode::kParse, "checkpoint lacks array '" + name + "'");
    require(it->second.second == expected, ErrorCode::kShapeMismatch,
            "checkpoint array '" + name + "' has " + std::to_string(it->second.second) + " values, expected " +
                std::to_string(expected));
    return Eigen::Map<const VecX>(payload.data() + it->second.first, expected);
  };

  Checkpoint ckpt;
  try {
    ckpt.model = Model(ModelConfig::from_json(manifest.at("model").dump()), 0);
    ckpt.train = train_from(manifest.at("train"));
    ckpt.state.step = manifest.at("step").get<std::int64_t>();
    auto blocks = ckpt.model.parameter_blocks();
    for (auto& [name, p] : blocks) *p = fetch("param/" + name, p->size());
    const auto& steps = manifest.at("optimizer_steps");
    require(steps.empty() || steps.size() == blocks.size(), ErrorCode::kShapeMismatch,
            "checkpoint optimizer count does not match the model");
    for (size_t i = 0; i < steps.size(); ++i) {
      AdamWConfig oc;
      oc.lr = manifest.at("optimizer_lr").at(i).get<Real>();
      oc.weight_decay = ckpt.train.weight_decay;
      const Index n = blocks[i].second->size();
      AdamW opt(n, oc);
      opt.restore(steps.at(i).get<std::int64_t>(), fetch("adam/" + blocks[i].first + "/m", n),
                  fetch("adam/" + blocks[i].first + "/v", n));
      ckpt.state.optimizers.push_back(std::move(opt));
    }
    const auto& grids = manifest.at("grids");
    for (size_t g = 0; g < grids.size(); ++g) {
      const Index res = grids[g].at("resolution").get<Index>();
      OccupancyGrid grid(res);
      const Index cells = grid.cell_count();
      const auto bits = fetch("grid/" + std::to_string(g) + "/bits", cells);
      const auto ema = fetch("grid/" + std::to_string(g) + "/ema", cells);
      std::vector<std::uint8_t> b(static_cast<size_t>(cells));
      for (Index c = 0; c < cells; ++c) b[static_cast<size_t>(c)] = bits[c] != 0.0 ? 1 : 0;
      grid.restore(std::move(b), std::vector<Real>(ema.data(), ema.data() + cells),
                   grids[g].at("has_estimate").get<bool>());
      ckpt.state.grids.push_back(std::move(grid));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed checkpoint manifest: ") + e.what());
  }
  return ckpt;
}

void require_kind(const Checkpoint& ckpt, ModelKind kind) {
  require(ckpt.model.kind() == kind, ErrorCode::kIncompatibleCheckpoint,
          std::string("checkpoint holds a ") + to_string(ckpt.model.kind()) + " model but this command needs a " +
              to_string(kind) + " model");
}

std::uint64_t parameter_checksum(const Model& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, p] : model.parameter_blocks()) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p->data());
    for (size_t i = 0; i < static_cast<size_t>(p->size()) * sizeof(Real); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace gpn
