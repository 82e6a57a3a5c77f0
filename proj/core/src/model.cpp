// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "gpn/model.hpp"

#include <json.hpp>

namespace gpn {

namespace {

using json = nlohmann::json;

json indices_json(const std::vector<Index>& v) {
  json j = json::array();
  for (Index x : v) j.push_back(x);
  return j;
}

std::vector<Index> json_indices(const json& j) {
  std::vector<Index> v;
  for (const auto& x : j) v.push_back(x.get<Index>());
  return v;
}

}  // namespace

const char* to_string(ModelKind kind) { return kind == ModelKind::kGeneration ? "generation" : "completion"; }

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "generation" || name == "gen") return ModelKind::kGeneration;
  if (name == "completion" || name == "complete") return ModelKind::kCompletion;
  fail(ErrorCode::kInvalidArgument, "unknown model kind '" + name + "'");
}

ModelConfig ModelConfig::generation() { return {}; }

ModelConfig ModelConfig::completion() {
  ModelConfig c;
  c.kind = ModelKind::kCompletion;
  c.encoder.latent_dim = 128;
  return c;
}

FieldArchitecture ModelConfig::field_architecture() const {
  FieldArchitecture a = field;
  a.feature_dim = features ? features->feature_dim() : 0;
  return a;
}

void ModelConfig::validate() const {
  encoder.validate();
  field_architecture().validate();
  if (features) {
    require(features->resolution >= 2 && !features->channels.empty(), ErrorCode::kConfig,
            "feature extractor needs resolution >= 2 and at least one layer");
  }
}

std::string ModelConfig::to_json() const {
  json j;
  j["kind"] = gpn::to_string(kind);
  j["encoder"] = {{"latent_dim", encoder.latent_dim},
                  {"widths", indices_json(encoder.widths)},
                  {"input_points", encoder.input_points},
                  {"initial_logvar", encoder.initial_logvar}};
  j["hypernet"] = {{"trunk_widths", indices_json(hypernet.trunk_widths)},
                   {"head_sizes", indices_json(hypernet.head_sizes)},
                   {"head_weight_scale", hypernet.head_weight_scale}};
  j["field"] = {{"pe_bands", field.pe_bands}, {"hidden", field.hidden}, {"depth", field.depth},
                {"output_dim", field.output_dim}};
  if (features) {
    j["features"] = {{"resolution", features->resolution}, {"channels", indices_json(features->channels)}};
  }
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ModelConfig c;
    c.kind = model_kind_from_string(j.at("kind").get<std::string>());
    const auto& e = j.at("encoder");
    c.encoder.latent_dim = e.at("latent_dim").get<Index>();
    c.encoder.widths = json_indices(e.at("widths"));
    c.encoder.input_points = e.at("input_points").get<Index>();
    c.encoder.initial_logvar = e.at("initial_logvar").get<Real>();
    const auto& h = j.at("hypernet");
    c.hypernet.trunk_widths = json_indices(h.at("trunk_widths"));
    c.hypernet.head_sizes = json_indices(h.at("head_sizes"));
    c.hypernet.head_weight_scale = h.at("head_weight_scale").get<Real>();
    const auto& f = j.at("field");
    c.field.pe_bands = f.at("pe_bands").get<Index>();
    c.field.hidden = f.at("hidden").get<Index>();
    c.field.depth = f.at("depth").get<Index>();
    c.field.output_dim = f.at("output_dim").get<Index>();
    if (j.contains("features")) {
      FeatureExtractorConfig fc;
      fc.resolution = j["features"].at("resolution").get<Index>();
      fc.channels = json_indices(j["features"].at("channels"));
      c.features = fc;
    }
    c.validate();
    return c;
  } catch (const json::exception& ex) {
    fail(ErrorCode::kParse, std::string("malformed model configuration: ") + ex.what());
  }
}

Model::Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  encoder_ = Encoder(cfg_.encoder, derive_seed(seed, 1));
  if (cfg_.kind == ModelKind::kCompletion) encoder_m_ = Encoder(cfg_.encoder, derive_seed(seed, 2));
  hypernet_ = Hypernet(cfg_.latent_dim(), cfg_.hypernet, cfg_.field_architecture(), derive_seed(seed, 3));
  if (cfg_.features) features_.emplace(*cfg_.features, derive_seed(seed, 4));
}

std::vector<std::pair<std::string, VecX*>> Model::parameter_blocks() {
  std::vector<std::pair<std::string, VecX*>> b{{"encoder", &encoder_.params()}};
  if (cfg_.kind == ModelKind::kCompletion) b.emplace_back("encoder_m", &encoder_m_.params());
  b.emplace_back("hypernet", &hypernet_.params());
  if (features_) b.emplace_back("features", &features_->params());
  return b;
}

std::vector<std::pair<std::string, const VecX*>> Model::parameter_blocks() const {
  std::vector<std::pair<std::string, const VecX*>> out;
  for (auto& [name, p] : const_cast<Model*>(this)->parameter_blocks()) out.emplace_back(name, p);
  return out;
}

ColoredPointCloud Model::encoder_input(const ColoredPointCloud& cloud, std::uint64_t seed) const {
  require(!cloud.empty(), ErrorCode::kEmptyPart, "cannot encode an empty point cloud");
  return subsample(cloud, cfg_.encoder.input_points, seed);
}

VecX Model::mean_latent(const ColoredPointCloud& cloud) const {
  require(cfg_.kind == ModelKind::kGeneration, ErrorCode::kIncompatibleCheckpoint,
          "a completion model needs existing and missing parts");
  return encoder_.encode(encoder_input(cloud, kInferenceSubsampleSeed)).mean;
}

VecX Model::mean_latent(const ColoredPointCloud& existing, const ColoredPointCloud& missing) const {
  require(cfg_.kind == ModelKind::kCompletion, ErrorCode::kIncompatibleCheckpoint,
          "part-pair codes need a completion model");
  VecX z(latent_dim());
  z.head(cfg_.encoder.latent_dim) = encoder_.encode(encoder_input(existing, kInferenceSubsampleSeed)).mean;
  z.tail(cfg_.encoder.latent_dim) = encoder_m_.encode(encoder_input(missing, kInferenceSubsampleSeed)).mean;
  return z;
}

std::optional<FeatureVolume> Model::feature_volume(const ColoredPointCloud& cloud) const {
  if (!features_) return std::nullopt;
  return features_->forward(encoder_input(cloud, kInferenceSubsampleSeed), nullptr);
}

NeuralField Model::field(const VecX& z, const ColoredPointCloud* feature_cloud) const {
  if (!features_) return NeuralField(generate(z));
  require(feature_cloud != nullptr, ErrorCode::kInvalidArgument, "feature-conditioned model needs its input cloud");
  return NeuralField(generate(z), feature_volume(*feature_cloud));
}

Real kl_divergence(const GaussianLatent& g) {
  return 0.5 * (g.logvar.array().exp() + g.mean.array().square() - 1.0 - g.logvar.array()).sum();
}

Real color_loss(const Mat3X& rendered, const Mat3X& target) {
  require(rendered.cols() == target.cols(), ErrorCode::kShapeMismatch, "rendered and target ray counts differ");
  require(rendered.cols() >= 1, ErrorCode::kEmptySet, "color loss needs at least one ray");
  return (rendered - target).colwise().squaredNorm().mean();
}

}  // namespace gpn
