// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "gpn/encoder.hpp"

#include <algorithm>
#include <cmath>

namespace gpn {

namespace {

// Per-point products run in column blocks of this multiple so every point
// takes the same GEMM kernel path; results are then bitwise independent of
// point order and multiplicity.
constexpr Index kColumnQuantum = 16;

}  // namespace

void EncoderConfig::validate() const {
  require(latent_dim >= 1, ErrorCode::kConfig, "latent dim must be >= 1");
  require(!widths.empty(), ErrorCode::kConfig, "encoder widths must be nonempty");
  require(input_points >= 1, ErrorCode::kConfig, "encoder input point count must be >= 1");
}

VecX standard_normal(Index dim, std::uint64_t seed) {
  Rng rng(seed);
  VecX eta(dim);
  for (Index i = 0; i < dim; ++i) eta[i] = rng.normal();
  return eta;
}

VecX reparameterize(const GaussianLatent& g, const VecX& eta) {
  require(eta.size() == g.dim() && g.logvar.size() == g.dim(), ErrorCode::kShapeMismatch,
          "latent noise has the wrong dimension");
  return g.mean.array() + (0.5 * g.logvar.array()).exp() * eta.array();
}

VecX reparameterize(const GaussianLatent& g, std::uint64_t seed) {
  return reparameterize(g, standard_normal(g.dim(), seed));
}

Encoder::Encoder(EncoderConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::vector<Index> widths{6};
  widths.insert(widths.end(), cfg_.widths.begin(), cfg_.widths.end());
  point_mlp_ = MlpLayout(widths, Activation::kRelu, Activation::kRelu);
  const Index pooled = cfg_.widths.back();
  mean_head_ = {pooled, cfg_.latent_dim, point_mlp_.end_offset()};
  logvar_head_ = {pooled, cfg_.latent_dim, mean_head_.offset + mean_head_.size()};
  params_ = VecX::Zero(logvar_head_.offset + logvar_head_.size());

  Rng rng(seed);
  auto p = as_span(params_);
  init_mlp_uniform(p, point_mlp_, rng);
  init_dense_uniform(p, mean_head_, rng);
  init_dense_uniform(p, logvar_head_, rng);
  bias_view(p, logvar_head_).array() += cfg_.initial_logvar;
}

GaussianLatent Encoder::forward(const ColoredPointCloud& cloud, Cache* cache) const {
  require(cloud.size() >= 1, ErrorCode::kEmptyPart, "cannot encode an empty point cloud");
  require(cloud.positions.allFinite() && cloud.colors.allFinite(), ErrorCode::kNonFinite,
          "encoder input has non-finite values");
  const Index n = cloud.size();
  const Index padded = ((n + kColumnQuantum - 1) / kColumnQuantum) * kColumnQuantum;
  MatX x(6, padded);
  x.leftCols(n) = cloud.stacked();
  for (Index i = n; i < padded; ++i) x.col(i) = x.col(0);

  MlpCache local;
  MlpCache& mlp_cache = cache ? cache->point_mlp : local;
  const auto params = as_span(params_);
  const MatX features = point_mlp_.forward(params, x, &mlp_cache);

  const Index f = features.rows();
  VecX pooled(f);
  std::vector<Index> argmax(static_cast<size_t>(f), 0);
  for (Index r = 0; r < f; ++r) {
    Index best = 0;
    Real value = features(r, 0);
    for (Index c = 1; c < padded; ++c) {
      if (features(r, c) > value) {
        value = features(r, c);
        best = c;
      }
    }
    pooled[r] = value;
    argmax[static_cast<size_t>(r)] = best;
  }

  GaussianLatent g;
  g.mean = weight_view(params, mean_head_) * pooled + bias_view(params, mean_head_);
  VecX raw = weight_view(params, logvar_head_) * pooled + bias_view(params, logvar_head_);
  g.logvar = raw.cwiseMax(kLogvarMin).cwiseMin(kLogvarMax);

  if (cache) {
    cache->points = n;
    cache->pooled = std::move(pooled);
    cache->argmax = std::move(argmax);
    cache->raw_logvar = std::move(raw);
  } else {
    local.activations.clear();
  }
  return g;
}

MatX Encoder::backward(const Cache& cache, const VecX& d_mean, const VecX& d_logvar, std::span<Real> grads,
                       bool need_input_grad) const {
  const auto params = as_span(params_);
  VecX d_raw = d_logvar;
  for (Index i = 0; i < d_raw.size(); ++i) {
    if (cache.raw_logvar[i] < kLogvarMin || cache.raw_logvar[i] > kLogvarMax) d_raw[i] = 0.0;
  }
  weight_view(grads, mean_head_).noalias() += d_mean * cache.pooled.transpose();
  bias_view(grads, mean_head_) += d_mean;
  weight_view(grads, logvar_head_).noalias() += d_raw * cache.pooled.transpose();
  bias_view(grads, logvar_head_) += d_raw;
  const VecX d_pooled =
      weight_view(params, mean_head_).transpose() * d_mean + weight_view(params, logvar_head_).transpose() * d_raw;

  const Index padded = cache.point_mlp.activations.front().cols();
  MatX d_features = MatX::Zero(d_pooled.size(), padded);
  for (Index r = 0; r < d_pooled.size(); ++r) d_features(r, cache.argmax[static_cast<size_t>(r)]) = d_pooled[r];
  MatX d_x = point_mlp_.backward(params, cache.point_mlp, std::move(d_features), grads, need_input_grad);
  if (!need_input_grad) return {};

  MatX d_input = d_x.leftCols(cache.points);
  for (Index i = cache.points; i < padded; ++i) d_input.col(0) += d_x.col(i);
  return d_input;
}

}  // namespace gpn
