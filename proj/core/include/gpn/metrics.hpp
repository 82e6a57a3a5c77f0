// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gpn/common.hpp"
#include "gpn/image.hpp"

namespace gpn {

/// Exact nearest-neighbour queries over a fixed point set using a uniform
/// bucket grid and ring search.
class NearestNeighborGrid {
 public:
  explicit NearestNeighborGrid(const Mat3X& points);

  /// Squared distance to the closest point.
  Real nearest_squared(const Vec3& q) const;
  Index nearest_index(const Vec3& q, Real* squared = nullptr) const;

 private:
  Index cell_coord(Real v, int axis) const;

  Mat3X points_;
  Vec3 lo_ = Vec3::Zero();
  Vec3 cell_ = Vec3::Ones();
  Index dims_[3] = {1, 1, 1};
  std::vector<Index> starts_;
  std::vector<Index> order_;
};

/// Sum of squared nearest-neighbour distances in both directions.
Real chamfer(const Mat3X& p, const Mat3X& q);
/// O(|P| |Q|) reference used to gate the accelerated path.
Real chamfer_brute_force(const Mat3X& p, const Mat3X& q);
/// One-directional half: sum over p of min_q |p - q|^2.
Real directed_chamfer(const Mat3X& p, const Mat3X& q);

/// Mean over references of the chamfer distance to the closest generated set.
Real mmd(const std::vector<Mat3X>& generated, const std::vector<Mat3X>& reference);

constexpr Real kPsnrCap = 99.0;

Real mse(const Image& img, const Image& ref);
/// Peak 1; identical images report kPsnrCap.
Real psnr(const Image& img, const Image& ref);
Real psnr_from_mse(Real mse);
/// Mean SSIM over channels with an 11x11 Gaussian window (sigma 1.5) placed at
/// every position where it fits inside the image.
Real ssim(const Image& img, const Image& ref);

struct MetricRow {
  std::string scene;
  std::optional<Real> chamfer;
  std::optional<Real> psnr;
  std::optional<Real> ssim;
};

struct MetricSummary {
  Real mean = 0.0;
  Real median = 0.0;
  Index count = 0;
};

/// Rows hold raw values; the x1e4 (CD) and x1e3 (MMD) table scalings are
/// applied only when the report is written out.
struct MetricReport {
  std::vector<MetricRow> rows;
  std::optional<Real> mmd;

  static constexpr Real kChamferScale = 1e4;
  static constexpr Real kMmdScale = 1e3;

  MetricSummary summary_chamfer() const;
  MetricSummary summary_psnr() const;
  MetricSummary summary_ssim() const;

  std::string to_csv() const;
  std::string to_json() const;
  std::string to_table() const;
};

MetricSummary summarize(std::vector<Real> values);

}  // namespace gpn
