// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "gpn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace gpn {

NearestNeighborGrid::NearestNeighborGrid(const Mat3X& points) : points_(points) {
  const Index n = points_.cols();
  require(n >= 1, ErrorCode::kEmptySet, "nearest-neighbour grid needs at least one point");
  lo_ = points_.rowwise().minCoeff();
  const Vec3 extent = points_.rowwise().maxCoeff() - lo_;
  const Real e = std::max(extent.maxCoeff(), 1e-12);
  const Real per_axis = std::max<Real>(1.0, std::ceil(std::cbrt(static_cast<Real>(n) / 2.0)));
  const Real h = e / per_axis;
  cell_ = Vec3::Constant(h);
  for (int a = 0; a < 3; ++a) {
    dims_[a] = std::clamp<Index>(static_cast<Index>(std::ceil(extent[a] / h)), 1, 256);
  }
  const Index cells = dims_[0] * dims_[1] * dims_[2];
  std::vector<Index> cell_of(static_cast<size_t>(n));
  starts_.assign(static_cast<size_t>(cells) + 1, 0);
  for (Index i = 0; i < n; ++i) {
    const Index c = cell_coord(points_(0, i), 0) + dims_[0] * (cell_coord(points_(1, i), 1) +
                                                                dims_[1] * cell_coord(points_(2, i), 2));
    cell_of[static_cast<size_t>(i)] = c;
    ++starts_[static_cast<size_t>(c) + 1];
  }
  for (size_t c = 0; c < static_cast<size_t>(cells); ++c) starts_[c + 1] += starts_[c];
  order_.resize(static_cast<size_t>(n));
  std::vector<Index> fill(starts_.begin(), starts_.end() - 1);
  for (Index i = 0; i < n; ++i) order_[static_cast<size_t>(fill[static_cast<size_t>(cell_of[static_cast<size_t>(i)])]++)] = i;
}

Index NearestNeighborGrid::cell_coord(Real v, int axis) const {
  const Real f = std::floor((v - lo_[axis]) / cell_[axis]);
  if (!(f >= 0.0)) return 0;
  return std::min<Index>(static_cast<Index>(f), dims_[axis] - 1);
}

Index NearestNeighborGrid::nearest_index(const Vec3& q, Real* squared) const {
  const Index c0[3] = {cell_coord(q.x(), 0), cell_coord(q.y(), 1), cell_coord(q.z(), 2)};
  const Index max_ring = std::max({dims_[0], dims_[1], dims_[2]});
  Real best = std::numeric_limits<Real>::infinity();
  Index best_index = -1;
  for (Index r = 0; r <= max_ring; ++r) {
    const Index k0 = std::max<Index>(0, c0[2] - r), k1 = std::min(dims_[2] - 1, c0[2] + r);
    const Index j0 = std::max<Index>(0, c0[1] - r), j1 = std::min(dims_[1] - 1, c0[1] + r);
    const Index i0 = std::max<Index>(0, c0[0] - r), i1 = std::min(dims_[0] - 1, c0[0] + r);
    for (Index k = k0; k <= k1; ++k) {
      for (Index j = j0; j <= j1; ++j) {
        const bool face = std::abs(k - c0[2]) == r || std::abs(j - c0[1]) == r;
        for (Index i = i0; i <= i1; ++i) {
          if (!face && std::abs(i - c0[0]) != r) {
            // Jump across the interior of the ring.
            if (i < c0[0] + r) i = std::max(i, c0[0] + r - 1);
            continue;
          }
          const Index c = i + dims_[0] * (j + dims_[1] * k);
          for (Index s = starts_[static_cast<size_t>(c)]; s < starts_[static_cast<size_t>(c) + 1]; ++s) {
            const Index idx = order_[static_cast<size_t>(s)];
            const Real d = (points_.col(idx) - q).squaredNorm();
            if (d < best || (d == best && idx < best_index)) {
              best = d;
              best_index = idx;
            }
          }
        }
      }
    }
    // Points in rings beyond r are at least r cell widths away.
    const Real bound = static_cast<Real>(r) * cell_.minCoeff() * (1.0 - 1e-9);
    if (best_index >= 0 && best < bound * bound) break;
  }
  if (squared) *squared = best;
  return best_index;
}

Real NearestNeighborGrid::nearest_squared(const Vec3& q) const {
  Real d = 0.0;
  nearest_index(q, &d);
  return d;
}

Real directed_chamfer(const Mat3X& p, const Mat3X& q) {
  require(p.cols() >= 1 && q.cols() >= 1, ErrorCode::kEmptySet, "chamfer distance needs non-empty point sets");
  const NearestNeighborGrid grid(q);
  Real sum = 0.0;
  for (Index i = 0; i < p.cols(); ++i) sum += grid.nearest_squared(p.col(i));
  return sum;
}

Real chamfer(const Mat3X& p, const Mat3X& q) { return directed_chamfer(p, q) + directed_chamfer(q, p); }

Real chamfer_brute_force(const Mat3X& p, const Mat3X& q) {
  require(p.cols() >= 1 && q.cols() >= 1, ErrorCode::kEmptySet, "chamfer distance needs non-empty point sets");
  auto half = [](const Mat3X& a, const Mat3X& b) {
    Real sum = 0.0;
    for (Index i = 0; i < a.cols(); ++i) {
      Real best = std::numeric_limits<Real>::infinity();
      for (Index j = 0; j < b.cols(); ++j) best = std::min(best, (b.col(j) - a.col(i)).squaredNorm());
      sum += best;
    }
    return sum;
  };
  return half(p, q) + half(q, p);
}

Real mmd(const std::vector<Mat3X>& generated, const std::vector<Mat3X>& reference) {
  require(!generated.empty() && !reference.empty(), ErrorCode::kEmptySet, "MMD needs non-empty sets");
  Real total = 0.0;
  for (const auto& y : reference) {
    Real best = std::numeric_limits<Real>::infinity();
    for (const auto& x : generated) best = std::min(best, chamfer(x, y));
    total += best;
  }
  return total / static_cast<Real>(reference.size());
}

Real mse(const Image& img, const Image& ref) {
  require(img.same_shape(ref), ErrorCode::kShapeMismatch,
          "image sizes differ: " + std::to_string(img.width) + "x" + std::to_string(img.height) + " vs " +
              std::to_string(ref.width) + "x" + std::to_string(ref.height));
  require(!img.data.empty(), ErrorCode::kEmptySet, "cannot compare empty images");
  Real sum = 0.0;
  for (size_t i = 0; i < img.data.size(); ++i) {
    const Real d = img.data[i] - ref.data[i];
    sum += d * d;
  }
  return sum / static_cast<Real>(img.data.size());
}

Real psnr_from_mse(Real m) {
  if (m <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(m));
}

Real psnr(const Image& img, const Image& ref) { return psnr_from_mse(mse(img, ref)); }

namespace {

std::vector<Real> gaussian_window(int size, Real sigma) {
  std::vector<Real> w(static_cast<size_t>(size));
  const Real c = 0.5 * (size - 1);
  Real total = 0.0;
  for (int i = 0; i < size; ++i) total += w[static_cast<size_t>(i)] = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
  for (auto& v : w) v /= total;
  return w;
}

// Separable "valid" filtering of a single-channel plane.
std::vector<Real> filter_valid(const std::vector<Real>& plane, int width, int height, const std::vector<Real>& w) {
  const int k = static_cast<int>(w.size());
  const int ow = width - k + 1, oh = height - k + 1;
  std::vector<Real> tmp(static_cast<size_t>(ow) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < ow; ++x) {
      Real s = 0.0;
      for (int i = 0; i < k; ++i) s += w[static_cast<size_t>(i)] * plane[static_cast<size_t>(y) * width + x + i];
      tmp[static_cast<size_t>(y) * ow + x] = s;
    }
  }
  std::vector<Real> out(static_cast<size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      Real s = 0.0;
      for (int i = 0; i < k; ++i) s += w[static_cast<size_t>(i)] * tmp[static_cast<size_t>(y + i) * ow + x];
      out[static_cast<size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

Real ssim(const Image& img, const Image& ref) {
  require(img.same_shape(ref), ErrorCode::kShapeMismatch, "SSIM needs images of equal size");
  require(img.width >= 1 && img.height >= 1, ErrorCode::kEmptySet, "cannot compare empty images");
  int size = std::min({11, img.width, img.height});
  if (size % 2 == 0) --size;
  const auto w = gaussian_window(size, 1.5);
  constexpr Real c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const size_t n = static_cast<size_t>(img.pixel_count());
  Real total = 0.0;
  Index count = 0;
  for (int ch = 0; ch < 3; ++ch) {
    std::vector<Real> a(n), b(n), aa(n), bb(n), ab(n);
    for (size_t i = 0; i < n; ++i) {
      a[i] = img.data[i * 3 + ch];
      b[i] = ref.data[i * 3 + ch];
      aa[i] = a[i] * a[i];
      bb[i] = b[i] * b[i];
      ab[i] = a[i] * b[i];
    }
    const auto mu_a = filter_valid(a, img.width, img.height, w);
    const auto mu_b = filter_valid(b, img.width, img.height, w);
    const auto s_aa = filter_valid(aa, img.width, img.height, w);
    const auto s_bb = filter_valid(bb, img.width, img.height, w);
    const auto s_ab = filter_valid(ab, img.width, img.height, w);
    for (size_t i = 0; i < mu_a.size(); ++i) {
      const Real va = s_aa[i] - mu_a[i] * mu_a[i];
      const Real vb = s_bb[i] - mu_b[i] * mu_b[i];
      const Real cov = s_ab[i] - mu_a[i] * mu_b[i];
      total += ((2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2)) /
               ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / static_cast<Real>(count);
}

MetricSummary summarize(std::vector<Real> values) {
  MetricSummary s;
  s.count = static_cast<Index>(values.size());
  if (values.empty()) return s;
  Real sum = 0.0;
  for (Real v : values) sum += v;
  s.mean = sum / static_cast<Real>(values.size());
  std::sort(values.begin(), values.end());
  const size_t mid = values.size() / 2;
  s.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return s;
}

namespace {

template <typename Get>
MetricSummary summarize_rows(const std::vector<MetricRow>& rows, Get get) {
  std::vector<Real> v;
  for (const auto& r : rows) {
    if (const auto x = get(r)) v.push_back(*x);
  }
  return summarize(std::move(v));
}

std::string fmt(std::optional<Real> v, Real scale = 1.0) {
  if (!v) return "";
  std::ostringstream os;
  os << std::setprecision(10) << *v * scale;
  return os.str();
}

}  // namespace

MetricSummary MetricReport::summary_chamfer() const {
  return summarize_rows(rows, [](const MetricRow& r) { return r.chamfer; });
}
MetricSummary MetricReport::summary_psnr() const {
  return summarize_rows(rows, [](const MetricRow& r) { return r.psnr; });
}
MetricSummary MetricReport::summary_ssim() const {
  return summarize_rows(rows, [](const MetricRow& r) { return r.ssim; });
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os << "scene,cd_x1e4,psnr,ssim\n";
  for (const auto& r : rows) {
    os << r.scene << ',' << fmt(r.chamfer, kChamferScale) << ',' << fmt(r.psnr) << ',' << fmt(r.ssim) << '\n';
  }
  return os.str();
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json jr;
    jr["scene"] = r.scene;
    if (r.chamfer) {
      jr["cd"] = *r.chamfer;
      jr["cd_x1e4"] = *r.chamfer * kChamferScale;
    }
    if (r.psnr) jr["psnr"] = *r.psnr;
    if (r.ssim) jr["ssim"] = *r.ssim;
    j["rows"].push_back(jr);
  }
  auto add = [&](const char* name, const MetricSummary& s, Real scale) {
    if (s.count == 0) return;
    j["aggregate"][name] = {{"mean", s.mean * scale}, {"median", s.median * scale}, {"count", s.count}};
  };
  add("cd_x1e4", summary_chamfer(), kChamferScale);
  add("psnr", summary_psnr(), 1.0);
  add("ssim", summary_ssim(), 1.0);
  if (mmd) {
    j["mmd"] = *mmd;
    j["mmd_x1e3"] = *mmd * kMmdScale;
  }
  return j.dump(2);
}

std::string MetricReport::to_table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << std::left << std::setw(24) << "scene" << std::right << std::setw(14) << "CD(x1e4)" << std::setw(10) << "PSNR"
     << std::setw(10) << "SSIM" << '\n';
  auto cell = [&](std::optional<Real> v, Real scale, int width) {
    if (v) {
      os << std::setw(width) << *v * scale;
    } else {
      os << std::setw(width) << "-";
    }
  };
  for (const auto& r : rows) {
    os << std::left << std::setw(24) << r.scene << std::right;
    cell(r.chamfer, kChamferScale, 14);
    cell(r.psnr, 1.0, 10);
    cell(r.ssim, 1.0, 10);
    os << '\n';
  }
  const auto cd = summary_chamfer(), ps = summary_psnr(), ss = summary_ssim();
  auto agg = [&](const char* label, auto pick) {
    os << std::left << std::setw(24) << label << std::right;
    cell(cd.count ? std::optional<Real>(pick(cd)) : std::nullopt, kChamferScale, 14);
    cell(ps.count ? std::optional<Real>(pick(ps)) : std::nullopt, 1.0, 10);
    cell(ss.count ? std::optional<Real>(pick(ss)) : std::nullopt, 1.0, 10);
    os << '\n';
  };
  agg("mean", [](const MetricSummary& s) { return s.mean; });
  agg("median", [](const MetricSummary& s) { return s.median; });
  if (mmd) os << "MMD-CD(x1e3) " << *mmd * kMmdScale << '\n';
  return os.str();
}

}  // namespace gpn
