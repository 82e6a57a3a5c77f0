// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "gpn/common.hpp"

namespace gpn {

/// Row-major RGB image with real-valued channels, nominally in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<Real> data;

  Image() = default;
  Image(int w, int h, Real fill = 0.0)
      : width(w), height(h), data(static_cast<size_t>(w) * static_cast<size_t>(h) * 3, fill) {}

  Index pixel_count() const { return static_cast<Index>(width) * height; }
  Real& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  Real at(int x, int y, int c) const { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  Vec3 pixel(Index i) const {
    const size_t o = static_cast<size_t>(i) * 3;
    return {data[o], data[o + 1], data[o + 2]};
  }
  void set_pixel(Index i, const Vec3& v) {
    const size_t o = static_cast<size_t>(i) * 3;
    data[o] = v.x();
    data[o + 1] = v.y();
    data[o + 2] = v.z();
  }
  /// Bilinear lookup at continuous pixel coordinates (pixel centers at i + 0.5);
  /// coordinates are clamped to the image.
  Vec3 sample_bilinear(Real u, Real v) const;
  bool same_shape(const Image& other) const { return width == other.width && height == other.height; }
};

/// 8-bit RGB PNG. Values are clamped to [0, 1] and rounded to the nearest code.
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

/// Quantizes to the 8-bit grid used by write_png without touching disk.
Image quantize8(const Image& image);

}  // namespace gpn
