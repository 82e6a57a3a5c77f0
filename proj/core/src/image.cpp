// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "gpn/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

namespace gpn {

namespace {

std::uint8_t to_byte(Real v) {
  const Real c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Vec3 Image::sample_bilinear(Real u, Real v) const {
  const Real fx = std::clamp(u - 0.5, 0.0, static_cast<Real>(width - 1));
  const Real fy = std::clamp(v - 0.5, 0.0, static_cast<Real>(height - 1));
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const int x1 = std::min(x0 + 1, width - 1);
  const int y1 = std::min(y0 + 1, height - 1);
  const Real ax = fx - x0;
  const Real ay = fy - y0;
  Vec3 out;
  for (int c = 0; c < 3; ++c) {
    const Real top = (1 - ax) * at(x0, y0, c) + ax * at(x1, y0, c);
    const Real bottom = (1 - ax) * at(x0, y1, c) + ax * at(x1, y1, c);
    out[c] = (1 - ay) * top + ay * bottom;
  }
  return out;
}

Image quantize8(const Image& image) {
  Image out = image;
  for (auto& v : out.data) v = to_byte(v) / 255.0;
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  require(image.width > 0 && image.height > 0, ErrorCode::kInvalidArgument, "cannot write an empty image");
  FilePtr file(std::fopen(path.c_str(), "wb"));
  require(file != nullptr, ErrorCode::kIo, "cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kIo, "libpng initialization failed");
  }
  std::vector<std::uint8_t> row(static_cast<size_t>(image.width) * 3);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kIo, "libpng error while writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) row[static_cast<size_t>(x) * 3 + c] = to_byte(image.at(x, y, c));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  require(file != nullptr, ErrorCode::kIo, "cannot open " + path.string());
  png_byte header[8];
  require(std::fread(header, 1, 8, file.get()) == 8 && png_sig_cmp(header, 0, 8) == 0, ErrorCode::kParse,
          path.string() + " is not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::kIo, "libpng initialization failed");
  }
  Image image;
  std::vector<std::uint8_t> row;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::kParse, "corrupt PNG data in " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const auto color_type = png_get_color_type(png, info);
  const auto bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (bit_depth < 8) png_set_packing(png);
  png_read_update_info(png, info);

  image.width = static_cast<int>(png_get_image_width(png, info));
  image.height = static_cast<int>(png_get_image_height(png, info));
  image.data.assign(static_cast<size_t>(image.width) * image.height * 3, 0.0);
  row.resize(png_get_rowbytes(png, info));
  for (int y = 0; y < image.height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) image.at(x, y, c) = row[static_cast<size_t>(x) * 3 + c] / 255.0;
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

}  // namespace gpn
