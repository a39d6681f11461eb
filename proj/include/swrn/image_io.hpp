#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "swrn/tensor.hpp"

namespace swrn {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace detail

/// Decodes an 8-bit RGB PNG to a (1,3,H,W) tensor with values v/255.
template <typename T = float>
inline Tensor<T> load_png(const std::filesystem::path& path) {
  detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("load_png: cannot open " + path.string());

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("load_png: libpng init failed");
  }
  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("load_png: decode error in " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_RGB || depth != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("load_png: " + path.string() +
                             " is not an 8-bit RGB PNG");
  }

  pixels.resize((std::size_t)w * h * 3);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + (std::size_t)y * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Tensor<T> out({1, 3, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        out.at(0, c, y, x) = (T)(pixels[(y * w + x) * 3 + c] / 255.0);
  return out;
}

/// Encodes a (1,3,H,W) tensor in [0,1] as an 8-bit RGB PNG. Quantization is
/// round-half-away-from-zero on v*255, after clamping.
template <typename T>
inline void save_png(const Tensor<T>& img, const std::filesystem::path& path) {
  const Shape4& s = img.shape();
  if (s.n != 1 || s.c != 3) {
    throw std::invalid_argument("save_png: expected (1,3,H,W), got " + s.str());
  }
  std::vector<png_byte> pixels((std::size_t)s.h * s.w * 3);
  for (std::size_t y = 0; y < s.h; ++y) {
    for (std::size_t x = 0; x < s.w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp((double)img.at(0, c, y, x), 0.0, 1.0);
        pixels[(y * s.w + x) * 3 + c] = (png_byte)std::lround(v * 255.0);
      }
    }
  }

  detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("save_png: cannot open " + path.string());
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("save_png: libpng init failed");
  }
  std::vector<png_bytep> rows(s.h);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("save_png: encode error in " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, (png_uint_32)s.w, (png_uint_32)s.h, 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < s.h; ++y)
    rows[y] = pixels.data() + y * s.w * 3;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace swrn
