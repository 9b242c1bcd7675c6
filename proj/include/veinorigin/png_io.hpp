#pragma once

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>

#include "veinorigin/error.hpp"
#include "veinorigin/image.hpp"

namespace veinorigin {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace detail

/// Writes an 8-bit grayscale PNG. Fixed encoder settings keep the output
/// byte-identical across runs for the same pixels.
inline void save_png(const GrayImage& img, const std::filesystem::path& path) {
  detail::FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) raise(errc::write_error, "cannot open for writing: " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) raise(errc::write_error, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    raise(errc::write_error, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    raise(errc::write_error, "libpng write error: " + path.string());
  }

  png_init_io(png, fp.get());
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(img.pixels.data() +
                                             static_cast<std::size_t>(y) * img.width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Reads an 8-bit grayscale PNG. Color, 16-bit and interlaced files are
/// rejected; callers treat the failure as a per-file ingestion error.
inline GrayImage load_png(const std::filesystem::path& path) {
  detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) raise(errc::io_error, "cannot open: " + path.string());

  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
    raise(errc::io_error, "not a PNG file: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) raise(errc::io_error, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    raise(errc::io_error, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    raise(errc::io_error, "libpng read error: " + path.string());
  }

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  const int interlace = png_get_interlace_type(png, info);

  if (color_type != PNG_COLOR_TYPE_GRAY || bit_depth > 8 || interlace != PNG_INTERLACE_NONE) {
    png_destroy_read_struct(&png, &info, nullptr);
    raise(errc::io_error, "unsupported PNG (need 8-bit grayscale): " + path.string());
  }
  if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  GrayImage img(static_cast<int>(w), static_cast<int>(h));
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, img.pixels.data() + static_cast<std::size_t>(y) * w, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace veinorigin
