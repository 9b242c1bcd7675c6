#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "veinorigin/error.hpp"

namespace veinorigin {

/// 8-bit single-channel image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {
    if (w < 1 || h < 1) raise(errc::invalid_argument, "image dimensions must be >= 1");
  }

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  std::size_t size() const { return pixels.size(); }

  bool operator==(const GrayImage& o) const {
    return width == o.width && height == o.height && pixels == o.pixels;
  }
};

inline std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

/// Exact 256-bin histogram; bin b counts pixels equal to b.
inline std::array<std::uint64_t, 256> histogram(const GrayImage& img) {
  std::array<std::uint64_t, 256> counts{};
  for (std::uint8_t p : img.pixels) ++counts[p];
  return counts;
}

inline double mean_luminance(const GrayImage& img) {
  std::uint64_t sum = 0;
  for (std::uint8_t p : img.pixels) sum += p;
  return static_cast<double>(sum) / static_cast<double>(img.size());
}

/// Population variance of pixel values.
inline double pixel_variance(const GrayImage& img) {
  const double mu = mean_luminance(img);
  double acc = 0.0;
  for (std::uint8_t p : img.pixels) {
    const double d = static_cast<double>(p) - mu;
    acc += d * d;
  }
  return acc / static_cast<double>(img.size());
}

/// Bilinear resize (edge-clamped).
inline GrayImage resize_bilinear(const GrayImage& src, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) raise(errc::invalid_argument, "resize target must be >= 1x1");
  GrayImage dst(out_w, out_h);
  const double sx = static_cast<double>(src.width) / out_w;
  const double sy = static_cast<double>(src.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    const double wy = fy - y0;
    y0 = std::clamp(y0, 0, src.height - 1);
    const int y1 = std::min(y0 + 1, src.height - 1);
    for (int x = 0; x < out_w; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      const double wx = fx - x0;
      x0 = std::clamp(x0, 0, src.width - 1);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double v = (1.0 - wy) * ((1.0 - wx) * src.at(x0, y0) + wx * src.at(x1, y0)) +
                       wy * ((1.0 - wx) * src.at(x0, y1) + wx * src.at(x1, y1));
      dst.at(x, y) = clamp_u8(v);
    }
  }
  return dst;
}

}  // namespace veinorigin
