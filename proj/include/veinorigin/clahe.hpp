#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "veinorigin/error.hpp"
#include "veinorigin/image.hpp"

namespace veinorigin {

namespace detail {

/// Clips a 256-bin tile histogram at `limit` and redistributes the excess;
/// the residual after even redistribution is spread round-robin.
inline void clip_histogram(std::array<std::uint32_t, 256>& hist, std::uint32_t limit) {
  std::uint64_t excess = 0;
  for (std::uint32_t v : hist)
    if (v > limit) excess += v - limit;
  if (excess == 0) return;

  const std::uint32_t step = static_cast<std::uint32_t>(excess / 256);
  const std::uint32_t upper = limit - step;
  for (auto& v : hist) {
    if (v > limit) {
      v = limit;
    } else if (v > upper) {
      excess -= v - upper;
      v = limit;
    } else {
      excess -= step;
      v += step;
    }
  }
  while (excess > 0) {
    bool placed = false;
    for (std::size_t b = 0; b < 256 && excess > 0; ++b) {
      if (hist[b] < limit) {
        ++hist[b];
        --excess;
        placed = true;
      }
    }
    // Every bin saturated (possible when clip_limit < 1): drop the rest.
    if (!placed) break;
  }
}

}  // namespace detail

/// Contrast Limited Adaptive Histogram Equalization on a tile grid with
/// bilinear blending between neighboring tile mappings. `clip_limit` is
/// relative to the uniform bin height (actual limit =
/// clip_limit * tile_pixels / 256, at least 1). Output range is [0, 255] and
/// the result is a pure function of the inputs.
inline GrayImage clahe(const GrayImage& img, double clip_limit, int tile_rows, int tile_cols) {
  if (clip_limit <= 0.0) raise(errc::invalid_argument, "clip_limit must be positive");
  if (tile_rows < 1 || tile_cols < 1) raise(errc::invalid_argument, "tile grid must be >= 1x1");
  if (img.width < tile_cols || img.height < tile_rows)
    raise(errc::tile_error, "image " + std::to_string(img.width) + "x" +
                                std::to_string(img.height) + " smaller than tile grid " +
                                std::to_string(tile_rows) + "x" + std::to_string(tile_cols));

  const int tile_w = (img.width + tile_cols - 1) / tile_cols;
  const int tile_h = (img.height + tile_rows - 1) / tile_rows;

  // Edge-replicated padding so every tile has the same pixel count.
  auto padded_at = [&](int x, int y) -> std::uint8_t {
    return img.at(std::min(x, img.width - 1), std::min(y, img.height - 1));
  };

  const std::uint32_t tile_pixels = static_cast<std::uint32_t>(tile_w) * tile_h;
  const std::uint32_t limit = std::max<std::uint32_t>(
      1, static_cast<std::uint32_t>(clip_limit * tile_pixels / 256.0));

  // Per-tile equalization lookup tables.
  std::vector<std::array<double, 256>> maps(static_cast<std::size_t>(tile_rows) * tile_cols);
  for (int ty = 0; ty < tile_rows; ++ty) {
    for (int tx = 0; tx < tile_cols; ++tx) {
      std::array<std::uint32_t, 256> hist{};
      for (int y = ty * tile_h; y < (ty + 1) * tile_h; ++y)
        for (int x = tx * tile_w; x < (tx + 1) * tile_w; ++x) ++hist[padded_at(x, y)];
      detail::clip_histogram(hist, limit);
      auto& map = maps[static_cast<std::size_t>(ty) * tile_cols + tx];
      std::uint64_t cum = 0;
      for (int b = 0; b < 256; ++b) {
        cum += hist[b];
        map[b] = 255.0 * static_cast<double>(cum) / tile_pixels;
      }
    }
  }

  // Bilinear interpolation between the four surrounding tile centers.
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    const double fy = (y + 0.5) / tile_h - 0.5;
    int ty0 = static_cast<int>(std::floor(fy));
    const double wy = fy - ty0;
    ty0 = std::clamp(ty0, 0, tile_rows - 1);
    const int ty1 = std::min(ty0 + 1, tile_rows - 1);
    for (int x = 0; x < img.width; ++x) {
      const double fx = (x + 0.5) / tile_w - 0.5;
      int tx0 = static_cast<int>(std::floor(fx));
      const double wx = fx - tx0;
      tx0 = std::clamp(tx0, 0, tile_cols - 1);
      const int tx1 = std::min(tx0 + 1, tile_cols - 1);

      const std::uint8_t v = img.at(x, y);
      const double m00 = maps[static_cast<std::size_t>(ty0) * tile_cols + tx0][v];
      const double m01 = maps[static_cast<std::size_t>(ty0) * tile_cols + tx1][v];
      const double m10 = maps[static_cast<std::size_t>(ty1) * tile_cols + tx0][v];
      const double m11 = maps[static_cast<std::size_t>(ty1) * tile_cols + tx1][v];
      const double wcx = (fx < 0.0 || tile_cols == 1) ? 0.0 : (fx > tile_cols - 1 ? 0.0 : wx);
      const double wcy = (fy < 0.0 || tile_rows == 1) ? 0.0 : (fy > tile_rows - 1 ? 0.0 : wy);
      const double m = (1.0 - wcy) * ((1.0 - wcx) * m00 + wcx * m01) +
                       wcy * ((1.0 - wcx) * m10 + wcx * m11);
      out.at(x, y) = clamp_u8(m);
    }
  }
  return out;
}

}  // namespace veinorigin
