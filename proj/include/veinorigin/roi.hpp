#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <queue>
#include <vector>

#include "veinorigin/error.hpp"
#include "veinorigin/image.hpp"

namespace veinorigin {

/// Half-open pixel box: x in [x0, x1), y in [y0, y1).
struct RoiBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool operator==(const RoiBox&) const = default;
};

struct RoiParams {
  int blur_radius = 3;  // kernel half-width; 0 disables blurring
  int margin = 2;       // inward shrink applied to the component box
};

/// Separable Gaussian blur with edge clamping; sigma = radius / 2.
inline GrayImage gaussian_blur(const GrayImage& img, int radius) {
  if (radius <= 0) return img;
  const double sigma = std::max(0.5, radius / 2.0);
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double ksum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    ksum += kernel[i + radius];
  }
  for (auto& k : kernel) k /= ksum;

  std::vector<double> tmp(img.size());
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * img.at(std::clamp(x + i, 0, img.width - 1), y);
      tmp[static_cast<std::size_t>(y) * img.width + x] = acc;
    }
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * tmp[static_cast<std::size_t>(std::clamp(y + i, 0, img.height - 1)) * img.width + x];
      out.at(x, y) = clamp_u8(acc);
    }
  return out;
}

/// Otsu threshold over a 256-bin histogram. Returns -1 when the image has no
/// spread (between-class variance is zero everywhere).
inline int otsu_threshold(const std::array<std::uint64_t, 256>& hist) {
  std::uint64_t total = 0;
  double sum_all = 0.0;
  for (int b = 0; b < 256; ++b) {
    total += hist[b];
    sum_all += static_cast<double>(b) * hist[b];
  }
  if (total == 0) return -1;

  double sum_bg = 0.0;
  std::uint64_t w_bg = 0;
  double best_var = 0.0;
  int best_t = -1;
  for (int t = 0; t < 256; ++t) {
    w_bg += hist[t];
    if (w_bg == 0) continue;
    const std::uint64_t w_fg = total - w_bg;
    if (w_fg == 0) break;
    sum_bg += static_cast<double>(t) * hist[t];
    const double mu_bg = sum_bg / w_bg;
    const double mu_fg = (sum_all - sum_bg) / w_fg;
    const double var = static_cast<double>(w_bg) * w_fg * (mu_bg - mu_fg) * (mu_bg - mu_fg);
    if (var > best_var) {
      best_var = var;
      best_t = t;
    }
  }
  return best_var > 0.0 ? best_t : -1;
}

namespace detail {

/// Bounding box of the largest 4-connected foreground component.
inline bool largest_component_box(const std::vector<std::uint8_t>& mask, int w, int h, RoiBox& box) {
  std::vector<std::int32_t> label(static_cast<std::size_t>(w) * h, -1);
  std::int32_t next = 0;
  std::size_t best_size = 0;
  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      const std::size_t si = static_cast<std::size_t>(sy) * w + sx;
      if (!mask[si] || label[si] >= 0) continue;
      std::queue<std::pair<int, int>> q;
      q.push({sx, sy});
      label[si] = next;
      std::size_t size = 0;
      RoiBox b{sx, sy, sx + 1, sy + 1};
      while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop();
        ++size;
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x + 1);
        b.y1 = std::max(b.y1, y + 1);
        const int nx[4] = {x - 1, x + 1, x, x};
        const int ny[4] = {y, y, y - 1, y + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
          const std::size_t ni = static_cast<std::size_t>(ny[k]) * w + nx[k];
          if (mask[ni] && label[ni] < 0) {
            label[ni] = next;
            q.push({nx[k], ny[k]});
          }
        }
      }
      if (size > best_size) {
        best_size = size;
        box = b;
      }
      ++next;
    }
  }
  return best_size > 0;
}

}  // namespace detail

/// Locates the finger region: blur, Otsu threshold, largest 4-connected
/// bright component, tight bounding box shrunk inward by `margin`. The
/// returned box always stays inside the source image.
inline std::pair<GrayImage, RoiBox> extract_roi(const GrayImage& img, const RoiParams& params) {
  const GrayImage blurred = gaussian_blur(img, params.blur_radius);
  const int t = otsu_threshold(histogram(blurred));
  if (t < 0) raise(errc::roi_not_found, "image has no foreground (flat histogram)");

  std::vector<std::uint8_t> mask(img.size());
  bool any = false;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = blurred.pixels[i] > t;
    any |= mask[i] != 0;
  }
  if (!any) raise(errc::roi_not_found, "no pixel above the computed threshold");

  RoiBox box;
  if (!detail::largest_component_box(mask, img.width, img.height, box))
    raise(errc::roi_not_found, "no foreground component");

  // Inward margin, clamped so at least one pixel survives.
  const int m = std::max(0, params.margin);
  const int mx = std::min(m, (box.width() - 1) / 2);
  const int my = std::min(m, (box.height() - 1) / 2);
  box.x0 += mx;
  box.x1 -= mx;
  box.y0 += my;
  box.y1 -= my;

  GrayImage crop(box.width(), box.height());
  for (int y = 0; y < crop.height; ++y)
    for (int x = 0; x < crop.width; ++x) crop.at(x, y) = img.at(box.x0 + x, box.y0 + y);
  return {std::move(crop), box};
}

}  // namespace veinorigin
