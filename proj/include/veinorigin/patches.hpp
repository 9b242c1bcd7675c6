#pragma once

#include <string>
#include <vector>

#include "veinorigin/error.hpp"
#include "veinorigin/image.hpp"

namespace veinorigin {

inline constexpr int kPatchSize = 96;

struct Patch {
  GrayImage pixels;
  std::string source_id;
  int x = 0;  // origin in the source image
  int y = 0;
};

/// Non-overlapping grid anchored at (0, 0); remainder pixels on the right and
/// bottom are discarded. Count = floor(w/p) * floor(h/p).
inline std::vector<Patch> extract_patches(const GrayImage& img, const std::string& source_id,
                                          int patch_size = kPatchSize) {
  if (patch_size < 1) raise(errc::invalid_argument, "patch_size must be >= 1");
  if (img.width < patch_size || img.height < patch_size)
    raise(errc::too_small, "image " + std::to_string(img.width) + "x" +
                               std::to_string(img.height) + " smaller than patch size " +
                               std::to_string(patch_size));
  const int nx = img.width / patch_size;
  const int ny = img.height / patch_size;
  std::vector<Patch> out;
  out.reserve(static_cast<std::size_t>(nx) * ny);
  for (int gy = 0; gy < ny; ++gy) {
    for (int gx = 0; gx < nx; ++gx) {
      Patch p;
      p.source_id = source_id;
      p.x = gx * patch_size;
      p.y = gy * patch_size;
      p.pixels = GrayImage(patch_size, patch_size);
      for (int y = 0; y < patch_size; ++y)
        for (int x = 0; x < patch_size; ++x)
          p.pixels.at(x, y) = img.at(p.x + x, p.y + y);
      out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace veinorigin
