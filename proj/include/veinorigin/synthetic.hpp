#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "veinorigin/error.hpp"
#include "veinorigin/image.hpp"
#include "veinorigin/manifest.hpp"
#include "veinorigin/png_io.hpp"
#include "veinorigin/rng.hpp"
#include "veinorigin/sensor.hpp"

namespace veinorigin {

/// Per-class acquisition signature for the synthetic corpus: multiplicative
/// fixed-pattern noise, a luminance offset, additive read noise and a
/// radial vignette.
struct SyntheticSensorProfile {
  SensorClass sensor = SensorClass::SDUMLA;
  std::uint64_t fpn_seed = 0;
  double fpn_strength = 0.05;     // multiplicative amplitude, [0, 0.1]
  double luminance_offset = 0.0;  // gray levels, [-40, 40]
  double read_noise_sigma = 2.0;  // gray levels, >= 0
  double vignette_strength = 0.2; // [0, 1]
};

inline void validate_profile(const SyntheticSensorProfile& p) {
  if (p.fpn_strength < 0.0 || p.fpn_strength > 0.1)
    raise(errc::invalid_argument, "fpn_strength out of [0, 0.1]");
  if (p.luminance_offset < -40.0 || p.luminance_offset > 40.0)
    raise(errc::invalid_argument, "luminance_offset out of [-40, 40]");
  if (p.read_noise_sigma < 0.0) raise(errc::invalid_argument, "read_noise_sigma must be >= 0");
  if (p.vignette_strength < 0.0 || p.vignette_strength > 1.0)
    raise(errc::invalid_argument, "vignette_strength out of [0, 1]");
}

/// One profile per sensor class, mutually distinct in every signature
/// component.
inline std::array<SyntheticSensorProfile, kNumSensors> default_profiles() {
  std::array<SyntheticSensorProfile, kNumSensors> ps;
  const double strengths[] = {0.060, 0.095, 0.040, 0.080, 0.100, 0.070, 0.090, 0.050};
  const double offsets[] = {-32.0, 24.0, -12.0, 36.0, 4.0, -24.0, 14.0, -4.0};
  const double noises[] = {1.0, 5.5, 0.5, 3.5, 7.0, 2.0, 6.0, 4.5};
  const double vignettes[] = {0.10, 0.40, 0.25, 0.05, 0.55, 0.30, 0.15, 0.45};
  for (int i = 0; i < kNumSensors; ++i) {
    ps[i].sensor = sensor_from_index(i);
    ps[i].fpn_seed = 0x5e201u + 977u * static_cast<std::uint64_t>(i);
    ps[i].fpn_strength = strengths[i];
    ps[i].luminance_offset = offsets[i];
    ps[i].read_noise_sigma = noises[i];
    ps[i].vignette_strength = vignettes[i];
  }
  return ps;
}

namespace detail {

/// Per-class fixed-pattern noise field in [-1, 1], constant across exposures.
/// The seed determines the pattern and its texture: a mixture of column
/// stripes, row stripes and clustered per-pixel noise, the way different
/// sensor designs show different readout and pixel-grain structure.
inline std::vector<double> fpn_field(std::uint64_t fpn_seed, int w, int h) {
  Rng rng(splitmix64(fpn_seed));
  const double w_col = 0.15 + 0.85 * rng.uniform();
  const double w_row = 0.15 + 0.85 * rng.uniform();
  const double w_pix = 0.30 + 0.70 * rng.uniform();
  const int grain = 1 + static_cast<int>(rng.below(5));

  std::vector<double> col(w), row(h);
  for (auto& v : col) v = rng.uniform(-1.0, 1.0);
  for (auto& v : row) v = rng.uniform(-1.0, 1.0);

  // Clustered pixel component: grain x grain blocks of constant value.
  const int gw = (w + grain - 1) / grain, gh = (h + grain - 1) / grain;
  std::vector<double> blocks(static_cast<std::size_t>(gw) * gh);
  for (auto& v : blocks) v = rng.uniform(-1.0, 1.0);

  const double norm = 1.0 / (w_col + w_row + w_pix);
  std::vector<double> f(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double pix = blocks[static_cast<std::size_t>(y / grain) * gw + x / grain];
      f[static_cast<std::size_t>(y) * w + x] =
          norm * (w_col * col[x] + w_row * row[y] + w_pix * pix);
    }
  return f;
}

/// Smooth band-limited field in [0, 1]: coarse seeded grid, bilinear upsample.
inline std::vector<double> smooth_noise(Rng& rng, int w, int h, int cell) {
  const int gw = std::max(2, w / cell + 2);
  const int gh = std::max(2, h / cell + 2);
  std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
  for (auto& v : grid) v = rng.uniform();
  std::vector<double> f(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    const double gy = static_cast<double>(y) / cell;
    const int y0 = std::min(static_cast<int>(gy), gh - 2);
    const double ty = gy - y0;
    for (int x = 0; x < w; ++x) {
      const double gx = static_cast<double>(x) / cell;
      const int x0 = std::min(static_cast<int>(gx), gw - 2);
      const double tx = gx - x0;
      const double a = grid[static_cast<std::size_t>(y0) * gw + x0];
      const double b = grid[static_cast<std::size_t>(y0) * gw + x0 + 1];
      const double c = grid[static_cast<std::size_t>(y0 + 1) * gw + x0];
      const double d = grid[static_cast<std::size_t>(y0 + 1) * gw + x0 + 1];
      f[static_cast<std::size_t>(y) * w + x] =
          (1 - ty) * ((1 - tx) * a + tx * b) + ty * ((1 - tx) * c + tx * d);
    }
  }
  return f;
}

/// Subtracts a soft-profile dab centered at (cx, cy) from the luminance field.
inline void dark_dab(std::vector<double>& lum, int w, int h, double cx, double cy, double depth,
                     double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  const int x0 = std::max(0, static_cast<int>(cx) - r), x1 = std::min(w - 1, static_cast<int>(cx) + r);
  const int y0 = std::max(0, static_cast<int>(cy) - r), y1 = std::min(h - 1, static_cast<int>(cy) + r);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx, dy = y - cy;
      lum[static_cast<std::size_t>(y) * w + x] -= depth * std::exp(-(dx * dx + dy * dy) * inv);
    }
}

/// Vein-like sample content: smooth illumination plus dark curvilinear
/// strokes wandering across the frame.
inline std::vector<double> vein_texture(Rng& rng, int w, int h) {
  std::vector<double> lum = smooth_noise(rng, w, h, std::max(8, std::min(w, h) / 6));
  for (auto& v : lum) v = 120.0 + 70.0 * (v - 0.5);

  const int strokes = 4 + static_cast<int>(rng.below(4));
  for (int s = 0; s < strokes; ++s) {
    double x = rng.uniform(0.0, w);
    double y = rng.uniform(0.0, h);
    double theta = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    const double depth = rng.uniform(25.0, 55.0);
    const double sigma = rng.uniform(1.2, 2.8);
    const int steps = static_cast<int>(0.7 * (w + h) / 2.0);
    for (int t = 0; t < steps; ++t) {
      dark_dab(lum, w, h, x, y, depth, sigma);
      theta += rng.uniform(-0.18, 0.18);
      x += std::cos(theta) * 1.5;
      y += std::sin(theta) * 1.5;
      if (x < -4 || x > w + 4 || y < -4 || y > h + 4) break;
    }
  }
  return lum;
}

}  // namespace detail

/// Renders one sample for a sensor profile. `content_seed` varies per image,
/// the fixed-pattern field depends only on the profile's fpn_seed.
inline GrayImage render_synthetic_sample(const SyntheticSensorProfile& p,
                                         const std::vector<double>& fpn, int w, int h,
                                         std::uint64_t content_seed) {
  Rng rng(content_seed);
  std::vector<double> lum = detail::vein_texture(rng, w, h);

  const double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
  const double rmax2 = cx * cx + cy * cy;
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      double v = lum[i] * (1.0 + p.fpn_strength * fpn[i]);
      v += p.luminance_offset;
      v += p.read_noise_sigma * rng.normal();
      const double dx = x - cx, dy = y - cy;
      v *= 1.0 - p.vignette_strength * ((dx * dx + dy * dy) / rmax2);
      img.pixels[i] = clamp_u8(v);
    }
  }
  return img;
}

/// Writes `per_class` samples per sensor under out_dir/<SENSOR>/ and returns
/// the manifest. Deterministic in (profiles, per_class, size, seed).
inline DatasetManifest generate_synthetic_dataset(
    const std::vector<SyntheticSensorProfile>& profiles, int per_class, int w, int h,
    std::uint64_t seed, const std::filesystem::path& out_dir) {
  if (per_class < 1) raise(errc::invalid_argument, "per_class must be >= 1");
  if (w < 96 || h < 96)
    raise(errc::size_too_small, "synthetic image size must be at least 96x96, got " +
                                    std::to_string(w) + "x" + std::to_string(h));
  if (profiles.size() != static_cast<std::size_t>(kNumSensors))
    raise(errc::invalid_argument, "need exactly 8 sensor profiles");
  std::set<std::uint64_t> fpn_seeds;
  std::set<int> sensors;
  for (const auto& p : profiles) {
    validate_profile(p);
    if (!fpn_seeds.insert(p.fpn_seed).second)
      raise(errc::invalid_argument, "fpn_seed values must be distinct per sensor");
    sensors.insert(sensor_index(p.sensor));
  }
  if (sensors.size() != static_cast<std::size_t>(kNumSensors))
    raise(errc::invalid_argument, "profiles must cover all 8 sensor classes");

  std::vector<SyntheticSensorProfile> ordered = profiles;
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    return sensor_index(a.sensor) < sensor_index(b.sensor);
  });

  DatasetManifest manifest;
  manifest.created_with_seed = seed;
  for (const auto& p : ordered) {
    const std::vector<double> fpn = detail::fpn_field(p.fpn_seed, w, h);
    const auto dir = out_dir / std::string(sensor_name(p.sensor));
    std::filesystem::create_directories(dir);
    for (int i = 0; i < per_class; ++i) {
      const std::uint64_t tag =
          (static_cast<std::uint64_t>(sensor_index(p.sensor)) << 32) | static_cast<std::uint32_t>(i);
      GrayImage img = render_synthetic_sample(p, fpn, w, h, derive_seed(seed, tag));
      char name[32];
      std::snprintf(name, sizeof(name), "%s_%04d", std::string(sensor_name(p.sensor)).c_str(), i);
      const auto file = dir / (std::string(name) + ".png");
      save_png(img, file);
      SampleRecord r;
      r.sample_id = std::string(sensor_name(p.sensor)) + "/" + name;
      r.sensor = p.sensor;
      r.path = file.string();
      r.kind = SampleKind::raw;
      r.width = w;
      r.height = h;
      manifest.records.push_back(std::move(r));
    }
  }
  return manifest;
}

}  // namespace veinorigin
