#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "veinorigin/error.hpp"
#include "veinorigin/image.hpp"
#include "veinorigin/manifest.hpp"
#include "veinorigin/png_io.hpp"
#include "veinorigin/sensor.hpp"

namespace veinorigin {

/// Linear-interpolation quantile (position p * (n-1)) over sorted values.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) raise(errc::invalid_argument, "quantile of empty set");
  if (sorted.size() == 1) return sorted[0];
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(i);
  return sorted[i] * (1.0 - frac) + sorted[i + 1] * frac;
}

struct StatsRow {
  SensorClass sensor;
  std::string metric;  // "luminance" | "variance"
  double mean = 0.0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

struct StatsTable {
  std::vector<StatsRow> rows;  // canonical sensor order, luminance then variance per sensor
};

namespace detail {

inline StatsRow summarize(SensorClass sensor, const std::string& metric,
                          std::vector<double> values) {
  std::sort(values.begin(), values.end());
  StatsRow r;
  r.sensor = sensor;
  r.metric = metric;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(values.size());
  r.min = values.front();
  r.q1 = quantile_sorted(values, 0.25);
  r.median = quantile_sorted(values, 0.50);
  r.q3 = quantile_sorted(values, 0.75);
  r.max = values.back();
  return r;
}

}  // namespace detail

/// Per-sensor distribution of per-image mean luminance and per-image pixel
/// variance, one row per (sensor, metric) for sensors present in the input.
inline StatsTable dataset_stats(const DatasetManifest& manifest) {
  if (manifest.records.empty()) raise(errc::empty_dataset, "manifest has no records");

  std::map<int, std::vector<double>> lum, var;
  for (const auto& rec : manifest.records) {
    const GrayImage img = load_png(rec.path);
    lum[sensor_index(rec.sensor)].push_back(mean_luminance(img));
    var[sensor_index(rec.sensor)].push_back(pixel_variance(img));
  }

  StatsTable table;
  for (SensorClass s : canonical_sensors()) {
    const auto it = lum.find(sensor_index(s));
    if (it == lum.end()) continue;
    table.rows.push_back(detail::summarize(s, "luminance", it->second));
    table.rows.push_back(detail::summarize(s, "variance", var[sensor_index(s)]));
  }
  return table;
}

inline void write_stats_csv(const StatsTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(errc::write_error, "cannot write stats: " + path.string());
  out << "sensor,metric,min,q1,median,q3,max\n";
  char buf[256];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  std::string(sensor_name(r.sensor)).c_str(), r.metric.c_str(), r.min, r.q1,
                  r.median, r.q3, r.max);
    out << buf;
  }
}

inline void write_histogram_csv(const std::array<std::uint64_t, 256>& counts,
                                const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(errc::write_error, "cannot write histogram: " + path.string());
  out << "bin,count\n";
  for (int b = 0; b < 256; ++b) out << b << "," << counts[b] << "\n";
}

}  // namespace veinorigin
