#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "veinorigin/error.hpp"
#include "veinorigin/png_io.hpp"
#include "veinorigin/sensor.hpp"

namespace veinorigin {

inline constexpr int kManifestSchemaVersion = 1;

enum class SampleKind { raw, roi };

inline std::string_view kind_name(SampleKind k) { return k == SampleKind::raw ? "raw" : "roi"; }

inline SampleKind parse_kind(std::string_view s) {
  if (s == "raw") return SampleKind::raw;
  if (s == "roi") return SampleKind::roi;
  raise(errc::invalid_argument, "unknown sample kind: " + std::string(s));
}

struct SampleRecord {
  std::string sample_id;
  SensorClass sensor = SensorClass::SDUMLA;
  std::string path;
  SampleKind kind = SampleKind::raw;
  int width = 0;
  int height = 0;

  bool operator==(const SampleRecord&) const = default;
};

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

struct DatasetManifest {
  std::vector<SampleRecord> records;
  std::optional<std::uint64_t> created_with_seed;

  /// FNV-1a digest over the canonical serialization of the record list.
  std::uint64_t checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& r : records) {
      std::string line = r.sample_id + "|" + std::string(sensor_name(r.sensor)) + "|" + r.path +
                         "|" + std::string(kind_name(r.kind)) + "|" + std::to_string(r.width) +
                         "x" + std::to_string(r.height) + "\n";
      h = fnv1a64(line, h);
    }
    return h;
  }

  bool operator==(const DatasetManifest& o) const {
    return records == o.records && created_with_seed == o.created_with_seed;
  }
};

struct ScanIssue {
  std::string path;
  std::string reason;
};

struct ScanResult {
  DatasetManifest manifest;
  std::vector<ScanIssue> skipped;  // unreadable or non-conforming files
};

/// Scans a directory for grayscale PNG samples of one sensor. Ordering is
/// lexicographic by filename, so repeated scans give identical manifests.
inline ScanResult scan_directory(const std::filesystem::path& root, SensorClass sensor,
                                 SampleKind kind) {
  namespace fs = std::filesystem;
  if (!fs::exists(root) || !fs::is_directory(root))
    raise(errc::io_error, "not a directory: " + root.string());

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  ScanResult out;
  for (const auto& f : files) {
    try {
      GrayImage img = load_png(f);
      SampleRecord r;
      r.sample_id = std::string(sensor_name(sensor)) + "/" + f.stem().string();
      r.sensor = sensor;
      r.path = f.string();
      r.kind = kind;
      r.width = img.width;
      r.height = img.height;
      out.manifest.records.push_back(std::move(r));
    } catch (const Error& e) {
      out.skipped.push_back({f.string(), e.what()});
    }
  }
  if (out.manifest.records.empty())
    raise(errc::empty_dataset, "no readable grayscale PNG samples in " + root.string());
  return out;
}

struct ValidationIssue {
  enum class Kind { duplicate_id, missing_file, bad_dimensions };
  Kind kind;
  std::string sample_id;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool valid = true;
};

/// Reports duplicate ids, missing files and dimension anomalies. Problems are
/// reported, never thrown.
inline ValidationReport validate_manifest(const DatasetManifest& m) {
  ValidationReport rep;
  std::set<std::string> seen;
  for (const auto& r : m.records) {
    if (!seen.insert(r.sample_id).second)
      rep.issues.push_back({ValidationIssue::Kind::duplicate_id, r.sample_id, "duplicate sample_id"});
    if (!std::filesystem::exists(r.path))
      rep.issues.push_back({ValidationIssue::Kind::missing_file, r.sample_id, r.path});
    if (r.width < 1 || r.height < 1)
      rep.issues.push_back({ValidationIssue::Kind::bad_dimensions, r.sample_id,
                            std::to_string(r.width) + "x" + std::to_string(r.height)});
  }
  rep.valid = rep.issues.empty();
  return rep;
}

/// Merges manifests, keeping records grouped in canonical class order.
/// Record count equals the sum of the inputs; id collisions are an error.
inline DatasetManifest merge_manifests(const std::vector<DatasetManifest>& inputs) {
  DatasetManifest merged;
  std::set<std::string> ids;
  for (const auto& m : inputs) {
    for (const auto& r : m.records) {
      if (!ids.insert(r.sample_id).second)
        raise(errc::merge_conflict, "duplicate sample_id across manifests: " + r.sample_id);
      merged.records.push_back(r);
    }
  }
  std::stable_sort(merged.records.begin(), merged.records.end(),
                   [](const SampleRecord& a, const SampleRecord& b) {
                     return sensor_index(a.sensor) < sensor_index(b.sensor);
                   });
  return merged;
}

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json j;
  j["schema_version"] = kManifestSchemaVersion;
  nlohmann::json order = nlohmann::json::array();
  for (SensorClass s : canonical_sensors()) order.push_back(std::string(sensor_name(s)));
  j["sensor_order"] = order;
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : m.records) {
    recs.push_back({{"sample_id", r.sample_id},
                    {"sensor", std::string(sensor_name(r.sensor))},
                    {"path", r.path},
                    {"kind", std::string(kind_name(r.kind))},
                    {"width", r.width},
                    {"height", r.height}});
  }
  j["records"] = recs;
  if (m.created_with_seed)
    j["seed"] = *m.created_with_seed;
  else
    j["seed"] = nullptr;
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(m.checksum()));
  j["checksum"] = buf;
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != kManifestSchemaVersion)
    raise(errc::parse_error, "unsupported manifest schema version");
  for (const auto& rj : j.at("records")) {
    SampleRecord r;
    r.sample_id = rj.at("sample_id").get<std::string>();
    r.sensor = parse_sensor(rj.at("sensor").get<std::string>());
    r.path = rj.at("path").get<std::string>();
    r.kind = parse_kind(rj.at("kind").get<std::string>());
    r.width = rj.at("width").get<int>();
    r.height = rj.at("height").get<int>();
    m.records.push_back(std::move(r));
  }
  if (j.contains("seed") && !j["seed"].is_null()) m.created_with_seed = j["seed"].get<std::uint64_t>();
  if (j.contains("checksum")) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(m.checksum()));
    if (j["checksum"].get<std::string>() != buf)
      raise(errc::checksum_mismatch, "manifest checksum does not match record list");
  }
  return m;
}

inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(errc::write_error, "cannot write manifest: " + path.string());
  out << manifest_to_json(m).dump(2) << "\n";
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, "cannot read manifest: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse_error, "bad manifest JSON: " + std::string(e.what()));
  }
  return manifest_from_json(j);
}

}  // namespace veinorigin
