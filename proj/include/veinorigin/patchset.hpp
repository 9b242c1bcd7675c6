#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "veinorigin/error.hpp"
#include "veinorigin/manifest.hpp"
#include "veinorigin/patches.hpp"
#include "veinorigin/png_io.hpp"
#include "veinorigin/sensor.hpp"
#include "veinorigin/tensor.hpp"

namespace veinorigin {

inline constexpr int kPatchSetSchemaVersion = 1;

struct PatchRecord {
  std::string patch_id;
  std::string source_id;
  SensorClass sensor = SensorClass::SDUMLA;
  std::string path;
  SampleKind kind = SampleKind::raw;
  int x = 0, y = 0;
};

/// Manifest of extracted patches; labels and split membership are inherited
/// from the source sample.
struct PatchSet {
  int patch_size = kPatchSize;
  std::vector<PatchRecord> patches;
};

inline nlohmann::json patchset_to_json(const PatchSet& ps) {
  nlohmann::json j;
  j["schema_version"] = kPatchSetSchemaVersion;
  j["patch_size"] = ps.patch_size;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : ps.patches) {
    arr.push_back({{"patch_id", p.patch_id},
                   {"source_id", p.source_id},
                   {"sensor", std::string(sensor_name(p.sensor))},
                   {"path", p.path},
                   {"kind", std::string(kind_name(p.kind))},
                   {"x", p.x},
                   {"y", p.y}});
  }
  j["patches"] = arr;
  return j;
}

inline PatchSet patchset_from_json(const nlohmann::json& j) {
  PatchSet ps;
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != kPatchSetSchemaVersion)
    raise(errc::parse_error, "unsupported patch set schema version");
  ps.patch_size = j.at("patch_size").get<int>();
  for (const auto& pj : j.at("patches")) {
    PatchRecord p;
    p.patch_id = pj.at("patch_id").get<std::string>();
    p.source_id = pj.at("source_id").get<std::string>();
    p.sensor = parse_sensor(pj.at("sensor").get<std::string>());
    p.path = pj.at("path").get<std::string>();
    p.kind = parse_kind(pj.at("kind").get<std::string>());
    p.x = pj.at("x").get<int>();
    p.y = pj.at("y").get<int>();
    ps.patches.push_back(std::move(p));
  }
  return ps;
}

inline void save_patchset(const PatchSet& ps, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(errc::write_error, "cannot write patch set: " + path.string());
  out << patchset_to_json(ps).dump(2) << "\n";
}

inline PatchSet load_patchset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, "cannot read patch set: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse_error, "bad patch set JSON: " + std::string(e.what()));
  }
  return patchset_from_json(j);
}

/// In-memory patch batch: pixels normalized to [0, 1], labels are canonical
/// sensor indices, source ids kept for leakage checks and sample-level
/// aggregation.
template <typename T>
struct LabeledPatches {
  Tensor<T> x;
  std::vector<int> labels;
  std::vector<std::string> source_ids;

  int count() const { return x.n; }
};

/// Loads the subset of a patch set whose source samples belong to `members`.
template <typename T>
LabeledPatches<T> load_labeled_patches(const PatchSet& ps, const std::set<std::string>& members) {
  std::vector<const PatchRecord*> selected;
  for (const auto& p : ps.patches)
    if (members.count(p.source_id)) selected.push_back(&p);

  LabeledPatches<T> out;
  out.x = Tensor<T>(static_cast<int>(selected.size()), ps.patch_size, ps.patch_size, 1);
  out.labels.reserve(selected.size());
  out.source_ids.reserve(selected.size());
  const T inv = T(1) / T(255);
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const GrayImage img = load_png(selected[i]->path);
    if (img.width != ps.patch_size || img.height != ps.patch_size)
      raise(errc::shape_error, "patch file size mismatch: " + selected[i]->path);
    T* dst = out.x.data.data() + i * static_cast<std::size_t>(ps.patch_size) * ps.patch_size;
    for (std::size_t p = 0; p < img.pixels.size(); ++p) dst[p] = img.pixels[p] * inv;
    out.labels.push_back(sensor_index(selected[i]->sensor));
    out.source_ids.push_back(selected[i]->source_id);
  }
  return out;
}

}  // namespace veinorigin
