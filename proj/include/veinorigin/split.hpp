#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "veinorigin/error.hpp"
#include "veinorigin/manifest.hpp"
#include "veinorigin/rng.hpp"

namespace veinorigin {

inline constexpr int kSplitSchemaVersion = 1;

/// Disjoint train/validation/test partition of sample ids.
struct SplitAssignment {
  std::vector<std::string> train_ids, val_ids, test_ids;
  std::uint64_t seed = 0;
  std::array<double, 3> ratios{0.7, 0.1, 0.2};

  std::set<std::string> train_set() const { return {train_ids.begin(), train_ids.end()}; }
  std::set<std::string> val_set() const { return {val_ids.begin(), val_ids.end()}; }
  std::set<std::string> test_set() const { return {test_ids.begin(), test_ids.end()}; }
};

/// One seeded global shuffle over the whole corpus, then
/// floor(r_train*N) / floor(r_val*N) / remainder sizing.
inline SplitAssignment make_splits(const DatasetManifest& manifest,
                                   std::array<double, 3> ratios, std::uint64_t seed) {
  const std::size_t n = manifest.records.size();
  if (n < 3) raise(errc::too_few_samples, "need at least 3 samples, have " + std::to_string(n));
  if (ratios[0] <= 0.0 || ratios[1] < 0.0 || ratios[2] < 0.0 ||
      std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
    raise(errc::invalid_argument, "split ratios must be non-negative and sum to 1");

  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& r : manifest.records) ids.push_back(r.sample_id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    raise(errc::invalid_argument, "manifest has duplicate sample ids");

  Rng rng(derive_seed(seed, 0x5b117u));
  rng.shuffle(ids);

  const std::size_t n_train = static_cast<std::size_t>(ratios[0] * n);
  const std::size_t n_val = static_cast<std::size_t>(ratios[1] * n);

  SplitAssignment split;
  split.seed = seed;
  split.ratios = ratios;
  split.train_ids.assign(ids.begin(), ids.begin() + n_train);
  split.val_ids.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  split.test_ids.assign(ids.begin() + n_train + n_val, ids.end());
  return split;
}

inline SplitAssignment make_splits(const DatasetManifest& manifest, std::uint64_t seed) {
  return make_splits(manifest, {0.7, 0.1, 0.2}, seed);
}

inline nlohmann::json split_to_json(const SplitAssignment& s) {
  nlohmann::json j;
  j["schema_version"] = kSplitSchemaVersion;
  j["seed"] = s.seed;
  j["ratios"] = {s.ratios[0], s.ratios[1], s.ratios[2]};
  j["train_ids"] = s.train_ids;
  j["val_ids"] = s.val_ids;
  j["test_ids"] = s.test_ids;
  return j;
}

inline SplitAssignment split_from_json(const nlohmann::json& j) {
  SplitAssignment s;
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != kSplitSchemaVersion)
    raise(errc::parse_error, "unsupported split schema version");
  s.seed = j.at("seed").get<std::uint64_t>();
  const auto& r = j.at("ratios");
  s.ratios = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
  s.train_ids = j.at("train_ids").get<std::vector<std::string>>();
  s.val_ids = j.at("val_ids").get<std::vector<std::string>>();
  s.test_ids = j.at("test_ids").get<std::vector<std::string>>();
  return s;
}

inline void save_split(const SplitAssignment& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(errc::write_error, "cannot write split: " + path.string());
  out << split_to_json(s).dump(2) << "\n";
}

inline SplitAssignment load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, "cannot read split: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse_error, "bad split JSON: " + std::string(e.what()));
  }
  return split_from_json(j);
}

}  // namespace veinorigin
