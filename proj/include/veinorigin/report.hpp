#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "veinorigin/error.hpp"
#include "veinorigin/metrics.hpp"
#include "veinorigin/sensor.hpp"

namespace veinorigin {

inline constexpr int kReportSchemaVersion = 1;

struct EvalReport {
  std::array<double, kNumSensors> per_class_auc{};  // NaN where undefined
  double macro_auc = 0.0;
  double macro_precision = 0.0;
  ConfusionMatrix confusion{kNumSensors};
  std::string sample_aggregation = "patch";  // patch | sample_vote
  struct Meta {
    std::string arch;
    std::uint64_t seed = 0;
    std::string data_kind;  // raw | roi
  } metadata;
};

/// One AUC row per sensor in canonical order (Tables IV/V layout).
struct PerSensorReport {
  std::array<double, kNumSensors> auc{};
};

inline EvalReport make_eval_report(const ScoreMatrix& sm, const std::string& aggregation,
                                   const std::string& arch, std::uint64_t seed,
                                   const std::string& data_kind) {
  if (sm.num_classes != kNumSensors)
    raise(errc::invalid_argument, "eval report needs 8-class scores");
  EvalReport rep;
  const AucResult auc = auc_ovr(sm);
  for (int c = 0; c < kNumSensors; ++c) rep.per_class_auc[c] = auc.per_class[c];
  rep.macro_auc = auc.macro;
  rep.confusion = confusion(sm);
  rep.macro_precision = precision_macro(rep.confusion);
  rep.sample_aggregation = aggregation;
  rep.metadata.arch = arch;
  rep.metadata.seed = seed;
  rep.metadata.data_kind = data_kind;
  return rep;
}

inline PerSensorReport per_sensor_report(const ScoreMatrix& sm) {
  if (sm.num_classes != kNumSensors)
    raise(errc::invalid_argument, "per-sensor report needs 8-class scores");
  const AucResult auc = auc_ovr(sm);
  PerSensorReport rep;
  for (int c = 0; c < kNumSensors; ++c) rep.auc[c] = auc.per_class[c];
  return rep;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  nlohmann::json auc = nlohmann::json::array();
  for (double v : r.per_class_auc) {
    if (std::isnan(v))
      auc.push_back(nullptr);
    else
      auc.push_back(v);
  }
  j["per_class_auc"] = auc;
  j["macro_auc"] = r.macro_auc;
  j["macro_precision"] = r.macro_precision;
  nlohmann::json conf = nlohmann::json::array();
  for (int t = 0; t < r.confusion.num_classes; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (int p = 0; p < r.confusion.num_classes; ++p) row.push_back(r.confusion.at(t, p));
    conf.push_back(row);
  }
  j["confusion"] = conf;
  j["sample_aggregation"] = r.sample_aggregation;
  j["metadata"] = {{"arch", r.metadata.arch},
                   {"seed", r.metadata.seed},
                   {"data_kind", r.metadata.data_kind}};
  return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != kReportSchemaVersion)
    raise(errc::parse_error, "unsupported report schema version");
  const auto& auc = j.at("per_class_auc");
  if (auc.size() != kNumSensors) raise(errc::parse_error, "per_class_auc must have 8 entries");
  for (int c = 0; c < kNumSensors; ++c)
    r.per_class_auc[c] =
        auc[c].is_null() ? std::numeric_limits<double>::quiet_NaN() : auc[c].get<double>();
  r.macro_auc = j.at("macro_auc").get<double>();
  r.macro_precision = j.at("macro_precision").get<double>();
  const auto& conf = j.at("confusion");
  for (int t = 0; t < kNumSensors; ++t)
    for (int p = 0; p < kNumSensors; ++p)
      r.confusion.at(t, p) = conf.at(t).at(p).get<std::int64_t>();
  r.sample_aggregation = j.at("sample_aggregation").get<std::string>();
  const auto& meta = j.at("metadata");
  r.metadata.arch = meta.at("arch").get<std::string>();
  r.metadata.seed = meta.at("seed").get<std::uint64_t>();
  r.metadata.data_kind = meta.at("data_kind").get<std::string>();
  return r;
}

inline void save_report(const EvalReport& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(errc::write_error, "cannot write report: " + path.string());
  out << report_to_json(r).dump(2) << "\n";
  if (!out) raise(errc::write_error, "short write: " + path.string());
}

inline EvalReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, "cannot read report: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse_error, "bad report JSON: " + std::string(e.what()));
  }
  return report_from_json(j);
}

inline nlohmann::json per_sensor_to_json(const PerSensorReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (int c = 0; c < kNumSensors; ++c) {
    rows.push_back({{"sensor", std::string(sensor_name(sensor_from_index(c)))},
                    {"auc", std::isnan(r.auc[c]) ? nlohmann::json(nullptr)
                                                 : nlohmann::json(r.auc[c])}});
  }
  return nlohmann::json{{"schema_version", kReportSchemaVersion}, {"rows", rows}};
}

inline PerSensorReport per_sensor_from_json(const nlohmann::json& j) {
  PerSensorReport r;
  const auto& rows = j.at("rows");
  if (rows.size() != kNumSensors) raise(errc::parse_error, "per-sensor report must have 8 rows");
  for (int c = 0; c < kNumSensors; ++c) {
    if (rows[c].at("sensor").get<std::string>() != sensor_name(sensor_from_index(c)))
      raise(errc::parse_error, "per-sensor rows out of canonical order");
    const auto& v = rows[c].at("auc");
    r.auc[c] = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  }
  return r;
}

/// CSV rows display 4 decimals; full precision lives in the JSON form.
inline void save_per_sensor_csv(const PerSensorReport& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(errc::write_error, "cannot write per-sensor report: " + path.string());
  out << "sensor,auc\n";
  char buf[64];
  for (int c = 0; c < kNumSensors; ++c) {
    if (std::isnan(r.auc[c])) {
      out << sensor_name(sensor_from_index(c)) << ",undefined\n";
    } else {
      std::snprintf(buf, sizeof(buf), "%s,%.4f\n",
                    std::string(sensor_name(sensor_from_index(c))).c_str(), r.auc[c]);
      out << buf;
    }
  }
}

inline void save_per_sensor_json(const PerSensorReport& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(errc::write_error, "cannot write per-sensor report: " + path.string());
  out << per_sensor_to_json(r).dump(2) << "\n";
}

/// ROC polylines for all defined classes: `sensor,fpr,tpr` rows in canonical
/// order; rendering is left to external tooling.
inline void save_roc_points_csv(const ScoreMatrix& sm, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(errc::write_error, "cannot write roc points: " + path.string());
  out << "sensor,fpr,tpr\n";
  char buf[96];
  for (int c = 0; c < sm.num_classes; ++c) {
    std::vector<RocPoint> pts;
    try {
      pts = roc_points(sm, c);
    } catch (const Error&) {
      continue;  // class undefined on this split
    }
    const std::string name =
        sm.num_classes == kNumSensors ? std::string(sensor_name(sensor_from_index(c)))
                                      : ("class" + std::to_string(c));
    for (const auto& p : pts) {
      std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g\n", name.c_str(), p.fpr, p.tpr);
      out << buf;
    }
  }
}

inline std::string format_auc(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.5f", v);
  return buf;
}

inline std::string format_precision(double v) {
  if (v == 1.0) return "1.0";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

/// Aligned AUC-ROC / Precision summary matching the result-table display
/// convention (AUC to five decimals).
inline std::string print_summary(const EvalReport& r) {
  const std::string arch = r.metadata.arch.empty() ? "(unknown)" : r.metadata.arch;
  const std::string kind = r.metadata.data_kind.empty() ? "(unknown)" : r.metadata.data_kind;
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %12s %12s   (data: %s, aggregation: %s)\n", "Model",
                "AUC-ROC", "Precision", kind.c_str(), r.sample_aggregation.c_str());
  out += buf;
  out += std::string(56, '-') + "\n";
  std::snprintf(buf, sizeof(buf), "%-10s %12s %12s\n", arch.c_str(),
                format_auc(r.macro_auc).c_str(), format_precision(r.macro_precision).c_str());
  out += buf;
  return out;
}

}  // namespace veinorigin
