#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "veinorigin/error.hpp"

namespace veinorigin {

/// The eight finger-vein sensor classes in canonical order. The index is
/// fixed and shared by every table, report and score matrix.
enum class SensorClass : int {
  SDUMLA = 0,
  HKPU_FV = 1,
  IDIAP = 2,
  MMCBNU = 3,
  PALMAR = 4,
  FV_USM = 5,
  THU_FVFDT = 6,
  UTFVP = 7,
};

inline constexpr int kNumSensors = 8;

inline constexpr std::array<SensorClass, kNumSensors> canonical_sensors() {
  return {SensorClass::SDUMLA, SensorClass::HKPU_FV,   SensorClass::IDIAP,
          SensorClass::MMCBNU, SensorClass::PALMAR,    SensorClass::FV_USM,
          SensorClass::THU_FVFDT, SensorClass::UTFVP};
}

inline constexpr int sensor_index(SensorClass s) { return static_cast<int>(s); }

inline std::string_view sensor_name(SensorClass s) {
  switch (s) {
    case SensorClass::SDUMLA:    return "SDUMLA";
    case SensorClass::HKPU_FV:   return "HKPU_FV";
    case SensorClass::IDIAP:     return "IDIAP";
    case SensorClass::MMCBNU:    return "MMCBNU";
    case SensorClass::PALMAR:    return "PALMAR";
    case SensorClass::FV_USM:    return "FV_USM";
    case SensorClass::THU_FVFDT: return "THU_FVFDT";
    case SensorClass::UTFVP:     return "UTFVP";
  }
  return "?";
}

inline std::optional<SensorClass> try_parse_sensor(std::string_view name) {
  for (SensorClass s : canonical_sensors())
    if (sensor_name(s) == name) return s;
  return std::nullopt;
}

inline SensorClass parse_sensor(std::string_view name) {
  if (auto s = try_parse_sensor(name)) return *s;
  raise(errc::invalid_argument, "unknown sensor class: " + std::string(name));
}

inline SensorClass sensor_from_index(int idx) {
  if (idx < 0 || idx >= kNumSensors)
    raise(errc::invalid_argument, "sensor index out of range: " + std::to_string(idx));
  return static_cast<SensorClass>(idx);
}

}  // namespace veinorigin
