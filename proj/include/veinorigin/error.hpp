#pragma once

#include <stdexcept>
#include <string>

namespace veinorigin {

enum class errc {
  empty_dataset,
  merge_conflict,
  size_too_small,
  tile_error,
  roi_not_found,
  too_small,
  unknown_architecture,
  shape_error,
  too_few_samples,
  divergence,
  checksum_mismatch,
  all_classes_undefined,
  undefined_metric,
  write_error,
  parse_error,
  invalid_argument,
  io_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::empty_dataset:         return "EmptyDataset";
    case errc::merge_conflict:        return "MergeConflict";
    case errc::size_too_small:        return "SizeTooSmall";
    case errc::tile_error:            return "TileError";
    case errc::roi_not_found:         return "RoiNotFound";
    case errc::too_small:             return "TooSmall";
    case errc::unknown_architecture:  return "UnknownArchitecture";
    case errc::shape_error:           return "ShapeError";
    case errc::too_few_samples:       return "TooFewSamples";
    case errc::divergence:            return "DivergenceError";
    case errc::checksum_mismatch:     return "ChecksumError";
    case errc::all_classes_undefined: return "AllClassesUndefined";
    case errc::undefined_metric:      return "Undefined";
    case errc::write_error:           return "WriteError";
    case errc::parse_error:           return "ParseError";
    case errc::invalid_argument:      return "InvalidArgument";
    case errc::io_error:              return "IoError";
  }
  return "Error";
}

/// Library-wide exception carrying a stable error code.
class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) { throw Error(code, what); }

}  // namespace veinorigin
