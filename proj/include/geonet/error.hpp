#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geonet {

enum class ErrorCode {
  DimensionMismatch,
  NonFinite,
  RankDeficient,
  NoConvergence,
  NotOrthonormal,
  TangencyViolated,
  AntipodalPoint,
  CutLocus,
  ShapeMismatch,
  NonFiniteLoss,
  StaleCache,
  ConstraintViolated,
  InvalidConfig,
  BadMagic,
  TruncatedFile,
  CountMismatch,
  LabelOutOfRange,
  DatasetUnavailable,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind of failure, not the message.
class GeoError : public std::runtime_error {
 public:
  GeoError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace geonet
