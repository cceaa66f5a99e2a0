#include "geonet/error.hpp"

namespace geonet {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotOrthonormal: return "NotOrthonormal";
    case ErrorCode::TangencyViolated: return "TangencyViolated";
    case ErrorCode::AntipodalPoint: return "AntipodalPoint";
    case ErrorCode::CutLocus: return "CutLocus";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::ConstraintViolated: return "ConstraintViolated";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::DatasetUnavailable: return "DatasetUnavailable";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace geonet
