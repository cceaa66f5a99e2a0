#pragma once

#include <cmath>
#include <span>
#include <string>

#include "geonet/error.hpp"

namespace geonet {

inline void require_same_length(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    throw GeoError(ErrorCode::DimensionMismatch,
                   std::string(where) + ": length " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

}  // namespace geonet
