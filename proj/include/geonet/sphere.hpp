#pragma once

#include <span>
#include <vector>

#include "geonet/error.hpp"

namespace geonet::sphere {

inline constexpr double kUnitNormTol = 1e-12;
inline constexpr double kTangencyTol = 1e-10;
/// sphere_exp rejects tangents whose component along the pole exceeds this.
inline constexpr double kExpTangencyGuard = 1e-8;
inline constexpr double kPdfSumTol = 1e-12;
inline constexpr double kSmallAngle = 1e-14;
/// Distance from the antipode below which the log map refuses to answer.
inline constexpr double kCutLocusMargin = 1e-6;

/// Point on the unit sphere S^{C-1} embedded in R^C.
class UnitVector {
 public:
  /// Accepts coordinates whose norm is within kUnitNormTol of 1.
  static UnitVector from_coords(std::vector<double> coords);
  /// Divides an arbitrary nonzero vector by its norm.
  static UnitVector normalize(std::span<const double> v);
  /// Standard basis vector e_index in R^dim.
  static UnitVector basis(std::size_t dim, std::size_t index);

  std::size_t dim() const noexcept { return coords_.size(); }
  std::span<const double> coords() const noexcept { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }

  friend bool operator==(const UnitVector&, const UnitVector&) = default;

 private:
  explicit UnitVector(std::vector<double> coords) : coords_(std::move(coords)) {}
  std::vector<double> coords_;
};

/// Tangent vector at `pole`. Tangency is checked by the operations that
/// consume it, not on construction.
struct SphereTangent {
  UnitVector pole;
  std::vector<double> coords;

  double norm() const;
  /// |pole^T coords|
  double tangency_residual() const;
};

class ProbabilityDistribution {
 public:
  /// Nonnegative entries summing to 1 within kPdfSumTol.
  static ProbabilityDistribution from_probs(std::vector<double> probs);
  static ProbabilityDistribution uniform(std::size_t classes);
  static ProbabilityDistribution one_hot(std::size_t classes, std::size_t label);

  std::size_t size() const noexcept { return probs_.size(); }
  std::span<const double> probs() const noexcept { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }

 private:
  explicit ProbabilityDistribution(std::vector<double> probs) : probs_(std::move(probs)) {}
  std::vector<double> probs_;
};

/// Elementwise square root: maps the simplex onto the nonnegative orthant.
UnitVector sqrt_param(const ProbabilityDistribution& p);

/// Elementwise square; the result is renormalized to sum exactly to one.
ProbabilityDistribution sphere_to_pdf(const UnitVector& x);

/// Great-circle distance in [0, pi].
///
/// Evaluated as 2*atan2(|x - y|, |x + y|), which equals acos(<x, y>) on the
/// sphere but keeps full accuracy for nearly equal or nearly antipodal
/// points, where acos of the rounded inner product loses about half of the
/// significant digits.
double sphere_distance(const UnitVector& x, const UnitVector& y);

UnitVector sphere_exp(const UnitVector& pole, const SphereTangent& xi);
SphereTangent sphere_log(const UnitVector& pole, const UnitVector& y);
SphereTangent project_to_tangent(const UnitVector& pole, std::span<const double> v);

/// sqrt_param(uniform(C)): the pole used for classification.
UnitVector uniform_pole(std::size_t classes);

}  // namespace geonet::sphere
