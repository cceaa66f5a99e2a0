#include "geonet/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "geonet/vector_ops.hpp"

namespace geonet::sphere {

namespace {

void require_finite(std::span<const double> v, const char* where) {
  for (double x : v) {
    if (!std::isfinite(x)) throw GeoError(ErrorCode::NonFinite, std::string(where) + ": non-finite entry");
  }
}

}  // namespace

UnitVector UnitVector::from_coords(std::vector<double> coords) {
  if (coords.empty()) throw GeoError(ErrorCode::DimensionMismatch, "UnitVector needs dim > 0");
  require_finite(coords, "UnitVector");
  const double n = norm2(coords);
  if (std::abs(n - 1.0) > kUnitNormTol) {
    throw GeoError(ErrorCode::NotOrthonormal, "UnitVector norm " + std::to_string(n));
  }
  return UnitVector(std::move(coords));
}

UnitVector UnitVector::normalize(std::span<const double> v) {
  if (v.empty()) throw GeoError(ErrorCode::DimensionMismatch, "UnitVector needs dim > 0");
  require_finite(v, "UnitVector::normalize");
  const double n = norm2(v);
  if (n == 0.0) throw GeoError(ErrorCode::RankDeficient, "cannot normalize the zero vector");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return UnitVector(std::move(out));
}

UnitVector UnitVector::basis(std::size_t dim, std::size_t index) {
  if (index >= dim) throw GeoError(ErrorCode::DimensionMismatch, "basis index out of range");
  std::vector<double> e(dim, 0.0);
  e[index] = 1.0;
  return UnitVector(std::move(e));
}

double SphereTangent::norm() const { return norm2(coords); }

double SphereTangent::tangency_residual() const { return std::abs(dot(pole.coords(), coords)); }

ProbabilityDistribution ProbabilityDistribution::from_probs(std::vector<double> probs) {
  if (probs.empty()) throw GeoError(ErrorCode::DimensionMismatch, "empty distribution");
  require_finite(probs, "ProbabilityDistribution");
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw GeoError(ErrorCode::InvalidConfig, "negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kPdfSumTol) {
    throw GeoError(ErrorCode::InvalidConfig, "probabilities sum to " + std::to_string(sum));
  }
  return ProbabilityDistribution(std::move(probs));
}

ProbabilityDistribution ProbabilityDistribution::uniform(std::size_t classes) {
  if (classes == 0) throw GeoError(ErrorCode::DimensionMismatch, "empty distribution");
  return ProbabilityDistribution(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

ProbabilityDistribution ProbabilityDistribution::one_hot(std::size_t classes, std::size_t label) {
  if (label >= classes) throw GeoError(ErrorCode::LabelOutOfRange, "label " + std::to_string(label));
  std::vector<double> p(classes, 0.0);
  p[label] = 1.0;
  return ProbabilityDistribution(std::move(p));
}

UnitVector sqrt_param(const ProbabilityDistribution& p) {
  std::vector<double> c(p.size());
  std::transform(p.probs().begin(), p.probs().end(), c.begin(), [](double x) { return std::sqrt(x); });
  return UnitVector::from_coords(std::move(c));
}

ProbabilityDistribution sphere_to_pdf(const UnitVector& x) {
  std::vector<double> p(x.dim());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = x[i] * x[i];
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return ProbabilityDistribution::from_probs(std::move(p));
}

double sphere_distance(const UnitVector& x, const UnitVector& y) {
  require_same_length(x.dim(), y.dim(), "sphere_distance");
  double diff = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    const double dm = x[i] - y[i];
    const double dp = x[i] + y[i];
    diff += dm * dm;
    sum += dp * dp;
  }
  return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
}

UnitVector sphere_exp(const UnitVector& pole, const SphereTangent& xi) {
  require_same_length(pole.dim(), xi.coords.size(), "sphere_exp");
  if (xi.pole != pole) {
    throw GeoError(ErrorCode::TangencyViolated, "tangent is attached to a different pole");
  }
  require_finite(xi.coords, "sphere_exp");
  const double resid = xi.tangency_residual();
  if (resid > kExpTangencyGuard) {
    throw GeoError(ErrorCode::TangencyViolated, "|pole^T xi| = " + std::to_string(resid));
  }
  const double t = xi.norm();
  if (t < kSmallAngle) return pole;
  const double c = std::cos(t);
  const double s = std::sin(t) / t;
  std::vector<double> out(pole.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * pole[i] + s * xi.coords[i];
  return UnitVector::normalize(out);
}

SphereTangent project_to_tangent(const UnitVector& pole, std::span<const double> v) {
  require_same_length(pole.dim(), v.size(), "project_to_tangent");
  require_finite(v, "project_to_tangent");
  const double along = dot(pole.coords(), v);
  std::vector<double> out(v.begin(), v.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= along * pole[i];
  return SphereTangent{pole, std::move(out)};
}

SphereTangent sphere_log(const UnitVector& pole, const UnitVector& y) {
  require_same_length(pole.dim(), y.dim(), "sphere_log");
  const double dist = sphere_distance(pole, y);
  if (dist >= std::numbers::pi - kCutLocusMargin) {
    throw GeoError(ErrorCode::AntipodalPoint, "distance " + std::to_string(dist) + " is at the cut locus");
  }
  if (dist < kSmallAngle) return SphereTangent{pole, std::vector<double>(pole.dim(), 0.0)};

  // P_x(y - x) = P_x(y); the second pass removes the rounding left by the first.
  SphereTangent dir = project_to_tangent(pole, y.coords());
  dir = project_to_tangent(pole, dir.coords);
  const double n = dir.norm();
  for (double& v : dir.coords) v *= dist / n;
  return dir;
}

UnitVector uniform_pole(std::size_t classes) {
  return sqrt_param(ProbabilityDistribution::uniform(classes));
}

}  // namespace geonet::sphere
