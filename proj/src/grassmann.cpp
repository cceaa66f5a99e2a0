#include "geonet/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace geonet::grassmann {

namespace {

void require_same_grassmannian(const Subspace& a, const Subspace& b, const char* where) {
  if (a.n() != b.n() || a.d() != b.d()) {
    throw GeoError(ErrorCode::DimensionMismatch,
                   std::string(where) + ": G(" + std::to_string(a.n()) + "," + std::to_string(a.d()) +
                       ") vs G(" + std::to_string(b.n()) + "," + std::to_string(b.d()) + ")");
  }
}

}  // namespace

Subspace Subspace::from_basis(Matrix basis) {
  if (basis.cols() == 0 || basis.cols() >= basis.rows()) {
    throw GeoError(ErrorCode::DimensionMismatch, "Subspace needs 0 < d < n");
  }
  require_finite(basis, "Subspace");
  const double resid = orthonormality_residual(basis);
  if (resid > kBasisOrthoTol) {
    throw GeoError(ErrorCode::NotOrthonormal, "basis residual " + std::to_string(resid));
  }
  return Subspace(std::move(basis));
}

GrassPole::GrassPole(Subspace subspace) {
  Matrix comp = orthonormal_complement(subspace.basis());
  data_ = std::make_shared<const Data>(Data{std::move(subspace), std::move(comp)});
}

bool GrassPole::same_chart(const GrassPole& other) const noexcept {
  return data_ == other.data_ ||
         (basis() == other.basis() && complement() == other.complement());
}

Subspace subspace_from_span(const Matrix& m) { return Subspace::from_basis(qr_thin(m).q); }

std::vector<double> principal_angles(const Subspace& u1, const Subspace& u2) {
  require_same_grassmannian(u1, u2, "principal_angles");
  const std::size_t d = u1.d();
  const Matrix m = matmul_tn(u1.basis(), u2.basis());
  const std::vector<double> cosines = svd_thin(m).sigma;
  const Matrix resid = u2.basis() - u1.basis() * m;
  const std::vector<double> sines = svd_thin(resid).sigma;

  std::vector<double> angles(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double c = std::clamp(cosines[i], 0.0, 1.0);
    const double s = std::clamp(sines[d - 1 - i], 0.0, 1.0);
    angles[i] = c * c >= 0.5 ? std::asin(s) : std::acos(c);
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

double geodesic_distance(const Subspace& u1, const Subspace& u2) {
  double s = 0.0;
  for (double theta : principal_angles(u1, u2)) s += theta * theta;
  return std::sqrt(s);
}

double max_geodesic_distance(std::size_t d) {
  return std::numbers::pi * std::sqrt(static_cast<double>(d)) / 2.0;
}

GrassTangent grassmann_log(const GrassPole& pole, const Subspace& target) {
  require_same_grassmannian(pole.subspace(), target, "grassmann_log");
  const Matrix& up = pole.basis();
  const Matrix& ut = target.basis();
  const Matrix m = matmul_tn(up, ut);

  Matrix m_inv;
  try {
    m_inv = inverse_via_svd(m, kCutLocusTol);
  } catch (const GeoError& e) {
    if (e.code() != ErrorCode::RankDeficient) throw;
    throw GeoError(ErrorCode::CutLocus, "U_pole^T U_target is singular: target is at the cut locus");
  }

  // B = (I - Up Up^T) Ut (Up^T Ut)^-1 = W diag(tan theta) V^T
  const Matrix b = (ut - up * m) * m_inv;
  const SvdResult svd = svd_thin(b);
  Matrix w_atan = svd.u;
  for (std::size_t r = 0; r < w_atan.rows(); ++r)
    for (std::size_t c = 0; c < w_atan.cols(); ++c) w_atan(r, c) *= std::atan(svd.sigma[c]);
  const Matrix delta = w_atan * svd.vt;
  return GrassTangent{pole, matmul_tn(pole.complement(), delta)};
}

Subspace grassmann_exp(const GrassPole& pole, const GrassTangent& tangent) {
  if (!tangent.pole.same_chart(pole)) {
    throw GeoError(ErrorCode::DimensionMismatch, "tangent belongs to a different pole");
  }
  const std::size_t n = pole.n();
  const std::size_t d = pole.d();
  if (tangent.a.rows() != n - d || tangent.a.cols() != d) {
    throw GeoError(ErrorCode::DimensionMismatch, "tangent coordinates must be (n-d) x d");
  }
  require_finite(tangent.a, "grassmann_exp");
  if (tangent.a.max_abs() == 0.0) return pole.subspace();

  const SvdResult svd = svd_thin(tangent.horizontal());
  const Matrix v = svd.vt.transpose();
  Matrix v_cos = v;
  Matrix w_sin = svd.u;
  for (std::size_t c = 0; c < d; ++c) {
    const double cs = std::cos(svd.sigma[c]);
    const double sn = std::sin(svd.sigma[c]);
    for (std::size_t r = 0; r < d; ++r) v_cos(r, c) *= cs;
    for (std::size_t r = 0; r < n; ++r) w_sin(r, c) *= sn;
  }
  const Matrix y = pole.basis() * v_cos * svd.vt + w_sin * svd.vt;
  return subspace_from_span(y);
}

FrechetResult frechet_mean(std::span<const Subspace> samples, int max_iter, double tol) {
  if (samples.empty()) throw GeoError(ErrorCode::DimensionMismatch, "frechet_mean needs at least one sample");
  for (const Subspace& s : samples) require_same_grassmannian(samples[0], s, "frechet_mean");

  const double inv_count = 1.0 / static_cast<double>(samples.size());
  auto mean_log = [&](const GrassPole& mu) {
    Matrix acc(mu.n() - mu.d(), mu.d());
    for (const Subspace& s : samples) acc += grassmann_log(mu, s).a;
    acc *= inv_count;
    return acc;
  };

  GrassPole mu(samples[0]);
  for (int it = 0;; ++it) {
    Matrix step = mean_log(mu);
    const double residual = step.frobenius();
    if (residual < tol) return {mu, it, residual};
    if (it >= max_iter) {
      if (residual > kFrechetFailResidual) {
        throw GeoError(ErrorCode::NoConvergence,
                       "Frechet mean residual " + std::to_string(residual) + " after " +
                           std::to_string(max_iter) + " iterations");
      }
      return {mu, it, residual};
    }
    mu = GrassPole(grassmann_exp(mu, GrassTangent{mu, std::move(step)}));
  }
}

Matrix procrustes_align(const Subspace& r, const Subspace& reference) {
  require_same_grassmannian(r, reference, "procrustes_align");
  const SvdResult svd = svd_thin(matmul_tn(r.basis(), reference.basis()));
  return r.basis() * (svd.u * svd.vt);
}

Matrix projection_matrix(const Subspace& u) { return matmul_nt(u.basis(), u.basis()); }

}  // namespace geonet::grassmann
