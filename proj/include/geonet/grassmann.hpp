#pragma once

#include <memory>
#include <span>
#include <vector>

#include "geonet/numkernel.hpp"

namespace geonet::grassmann {

inline constexpr double kBasisOrthoTol = 1e-8;
/// Subspaces closer than this are treated as the same point of G(n, d).
inline constexpr double kEqualityTol = 1e-7;
/// Smallest admissible singular value of U_pole^T U_target in the log map.
inline constexpr double kCutLocusTol = 1e-10;
inline constexpr int kFrechetMaxIter = 200;
inline constexpr double kFrechetTol = 1e-9;
/// A Frechet iteration that stops on max_iter above this residual is a failure.
inline constexpr double kFrechetFailResidual = 1e-6;

/// A point of G(n, d), stored as an n x d orthonormal basis of the subspace.
/// The basis is one representative of the equivalence class {U Q : Q orthogonal}.
class Subspace {
 public:
  /// Wraps an n x d basis with 0 < d < n and |U^T U - I|_max <= kBasisOrthoTol.
  static Subspace from_basis(Matrix basis);

  std::size_t n() const noexcept { return basis_.rows(); }
  std::size_t d() const noexcept { return basis_.cols(); }
  const Matrix& basis() const noexcept { return basis_; }

 private:
  explicit Subspace(Matrix basis) : basis_(std::move(basis)) {}
  Matrix basis_;
};

/// Base point of a tangent chart: the subspace plus a frozen orthonormal basis
/// of its complement. Tangent coordinates are only meaningful relative to that
/// complement, so it is computed once and shared by every copy of the pole.
class GrassPole {
 public:
  explicit GrassPole(Subspace subspace);

  const Subspace& subspace() const noexcept { return data_->subspace; }
  const Matrix& basis() const noexcept { return data_->subspace.basis(); }
  /// n x (n - d)
  const Matrix& complement() const noexcept { return data_->complement; }
  std::size_t n() const noexcept { return data_->subspace.n(); }
  std::size_t d() const noexcept { return data_->subspace.d(); }

  /// Same chart: identical basis and complement.
  bool same_chart(const GrassPole& other) const noexcept;

 private:
  struct Data {
    Subspace subspace;
    Matrix complement;
  };
  std::shared_ptr<const Data> data_;
};

/// Tangent vector at `pole` in complement coordinates: the horizontal lift is
/// complement * a, an n x d matrix orthogonal to the pole's basis.
struct GrassTangent {
  GrassPole pole;
  Matrix a;  // (n - d) x d

  Matrix horizontal() const { return pole.complement() * a; }
  double norm() const noexcept { return a.frobenius(); }
};

/// Orthonormalizes the columns of an n x d spanning set (thin QR).
Subspace subspace_from_span(const Matrix& m);

/// Principal angles in nondecreasing order, each in [0, pi/2].
///
/// Angles below pi/4 are taken from the singular values of (I - U1 U1^T) U2
/// (their sines) and the rest from the singular values of U1^T U2 (their
/// cosines), so both tiny and nearly orthogonal angles keep full absolute
/// accuracy.
std::vector<double> principal_angles(const Subspace& u1, const Subspace& u2);

/// sqrt(sum theta_i^2), at most pi * sqrt(d) / 2.
double geodesic_distance(const Subspace& u1, const Subspace& u2);

GrassTangent grassmann_log(const GrassPole& pole, const Subspace& target);
Subspace grassmann_exp(const GrassPole& pole, const GrassTangent& tangent);

struct FrechetResult {
  GrassPole mean;
  int iterations = 0;
  /// Frobenius norm of the mean log at the returned point.
  double residual = 0.0;
};

/// Karcher iteration with unit step, starting from samples[0].
FrechetResult frechet_mean(std::span<const Subspace> samples, int max_iter = kFrechetMaxIter,
                           double tol = kFrechetTol);

/// r.basis * Q* with Q* the orthogonal d x d matrix minimizing
/// |reference.basis - r.basis Q|_F.
Matrix procrustes_align(const Subspace& r, const Subspace& reference);

/// U U^T, identical for every basis of the same subspace.
Matrix projection_matrix(const Subspace& u);

/// Upper bound pi * sqrt(d) / 2 on geodesic_distance in G(n, d).
double max_geodesic_distance(std::size_t d);

}  // namespace geonet::grassmann
