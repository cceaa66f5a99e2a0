#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "geonet/numkernel.hpp"

using namespace geonet;

namespace {

Matrix random_matrix(std::size_t m, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix a(m, k);
  for (double& x : a.data()) x = normal(rng);
  return a;
}

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).max_abs(); }

Matrix reconstruct(const SvdResult& s) {
  Matrix us = s.u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= s.sigma[j];
  return us * s.vt;
}

// Cyclic two-sided Jacobi on a symmetric matrix; eigenvalues sorted descending.
std::vector<double> jacobi_eigenvalues(Matrix s) {
  const std::size_t n = s.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += s(p, q) * s(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (s(p, q) == 0.0) continue;
        const double theta = (s(q, q) - s(p, p)) / (2.0 * s(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double skp = s(k, p), skq = s(k, q);
          s(k, p) = c * skp - sn * skq;
          s(k, q) = sn * skp + c * skq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double spk = s(p, k), sqk = s(q, k);
          s(p, k) = c * spk - sn * sqk;
          s(q, k) = sn * spk + c * sqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = s(i, i);
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

}  // namespace

TEST(Matrix, ShapeAndArithmetic) {
  const Matrix a{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(a.rows(), 2u);
  EXPECT_EQ(a.cols(), 3u);
  EXPECT_EQ(a.transpose()(2, 1), 6.0);
  EXPECT_EQ((a * a.transpose()), (Matrix{{14, 32}, {32, 77}}));
  EXPECT_EQ(matmul_tn(a, a), a.transpose() * a);
  EXPECT_EQ(matmul_nt(a, a), a * a.transpose());
  EXPECT_EQ(a.cols_range(1, 2), (Matrix{{2, 3}, {5, 6}}));
  EXPECT_EQ(a.reshaped(3, 2)(2, 1), 6.0);
  EXPECT_DOUBLE_EQ(Matrix::identity(4).trace(), 4.0);
  EXPECT_DOUBLE_EQ((Matrix{{3, 0}, {0, 4}}).frobenius(), 5.0);
}

TEST(Matrix, RejectsMismatchedShapes) {
  const Matrix a(2, 3);
  const Matrix b(2, 2);
  EXPECT_THROW((void)(a * a), GeoError);
  EXPECT_THROW((void)(a + b), GeoError);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>(3)), GeoError);
}

TEST(QrThin, IdentityIsFixedPoint) {
  const auto qr = qr_thin(Matrix::identity(3));
  EXPECT_LE(max_abs_diff(qr.q, Matrix::identity(3)), 1e-15);
  EXPECT_LE(max_abs_diff(qr.r, Matrix::identity(3)), 1e-15);
}

TEST(QrThin, ScaledAxes) {
  const auto qr = qr_thin(Matrix{{2, 0}, {0, 3}, {0, 0}});
  EXPECT_LE(max_abs_diff(qr.q, Matrix{{1, 0}, {0, 1}, {0, 0}}), 1e-15);
  EXPECT_LE(max_abs_diff(qr.r, Matrix{{2, 0}, {0, 3}}), 1e-15);
}

TEST(QrThin, RandomResiduals) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix a = random_matrix(64, 4, seed);
    const auto qr = qr_thin(a);
    EXPECT_LE(orthonormality_residual(qr.q), kOrthoTol);
    EXPECT_LE(max_abs_diff(qr.q * qr.r, a), kReconTol * std::max(1.0, a.max_abs()));
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_GE(qr.r(i, i), 0.0);
      for (std::size_t j = 0; j < i; ++j) EXPECT_EQ(qr.r(i, j), 0.0);
    }
  }
}

TEST(QrThin, OrthonormalInputUnchanged) {
  const Matrix q = qr_thin(random_matrix(30, 5, 7)).q;
  const auto again = qr_thin(q);
  EXPECT_LE(max_abs_diff(again.q, q), 1e-10);
  EXPECT_LE(max_abs_diff(again.r, Matrix::identity(5)), 1e-10);
}

TEST(QrThin, Errors) {
  try {
    qr_thin(Matrix{{1, 2}, {2, 4}, {3, 6}});
    FAIL() << "rank-deficient input accepted";
  } catch (const GeoError& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankDeficient);
  }
  try {
    qr_thin(Matrix(2, 3, 1.0));
    FAIL() << "wide input accepted";
  } catch (const GeoError& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  Matrix bad = Matrix::identity(3);
  bad(1, 1) = std::nan("");
  EXPECT_THROW(qr_thin(bad), GeoError);
}

TEST(SvdThin, Diagonal) {
  const auto s = svd_thin(Matrix{{3, 0}, {0, 1}});
  EXPECT_DOUBLE_EQ(s.sigma[0], 3.0);
  EXPECT_DOUBLE_EQ(s.sigma[1], 1.0);
  EXPECT_LE(max_abs_diff(s.u, Matrix::identity(2)), 1e-15);
  EXPECT_LE(max_abs_diff(s.vt, Matrix::identity(2)), 1e-15);
}

TEST(SvdThin, ZeroMatrix) {
  const auto s = svd_thin(Matrix(4, 2));
  EXPECT_EQ(s.sigma, (std::vector<double>{0.0, 0.0}));
  EXPECT_LE(orthonormality_residual(s.u), kOrthoTol);
  EXPECT_LE(orthonormality_residual(s.vt.transpose()), kOrthoTol);
}

TEST(SvdThin, MatchesGramEigenvalues) {
  const Matrix a = random_matrix(28, 5, 42);
  const auto s = svd_thin(a);
  const auto ev = jacobi_eigenvalues(matmul_tn(a, a));
  EXPECT_LE(max_abs_diff(reconstruct(s), a), 1e-9);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(s.sigma[i], std::sqrt(ev[i]), 1e-10 * s.sigma[0]);
}

TEST(SvdThin, RandomInvariants) {
  // 100 matrices of varying shape, up to 784 x 5
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> cols(1, 5);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t k = cols(rng);
    const std::size_t m = seed == 0 ? 784 : k + seed % 40;
    Matrix a = random_matrix(m, k, 1000 + seed);
    a *= std::pow(10.0, static_cast<double>(seed % 7) - 3.0);
    const auto s = svd_thin(a);
    EXPECT_LE(orthonormality_residual(s.u), kOrthoTol);
    EXPECT_LE(orthonormality_residual(s.vt.transpose()), kOrthoTol);
    EXPECT_LE(max_abs_diff(reconstruct(s), a), kReconTol * std::max(1.0, a.max_abs()));
    EXPECT_TRUE(std::is_sorted(s.sigma.rbegin(), s.sigma.rend()));
    EXPECT_GE(s.sigma.back(), 0.0);
  }
}

TEST(SvdThin, RankDeficientStillOrthonormal) {
  Matrix a = random_matrix(10, 3, 9);
  a.set_col(2, a.col(0));
  const auto s = svd_thin(a);
  EXPECT_LE(s.sigma[2], 1e-12 * s.sigma[0]);
  EXPECT_LE(orthonormality_residual(s.u), kOrthoTol);
  EXPECT_LE(max_abs_diff(reconstruct(s), a), kReconTol);
}

TEST(SvdThin, LowRankWithRepeatedRowsConverges) {
  // 54 x 16 of rank 3, six distinct rows each repeated nine times; the 13
  // null columns end up at roundoff level and used to rotate indefinitely
  const Matrix basis = qr_thin(random_matrix(16, 3, 21)).q;
  const Matrix coeffs = random_matrix(6, 3, 22);
  Matrix a(54, 16);
  for (std::size_t r = 0; r < 54; ++r)
    for (std::size_t c = 0; c < 16; ++c)
      for (std::size_t j = 0; j < 3; ++j) a(r, c) += coeffs(r % 6, j) * basis(c, j);
  const auto s = svd_thin(a);
  EXPECT_GT(s.sigma[2], 1e-3);
  EXPECT_LE(s.sigma[3], 1e-12 * s.sigma[0]);
  EXPECT_LE(max_abs_diff(reconstruct(s), a), kReconTol);
  EXPECT_LE(orthonormality_residual(s.vt), kOrthoTol);
}

TEST(OrthonormalComplement, CoordinateSubspace) {
  const Matrix eye = Matrix::identity(4);
  EXPECT_LE(max_abs_diff(orthonormal_complement(eye.cols_range(0, 2)), eye.cols_range(2, 2)), 1e-15);
  const Matrix e1{{1}, {0}};
  EXPECT_LE(max_abs_diff(orthonormal_complement(e1), Matrix{{0}, {1}}), 1e-15);
}

TEST(OrthonormalComplement, RandomCompletesOrthogonalMatrix) {
  const Matrix u = qr_thin(random_matrix(64, 3, 11)).q;
  const Matrix c = orthonormal_complement(u);
  ASSERT_EQ(c.rows(), 64u);
  ASSERT_EQ(c.cols(), 61u);
  EXPECT_LE(orthonormality_residual(c), kOrthoTol);
  EXPECT_LE(matmul_tn(u, c).max_abs(), kOrthoTol);
  Matrix full(64, 64);
  for (std::size_t j = 0; j < 3; ++j) full.set_col(j, u.col(j));
  for (std::size_t j = 0; j < 61; ++j) full.set_col(3 + j, c.col(j));
  EXPECT_LE(orthonormality_residual(full), kOrthoTol);
  EXPECT_LE(max_abs_diff(full * full.transpose(), Matrix::identity(64)), kOrthoTol);
}

TEST(OrthonormalComplement, DeterministicAndSignNormalized) {
  const Matrix u = qr_thin(random_matrix(12, 4, 5)).q;
  const Matrix c1 = orthonormal_complement(u);
  const Matrix c2 = orthonormal_complement(u);
  EXPECT_EQ(c1, c2);
  for (std::size_t j = 0; j < c1.cols(); ++j) {
    for (std::size_t i = 0; i < c1.rows(); ++i) {
      if (std::abs(c1(i, j)) > 1e-12) {
        EXPECT_GT(c1(i, j), 0.0);
        break;
      }
    }
  }
}

TEST(OrthonormalComplement, RejectsNonOrthonormal) {
  try {
    orthonormal_complement(Matrix{{1, 1}, {0, 1}, {0, 0}});
    FAIL();
  } catch (const GeoError& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotOrthonormal);
  }
}

TEST(InverseViaSvd, InvertsAndGuards) {
  const Matrix a{{4, 1}, {2, 3}};
  EXPECT_LE(max_abs_diff(inverse_via_svd(a, 1e-12) * a, Matrix::identity(2)), 1e-14);
  try {
    inverse_via_svd(Matrix{{1, 2}, {2, 4}}, 1e-10);
    FAIL();
  } catch (const GeoError& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankDeficient);
  }
}
