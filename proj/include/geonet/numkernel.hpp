#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "geonet/error.hpp"

namespace geonet {

// Shared tolerances for the dense kernels and their property tests.
inline constexpr double kOrthoTol = 1e-10;
inline constexpr double kReconTol = 1e-9;
inline constexpr double kRankTol = 1e-12;
inline constexpr double kSvdOffDiagTol = 1e-12;
inline constexpr int kSvdMaxSweeps = 100;

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);
  /// Column vector (n x 1).
  static Matrix column(std::span<const double> v);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> col(std::size_t c) const;
  void set_col(std::size_t c, std::span<const double> v);

  Matrix transpose() const;
  /// Columns [first, first + count).
  Matrix cols_range(std::size_t first, std::size_t count) const;
  /// Same data reinterpreted with a new shape (row-major order is preserved).
  Matrix reshaped(std::size_t rows, std::size_t cols) const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  bool all_finite() const noexcept;
  double max_abs() const noexcept;
  double frobenius() const noexcept;
  double trace() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
/// Matrix product.
Matrix operator*(const Matrix& a, const Matrix& b);
/// a^T * b without forming the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T without forming the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// max_ij |(A^T A - I)_ij| for a matrix whose columns should be orthonormal.
double orthonormality_residual(const Matrix& a);

struct QrResult {
  Matrix q;  // m x k, orthonormal columns
  Matrix r;  // k x k, upper triangular, nonnegative diagonal
};

struct SvdResult {
  Matrix u;                   // m x k
  std::vector<double> sigma;  // nonincreasing, length k
  Matrix vt;                  // k x k
};

/// Householder thin QR of an m x k matrix (m >= k). Throws RankDeficient when
/// a diagonal entry of R falls below kRankTol.
QrResult qr_thin(const Matrix& a);

/// One-sided Jacobi thin SVD of an m x k matrix (m >= k).
SvdResult svd_thin(const Matrix& a);

/// Orthonormal basis of the complement of span(u), from the full Householder
/// QR of u. Each column is sign-normalized so its first nonzero entry is
/// positive; the result is a pure function of u.
Matrix orthonormal_complement(const Matrix& u);

/// Inverse of a square matrix via its SVD; throws RankDeficient when the
/// smallest singular value is below `min_sigma`.
Matrix inverse_via_svd(const Matrix& a, double min_sigma);

void require_finite(const Matrix& a, const char* where);

}  // namespace geonet
