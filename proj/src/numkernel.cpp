#include "geonet/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace geonet {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw GeoError(ErrorCode::DimensionMismatch,
                   std::string(op) + ": " + shape(a) + " vs " + shape(b));
  }
}

// Householder vectors for the first k columns of `work`, which is reduced in
// place to R in its upper triangle. vs[j] has length m - j.
std::vector<std::vector<double>> householder_reduce(Matrix& work) {
  const std::size_t m = work.rows();
  const std::size_t k = work.cols();
  std::vector<std::vector<double>> vs(k);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> v(m - j);
    double norm2 = 0.0;
    for (std::size_t i = j; i < m; ++i) {
      v[i - j] = work(i, j);
      norm2 += v[i - j] * v[i - j];
    }
    const double norm = std::sqrt(norm2);
    const double alpha = v[0] >= 0.0 ? -norm : norm;
    v[0] -= alpha;
    double vnorm2 = 0.0;
    for (double x : v) vnorm2 += x * x;
    if (vnorm2 == 0.0) {
      vs[j] = {};
      continue;
    }
    for (std::size_t c = j; c < k; ++c) {
      double dot = 0.0;
      for (std::size_t i = j; i < m; ++i) dot += v[i - j] * work(i, c);
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = j; i < m; ++i) work(i, c) -= f * v[i - j];
    }
    for (std::size_t i = j + 1; i < m; ++i) work(i, j) = 0.0;
    vs[j] = std::move(v);
  }
  return vs;
}

// target <- H_0 H_1 ... H_{k-1} target
void apply_reflectors(const std::vector<std::vector<double>>& vs, Matrix& target) {
  const std::size_t m = target.rows();
  for (std::size_t jj = vs.size(); jj-- > 0;) {
    const auto& v = vs[jj];
    if (v.empty()) continue;
    double vnorm2 = 0.0;
    for (double x : v) vnorm2 += x * x;
    for (std::size_t c = 0; c < target.cols(); ++c) {
      double dot = 0.0;
      for (std::size_t i = jj; i < m; ++i) dot += v[i - jj] * target(i, c);
      const double f = 2.0 * dot / vnorm2;
      if (f == 0.0) continue;
      for (std::size_t i = jj; i < m; ++i) target(i, c) -= f * v[i - jj];
    }
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw GeoError(ErrorCode::DimensionMismatch,
                   "data length " + std::to_string(data_.size()) + " for " +
                       std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw GeoError(ErrorCode::DimensionMismatch, "ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::column(std::span<const double> v) {
  return Matrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

std::vector<double> Matrix::col(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::set_col(std::size_t c, std::span<const double> v) {
  if (v.size() != rows_) throw GeoError(ErrorCode::DimensionMismatch, "set_col length");
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::cols_range(std::size_t first, std::size_t count) const {
  if (first + count > cols_) throw GeoError(ErrorCode::DimensionMismatch, "cols_range");
  Matrix out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, first + c);
  return out;
}

Matrix Matrix::reshaped(std::size_t rows, std::size_t cols) const {
  return Matrix(rows, cols, data_);
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require_same_shape(*this, o, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require_same_shape(*this, o, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double Matrix::max_abs() const noexcept {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

double Matrix::frobenius() const noexcept {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return std::sqrt(s);
}

double Matrix::trace() const {
  if (rows_ != cols_) throw GeoError(ErrorCode::DimensionMismatch, "trace of " + shape(*this));
  double t = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
  return t;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw GeoError(ErrorCode::DimensionMismatch, "matmul " + shape(a) + " * " + shape(b));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto crow = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw GeoError(ErrorCode::DimensionMismatch, "matmul_tn " + shape(a) + " , " + shape(b));
  }
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto arow = a.row(k);
    auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      auto crow = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw GeoError(ErrorCode::DimensionMismatch, "matmul_nt " + shape(a) + " , " + shape(b));
  }
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
      c(i, j) = s;
    }
  }
  return c;
}

double orthonormality_residual(const Matrix& a) {
  Matrix g = matmul_tn(a, a);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return g.max_abs();
}

void require_finite(const Matrix& a, const char* where) {
  if (!a.all_finite()) throw GeoError(ErrorCode::NonFinite, std::string(where) + ": non-finite entry");
}

QrResult qr_thin(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  if (m < k || k == 0) {
    throw GeoError(ErrorCode::DimensionMismatch, "qr_thin needs m >= k > 0, got " + shape(a));
  }
  require_finite(a, "qr_thin");

  Matrix work = a;
  const auto vs = householder_reduce(work);

  Matrix r(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) r(i, j) = work(i, j);

  Matrix q(m, k);
  for (std::size_t j = 0; j < k; ++j) q(j, j) = 1.0;
  apply_reflectors(vs, q);

  for (std::size_t j = 0; j < k; ++j) {
    if (std::abs(r(j, j)) < kRankTol) {
      throw GeoError(ErrorCode::RankDeficient,
                     "pivot " + std::to_string(j) + " is " + std::to_string(r(j, j)));
    }
    if (r(j, j) < 0.0) {
      for (std::size_t c = j; c < k; ++c) r(j, c) = -r(j, c);
      for (std::size_t i = 0; i < m; ++i) q(i, j) = -q(i, j);
    }
  }
  return {std::move(q), std::move(r)};
}

SvdResult svd_thin(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  if (m < k || k == 0) {
    throw GeoError(ErrorCode::DimensionMismatch, "svd_thin needs m >= k > 0, got " + shape(a));
  }
  require_finite(a, "svd_thin");

  // Columns of w are rotated until mutually orthogonal; v accumulates the rotations.
  Matrix w = a;
  Matrix v = Matrix::identity(k);
  // Columns below roundoff level of the whole matrix carry no information;
  // rotating them against each other can cycle forever on rank-deficient input.
  double frob2 = 0.0;
  for (double x : a.data()) frob2 += x * x;
  const double negligible = frob2 * std::numeric_limits<double>::epsilon() * std::numeric_limits<double>::epsilon();
  bool converged = false;
  for (int sweep = 0; sweep < kSvdMaxSweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double wp = w(i, p);
          const double wq = w(i, q);
          alpha += wp * wp;
          beta += wq * wq;
          gamma += wp * wq;
        }
        if (gamma == 0.0 || std::abs(gamma) <= kSvdOffDiagTol * std::sqrt(alpha * beta)) continue;
        if (alpha <= negligible || beta <= negligible) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double wp = w(i, p);
          const double wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < k; ++i) {
          const double vp = v(i, p);
          const double vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
  }
  if (!converged) {
    throw GeoError(ErrorCode::NoConvergence,
                   "one-sided Jacobi did not converge in " + std::to_string(kSvdMaxSweeps) + " sweeps");
  }

  std::vector<double> norms(k);
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += w(i, j) * w(i, j);
    norms[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  SvdResult out{Matrix(m, k), std::vector<double>(k), Matrix(k, k)};
  const double sigma_max = norms[order[0]];
  std::vector<bool> filled(k, false);
  for (std::size_t jj = 0; jj < k; ++jj) {
    const std::size_t j = order[jj];
    out.sigma[jj] = norms[j];
    for (std::size_t i = 0; i < k; ++i) out.vt(jj, i) = v(i, j);
    if (norms[j] > 0.0 && norms[j] > 1e-14 * sigma_max) {
      for (std::size_t i = 0; i < m; ++i) out.u(i, jj) = w(i, j) / norms[j];
      filled[jj] = true;
    }
  }

  // Null directions: complete U with unit vectors orthogonal to the filled columns.
  std::size_t candidate = 0;
  for (std::size_t jj = 0; jj < k; ++jj) {
    if (filled[jj]) continue;
    while (candidate < m) {
      std::vector<double> e(m, 0.0);
      e[candidate++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t c = 0; c < k; ++c) {
          if (!filled[c]) continue;
          double dot = 0.0;
          for (std::size_t i = 0; i < m; ++i) dot += out.u(i, c) * e[i];
          for (std::size_t i = 0; i < m; ++i) e[i] -= dot * out.u(i, c);
        }
      }
      double nrm = 0.0;
      for (double x : e) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > 0.1) {
        for (std::size_t i = 0; i < m; ++i) out.u(i, jj) = e[i] / nrm;
        filled[jj] = true;
        break;
      }
    }
  }
  return out;
}

Matrix orthonormal_complement(const Matrix& u) {
  const std::size_t n = u.rows();
  const std::size_t d = u.cols();
  if (d == 0 || d >= n) {
    throw GeoError(ErrorCode::DimensionMismatch, "orthonormal_complement needs 0 < d < n, got " + shape(u));
  }
  require_finite(u, "orthonormal_complement");
  const double resid = orthonormality_residual(u);
  if (resid > 1e-8) {
    throw GeoError(ErrorCode::NotOrthonormal, "basis residual " + std::to_string(resid));
  }

  Matrix work = u;
  const auto vs = householder_reduce(work);
  Matrix full = Matrix::identity(n);
  apply_reflectors(vs, full);

  Matrix comp = full.cols_range(d, n - d);
  for (std::size_t c = 0; c < comp.cols(); ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      const double x = comp(r, c);
      if (std::abs(x) <= 1e-12) continue;
      if (x < 0.0) {
        for (std::size_t i = 0; i < n; ++i) comp(i, c) = -comp(i, c);
      }
      break;
    }
  }
  return comp;
}

Matrix inverse_via_svd(const Matrix& a, double min_sigma) {
  if (a.rows() != a.cols()) throw GeoError(ErrorCode::DimensionMismatch, "inverse of " + shape(a));
  const SvdResult s = svd_thin(a);
  if (s.sigma.back() < min_sigma) {
    throw GeoError(ErrorCode::RankDeficient, "smallest singular value " + std::to_string(s.sigma.back()));
  }
  // a^-1 = V diag(1/sigma) U^T
  Matrix vs = s.vt.transpose();
  for (std::size_t r = 0; r < vs.rows(); ++r)
    for (std::size_t c = 0; c < vs.cols(); ++c) vs(r, c) /= s.sigma[c];
  return matmul_nt(vs, s.u);
}

}  // namespace geonet
