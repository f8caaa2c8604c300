#pragma once

// Dense row-major matrices and the Cholesky-based kernels used by every
// density evaluation and CM-step. Dimensions are runtime values.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cmvn/error.hpp"

namespace cmvn {

class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    if (rows == 0 || cols == 0) throw DomainError("Matrix: dimensions must be positive");
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (rows == 0 || cols == 0) throw DomainError("Matrix: dimensions must be positive");
    if (data_.size() != rows * cols) {
      throw DimensionMismatch("Matrix: expected " + std::to_string(rows * cols) + " entries, got " +
                              std::to_string(data_.size()));
    }
    for (double v : data_) {
      if (!std::isfinite(v)) throw DomainError("Matrix: non-finite entry");
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix constant(std::size_t rows, std::size_t cols, double value) {
    return Matrix(rows, cols, std::vector<double>(rows * cols, value));
  }

  static Matrix diagonal(std::span<const double> diag) {
    Matrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t nr = rows.size();
    const std::size_t nc = nr == 0 ? 0 : rows.begin()->size();
    std::vector<double> entries;
    entries.reserve(nr * nc);
    for (const auto& row : rows) {
      if (row.size() != nc) throw DimensionMismatch("Matrix::from_rows: ragged rows");
      entries.insert(entries.end(), row.begin(), row.end());
    }
    return Matrix(nr, nc, std::move(entries));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  const double* data() const noexcept { return data_.data(); }
  double* data() noexcept { return data_.data(); }
  std::span<const double> entries() const noexcept { return data_; }
  std::span<double> entries() noexcept { return data_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix& operator+=(const Matrix& o) {
    require_same_shape(o, "operator+=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }

  Matrix& operator-=(const Matrix& o) {
    require_same_shape(o, "operator-=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }

  Matrix& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  Matrix& operator/=(double s) {
    for (double& v : data_) v /= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }
  friend Matrix operator/(Matrix a, double s) { return a /= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw DimensionMismatch("Matrix product: inner dimensions differ");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  bool operator==(const Matrix&) const = default;

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  void require_same_shape(const Matrix& o, const char* what) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw DimensionMismatch(std::string("Matrix ") + what + ": shapes differ");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t u = 0; u < b.rows(); ++u)
        for (std::size_t v = 0; v < b.cols(); ++v)
          k(i * b.rows() + u, j * b.cols() + v) = a(i, j) * b(u, v);
  return k;
}

namespace detail {

// Solves L W = B in place; L is n×n lower-triangular, B is n×ncols row-major.
inline void forward_solve_rows(const double* lower, std::size_t n, double* b, std::size_t ncols) {
  for (std::size_t i = 0; i < n; ++i) {
    double* bi = b + i * ncols;
    for (std::size_t k = 0; k < i; ++k) {
      const double lik = lower[i * n + k];
      const double* wk = b + k * ncols;
      for (std::size_t j = 0; j < ncols; ++j) bi[j] -= lik * wk[j];
    }
    const double inv = 1.0 / lower[i * n + i];
    for (std::size_t j = 0; j < ncols; ++j) bi[j] *= inv;
  }
}

// Solves W Lᵀ = B in place; L is n×n lower-triangular, B is nrows×n row-major.
inline void forward_solve_cols(const double* lower, std::size_t n, double* b, std::size_t nrows) {
  for (std::size_t row = 0; row < nrows; ++row) {
    double* w = b + row * n;
    for (std::size_t j = 0; j < n; ++j) {
      double s = w[j];
      const double* lj = lower + j * n;
      for (std::size_t k = 0; k < j; ++k) s -= lj[k] * w[k];
      w[j] = s / lj[j];
    }
  }
}

}  // namespace detail

// Lower-triangular Cholesky factor L with L·Lᵀ = A.
class LowerTriangularFactor {
 public:
  LowerTriangularFactor() = default;
  explicit LowerTriangularFactor(Matrix lower) : lower_(std::move(lower)) {}

  std::size_t dim() const noexcept { return lower_.rows(); }
  const Matrix& matrix() const noexcept { return lower_; }
  const double* data() const noexcept { return lower_.data(); }
  double operator()(std::size_t i, std::size_t j) const { return lower_(i, j); }

  // log|L·Lᵀ| = 2·Σ log Lᵢᵢ
  double log_det() const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) s += std::log(lower_(i, i));
    return 2.0 * s;
  }

  Matrix reconstruct() const {
    const std::size_t n = dim();
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k <= j; ++k) s += lower_(i, k) * lower_(j, k);
        a(i, j) = s;
        a(j, i) = s;
      }
    return a;
  }

  bool operator==(const LowerTriangularFactor&) const = default;

 private:
  Matrix lower_;
};

inline LowerTriangularFactor cholesky(const Matrix& a) {
  if (!a.is_square() || a.empty()) throw DimensionMismatch("cholesky: matrix must be square");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw NotPositiveDefinite("cholesky: pivot " + std::to_string(j) + " is not positive");
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return LowerTriangularFactor(std::move(l));
}

inline constexpr double kSymmetryTolerance = 1e-10;

// Symmetric positive definite matrix. The Cholesky factor is computed once on
// construction; the value is immutable afterwards.
class SpdMatrix {
 public:
  SpdMatrix() = default;

  explicit SpdMatrix(Matrix a) {
    if (!a.is_square() || a.empty()) throw DimensionMismatch("SpdMatrix: matrix must be square");
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double aij = a(i, j), aji = a(j, i);
        if (std::abs(aij - aji) > kSymmetryTolerance)
          throw DomainError("SpdMatrix: matrix is not symmetric");
        const double avg = 0.5 * (aij + aji);
        a(i, j) = avg;
        a(j, i) = avg;
      }
    factor_ = cholesky(a);
    value_ = std::move(a);
  }

  static SpdMatrix identity(std::size_t n) { return SpdMatrix(Matrix::identity(n)); }

  std::size_t dim() const noexcept { return value_.rows(); }
  const Matrix& matrix() const noexcept { return value_; }
  const LowerTriangularFactor& factor() const noexcept { return factor_; }
  double operator()(std::size_t i, std::size_t j) const { return value_(i, j); }
  double log_det() const { return factor_.log_det(); }

  SpdMatrix scaled(double c) const {
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("SpdMatrix::scaled: factor must be positive");
    return SpdMatrix(value_ * c);
  }

  // Division keeps x/x exact, so the divided-by entry becomes exactly 1.
  SpdMatrix divided(double c) const {
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("SpdMatrix::divided: divisor must be positive");
    return SpdMatrix(value_ / c);
  }

  bool operator==(const SpdMatrix& o) const { return value_ == o.value_; }

 private:
  Matrix value_;
  LowerTriangularFactor factor_;
};

inline const LowerTriangularFactor& cholesky(const SpdMatrix& a) { return a.factor(); }

inline double log_det_spd(const SpdMatrix& a) { return a.log_det(); }

namespace detail {

// δ = tr[Σ⁻¹ D Ψ⁻¹ Dᵀ] = ‖L_Σ⁻¹ D L_Ψ⁻ᵀ‖²_F with D = X − M. `work` holds r·p doubles.
inline double quad_form(const double* x, const double* m, std::size_t r, std::size_t p,
                        const double* sigma_lower, const double* psi_lower, double* work) {
  const std::size_t rp = r * p;
  for (std::size_t k = 0; k < rp; ++k) work[k] = x[k] - m[k];
  forward_solve_rows(sigma_lower, r, work, p);
  forward_solve_cols(psi_lower, p, work, r);
  double s = 0.0;
  for (std::size_t k = 0; k < rp; ++k) s += work[k] * work[k];
  return s;
}

}  // namespace detail

inline double trace_quad_form(const Matrix& x, const Matrix& m, const SpdMatrix& sigma, const SpdMatrix& psi) {
  if (x.rows() != m.rows() || x.cols() != m.cols())
    throw DimensionMismatch("trace_quad_form: x and m shapes differ");
  if (sigma.dim() != x.rows() || psi.dim() != x.cols())
    throw DimensionMismatch("trace_quad_form: scale matrices do not match r×p");
  std::vector<double> work(x.size());
  return detail::quad_form(x.data(), m.data(), x.rows(), x.cols(), sigma.factor().data(),
                           psi.factor().data(), work.data());
}

}  // namespace cmvn
