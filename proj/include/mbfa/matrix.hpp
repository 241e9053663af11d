#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mbfa/errors.hpp"

namespace mbfa {

using Vector = std::vector<double>;

// Dense row-major matrix. Rows are feature dimensions and columns are
// instances, so a view with p features over N instances is p x N.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    check_shape(rows, cols);
    data_.assign(rows * cols, 0.0);
  }

  Matrix(std::size_t rows, std::size_t cols, Vector data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    check_shape(rows, cols);
    if (data_.size() != rows * cols) {
      throw InvalidInputError("matrix data length " + std::to_string(data_.size()) +
                              " does not match " + std::to_string(rows) + "x" +
                              std::to_string(cols));
    }
    check_finite();
  }

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    check_shape(rows_, cols_);
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw InvalidInputError("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
    check_finite();
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  Vector column(std::size_t c) const {
    Vector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  const Vector& data() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  // Rejects NaN/Inf. Call after filling a matrix through operator().
  void check_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) throw InvalidInputError("matrix contains a non-finite entry");
    }
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  static void check_shape(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw InvalidInputError("matrix dimensions must be >= 1");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

struct Centered {
  Matrix values;
  Vector mean;
};

// Subtracts the row mean from every column.
inline Centered center(const Matrix& x) {
  Centered out{x, Vector(x.rows(), 0.0)};
  const double n = static_cast<double>(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = out.values.row(r);
    double sum = 0.0;
    for (double v : row) sum += v;
    const double mean = sum / n;
    out.mean[r] = mean;
    for (double& v : row) v -= mean;
  }
  return out;
}

// Subtracts a given per-row mean from every column.
inline Matrix center_with(const Matrix& x, std::span<const double> mean) {
  if (mean.size() != x.rows()) {
    throw DimensionMismatchError("centering mean has length " + std::to_string(mean.size()) +
                                 ", expected " + std::to_string(x.rows()));
  }
  Matrix out = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (double& v : out.row(r)) v -= mean[r];
  }
  return out;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
  return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionMismatchError("matmul: " + std::to_string(a.rows()) + "x" +
                                 std::to_string(a.cols()) + " times " +
                                 std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto src = b.row(k);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatchError("dot: lengths " + std::to_string(a.size()) + " and " +
                                 std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// A * B^T. Both operands are read along rows, which is the natural access
// pattern for p x N data matrices.
inline Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionMismatchError("matmul_transposed: column counts " +
                                 std::to_string(a.cols()) + " and " + std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  return out;
}

// A^T x.
inline Vector transpose_times(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.rows()) {
    throw DimensionMismatchError("transpose_times: vector length " + std::to_string(x.size()) +
                                 ", expected " + std::to_string(a.rows()));
  }
  Vector out(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double xr = x[r];
    auto row = a.row(r);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += row[c] * xr;
  }
  return out;
}

inline double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

inline double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

// Copies the row range [r0, r0 + n) into a new matrix.
inline Matrix row_block(const Matrix& a, std::size_t r0, std::size_t n) {
  if (r0 + n > a.rows()) throw RangeError("row_block out of range");
  Matrix out(n, a.cols());
  std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(r0 * a.cols()), n * a.cols(),
              out.values().begin());
  return out;
}

// Selects the given columns, in order.
inline Matrix select_columns(const Matrix& a, std::span<const std::size_t> cols) {
  if (cols.empty()) throw InvalidInputError("select_columns: empty selection");
  Matrix out(a.rows(), cols.size());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto src = a.row(r);
    auto dst = out.row(r);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (cols[j] >= a.cols()) throw RangeError("select_columns: column index out of range");
      dst[j] = src[cols[j]];
    }
  }
  return out;
}

}  // namespace mbfa
