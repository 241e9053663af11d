#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "mbfa/errors.hpp"
#include "mbfa/matrix.hpp"

namespace mbfa {

// Eigenpairs of a symmetric matrix, largest eigenvalue first. Column j of
// `eigenvectors` belongs to eigenvalues[j]; the entry of largest magnitude in
// each column is non-negative (first such entry on ties).
struct EigenResult {
  Vector eigenvalues;
  Matrix eigenvectors;
};

struct JacobiOptions {
  // Stop once the off-diagonal Frobenius norm is <= tolerance * ||S||_F.
  double tolerance = 1e-12;
  int max_sweeps = 100;
};

namespace detail {

inline double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto row = a.row(i);
    for (std::size_t j = i + 1; j < a.cols(); ++j) s += row[j] * row[j];
  }
  return std::sqrt(2.0 * s);
}

// Applies the rotation that annihilates a(p, q). `a` is kept fully
// symmetric; `vt` stores eigenvectors as rows.
inline void jacobi_rotate(Matrix& a, Matrix& vt, std::size_t p, std::size_t q) {
  const std::size_t n = a.rows();
  const double apq = a(p, q);
  const double app = a(p, p);
  const double aqq = a(q, q);

  const double theta = (aqq - app) / (2.0 * apq);
  double t;
  if (std::abs(theta) > 1e150) {
    t = 0.5 / theta;
  } else {
    t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    if (theta < 0.0) t = -t;
  }
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;

  auto row_p = a.row(p);
  auto row_q = a.row(q);
  for (std::size_t k = 0; k < n; ++k) {
    if (k == p || k == q) continue;
    const double akp = row_p[k];
    const double akq = row_q[k];
    const double np = c * akp - s * akq;
    const double nq = s * akp + c * akq;
    row_p[k] = np;
    row_q[k] = nq;
    a(k, p) = np;
    a(k, q) = nq;
  }
  row_p[p] = app - t * apq;
  row_q[q] = aqq + t * apq;
  row_p[q] = 0.0;
  row_q[p] = 0.0;

  auto vp = vt.row(p);
  auto vq = vt.row(q);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = vp[k];
    const double y = vq[k];
    vp[k] = c * x - s * y;
    vq[k] = s * x + c * y;
  }
}

}  // namespace detail

// Top-d eigenpairs of a symmetric matrix by cyclic Jacobi rotations.
//
// Throws InvalidInputError for non-square or asymmetric input (tolerance
// 1e-10 * ||S||_F), RangeError if d is not in [1, n], and ConvergenceError
// when the sweep budget is exhausted.
inline EigenResult symmetric_eig(const Matrix& s, std::size_t d, const JacobiOptions& options = {}) {
  if (s.rows() != s.cols()) {
    throw InvalidInputError("symmetric_eig: matrix is " + std::to_string(s.rows()) + "x" +
                            std::to_string(s.cols()) + ", expected square");
  }
  const std::size_t n = s.rows();
  if (d < 1 || d > n) {
    throw RangeError("symmetric_eig: d = " + std::to_string(d) + " outside [1, " +
                     std::to_string(n) + "]");
  }
  const double norm = frobenius_norm(s);
  const double sym_tol = 1e-10 * norm;
  Matrix a = s;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(s(i, j) - s(j, i)) > sym_tol) {
        throw InvalidInputError("symmetric_eig: matrix is not symmetric at (" +
                                std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      const double avg = 0.5 * (s(i, j) + s(j, i));
      a(i, j) = avg;
      a(j, i) = avg;
    }
  }

  Matrix vt = Matrix::identity(n);
  const double threshold = options.tolerance * norm;
  double off = detail::off_diagonal_norm(a);
  int sweep = 0;
  while (off > threshold) {
    if (sweep == options.max_sweeps) {
      throw ConvergenceError("symmetric_eig: no convergence after " +
                                 std::to_string(options.max_sweeps) +
                                 " sweeps, off-diagonal norm " + std::to_string(off),
                             off);
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) != 0.0) detail::jacobi_rotate(a, vt, p, q);
      }
    }
    off = detail::off_diagonal_norm(a);
    ++sweep;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenResult out{Vector(d), Matrix(n, d)};
  for (std::size_t j = 0; j < d; ++j) {
    const std::size_t src = order[j];
    out.eigenvalues[j] = a(src, src);
    auto v = vt.row(src);
    std::size_t pivot = 0;
    for (std::size_t k = 1; k < n; ++k) {
      if (std::abs(v[k]) > std::abs(v[pivot])) pivot = k;
    }
    const double sign = v[pivot] < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.eigenvectors(k, j) = sign * v[k];
  }
  return out;
}

}  // namespace mbfa
