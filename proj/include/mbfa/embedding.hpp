#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mbfa/eigen.hpp"
#include "mbfa/errors.hpp"
#include "mbfa/matrix.hpp"

namespace mbfa {

enum class Method { MBFA, MCCA };

inline std::string to_string(Method m) { return m == Method::MBFA ? "MBFA" : "MCCA"; }

inline Method parse_method(const std::string& s) {
  if (s == "MBFA" || s == "mbfa") return Method::MBFA;
  if (s == "MCCA" || s == "mcca") return Method::MCCA;
  throw InvalidInputError("unknown method '" + s + "' (expected MBFA or MCCA)");
}

inline constexpr double kDefaultMccaReg = 1e-6;

// Block matrix with X_i X_j^T off the diagonal and zero diagonal blocks.
// offsets has c + 1 entries; view i occupies rows [offsets[i], offsets[i+1]).
struct CrossCovariance {
  std::vector<std::size_t> offsets;
  Matrix m;
};

// A fitted multi-view projection. projections[i] is p_i x d and maps view i
// into the shared space after subtracting means[i].
struct EmbeddingModel {
  Method method = Method::MBFA;
  std::size_t d = 0;
  std::vector<std::size_t> view_dims;
  std::vector<Matrix> projections;
  std::vector<Vector> means;
  Vector eigenvalues;
  // Ridge used to build the MCCA constraint matrix; 0 for MBFA.
  double reg = 0.0;
  // Optional labels for the views, e.g. "visual", "attributes".
  std::vector<std::string> view_names;

  std::size_t view_count() const noexcept { return projections.size(); }

  // [W_1; ...; W_c], (sum p_i) x d.
  Matrix stacked() const {
    std::size_t total = 0;
    for (auto p : view_dims) total += p;
    Matrix w(total, d);
    std::size_t off = 0;
    for (const auto& wi : projections) {
      for (std::size_t r = 0; r < wi.rows(); ++r) {
        auto src = wi.row(r);
        std::copy(src.begin(), src.end(), w.row(off + r).begin());
      }
      off += wi.rows();
    }
    return w;
  }
};

namespace detail {

inline void check_views(std::span<const Matrix> views) {
  if (views.size() < 2) {
    throw InvalidInputError("at least 2 views are required, got " + std::to_string(views.size()));
  }
  const std::size_t n = views[0].cols();
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].empty()) throw InvalidInputError("view " + std::to_string(i) + " is empty");
    if (views[i].cols() != n) {
      throw DimensionMismatchError("view " + std::to_string(i) + " has " +
                                   std::to_string(views[i].cols()) + " instances, expected " +
                                   std::to_string(n));
    }
  }
}

inline std::vector<std::size_t> view_offsets(std::span<const Matrix> views) {
  std::vector<std::size_t> off{0};
  for (const auto& v : views) off.push_back(off.back() + v.rows());
  return off;
}

inline void check_d(std::size_t d, std::size_t total) {
  if (d < 1 || d > total) {
    throw RangeError("embedding dimension d = " + std::to_string(d) + " outside [1, " +
                     std::to_string(total) + "]");
  }
}

struct CenteredViews {
  std::vector<Matrix> values;
  std::vector<Vector> means;
};

inline CenteredViews center_views(std::span<const Matrix> views) {
  CenteredViews out;
  for (const auto& v : views) {
    auto c = center(v);
    out.values.push_back(std::move(c.values));
    out.means.push_back(std::move(c.mean));
  }
  return out;
}

inline EmbeddingModel slice_model(Method method, const Matrix& stacked, Vector eigenvalues,
                                  std::span<const std::size_t> offsets,
                                  std::vector<Vector> means) {
  EmbeddingModel model;
  model.method = method;
  model.d = stacked.cols();
  model.eigenvalues = std::move(eigenvalues);
  model.means = std::move(means);
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
    const std::size_t p = offsets[i + 1] - offsets[i];
    model.view_dims.push_back(p);
    model.projections.push_back(row_block(stacked, offsets[i], p));
  }
  return model;
}

}  // namespace detail

// Assembles M from views that are already centered.
inline CrossCovariance build_cross_covariance(std::span<const Matrix> views) {
  detail::check_views(views);
  CrossCovariance cc{detail::view_offsets(views), {}};
  const std::size_t total = cc.offsets.back();
  cc.m = Matrix(total, total);
  for (std::size_t i = 0; i < views.size(); ++i) {
    for (std::size_t j = i + 1; j < views.size(); ++j) {
      const Matrix block = matmul_transposed(views[i], views[j]);
      for (std::size_t r = 0; r < block.rows(); ++r) {
        for (std::size_t c = 0; c < block.cols(); ++c) {
          cc.m(cc.offsets[i] + r, cc.offsets[j] + c) = block(r, c);
          cc.m(cc.offsets[j] + c, cc.offsets[i] + r) = block(r, c);
        }
      }
    }
  }
  return cc;
}

// Multi-battery factor analysis: top-d eigenvectors of M under the stacked
// constraint W^T W = I. Views are raw (uncentered); means are stored.
inline EmbeddingModel fit_mbfa(std::span<const Matrix> views, std::size_t d) {
  detail::check_views(views);
  auto centered = detail::center_views(views);
  const auto cc = build_cross_covariance(centered.values);
  detail::check_d(d, cc.offsets.back());
  auto eig = symmetric_eig(cc.m, d);
  return detail::slice_model(Method::MBFA, eig.eigenvectors, std::move(eig.eigenvalues),
                             cc.offsets, std::move(centered.means));
}

// Inter-battery factor analysis, the two-view case of fit_mbfa.
inline EmbeddingModel fit_ibfa(const Matrix& x1, const Matrix& x2, std::size_t d) {
  const std::vector<Matrix> views{x1, x2};
  return fit_mbfa(views, d);
}

// blockdiag(X_i X_i^T + reg * (trace(X_i X_i^T) / p_i) * I) for centered views.
inline Matrix mcca_constraint_matrix(std::span<const Matrix> centered_views, double reg) {
  detail::check_views(centered_views);
  const auto offsets = detail::view_offsets(centered_views);
  Matrix dmat(offsets.back(), offsets.back());
  for (std::size_t i = 0; i < centered_views.size(); ++i) {
    const Matrix cii = matmul_transposed(centered_views[i], centered_views[i]);
    double trace = 0.0;
    for (std::size_t r = 0; r < cii.rows(); ++r) trace += cii(r, r);
    const double ridge = reg * trace / static_cast<double>(cii.rows());
    for (std::size_t r = 0; r < cii.rows(); ++r) {
      for (std::size_t c = 0; c < cii.cols(); ++c) {
        dmat(offsets[i] + r, offsets[i] + c) = cii(r, c) + (r == c ? ridge : 0.0);
      }
    }
  }
  return dmat;
}

namespace detail {

// D_i^{-1/2} for one symmetric positive definite diagonal block.
inline Matrix inverse_sqrt_block(const Matrix& block, std::size_t view) {
  const std::size_t p = block.rows();
  const auto eig = symmetric_eig(block, p);
  const double largest = eig.eigenvalues.front();
  const double smallest = eig.eigenvalues.back();
  const double floor = static_cast<double>(p) * std::numeric_limits<double>::epsilon() *
                       std::abs(largest);
  if (!(largest > 0.0) || smallest <= floor) {
    throw SingularError("MCCA: within-view covariance of view " + std::to_string(view) +
                        " is not positive definite (smallest eigenvalue " +
                        std::to_string(smallest) + "); increase the regularization");
  }
  Matrix scaled = eig.eigenvectors;
  for (std::size_t r = 0; r < p; ++r)
    for (std::size_t c = 0; c < p; ++c) scaled(r, c) /= std::sqrt(eig.eigenvalues[c]);
  return matmul_transposed(scaled, eig.eigenvectors);
}

}  // namespace detail

// Multi-view CCA baseline: M w = lambda D w, solved through the symmetric
// reduction D^{-1/2} M D^{-1/2}. The returned stacked W satisfies W^T D W = I.
inline EmbeddingModel fit_mcca(std::span<const Matrix> views, std::size_t d,
                               double reg = kDefaultMccaReg) {
  detail::check_views(views);
  if (!(reg >= 0.0) || !std::isfinite(reg)) {
    throw InvalidInputError("MCCA regularization must be a finite value >= 0");
  }
  auto centered = detail::center_views(views);
  const auto cc = build_cross_covariance(centered.values);
  detail::check_d(d, cc.offsets.back());
  const Matrix dmat = mcca_constraint_matrix(centered.values, reg);

  const std::size_t c = views.size();
  std::vector<Matrix> whiten;
  for (std::size_t i = 0; i < c; ++i) {
    const std::size_t p = cc.offsets[i + 1] - cc.offsets[i];
    Matrix block(p, p);
    for (std::size_t r = 0; r < p; ++r)
      for (std::size_t s = 0; s < p; ++s) block(r, s) = dmat(cc.offsets[i] + r, cc.offsets[i] + s);
    whiten.push_back(detail::inverse_sqrt_block(block, i));
  }

  // T = B M B with B = blockdiag(D_i^{-1/2}); only off-diagonal blocks are nonzero.
  const std::size_t total = cc.offsets.back();
  Matrix t(total, total);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = i + 1; j < c; ++j) {
      const std::size_t pi = cc.offsets[i + 1] - cc.offsets[i];
      const std::size_t pj = cc.offsets[j + 1] - cc.offsets[j];
      Matrix mij(pi, pj);
      for (std::size_t r = 0; r < pi; ++r)
        for (std::size_t s = 0; s < pj; ++s) mij(r, s) = cc.m(cc.offsets[i] + r, cc.offsets[j] + s);
      const Matrix tij = matmul(matmul(whiten[i], mij), whiten[j]);
      for (std::size_t r = 0; r < pi; ++r) {
        for (std::size_t s = 0; s < pj; ++s) {
          t(cc.offsets[i] + r, cc.offsets[j] + s) = tij(r, s);
          t(cc.offsets[j] + s, cc.offsets[i] + r) = tij(r, s);
        }
      }
    }
  }

  auto eig = symmetric_eig(t, d);
  Matrix stacked(total, d);
  for (std::size_t i = 0; i < c; ++i) {
    const std::size_t p = cc.offsets[i + 1] - cc.offsets[i];
    const Matrix wi = matmul(whiten[i], row_block(eig.eigenvectors, cc.offsets[i], p));
    for (std::size_t r = 0; r < p; ++r) {
      auto src = wi.row(r);
      std::copy(src.begin(), src.end(), stacked.row(cc.offsets[i] + r).begin());
    }
  }
  auto model = detail::slice_model(Method::MCCA, stacked, std::move(eig.eigenvalues), cc.offsets,
                                   std::move(centered.means));
  model.reg = reg;
  return model;
}

// W_i^T (x - mean_i).
inline Vector project(const EmbeddingModel& model, std::size_t view, std::span<const double> x) {
  if (view >= model.view_count()) {
    throw RangeError("view index " + std::to_string(view) + " out of range (model has " +
                     std::to_string(model.view_count()) + " views)");
  }
  const auto& mean = model.means[view];
  if (x.size() != mean.size()) {
    throw DimensionMismatchError("view " + std::to_string(view) + " expects " +
                                 std::to_string(mean.size()) + " features, got " +
                                 std::to_string(x.size()));
  }
  Vector xc(x.begin(), x.end());
  for (std::size_t r = 0; r < xc.size(); ++r) xc[r] -= mean[r];
  return transpose_times(model.projections[view], xc);
}

// Projects every column of x; returns d x N.
inline Matrix project_columns(const EmbeddingModel& model, std::size_t view, const Matrix& x) {
  if (view >= model.view_count()) {
    throw RangeError("view index " + std::to_string(view) + " out of range");
  }
  const Matrix xc = center_with(x, model.means[view]);
  return matmul(transpose(model.projections[view]), xc);
}

// Sum over i != j of tr(W_i^T X_i X_j^T W_j), views centered by the model means.
inline double objective_value(const EmbeddingModel& model, std::span<const Matrix> views) {
  detail::check_views(views);
  if (views.size() != model.view_count()) {
    throw DimensionMismatchError("model has " + std::to_string(model.view_count()) +
                                 " views, got " + std::to_string(views.size()));
  }
  std::vector<Matrix> embedded;
  for (std::size_t i = 0; i < views.size(); ++i) {
    embedded.push_back(project_columns(model, i, views[i]));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    for (std::size_t j = 0; j < views.size(); ++j) {
      if (i == j) continue;
      const auto& a = embedded[i].data();
      const auto& b = embedded[j].data();
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
      total += s;
    }
  }
  return total;
}

// W^T W for the stacked projection.
inline Matrix stacked_gram(const EmbeddingModel& model) {
  const Matrix w = model.stacked();
  return matmul(transpose(w), w);
}

// W_i^T W_i for one view. Not constrained to the identity by the fitters.
inline Matrix block_gram(const EmbeddingModel& model, std::size_t view) {
  if (view >= model.view_count()) throw RangeError("view index out of range");
  const auto& w = model.projections[view];
  return matmul(transpose(w), w);
}

}  // namespace mbfa
