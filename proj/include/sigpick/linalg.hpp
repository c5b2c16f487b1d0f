#pragma once

// Small dense linear algebra used by the geometry kernels. Dimensions here are
// the number of hidden states (typically 2..5), so everything is plain
// row-major storage and partial-pivot Gaussian elimination.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace sigpick {

using Vec = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  Vec row(std::size_t r) const {
    return Vec(data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
               data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_));
  }

  Vec col(std::size_t c) const {
    Vec out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  Vec operator*(const Vec& x) const {
    assert(x.size() == cols_);
    Vec y(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < cols_; ++c) s += (*this)(r, c) * x[c];
      y[r] = s;
    }
    return y;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

/// Solves A x = b. Returns nullopt when a pivot falls below `tol` times the
/// largest entry of A.
inline std::optional<Vec> solve(Matrix a, Vec b, double tol = 1e-12) {
  const std::size_t n = a.rows();
  assert(a.cols() == n && b.size() == n);
  double scale = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) scale = std::max(scale, std::abs(a(r, c)));
  if (scale == 0.0) return std::nullopt;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(a(r, k)) > std::abs(a(piv, k))) piv = r;
    if (std::abs(a(piv, k)) <= tol * scale) return std::nullopt;
    if (piv != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(k, c), a(piv, c));
      std::swap(b[k], b[piv]);
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = a(r, k) / a(k, k);
      if (f == 0.0) continue;
      for (std::size_t c = k; c < n; ++c) a(r, c) -= f * a(k, c);
      b[r] -= f * b[k];
    }
  }
  Vec x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t c = k + 1; c < n; ++c) s -= a(k, c) * x[c];
    x[k] = s / a(k, k);
  }
  return x;
}

inline std::optional<Matrix> inverse(const Matrix& a, double tol = 1e-12) {
  const std::size_t n = a.rows();
  Matrix inv(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    Vec e(n, 0.0);
    e[c] = 1.0;
    auto x = solve(a, e, tol);
    if (!x) return std::nullopt;
    for (std::size_t r = 0; r < n; ++r) inv(r, c) = (*x)[r];
  }
  return inv;
}

inline double determinant(Matrix a) {
  const std::size_t n = a.rows();
  assert(a.cols() == n);
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(a(r, k)) > std::abs(a(piv, k))) piv = r;
    if (a(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(k, c), a(piv, c));
      det = -det;
    }
    det *= a(k, k);
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = a(r, k) / a(k, k);
      for (std::size_t c = k; c < n; ++c) a(r, c) -= f * a(k, c);
    }
  }
  return det;
}

/// Numerical rank with an absolute pivot tolerance.
inline std::size_t rank(Matrix a, double tol) {
  std::size_t r = 0;
  for (std::size_t c = 0; c < a.cols() && r < a.rows(); ++c) {
    std::size_t piv = r;
    for (std::size_t i = r + 1; i < a.rows(); ++i)
      if (std::abs(a(i, c)) > std::abs(a(piv, c))) piv = i;
    if (std::abs(a(piv, c)) <= tol) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) std::swap(a(r, j), a(piv, j));
    for (std::size_t i = r + 1; i < a.rows(); ++i) {
      const double f = a(i, c) / a(r, c);
      for (std::size_t j = c; j < a.cols(); ++j) a(i, j) -= f * a(r, j);
    }
    ++r;
  }
  return r;
}

/// Dimension of the affine hull of `pts` (-1 for an empty set).
inline int affine_dimension(const std::vector<Vec>& pts, double tol) {
  if (pts.empty()) return -1;
  if (pts.size() == 1) return 0;
  Matrix m(pts.size() - 1, pts[0].size());
  for (std::size_t i = 1; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts[0].size(); ++j) m(i - 1, j) = pts[i][j] - pts[0][j];
  return static_cast<int>(rank(m, tol));
}

/// Unit normal of the hyperplane through `pts` (k points in R^k), computed by
/// cofactor expansion. Returns nullopt when the points are affinely dependent.
inline std::optional<Vec> hyperplane_normal(const std::vector<Vec>& pts, double tol = 1e-14) {
  const std::size_t k = pts.size();
  assert(k >= 1 && pts[0].size() == k);
  if (k == 1) return Vec{1.0};
  Vec n(k);
  for (std::size_t col = 0; col < k; ++col) {
    Matrix minor(k - 1, k - 1);
    for (std::size_t i = 1; i < k; ++i) {
      std::size_t cc = 0;
      for (std::size_t j = 0; j < k; ++j) {
        if (j == col) continue;
        minor(i - 1, cc++) = pts[i][j] - pts[0][j];
      }
    }
    const double d = determinant(minor);
    n[col] = (col % 2 == 0) ? d : -d;
  }
  const double len = norm2(n);
  if (len <= tol) return std::nullopt;
  for (double& v : n) v /= len;
  return n;
}

}  // namespace sigpick
