#pragma once

// Dense, precision-generic linear algebra: a row-major matrix, LU with
// partial pivoting, solves and inverses.

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "radau/errors.hpp"
#include "radau/scalar.hpp"

namespace radau {

template <class T>
using Vector = std::vector<T>;

template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}
  Matrix(std::size_t rows, std::size_t cols, const T& fill)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<T>> init)
      : rows_(init.size()), cols_(init.size() ? init.begin()->size() : 0) {
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) throw DimensionMismatch("ragged matrix initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  Vector<T> column(std::size_t j) const {
    Vector<T> c;
    c.reserve(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c.push_back((*this)(i, j));
    return c;
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  template <class U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.data()[i] = convert<U>(data_[i]);
    return out;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <class T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

template <class T>
Matrix<T> operator*(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionMismatch("matmul: " + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()));
  }
  Matrix<T> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T& aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) multiply_add(c(i, j), aik, b(k, j));
    }
  return c;
}

template <class T>
Matrix<T> operator-(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionMismatch("matrix difference");
  Matrix<T> c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.data().size(); ++i) c.data()[i] = a.data()[i] - b.data()[i];
  return c;
}

template <class T>
Vector<T> operator*(const Matrix<T>& a, std::span<const T> x) {
  if (a.cols() != x.size()) throw DimensionMismatch("matvec");
  Vector<T> y(a.rows(), T(0));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) multiply_add(y[i], a(i, j), x[j]);
  return y;
}

template <class T>
Vector<T> operator*(const Matrix<T>& a, const Vector<T>& x) {
  return a * std::span<const T>(x);
}

// Largest absolute entry.
template <class T>
T max_abs(const Matrix<T>& a) {
  using std::abs;
  T m(0);
  for (const auto& v : a.data()) m = std::max(m, T(abs(v)));
  return m;
}

// Maximum absolute row sum.
template <class T>
T norm_inf(const Matrix<T>& a) {
  using std::abs;
  T m(0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T s(0);
    for (const auto& v : a.row(i)) s += abs(v);
    m = std::max(m, s);
  }
  return m;
}

template <class T>
T norm_inf(std::span<const T> x) {
  using std::abs;
  T m(0);
  for (const auto& v : x) m = std::max(m, T(abs(v)));
  return m;
}

template <class T>
T norm2(std::span<const T> x) {
  using std::sqrt;
  T s(0);
  for (const auto& v : x) multiply_add(s, v, v);
  return sqrt(s);
}

// Combined L\U factors of P*A with a row permutation: row i of P*A is row
// pivots[i] of A. L has an implicit unit diagonal.
template <class T>
struct LuFactorization {
  Matrix<T> factors;
  std::vector<std::size_t> pivots;

  std::size_t size() const noexcept { return factors.rows(); }
};

template <class T>
LuFactorization<T> lu_factor(Matrix<T> a) {
  using std::abs;
  if (!a.square()) {
    throw DimensionMismatch("lu_factor: matrix is " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()));
  }
  const std::size_t n = a.rows();
  const T scale = max_abs(a);
  for (const auto& v : a.data()) {
    if (!is_finite(v)) throw SingularMatrix("lu_factor: non-finite entry");
  }
  const T threshold = T(static_cast<long>(std::max<std::size_t>(n, 1))) * eps<T>() * scale;
  if (n > 0 && !(scale > T(0))) throw SingularMatrix("lu_factor: zero matrix");

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    T best = abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      T v = abs(a(i, k));
      if (v > best) {
        best = std::move(v);
        p = i;
      }
    }
    if (!(best > threshold)) {
      throw SingularMatrix("lu_factor: pivot " + std::to_string(k) + " below threshold");
    }
    if (p != k) {
      std::swap_ranges(a.row(p).begin(), a.row(p).end(), a.row(k).begin());
      std::swap(perm[p], perm[k]);
    }
    const T inv_pivot = T(1) / a(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      a(i, k) *= inv_pivot;
      if (a(i, k) == T(0)) continue;
      for (std::size_t j = k + 1; j < n; ++j) multiply_sub(a(i, j), a(i, k), a(k, j));
    }
  }
  return {std::move(a), std::move(perm)};
}

// Solves A x = rhs in place.
template <class T>
void lu_solve_in_place(const LuFactorization<T>& f, std::span<T> x) {
  const std::size_t n = f.size();
  if (x.size() != n) {
    throw DimensionMismatch("lu_solve: rhs has " + std::to_string(x.size()) + " entries, expected " +
                            std::to_string(n));
  }
  Vector<T> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x[f.pivots[i]];
  for (std::size_t i = 0; i < n; ++i) {
    T acc = y[i];
    for (std::size_t j = 0; j < i; ++j) multiply_sub(acc, f.factors(i, j), y[j]);
    y[i] = std::move(acc);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    T acc = y[ii];
    for (std::size_t j = ii + 1; j < n; ++j) multiply_sub(acc, f.factors(ii, j), y[j]);
    y[ii] = acc / f.factors(ii, ii);
  }
  std::move(y.begin(), y.end(), x.begin());
}

template <class T>
Vector<T> lu_solve(const LuFactorization<T>& f, std::span<const T> rhs) {
  Vector<T> x(rhs.begin(), rhs.end());
  lu_solve_in_place(f, std::span<T>(x));
  return x;
}

template <class T>
Vector<T> lu_solve(const LuFactorization<T>& f, const Vector<T>& rhs) {
  return lu_solve(f, std::span<const T>(rhs));
}

template <class T>
Vector<T> solve(const Matrix<T>& a, std::span<const T> rhs) {
  return lu_solve(lu_factor(a), rhs);
}

template <class T>
Vector<T> solve(const Matrix<T>& a, const Vector<T>& rhs) {
  return solve(a, std::span<const T>(rhs));
}

template <class T>
Matrix<T> mat_inverse(const Matrix<T>& a) {
  const auto f = lu_factor(a);
  const std::size_t n = a.rows();
  Matrix<T> inv(n, n);
  Vector<T> col(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(col.begin(), col.end(), T(0));
    col[j] = T(1);
    lu_solve_in_place(f, std::span<T>(col));
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

// Reassembles P*A = L*U from a factorization (diagnostics and tests).
template <class T>
Matrix<T> lu_reconstruct(const LuFactorization<T>& f) {
  const std::size_t n = f.size();
  Matrix<T> out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      T acc(0);
      const std::size_t kmax = std::min(i, j);
      for (std::size_t k = 0; k < kmax; ++k) multiply_add(acc, f.factors(i, k), f.factors(k, j));
      if (i <= j) {
        acc += f.factors(i, j);
      } else {
        multiply_add(acc, f.factors(i, j), f.factors(j, j));
      }
      out(i, j) = std::move(acc);
    }
  return out;
}

// Rows of `a` reordered by the factorization's permutation.
template <class T>
Matrix<T> permute_rows(const Matrix<T>& a, const std::vector<std::size_t>& pivots) {
  Matrix<T> out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(pivots[i], j);
  return out;
}

template <class U, class T>
Vector<U> cast_vector(const Vector<T>& v) {
  Vector<U> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(convert<U>(x));
  return out;
}

}  // namespace radau
