#pragma once

// Eigen-decomposition for matrices whose spectrum is one real eigenvalue
// plus complex-conjugate pairs (the shape of a^-1 for odd-stage Radau IIA).
// Eigenpairs are seeded at double precision and lifted to the working
// precision by Newton iteration on (A - lambda I) v = 0 with one component
// of v pinned.

#include <algorithm>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "radau/errors.hpp"
#include "radau/linalg.hpp"
#include "radau/scalar.hpp"

namespace radau {

namespace detail {

struct EigenSeed {
  struct Pair {
    double alpha = 0.0;
    double beta = 0.0;  // > 0
    // Eigenvector for alpha + i*beta.
    std::vector<std::complex<double>> vec;
  };
  double gamma = 0.0;
  std::vector<double> r;
  std::vector<Pair> pairs;
};

// Double-precision eigenpairs, classified into one real eigenvalue and
// conjugate pairs. Throws SpectrumShapeViolation for any other shape.
EigenSeed seed_real_plus_pairs(const Matrix<double>& a);

}  // namespace detail

// A (u + i v) = (alpha - i beta)(u + i v), beta > 0. Equivalently u - i v is
// the eigenvector for alpha + i beta. In the basis {u, v} A acts as
// [[alpha, -beta], [beta, alpha]].
template <class T>
struct ConjugatePair {
  T alpha;
  T beta;
  Vector<T> u;
  Vector<T> v;
};

template <class T>
struct RealPlusPairsSpectrum {
  T gamma;
  Vector<T> r;  // unit Euclidean length, largest-magnitude entry positive
  std::vector<ConjugatePair<T>> pairs;  // ascending beta
};

namespace detail {

template <class T>
T newton_tolerance_scale(std::span<const T> x) {
  return std::max(T(1), norm_inf(x));
}

// Newton refinement of a real eigenpair with r[pin] fixed at 1.
template <class T>
void refine_real(const Matrix<T>& a, T& gamma, Vector<T>& r, std::size_t pin) {
  using std::abs;
  const std::size_t n = a.rows();
  T prev_step(-1);
  for (int it = 0; it < 100; ++it) {
    Vector<T> residual = a * r;
    for (std::size_t i = 0; i < n; ++i) multiply_sub(residual[i], gamma, r[i]);
    Matrix<T> jac(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) jac(i, j) = a(i, j);
      jac(i, i) -= gamma;
      jac(i, pin) = -r[i];
    }
    for (auto& x : residual) x = -x;
    const Vector<T> step = solve(jac, residual);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == pin) {
        gamma += step[j];
      } else {
        r[j] += step[j];
      }
    }
    const T size = norm_inf(std::span<const T>(step));
    const T scale = std::max(norm_inf(std::span<const T>(r)), T(abs(gamma)));
    if (size <= T(4) * eps<T>() * scale) break;
    // Roundoff floor reached: further steps no longer shrink.
    if (prev_step >= T(0) && size >= prev_step && size <= T(1e6) * eps<T>() * scale) break;
    prev_step = size;
  }
}

// Newton refinement of a conjugate pair in the realified form
//   A u = alpha u + beta v,  A v = alpha v - beta u
// with u[pin] = 1 and v[pin] = 0.
template <class T>
void refine_pair(const Matrix<T>& a, ConjugatePair<T>& p, std::size_t pin) {
  using std::abs;
  const std::size_t n = a.rows();
  T prev_step(-1);
  for (int it = 0; it < 100; ++it) {
    Vector<T> res(2 * n);
    const Vector<T> au = a * p.u;
    const Vector<T> av = a * p.v;
    for (std::size_t i = 0; i < n; ++i) {
      T r1 = au[i];
      multiply_sub(r1, p.alpha, p.u[i]);
      multiply_sub(r1, p.beta, p.v[i]);
      T r2 = av[i];
      multiply_sub(r2, p.alpha, p.v[i]);
      multiply_add(r2, p.beta, p.u[i]);
      res[i] = -r1;
      res[n + i] = -r2;
    }
    // Unknown layout: u (n), v (n); the pinned slots carry alpha and beta.
    Matrix<T> jac(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        jac(i, j) = a(i, j);
        jac(n + i, n + j) = a(i, j);
      }
      jac(i, i) -= p.alpha;
      jac(n + i, n + i) -= p.alpha;
      jac(i, n + i) = -p.beta;
      jac(n + i, i) = p.beta;
    }
    for (std::size_t i = 0; i < n; ++i) {
      jac(i, pin) = -p.u[i];
      jac(n + i, pin) = -p.v[i];
      jac(i, n + pin) = -p.v[i];
      jac(n + i, n + pin) = p.u[i];
    }
    const Vector<T> step = solve(jac, res);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == pin) {
        p.alpha += step[j];
        p.beta += step[n + j];
      } else {
        p.u[j] += step[j];
        p.v[j] += step[n + j];
      }
    }
    const T size = norm_inf(std::span<const T>(step));
    const T scale = std::max({norm_inf(std::span<const T>(p.u)), norm_inf(std::span<const T>(p.v)),
                              T(abs(p.alpha)), T(abs(p.beta))});
    if (size <= T(4) * eps<T>() * scale) break;
    if (prev_step >= T(0) && size >= prev_step && size <= T(1e6) * eps<T>() * scale) break;
    prev_step = size;
  }
}

inline std::size_t argmax_abs(const std::vector<double>& x) {
  std::size_t k = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (std::abs(x[i]) > std::abs(x[k])) k = i;
  return k;
}

}  // namespace detail

template <class T>
RealPlusPairsSpectrum<T> eig_real_plus_pairs(const Matrix<T>& a) {
  using std::abs;
  if (!a.square()) throw DimensionMismatch("eig_real_plus_pairs: matrix not square");
  const std::size_t n = a.rows();
  if (n % 2 == 0) {
    throw SpectrumShapeViolation("eig_real_plus_pairs: even dimension " + std::to_string(n));
  }
  const detail::EigenSeed seed = detail::seed_real_plus_pairs(a.template cast<double>());

  RealPlusPairsSpectrum<T> out;
  {
    const std::size_t pin = detail::argmax_abs(seed.r);
    out.gamma = T(seed.gamma);
    out.r.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.r[i] = T(seed.r[i] / seed.r[pin]);
    out.r[pin] = T(1);
    detail::refine_real(a, out.gamma, out.r, pin);
    T len = norm2(std::span<const T>(out.r));
    std::size_t big = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (abs(out.r[i]) > abs(out.r[big])) big = i;
    if (out.r[big] < T(0)) len = -len;
    for (auto& x : out.r) x /= len;
  }

  for (const auto& sp : seed.pairs) {
    // Seed with the conjugate vector: eigenvector of alpha - i beta.
    std::vector<double> mags(n);
    for (std::size_t i = 0; i < n; ++i) mags[i] = std::abs(sp.vec[i]);
    const std::size_t pin = detail::argmax_abs(mags);
    const std::complex<double> norm = std::conj(sp.vec[pin]);
    ConjugatePair<T> p{T(sp.alpha), T(sp.beta), Vector<T>(n), Vector<T>(n)};
    for (std::size_t i = 0; i < n; ++i) {
      const std::complex<double> z = std::conj(sp.vec[i]) / norm;
      p.u[i] = T(z.real());
      p.v[i] = T(z.imag());
    }
    p.u[pin] = T(1);
    p.v[pin] = T(0);
    detail::refine_pair(a, p, pin);

    // Rotate so the last component is real and equal to 1.
    const T& ul = p.u[n - 1];
    const T& vl = p.v[n - 1];
    const T m2 = ul * ul + vl * vl;
    if (m2 > eps<T>()) {
      const T re = ul / m2;
      const T im = -vl / m2;
      for (std::size_t i = 0; i < n; ++i) {
        T nu = p.u[i] * re - p.v[i] * im;
        T nv = p.u[i] * im + p.v[i] * re;
        p.u[i] = std::move(nu);
        p.v[i] = std::move(nv);
      }
      p.u[n - 1] = T(1);
      p.v[n - 1] = T(0);
    }
    out.pairs.push_back(std::move(p));
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const ConjugatePair<T>& x, const ConjugatePair<T>& y) { return x.beta < y.beta; });

  // Residual gate: ||A v - lambda v|| <= 1e3 eps ||A|| ||v||.
  const T tol = T(1000) * eps<T>() * norm_inf(a);
  {
    Vector<T> res = a * out.r;
    for (std::size_t i = 0; i < n; ++i) multiply_sub(res[i], out.gamma, out.r[i]);
    if (norm_inf(std::span<const T>(res)) > tol * norm_inf(std::span<const T>(out.r))) {
      throw SpectrumShapeViolation("real eigenpair refinement did not converge");
    }
  }
  for (const auto& p : out.pairs) {
    Vector<T> ru = a * p.u;
    Vector<T> rv = a * p.v;
    for (std::size_t i = 0; i < n; ++i) {
      multiply_sub(ru[i], p.alpha, p.u[i]);
      multiply_sub(ru[i], p.beta, p.v[i]);
      multiply_sub(rv[i], p.alpha, p.v[i]);
      multiply_add(rv[i], p.beta, p.u[i]);
    }
    const T vn = std::max(norm_inf(std::span<const T>(p.u)), norm_inf(std::span<const T>(p.v)));
    if (std::max(norm_inf(std::span<const T>(ru)), norm_inf(std::span<const T>(rv))) > tol * vn) {
      throw SpectrumShapeViolation("complex eigenpair refinement did not converge");
    }
  }
  return out;
}

}  // namespace radau
