#pragma once

// Real polynomials with coefficients in ascending degree order and a
// bracketing root finder for polynomials with simple real roots in (lo, hi].

#include <gmpxx.h>

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "radau/errors.hpp"
#include "radau/linalg.hpp"
#include "radau/scalar.hpp"

namespace radau {

// Exact integer coefficients of d^(s-1)/dx^(s-1) [x^(s-1) (x-1)^s], ascending.
std::vector<mpz_class> radau_polynomial_coefficients(int s);

template <class T>
T mpz_to(const mpz_class& z) {
  return constant<T>(z.get_str());
}

template <class T>
Vector<T> to_real_coefficients(const std::vector<mpz_class>& coeffs) {
  Vector<T> out;
  out.reserve(coeffs.size());
  for (const auto& c : coeffs) out.push_back(mpz_to<T>(c));
  return out;
}

// Horner evaluation of p and p'.
template <class T>
void poly_eval(const Vector<T>& coeffs, const T& x, T& value, T& derivative) {
  value = T(0);
  derivative = T(0);
  for (std::size_t k = coeffs.size(); k-- > 0;) {
    derivative = derivative * x + value;
    value = value * x + coeffs[k];
  }
}

template <class T>
T poly_value(const Vector<T>& coeffs, const T& x) {
  T v(0);
  for (std::size_t k = coeffs.size(); k-- > 0;) v = v * x + coeffs[k];
  return v;
}

struct RootSearch {
  // Subintervals per unit of expected root count squared; roots of
  // orthogonal-type polynomials cluster like 1/s^2 near the ends.
  int grid_density = 64;
  int max_newton_iterations = 200;
};

// Locates `expected` simple real roots of `coeffs` in (lo, hi] by sign
// changes on a uniform grid, then polishes each with safeguarded Newton at
// the working precision. Roots are returned ascending. A root sitting at
// `hi` itself is detected from the residual there.
template <class T>
Vector<T> poly_roots_real(const Vector<T>& coeffs, const T& lo, const T& hi, std::size_t expected,
                          const RootSearch& cfg = {}) {
  using std::abs;
  T coeff_scale(0);
  for (const auto& c : coeffs) coeff_scale = std::max(coeff_scale, T(abs(c)));
  const T tol = T(64) * eps<T>() * coeff_scale;

  Vector<T> roots;
  T v_hi = poly_value(coeffs, hi);
  const bool root_at_hi = abs(v_hi) <= tol;

  const long n_grid = std::max<long>(64, static_cast<long>(cfg.grid_density) *
                                             static_cast<long>(expected * expected));
  const T width = (hi - lo) / T(n_grid);
  T x_prev = lo;
  T v_prev = poly_value(coeffs, lo);
  for (long k = 1; k <= n_grid; ++k) {
    const bool last = k == n_grid;
    T x = last ? hi : lo + width * T(k);
    T v = last ? v_hi : poly_value(coeffs, x);
    if (last && root_at_hi) break;
    if (v == T(0)) {
      roots.push_back(x);
      // Skip the exact zero so the next interval starts off-root.
      x_prev = x;
      v_prev = v;
      continue;
    }
    if (v_prev != T(0) && ((v_prev < T(0)) != (v < T(0)))) {
      // Bracketed root: Newton with bisection fallback.
      T a = x_prev, b = x;
      T fa = v_prev;
      T r = (a + b) / T(2);
      for (int it = 0; it < cfg.max_newton_iterations; ++it) {
        T f, df;
        poly_eval(coeffs, r, f, df);
        if (f == T(0)) break;
        if ((f < T(0)) == (fa < T(0))) {
          a = r;
          fa = f;
        } else {
          b = r;
        }
        T next = df != T(0) ? T(r - f / df) : T((a + b) / T(2));
        if (!(next > a && next < b)) next = (a + b) / T(2);
        const T step = abs(next - r);
        r = std::move(next);
        if (step <= eps<T>() * abs(r)) break;
      }
      roots.push_back(r);
    }
    x_prev = std::move(x);
    v_prev = std::move(v);
  }
  if (root_at_hi) roots.push_back(hi);

  if (roots.size() != expected) {
    throw RootCountMismatch("expected " + std::to_string(expected) + " roots, found " +
                            std::to_string(roots.size()));
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace radau
