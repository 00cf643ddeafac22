#pragma once

// Radau IIA Butcher tableaus of any odd stage count, derived from the nodes
// of the Radau polynomial, plus the embedded weights used for error control
// and a cache keyed by (stage count, precision).

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <utility>

#include "radau/eigen.hpp"
#include "radau/errors.hpp"
#include "radau/linalg.hpp"
#include "radau/poly.hpp"
#include "radau/scalar.hpp"

namespace radau {

inline constexpr int kDefaultMaxStages = 13;

template <class T>
struct RadauTableau {
  int s = 0;
  long precision_bits = 0;
  Vector<T> c;
  Matrix<T> a;
  Vector<T> b;
  // Embedded formula: y~ = y_n + dt (b_tilde0 f(t_n, y_n) + sum_j b_tilde[j] k_j).
  Vector<T> b_tilde;
  T b_tilde0 = T(0);

  int order() const noexcept { return 2 * s - 1; }
  int embedded_order() const noexcept { return s; }
};

inline void check_stage_count(int s) {
  if (s < 1 || s % 2 == 0) {
    throw std::invalid_argument("stage count must be odd and positive, got " + std::to_string(s));
  }
}

// Roots of d^(s-1)/dx^(s-1) [x^(s-1) (x-1)^s] at the working precision,
// ascending; the last node is exactly 1.
template <class T>
Vector<T> radau_nodes(int s) {
  if (s < 1) throw std::invalid_argument("stage count must be positive");
  const Vector<T> p = to_real_coefficients<T>(radau_polynomial_coefficients(s));
  return poly_roots_real(p, T(0), T(1), static_cast<std::size_t>(s));
}

// Weights of the quadrature on nodes {0, c_1..c_s} with a prescribed weight
// at 0, exact for polynomials of degree < s:
//   weight_at_zero * [k == 1] + sum_j w_j c_j^(k-1) = 1/k,  k = 1..s.
// With weight_at_zero = 0 this is the interpolatory quadrature on c.
template <class T>
Vector<T> embedded_weights(const Vector<T>& c, const T& weight_at_zero = T(0)) {
  const std::size_t s = c.size();
  Matrix<T> vt(s, s);
  Vector<T> rhs(s);
  for (std::size_t k = 0; k < s; ++k) {
    for (std::size_t j = 0; j < s; ++j) vt(k, j) = k == 0 ? T(1) : T(vt(k - 1, j) * c[j]);
    rhs[k] = T(1) / T(static_cast<long>(k + 1));
  }
  rhs[0] -= weight_at_zero;
  return solve(vt, rhs);
}

// Builds the tableau at the working precision:
//   c_powers[i][j] = c_i^j,  c_q[i][j] = c_i^(j+1)/(j+1),  a = c_q c_powers^-1,
// b = last row of a, embedded weight at zero = real eigenvalue of a.
template <class T>
RadauTableau<T> build_tableau_at_working_precision(int s) {
  check_stage_count(s);
  RadauTableau<T> tab;
  tab.s = s;
  tab.precision_bits = ScalarTraits<T>::precision();
  tab.c = radau_nodes<T>(s);
  const auto n = static_cast<std::size_t>(s);
  Matrix<T> c_powers(n, n);
  Matrix<T> c_q(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    T power(1);
    for (std::size_t j = 0; j < n; ++j) {
      c_powers(i, j) = power;
      power = power * tab.c[i];
      c_q(i, j) = power / T(static_cast<long>(j + 1));
    }
  }
  tab.a = c_q * mat_inverse(c_powers);
  tab.b.assign(tab.a.row(n - 1).begin(), tab.a.row(n - 1).end());
  const auto spectrum = eig_real_plus_pairs(mat_inverse(tab.a));
  tab.b_tilde0 = T(1) / spectrum.gamma;
  tab.b_tilde = embedded_weights(tab.c, tab.b_tilde0);
  return tab;
}

// Extra significand bits used while deriving coefficients that are then
// rounded to the target precision.
inline long guard_precision(long bits) { return std::max<long>(bits + 64, 128); }

template <class U, class T>
RadauTableau<U> round_tableau(const RadauTableau<T>& src, long bits) {
  RadauTableau<U> out;
  out.s = src.s;
  out.precision_bits = bits;
  out.c = cast_vector<U>(src.c);
  out.a = src.a.template cast<U>();
  out.b = cast_vector<U>(src.b);
  out.b_tilde = cast_vector<U>(src.b_tilde);
  out.b_tilde0 = convert<U>(src.b_tilde0);
  return out;
}

inline void check_precision_for_double(long bits) {
  if (bits != 53) {
    throw std::invalid_argument("double tableaus have 53-bit precision, requested " + std::to_string(bits));
  }
}

// Tableau at `precision_bits`, derived with guard bits and rounded once.
template <class T>
RadauTableau<T> build_tableau(int s, long precision_bits) {
  check_stage_count(s);
  if constexpr (!ScalarTraits<T>::extended) check_precision_for_double(precision_bits);
  if (precision_bits < 53) throw std::invalid_argument("precision must be at least 53 bits");
  RadauTableau<mp::Real> wide;
  {
    mp::PrecisionScope guard(guard_precision(precision_bits));
    wide = build_tableau_at_working_precision<mp::Real>(s);
  }
  typename ScalarTraits<T>::Scope scope(precision_bits);
  auto out = round_tableau<T>(wide, precision_bits);
  // b is the last row of a by definition; share the rounded values.
  out.b.assign(out.a.row(out.a.rows() - 1).begin(), out.a.row(out.a.rows() - 1).end());
  return out;
}

// R(z) = 1 + z b^T (I - z a)^-1 1 for z = x + i y, returned as (Re, Im).
template <class T>
std::pair<T, T> stability_function(const RadauTableau<T>& tab, const T& x, const T& y) {
  const auto n = static_cast<std::size_t>(tab.s);
  Matrix<T> m(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const T xa = (i == j ? T(1) : T(0)) - x * tab.a(i, j);
      const T ya = y * tab.a(i, j);
      m(i, j) = xa;
      m(n + i, n + j) = xa;
      m(i, n + j) = ya;
      m(n + i, j) = -ya;
    }
  Vector<T> rhs(2 * n, T(0));
  for (std::size_t i = 0; i < n; ++i) rhs[i] = T(1);
  const Vector<T> pq = solve(m, rhs);
  T bp(0), bq(0);
  for (std::size_t i = 0; i < n; ++i) {
    multiply_add(bp, tab.b[i], pq[i]);
    multiply_add(bq, tab.b[i], pq[n + i]);
  }
  return {T(1) + x * bp - y * bq, x * bq + y * bp};
}

// Thread-safe map (stage count, precision bits) -> immutable value. Readers
// share; insertion is exclusive. Two threads racing on a first build may
// both build, but only the first stored value is ever returned.
template <class V>
class KeyedCache {
 public:
  using Key = std::pair<int, long>;

  template <class Build>
  std::shared_ptr<const V> get_or_build(int s, long bits, Build&& build) {
    const Key key{s, bits};
    {
      std::shared_lock lock(mutex_);
      if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    auto fresh = std::make_shared<const V>(build());
    builds_.fetch_add(1, std::memory_order_relaxed);
    std::unique_lock lock(mutex_);
    auto [it, inserted] = entries_.emplace(key, std::move(fresh));
    return it->second;
  }

  bool contains(int s, long bits) const {
    std::shared_lock lock(mutex_);
    return entries_.count(Key{s, bits}) != 0;
  }
  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }
  // Number of times a value was constructed (cache misses, including races).
  std::size_t builds() const noexcept { return builds_.load(std::memory_order_relaxed); }

 private:
  mutable std::shared_mutex mutex_;
  std::map<Key, std::shared_ptr<const V>> entries_;
  std::atomic<std::size_t> builds_{0};
};

template <class T>
class TableauCache {
 public:
  std::shared_ptr<const RadauTableau<T>> get_or_build(int s, long bits) {
    return cache_.get_or_build(s, bits, [&] { return build_tableau<T>(s, bits); });
  }

  // Pre-derives the tableaus for the given method orders (order = 2s - 1).
  void prewarm(std::initializer_list<int> orders, long bits) {
    for (int order : orders) get_or_build((order + 1) / 2, bits);
  }

  bool contains(int s, long bits) const { return cache_.contains(s, bits); }
  std::size_t size() const { return cache_.size(); }
  std::size_t builds() const noexcept { return cache_.builds(); }

 private:
  KeyedCache<RadauTableau<T>> cache_;
};

template <class T>
std::shared_ptr<const RadauTableau<T>> cache_get_or_build(TableauCache<T>& cache, int s, long bits) {
  return cache.get_or_build(s, bits);
}

}  // namespace radau
