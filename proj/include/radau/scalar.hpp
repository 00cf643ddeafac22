#pragma once

// Uniform access to the two scalar types the library is instantiated for:
// machine double (53 significand bits) and mp::Real (any width >= 53).

#include <charconv>
#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

#include "radau/mp_real.hpp"

namespace radau {

template <class T>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static constexpr bool extended = false;

  // Working precision in bits.
  static long precision() { return 53; }
  static long precision_of(double) { return 53; }
  static double epsilon() { return 0x1p-52; }

  static double parse(std::string_view text) {
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      throw std::invalid_argument("not a decimal number: '" + std::string(text) + "'");
    }
    return v;
  }
  static std::string to_string(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
  }
  static double round_from(const mp::Real& x) { return x.to_double(); }
  static mp::Real widen(double x, long bits) { return mp::Real(x, bits); }
  static double to_double(double x) { return x; }

  // No precision state to carry for machine doubles.
  struct Scope {
    explicit Scope(long) {}
  };
};

template <>
struct ScalarTraits<mp::Real> {
  static constexpr bool extended = true;

  static long precision() { return mp::working_precision(); }
  static long precision_of(const mp::Real& x) { return x.precision(); }
  static mp::Real epsilon() { return mp::epsilon(mp::working_precision()); }

  static mp::Real parse(std::string_view text) { return mp::Real::parse(text); }
  static std::string to_string(const mp::Real& x) { return mp::to_shortest_string(x); }
  static mp::Real round_from(const mp::Real& x) { return mp::Real(x, mp::working_precision()); }
  static mp::Real widen(const mp::Real& x, long bits) { return mp::Real(x, bits); }
  static double to_double(const mp::Real& x) { return x.to_double(); }

  using Scope = mp::PrecisionScope;
};

template <class T>
T eps() {
  return ScalarTraits<T>::epsilon();
}

// Decimal constant at the working precision (exact parse, not via double).
template <class T>
T constant(std::string_view text) {
  return ScalarTraits<T>::parse(text);
}

template <class T>
double to_double(const T& x) {
  return ScalarTraits<T>::to_double(x);
}

// Converts between scalar types, rounding to the working precision of U.
template <class U, class T>
U convert(const T& x) {
  if constexpr (std::same_as<T, double>) {
    return U(x);
  } else {
    return ScalarTraits<U>::round_from(x);
  }
}

// acc += a * b
inline void multiply_add(double& acc, double a, double b) { acc += a * b; }
inline void multiply_add(mp::Real& acc, const mp::Real& a, const mp::Real& b) {
  acc.fma_accumulate(a, b);
}

// acc -= a * b
inline void multiply_sub(double& acc, double a, double b) { acc -= a * b; }
inline void multiply_sub(mp::Real& acc, const mp::Real& a, const mp::Real& b) {
  acc.fms_accumulate(a, b);
}

inline bool is_finite(double x) { return std::isfinite(x); }
inline bool is_finite(const mp::Real& x) { return mp::isfinite(x); }

}  // namespace radau
