#pragma once

// Thin RAII value type over an MPFR number with an explicit significand
// width in bits. Each value carries its own precision; binary operations
// produce a result at the wider of the two operand precisions. Values built
// from machine numbers or strings without an explicit width use the
// thread-local working precision (see PrecisionScope).

#include <mpfr.h>

#include <algorithm>
#include <concepts>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>

namespace radau::mp {

using Precision = mpfr_prec_t;

inline constexpr Precision kDoubleBits = 53;

Precision working_precision() noexcept;
void set_working_precision(Precision bits);

// Sets the working precision for the current thread for the lifetime of the
// scope and restores the previous value on exit.
class PrecisionScope {
 public:
  explicit PrecisionScope(Precision bits) : saved_(working_precision()) {
    set_working_precision(bits);
  }
  ~PrecisionScope() { set_working_precision(saved_); }
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  Precision saved_;
};

class Real {
 public:
  Real() { init(working_precision()); mpfr_set_zero(v_, 1); }
  Real(double x) { init(working_precision()); mpfr_set_d(v_, x, MPFR_RNDN); }
  template <std::signed_integral I>
  Real(I x) { init(working_precision()); mpfr_set_si(v_, static_cast<long>(x), MPFR_RNDN); }
  template <std::unsigned_integral I>
  Real(I x) { init(working_precision()); mpfr_set_ui(v_, static_cast<unsigned long>(x), MPFR_RNDN); }

  // Rounds `x` to `bits` significand bits.
  Real(const Real& x, Precision bits) { init(bits); mpfr_set(v_, x.v_, MPFR_RNDN); }
  Real(double x, Precision bits) { init(bits); mpfr_set_d(v_, x, MPFR_RNDN); }

  // Parses a decimal literal ("8.375e-3", "-inf", ...). Throws
  // std::invalid_argument on malformed input.
  static Real parse(std::string_view text, Precision bits = working_precision());

  Real(const Real& o) { init(o.precision()); mpfr_set(v_, o.v_, MPFR_RNDN); }
  Real(Real&& o) noexcept {
    v_->_mpfr_d = nullptr;
    mpfr_swap(v_, o.v_);
  }
  Real& operator=(const Real& o) {
    if (this == &o) return *this;
    if (!initialized()) {
      init(o.precision());
    } else if (precision() != o.precision()) {
      mpfr_set_prec(v_, o.precision());
    }
    mpfr_set(v_, o.v_, MPFR_RNDN);
    return *this;
  }
  Real& operator=(Real&& o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~Real() {
    if (initialized()) mpfr_clear(v_);
  }

  Precision precision() const noexcept { return mpfr_get_prec(v_); }
  mpfr_srcptr get() const noexcept { return v_; }
  mpfr_ptr get() noexcept { return v_; }

  double to_double() const noexcept { return mpfr_get_d(v_, MPFR_RNDN); }
  explicit operator double() const noexcept { return to_double(); }

  Real& operator+=(const Real& o) { widen_to(o); mpfr_add(v_, v_, o.v_, MPFR_RNDN); return *this; }
  Real& operator-=(const Real& o) { widen_to(o); mpfr_sub(v_, v_, o.v_, MPFR_RNDN); return *this; }
  Real& operator*=(const Real& o) { widen_to(o); mpfr_mul(v_, v_, o.v_, MPFR_RNDN); return *this; }
  Real& operator/=(const Real& o) { widen_to(o); mpfr_div(v_, v_, o.v_, MPFR_RNDN); return *this; }

  Real operator-() const& { Real r(*this); mpfr_neg(r.v_, r.v_, MPFR_RNDN); return r; }
  Real operator-() && { mpfr_neg(v_, v_, MPFR_RNDN); return std::move(*this); }
  Real operator+() const { return *this; }

  // acc += a * b with a single rounding.
  void fma_accumulate(const Real& a, const Real& b) {
    widen_to(a);
    widen_to(b);
    mpfr_fma(v_, a.v_, b.v_, v_, MPFR_RNDN);
  }
  // acc -= a * b with a single rounding.
  void fms_accumulate(const Real& a, const Real& b) {
    widen_to(a);
    widen_to(b);
    mpfr_fms(v_, a.v_, b.v_, v_, MPFR_RNDN);
    mpfr_neg(v_, v_, MPFR_RNDN);
  }

  friend Real operator+(const Real& a, const Real& b) { return binary(mpfr_add, a, b); }
  friend Real operator-(const Real& a, const Real& b) { return binary(mpfr_sub, a, b); }
  friend Real operator*(const Real& a, const Real& b) { return binary(mpfr_mul, a, b); }
  friend Real operator/(const Real& a, const Real& b) { return binary(mpfr_div, a, b); }
  friend Real operator+(Real&& a, const Real& b) { return reuse_left(mpfr_add, std::move(a), b); }
  friend Real operator-(Real&& a, const Real& b) { return reuse_left(mpfr_sub, std::move(a), b); }
  friend Real operator*(Real&& a, const Real& b) { return reuse_left(mpfr_mul, std::move(a), b); }
  friend Real operator/(Real&& a, const Real& b) { return reuse_left(mpfr_div, std::move(a), b); }
  friend Real operator+(const Real& a, Real&& b) { return reuse_right(mpfr_add, a, std::move(b)); }
  friend Real operator-(const Real& a, Real&& b) { return reuse_right(mpfr_sub, a, std::move(b)); }
  friend Real operator*(const Real& a, Real&& b) { return reuse_right(mpfr_mul, a, std::move(b)); }
  friend Real operator/(const Real& a, Real&& b) { return reuse_right(mpfr_div, a, std::move(b)); }
  friend Real operator+(Real&& a, Real&& b) { return reuse_left(mpfr_add, std::move(a), b); }
  friend Real operator-(Real&& a, Real&& b) { return reuse_left(mpfr_sub, std::move(a), b); }
  friend Real operator*(Real&& a, Real&& b) { return reuse_left(mpfr_mul, std::move(a), b); }
  friend Real operator/(Real&& a, Real&& b) { return reuse_left(mpfr_div, std::move(a), b); }

  friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
  friend bool operator<(const Real& a, const Real& b) { return mpfr_less_p(a.v_, b.v_) != 0; }
  friend bool operator<=(const Real& a, const Real& b) { return mpfr_lessequal_p(a.v_, b.v_) != 0; }
  friend bool operator>(const Real& a, const Real& b) { return mpfr_greater_p(a.v_, b.v_) != 0; }
  friend bool operator>=(const Real& a, const Real& b) { return mpfr_greaterequal_p(a.v_, b.v_) != 0; }

 private:
  struct Uninit {};
  Real(Uninit, Precision bits) { init(bits); }

  bool initialized() const noexcept { return v_->_mpfr_d != nullptr; }
  void init(Precision bits) { mpfr_init2(v_, bits); }
  void widen_to(const Real& o) {
    if (o.precision() > precision()) mpfr_prec_round(v_, o.precision(), MPFR_RNDN);
  }

  using BinaryFn = int (*)(mpfr_ptr, mpfr_srcptr, mpfr_srcptr, mpfr_rnd_t);
  static Real binary(BinaryFn fn, const Real& a, const Real& b) {
    Real r(Uninit{}, std::max(a.precision(), b.precision()));
    fn(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  static Real reuse_left(BinaryFn fn, Real&& a, const Real& b) {
    if (a.precision() < b.precision()) return binary(fn, a, b);
    fn(a.v_, a.v_, b.v_, MPFR_RNDN);
    return std::move(a);
  }
  static Real reuse_right(BinaryFn fn, const Real& a, Real&& b) {
    if (b.precision() < a.precision()) return binary(fn, a, b);
    fn(b.v_, a.v_, b.v_, MPFR_RNDN);
    return std::move(b);
  }

  mpfr_t v_;

  friend Real abs(const Real&);
  friend Real sqrt(const Real&);
  friend Real exp(const Real&);
  friend Real log(const Real&);
  friend Real pow(const Real&, const Real&);
  friend Real pow(const Real&, long);
  friend Real ldexp(const Real&, long);
};

Real abs(const Real& x);
inline Real fabs(const Real& x) { return abs(x); }
Real sqrt(const Real& x);
Real exp(const Real& x);
Real log(const Real& x);
Real pow(const Real& x, const Real& y);
Real pow(const Real& x, long n);
inline Real pow(const Real& x, int n) { return pow(x, static_cast<long>(n)); }
Real ldexp(const Real& x, long e);

inline bool isfinite(const Real& x) { return mpfr_number_p(x.get()) != 0; }
inline bool isnan(const Real& x) { return mpfr_nan_p(x.get()) != 0; }
inline bool signbit(const Real& x) { return mpfr_signbit(x.get()) != 0; }
inline double to_double(const Real& x) { return x.to_double(); }

// 2^(1 - bits): spacing of representable numbers just above 1.
Real epsilon(Precision bits);

// Shortest decimal string that parses back to exactly `x` at its precision.
std::string to_shortest_string(const Real& x);
// Decimal string with `digits` significant digits.
std::string to_string(const Real& x, int digits);

std::ostream& operator<<(std::ostream& out, const Real& x);

}  // namespace radau::mp
