#include "radau/mp_real.hpp"

#include <cmath>
#include <memory>
#include <ostream>
#include <stdexcept>

namespace radau::mp {

namespace {
thread_local Precision g_working_precision = kDoubleBits;

struct MpfrStringDeleter {
  void operator()(char* s) const { mpfr_free_str(s); }
};

// Formats with mpfr_get_str and places the decimal exponent explicitly:
// "d.ddddde<exp>".
std::string format_digits(const Real& x, std::size_t digits) {
  if (mpfr_nan_p(x.get())) return "nan";
  if (mpfr_inf_p(x.get())) return mpfr_signbit(x.get()) ? "-inf" : "inf";
  if (mpfr_zero_p(x.get())) return mpfr_signbit(x.get()) ? "-0" : "0";
  mpfr_exp_t exp10 = 0;
  std::unique_ptr<char, MpfrStringDeleter> raw(
      mpfr_get_str(nullptr, &exp10, 10, digits, x.get(), MPFR_RNDN));
  std::string mant(raw.get());
  std::string sign;
  if (!mant.empty() && mant.front() == '-') {
    sign = "-";
    mant.erase(0, 1);
  }
  while (mant.size() > 1 && mant.back() == '0') mant.pop_back();
  std::string out = sign + mant.substr(0, 1);
  if (mant.size() > 1) out += "." + mant.substr(1);
  const long e = static_cast<long>(exp10) - 1;
  if (e != 0) out += "e" + std::to_string(e);
  return out;
}
}  // namespace

Precision working_precision() noexcept { return g_working_precision; }

void set_working_precision(Precision bits) {
  if (bits < MPFR_PREC_MIN || bits > MPFR_PREC_MAX) {
    throw std::invalid_argument("precision out of range: " + std::to_string(bits));
  }
  g_working_precision = bits;
}

Real Real::parse(std::string_view text, Precision bits) {
  Real r(Uninit{}, bits);
  const std::string buf(text);
  char* end = nullptr;
  if (!buf.empty()) mpfr_strtofr(r.v_, buf.c_str(), &end, 10, MPFR_RNDN);
  if (buf.empty() || end != buf.c_str() + buf.size()) {
    throw std::invalid_argument("not a decimal number: '" + buf + "'");
  }
  return r;
}

Real abs(const Real& x) {
  Real r(Real::Uninit{}, x.precision());
  mpfr_abs(r.v_, x.v_, MPFR_RNDN);
  return r;
}

Real sqrt(const Real& x) {
  Real r(Real::Uninit{}, x.precision());
  mpfr_sqrt(r.v_, x.v_, MPFR_RNDN);
  return r;
}

Real exp(const Real& x) {
  Real r(Real::Uninit{}, x.precision());
  mpfr_exp(r.v_, x.v_, MPFR_RNDN);
  return r;
}

Real log(const Real& x) {
  Real r(Real::Uninit{}, x.precision());
  mpfr_log(r.v_, x.v_, MPFR_RNDN);
  return r;
}

Real pow(const Real& x, const Real& y) {
  Real r(Real::Uninit{}, std::max(x.precision(), y.precision()));
  mpfr_pow(r.v_, x.v_, y.v_, MPFR_RNDN);
  return r;
}

Real pow(const Real& x, long n) {
  Real r(Real::Uninit{}, x.precision());
  mpfr_pow_si(r.v_, x.v_, n, MPFR_RNDN);
  return r;
}

Real ldexp(const Real& x, long e) {
  Real r(Real::Uninit{}, x.precision());
  mpfr_mul_2si(r.v_, x.v_, e, MPFR_RNDN);
  return r;
}

Real epsilon(Precision bits) {
  Real one(1.0, bits);
  return ldexp(one, 1 - static_cast<long>(bits));
}

std::string to_string(const Real& x, int digits) {
  return format_digits(x, static_cast<std::size_t>(std::max(digits, 1)));
}

std::string to_shortest_string(const Real& x) {
  if (!isfinite(x) || mpfr_zero_p(x.get())) return format_digits(x, 1);
  const std::size_t upper = mpfr_get_str_ndigits(10, x.precision());
  // Round-tripping is monotone in the digit count, so bisect.
  std::size_t lo = 1;
  std::size_t hi = upper;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    const Real back = Real::parse(format_digits(x, mid), x.precision());
    if (back == x) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return format_digits(x, hi);
}

std::ostream& operator<<(std::ostream& out, const Real& x) {
  const auto p = out.precision();
  return out << to_string(x, static_cast<int>(p > 0 ? p : 6));
}

}  // namespace radau::mp
