#include "doctest.h"

#include <sstream>
#include <thread>

#include "radau/mp_real.hpp"
#include "radau/scalar.hpp"

using radau::mp::PrecisionScope;
using radau::mp::Real;

TEST_CASE("working precision is scoped per thread") {
  CHECK(radau::mp::working_precision() == 53);
  {
    PrecisionScope outer(256);
    CHECK(Real(1).precision() == 256);
    {
      PrecisionScope inner(113);
      CHECK(Real(1).precision() == 113);
    }
    CHECK(radau::mp::working_precision() == 256);
    long other = 0;
    std::thread t([&] { other = radau::mp::working_precision(); });
    t.join();
    CHECK(other == 53);
  }
  CHECK(radau::mp::working_precision() == 53);
}

TEST_CASE("mixed precision operands promote to the wider precision") {
  const Real narrow(1.0, 64);
  const Real wide(3.0, 200);
  CHECK((narrow + wide).precision() == 200);
  CHECK((wide * narrow).precision() == 200);
  CHECK((narrow / wide).precision() == 200);
  Real acc(0.0, 64);
  acc += wide;
  CHECK(acc.precision() == 200);
  // A rvalue operand is reused only when it is already wide enough.
  CHECK((Real(1.0, 64) - wide).precision() == 200);
}

TEST_CASE("unit roundoff is 2^(1-p)") {
  for (long p : {53L, 113L, 256L}) {
    PrecisionScope scope(p);
    const Real e = radau::eps<Real>();
    const Real one(1);
    CHECK(one + e > one);
    CHECK(one + e / Real(2) == one);
    CHECK(e == radau::mp::ldexp(one, 1 - p));
  }
  CHECK(radau::eps<double>() == std::numeric_limits<double>::epsilon());
}

TEST_CASE("decimal parsing is exact at the working precision") {
  PrecisionScope scope(256);
  const Real tenth = Real::parse("0.1");
  const Real ten(10);
  // 0.1 parsed at 256 bits is far closer to 1/10 than the double 0.1.
  CHECK(radau::mp::abs(tenth * ten - Real(1)) < radau::mp::ldexp(Real(1), -250));
  CHECK(radau::mp::abs(Real(0.1) * ten - Real(1)) > radau::mp::ldexp(Real(1), -60));
  CHECK_THROWS_AS(Real::parse("1.2.3"), std::invalid_argument);
  CHECK_THROWS_AS(Real::parse(""), std::invalid_argument);
  CHECK(radau::constant<double>("8.375e-3") == 8.375e-3);
  CHECK_THROWS_AS(radau::constant<double>("x"), std::invalid_argument);
}

TEST_CASE("shortest decimal strings round-trip") {
  for (long p : {53L, 100L, 256L}) {
    PrecisionScope scope(p);
    const Real third = Real(1) / Real(3);
    const Real big = radau::mp::exp(Real(100));
    const Real small = -radau::mp::sqrt(Real(2)) / Real(1e30);
    for (const Real& x : {third, big, small, Real(0.5), Real(-7), Real(0)}) {
      const std::string s = radau::mp::to_shortest_string(x);
      CHECK(Real::parse(s, p) == x);
    }
  }
  PrecisionScope scope(53);
  CHECK(radau::mp::to_shortest_string(Real(0.5)) == "5e-1");
  CHECK(radau::mp::to_shortest_string(Real(0.1)) == "1e-1");
  CHECK(radau::ScalarTraits<double>::to_string(0.1) == "0.1");
}

TEST_CASE("moved-from values can be reassigned") {
  Real a(2.0);
  Real b(std::move(a));
  a = Real(5.0);
  CHECK(a == Real(5.0));
  CHECK(b == Real(2.0));
  Real c = std::move(b) * Real(3.0);
  CHECK(c == Real(6.0));
}

TEST_CASE("fused accumulation rounds once") {
  PrecisionScope scope(64);
  Real acc(1);
  radau::multiply_add(acc, Real(2), Real(3));
  CHECK(acc == Real(7));
  radau::multiply_sub(acc, Real(2), Real(3));
  CHECK(acc == Real(1));
}
