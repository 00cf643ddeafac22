#include "doctest.h"

#include <random>

#include "radau/problems.hpp"

using radau::Matrix;
using radau::Vector;

namespace {

Vector<double> rhs(const radau::OdeProblem<double>& p, const Vector<double>& y, double t = 0.0) {
  Vector<double> dy(y.size());
  p.f(t, y, dy);
  return dy;
}

// Largest violation of |J - J_fd| <= 1e-5 (1 + |J|). The central
// differences run at 256 bits so roundoff cannot mask a wrong entry even for
// rate constants near 1e12.
double jacobian_mismatch(const std::string& name, const Vector<double>& y) {
  using radau::mp::Real;
  const std::size_t n = y.size();
  const auto dp = radau::make_problem<double>(name);
  Matrix<double> J(n, n);
  dp.prob.jac(0.0, y, J);
  radau::mp::PrecisionScope scope(256);
  const auto wp = radau::make_problem<Real>(name);
  const Real h = radau::constant<Real>("1e-20");
  double worst = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    Vector<Real> yp(n), ym(n), fp(n), fm(n);
    for (std::size_t i = 0; i < n; ++i) yp[i] = ym[i] = Real(y[i]);
    yp[j] += h;
    ym[j] -= h;
    wp.prob.f(Real(0), yp, fp);
    wp.prob.f(Real(0), ym, fm);
    for (std::size_t i = 0; i < n; ++i) {
      const double fd = radau::to_double(Real((fp[i] - fm[i]) / (Real(2) * h)));
      worst = std::max(worst, std::abs(J(i, j) - fd) / (1e-5 * (1.0 + std::abs(J(i, j)))));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("oregonator") {
  const auto np = radau::oregonator<double>();
  CHECK(np.prob.y0 == Vector<double>{1.0, 2.0, 3.0});
  CHECK(np.prob.tf == 30.0);
  const auto f = rhs(np.prob, np.prob.y0);
  CHECK(f[0] == doctest::Approx(76.62286375).epsilon(1e-10));
  CHECK(f[1] == doctest::Approx(-1.0 / 77.27).epsilon(1e-12));
  CHECK(f[2] == doctest::Approx(-0.322).epsilon(1e-12));
  CHECK(np.protocol.rtol_exponents.front() == -5);
  CHECK(np.protocol.rtol_exponents.back() == -12);
  CHECK(np.protocol.atol_offset == -2);
}

TEST_CASE("robertson") {
  const auto np = radau::robertson<double>();
  CHECK(np.prob.y0 == Vector<double>{1.0, 0.0, 0.0});
  CHECK(np.prob.tf == 1e5);
  CHECK(rhs(np.prob, np.prob.y0) == Vector<double>{-0.04, 0.04, 0.0});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const Vector<double> y{u(rng), 1e-4 * u(rng), u(rng)};
    const auto f = rhs(np.prob, y);
    CHECK(std::abs(f[0] + f[1] + f[2]) <= 1e-12 * (std::abs(f[0]) + std::abs(f[1]) + std::abs(f[2])));
  }
  CHECK(np.protocol.rtol_exponents.size() == 5);
  CHECK(np.protocol.atol_offset == -5);
}

TEST_CASE("hires") {
  const auto np = radau::hires<double>();
  CHECK(np.prob.tf == 321.8122);
  CHECK(np.prob.y0.size() == 8);
  CHECK(np.prob.y0[7] == 0.0057);
  const auto f = rhs(np.prob, np.prob.y0);
  CHECK(f[0] == doctest::Approx(-1.7093).epsilon(1e-14));
  CHECK(f[1] == doctest::Approx(1.71).epsilon(1e-14));
  CHECK(np.protocol.rtol_exponents.size() == 6);
}

TEST_CASE("pollution") {
  const auto np = radau::pollution<double>();
  CHECK(np.prob.y0.size() == 20);
  CHECK(np.prob.tf == 60.0);
  const auto f = rhs(np.prob, np.prob.y0);
  CHECK(f[11] == 0.0);  // species 12: k9 y11 y2 with y11 = 0
  CHECK(f[14] == 0.0);  // species 15: k14 y1 y6 with y1 = 0
  // Hand evaluation of species 5 at y0: 2 k4 y7 + k7 y9 = 2 (0.00086)(0.1) + 0.00013 (0.017).
  CHECK(f[4] == doctest::Approx(2 * 0.00086 * 0.1 + 0.00013 * 0.017).epsilon(1e-13));
  CHECK(np.protocol.rtol_exponents.front() == -4);
  CHECK(np.protocol.rtol_exponents.back() == -9);
  CHECK(np.protocol.atol_offset == -4);
}

TEST_CASE("analytic Jacobians match central differences at random states") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& name : radau::problem_names()) {
    CAPTURE(name);
    const auto np = radau::make_problem<double>(name);
    for (int trial = 0; trial < 20; ++trial) {
      Vector<double> y(np.prob.dim());
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = np.prob.y0[i] + 0.5 * u(rng);
      CHECK(jacobian_mismatch(name, y) <= 1.0);
    }
    for (double v : rhs(np.prob, np.prob.y0)) CHECK(std::isfinite(v));
  }
}

TEST_CASE("registry") {
  const auto reg = radau::problem_registry<double>();
  CHECK(reg.size() == 4);
  CHECK(reg.at("robertson").name == "robertson");
  CHECK(reg.at("hires").prob.dim() == 8);
  CHECK_THROWS_AS(radau::make_problem<double>("lorenz"), radau::UnknownProblem);
}

TEST_CASE("extended-precision instances share the definitions") {
  radau::mp::PrecisionScope scope(256);
  const auto np = radau::oregonator<radau::mp::Real>();
  Vector<radau::mp::Real> dy(3);
  np.prob.f(radau::mp::Real(0), np.prob.y0, dy);
  // 77.27 (2 + 1 (1 - 0.008375 - 2)) computed exactly in decimal.
  const auto expected = radau::constant<radau::mp::Real>("76.62286375");
  CHECK(radau::mp::abs(dy[0] - expected) < radau::mp::ldexp(radau::mp::Real(1), -240));
}
