#include "doctest.h"

#include <cmath>
#include <random>

#include "radau/solver.hpp"

using radau::Matrix;
using radau::OdeProblem;
using radau::SolverOptions;
using radau::Vector;
using radau::mp::PrecisionScope;
using radau::mp::Real;

namespace {

template <class T>
OdeProblem<T> decay(T lambda, T tf = T(1)) {
  OdeProblem<T> p;
  p.f = [lambda](const T&, std::span<const T> y, std::span<T> dy) { dy[0] = lambda * y[0]; };
  p.jac = [lambda](const T&, std::span<const T>, Matrix<T>& J) { J(0, 0) = lambda; };
  p.y0 = {T(1)};
  p.t0 = T(0);
  p.tf = tf;
  return p;
}

template <class T>
SolverOptions<T> tolerances(T rtol, T atol) {
  SolverOptions<T> o;
  o.rtol = rtol;
  o.atol = {atol};
  return o;
}

}  // namespace

TEST_CASE("zero right-hand side keeps the state exactly") {
  OdeProblem<double> p;
  p.f = [](const double&, std::span<const double>, std::span<double> dy) { dy[0] = 0.0; };
  p.y0 = {1.0};
  const auto sol = radau::solve(p, SolverOptions<double>{});
  REQUIRE(sol.ok());
  CHECK(sol.ys.back()[0] == 1.0);
  CHECK(sol.stats.n_rejected == 0);
  CHECK(sol.ts.back() == 1.0);
  CHECK(radau::initial_dt(p, SolverOptions<double>{}, 5) == doctest::Approx(0.01));
}

TEST_CASE("exponential decay to 1e-8") {
  const auto sol = radau::solve(decay(-1.0), tolerances(1e-10, 1e-10));
  REQUIRE(sol.ok());
  CHECK(std::abs(sol.ys.back()[0] - std::exp(-1.0)) < 1e-8);
  for (std::size_t i = 1; i < sol.ts.size(); ++i) CHECK(sol.ts[i - 1] < sol.ts[i]);
  CHECK(sol.ts.front() == 0.0);
  CHECK(sol.ts.back() == 1.0);
  const auto& st = sol.stats;
  CHECK(st.n_newton_iters >= st.n_steps + st.n_rejected);
  CHECK(sol.orders.size() == st.n_steps);
}

TEST_CASE("finite-difference Jacobian fallback") {
  auto p = decay(-2.0);
  p.jac = nullptr;
  const auto sol = radau::solve(p, tolerances(1e-9, 1e-12));
  REQUIRE(sol.ok());
  CHECK(std::abs(sol.ys.back()[0] - std::exp(-2.0)) < 1e-7);
}

TEST_CASE("linear problems converge in one Newton iteration") {
  // y' = A y with the exact Jacobian: the simplified Newton step is exact.
  OdeProblem<double> p;
  p.f = [](const double&, std::span<const double> y, std::span<double> dy) {
    dy[0] = -2.0 * y[0] + y[1];
    dy[1] = y[0] - 3.0 * y[1];
  };
  p.jac = [](const double&, std::span<const double>, Matrix<double>& J) {
    J(0, 0) = -2.0;
    J(0, 1) = 1.0;
    J(1, 0) = 1.0;
    J(1, 1) = -3.0;
  };
  p.y0 = {1.0, 0.5};
  const auto m = radau::method_for<double>(3, 53);
  radau::SolverState<double> st;
  st.n = 2;
  st.y = p.y0;
  st.dt = 0.1;
  st.Z.assign(6, 0.0);
  st.J = Matrix<double>(2, 2);
  p.jac(0.0, st.y, st.J);
  st.blocks = radau::factorize_blocks(*m, st.J, st.dt, false);
  SolverOptions<double> opts = tolerances(1e-12, 1e-12);
  const auto out = radau::newton_solve_stages(st, *m, p, opts);
  CHECK(out.converged);
  // Without contraction history the test needs a second iterate, whose
  // correction is pure roundoff.
  CHECK(out.iters <= 2);
  CHECK(out.theta < 1e-10);
  // A later step with contraction history and a nonzero guess accepts after
  // the first corrector. A zero guess always takes a second look.
  for (double& z : st.Z) z *= 0.5;
  CHECK(radau::newton_solve_stages(st, *m, p, tolerances(1e-6, 1e-6)).iters == 1);
  // The stage values satisfy the collocation equations to roundoff.
  Vector<double> F(6);
  for (std::size_t i = 0; i < 3; ++i) {
    Vector<double> Y{st.y[0] + st.Z[2 * i], st.y[1] + st.Z[2 * i + 1]};
    p.f(0.0, Y, std::span<double>(F).subspan(2 * i, 2));
  }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t q = 0; q < 2; ++q) {
      double acc = 0.0;
      for (std::size_t j = 0; j < 3; ++j) acc += st.dt * m->a(i, j) * F[2 * j + q];
      CHECK(std::abs(st.Z[2 * i + q] - acc) < 1e-15);
    }
}

TEST_CASE("J = 0 reduces the stages to quadrature of g at the nodes") {
  // y' = cos t: Z_i = dt sum_j a_ij cos(t + c_j dt).
  OdeProblem<double> p;
  p.f = [](const double& t, std::span<const double>, std::span<double> dy) { dy[0] = std::cos(t); };
  p.jac = [](const double&, std::span<const double>, Matrix<double>& J) { J(0, 0) = 0.0; };
  p.y0 = {0.0};
  const auto m = radau::method_for<double>(5, 53);
  radau::SolverState<double> st;
  st.n = 1;
  st.t = 0.3;
  st.y = {0.0};
  st.dt = 0.25;
  st.Z.assign(5, 0.0);
  st.J = Matrix<double>(1, 1);
  st.blocks = radau::factorize_blocks(*m, st.J, st.dt, false);
  const auto out = radau::newton_solve_stages(st, *m, p, tolerances(1e-12, 1e-12));
  CHECK(out.converged);
  for (std::size_t i = 0; i < 5; ++i) {
    double q = 0.0;
    for (std::size_t j = 0; j < 5; ++j) q += st.dt * m->a(i, j) * std::cos(st.t + m->c[j] * st.dt);
    CHECK(std::abs(st.Z[i] - q) < 1e-15);
  }
  // Stage 5 is the step: quadrature of order 9 against sin.
  CHECK(std::abs(st.Z[4] - (std::sin(0.55) - std::sin(0.3))) < 1e-14);
}

TEST_CASE("stale Jacobian makes the Newton iteration diverge") {
  // van der Pol with mu = 1e3, frozen Jacobian taken from a distant state.
  const double mu = 1e3;
  OdeProblem<double> p;
  p.f = [mu](const double&, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[1];
    dy[1] = mu * ((1 - y[0] * y[0]) * y[1] - y[0]);
  };
  auto jac = [mu](std::span<const double> y, Matrix<double>& J) {
    J(0, 0) = 0.0;
    J(0, 1) = 1.0;
    J(1, 0) = mu * (-2.0 * y[0] * y[1] - 1.0);
    J(1, 1) = mu * (1.0 - y[0] * y[0]);
  };
  const auto m = radau::method_for<double>(3, 53);
  radau::SolverState<double> st;
  st.n = 2;
  st.y = {2.0, -0.6};
  st.dt = 0.05;
  st.Z.assign(6, 0.0);
  st.J = Matrix<double>(2, 2);
  const Vector<double> far{0.0, 3.0};
  jac(far, st.J);
  st.blocks = radau::factorize_blocks(*m, st.J, st.dt, false);
  const auto out = radau::newton_solve_stages(st, *m, p, tolerances(1e-8, 1e-8));
  CHECK_FALSE(out.converged);
}

TEST_CASE("transformed block solve equals the dense simplified-Newton solve") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto m = radau::method_for<double>(3, 53);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 4);
    Matrix<double> J(n, n);
    for (auto& x : J.data()) x = u(rng);
    Vector<double> Z(3 * n), F(3 * n);
    for (auto& x : Z) x = u(rng);
    for (auto& x : F) x = u(rng);
    const double dt = 0.5 * (1.0 + u(rng));
    const auto a = radau::newton_increment_transformed(*m, J, dt, std::span<const double>(Z),
                                                       std::span<const double>(F));
    const auto b = radau::newton_increment_dense(m->a, J, dt, std::span<const double>(Z),
                                                 std::span<const double>(F));
    double diff = 0, scale = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      diff = std::max(diff, std::abs(a[i] - b[i]));
      scale = std::max(scale, std::abs(b[i]));
    }
    CHECK(diff <= 1e3 * radau::eps<double>() * scale);
  }
}

TEST_CASE("error estimate scales as dt^(s+1)") {
  auto p = decay(-1.0);
  const auto m = radau::method_for<double>(3, 53);
  auto unscaled = [&](double dt) {
    radau::SolverState<double> st;
    st.n = 1;
    st.y = {1.0};
    st.f0 = {-1.0};
    st.dt = dt;
    st.first_step = false;
    st.Z.assign(3, 0.0);
    st.J = Matrix<double>{{-1.0}};
    st.blocks = radau::factorize_blocks(*m, st.J, dt, false);
    radau::newton_solve_stages(st, *m, p, tolerances(1e-14, 1e-14));
    // rtol = 0 and atol = 1 expose the raw filtered difference.
    SolverOptions<double> o;
    o.rtol = 0.0;
    o.atol = {1.0};
    return radau::error_estimate(st, *m, p, o);
  };
  const double e1 = unscaled(0.02), e2 = unscaled(0.01);
  const double slope = std::log2(e1 / e2);
  CHECK(slope == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("error estimate vanishes for polynomial right-hand sides of degree s-1") {
  // y' = t^2 with s = 3: every quadrature involved is exact.
  OdeProblem<double> p;
  p.f = [](const double& t, std::span<const double>, std::span<double> dy) { dy[0] = t * t; };
  p.jac = [](const double&, std::span<const double>, Matrix<double>& J) { J(0, 0) = 0.0; };
  p.y0 = {0.0};
  const auto m = radau::method_for<double>(3, 53);
  radau::SolverState<double> st;
  st.n = 1;
  st.t = 0.5;
  st.y = {0.0};
  st.f0 = {0.25};
  st.dt = 0.1;
  st.first_step = false;
  st.Z.assign(3, 0.0);
  st.J = Matrix<double>{{0.0}};
  st.blocks = radau::factorize_blocks(*m, st.J, st.dt, false);
  radau::newton_solve_stages(st, *m, p, tolerances(1e-12, 1e-12));
  CHECK(radau::error_estimate(st, *m, p, tolerances(1e-6, 1e-6)) < 1e-8);
}

TEST_CASE("step size controller") {
  SolverOptions<double> o;
  radau::ControllerMemory neutral{true, 1.0, 1.0};
  CHECK(radau::step_size_update(1.0, 3, 1.0, neutral, o) == doctest::Approx(0.9));
  const double err = std::pow(2.0, 4);
  CHECK(radau::step_size_update(err, 3, 1.0, radau::ControllerMemory{}, o) == doctest::Approx(0.45));
  CHECK(radau::step_size_update(0.0, 3, 1.0, neutral, o) == doctest::Approx(8.0));
  CHECK(radau::step_size_update(1e30, 3, 1.0, neutral, o) == doctest::Approx(0.2));
}

TEST_CASE("adapt_order") {
  SolverOptions<double> o;
  auto d = radau::adapt_order(2, 2.0, 5, o);
  CHECK(d.order == 9);
  CHECK(d.hist_iter == doctest::Approx(2.0));
  d = radau::adapt_order(9, 9.0, 5, o);
  CHECK(d.order == 5);
  d = radau::adapt_order(9, 9.0, 13, o);
  CHECK(d.order == 9);
  d = radau::adapt_order(5, 5.0, 9, o);
  CHECK(d.order == 9);
  CHECK(d.hist_iter == doctest::Approx(5.0));
  o.max_order = 9;
  CHECK(radau::adapt_order(1, 1.0, 9, o).order == 9);
  // Pure function.
  CHECK(radau::adapt_order(3, 2.4, 9, o).order == radau::adapt_order(3, 2.4, 9, o).order);
}

TEST_CASE("initial_dt") {
  auto p = decay(-1.0);
  SolverOptions<double> o;
  const double dt = radau::initial_dt(p, o, 5);
  CHECK(dt > 0.0);
  CHECK(dt <= 1.0);
  o.dt_init = 0.125;
  CHECK(radau::initial_dt(p, o, 5) == 0.125);
}

TEST_CASE("stage_initial_guess") {
  const auto m = radau::method_for<double>(3, 53);
  radau::SolverState<double> st;
  st.n = 1;
  st.dt = 0.2;
  CHECK(radau::stage_initial_guess(st, *m) == Vector<double>{0, 0, 0});

  // y = 2t: previous increments 2 c_j dt_prev, exact extrapolation 2 c_i dt.
  st.first_step = false;
  st.have_previous = true;
  st.s_prev = 3;
  st.dt_prev = 0.1;
  st.Z_prev = {2 * m->c[0] * 0.1, 2 * m->c[1] * 0.1, 2 * 0.1};
  const auto z = radau::stage_initial_guess(st, *m);
  for (std::size_t i = 0; i < 3; ++i) CHECK(z[i] == doctest::Approx(2 * m->c[i] * 0.2).epsilon(1e-12));

  const auto m5 = radau::method_for<double>(5, 53);
  CHECK(radau::stage_initial_guess(st, *m5) == Vector<double>(5, 0.0));
}

TEST_CASE("stiff decay tracks cos t without underflow") {
  OdeProblem<double> p;
  p.f = [](const double& t, std::span<const double> y, std::span<double> dy) {
    dy[0] = -1e6 * (y[0] - std::cos(t));
  };
  p.jac = [](const double&, std::span<const double>, Matrix<double>& J) { J(0, 0) = -1e6; };
  p.y0 = {0.0};
  p.tf = 2.0;
  const double rtol = 1e-6;
  const auto sol = radau::solve(p, tolerances(rtol, 1e-8));
  REQUIRE(sol.ok());
  std::size_t entered = sol.ts.size();
  for (std::size_t i = 1; i < sol.ts.size(); ++i)
    if (std::abs(sol.ys[i][0] - std::cos(sol.ts[i])) < 10 * rtol) {
      entered = i;
      break;
    }
  CHECK(entered <= 10);
  for (std::size_t i = entered; i < sol.ts.size(); ++i)
    CHECK(std::abs(sol.ys[i][0] - std::cos(sol.ts[i])) < 10 * rtol);
}

TEST_CASE("fixed-step convergence order at 256 bits") {
  PrecisionScope scope(256);
  for (int s : {3, 5}) {
    CAPTURE(s);
    std::vector<double> errs;
    for (int k = 0; k <= 2; ++k) {
      SolverOptions<Real> o;
      o.rtol = Real(1e-40);
      o.atol = {Real(1e-40)};
      o.min_order = o.max_order = o.initial_order = 2 * s - 1;
      o.fixed_dt = Real(0.1) / Real(1L << k);
      const auto sol = radau::solve(decay(Real(-1)), o);
      REQUIRE(sol.ok());
      CHECK(sol.ts.back() == Real(1));
      errs.push_back(radau::to_double(radau::mp::abs(sol.ys.back()[0] - radau::mp::exp(Real(-1)))));
    }
    for (std::size_t k = 1; k < errs.size(); ++k) CHECK(std::log2(errs[k - 1] / errs[k]) >= 2 * s - 1 - 0.25);
  }
}

TEST_CASE("parallel blocks reproduce the serial trajectory bit for bit") {
  OdeProblem<double> p;
  p.f = [](const double&, std::span<const double> y, std::span<double> dy) {
    dy[0] = -0.04 * y[0] + 1e4 * y[1] * y[2];
    dy[1] = 0.04 * y[0] - 1e4 * y[1] * y[2] - 3e7 * y[1] * y[1];
    dy[2] = 3e7 * y[1] * y[1];
  };
  p.y0 = {1.0, 0.0, 0.0};
  p.tf = 100.0;
  auto o = tolerances(1e-6, 1e-10);
  const auto serial = radau::solve(p, o);
  o.parallel_blocks = true;
  const auto parallel = radau::solve(p, o);
  REQUIRE(serial.ok());
  CHECK(serial.ts == parallel.ts);
  CHECK(serial.ys == parallel.ys);
  CHECK(serial.orders == parallel.orders);
}

TEST_CASE("invalid options are configuration errors") {
  auto p = decay(-1.0);
  SolverOptions<double> o;
  o.rtol = 0.0;
  CHECK_THROWS_AS(radau::solve(p, o), radau::ConfigError);
  o = SolverOptions<double>{};
  o.min_order = 7;
  CHECK_THROWS_AS(radau::solve(p, o), radau::ConfigError);
  o = SolverOptions<double>{};
  o.min_order = 13;
  o.max_order = 9;
  CHECK_THROWS_AS(radau::solve(p, o), radau::ConfigError);
  p.tf = -1.0;
  CHECK_THROWS_AS(radau::solve(p, SolverOptions<double>{}), radau::ConfigError);
}
