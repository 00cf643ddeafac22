#pragma once

// Adaptive-order, adaptive-step Radau IIA integrator.
//
// Stage increments Z_i = Y_i - y_n are found by simplified Newton iteration
// in the transformed variables W = (T^-1 (x) I) Z, where T block-diagonalizes
// a^-1. Each iteration then needs one real n x n solve with (gamma/dt) I - J
// and one real 2n x 2n solve per complex eigenvalue pair of a^-1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "radau/errors.hpp"
#include "radau/linalg.hpp"
#include "radau/scalar.hpp"
#include "radau/spectral.hpp"
#include "radau/tableau.hpp"

namespace radau {

// ---------------------------------------------------------------------------
// Problem, options, results

template <class T>
struct OdeProblem {
  // dy = f(t, y)
  using Rhs = std::function<void(const T& t, std::span<const T> y, std::span<T> dy)>;
  // J = df/dy at (t, y); J is preallocated n x n.
  using Jac = std::function<void(const T& t, std::span<const T> y, Matrix<T>& J)>;

  Rhs f;
  Jac jac;  // optional; finite differences are used when empty
  Vector<T> y0;
  T t0 = T(0);
  T tf = T(1);

  std::size_t dim() const noexcept { return y0.size(); }
};

template <class T>
struct SolverOptions {
  T rtol = T(1e-6);
  Vector<T> atol = {T(1e-6)};  // one entry (broadcast) or one per component
  int min_order = 5;
  int max_order = 2 * kDefaultMaxStages - 1;
  int initial_order = 5;
  int max_newton_iters = 0;  // 0 selects 7 + (s - 3) per stage count
  std::optional<T> dt_init;
  std::optional<T> fixed_dt;  // fixed-step mode: no error control, fixed order
  double dt_min_factor = 0.2;
  double dt_max_factor = 8.0;
  double safety = 0.9;
  double newton_kappa = 1e-2;
  double jac_refresh_theta = 1e-3;
  bool parallel_blocks = false;
  double max_guess_amplification = 1e3;  // see stage_initial_guess
  bool store_trajectory = true;
  std::size_t max_steps = 1000000;
};

enum class SolveStatus {
  success,
  step_size_underflow,
  max_newton_failures,
  non_finite_state,
  max_steps_exceeded,
};

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::success: return "success";
    case SolveStatus::step_size_underflow: return "step_size_underflow";
    case SolveStatus::max_newton_failures: return "max_newton_failures";
    case SolveStatus::non_finite_state: return "non_finite_state";
    case SolveStatus::max_steps_exceeded: return "max_steps_exceeded";
  }
  return "unknown";
}

struct StepStats {
  std::size_t n_steps = 0;
  std::size_t n_rejected = 0;  // error-test rejections plus Newton failures
  std::size_t n_newton_failures = 0;
  std::size_t n_f_evals = 0;
  std::size_t n_jac_evals = 0;
  std::size_t n_lu_factorizations = 0;  // counted per block
  std::size_t n_newton_iters = 0;
};

template <class T>
struct Solution {
  Vector<T> ts;
  std::vector<Vector<T>> ys;
  std::vector<int> orders;  // method order used for each accepted step
  StepStats stats;
  SolveStatus status = SolveStatus::success;
  std::string message;

  bool ok() const noexcept { return status == SolveStatus::success; }
};

// ---------------------------------------------------------------------------
// Method coefficients in the form the integrator consumes

template <class T>
struct RadauMethod {
  int s = 0;
  long precision_bits = 0;
  Vector<T> c;
  Matrix<T> a;
  T gamma = T(0);
  std::vector<EigenPairParams<T>> pairs;
  Matrix<T> T_fwd;
  Matrix<T> T_inv;
  Matrix<T> a_inv;
  // Error estimate: gamma0 dt f(t_n, y_n) + sum_j errc_j Z_j,
  // with gamma0 = 1 / gamma and errc = a^-T (b_tilde - b).
  T gamma0 = T(0);
  Vector<T> errc;

  int order() const noexcept { return 2 * s - 1; }
};

// Derives everything at guard precision and rounds once to the working
// precision of T.
template <class T>
RadauMethod<T> build_method(int s, long bits) {
  check_stage_count(s);
  if constexpr (!ScalarTraits<T>::extended) check_precision_for_double(bits);
  RadauTableau<mp::Real> tab;
  SpectralTransform<mp::Real> st;
  Vector<mp::Real> errc;
  Matrix<mp::Real> a_inv;
  {
    mp::PrecisionScope guard(guard_precision(bits));
    tab = build_tableau_at_working_precision<mp::Real>(s);
    st = build_transform(tab);
    Vector<mp::Real> diff(tab.b.size());
    for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = tab.b_tilde[j] - tab.b[j];
    errc = solve(transpose(tab.a), diff);
    a_inv = mat_inverse(tab.a);
  }
  typename ScalarTraits<T>::Scope scope(bits);
  RadauMethod<T> m;
  m.s = s;
  m.precision_bits = bits;
  m.c = cast_vector<T>(tab.c);
  m.a = tab.a.template cast<T>();
  const auto rounded = round_transform<T>(st);
  m.gamma = rounded.gamma;
  m.pairs = rounded.pairs;
  m.T_fwd = rounded.T_fwd;
  m.T_inv = rounded.T_inv;
  m.a_inv = a_inv.template cast<T>();
  m.gamma0 = convert<T>(tab.b_tilde0);
  m.errc = cast_vector<T>(errc);
  return m;
}

// Process-wide cache of method coefficients keyed by (s, precision bits).
template <class T>
std::shared_ptr<const RadauMethod<T>> method_for(int s, long bits) {
  static KeyedCache<RadauMethod<T>> cache;
  return cache.get_or_build(s, bits, [&] { return build_method<T>(s, bits); });
}

// ---------------------------------------------------------------------------
// Block factorizations of the transformed Newton matrix

namespace detail {

// Runs task(0..count-1), on separate threads when `parallel`. Worker threads
// inherit the caller's working precision. The first exception is rethrown.
template <class Task>
void for_each_block(std::size_t count, bool parallel, Task&& task) {
  if (!parallel || count < 2) {
    for (std::size_t k = 0; k < count; ++k) task(k);
    return;
  }
  const long bits = mp::working_precision();
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> workers;
  workers.reserve(count - 1);
  for (std::size_t k = 1; k < count; ++k) {
    workers.emplace_back([&, k] {
      mp::PrecisionScope scope(bits);
      try {
        task(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  try {
    task(0);
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

template <class T>
struct NewtonBlocks {
  int s = 0;
  T dt = T(0);
  std::size_t jac_version = 0;
  bool valid = false;
  LuFactorization<T> real_block;               // (gamma/dt) I - J
  std::vector<LuFactorization<T>> pair_blocks;  // [[a/dt I - J, -b/dt I], [b/dt I, a/dt I - J]]
};

template <class T>
NewtonBlocks<T> factorize_blocks(const RadauMethod<T>& m, const Matrix<T>& J, const T& dt,
                                 bool parallel) {
  const std::size_t n = J.rows();
  NewtonBlocks<T> nb;
  nb.s = m.s;
  nb.dt = dt;
  nb.pair_blocks.resize(m.pairs.size());
  detail::for_each_block(1 + m.pairs.size(), parallel, [&](std::size_t k) {
    if (k == 0) {
      Matrix<T> mat(n, n);
      const T g = m.gamma / dt;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) mat(i, j) = (i == j ? g : T(0)) - J(i, j);
      nb.real_block = lu_factor(std::move(mat));
      return;
    }
    const T al = m.pairs[k - 1].alpha / dt;
    const T be = m.pairs[k - 1].beta / dt;
    Matrix<T> mat(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const T d = (i == j ? al : T(0)) - J(i, j);
        mat(i, j) = d;
        mat(n + i, n + j) = d;
      }
      mat(i, n + i) = -be;
      mat(n + i, i) = be;
    }
    nb.pair_blocks[k - 1] = lu_factor(std::move(mat));
  });
  nb.valid = true;
  return nb;
}

// Solves the block-diagonal system in place; x holds s stacked n-vectors in
// transformed coordinates.
template <class T>
void solve_blocks(const NewtonBlocks<T>& nb, std::size_t n, std::span<T> x, bool parallel) {
  detail::for_each_block(1 + nb.pair_blocks.size(), parallel, [&](std::size_t k) {
    if (k == 0) {
      lu_solve_in_place(nb.real_block, x.subspan(0, n));
    } else {
      lu_solve_in_place(nb.pair_blocks[k - 1], x.subspan((2 * k - 1) * n, 2 * n));
    }
  });
}

// out_k = sum_l M(k, l) in_l for stacked n-vectors (M (x) I applied to in).
template <class T>
void apply_kron(const Matrix<T>& M, std::size_t n, std::span<const T> in, std::span<T> out) {
  const std::size_t s = M.rows();
  for (std::size_t k = 0; k < s; ++k) {
    for (std::size_t i = 0; i < n; ++i) out[k * n + i] = T(0);
    for (std::size_t l = 0; l < s; ++l) {
      const T& coef = M(k, l);
      for (std::size_t i = 0; i < n; ++i) multiply_add(out[k * n + i], coef, in[l * n + i]);
    }
  }
}

// rhs = (T^-1 (x) I) F - (Lambda/dt (x) I) W, where Lambda is the block form.
// r = F - (a^-1 / dt (x) I) Z, the collocation residual in stage space.
template <class T>
void stage_residual(const RadauMethod<T>& m, std::size_t n, const T& dt, std::span<const T> F,
                    std::span<const T> Z, std::span<T> r) {
  const auto s = static_cast<std::size_t>(m.s);
  for (std::size_t k = 0; k < s; ++k) {
    for (std::size_t i = 0; i < n; ++i) r[k * n + i] = T(0);
    for (std::size_t l = 0; l < s; ++l) {
      const T w = m.a_inv(k, l);
      for (std::size_t i = 0; i < n; ++i) multiply_add(r[k * n + i], w, Z[l * n + i]);
    }
    for (std::size_t i = 0; i < n; ++i) r[k * n + i] = F[k * n + i] - r[k * n + i] / dt;
  }
}

// One simplified-Newton correction in original coordinates computed through
// the transformed blocks: solves (I - dt a (x) J) dZ = -Z + dt (a (x) I) F.
template <class T>
Vector<T> newton_increment_transformed(const RadauMethod<T>& m, const Matrix<T>& J, const T& dt,
                                       std::span<const T> Z, std::span<const T> F,
                                       bool parallel = false) {
  const std::size_t n = J.rows();
  const std::size_t sn = Z.size();
  Vector<T> r(sn), rhs(sn), dZ(sn);
  stage_residual(m, n, dt, F, Z, std::span<T>(r));
  apply_kron(m.T_inv, n, std::span<const T>(r), std::span<T>(rhs));
  const auto nb = factorize_blocks(m, J, dt, parallel);
  solve_blocks(nb, n, std::span<T>(rhs), parallel);
  apply_kron(m.T_fwd, n, std::span<const T>(rhs), std::span<T>(dZ));
  return dZ;
}

// Same correction from a dense solve of the full sn x sn system.
template <class T>
Vector<T> newton_increment_dense(const Matrix<T>& a, const Matrix<T>& J, const T& dt,
                                 std::span<const T> Z, std::span<const T> F) {
  const std::size_t n = J.rows();
  const std::size_t s = a.rows();
  Matrix<T> M(s * n, s * n);
  Vector<T> rhs(s * n);
  for (std::size_t k = 0; k < s; ++k)
    for (std::size_t l = 0; l < s; ++l) {
      const T dta = dt * a(k, l);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          M(k * n + i, l * n + j) = (k == l && i == j ? T(1) : T(0)) - dta * J(i, j);
    }
  for (std::size_t k = 0; k < s; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      T acc = -Z[k * n + i];
      for (std::size_t l = 0; l < s; ++l) multiply_add(acc, T(dt * a(k, l)), F[l * n + i]);
      rhs[k * n + i] = acc;
    }
  return solve(M, rhs);
}

// ---------------------------------------------------------------------------
// Integrator state and the individual step components

template <class T>
struct SolverState {
  std::size_t n = 0;
  T t = T(0);
  Vector<T> y;
  Vector<T> f0;  // f(t, y)
  T dt = T(0);
  int s = 3;  // stage count; order = 2s - 1
  Vector<T> Z;  // stage increments, s stacked n-vectors
  Vector<T> F;  // stage derivatives at the last Newton iterate
  double hist_iter = 2.0;
  double eta = 1.0;    // last Newton contraction estimate theta/(1-theta)
  double theta = 1.0;  // last observed Newton contraction rate

  Matrix<T> J;
  bool jac_current = false;  // J evaluated at (t, y)
  bool jac_needed = true;
  std::size_t jac_version = 0;
  NewtonBlocks<T> blocks;

  // Previous accepted step, for extrapolating stage guesses.
  bool have_previous = false;
  Vector<T> Z_prev;
  T dt_prev = T(0);
  int s_prev = 0;

  // Controller memory.
  bool first_step = true;
  bool last_rejected = false;
  bool order_changed = false;
  double err_prev = 1.0;
  T dt_accepted_prev = T(0);

  StepStats stats;
};

template <class T>
T atol_at(const SolverOptions<T>& opts, std::size_t i) {
  return opts.atol.size() == 1 ? opts.atol[0] : opts.atol[i];
}

inline int stages_for_order(int order) { return (order + 1) / 2; }

template <class T>
int newton_iteration_limit(const SolverOptions<T>& opts, int s) {
  return opts.max_newton_iters > 0 ? opts.max_newton_iters : 7 + (s - 3);
}

template <class T>
void eval_rhs(const OdeProblem<T>& prob, const T& t, std::span<const T> y, std::span<T> dy,
              StepStats& stats) {
  prob.f(t, y, dy);
  ++stats.n_f_evals;
}

// Forward-difference Jacobian with increment sqrt(eps) max(|y_j|, atol_j).
template <class T>
void finite_difference_jacobian(const OdeProblem<T>& prob, const SolverOptions<T>& opts, const T& t,
                                std::span<const T> y, std::span<const T> f0, Matrix<T>& J,
                                StepStats& stats) {
  using std::abs;
  using std::sqrt;
  const std::size_t n = y.size();
  const T root_eps = sqrt(eps<T>());
  Vector<T> yp(y.begin(), y.end());
  Vector<T> fp(n);
  for (std::size_t j = 0; j < n; ++j) {
    const T ay = abs(y[j]);
    const T aj = atol_at(opts, j);
    const T delta = root_eps * (ay > aj ? ay : aj);
    const T saved = yp[j];
    yp[j] = saved + delta;
    const T actual = yp[j] - saved;
    eval_rhs(prob, t, std::span<const T>(yp), std::span<T>(fp), stats);
    for (std::size_t i = 0; i < n; ++i) J(i, j) = (fp[i] - f0[i]) / actual;
    yp[j] = saved;
  }
}

template <class T>
void evaluate_jacobian(const OdeProblem<T>& prob, const SolverOptions<T>& opts, SolverState<T>& st) {
  if (st.J.rows() != st.n) st.J = Matrix<T>(st.n, st.n);
  if (prob.jac) {
    prob.jac(st.t, std::span<const T>(st.y), st.J);
  } else {
    finite_difference_jacobian(prob, opts, st.t, std::span<const T>(st.y), std::span<const T>(st.f0),
                               st.J, st.stats);
  }
  ++st.stats.n_jac_evals;
  ++st.jac_version;
  st.jac_current = true;
  st.jac_needed = false;
}

// Scaled RMS norm with per-component weights 1/scale_i over stacked vectors.
template <class T>
double scaled_rms(std::span<const T> v, std::span<const T> scale) {
  const std::size_t n = scale.size();
  if (v.empty()) return 0.0;
  T acc(0);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const T q = v[k] / scale[k % n];
    multiply_add(acc, q, q);
  }
  const double r = std::sqrt(to_double(acc) / static_cast<double>(v.size()));
  return std::isnan(r) ? std::numeric_limits<double>::infinity() : r;
}

// Stage guess for the next attempt. Zero on the first step and after an
// order change; otherwise the previous collocation polynomial (through
// (0, 0) and (c_j, Z_prev_j)) extrapolated to the new nodes, re-based at the
// new starting point. High-degree extrapolation far past the previous step
// amplifies the Newton residue of the previous stages; when the amplification
// sum_j |L_j(x)| exceeds max_amplification the zero guess is used.
template <class T>
Vector<T> stage_initial_guess(const SolverState<T>& st, const RadauMethod<T>& m,
                              double max_amplification = 1e3) {
  const std::size_t n = st.n;
  const auto s = static_cast<std::size_t>(m.s);
  Vector<T> z(s * n, T(0));
  if (!st.have_previous || st.s_prev != m.s || st.first_step) return z;
  const T ratio = st.dt / st.dt_prev;
  Vector<T> nodes(s + 1);
  nodes[0] = T(0);
  for (std::size_t j = 0; j < s; ++j) nodes[j + 1] = m.c[j];
  Matrix<T> weights(s, s);
  double amplification = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    const T x = T(1) + m.c[i] * ratio;
    double row = 0.0;
    for (std::size_t j = 1; j <= s; ++j) {
      T w(1);
      for (std::size_t k = 0; k <= s; ++k)
        if (k != j) w = w * (x - nodes[k]) / (nodes[j] - nodes[k]);
      row += std::abs(to_double(w));
      weights(i, j - 1) = w;
    }
    amplification = std::max(amplification, row);
  }
  if (!(amplification <= max_amplification)) return z;
  const std::size_t last = (s - 1) * n;
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j)
      for (std::size_t q = 0; q < n; ++q) multiply_add(z[i * n + q], weights(i, j), st.Z_prev[j * n + q]);
    for (std::size_t q = 0; q < n; ++q) z[i * n + q] -= st.Z_prev[last + q];
  }
  return z;
}

struct NewtonOutcome {
  bool converged = false;
  int iters = 0;
  double theta = 0.0;
};

// Simplified Newton on the stage equations in transformed variables, starting
// from st.Z. Requires st.blocks factorized for (st.dt, m.s, st.jac_version).
template <class T>
NewtonOutcome newton_solve_stages(SolverState<T>& st, const RadauMethod<T>& m, const OdeProblem<T>& prob,
                                  const SolverOptions<T>& opts) {
  using std::abs;
  const std::size_t n = st.n;
  const auto s = static_cast<std::size_t>(m.s);
  const std::size_t sn = s * n;
  const int max_iters = newton_iteration_limit(opts, m.s);
  // Convergence when eta * |dZ| <= tol. Corrections below `floor` are at
  // roundoff level for this tolerance and are accepted as converged.
  const double unit = to_double(eps<T>()) / to_double(opts.rtol);
  const double tol = std::max(opts.newton_kappa, 10.0 * unit);
  const double floor = 10.0 * m.s * unit;

  Vector<T> scale(n);
  for (std::size_t i = 0; i < n; ++i) scale[i] = atol_at(opts, i) + opts.rtol * abs(st.y[i]);

  Vector<T> r(sn), rhs(sn), dZ(sn), Y(n);
  st.F.assign(sn, T(0));

  NewtonOutcome out;
  double eta = std::pow(std::max(st.eta, to_double(eps<T>())), 0.8);
  double ndw_old = 0.0;
  // From a zero guess the first correction is dominated by the linear part
  // of the problem, which the simplified iteration resolves almost exactly.
  // Its ratio with the second says nothing about the contraction rate of
  // what remains, so rates and the convergence test start one step later.
  const bool cold = std::all_of(st.Z.begin(), st.Z.end(), [](const T& v) { return v == T(0); });
  const int first_rate = cold ? 3 : 2;
  for (int k = 1; k <= max_iters; ++k) {
    out.iters = k;
    ++st.stats.n_newton_iters;
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t q = 0; q < n; ++q) Y[q] = st.y[q] + st.Z[i * n + q];
      eval_rhs(prob, T(st.t + m.c[i] * st.dt), std::span<const T>(Y),
               std::span<T>(st.F).subspan(i * n, n), st.stats);
    }
    // The residual F - (a^-1 / dt) Z is formed in stage space and Z is
    // updated directly. T only preconditions the correction, so its
    // conditioning slows convergence but does not limit attainable accuracy.
    stage_residual(m, n, st.dt, std::span<const T>(st.F), std::span<const T>(st.Z), std::span<T>(r));
    apply_kron(m.T_inv, n, std::span<const T>(r), std::span<T>(rhs));
    solve_blocks(st.blocks, n, std::span<T>(rhs), opts.parallel_blocks);
    apply_kron(m.T_fwd, n, std::span<const T>(rhs), std::span<T>(dZ));
    const double ndw = scaled_rms(std::span<const T>(dZ), std::span<const T>(scale));
    if (!std::isfinite(ndw)) return out;
    for (std::size_t q = 0; q < sn; ++q) st.Z[q] += dZ[q];

    if (k > 1 && ndw <= floor) {
      out.theta = ndw_old > 0.0 ? ndw / ndw_old : 0.0;
      eta = std::min(eta, out.theta / (1.0 - out.theta));
      out.converged = true;
      break;
    }
    if (cold && k < first_rate) {
      ndw_old = ndw;
      continue;
    }
    if (k >= first_rate) {
      const double theta = ndw_old > 0.0 ? ndw / ndw_old : 0.0;
      out.theta = theta;
      if (theta >= 1.0) return out;
      eta = theta / (1.0 - theta);
      if (k < max_iters && eta * ndw * std::pow(theta, max_iters - k) > tol) return out;
    }
    if (eta * ndw <= tol || ndw == 0.0) {
      out.converged = true;
      break;
    }
    ndw_old = ndw;
  }
  if (out.converged) {
    st.eta = eta;
    if (out.iters > 1) st.theta = out.theta;
  }
  return out;
}

// Scaled error norm of the embedded estimate for the candidate step
// y_new = y + Z_s. The raw difference is filtered through
// ((gamma/dt) I - J)^-1 (gamma/dt) to keep it bounded on stiff components.
template <class T>
double error_estimate(SolverState<T>& st, const RadauMethod<T>& m, const OdeProblem<T>& prob,
                      const SolverOptions<T>& opts) {
  using std::abs;
  const std::size_t n = st.n;
  const auto s = static_cast<std::size_t>(m.s);
  const std::size_t last = (s - 1) * n;
  const T g = m.gamma / st.dt;

  Vector<T> scale(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T y0 = abs(st.y[i]);
    const T y1 = abs(st.y[i] + st.Z[last + i]);
    scale[i] = atol_at(opts, i) + opts.rtol * (y0 > y1 ? y0 : y1);
  }

  // sum_j errc_j Z_j, shared by both estimates.
  Vector<T> zc(n, T(0));
  for (std::size_t j = 0; j < s; ++j)
    for (std::size_t i = 0; i < n; ++i) multiply_add(zc[i], m.errc[j], st.Z[j * n + i]);

  const T g0dt = m.gamma0 * st.dt;
  auto filtered = [&](std::span<const T> f) {
    Vector<T> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      T d = zc[i];
      multiply_add(d, g0dt, f[i]);
      x[i] = g * d;
    }
    lu_solve_in_place(st.blocks.real_block, std::span<T>(x));
    return x;
  };

  Vector<T> x = filtered(std::span<const T>(st.f0));
  double err = scaled_rms(std::span<const T>(x), std::span<const T>(scale));
  if (err >= 1.0 && (st.first_step || st.last_rejected)) {
    Vector<T> yx(n), fx(n);
    for (std::size_t i = 0; i < n; ++i) yx[i] = st.y[i] + x[i];
    eval_rhs(prob, st.t, std::span<const T>(yx), std::span<T>(fx), st.stats);
    x = filtered(std::span<const T>(fx));
    err = scaled_rms(std::span<const T>(x), std::span<const T>(scale));
  }
  return err;
}

// Previous accepted step, for the predictive controller.
struct ControllerMemory {
  bool valid = false;
  double err = 1.0;       // previous accepted error, floored at 1e-2
  double dt_ratio = 1.0;  // dt / previous accepted dt
};

// Returns the factor dt_new / dt. Embedded order s controls the exponent.
// Predictive (Gustafsson) update when memory is valid, elementary otherwise;
// the smaller of the two is used so a predictive step never outruns the
// elementary one.
template <class T>
double step_size_factor(double err, int s, const ControllerMemory& mem, const SolverOptions<T>& opts) {
  if (!(err > 0.0)) return err == 0.0 ? opts.dt_max_factor : opts.dt_min_factor;
  if (!std::isfinite(err)) return opts.dt_min_factor;
  const double expo = 1.0 / (s + 1);
  double fac = opts.safety * std::pow(err, -expo);
  if (mem.valid) {
    const double pred = opts.safety * mem.dt_ratio * std::pow(mem.err / (err * err), expo);
    fac = std::min(fac, pred);
  }
  return std::clamp(fac, opts.dt_min_factor, opts.dt_max_factor);
}

template <class T>
T step_size_update(double err, int s, const T& dt, const ControllerMemory& mem, const SolverOptions<T>& opts) {
  return dt * T(step_size_factor(err, s, mem, opts));
}

struct OrderDecision {
  int order;
  double hist_iter;
};

// kappa = 0.8 hist + 0.2 iter; raise the order by 4 below 2.75, lower by 4
// above 8, clamped to [min_order, max_order]. kappa becomes the new history.
template <class T>
OrderDecision adapt_order(int iter, double hist_iter, int order, const SolverOptions<T>& opts) {
  const double kappa = 0.8 * hist_iter + 0.2 * iter;
  int next = order;
  if (kappa < 2.75) {
    next = order + 4;
  } else if (kappa > 8.0) {
    next = order - 4;
  }
  next = std::clamp(next, opts.min_order, opts.max_order);
  return {next, kappa};
}

// Starting step from the usual two-evaluation curvature probe, capped at
// tf - t0. A vanishing right-hand side gives (tf - t0) / 100.
template <class T>
T initial_dt(const OdeProblem<T>& prob, const SolverOptions<T>& opts, int order, StepStats* stats = nullptr) {
  using std::abs;
  const T span = prob.tf - prob.t0;
  if (opts.dt_init) return *opts.dt_init;
  const std::size_t n = prob.dim();
  StepStats local;
  StepStats& counters = stats ? *stats : local;
  Vector<T> f0(n), f1(n), y1(n), scale(n);
  eval_rhs(prob, prob.t0, std::span<const T>(prob.y0), std::span<T>(f0), counters);
  for (std::size_t i = 0; i < n; ++i) scale[i] = atol_at(opts, i) + opts.rtol * abs(prob.y0[i]);
  const double d0 = scaled_rms(std::span<const T>(prob.y0), std::span<const T>(scale));
  const double d1 = scaled_rms(std::span<const T>(f0), std::span<const T>(scale));
  if (d1 == 0.0) return span / T(100);
  const double span_d = to_double(span);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span_d);
  const T h0t(h0);
  for (std::size_t i = 0; i < n; ++i) y1[i] = prob.y0[i] + h0t * f0[i];
  eval_rhs(prob, T(prob.t0 + h0t), std::span<const T>(y1), std::span<T>(f1), counters);
  for (std::size_t i = 0; i < n; ++i) f1[i] = f1[i] - f0[i];
  const double d2 = scaled_rms(std::span<const T>(f1), std::span<const T>(scale)) / h0;
  const double dmax = std::max(d1, d2);
  const int p = stages_for_order(order);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 1.0 / (p + 1));
  double h = std::min(100.0 * h0, h1);
  if (!(h > 0.0) || !std::isfinite(h)) h = span_d / 100.0;
  T dt(h);
  return dt < span ? dt : span;
}

template <class T>
void validate(const OdeProblem<T>& prob, const SolverOptions<T>& opts) {
  auto valid_order = [](int o) { return o >= 1 && o % 4 == 1; };
  if (!prob.f) throw ConfigError("problem has no right-hand side");
  if (prob.dim() == 0) throw ConfigError("problem has dimension 0");
  if (!(prob.tf > prob.t0)) throw ConfigError("tf must exceed t0");
  if (!(opts.rtol > T(0))) throw ConfigError("rtol must be positive");
  if (opts.atol.size() != 1 && opts.atol.size() != prob.dim())
    throw ConfigError("atol must have 1 or n entries");
  for (const auto& a : opts.atol)
    if (!(a > T(0))) throw ConfigError("atol must be positive");
  if (!valid_order(opts.min_order) || !valid_order(opts.max_order) || !valid_order(opts.initial_order))
    throw ConfigError("orders must be of the form 4k + 1");
  if (opts.min_order > opts.max_order) throw ConfigError("min_order exceeds max_order");
  if (opts.initial_order < opts.min_order || opts.initial_order > opts.max_order)
    throw ConfigError("initial_order outside [min_order, max_order]");
  if (opts.fixed_dt && !(*opts.fixed_dt > T(0))) throw ConfigError("fixed_dt must be positive");
  if (opts.dt_init && !(*opts.dt_init > T(0))) throw ConfigError("dt_init must be positive");
}

// ---------------------------------------------------------------------------
// Driver

template <class T>
Solution<T> solve(const OdeProblem<T>& prob, const SolverOptions<T>& opts) {
  using std::abs;
  validate(prob, opts);
  const long bits = ScalarTraits<T>::precision();
  const std::size_t n = prob.dim();

  Solution<T> sol;
  SolverState<T> st;
  st.n = n;
  st.t = prob.t0;
  st.y = prob.y0;
  st.f0.assign(n, T(0));
  st.s = stages_for_order(opts.initial_order);
  st.hist_iter = 2.0;
  const bool fixed = opts.fixed_dt.has_value();

  auto finish = [&](SolveStatus status, std::string message) {
    sol.stats = st.stats;
    sol.status = status;
    sol.message = std::move(message);
    if (!opts.store_trajectory) {
      sol.ts = {prob.t0, st.t};
      sol.ys = {prob.y0, st.y};
    }
    return sol;
  };
  auto all_finite = [](const Vector<T>& v) {
    return std::all_of(v.begin(), v.end(), [](const T& x) { return is_finite(x); });
  };

  eval_rhs(prob, st.t, std::span<const T>(st.y), std::span<T>(st.f0), st.stats);
  if (!all_finite(st.f0)) throw ConfigError("f(t0, y0) is not finite");

  sol.ts.push_back(st.t);
  sol.ys.push_back(st.y);

  // Fixed-step mode uses an integer step count so the last step lands on tf.
  std::size_t fixed_steps = 0;
  T fixed_h(0);
  if (fixed) {
    const double ratio = to_double(T((prob.tf - prob.t0) / *opts.fixed_dt));
    fixed_steps = static_cast<std::size_t>(std::max(1.0, std::ceil(ratio - 1e-9)));
    fixed_h = (prob.tf - prob.t0) / T(static_cast<long>(fixed_steps));
    st.dt = fixed_h;
  } else {
    st.dt = initial_dt(prob, opts, opts.initial_order, &st.stats);
  }

  ControllerMemory mem;
  std::shared_ptr<const RadauMethod<T>> method = method_for<T>(st.s, bits);
  int consecutive_newton_failures = 0;

  while (st.t < prob.tf) {
    if (st.stats.n_steps + st.stats.n_rejected >= opts.max_steps)
      return finish(SolveStatus::max_steps_exceeded, "step limit reached");

    if (fixed) {
      st.dt = st.stats.n_steps + 1 == fixed_steps ? T(prob.tf - st.t) : fixed_h;
    } else if (st.t + st.dt * T(1.0001) >= prob.tf) {
      st.dt = prob.tf - st.t;
    }
    if (!(st.dt > eps<T>() * abs(st.t)) || st.t + st.dt == st.t)
      return finish(SolveStatus::step_size_underflow, "step size underflow");

    const RadauMethod<T>& m = *method;
    if (st.jac_needed) evaluate_jacobian(prob, opts, st);
    if (!st.blocks.valid || st.blocks.s != m.s || st.blocks.jac_version != st.jac_version ||
        !(st.blocks.dt == st.dt)) {
      try {
        st.blocks = factorize_blocks(m, st.J, st.dt, opts.parallel_blocks);
        st.blocks.jac_version = st.jac_version;
        st.stats.n_lu_factorizations += 1 + m.pairs.size();
      } catch (const SingularMatrix&) {
        st.blocks.valid = false;
        if (fixed) return finish(SolveStatus::max_newton_failures, "singular Newton matrix");
        ++st.stats.n_rejected;
        st.dt = st.dt * T(0.5);
        st.last_rejected = true;
        continue;
      }
    }

    st.Z = stage_initial_guess(st, m, opts.max_guess_amplification);
    const NewtonOutcome newton = newton_solve_stages(st, m, prob, opts);
    if (!newton.converged) {
      ++st.stats.n_newton_failures;
      ++st.stats.n_rejected;
      if (fixed) return finish(SolveStatus::max_newton_failures, "Newton iteration failed in fixed-step mode");
      if (++consecutive_newton_failures > 40)
        return finish(SolveStatus::max_newton_failures, "repeated Newton failures");
      st.dt = st.dt * T(0.5);
      st.last_rejected = true;
      st.eta = 1.0;
      if (!st.jac_current) st.jac_needed = true;
      const auto drop = adapt_order(newton_iteration_limit(opts, m.s), st.hist_iter, m.order(), opts);
      if (drop.order < m.order()) {
        st.s = stages_for_order(drop.order);
        method = method_for<T>(st.s, bits);
        st.order_changed = true;
        st.have_previous = false;
      }
      continue;
    }
    consecutive_newton_failures = 0;

    double err = 0.0;
    if (!fixed) err = error_estimate(st, m, prob, opts);

    if (fixed || err <= 1.0) {
      const std::size_t last = static_cast<std::size_t>(m.s - 1) * n;
      const T dt_taken = st.dt;
      for (std::size_t i = 0; i < n; ++i) st.y[i] += st.Z[last + i];
      st.t = (fixed && st.stats.n_steps + 1 == fixed_steps) ? prob.tf : T(st.t + dt_taken);
      ++st.stats.n_steps;
      if (!all_finite(st.y)) return finish(SolveStatus::non_finite_state, "state became non-finite");
      eval_rhs(prob, st.t, std::span<const T>(st.y), std::span<T>(st.f0), st.stats);
      if (!all_finite(st.f0)) return finish(SolveStatus::non_finite_state, "f became non-finite");

      if (opts.store_trajectory) {
        sol.ts.push_back(st.t);
        sol.ys.push_back(st.y);
      }
      sol.orders.push_back(m.order());

      st.Z_prev = st.Z;
      st.dt_prev = dt_taken;
      st.s_prev = m.s;
      st.have_previous = true;
      st.jac_current = false;
      if (fixed) {
        st.first_step = false;
        continue;
      }

      // Step size from the controller; the predictive form needs a previous
      // accepted step at the same order and no rejection in between.
      const bool predictive = !st.first_step && !st.last_rejected && !st.order_changed;
      ControllerMemory use = mem;
      use.valid = predictive && mem.valid;
      if (use.valid) use.dt_ratio = to_double(T(dt_taken / st.dt_accepted_prev));
      const double fac = step_size_factor(err, m.s, use, opts);
      mem.valid = true;
      mem.err = std::max(err, 1e-2);
      st.dt_accepted_prev = dt_taken;

      st.jac_needed = newton.iters > 1 && newton.theta > opts.jac_refresh_theta;
      const auto decision = adapt_order(newton.iters, st.hist_iter, m.order(), opts);
      st.hist_iter = decision.hist_iter;
      st.order_changed = decision.order != m.order();
      if (st.order_changed) {
        st.s = stages_for_order(decision.order);
        method = method_for<T>(st.s, bits);
      }
      // Keep dt (and the factorizations) when the change would be small.
      const bool keep = fac >= 1.0 && fac <= 1.2 && !st.jac_needed && !st.order_changed;
      st.dt = keep ? dt_taken : T(dt_taken * T(fac));
      st.first_step = false;
      st.last_rejected = false;
    } else {
      ++st.stats.n_rejected;
      const double fac = std::min(1.0, step_size_factor(err, m.s, ControllerMemory{}, opts));
      st.dt = st.dt * T(fac);
      st.last_rejected = true;
      if (!st.jac_current) st.jac_needed = true;
    }
  }
  return finish(SolveStatus::success, "");
}

}  // namespace radau
