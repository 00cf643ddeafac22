#pragma once

// Real similarity transform T with T^-1 a^-1 T block diagonal: a leading
// 1x1 block [gamma] followed by 2x2 blocks [[alpha, -beta], [beta, alpha]],
// one per complex-conjugate eigenvalue pair of a^-1.

#include <cstddef>
#include <vector>

#include "radau/eigen.hpp"
#include "radau/linalg.hpp"
#include "radau/tableau.hpp"

namespace radau {

template <class T>
struct EigenPairParams {
  T alpha;
  T beta;
};

template <class T>
struct SpectralTransform {
  int s = 0;
  T gamma = T(0);
  std::vector<EigenPairParams<T>> pairs;  // ascending beta
  Matrix<T> T_fwd;  // columns [r, u1, v1, u2, v2, ...]
  Matrix<T> T_inv;

  // The block-diagonal matrix T^-1 a^-1 T should equal.
  Matrix<T> block_form() const {
    const auto n = static_cast<std::size_t>(s);
    Matrix<T> m(n, n);
    m(0, 0) = gamma;
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      const std::size_t k = 1 + 2 * j;
      m(k, k) = pairs[j].alpha;
      m(k, k + 1) = -pairs[j].beta;
      m(k + 1, k) = pairs[j].beta;
      m(k + 1, k + 1) = pairs[j].alpha;
    }
    return m;
  }
};

template <class T>
SpectralTransform<T> build_transform(const RadauTableau<T>& tab) {
  check_stage_count(tab.s);
  const auto n = static_cast<std::size_t>(tab.s);
  const Matrix<T> a_inv = mat_inverse(tab.a);
  const auto spec = eig_real_plus_pairs(a_inv);

  SpectralTransform<T> st;
  st.s = tab.s;
  st.gamma = spec.gamma;
  st.T_fwd = Matrix<T>(n, n);
  for (std::size_t i = 0; i < n; ++i) st.T_fwd(i, 0) = spec.r[i];
  for (std::size_t j = 0; j < spec.pairs.size(); ++j) {
    const auto& p = spec.pairs[j];
    st.pairs.push_back({p.alpha, p.beta});
    for (std::size_t i = 0; i < n; ++i) {
      st.T_fwd(i, 1 + 2 * j) = p.u[i];
      st.T_fwd(i, 2 + 2 * j) = p.v[i];
    }
  }
  st.T_inv = mat_inverse(st.T_fwd);
  return st;
}

// True iff T^-1 a^-1 T matches the transform's block form entrywise within
// `tol` (off-block entries below tol, diagonal blocks equal to gamma and
// (alpha_j, beta_j)).
template <class T>
bool verify_block_diagonal(const SpectralTransform<T>& st, const Matrix<T>& a_inv, const T& tol) {
  using std::abs;
  if (a_inv.rows() != st.T_fwd.rows() || !a_inv.square()) {
    throw DimensionMismatch("verify_block_diagonal: dimension mismatch");
  }
  const Matrix<T> conj = st.T_inv * a_inv * st.T_fwd;
  const Matrix<T> expected = st.block_form();
  for (std::size_t i = 0; i < conj.rows(); ++i)
    for (std::size_t j = 0; j < conj.cols(); ++j) {
      if (!(abs(conj(i, j) - expected(i, j)) < tol)) return false;
    }
  return true;
}

// Largest |entry| of T^-1 a^-1 T outside the diagonal blocks.
template <class T>
T max_off_block(const SpectralTransform<T>& st, const Matrix<T>& a_inv) {
  using std::abs;
  const Matrix<T> conj = st.T_inv * a_inv * st.T_fwd;
  auto block_of = [](std::size_t i) -> std::size_t { return i == 0 ? 0 : (i + 1) / 2; };
  T worst(0);
  for (std::size_t i = 0; i < conj.rows(); ++i)
    for (std::size_t j = 0; j < conj.cols(); ++j)
      if (block_of(i) != block_of(j)) worst = std::max(worst, T(abs(conj(i, j))));
  return worst;
}

template <class U, class T>
SpectralTransform<U> round_transform(const SpectralTransform<T>& src) {
  SpectralTransform<U> out;
  out.s = src.s;
  out.gamma = convert<U>(src.gamma);
  for (const auto& p : src.pairs) out.pairs.push_back({convert<U>(p.alpha), convert<U>(p.beta)});
  out.T_fwd = src.T_fwd.template cast<U>();
  out.T_inv = src.T_inv.template cast<U>();
  return out;
}

}  // namespace radau
