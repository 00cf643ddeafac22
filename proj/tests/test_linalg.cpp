#include "doctest.h"

#include <random>

#include "radau/linalg.hpp"
#include "radau/mp_real.hpp"
#include "radau/tableau.hpp"

using radau::Matrix;
using radau::Vector;
using radau::mp::PrecisionScope;
using radau::mp::Real;

namespace {

template <class T>
Matrix<T> random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix<T> m(rows, cols);
  for (auto& x : m.data()) x = T(dist(rng));
  return m;
}

template <class T>
T reconstruction_error(const Matrix<T>& a) {
  const auto f = radau::lu_factor(a);
  return radau::norm_inf(radau::permute_rows(a, f.pivots) - radau::lu_reconstruct(f));
}

}  // namespace

TEST_CASE("lu of the identity is trivial") {
  const auto f = radau::lu_factor(Matrix<double>::identity(3));
  CHECK(f.factors == Matrix<double>::identity(3));
  CHECK(f.pivots == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("lu pivots a permutation matrix") {
  const Matrix<double> p{{0, 1}, {1, 0}};
  const auto f = radau::lu_factor(p);
  CHECK(f.pivots == std::vector<std::size_t>{1, 0});
  const Vector<double> x = radau::lu_solve(f, Vector<double>{1, 2});
  CHECK(x == Vector<double>{2, 1});
}

TEST_CASE("lu flags singular matrices") {
  CHECK_THROWS_AS(radau::lu_factor(Matrix<double>{{1, 2}, {2, 4}}), radau::SingularMatrix);
  CHECK_THROWS_AS(radau::lu_factor(Matrix<double>(3, 3)), radau::SingularMatrix);
  CHECK_THROWS_AS(radau::lu_factor(Matrix<double>(2, 3)), radau::DimensionMismatch);
  PrecisionScope scope(256);
  // Singular at 256 bits even though a double round-off would hide it.
  const Real third = Real(1) / Real(3);
  CHECK_THROWS_AS(radau::lu_factor(Matrix<Real>{{Real(1), third}, {Real(3), Real(1)}}),
                  radau::SingularMatrix);
}

TEST_CASE("lu_solve on diagonal and identity systems") {
  const auto f = radau::lu_factor(Matrix<double>{{2, 0}, {0, 4}});
  CHECK(radau::lu_solve(f, Vector<double>{2, 4}) == Vector<double>{1, 1});
  const auto id = radau::lu_factor(Matrix<double>::identity(4));
  const Vector<double> b{3, -1, 0.5, 7};
  CHECK(radau::lu_solve(id, b) == b);
  CHECK_THROWS_AS(radau::lu_solve(f, Vector<double>{1, 2, 3}), radau::DimensionMismatch);
}

TEST_CASE("lu_solve residual on a random well-conditioned system") {
  std::mt19937_64 rng(7);
  Matrix<double> a = random_matrix<double>(5, 5, rng);
  for (std::size_t i = 0; i < 5; ++i) a(i, i) += 5.0;
  const Vector<double> b{1, -2, 3, -4, 5};
  const Vector<double> x = radau::solve(a, b);
  Vector<double> r = a * x;
  for (std::size_t i = 0; i < 5; ++i) r[i] -= b[i];
  CHECK(radau::norm_inf(std::span<const double>(r)) / radau::norm_inf(std::span<const double>(b)) <
        100 * radau::eps<double>());
}

TEST_CASE("lu reconstruction bound on random matrices of dimension 1..26") {
  std::mt19937_64 rng(2024);
  for (std::size_t n = 1; n <= 26; ++n) {
    const auto a = random_matrix<double>(n, n, rng);
    const double err = reconstruction_error(a);
    CHECK(err <= 10.0 * static_cast<double>(n) * radau::eps<double>() * radau::norm_inf(a));
  }
  PrecisionScope scope(200);
  for (std::size_t n : {1u, 5u, 13u, 26u}) {
    const auto a = random_matrix<Real>(n, n, rng);
    const Real err = reconstruction_error(a);
    CHECK(err <= Real(10 * static_cast<long>(n)) * radau::eps<Real>() * radau::norm_inf(a));
  }
}

TEST_CASE("lu reconstructs the three-stage coefficient matrix") {
  const auto tab = radau::build_tableau<double>(3, 53);
  CHECK(reconstruction_error(tab.a) < 10 * radau::eps<double>() * radau::norm_inf(tab.a));
}

TEST_CASE("mat_inverse") {
  CHECK(radau::mat_inverse(Matrix<double>::identity(3)) == Matrix<double>::identity(3));
  CHECK(radau::mat_inverse(Matrix<double>{{2}}) == Matrix<double>{{0.5}});
  CHECK_THROWS_AS(radau::mat_inverse(Matrix<double>{{1, 1}, {1, 1}}), radau::SingularMatrix);

  // Vandermonde matrix of the three-stage nodes; inverse checked by product.
  PrecisionScope scope(256);
  const Real r6 = radau::mp::sqrt(Real(6));
  const Vector<Real> c{(Real(4) - r6) / Real(10), (Real(4) + r6) / Real(10), Real(1)};
  Matrix<Real> v(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) v(i, j) = radau::mp::pow(c[i], static_cast<long>(j));
  const Matrix<Real> prod = v * radau::mat_inverse(v);
  CHECK(radau::norm_inf(prod - Matrix<Real>::identity(3)) < Real(1000) * radau::eps<Real>());
}
