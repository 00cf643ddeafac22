#include <Eigen/Eigenvalues>

#include <cmath>

#include "radau/eigen.hpp"

namespace radau::detail {

EigenSeed seed_real_plus_pairs(const Matrix<double>& a) {
  const auto n = static_cast<Eigen::Index>(a.rows());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = a(i, j);

  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, true);
  if (solver.info() != Eigen::Success) {
    throw SpectrumShapeViolation("double-precision eigensolver did not converge");
  }
  const auto values = solver.eigenvalues();
  const auto vectors = solver.eigenvectors();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double real_tol = 1e-7 * scale;

  EigenSeed seed;
  int real_count = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::complex<double> lambda = values(k);
    if (std::abs(lambda.imag()) <= real_tol) {
      ++real_count;
      seed.gamma = lambda.real();
      seed.r.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) seed.r[i] = vectors(i, k).real();
    } else if (lambda.imag() > 0) {
      EigenSeed::Pair p;
      p.alpha = lambda.real();
      p.beta = lambda.imag();
      p.vec.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) p.vec[i] = vectors(i, k);
      seed.pairs.push_back(std::move(p));
    }
  }
  const auto expected_pairs = static_cast<std::size_t>((n - 1) / 2);
  if (real_count != 1 || seed.pairs.size() != expected_pairs) {
    throw SpectrumShapeViolation("expected 1 real eigenvalue and " + std::to_string(expected_pairs) +
                                 " conjugate pairs, found " + std::to_string(real_count) +
                                 " real and " + std::to_string(seed.pairs.size()) + " pairs");
  }
  return seed;
}

}  // namespace radau::detail
