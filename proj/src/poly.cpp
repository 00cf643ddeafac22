#include "radau/poly.hpp"

#include <stdexcept>

namespace radau {

std::vector<mpz_class> radau_polynomial_coefficients(int s) {
  if (s < 1) throw std::invalid_argument("stage count must be positive");
  // x^(s-1) (x-1)^s = sum_k C(s,k) (-1)^(s-k) x^(s-1+k)
  std::vector<mpz_class> c(2 * s, 0);
  for (int k = 0; k <= s; ++k) {
    mpz_class binom;
    mpz_bin_uiui(binom.get_mpz_t(), s, k);
    c[s - 1 + k] = ((s - k) % 2 == 0) ? binom : mpz_class(-binom);
  }
  for (int d = 0; d < s - 1; ++d) {
    std::vector<mpz_class> next(c.size() - 1);
    for (std::size_t m = 1; m < c.size(); ++m) next[m - 1] = c[m] * static_cast<long>(m);
    c = std::move(next);
  }
  return c;
}

}  // namespace radau
