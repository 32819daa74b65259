// Independent reference implementations used only by tests.
#pragma once

#include "knotcycle/exactalg.hpp"

#include <gmpxx.h>

#include <vector>

namespace oracle {

// Bareiss fraction-free elimination on a dense integer copy (entries scaled
// to integers row by row).
inline std::size_t dense_rank(const knotcycle::SparseMatrix& m) {
  const std::size_t r = m.rows(), c = m.cols();
  std::vector<std::vector<mpz_class>> a(r, std::vector<mpz_class>(c, 0));
  std::vector<mpz_class> lcm(r, 1);
  for (const auto& [idx, v] : m.entries()) {
    mpz_class den = v.get_den();
    mpz_lcm(lcm[idx.first].get_mpz_t(), lcm[idx.first].get_mpz_t(), den.get_mpz_t());
  }
  for (const auto& [idx, v] : m.entries()) {
    mpq_class s = v * lcm[idx.first];
    a[idx.first][idx.second] = s.get_num();
  }
  std::size_t rank = 0;
  mpz_class prev = 1;
  for (std::size_t col = 0; col < c && rank < r; ++col) {
    std::size_t piv = rank;
    while (piv < r && a[piv][col] == 0) ++piv;
    if (piv == r) continue;
    std::swap(a[piv], a[rank]);
    for (std::size_t i = rank + 1; i < r; ++i) {
      for (std::size_t j = col + 1; j < c; ++j) {
        a[i][j] = (a[rank][col] * a[i][j] - a[i][col] * a[rank][j]);
        mpz_divexact(a[i][j].get_mpz_t(), a[i][j].get_mpz_t(), prev.get_mpz_t());
      }
      a[i][col] = 0;
    }
    prev = a[rank][col];
    ++rank;
  }
  return rank;
}

}  // namespace oracle
