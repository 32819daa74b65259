#include "knotcycle/exactalg.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace knotcycle;

TEST_CASE("rational parsing and printing") {
  CHECK(parse_rational("3/6") == make_rational(1, 2));
  CHECK(parse_rational("-4") == Rational(-4));
  CHECK(to_string(make_rational(-2, 4)) == "-1/2");
  CHECK_THROWS(parse_rational("1/0"));
  CHECK_THROWS(parse_rational("abc"));
}

TEST_CASE("rank of small matrices") {
  SparseMatrix z(3, 4);
  CHECK(rank(z) == 0);

  SparseMatrix id(3, 3);
  for (std::size_t i = 0; i < 3; ++i) id.set(i, i, 1);
  CHECK(rank(id) == 3);

  // second row is -2/3 times the first
  SparseMatrix m(2, 3);
  m.set(0, 0, 3); m.set(0, 1, 6); m.set(0, 2, -9);
  m.set(1, 0, -2); m.set(1, 1, -4); m.set(1, 2, 6);
  CHECK(rank(m) == 1);
}

TEST_CASE("rank agrees with the dense Bareiss oracle on random sparse matrices") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> val(-3, 3), dim(1, 9);
  for (int trial = 0; trial < 300; ++trial) {
    SparseMatrix m(dim(rng), dim(rng));
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j)
        if (rng() % 3 == 0) m.set(i, j, make_rational(val(rng), 1 + rng() % 4));
    // duplicate a row combination now and then to force deficiency
    if (m.rows() > 2 && trial % 2 == 0) {
      for (std::size_t j = 0; j < m.cols(); ++j) m.set(m.rows() - 1, j, m.at(0, j) * 2 - m.at(1, j));
    }
    CHECK(rank(m) == oracle::dense_rank(m));
    CHECK(rank(m) == rank(m.transposed()));
  }
}

TEST_CASE("homology of a circle as a simplicial complex") {
  // vertices a,b,c; edges ab, bc, ca; d: C1 -> C0
  SparseMatrix d1(3, 3);
  d1.set(0, 0, -1); d1.set(1, 0, 1);
  d1.set(1, 1, -1); d1.set(2, 1, 1);
  d1.set(2, 2, -1); d1.set(0, 2, 1);
  SparseMatrix d2(3, 0);
  CHECK(homology_rank(d2, d1) == 1);                 // H1
  CHECK(homology_rank(d1, SparseMatrix(0, 3)) == 1); // H0
}

TEST_CASE("homology_rank contract checks") {
  SparseMatrix a(2, 2), b(3, 3);
  CHECK_THROWS_AS(homology_rank(a, b), ContractViolation);  // shape
  SparseMatrix d_in(2, 1), d_out(1, 2);
  d_in.set(0, 0, 1);
  d_out.set(0, 0, 1);
  CHECK_THROWS_AS(homology_rank(d_in, d_out), ContractViolation);  // d_out d_in != 0
}

TEST_CASE("product and permutation") {
  SparseMatrix a(2, 2), b(2, 1);
  a.set(0, 0, 1); a.set(0, 1, 2); a.set(1, 1, make_rational(1, 2));
  b.set(0, 0, 3); b.set(1, 0, 4);
  auto p = a * b;
  CHECK(p.at(0, 0) == 11);
  CHECK(p.at(1, 0) == 2);
  auto q = a.permuted({1, 0}, {1, 0});
  CHECK(q.at(1, 1) == 1);
  CHECK(q.at(1, 0) == 2);
  CHECK(q.at(0, 0) == make_rational(1, 2));
}
