// Exact rational arithmetic and sparse matrices over Q.

#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace knotcycle {

/// Arbitrary-precision rational. GMP keeps it in lowest terms with a positive
/// denominator as long as every constructor goes through make_rational.
using Rational = mpq_class;

Rational make_rational(long num, long den = 1);

/// "a/b", or "a" when the denominator is one.
std::string to_string(const Rational& q);

/// Inverse of to_string. Accepts "a", "-a", "a/b".
Rational parse_rational(std::string_view text);

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class SparseMatrix {
 public:
  using Index = std::pair<std::size_t, std::size_t>;

  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nonzeros() const { return entries_.size(); }

  Rational at(std::size_t r, std::size_t c) const;
  void set(std::size_t r, std::size_t c, const Rational& value);
  void add(std::size_t r, std::size_t c, const Rational& value);

  const std::map<Index, Rational>& entries() const { return entries_; }

  bool is_zero() const { return entries_.empty(); }

  SparseMatrix transposed() const;
  SparseMatrix permuted(const std::vector<std::size_t>& row_perm,
                        const std::vector<std::size_t>& col_perm) const;

  friend SparseMatrix operator*(const SparseMatrix& a, const SparseMatrix& b);

 private:
  void check_bounds(std::size_t r, std::size_t c) const;

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::map<Index, Rational> entries_;
};

/// Rank over Q by exact Gaussian elimination. The pivot in each column is the
/// entry of smallest magnitude among the remaining rows.
std::size_t rank(const SparseMatrix& m);

/// dim ker(d_out) - rank(d_in) for C_prev --d_in--> C --d_out--> C_next.
/// Throws ContractViolation if the shapes do not compose or d_out*d_in != 0.
std::size_t homology_rank(const SparseMatrix& d_in, const SparseMatrix& d_out);

}  // namespace knotcycle
