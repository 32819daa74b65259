#include "knotcycle/exactalg.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

namespace knotcycle {

Rational make_rational(long num, long den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

std::string to_string(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

Rational parse_rational(std::string_view text) {
  std::string s(text);
  auto slash = s.find('/');
  try {
    mpz_class num(s.substr(0, slash));
    mpz_class den(1);
    if (slash != std::string::npos) den = mpz_class(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator");
    Rational q(num, den);
    q.canonicalize();
    return q;
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("malformed rational '" + s + "'");
  }
}

void SparseMatrix::check_bounds(std::size_t r, std::size_t c) const {
  if (r >= rows_ || c >= cols_) {
    std::ostringstream os;
    os << "index (" << r << "," << c << ") outside " << rows_ << "x" << cols_;
    throw std::out_of_range(os.str());
  }
}

Rational SparseMatrix::at(std::size_t r, std::size_t c) const {
  check_bounds(r, c);
  auto it = entries_.find({r, c});
  return it == entries_.end() ? Rational(0) : it->second;
}

void SparseMatrix::set(std::size_t r, std::size_t c, const Rational& value) {
  check_bounds(r, c);
  if (value == 0)
    entries_.erase({r, c});
  else
    entries_[{r, c}] = value;
}

void SparseMatrix::add(std::size_t r, std::size_t c, const Rational& value) {
  check_bounds(r, c);
  if (value == 0) return;
  auto [it, inserted] = entries_.try_emplace({r, c}, value);
  if (!inserted) {
    it->second += value;
    if (it->second == 0) entries_.erase(it);
  }
}

SparseMatrix SparseMatrix::transposed() const {
  SparseMatrix t(cols_, rows_);
  for (const auto& [idx, v] : entries_) t.entries_[{idx.second, idx.first}] = v;
  return t;
}

SparseMatrix SparseMatrix::permuted(const std::vector<std::size_t>& row_perm,
                                    const std::vector<std::size_t>& col_perm) const {
  if (row_perm.size() != rows_ || col_perm.size() != cols_)
    throw std::invalid_argument("permutation size mismatch");
  SparseMatrix p(rows_, cols_);
  for (const auto& [idx, v] : entries_) p.entries_[{row_perm[idx.first], col_perm[idx.second]}] = v;
  return p;
}

SparseMatrix operator*(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols_ != b.rows_) throw ContractViolation("matrix product shape mismatch");
  // Row-bucket b for the inner loop.
  std::vector<std::vector<std::pair<std::size_t, const Rational*>>> b_rows(b.rows_);
  for (const auto& [idx, v] : b.entries_) b_rows[idx.first].emplace_back(idx.second, &v);
  SparseMatrix c(a.rows_, b.cols_);
  for (const auto& [idx, v] : a.entries_)
    for (const auto& [col, w] : b_rows[idx.second]) c.add(idx.first, col, v * *w);
  return c;
}

std::size_t rank(const SparseMatrix& m) {
  using Row = std::map<std::size_t, Rational>;
  std::vector<Row> rows(m.rows());
  for (const auto& [idx, v] : m.entries()) rows[idx.first].emplace(idx.second, v);
  std::erase_if(rows, [](const Row& r) { return r.empty(); });

  std::size_t r = 0;
  std::vector<bool> used(rows.size(), false);
  for (std::size_t col = 0; col < m.cols(); ++col) {
    std::size_t pivot = rows.size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (used[i]) continue;
      auto it = rows[i].find(col);
      if (it == rows[i].end()) continue;
      if (pivot == rows.size() || abs(it->second) < abs(rows[pivot].at(col))) pivot = i;
    }
    if (pivot == rows.size()) continue;
    used[pivot] = true;
    ++r;
    const Row& prow = rows[pivot];
    const Rational pv = prow.at(col);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (used[i]) continue;
      auto it = rows[i].find(col);
      if (it == rows[i].end()) continue;
      const Rational factor = it->second / pv;
      for (const auto& [c, v] : prow) {
        auto [jt, inserted] = rows[i].try_emplace(c, 0);
        jt->second -= factor * v;
        if (jt->second == 0) rows[i].erase(jt);
      }
    }
  }
  return r;
}

std::size_t homology_rank(const SparseMatrix& d_in, const SparseMatrix& d_out) {
  if (d_out.cols() != d_in.rows())
    throw ContractViolation("d_out and d_in do not compose");
  if (!(d_out * d_in).is_zero()) throw ContractViolation("d_out * d_in != 0");
  const std::size_t dim = d_out.cols();
  return dim - rank(d_out) - rank(d_in);
}

}  // namespace knotcycle
