// Bracket expressions: products of nested brackets in the variables x_1..x_p,
// with the doubling differential d1 and its homology.

#pragma once

#include "knotcycle/exactalg.hpp"

#include <json.hpp>

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace knotcycle::brackets {

/// A leaf x_k or a bracket [left, right]. Stored as a prefix code: a positive
/// entry is a leaf index, 0 opens a bracket whose two subtrees follow.
class BracketTree {
 public:
  static BracketTree leaf(int index);
  static BracketTree bracket(const BracketTree& left, const BracketTree& right);

  bool is_leaf() const { return code_.size() == 1; }
  int leaf_index() const;
  BracketTree left() const;
  BracketTree right() const;

  int min_leaf() const;
  int leaf_count() const;
  /// Number of brackets (internal nodes).
  int bracket_count() const { return static_cast<int>(code_.size()) / 2; }
  std::vector<int> leaves() const;
  bool contains(int index) const;

  const std::vector<int>& code() const { return code_; }
  auto operator<=>(const BracketTree&) const = default;

  std::string str() const;

 private:
  explicit BracketTree(std::vector<int> code) : code_(std::move(code)) {}
  std::size_t subtree_end(std::size_t begin) const;

  std::vector<int> code_;
};

/// A product of bracket trees. Single-leaf factors are free variables.
class BracketMonomial {
 public:
  BracketMonomial() = default;
  /// Validates that the leaves are exactly {1..p}.
  explicit BracketMonomial(std::vector<BracketTree> factors);

  const std::vector<BracketTree>& factors() const { return factors_; }
  int arity() const { return arity_; }
  int bracket_count() const;
  bool has_free_variable() const;

  auto operator<=>(const BracketMonomial&) const = default;
  std::string str() const;

 private:
  std::vector<BracketTree> factors_;
  int arity_ = 0;
};

/// Independent sign choices; the Koszul signs use the degree of a tree, which
/// is (bracket count) * (d - 1) taken mod 2.
struct SignConvention {
  bool d_even = true;
  bool product_koszul = true;   // a.b = (-1)^{|a||b|} b.a, else a.b = b.a
  bool bracket_minus = true;    // leading -1 in bracket symmetry
  bool bracket_shift = true;    // bracket symmetry exponent uses |a|+s, |b|+s
  bool leibniz_koszul = true;   // Koszul sign when a bracket passes a factor

  int shift() const { return d_even ? 1 : 0; }
  int degree(const BracketTree& t) const { return (t.bracket_count() * shift()) & 1; }
  /// [a,b] = bracket_swap_sign(a,b) [b,a]
  int bracket_swap_sign(int deg_a, int deg_b) const;
  /// a.b = product_swap_sign(a,b) b.a
  int product_swap_sign(int deg_a, int deg_b) const;
  int leibniz_sign(int deg_bracketed, int deg_passed) const;

  auto operator<=>(const SignConvention&) const = default;
  std::string str() const;
};

/// Standard graded Poisson signs: products graded commutative, bracket
/// symmetry and Leibniz in the shifted degrees. d1 o d1 = 0 holds; for d even
/// beta_1 + beta_2 is not a cycle here (no flag combination does both, see
/// search_convention), its closure needs the extra term 2 [[x1,x5],x3].[x2,x4].
SignConvention shipped_convention();


/// Terms map canonical monomials to nonzero coefficients.
class BracketSum {
 public:
  BracketSum() = default;

  void add(const BracketMonomial& m, const Rational& c);
  void add(const BracketSum& other, const Rational& scale = Rational(1));

  const std::map<BracketMonomial, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  Rational coefficient(const BracketMonomial& m) const;

  bool operator==(const BracketSum&) const = default;
  std::string str() const;

 private:
  std::map<BracketMonomial, Rational> terms_;
};

/// Unnormalized expression: leaves, brackets and products in any nesting.
struct RawExpr {
  enum class Kind : std::uint8_t { leaf, bracket, product };
  Kind kind = Kind::leaf;
  int index = 0;
  std::vector<RawExpr> children;

  static RawExpr var(int i) { return {Kind::leaf, i, {}}; }
  static RawExpr br(RawExpr a, RawExpr b) { return {Kind::bracket, 0, {std::move(a), std::move(b)}}; }
  static RawExpr prod(std::vector<RawExpr> cs) { return {Kind::product, 0, std::move(cs)}; }
  static RawExpr from(const BracketTree& t);
  static RawExpr from(const BracketMonomial& m);
};

struct RawTerm {
  Rational coefficient;
  RawExpr expr;
};

/// Leibniz-expands products out of brackets, orients every bracket with its
/// least leaf on the left, sorts factors by least leaf and combines like terms.
BracketSum normalize(const std::vector<RawTerm>& raw, const SignConvention& conv);
BracketSum normalize(const RawExpr& raw, const SignConvention& conv);

/// Canonical form of a single monomial: (sign, canonical monomial).
std::pair<int, BracketMonomial> canonical(const BracketMonomial& m, const SignConvention& conv);

int rank_of_var(const BracketMonomial& m, int i);
BracketMonomial remove_var(const BracketMonomial& m, int i);

/// The coface (delta^i)_*, 0 <= i <= p+1.
BracketSum delta_i(const BracketMonomial& m, int i, const SignConvention& conv);
BracketSum d1(const BracketSum& s, const SignConvention& conv);
BracketSum d1(const BracketMonomial& m, const SignConvention& conv);

/// Canonical monomials of arity p with q brackets, every variable inside a
/// bracket. Jacobi-related monomials are kept as distinct elements.
std::vector<BracketMonomial> e1_basis(int p, int q);

/// Matrix of d1 from e1_basis(p, q) to e1_basis(p+1, q). Throws
/// ContractViolation if a free-variable term survives.
SparseMatrix d1_matrix(int p, int q, const SignConvention& conv);

/// Jacobi relations spanning a subspace of span(e1_basis(p, q)), as columns.
SparseMatrix jacobi_relations(int p, int q, const SignConvention& conv);

struct E2Result {
  std::size_t rank_without_jacobi = 0;
  std::size_t rank_with_jacobi = 0;
  bool jacobi_preserved = true;  // d1 maps Jacobi relations into Jacobi relations
};

std::size_t e2_rank(int p, int q, const SignConvention& conv);
E2Result e2_rank_detailed(int p, int q, const SignConvention& conv);

/// The cycle beta = beta_1 + beta_2 in five variables.
BracketMonomial beta1();
BracketMonomial beta2();
BracketSum beta(const SignConvention& conv);
/// beta_1 + beta_2 + 2 [[x1,x5],x3].[x2,x4], a d1-cycle for d even under the
/// shipped convention.
BracketSum beta_closed(const SignConvention& conv);

/// Searches the 16 convention combinations (default first) for one passing
/// both checks.
std::optional<SignConvention> search_convention(bool d_even);
bool convention_is_consistent(const SignConvention& conv, int max_p = 4);

// JSON: a factor is an int or a two-element array, a monomial is an array of
// factors, a sum is an array of {"coeff": "a/b", "monomial": [...]}.
nlohmann::json to_json(const BracketTree& t);
nlohmann::json to_json(const BracketMonomial& m);
nlohmann::json to_json(const BracketSum& s);
BracketTree tree_from_json(const nlohmann::json& j);
BracketMonomial monomial_from_json(const nlohmann::json& j);
/// Reads raw terms and normalizes them.
BracketSum sum_from_json(const nlohmann::json& j, const SignConvention& conv);

}  // namespace knotcycle::brackets
