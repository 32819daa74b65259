#include "knotcycle/brackets.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace knotcycle::brackets {

namespace {

int neg_pow(int e) { return (e & 1) ? -1 : 1; }

}  // namespace

// ---------------------------------------------------------------- BracketTree

BracketTree BracketTree::leaf(int index) {
  if (index < 1) throw std::invalid_argument("variable index must be >= 1");
  return BracketTree({index});
}

BracketTree BracketTree::bracket(const BracketTree& left, const BracketTree& right) {
  std::vector<int> code;
  code.reserve(1 + left.code_.size() + right.code_.size());
  code.push_back(0);
  code.insert(code.end(), left.code_.begin(), left.code_.end());
  code.insert(code.end(), right.code_.begin(), right.code_.end());
  return BracketTree(std::move(code));
}

int BracketTree::leaf_index() const {
  if (!is_leaf()) throw std::logic_error("not a leaf");
  return code_[0];
}

std::size_t BracketTree::subtree_end(std::size_t begin) const {
  int need = 1;
  std::size_t i = begin;
  while (need > 0) {
    need += code_[i] == 0 ? 1 : -1;
    ++i;
  }
  return i;
}

BracketTree BracketTree::left() const {
  if (is_leaf()) throw std::logic_error("leaf has no children");
  auto end = subtree_end(1);
  return BracketTree(std::vector<int>(code_.begin() + 1, code_.begin() + static_cast<long>(end)));
}

BracketTree BracketTree::right() const {
  if (is_leaf()) throw std::logic_error("leaf has no children");
  auto mid = subtree_end(1);
  return BracketTree(std::vector<int>(code_.begin() + static_cast<long>(mid), code_.end()));
}

int BracketTree::min_leaf() const {
  int m = 0;
  for (int c : code_)
    if (c > 0 && (m == 0 || c < m)) m = c;
  return m;
}

int BracketTree::leaf_count() const { return static_cast<int>(code_.size() + 1) / 2; }

std::vector<int> BracketTree::leaves() const {
  std::vector<int> out;
  for (int c : code_)
    if (c > 0) out.push_back(c);
  return out;
}

bool BracketTree::contains(int index) const {
  return std::find(code_.begin(), code_.end(), index) != code_.end();
}

std::string BracketTree::str() const {
  if (is_leaf()) return "x" + std::to_string(code_[0]);
  return "[" + left().str() + "," + right().str() + "]";
}

// ------------------------------------------------------------ BracketMonomial

BracketMonomial::BracketMonomial(std::vector<BracketTree> factors) : factors_(std::move(factors)) {
  std::vector<int> seen;
  for (const auto& f : factors_) {
    auto l = f.leaves();
    seen.insert(seen.end(), l.begin(), l.end());
  }
  std::sort(seen.begin(), seen.end());
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i] != static_cast<int>(i) + 1)
      throw std::invalid_argument("monomial variables must be exactly x1..xp, each once");
  }
  arity_ = static_cast<int>(seen.size());
}

int BracketMonomial::bracket_count() const {
  int q = 0;
  for (const auto& f : factors_) q += f.bracket_count();
  return q;
}

bool BracketMonomial::has_free_variable() const {
  return std::any_of(factors_.begin(), factors_.end(), [](const BracketTree& t) { return t.is_leaf(); });
}

std::string BracketMonomial::str() const {
  std::string s;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (i) s += ".";
    s += factors_[i].str();
  }
  return s.empty() ? "1" : s;
}

// ------------------------------------------------------------- SignConvention

int SignConvention::bracket_swap_sign(int deg_a, int deg_b) const {
  int e = bracket_shift ? (deg_a + shift()) * (deg_b + shift()) : deg_a * deg_b;
  return (bracket_minus ? -1 : 1) * neg_pow(e);
}

int SignConvention::product_swap_sign(int deg_a, int deg_b) const {
  return product_koszul ? neg_pow(deg_a * deg_b) : 1;
}

int SignConvention::leibniz_sign(int deg_bracketed, int deg_passed) const {
  return leibniz_koszul ? neg_pow((deg_bracketed + shift()) * deg_passed) : 1;
}

std::string SignConvention::str() const {
  std::ostringstream os;
  os << (d_even ? "d-even" : "d-odd") << " product_koszul=" << product_koszul
     << " bracket_minus=" << bracket_minus << " bracket_shift=" << bracket_shift
     << " leibniz_koszul=" << leibniz_koszul;
  return os.str();
}

SignConvention shipped_convention() { return SignConvention{}; }

// ----------------------------------------------------------------- BracketSum

void BracketSum::add(const BracketMonomial& m, const Rational& c) {
  if (c == 0) return;
  if (!terms_.empty() && terms_.begin()->first.arity() != m.arity())
    throw std::invalid_argument("BracketSum terms must share arity");
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

void BracketSum::add(const BracketSum& other, const Rational& scale) {
  for (const auto& [m, c] : other.terms_) add(m, c * scale);
}

Rational BracketSum::coefficient(const BracketMonomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? Rational(0) : it->second;
}

std::string BracketSum::str() const {
  if (terms_.empty()) return "0";
  std::string s;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    if (!first) s += " + ";
    first = false;
    s += "(" + to_string(c) + ")" + m.str();
  }
  return s;
}

// -------------------------------------------------------------- normalization

RawExpr RawExpr::from(const BracketTree& t) {
  if (t.is_leaf()) return var(t.leaf_index());
  return br(from(t.left()), from(t.right()));
}

RawExpr RawExpr::from(const BracketMonomial& m) {
  std::vector<RawExpr> cs;
  for (const auto& f : m.factors()) cs.push_back(from(f));
  return prod(std::move(cs));
}

namespace {

struct Term {
  int sign;
  std::vector<BracketTree> factors;
};

using Terms = std::vector<Term>;

int total_degree(const std::vector<BracketTree>& fs, const SignConvention& conv) {
  int d = 0;
  for (const auto& f : fs) d += conv.degree(f);
  return d & 1;
}

Terms bracket_products(const std::vector<BracketTree>& p, const std::vector<BracketTree>& q,
                       const SignConvention& conv) {
  if (q.size() > 1) {
    // [P, q1...qn] = sum_k (+-) q1..q_{k-1} [P, q_k] q_{k+1}..qn
    Terms out;
    const int deg_p = total_degree(p, conv);
    int passed = 0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      const int s = conv.leibniz_sign(deg_p, passed);
      for (auto& inner : bracket_products(p, {q[k]}, conv)) {
        Term t{s * inner.sign, {}};
        t.factors.insert(t.factors.end(), q.begin(), q.begin() + static_cast<long>(k));
        t.factors.insert(t.factors.end(), inner.factors.begin(), inner.factors.end());
        t.factors.insert(t.factors.end(), q.begin() + static_cast<long>(k) + 1, q.end());
        out.push_back(std::move(t));
      }
      passed = (passed + conv.degree(q[k])) & 1;
    }
    return out;
  }
  if (p.size() > 1) {
    const int s = conv.bracket_swap_sign(total_degree(p, conv), total_degree(q, conv));
    Terms out = bracket_products(q, p, conv);
    for (auto& t : out) t.sign *= s;
    return out;
  }
  return {Term{1, {BracketTree::bracket(p[0], q[0])}}};
}

Terms expand(const RawExpr& e, const SignConvention& conv) {
  switch (e.kind) {
    case RawExpr::Kind::leaf:
      return {Term{1, {BracketTree::leaf(e.index)}}};
    case RawExpr::Kind::product: {
      Terms acc{Term{1, {}}};
      for (const auto& c : e.children) {
        Terms next;
        for (const auto& right : expand(c, conv)) {
          for (const auto& left : acc) {
            Term t{left.sign * right.sign, left.factors};
            t.factors.insert(t.factors.end(), right.factors.begin(), right.factors.end());
            next.push_back(std::move(t));
          }
        }
        acc = std::move(next);
      }
      return acc;
    }
    case RawExpr::Kind::bracket: {
      if (e.children.size() != 2) throw std::invalid_argument("bracket needs two arguments");
      Terms out;
      auto ls = expand(e.children[0], conv);
      auto rs = expand(e.children[1], conv);
      for (const auto& l : ls) {
        for (const auto& r : rs) {
          for (auto& t : bracket_products(l.factors, r.factors, conv)) {
            t.sign *= l.sign * r.sign;
            out.push_back(std::move(t));
          }
        }
      }
      return out;
    }
  }
  return {};
}

std::pair<int, BracketTree> orient(const BracketTree& t, const SignConvention& conv) {
  if (t.is_leaf()) return {1, t};
  auto [sl, l] = orient(t.left(), conv);
  auto [sr, r] = orient(t.right(), conv);
  int s = sl * sr;
  if (r.min_leaf() < l.min_leaf()) {
    s *= conv.bracket_swap_sign(conv.degree(l), conv.degree(r));
    std::swap(l, r);
  }
  return {s, BracketTree::bracket(l, r)};
}

std::pair<int, std::vector<BracketTree>> canonical_factors(std::vector<BracketTree> fs,
                                                           const SignConvention& conv) {
  int sign = 1;
  for (auto& f : fs) {
    auto [s, o] = orient(f, conv);
    sign *= s;
    f = std::move(o);
  }
  // Insertion sort by least leaf, charging the product swap sign per transposition.
  for (std::size_t i = 1; i < fs.size(); ++i) {
    for (std::size_t j = i; j > 0 && fs[j].min_leaf() < fs[j - 1].min_leaf(); --j) {
      sign *= conv.product_swap_sign(conv.degree(fs[j - 1]), conv.degree(fs[j]));
      std::swap(fs[j - 1], fs[j]);
    }
  }
  return {sign, std::move(fs)};
}

void collect_leaves(const RawExpr& e, std::vector<int>& out) {
  if (e.kind == RawExpr::Kind::leaf) {
    out.push_back(e.index);
    return;
  }
  for (const auto& c : e.children) collect_leaves(c, out);
}

void validate_variables(const RawExpr& e) {
  std::vector<int> leaves;
  collect_leaves(e, leaves);
  std::sort(leaves.begin(), leaves.end());
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (leaves[i] != static_cast<int>(i) + 1)
      throw std::invalid_argument("expression has repeated or missing variables");
  }
}

}  // namespace

BracketSum normalize(const std::vector<RawTerm>& raw, const SignConvention& conv) {
  BracketSum out;
  for (const auto& rt : raw) {
    validate_variables(rt.expr);
    for (auto& t : expand(rt.expr, conv)) {
      auto [s, fs] = canonical_factors(std::move(t.factors), conv);
      out.add(BracketMonomial(std::move(fs)), rt.coefficient * (s * t.sign));
    }
  }
  return out;
}

BracketSum normalize(const RawExpr& raw, const SignConvention& conv) {
  return normalize(std::vector<RawTerm>{{Rational(1), raw}}, conv);
}

std::pair<int, BracketMonomial> canonical(const BracketMonomial& m, const SignConvention& conv) {
  auto [s, fs] = canonical_factors(m.factors(), conv);
  return {s, BracketMonomial(std::move(fs))};
}

// ---------------------------------------------------------- variable surgery

namespace {

void check_index(const BracketMonomial& m, int i) {
  if (i < 1 || i > m.arity()) throw std::out_of_range("variable index out of range");
}

std::optional<BracketTree> remove_leaf(const BracketTree& t, int i) {
  if (t.is_leaf()) {
    int k = t.leaf_index();
    if (k == i) return std::nullopt;
    return BracketTree::leaf(k > i ? k - 1 : k);
  }
  auto l = remove_leaf(t.left(), i);
  auto r = remove_leaf(t.right(), i);
  if (!l) return r;
  if (!r) return l;
  return BracketTree::bracket(*l, *r);
}

RawExpr substitute(const BracketTree& t, int i) {
  if (t.is_leaf()) {
    int k = t.leaf_index();
    if (k < i) return RawExpr::var(k);
    if (k > i) return RawExpr::var(k + 1);
    return RawExpr::prod({RawExpr::var(i), RawExpr::var(i + 1)});
  }
  return RawExpr::br(substitute(t.left(), i), substitute(t.right(), i));
}

RawExpr shifted(const BracketTree& t, int by) {
  if (t.is_leaf()) return RawExpr::var(t.leaf_index() + by);
  return RawExpr::br(shifted(t.left(), by), shifted(t.right(), by));
}

}  // namespace

int rank_of_var(const BracketMonomial& m, int i) {
  check_index(m, i);
  for (const auto& f : m.factors()) {
    if (f.contains(i)) return f.is_leaf() ? 0 : f.leaf_count();
  }
  return 0;
}

BracketMonomial remove_var(const BracketMonomial& m, int i) {
  check_index(m, i);
  std::vector<BracketTree> fs;
  for (const auto& f : m.factors()) {
    if (auto r = remove_leaf(f, i)) fs.push_back(*r);
  }
  std::stable_sort(fs.begin(), fs.end(),
                   [](const BracketTree& a, const BracketTree& b) { return a.min_leaf() < b.min_leaf(); });
  return BracketMonomial(std::move(fs));
}

BracketSum delta_i(const BracketMonomial& m, int i, const SignConvention& conv) {
  const int p = m.arity();
  if (i < 0 || i > p + 1) throw std::out_of_range("coface index out of range");
  std::vector<RawExpr> cs;
  if (i == 0) {
    cs.push_back(RawExpr::var(1));
    for (const auto& f : m.factors()) cs.push_back(shifted(f, 1));
  } else if (i == p + 1) {
    for (const auto& f : m.factors()) cs.push_back(RawExpr::from(f));
    cs.push_back(RawExpr::var(p + 1));
  } else {
    for (const auto& f : m.factors()) cs.push_back(substitute(f, i));
  }
  return normalize(RawExpr::prod(std::move(cs)), conv);
}

BracketSum d1(const BracketMonomial& m, const SignConvention& conv) {
  BracketSum out;
  for (int i = 0; i <= m.arity() + 1; ++i)
    out.add(delta_i(m, i, conv), Rational((i & 1) ? -1 : 1));
  return out;
}

BracketSum d1(const BracketSum& s, const SignConvention& conv) {
  BracketSum out;
  for (const auto& [m, c] : s.terms()) out.add(d1(m, conv), c);
  return out;
}

// ----------------------------------------------------------------- E1 basis

namespace {

std::vector<BracketTree> all_trees(const std::vector<int>& leaves) {
  if (leaves.size() == 1) return {BracketTree::leaf(leaves[0])};
  std::vector<BracketTree> out;
  const std::size_t n = leaves.size();
  // The left part always holds leaves[0]; bit k selects leaves[k+1].
  for (std::uint32_t mask = 0; mask + 1 < (1u << (n - 1)); ++mask) {
    std::vector<int> l{leaves[0]}, r;
    for (std::size_t k = 1; k < n; ++k) ((mask >> (k - 1)) & 1u ? l : r).push_back(leaves[k]);
    for (const auto& tl : all_trees(l))
      for (const auto& tr : all_trees(r)) out.push_back(BracketTree::bracket(tl, tr));
  }
  return out;
}

// Set partitions of {1..p} into exactly `blocks` blocks of size >= 2.
void partitions(int next, int p, int blocks, std::vector<std::vector<int>>& cur,
                std::vector<std::vector<std::vector<int>>>& out) {
  if (next > p) {
    if (static_cast<int>(cur.size()) == blocks &&
        std::all_of(cur.begin(), cur.end(), [](const auto& b) { return b.size() >= 2; }))
      out.push_back(cur);
    return;
  }
  for (std::size_t k = 0; k < cur.size(); ++k) {
    cur[k].push_back(next);
    partitions(next + 1, p, blocks, cur, out);
    cur[k].pop_back();
  }
  if (static_cast<int>(cur.size()) < blocks) {
    cur.push_back({next});
    partitions(next + 1, p, blocks, cur, out);
    cur.pop_back();
  }
}

}  // namespace

std::vector<BracketMonomial> e1_basis(int p, int q) {
  if (p < 1 || q < 1) throw std::invalid_argument("e1_basis needs p, q >= 1");
  const int blocks = p - q;
  if (blocks < 1) return {};
  std::vector<std::vector<std::vector<int>>> parts;
  std::vector<std::vector<int>> cur;
  partitions(1, p, blocks, cur, parts);
  std::vector<BracketMonomial> out;
  for (const auto& part : parts) {
    std::vector<std::vector<BracketTree>> choices;
    for (const auto& b : part) choices.push_back(all_trees(b));
    std::vector<std::size_t> idx(choices.size(), 0);
    while (true) {
      std::vector<BracketTree> fs;
      for (std::size_t k = 0; k < choices.size(); ++k) fs.push_back(choices[k][idx[k]]);
      out.emplace_back(std::move(fs));
      std::size_t k = 0;
      while (k < idx.size() && ++idx[k] == choices[k].size()) idx[k++] = 0;
      if (k == idx.size()) break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

SparseMatrix d1_matrix(int p, int q, const SignConvention& conv) {
  auto src = e1_basis(p, q);
  auto dst = e1_basis(p + 1, q);
  std::map<BracketMonomial, std::size_t> index;
  for (std::size_t i = 0; i < dst.size(); ++i) index.emplace(dst[i], i);
  SparseMatrix m(dst.size(), src.size());
  for (std::size_t j = 0; j < src.size(); ++j) {
    const BracketSum image = d1(src[j], conv);
    for (const auto& [mono, c] : image.terms()) {
      auto it = index.find(mono);
      if (it == index.end())
        throw ContractViolation("d1(" + src[j].str() + ") leaves term " + mono.str() +
                                " outside the bracket subcomplex");
      m.add(it->second, j, c);
    }
  }
  return m;
}

namespace {

// Replace the subtree at prefix position `pos` of factor `f` by `replacement`.
BracketTree replace_subtree(const BracketTree& t, const std::vector<int>& path, std::size_t depth,
                            const BracketTree& replacement) {
  if (depth == path.size()) return replacement;
  if (path[depth] == 0)
    return BracketTree::bracket(replace_subtree(t.left(), path, depth + 1, replacement), t.right());
  return BracketTree::bracket(t.left(), replace_subtree(t.right(), path, depth + 1, replacement));
}

void internal_paths(const BracketTree& t, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (t.is_leaf()) return;
  out.push_back(cur);
  cur.push_back(0);
  internal_paths(t.left(), cur, out);
  cur.back() = 1;
  internal_paths(t.right(), cur, out);
  cur.pop_back();
}

BracketTree subtree_at(const BracketTree& t, const std::vector<int>& path) {
  BracketTree cur = t;
  for (int step : path) cur = step == 0 ? cur.left() : cur.right();
  return cur;
}

}  // namespace

SparseMatrix jacobi_relations(int p, int q, const SignConvention& conv) {
  auto basis = e1_basis(p, q);
  std::map<BracketMonomial, std::size_t> index;
  for (std::size_t i = 0; i < basis.size(); ++i) index.emplace(basis[i], i);
  const int s = conv.shift();

  std::vector<BracketSum> relations;
  for (const auto& m : basis) {
    for (std::size_t fi = 0; fi < m.factors().size(); ++fi) {
      const auto& f = m.factors()[fi];
      std::vector<std::vector<int>> paths;
      std::vector<int> cur;
      internal_paths(f, cur, paths);
      for (const auto& path : paths) {
        const BracketTree node = subtree_at(f, path);
        for (int side = 0; side < 2; ++side) {
          const BracketTree inner = side == 0 ? node.left() : node.right();
          const BracketTree other = side == 0 ? node.right() : node.left();
          if (inner.is_leaf()) continue;
          const BracketTree a = inner.left(), b = inner.right(), c = other;
          // Graded Jacobi in the shifted degrees |x|' = |x| + s:
          // (-1)^{a'c'}[[a,b],c] + (-1)^{b'a'}[[b,c],a] + (-1)^{c'b'}[[c,a],b] = 0
          const int da = conv.degree(a) + s, db = conv.degree(b) + s, dc = conv.degree(c) + s;
          const std::pair<BracketTree, int> cyc[3] = {
              {BracketTree::bracket(BracketTree::bracket(a, b), c), neg_pow(da * dc)},
              {BracketTree::bracket(BracketTree::bracket(b, c), a), neg_pow(db * da)},
              {BracketTree::bracket(BracketTree::bracket(c, a), b), neg_pow(dc * db)},
          };
          BracketSum rel;
          for (const auto& [tree, sign] : cyc) {
            auto fs = m.factors();
            fs[fi] = replace_subtree(f, path, 0, tree);
            auto [cs, cm] = canonical(BracketMonomial(std::move(fs)), conv);
            rel.add(cm, Rational(cs * sign));
          }
          if (!rel.is_zero()) relations.push_back(std::move(rel));
        }
      }
    }
  }
  SparseMatrix j(basis.size(), relations.size());
  for (std::size_t c = 0; c < relations.size(); ++c)
    for (const auto& [mono, coeff] : relations[c].terms()) j.add(index.at(mono), c, coeff);
  return j;
}

namespace {

SparseMatrix hconcat(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows()) throw ContractViolation("hconcat row mismatch");
  SparseMatrix out(a.rows(), a.cols() + b.cols());
  for (const auto& [idx, v] : a.entries()) out.set(idx.first, idx.second, v);
  for (const auto& [idx, v] : b.entries()) out.set(idx.first, a.cols() + idx.second, v);
  return out;
}

// Rank of the map induced by d on quotients by the relation spans.
std::size_t quotient_rank(const SparseMatrix& d, const SparseMatrix& rel_target) {
  return rank(hconcat(d, rel_target)) - rank(rel_target);
}

}  // namespace

std::size_t e2_rank(int p, int q, const SignConvention& conv) {
  const SparseMatrix d_in = p - 1 >= 1 ? d1_matrix(p - 1, q, conv)
                                       : SparseMatrix(e1_basis(p, q).size(), 0);
  const SparseMatrix d_out = d1_matrix(p, q, conv);
  return homology_rank(d_in, d_out);
}

E2Result e2_rank_detailed(int p, int q, const SignConvention& conv) {
  E2Result r;
  r.rank_without_jacobi = e2_rank(p, q, conv);
  const SparseMatrix d_in = p - 1 >= 1 ? d1_matrix(p - 1, q, conv)
                                       : SparseMatrix(e1_basis(p, q).size(), 0);
  const SparseMatrix d_out = d1_matrix(p, q, conv);
  const SparseMatrix j_prev = p - 1 >= 1 ? jacobi_relations(p - 1, q, conv) : SparseMatrix(0, 0);
  const SparseMatrix j_here = jacobi_relations(p, q, conv);
  const SparseMatrix j_next = jacobi_relations(p + 1, q, conv);
  const std::size_t rj = rank(j_here);
  if (j_prev.rows() > 0) {
    r.jacobi_preserved = r.jacobi_preserved && quotient_rank(d_in * j_prev, j_here) == 0;
  }
  r.jacobi_preserved = r.jacobi_preserved && quotient_rank(d_out * j_here, j_next) == 0;
  const std::size_t n = d_out.cols();
  r.rank_with_jacobi = n - rj - quotient_rank(d_out, j_next) - quotient_rank(d_in, j_here);
  return r;
}

// ----------------------------------------------------------------------- beta

BracketMonomial beta1() {
  using T = BracketTree;
  return BracketMonomial({T::bracket(T::bracket(T::leaf(1), T::leaf(4)), T::leaf(3)),
                          T::bracket(T::leaf(2), T::leaf(5))});
}

BracketMonomial beta2() {
  using T = BracketTree;
  return BracketMonomial({T::bracket(T::leaf(1), T::leaf(4)),
                          T::bracket(T::bracket(T::leaf(2), T::leaf(5)), T::leaf(3))});
}

BracketSum beta(const SignConvention& conv) {
  return normalize(std::vector<RawTerm>{{Rational(1), RawExpr::from(beta1())},
                                        {Rational(1), RawExpr::from(beta2())}},
                   conv);
}

BracketSum beta_closed(const SignConvention& conv) {
  using T = BracketTree;
  BracketSum out = beta(conv);
  auto [s, m] = canonical(BracketMonomial({T::bracket(T::bracket(T::leaf(1), T::leaf(5)), T::leaf(3)),
                                           T::bracket(T::leaf(2), T::leaf(4))}),
                          conv);
  out.add(m, Rational(2 * s));
  return out;
}

bool convention_is_consistent(const SignConvention& conv, int max_p) {
  for (int p = 2; p <= max_p; ++p) {
    for (int q = 1; q < p; ++q) {
      for (const auto& m : e1_basis(p, q)) {
        if (!d1(d1(m, conv), conv).is_zero()) return false;
      }
    }
  }
  if (conv.d_even && !d1(beta(conv), conv).is_zero()) return false;
  return true;
}

std::optional<SignConvention> search_convention(bool d_even) {
  for (int mask = 0; mask < 16; ++mask) {
    SignConvention c;
    c.d_even = d_even;
    c.product_koszul = !(mask & 1);
    c.bracket_minus = !(mask & 2);
    c.bracket_shift = !(mask & 4);
    c.leibniz_koszul = !(mask & 8);
    if (convention_is_consistent(c)) return c;
  }
  return std::nullopt;
}

// ----------------------------------------------------------------------- JSON

nlohmann::json to_json(const BracketTree& t) {
  if (t.is_leaf()) return t.leaf_index();
  return nlohmann::json::array({to_json(t.left()), to_json(t.right())});
}

nlohmann::json to_json(const BracketMonomial& m) {
  auto j = nlohmann::json::array();
  for (const auto& f : m.factors()) j.push_back(to_json(f));
  return j;
}

nlohmann::json to_json(const BracketSum& s) {
  auto j = nlohmann::json::array();
  for (const auto& [m, c] : s.terms()) j.push_back({{"coeff", to_string(c)}, {"monomial", to_json(m)}});
  return j;
}

BracketTree tree_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return BracketTree::leaf(j.get<int>());
  if (j.is_array() && j.size() == 2) return BracketTree::bracket(tree_from_json(j[0]), tree_from_json(j[1]));
  throw std::invalid_argument("bracket factor must be an index or a pair: " + j.dump());
}

BracketMonomial monomial_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw std::invalid_argument("monomial must be an array of factors");
  std::vector<BracketTree> fs;
  for (const auto& f : j) fs.push_back(tree_from_json(f));
  return BracketMonomial(std::move(fs));
}

BracketSum sum_from_json(const nlohmann::json& j, const SignConvention& conv) {
  if (!j.is_array()) throw std::invalid_argument("bracket sum must be an array of terms");
  std::vector<RawTerm> raw;
  for (const auto& t : j) {
    const auto coeff = t.contains("coeff") ? parse_rational(t.at("coeff").get<std::string>()) : Rational(1);
    raw.push_back({coeff, RawExpr::from(monomial_from_json(t.at("monomial")))});
  }
  return normalize(raw, conv);
}

}  // namespace knotcycle::brackets
