#include "knotcycle/graphcx.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace knotcycle::graphs {

namespace {

int neg_pow(int e) { return (e & 1) ? -1 : 1; }

Edge sorted_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

// Sign of the permutation sorting `edges`; 0 if two entries coincide.
int sort_with_sign(std::vector<Edge>& edges) {
  int sign = 1;
  for (std::size_t i = 1; i < edges.size(); ++i) {
    for (std::size_t j = i; j > 0; --j) {
      if (edges[j] == edges[j - 1]) return 0;
      if (edges[j] > edges[j - 1]) break;
      std::swap(edges[j], edges[j - 1]);
      sign = -sign;
    }
  }
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (edges[i] == edges[i - 1]) return 0;
  return sign;
}

}  // namespace

std::string DecoratedGraph::str() const {
  std::ostringstream os;
  os << "G(v_e=" << v_e << ",v_i=" << v_i << ":";
  for (std::size_t k = 0; k < edges.size(); ++k) os << (k ? "," : "") << "{" << edges[k][0] << "," << edges[k][1] << "}";
  os << ")";
  return os.str();
}

void validate(const DecoratedGraph& g) {
  if (g.v_e < 1 || g.v_i < 0) throw std::invalid_argument("graph needs v_e >= 1 and v_i >= 0");
  const int n = g.vertex_count();
  std::vector<int> valence(static_cast<std::size_t>(n + 1), 0);
  std::vector<int> parent(static_cast<std::size_t>(n + 1));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) v = parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
    return v;
  };
  auto join = [&](int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); };
  for (int v = 2; v <= g.v_e; ++v) join(v, 1);
  for (const auto& e : g.edges) {
    for (int v : e)
      if (v < 1 || v > n) throw std::invalid_argument("edge endpoint out of range in " + g.str());
    ++valence[static_cast<std::size_t>(e[0])];
    ++valence[static_cast<std::size_t>(e[1])];
    join(e[0], e[1]);
  }
  for (int v = 1; v <= n; ++v) {
    const int need = g.is_external(v) ? 1 : 3;
    if (valence[static_cast<std::size_t>(v)] < need)
      throw std::invalid_argument("vertex " + std::to_string(v) + " is below trivalence in " + g.str());
    if (find(v) != find(1)) throw std::invalid_argument("graph is disconnected: " + g.str());
  }
}

std::string GraphConventions::str() const {
  std::ostringstream os;
  os << "rotation_sign=" << rotation_sign << " edge_sign_with_ve=" << edge_sign_with_ve
     << " closing_merge_to_first=" << closing_merge_to_first << " arc_sign_with_ve=" << arc_sign_with_ve;
  return os.str();
}

GraphConventions shipped_graph_conventions() {
  GraphConventions c;
  c.arc_sign_with_ve = true;
  return c;
}

Canonical canonicalize(const DecoratedGraph& g, const GraphConventions& conv) {
  for (const auto& e : g.edges)
    if (e[0] == e[1]) return {0, g};  // loop: internal by definition, external by choice
  {
    std::vector<Edge> probe;
    for (const auto& e : g.edges) probe.push_back(sorted_edge(e[0], e[1]));
    if (sort_with_sign(probe) == 0) return {0, g};
  }

  std::vector<int> internal(static_cast<std::size_t>(g.v_i));
  std::iota(internal.begin(), internal.end(), g.v_e + 1);

  bool have = false, clash = false;
  std::vector<Edge> best;
  int best_sign = 0;
  std::vector<int> relabel(static_cast<std::size_t>(g.vertex_count() + 1));
  for (int k = 0; k < g.v_e; ++k) {
    const int rot_sign = conv.rotation_sign ? neg_pow((g.v_e - 1) * k) : 1;
    for (int v = 1; v <= g.v_e; ++v) relabel[static_cast<std::size_t>(v)] = (v - 1 + k) % g.v_e + 1;
    std::vector<int> perm = internal;
    do {
      for (int j = 0; j < g.v_i; ++j) relabel[static_cast<std::size_t>(g.v_e + 1 + j)] = perm[static_cast<std::size_t>(j)];
      std::vector<Edge> mapped;
      mapped.reserve(g.edges.size());
      for (const auto& e : g.edges)
        mapped.push_back(sorted_edge(relabel[static_cast<std::size_t>(e[0])], relabel[static_cast<std::size_t>(e[1])]));
      const int s = rot_sign * sort_with_sign(mapped);
      if (!have || mapped < best) {
        best = std::move(mapped);
        best_sign = s;
        have = true;
        clash = false;
      } else if (mapped == best && s != best_sign) {
        clash = true;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  DecoratedGraph out{g.v_e, g.v_i, best};
  if (clash) return {0, out};
  return {best_sign, out};
}

// ------------------------------------------------------------------ GraphSum

void GraphSum::add_canonical(const DecoratedGraph& g, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace(g, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

void GraphSum::add(const DecoratedGraph& g, const Rational& c, const GraphConventions& conv) {
  auto can = canonicalize(g, conv);
  if (can.sign == 0) return;
  add_canonical(can.graph, c * can.sign);
}

void GraphSum::add(const GraphSum& other, const Rational& scale) {
  for (const auto& [g, c] : other.terms_) add_canonical(g, c * scale);
}

Rational GraphSum::coefficient(const DecoratedGraph& canonical_graph) const {
  auto it = terms_.find(canonical_graph);
  return it == terms_.end() ? Rational(0) : it->second;
}

std::string GraphSum::str() const {
  if (terms_.empty()) return "0";
  std::string s;
  bool first = true;
  for (const auto& [g, c] : terms_) {
    if (!first) s += " + ";
    first = false;
    s += "(" + to_string(c) + ")" + g.str();
  }
  return s;
}

// --------------------------------------------------------------- coboundary

std::optional<DecoratedGraph> contract_arc(const DecoratedGraph& g, int i, const GraphConventions& conv) {
  if (g.v_e < 2) return std::nullopt;
  if (i < 1 || i > g.v_e) throw std::out_of_range("arc index out of range");
  const int n = g.vertex_count();
  std::vector<int> relabel(static_cast<std::size_t>(n + 1));
  if (i < g.v_e) {
    for (int v = 1; v <= n; ++v) relabel[static_cast<std::size_t>(v)] = v <= i ? v : v - 1;
  } else if (conv.closing_merge_to_first) {
    for (int v = 1; v <= n; ++v) relabel[static_cast<std::size_t>(v)] = v == g.v_e ? 1 : (v < g.v_e ? v : v - 1);
  } else {
    // vertex 1 joins v_e; external labels drop by one so the merged vertex is last
    for (int v = 1; v <= n; ++v) relabel[static_cast<std::size_t>(v)] = v == 1 ? g.v_e - 1 : v - 1;
  }
  DecoratedGraph out{g.v_e - 1, g.v_i, {}};
  for (const auto& e : g.edges)
    out.edges.push_back(Edge{relabel[static_cast<std::size_t>(e[0])], relabel[static_cast<std::size_t>(e[1])]});
  return out;
}

std::optional<DecoratedGraph> contract_edge(const DecoratedGraph& g, int l) {
  if (l < 1 || l > g.edge_count()) throw std::out_of_range("edge index out of range");
  int a = g.edges[static_cast<std::size_t>(l - 1)][0], b = g.edges[static_cast<std::size_t>(l - 1)][1];
  if (!g.is_external(a)) std::swap(a, b);
  if (!g.is_external(a) || g.is_external(b)) return std::nullopt;
  DecoratedGraph out{g.v_e, g.v_i - 1, {}};
  for (int k = 0; k < g.edge_count(); ++k) {
    if (k == l - 1) continue;
    Edge e = g.edges[static_cast<std::size_t>(k)];
    for (int& v : e) {
      if (v == b) v = a;
      else if (v > b) --v;
    }
    out.edges.push_back(e);
  }
  return out;
}

GraphSum cobound(const DecoratedGraph& g, const GraphConventions& conv) {
  GraphSum out;
  for (int i = 1; i <= g.v_e; ++i) {
    const int s = neg_pow(i + 1) * (conv.arc_sign_with_ve ? neg_pow(g.v_e - 1) : 1);
    if (auto h = contract_arc(g, i, conv)) out.add(*h, Rational(s), conv);
  }
  for (int l = 1; l <= g.edge_count(); ++l) {
    const int s = conv.edge_sign_with_ve ? neg_pow(l + 1 + g.v_e) : neg_pow(l + 1);
    if (auto h = contract_edge(g, l)) out.add(*h, Rational(s), conv);
  }
  return out;
}

GraphSum cobound(const GraphSum& s, const GraphConventions& conv) {
  GraphSum out;
  for (const auto& [g, c] : s.terms()) out.add(cobound(g, conv), c);
  return out;
}

bool cocycle_check(const GraphSum& s, const GraphConventions& conv) { return cobound(s, conv).is_zero(); }

// -------------------------------------------------------------- enumeration

std::vector<DecoratedGraph> enumerate_graphs(int max_edges, int ord, int deg, const GraphConventions& conv) {
  std::set<DecoratedGraph> found;
  for (int e = 1; e <= max_edges; ++e) {
    const int v_i = e - ord;
    const int v_e = 2 * e - 3 * v_i - deg;
    if (v_i < 0 || v_e < 1) continue;
    if (v_e > 2 * e || 3 * v_i > 2 * e) continue;  // not enough edge ends for the valences
    const int n = v_e + v_i;
    std::vector<Edge> pairs;
    for (int a = 1; a <= n; ++a)
      for (int b = a + 1; b <= n; ++b) pairs.push_back(Edge{a, b});
    if (static_cast<int>(pairs.size()) < e) continue;
    std::vector<int> pick(static_cast<std::size_t>(e));
    std::iota(pick.begin(), pick.end(), 0);
    const int m = static_cast<int>(pairs.size());
    while (true) {
      DecoratedGraph g{v_e, v_i, {}};
      for (int k : pick) g.edges.push_back(pairs[static_cast<std::size_t>(k)]);
      bool ok = true;
      try {
        validate(g);
      } catch (const std::invalid_argument&) {
        ok = false;
      }
      if (ok) {
        auto can = canonicalize(g, conv);
        if (can.sign != 0) found.insert(can.graph);
      }
      int k = e - 1;
      while (k >= 0 && pick[static_cast<std::size_t>(k)] == m - e + k) --k;
      if (k < 0) break;
      ++pick[static_cast<std::size_t>(k)];
      for (int j = k + 1; j < e; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return {found.begin(), found.end()};
}

SparseMatrix cobound_matrix(int ord, int deg, int max_edges, const GraphConventions& conv) {
  auto src = enumerate_graphs(max_edges, ord, deg, conv);
  auto dst = enumerate_graphs(max_edges, ord, deg + 1, conv);
  std::map<DecoratedGraph, std::size_t> index;
  for (std::size_t i = 0; i < dst.size(); ++i) index.emplace(dst[i], i);
  SparseMatrix m(dst.size(), src.size());
  for (std::size_t j = 0; j < src.size(); ++j) {
    const GraphSum image = cobound(src[j], conv);
    for (const auto& [g, c] : image.terms()) {
      auto it = index.find(g);
      if (it == index.end()) throw ContractViolation("cobound leaves the enumerated basis: " + g.str());
      m.add(it->second, j, c);
    }
  }
  return m;
}

std::size_t cohomology_rank(int ord, int deg, int max_edges, const GraphConventions& conv) {
  return homology_rank(cobound_matrix(ord, deg - 1, max_edges, conv), cobound_matrix(ord, deg, max_edges, conv));
}

// ------------------------------------------------------------- named graphs

DecoratedGraph chord_graph() { return {4, 0, {{1, 3}, {2, 4}}}; }
DecoratedGraph tripod_graph() { return {3, 1, {{1, 4}, {2, 4}, {3, 4}}}; }
DecoratedGraph longoni_star() { return {4, 1, {{1, 5}, {4, 5}, {3, 5}, {2, 5}}}; }
DecoratedGraph longoni_second() { return {5, 0, {{1, 3}, {1, 4}, {2, 5}}}; }

GraphSum ccl_cocycle(const GraphConventions& conv) {
  GraphSum s;
  s.add(chord_graph(), make_rational(1, 4), conv);
  s.add(tripod_graph(), make_rational(-1, 3), conv);
  return s;
}

GraphSum longoni_cocycle(const GraphConventions& conv) {
  GraphSum s;
  s.add(longoni_star(), Rational(1), conv);
  s.add(longoni_second(), Rational(2), conv);
  return s;
}

std::optional<GraphConventions> search_graph_conventions(int max_edges) {
  for (int mask = 0; mask < 16; ++mask) {
    GraphConventions c;
    c.rotation_sign = !(mask & 1);
    c.edge_sign_with_ve = !(mask & 2);
    c.closing_merge_to_first = !(mask & 4);
    c.arc_sign_with_ve = (mask & 8) != 0;
    if (ccl_cocycle(c).is_zero() || longoni_cocycle(c).size() != 2) continue;
    if (!cocycle_check(ccl_cocycle(c), c) || !cocycle_check(longoni_cocycle(c), c)) continue;
    bool ok = true;
    for (int ord = 1; ord <= max_edges && ok; ++ord)
      for (int deg = -2 * max_edges; deg <= 2 * max_edges && ok; ++deg)
        for (const auto& g : enumerate_graphs(max_edges, ord, deg, c))
          if (!cobound(cobound(g, c), c).is_zero()) {
            ok = false;
            break;
          }
    if (ok) return c;
  }
  return std::nullopt;
}

// --------------------------------------------------------------------- JSON

nlohmann::json to_json(const DecoratedGraph& g) {
  auto edges = nlohmann::json::array();
  for (const auto& e : g.edges) edges.push_back({e[0], e[1]});
  return {{"v_e", g.v_e}, {"v_i", g.v_i}, {"edges", edges}};
}

nlohmann::json to_json(const GraphSum& s) {
  auto j = nlohmann::json::array();
  for (const auto& [g, c] : s.terms()) j.push_back({{"coeff", to_string(c)}, {"graph", to_json(g)}});
  return j;
}

DecoratedGraph graph_from_json(const nlohmann::json& j) {
  DecoratedGraph g{j.at("v_e").get<int>(), j.at("v_i").get<int>(), {}};
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) throw std::invalid_argument("edge must be a pair: " + e.dump());
    g.edges.push_back(Edge{e[0].get<int>(), e[1].get<int>()});
  }
  validate(g);
  return g;
}

GraphSum graph_sum_from_json(const nlohmann::json& j, const GraphConventions& conv) {
  if (!j.is_array()) throw std::invalid_argument("graph sum must be an array of terms");
  GraphSum s;
  for (const auto& t : j) {
    const auto coeff = t.contains("coeff") ? parse_rational(t.at("coeff").get<std::string>()) : Rational(1);
    s.add(graph_from_json(t.at("graph")), coeff, conv);
  }
  return s;
}

}  // namespace knotcycle::graphs
