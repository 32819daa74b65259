// Decorated graphs of even type: an oriented circle carrying external
// vertices 1..v_e in cyclic order, internal vertices v_e+1..v_e+v_i, and an
// enumerated list of edges. Coboundary contracts arcs and edges that touch
// the circle.

#pragma once

#include "knotcycle/exactalg.hpp"

#include <json.hpp>

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace knotcycle::graphs {

using Edge = std::array<int, 2>;

struct DecoratedGraph {
  int v_e = 0;
  int v_i = 0;
  std::vector<Edge> edges;  // order is the edge enumeration

  int vertex_count() const { return v_e + v_i; }
  int edge_count() const { return static_cast<int>(edges.size()); }
  bool is_external(int v) const { return v >= 1 && v <= v_e; }

  int ord() const { return edge_count() - v_i; }
  int deg() const { return 2 * edge_count() - 3 * v_i - v_e; }

  auto operator<=>(const DecoratedGraph&) const = default;
  std::string str() const;
};

/// Throws std::invalid_argument unless labels are in range, the graph is
/// connected through edges and the circle, internal vertices have valence
/// >= 3 and external ones >= 1. Repeated edges and loops are allowed here;
/// they make the graph zero under canonicalize.
void validate(const DecoratedGraph& g);

/// Sign choices left open by the coboundary definition.
struct GraphConventions {
  // Rotating the external labels by k costs (-1)^{(v_e-1)k}, the sign of the
  // cyclic shift of the circle coordinates.
  bool rotation_sign = true;
  // Edge contraction sign read as (-1)^{l+1+v_e}; otherwise (-1)^{l+1}.
  bool edge_sign_with_ve = true;
  // Closing arc v_e -> 1: merged vertex keeps label 1; otherwise label v_e-1.
  bool closing_merge_to_first = true;
  // Arc contractions carry an extra (-1)^{v_e-1}. This is the conjugate of
  // the plain rule by the basis rescaling (-1)^{v_e(v_e-1)/2}, i.e. listing
  // the circle coordinates in the opposite order.
  bool arc_sign_with_ve = false;

  auto operator<=>(const GraphConventions&) const = default;
  std::string str() const;
};

/// Pinned result of search_graph_conventions.
GraphConventions shipped_graph_conventions();

struct Canonical {
  int sign = 0;  // 0 when the graph vanishes
  DecoratedGraph graph;
};

/// Lexicographically least relabeling over cyclic rotations of the external
/// labels and all permutations of the internal ones, edges sorted. A graph
/// with a repeated edge or a loop is zero, as is one carrying an automorphism
/// of odd sign.
Canonical canonicalize(const DecoratedGraph& g, const GraphConventions& conv = shipped_graph_conventions());

class GraphSum {
 public:
  void add(const DecoratedGraph& g, const Rational& c,
           const GraphConventions& conv = shipped_graph_conventions());
  void add(const GraphSum& other, const Rational& scale = Rational(1));

  const std::map<DecoratedGraph, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  Rational coefficient(const DecoratedGraph& canonical_graph) const;

  bool operator==(const GraphSum&) const = default;
  std::string str() const;

 private:
  void add_canonical(const DecoratedGraph& g, const Rational& c);
  std::map<DecoratedGraph, Rational> terms_;
};

/// Graph obtained by contracting arc i -> i+1 (1 <= i < v_e) or the closing
/// arc v_e -> 1 (i == v_e), before canonicalization. Empty when v_e < 2.
std::optional<DecoratedGraph> contract_arc(const DecoratedGraph& g, int i, const GraphConventions& conv);
/// Graph obtained by contracting edge l (1-based). Empty when the edge joins
/// two external vertices (that would pinch the circle) or two internal ones.
std::optional<DecoratedGraph> contract_edge(const DecoratedGraph& g, int l);

GraphSum cobound(const DecoratedGraph& g, const GraphConventions& conv = shipped_graph_conventions());
GraphSum cobound(const GraphSum& s, const GraphConventions& conv = shipped_graph_conventions());

bool cocycle_check(const GraphSum& s, const GraphConventions& conv = shipped_graph_conventions());

/// Nonzero canonical graphs with bidegree (ord, deg) and at most max_edges
/// edges, sorted.
std::vector<DecoratedGraph> enumerate_graphs(int max_edges, int ord, int deg,
                                             const GraphConventions& conv = shipped_graph_conventions());

/// Matrix of cobound from the (ord, deg) basis to the (ord, deg+1) basis.
SparseMatrix cobound_matrix(int ord, int deg, int max_edges,
                            const GraphConventions& conv = shipped_graph_conventions());

/// Cohomology of the e <= max_edges truncation (a subcomplex, since
/// contractions never add edges).
std::size_t cohomology_rank(int ord, int deg, int max_edges,
                            const GraphConventions& conv = shipped_graph_conventions());

// Named graphs and cocycles.
DecoratedGraph chord_graph();        // v_e=4: {1,3},{2,4}
DecoratedGraph tripod_graph();       // v_e=3, v_i=1: {1,4},{2,4},{3,4}
DecoratedGraph longoni_star();       // v_e=4, v_i=1: {1,5},{4,5},{3,5},{2,5}
DecoratedGraph longoni_second();     // v_e=5: {1,3},{1,4},{2,5}
GraphSum ccl_cocycle(const GraphConventions& conv = shipped_graph_conventions());      // 1/4 chord - 1/3 tripod
GraphSum longoni_cocycle(const GraphConventions& conv = shipped_graph_conventions());  // star + 2 second

/// Searches the 16 convention combinations (literal reading first) for one with
/// cobound o cobound = 0 up to max_edges and both named cocycles closed.
std::optional<GraphConventions> search_graph_conventions(int max_edges = 4);

// JSON: a graph is {"v_e":..,"v_i":..,"edges":[[a,b],..]}, a sum is a list
// of {"coeff":"a/b","graph":{..}}.
nlohmann::json to_json(const DecoratedGraph& g);
nlohmann::json to_json(const GraphSum& s);
DecoratedGraph graph_from_json(const nlohmann::json& j);
GraphSum graph_sum_from_json(const nlohmann::json& j, const GraphConventions& conv = shipped_graph_conventions());

}  // namespace knotcycle::graphs
