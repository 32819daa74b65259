// Singular knots, resolution maps and the base knots K1, K2 with their eight
// satellites K3..K10.

#pragma once

#include "knotcycle/brackets.hpp"
#include "knotcycle/curves.hpp"

#include <array>
#include <string>
#include <vector>

namespace knotcycle::knots {

struct Constants {
  double delta = 0.2;
  double epsilon = 0.01;
  std::array<double, 5> times{0.1, 0.3, 0.5, 0.7, 0.9};
  double a3 = 0.1;              // triple point strand
  double a_double = 0.02;       // delta / 10, double point strands
  double satellite_shift = 0.1;
  double speed = 2.5;           // |gamma'| on the straight windows
  double window = 0.06;         // straight window halfwidth in time
  double fillet = 0.02;
};

const Constants& constants();

/// d(r): sphere dimension for moving a strand off an r-fold point.
int d_of_r(int r, int d);

struct SingularKnotSpec {
  std::string label;
  ParametricCurve curve;
  std::vector<double> times;             // t_1 < ... < t_p
  brackets::BracketMonomial expression;  // over x_1..x_p
  std::vector<Vec> tangents;             // unit tangents at the times
  std::vector<int> moved;                // 1-based variables resolved by the chart built on this knot
  double delta = 0;
  double epsilon = 0;
};

struct ResolutionDatum {
  Vec v;
  double a = 0;
  double eps = 0;
};

/// Moves strand i (1-based) by a * v * bump over (t_i - eps, t_i + eps).
/// Throws if v is not a unit vector of the right size or eps exceeds the
/// spec's epsilon.
ParametricCurve resolve(const SingularKnotSpec& k, int i, const ResolutionDatum& datum);
ParametricCurve resolve(const ParametricCurve& c, double time, const ResolutionDatum& datum);

/// Sequential resolution of the variables in S. Throws on length mismatch
/// or when a variable has rank 0 in the working expression.
ParametricCurve resolve_composite(const SingularKnotSpec& k, const std::vector<int>& S,
                                  const std::vector<ResolutionDatum>& data);

struct Verdict {
  bool ok = false;
  double worst = 0;  // the offending distance (or rank deficit)
  std::string detail;
};

struct RespectOptions {
  double tol = 1e-9;          // coincidence tolerance
  bool strict = false;        // no unlisted near-coincidences
  double box = 0.02;          // time radius around each listed pair left to the local check
  double separation = 0.01;   // strict mode: unlisted pairs closer than this fail
  int samples = 12000;
};

/// Every bracket group of `expression` coincides at its times, the tangents
/// of a group of r strands have rank min(r, d), and in strict mode nothing
/// else comes close.
Verdict check_respects(const ParametricCurve& c, const std::vector<double>& times,
                       const brackets::BracketMonomial& expression, const RespectOptions& opt = {});

struct EmbeddingOptions {
  double eta = 0.5;   // arclength below which pairs count as local
  double tol = 2e-3;
  int samples = 8000;
};

/// Min distance over nonlocal pairs above tol and min speed above tol.
Verdict check_embedding(const ParametricCurve& c, const EmbeddingOptions& opt = {});

struct BaseKnots {
  SingularKnotSpec k1, k2;
};

/// K1: triple point at the origin (t1 along e1, t3 along e2, t4 along e3),
/// double point at (2,0,0) (t2 along e2, t5 along e3). K2: double point at
/// the origin (t1 along e1, t4 along e3), triple point at (2,0,0) (t2 along
/// e2, t3 along e1, t5 along e3). Both in R^3, sharing the basepoint germ.
BaseKnots build_base_knots(int d);

/// Moves strand 3 of a knot with one triple point {a,3,b} by shift*sign*w_j
/// (j in {a,b}), giving three double points.
SingularKnotSpec satellite(const SingularKnotSpec& k, int j, int sign, const std::string& label);

/// K3..K6 from K1 (+w4, -w4, +w1, -w1) and K7..K10 from K2 (+w2', -w2',
/// +w5', -w5').
std::vector<SingularKnotSpec> derive_satellites(const BaseKnots& b);

/// A knot with two interleaved double points respecting [x1,x3][x2,x4] at
/// times 0.2, 0.4, 0.6, 0.8: the origin (e1, e2) and (1.5,0,0) (e2, e3).
SingularKnotSpec build_two_double_point_knot(int d);

/// Bracket groups (variables sharing a top-level factor), 1-based.
std::vector<std::vector<int>> bracket_groups(const brackets::BracketMonomial& m);
/// Monomial that is a product of the given groups, each a left-nested bracket
/// in increasing order.
brackets::BracketMonomial monomial_of_pairs(const std::vector<std::vector<int>>& groups);

/// Fixture format (version 1): the polygon data of a PolyCurve base, any
/// bumps already applied, times, expression, tangents, moved, delta, epsilon.
/// Reading checks the stored tangents against the rebuilt curve and reports
/// the offending key on failure.
nlohmann::json to_json(const SingularKnotSpec& k);
SingularKnotSpec knot_from_json(const nlohmann::json& j);

}  // namespace knotcycle::knots
