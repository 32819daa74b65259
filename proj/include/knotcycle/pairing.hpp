// Configuration-space integrals paired against the families: Gauss maps,
// region partition of ordered configurations, signed root counts and Monte
// Carlo integration of concentrated sphere densities.

#pragma once

#include "knotcycle/exactalg.hpp"
#include "knotcycle/family.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace knotcycle::pairing {

using knots::Chart;
using knots::ChartPoint;
using knots::GluedFamily;
using knots::ParametricCurve;
using knots::Vec;

struct IntegralTerm {
  std::string name;
  Rational coefficient;
  int n_external = 0;
  int n_internal = 0;
  std::vector<std::pair<int, int>> thetas;  // 1-based point indices

  int form_degree(int d) const { return (d - 1) * static_cast<int>(thetas.size()); }
  int configuration_dimension(int d) const { return n_external + d * n_internal; }
};

/// Throws on out-of-range or repeated indices.
void validate(const IntegralTerm& t);

IntegralTerm omega1_term();      // 4 circle points, one free point, thetas 15 45 35 25
IntegralTerm omega2_term();      // 5 circle points, thetas 13 14 25, coefficient 2
IntegralTerm ccl_chord_term();   // 1/4, thetas 13 24
IntegralTerm ccl_tripod_term();  // -1/3, 3 circle points and one free point, thetas 14 24 34

/// Antipodally symmetric density on S^{d-1}: the average of two von
/// Mises-Fisher densities at +-axis. kappa = 0 is uniform.
struct AlphaSpec {
  double kappa = 0;
  Vec axis;  // empty: e_d

  double density(const Vec& v) const;
  /// log of the von Mises-Fisher normalizer C_d(kappa).
  static double log_normalizer(int d, double kappa);
};

/// Surface area of S^k.
double sphere_area(int k);

/// Region of an ordered configuration: index 0 is the complement C^c (every
/// window holds a point), otherwise the least window i holding no point.
struct RegionLabel {
  int points = 0;
  int index = 0;
  std::string str() const;
  bool operator==(const RegionLabel&) const = default;
};

RegionLabel classify_region(const std::vector<double>& s, const std::vector<double>& t, double eps);

/// Unit vectors for the thetas of `term`; points 1..n_external are curve
/// points, the rest are `internal`. Throws on coincident points.
std::vector<Vec> gauss_map(const IntegralTerm& term, const std::vector<double>& s, const ParametricCurve& curve,
                           const std::vector<Vec>& internal = {});
std::vector<Vec> gauss_map(const IntegralTerm& term, const std::vector<double>& s, const Chart& chart,
                           const ChartPoint& p, const std::vector<Vec>& internal = {});

/// Oriented orthonormal basis of T_v S^k (columns): det[v | B] > 0.
Eigen::MatrixXd tangent_basis(const Vec& v);

/// Gauss map of a term without free points on C^c x chart, in local
/// coordinates: s (one per circle point), oriented orthonormal sphere
/// coordinates, then intervals.
class GaussSystem {
 public:
  GaussSystem(IntegralTerm term, const Chart& chart, std::vector<double> times, double eps);

  int unknowns() const;
  int equations() const;
  bool square() const { return unknowns() == equations(); }

  struct State {
    std::vector<double> s;
    ChartPoint p;
  };
  /// Gauss map components at x.
  std::vector<Vec> value(const State& x) const;
  /// Rows: for each component j, basis(frame_j)^T d phi_j. frames[j] is the
  /// sphere point whose tangent basis is used (usually phi_j or the target).
  Eigen::MatrixXd jacobian(const State& x, const std::vector<Vec>& frames) const;
  /// Moves x by dx in local coordinates (spheres by normalized retraction).
  State step(const State& x, const Vec& dx) const;
  bool in_domain(const State& x) const;

  const Chart& chart() const { return chart_; }
  const IntegralTerm& term() const { return term_; }
  const std::vector<double>& times() const { return times_; }
  double eps() const { return eps_; }

 private:
  std::vector<Vec> points(const State& x) const;  // curve points at s
  IntegralTerm term_;
  const Chart& chart_;
  std::vector<double> times_;
  double eps_;
};

struct Root {
  int chart = 0;
  std::vector<double> s;
  ChartPoint p;
  std::vector<Vec> ambient;  // sphere parameters in R^d
  double residual = 0;
  double det = 0;
  int sign = 0;
};

struct CountOptions {
  int candidates = 60000;  // random starts screened per chart
  int newton_starts = 48;  // best screened candidates refined
  int max_iterations = 60;
  double tol = 1e-12;
  std::uint64_t seed = 7;
};

struct CountReport {
  int signed_count = 0;
  std::vector<Root> roots;
  std::vector<int> per_chart;  // signed counts
  int newton_runs = 0, newton_failures = 0;
  std::string detail;
};

/// Signed count of solutions of gauss_map = target over C^c x chart for every
/// chart of the family (target defaults to (e_d, ..., e_d)).
CountReport intersection_count(const GluedFamily& f, const IntegralTerm& term,
                               const std::vector<Vec>& target = {}, const CountOptions& opt = {});
CountReport intersection_count(const std::vector<std::shared_ptr<const Chart>>& charts, const IntegralTerm& term,
                               const std::vector<double>& times, double eps, const std::vector<Vec>& target,
                               const CountOptions& opt);

/// modes: defensive mixture of the uniform law and t proposals centred on the
/// Gauss-map preimages of every sign pattern (+-e_d, ...); vegas: adaptive grid.
enum class Sampler { modes, vegas };

struct MonteCarloOptions {
  Sampler sampler = Sampler::modes;
  double defensive = 0.1;  // uniform share of the mixture
  double mode_scale = 1.5; // proposal spread in units of kappa^{-1/2}
  double mode_dof = 6;
  CountOptions mode_search{20000, 24, 60, 1e-12, 11};
  long long samples = 1000000;
  std::uint64_t seed = 1;
  int bins = 64;
  int adapt_iterations = 6;
  double adapt_fraction = 0.1;  // share of samples spent adapting the grid
  double cutoff = 1e-30;        // density products below cutoff * peak^k count as 0
  int block = 16384;
};

struct MonteCarloResult {
  double estimate = 0;
  double standard_error = 0;
  long long samples = 0;
  long long nonzero = 0;
  int modes = 0;
  bool degenerate_degree = false;
  std::string region;
};

/// Integral of g^*(alpha x ... x alpha) over region x chart (the region must
/// be the complement C^c, or any other label evaluated by rejection).
MonteCarloResult monte_carlo(const Chart& chart, const IntegralTerm& term, const AlphaSpec& alpha,
                             const RegionLabel& region, const std::vector<double>& times, double eps,
                             const MonteCarloOptions& opt = {});

struct VanishingRow {
  std::string term, region, chart, factor_space;
  int factor_dimension = 0;
  int required_dimension = 0;
  std::string verdict;  // "vanishes", "does not vanish", "not applicable"
};
std::vector<VanishingRow> vanishing_report(int d);

struct Contribution {
  std::string term, chart, region, method;
  double value = 0;
  double error = 0;
  std::string note;
};
struct OmegaReport {
  double value = 0;
  double error = 0;
  bool ok = true;
  std::vector<Contribution> contributions;
  std::string diagnostic;
  CountReport count;
};

enum class Method { count, monte_carlo };
OmegaReport evaluate_omega(const GluedFamily& f, Method method, const CountOptions& copt = {},
                           const MonteCarloOptions& mopt = {}, double kappa = 50);

/// The classical check: 1/4 theta13 theta24 - 1/3 theta14 theta24 theta34 on
/// a knot with two double points [x1,x3][x2,x4], both resolved.
struct CclReport {
  int chord_count = 0;
  std::vector<Root> chord_roots;
  double tripod_min_residual = 0;  // root-sum-square sine of the three chords against e_d
  bool tripod_vanishes = false;
  Rational value;
  std::string detail;
};
CclReport ccl_check(int d, const CountOptions& opt = {});

}  // namespace knotcycle::pairing
