// The glued family M_beta: resolution charts on K1, K2 and isotopy charts
// M3..M6 x I over the four satellite isotopies, plus the variants used for
// the vanishing argument.

#pragma once

#include "knotcycle/isotopy.hpp"

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace knotcycle::knots {

/// Unit vectors on the sphere factors in intrinsic coordinates (S^k sits in
/// R^{k+1}) and the interval values.
struct ChartPoint {
  std::vector<Vec> spheres;
  std::vector<double> intervals;
};

/// Orthonormal basis (columns) of span(vs)^perp in R^d, Lowdin-orthonormalized
/// from the standard vectors best preserved by the projection.
Eigen::MatrixXd complement_frame(const std::vector<Vec>& vs, int d);
/// Lowdin orthonormalization of the projection of F onto span(vs)^perp.
Eigen::MatrixXd continue_frame(const Eigen::MatrixXd& F, const std::vector<Vec>& vs);

/// One strand moved off a singular point.
struct StrandMove {
  int variable = 0;  // 1-based, of the base singular knot
  Vec direction;     // unit, ambient
  double amplitude = 0;
  double halfwidth = 0;
};

enum class Variant { none, prime, double_prime, W1, W2, W3 };
std::string variant_name(Variant v);

class Chart {
 public:
  virtual ~Chart() = default;

  const std::string& label() const { return label_; }
  int orientation() const { return orientation_; }
  void set_orientation(int o) { orientation_ = o; }
  int ambient() const { return d_; }
  const std::vector<int>& sphere_dims() const { return sphere_dims_; }
  int interval_count() const { return intervals_; }
  int dimension() const;
  Variant variant() const { return variant_; }

  /// Unit spheres, intervals in [0,1], plus chart-specific exclusions.
  virtual bool in_domain(const ChartPoint& p) const;
  /// Underlying singular knot (before resolution) at p.
  virtual SingularKnotSpec base(const ChartPoint& p) const = 0;
  virtual std::vector<StrandMove> moves(const ChartPoint& p) const = 0;

  ParametricCurve curve(const ChartPoint& p) const;
  /// Uniform on the domain (rejection against exclusions).
  ChartPoint sample(std::mt19937_64& rng) const;

 protected:
  std::string label_;
  int orientation_ = 1;
  int d_ = 0;
  std::vector<int> sphere_dims_;
  int intervals_ = 0;
  Variant variant_ = Variant::none;
};

/// Resolves each variable of S, which must sit on a double point, by a
/// sphere S^{d-3} normal to both strands (amplitude a, halfwidth epsilon).
std::shared_ptr<const Chart> make_double_point_chart(SingularKnotSpec k, std::vector<int> S, double amplitude,
                                                     const std::string& label);

/// Gluing of the face {interval 0 = face} of chart `chart` into chart `target`.
struct Gluing {
  int chart = 0;
  double face = 0;
  int target = 0;
  int sign = 1;
  std::function<ChartPoint(const ChartPoint&)> map;
  std::string description;
};

struct GluedFamily {
  int d = 0;
  Variant variant = Variant::none;
  std::vector<std::shared_ptr<const Chart>> charts;  // M1, M2, M3..M6 x I
  std::vector<Gluing> gluings;
  std::vector<std::shared_ptr<const Isotopy>> isotopies;
  int dimension() const;
};

/// Pairs (K3,K9), (K4,K7), (K5,K8), (K6,K10); each takes ~13 s to build.
std::vector<std::shared_ptr<const Isotopy>> build_isotopies(int d, IsotopyMode mode);

GluedFamily build_family(int d, IsotopyMode mode);
/// Reuses prebuilt isotopies (same d) for any variant.
GluedFamily build_family(int d, const std::vector<std::shared_ptr<const Isotopy>>& isotopies,
                         Variant variant = Variant::none);
GluedFamily build_variant(int d, Variant which, IsotopyMode mode);

struct GluingReport {
  std::string description;
  double sup = 0;
  bool ok = false;
};
struct BoundaryReport {
  std::vector<GluingReport> gluings;
  double worst = 0;
  bool ok = false;
};

/// For each gluing, sup over n random face points of the pointwise distance
/// between the two curves. `amplitude_perturbation` scales the chart-side
/// amplitudes (negative control).
BoundaryReport boundary_match_check(const GluedFamily& f, int n_samples, double tol, std::uint64_t seed = 1,
                                    double amplitude_perturbation = 1.0, int curve_samples = 2000);

/// Embedding check for a chart point; W-variants allow the double point of the
/// first and fourth strands.
Verdict check_chart_point(const Chart& c, const ChartPoint& p, const EmbeddingOptions& opt = {});

}  // namespace knotcycle::knots
