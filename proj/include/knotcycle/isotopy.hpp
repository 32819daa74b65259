// Isotopies between satellites of K1 and K2 through knots with the same three
// double points. Three legs: push the satellite strand further out along its
// partner, blend across, pull back in. Each leg is a blend of
// time-reparametrized endpoints, lifted along e4 at crossing changes.

#pragma once

#include "knotcycle/knotgeom.hpp"

#include <cmath>

// this boost release calls isnan unqualified inside pchip
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>

#include <memory>

namespace knotcycle::knots {

/// The satellite strand of K3..K10 (last bump of the curve) and its partner.
struct SatelliteInfo {
  int moved = 0, partner = 0;  // 1-based variables
  double center = 0;
  Vec push;                    // unit satellite direction
  Vec moved_dir, partner_dir;  // unit tangents at the double point
};
SatelliteInfo satellite_info(const SingularKnotSpec& s);

enum class IsotopyMode { generic, constrained };

/// A strand lifted along +-e4 for tau in a window: full height on
/// [tau_lo, tau_hi] x [t_lo, t_hi], C^1 ramps of the given widths outside.
struct Lift {
  int leg = 0;
  double tau_lo = 0, tau_hi = 0, tau_ramp = 0;
  double t_lo = 0, t_hi = 0, t_ramp = 0;
  double height = 0;
};

/// C^1 plateau: 1 on [lo, hi], 0 outside (lo - ramp, hi + ramp).
double plateau(double x, double lo, double hi, double ramp);
double plateau_derivative(double x, double lo, double hi, double ramp);

struct IsotopyOptions {
  int tau_samples = 400;      // middle leg; the short outer legs use a quarter
  int detect_samples = 2000;  // curve samples while looking for crossings
  int curve_samples = 6000;   // curve samples for verification
  double detect = 0.08;     // R^3 distance that triggers a lift
  double critical = 0.015;   // events whose R^3 distance stays above this are left alone
  double lift_height = 0.3;
  double elevation = 0.3;   // extra push of the satellite strand on the middle leg
  double elevation_halfwidth = 0.1;
  double tilt = 4.0;        // shear of the pushed strand when its frame would flip
  double singular_box = 0.05;       // time radius around singular pairs skipped by detection
  double singular_clearance = 0.03;  // lifted windows keep this far from singular times
};

class Isotopy {
 public:
  /// Both endpoints must respect the same expression strictly.
  Isotopy(SingularKnotSpec a, SingularKnotSpec b, IsotopyMode mode, const IsotopyOptions& opt = {});

  static constexpr int kLegs = 3;

  /// The knot at tau in [0, 1]; at(0) == a.curve, at(1) == b.curve pointwise.
  ParametricCurve at(double tau) const;
  std::vector<double> times_at(double tau) const;
  SingularKnotSpec spec_at(double tau) const;

  const SingularKnotSpec& start() const { return legs_.front().a; }
  const SingularKnotSpec& end() const { return legs_.back().b; }
  /// Leg endpoints: start, pushed-out start, pushed-out end, end.
  std::vector<SingularKnotSpec> waypoints() const;
  const std::vector<Lift>& lifts() const { return lifts_; }
  IsotopyMode mode() const { return mode_; }

  /// Strict respects check at n evenly spaced tau, plus the e4 confinement
  /// outside lift windows. Returns the first failure.
  Verdict verify(int n) const;

 private:
  using Pchip = boost::math::interpolators::pchip<std::vector<double>>;
  struct Reparam {
    std::shared_ptr<Pchip> phi, chi;
  };
  struct Leg {
    SingularKnotSpec a, b;
  };
  // leg index and local parameter
  std::pair<int, double> locate(double tau) const;
  Reparam reparam(const Leg& leg, double sigma) const;
  ParametricCurve blend(int leg, double sigma, bool with_lifts) const;
  std::vector<double> leg_times(const Leg& leg, double sigma) const;
  void detect_lifts(int leg);

  std::vector<Leg> legs_;
  IsotopyMode mode_;
  IsotopyOptions opt_;
  std::vector<Lift> lifts_;
};

}  // namespace knotcycle::knots
