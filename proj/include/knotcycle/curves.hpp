// Closed parametric curves [0,1) -> R^d: a piecewise-polynomial base (or a
// blend of two curves along an isotopy) plus compactly supported bumps.

#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace knotcycle::knots {

using Vec = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;

/// exp(1 - 1/(1 - x^2)) for x = (t - center)/halfwidth, zero for |x| >= 1.
/// Peak 1 at the center, smooth, and the shape does not depend on the width.
double bump(double t, double center, double halfwidth);
double bump_derivative(double t, double center, double halfwidth);

/// Wraps t into [0, 1).
double wrap01(double t);
/// Distance on the circle R/Z.
double circle_distance(double s, double t);

class CurveBase {
 public:
  virtual ~CurveBase() = default;
  virtual int dim() const = 0;
  virtual Vec point(double t) const = 0;
  virtual Vec tangent(double t) const = 0;
};

/// Line segments joined by quadratic corner fillets, with a C^1 time map
/// t -> arclength. Constant speed `speed` on each declared straight window.
class PolyCurve final : public CurveBase {
 public:
  struct Window {
    double time;       // the curve passes `through` at this time
    int edge;          // polygon edge vertices[edge] -> vertices[edge+1]
    Vec3 through;      // point on that edge
    double halfwidth;  // in time; straight at constant speed inside
  };

  /// vertices: closed polygon in R^3. basepoint: point on the edge
  /// vertices[0] -> vertices[1], visited at t = 0.
  PolyCurve(int d, std::vector<Vec3> vertices, const Vec3& basepoint, std::vector<Window> windows,
            double fillet_radius, double speed);

  int dim() const override { return d_; }
  Vec point(double t) const override;
  Vec tangent(double t) const override;

  double length() const { return length_; }
  const std::vector<Vec3>& vertices() const { return vertices_; }
  // construction inputs, kept for fixtures
  const Vec3& basepoint() const { return basepoint_; }
  const std::vector<Window>& windows() const { return windows_; }
  double fillet_radius() const { return fillet_; }
  double speed() const { return speed_; }

 private:
  struct Piece {
    bool quad = false;
    Vec3 p0, p1, p2;  // line: p0 -> p2; quad: control p1
    double u0 = 0, len = 0;
    int edge = -1;
  };
  struct Knot {
    double t, u, slope;
  };
  double arclength_of(int edge, const Vec3& p) const;
  void eval(double t, Vec3* p, Vec3* dp) const;

  int d_;
  std::vector<Vec3> vertices_;
  Vec3 basepoint_;
  std::vector<Window> windows_;
  double fillet_ = 0, speed_ = 0;
  std::vector<Piece> pieces_;
  std::vector<Knot> knots_;
  double length_ = 0;
};

struct Bump {
  double center = 0;
  double halfwidth = 0;
  Vec direction;
  double amplitude = 0;
};

class ParametricCurve {
 public:
  ParametricCurve() = default;
  explicit ParametricCurve(std::shared_ptr<const CurveBase> base) : base_(std::move(base)) {}

  int dim() const { return base_->dim(); }
  Vec point(double t) const;
  Vec tangent(double t) const;

  const std::vector<Bump>& bumps() const { return bumps_; }
  const std::shared_ptr<const CurveBase>& base() const { return base_; }
  ParametricCurve with_bump(const Bump& b) const;

 private:
  std::shared_ptr<const CurveBase> base_;
  std::vector<Bump> bumps_;
};

/// Polyline sample of the curve at n equally spaced times.
std::vector<Vec> sample(const ParametricCurve& c, int n);

struct ClosePair {
  double s = 0, t = 0, distance = 0;
};

/// Least distance between the polyline segments [s_k, s_k+1] and
/// [t_k, t_k+1] over pairs at least eta apart in arclength, skipping
/// pairs inside any of the excluded (s-box, t-box) neighbourhoods. Uses a
/// hash grid with cell `reach`; pairs farther apart than reach are ignored,
/// so the result is empty when nothing comes within reach.
struct ExcludedBox {
  double a, b, radius;  // skip s near a and t near b (either order)
};
std::optional<ClosePair> closest_nonlocal_pair(const ParametricCurve& c, int n, double eta, double reach,
                                               const std::vector<ExcludedBox>& excluded = {});

/// Every segment pair found by the same scan with distance below reach.
std::vector<ClosePair> close_pairs(const ParametricCurve& c, int n, double eta, double reach,
                                   const std::vector<ExcludedBox>& excluded = {});

/// Smallest |gamma'| on n equally spaced times.
double min_speed(const ParametricCurve& c, int n);

}  // namespace knotcycle::knots
