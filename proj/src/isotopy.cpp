#include "knotcycle/isotopy.hpp"
#include "knotcycle/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace knotcycle::knots {

namespace {

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3 - 2 * u);
}
double smoothstep_derivative(double u) {
  if (u <= 0 || u >= 1) return 0;
  return 6 * u * (1 - u);
}

}  // namespace

double plateau(double x, double lo, double hi, double ramp) {
  return smoothstep((x - (lo - ramp)) / ramp) * smoothstep(((hi + ramp) - x) / ramp);
}

double plateau_derivative(double x, double lo, double hi, double ramp) {
  double u = (x - (lo - ramp)) / ramp, w = ((hi + ramp) - x) / ramp;
  return (smoothstep_derivative(u) * smoothstep(w) - smoothstep(u) * smoothstep_derivative(w)) / ramp;
}

namespace {

class BlendCurve final : public CurveBase {
 public:
  using Pchip = boost::math::interpolators::pchip<std::vector<double>>;
  BlendCurve(ParametricCurve a, ParametricCurve b, double tau, std::shared_ptr<Pchip> phi,
             std::shared_ptr<Pchip> chi, std::vector<Lift> lifts)
      : a_(std::move(a)), b_(std::move(b)), tau_(tau), phi_(std::move(phi)), chi_(std::move(chi)) {
    for (const auto& l : lifts) {
      double w = l.height * plateau(tau, l.tau_lo, l.tau_hi, l.tau_ramp);
      if (w != 0) active_.push_back({l, w});
    }
  }
  int dim() const override { return a_.dim(); }
  Vec point(double t) const override {
    t = wrap01(t);
    Vec p = (1 - tau_) * a_.point((*phi_)(t)) + tau_ * b_.point((*chi_)(t));
    for (const auto& [l, w] : active_) p[3] += w * plateau(t, l.t_lo, l.t_hi, l.t_ramp);
    return p;
  }
  Vec tangent(double t) const override {
    t = wrap01(t);
    Vec p = (1 - tau_) * a_.tangent((*phi_)(t)) * phi_->prime(t) + tau_ * b_.tangent((*chi_)(t)) * chi_->prime(t);
    for (const auto& [l, w] : active_) p[3] += w * plateau_derivative(t, l.t_lo, l.t_hi, l.t_ramp);
    return p;
  }

 private:
  ParametricCurve a_, b_;
  double tau_;
  std::shared_ptr<Pchip> phi_, chi_;
  std::vector<std::pair<Lift, double>> active_;
};

std::vector<ExcludedBox> singular_boxes(const std::vector<double>& times, const brackets::BracketMonomial& expr,
                                        double radius) {
  std::vector<ExcludedBox> out;
  for (const auto& g : bracket_groups(expr))
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        out.push_back({times[static_cast<std::size_t>(g[j] - 1)], times[static_cast<std::size_t>(g[i] - 1)], radius});
  return out;
}

struct Range {
  double lo = 1e9, hi = -1e9;
  void add(double x) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  void add(const Range& r) {
    lo = std::min(lo, r.lo);
    hi = std::max(hi, r.hi);
  }
  bool near(const Range& r, double m) const { return lo - m <= r.hi && r.lo <= hi + m; }
};

struct Box {
  int k;
  Range s, t;
  double dmin = 1e9;
};

// A curve displaced by plateau(t) * (push + (t - center) * tilt): a flat
// translation near the center, optionally sheared along `tilt`.
class DisplacedCurve final : public CurveBase {
 public:
  DisplacedCurve(ParametricCurve base, double center, double flat, double ramp, Vec push, Vec tilt)
      : base_(std::move(base)), c_(center), flat_(flat), ramp_(ramp), push_(std::move(push)), tilt_(std::move(tilt)) {}
  int dim() const override { return base_.dim(); }
  Vec point(double t) const override {
    t = wrap01(t);
    return base_.point(t) + plateau(t, c_ - flat_, c_ + flat_, ramp_) * (push_ + (t - c_) * tilt_);
  }
  Vec tangent(double t) const override {
    t = wrap01(t);
    const double p = plateau(t, c_ - flat_, c_ + flat_, ramp_);
    const double dp = plateau_derivative(t, c_ - flat_, c_ + flat_, ramp_);
    return base_.tangent(t) + dp * (push_ + (t - c_) * tilt_) + p * tilt_;
  }

 private:
  ParametricCurve base_;
  double c_, flat_, ramp_;
  Vec push_, tilt_;
};

// Pushes the satellite strand a further `extra` along its direction; its
// partner's time slides to the new meeting point.
SingularKnotSpec elevate(const SingularKnotSpec& s, const SatelliteInfo& info, double extra, double halfwidth,
                         const Vec& tilt) {
  const double tp = s.times[static_cast<std::size_t>(info.partner - 1)];
  if (std::abs(tp - info.center) <= halfwidth) throw std::invalid_argument("elevate: partner inside the push");
  const double flat = 0.4 * halfwidth;
  SingularKnotSpec e = s;
  e.label = s.label + "^";
  e.curve = ParametricCurve(
      std::make_shared<DisplacedCurve>(s.curve, info.center, flat, halfwidth - flat, extra * info.push, tilt));
  const Vec target = s.curve.point(info.center) + extra * info.push;
  // the partner runs along the push direction; walk, then bisect
  const double dir = info.partner_dir.dot(info.push) > 0 ? 1.0 : -1.0;
  auto f = [&](double t) { return (e.curve.point(t) - target).dot(info.push); };
  double lo = tp, hi = tp;
  while (f(hi) < 0) {
    lo = hi;
    hi += dir * 1e-3;
    if (std::abs(hi - tp) > 0.25) throw std::runtime_error("elevate: partner strand of " + s.label + " too short");
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) < 0 ? lo : hi) = mid;
  }
  const double tn = 0.5 * (lo + hi);
  if ((e.curve.point(tn) - target).norm() > 1e-9)
    throw std::runtime_error("elevate: partner of " + s.label + " is not straight along the push");
  e.times[static_cast<std::size_t>(info.partner - 1)] = tn;
  if (!std::is_sorted(e.times.begin(), e.times.end())) throw std::runtime_error("elevate: times out of order");
  e.tangents.clear();
  for (double t : e.times) e.tangents.push_back(e.curve.tangent(t).normalized());
  return e;
}

}  // namespace

Isotopy::Isotopy(SingularKnotSpec a, SingularKnotSpec b, IsotopyMode mode, const IsotopyOptions& opt)
    : mode_(mode), opt_(opt) {
  if (a.expression != b.expression)
    throw std::invalid_argument("Isotopy: " + a.label + " and " + b.label + " have different singularity data");
  if (a.curve.dim() < 4) throw std::invalid_argument("Isotopy: needs d >= 4 for crossing changes");
  // If the moved and partner tangents swap orientation in their common
  // plane, a straight blend makes them parallel somewhere. Shear both moved
  // strands along the same normal so the blend stays transverse.
  auto ia = satellite_info(a), ib = satellite_info(b);
  auto normal = [](const SatelliteInfo& i) {
    return Vec3(i.moved_dir.head<3>()).cross(Vec3(i.partner_dir.head<3>()));
  };
  Vec3 na = normal(ia), nb = normal(ib);
  Vec tilt = Vec::Zero(a.curve.dim());
  if (na.dot(nb) < -0.5) tilt.head<3>() = opt_.tilt * na.normalized();
  auto ua = elevate(a, ia, opt_.elevation, opt_.elevation_halfwidth, tilt);
  auto ub = elevate(b, ib, opt_.elevation, opt_.elevation_halfwidth, tilt);
  legs_ = {Leg{a, ua}, Leg{ua, ub}, Leg{ub, b}};
  for (int i = 0; i < kLegs; ++i) detect_lifts(i);
}

std::vector<SingularKnotSpec> Isotopy::waypoints() const {
  return {legs_[0].a, legs_[1].a, legs_[2].a, legs_[2].b};
}

std::pair<int, double> Isotopy::locate(double tau) const {
  double x = std::clamp(tau, 0.0, 1.0) * kLegs;
  int i = std::min(static_cast<int>(x), kLegs - 1);
  return {i, x - i};
}

std::vector<double> Isotopy::leg_times(const Leg& leg, double sigma) const {
  std::vector<double> t(leg.a.times.size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = (1 - sigma) * leg.a.times[k] + sigma * leg.b.times[k];
  return t;
}

std::vector<double> Isotopy::times_at(double tau) const {
  auto [i, sigma] = locate(tau);
  return leg_times(legs_[static_cast<std::size_t>(i)], sigma);
}

Isotopy::Reparam Isotopy::reparam(const Leg& leg, double sigma) const {
  // slope one within +-0.011 of every singular time, identity near t = 0
  static const double offsets[] = {-0.016, -0.011, 0.0, 0.011, 0.016};
  std::vector<double> x{0.0, 0.005}, ya{0.0, 0.005}, yb{0.0, 0.005};
  auto T = leg_times(leg, sigma);
  for (std::size_t k = 0; k < T.size(); ++k)
    for (double o : offsets) {
      x.push_back(T[k] + o);
      ya.push_back(leg.a.times[k] + o);
      yb.push_back(leg.b.times[k] + o);
    }
  x.insert(x.end(), {0.995, 1.0});
  ya.insert(ya.end(), {0.995, 1.0});
  yb.insert(yb.end(), {0.995, 1.0});
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1]) || !(ya[i] > ya[i - 1]) || !(yb[i] > yb[i - 1]))
      throw std::logic_error("Isotopy: reparametrization nodes collide");
  std::vector<double> x2 = x;
  return {std::make_shared<Pchip>(std::move(x), std::move(ya), 1.0, 1.0),
          std::make_shared<Pchip>(std::move(x2), std::move(yb), 1.0, 1.0)};
}

ParametricCurve Isotopy::blend(int i, double sigma, bool with_lifts) const {
  const Leg& leg = legs_[static_cast<std::size_t>(i)];
  if (sigma <= 0) return leg.a.curve;
  if (sigma >= 1) return leg.b.curve;
  auto r = reparam(leg, sigma);
  std::vector<Lift> mine;
  if (with_lifts)
    for (const auto& l : lifts_)
      if (l.leg == i) mine.push_back(l);
  return ParametricCurve(std::make_shared<BlendCurve>(leg.a.curve, leg.b.curve, sigma, r.phi, r.chi, mine));
}

ParametricCurve Isotopy::at(double tau) const {
  auto [i, sigma] = locate(tau);
  return blend(i, sigma, true);
}

SingularKnotSpec Isotopy::spec_at(double tau) const {
  SingularKnotSpec s = legs_.front().a;
  s.label = start().label + "->" + end().label;
  s.curve = at(tau);
  s.times = times_at(tau);
  s.tangents.clear();
  for (double t : s.times) s.tangents.push_back(s.curve.tangent(t).normalized());
  return s;
}

void Isotopy::detect_lifts(int li) {
  const Leg& leg = legs_[static_cast<std::size_t>(li)];
  const int n = li == 1 ? opt_.tau_samples : std::max(8, opt_.tau_samples / 4);
  std::vector<std::vector<Box>> per(static_cast<std::size_t>(n));
  auto scan = [&](int k) {
    double sigma = static_cast<double>(k) / n;
    auto c = blend(li, sigma, false);
    auto T = leg_times(leg, sigma);
    auto pairs = close_pairs(c, opt_.detect_samples, 0.2, opt_.detect, singular_boxes(T, leg.a.expression, opt_.singular_box));
    auto& here = per[static_cast<std::size_t>(k)];
    for (auto p : pairs) {
      if (p.s > p.t) std::swap(p.s, p.t);
      Box* hit = nullptr;
      for (auto& b : here)
        if (b.s.near(Range{p.s, p.s}, 0.03) && b.t.near(Range{p.t, p.t}, 0.03)) hit = &b;
      if (!hit) {
        here.push_back(Box{k, {}, {}});
        hit = &here.back();
      }
      hit->s.add(p.s);
      hit->t.add(p.t);
      hit->dmin = std::min(hit->dmin, p.distance);
    }
  };
  parallel_for(1, n, scan);
  std::vector<Box> boxes;
  for (const auto& h : per) boxes.insert(boxes.end(), h.begin(), h.end());

  // link boxes of nearby sigma into crossing events
  std::vector<std::size_t> parent(boxes.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < boxes.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(boxes[i].k - boxes[j].k) <= 2 && boxes[i].s.near(boxes[j].s, 0.02) && boxes[i].t.near(boxes[j].t, 0.02))
        parent[find(i)] = find(j);

  std::map<std::size_t, std::vector<std::size_t>> events;
  for (std::size_t i = 0; i < boxes.size(); ++i) events[find(i)].push_back(i);

  const double step = 1.0 / n;
  const bool debug = std::getenv("KC_DEBUG") != nullptr;
  for (const auto& [root, members] : events) {
    // only the part of the event that actually gets close needs a lift;
    // the rest stays above `critical` in R^3 already
    int k_lo = n, k_hi = 0;
    Range s, t;
    double dmin = 1e9;
    for (auto i : members) {
      dmin = std::min(dmin, boxes[i].dmin);
      if (boxes[i].dmin >= opt_.critical) continue;
      k_lo = std::min(k_lo, boxes[i].k);
      k_hi = std::max(k_hi, boxes[i].k);
      s.add(boxes[i].s);
      t.add(boxes[i].t);
    }
    if (k_hi == 0) continue;
    if (debug)
      std::fprintf(stderr, "leg %d event dmin %g sigma [%g,%g] s [%g,%g] t [%g,%g]\n", li, dmin, k_lo * step,
                   k_hi * step, s.lo, s.hi, t.lo, t.hi);
    std::ostringstream where;
    where << "Isotopy " << start().label << "->" << end().label << " leg " << li << ", sigma " << k_lo * step << ".."
          << k_hi * step << ": ";
    if (s.hi - s.lo > 0.3 || t.hi - t.lo > 0.3) throw std::runtime_error(where.str() + "crossing event too spread out");
    // clearance of a time range from the singular times over the event, and
    // from the basepoint
    auto clearance = [&](const Range& r) {
      double c = std::min(r.lo, 1.0 - r.hi) - 0.005;
      for (int k = k_lo; k <= k_hi; ++k)
        for (double T : leg_times(leg, static_cast<double>(k) / n)) {
          double d = T < r.lo ? r.lo - T : (T > r.hi ? T - r.hi : 0.0);
          c = std::min(c, d);
        }
      return c;
    };
    const double pad = 0.003;
    bool lift_s = clearance(s) >= clearance(t);
    const Range& lifted = lift_s ? s : t;
    const Range& other = lift_s ? t : s;
    // steeper ramps when the crossing strands are close along the curve
    const double gap = std::max(other.lo - lifted.hi, lifted.lo - other.hi);
    const double t_ramp = std::min(0.01, 0.8 * (gap - pad));
    if (t_ramp < 0.004) throw std::runtime_error(where.str() + "crossing strands overlap in time");
    if (clearance(lifted) < opt_.singular_clearance + t_ramp + pad)
      throw std::runtime_error(where.str() + "crossing strands too close to singular points");
    Lift l;
    l.leg = li;
    l.t_lo = lifted.lo - pad;
    l.t_hi = lifted.hi + pad;
    l.t_ramp = t_ramp;
    l.tau_ramp = 2 * step;
    l.tau_lo = (k_lo - 2) * step;
    l.tau_hi = (k_hi + 2) * step;
    if (l.tau_lo - l.tau_ramp <= 0 || l.tau_hi + l.tau_ramp >= 1)
      throw std::runtime_error(where.str() + "crossing too close to the end of a leg");
    l.height = opt_.lift_height;
    lifts_.push_back(l);
  }
}

Verdict Isotopy::verify(int n) const {
  RespectOptions ro;
  ro.strict = true;
  ro.samples = opt_.curve_samples;
  const auto& expr = start().expression;
  std::vector<Verdict> out(static_cast<std::size_t>(n + 1));
  parallel_for(0, n + 1, [&](int j) {
    double tau = static_cast<double>(j) / n;
    auto [li, sigma] = locate(tau);
    auto c = blend(li, sigma, true);
    auto& v = out[static_cast<std::size_t>(j)];
    v = check_respects(c, times_at(tau), expr, ro);
    if (!v.ok) {
      v.detail = "tau=" + std::to_string(tau) + ": " + v.detail;
      return;
    }
    if (mode_ == IsotopyMode::constrained) {
      for (int m = 0; m < 2000; ++m) {
        double t = m / 2000.0;
        bool in_window = false;
        for (const auto& l : lifts_)
          in_window = in_window || (l.leg == li && plateau(sigma, l.tau_lo, l.tau_hi, l.tau_ramp) > 0 &&
                                    plateau(t, l.t_lo, l.t_hi, l.t_ramp) > 0);
        Vec p = c.point(t);
        double off = p.size() > 4 ? p.tail(p.size() - 4).norm() : 0.0;
        if (off != 0 || (!in_window && p[3] != 0)) {
          v.ok = false;
          v.detail = "tau=" + std::to_string(tau) + ": leaves R^3 outside a crossing window";
          v.worst = std::abs(p[3]) + off;
          return;
        }
      }
    }
  });
  for (const auto& v : out)
    if (!v.ok) return v;
  Verdict ok;
  ok.ok = true;
  return ok;
}

SatelliteInfo satellite_info(const SingularKnotSpec& s) {
  if (s.curve.bumps().empty()) throw std::invalid_argument("Isotopy: " + s.label + " is not a satellite");
  const Bump& sat = s.curve.bumps().back();
  auto nearest = std::min_element(s.times.begin(), s.times.end(), [&](double x, double y) {
    return std::abs(x - sat.center) < std::abs(y - sat.center);
  });
  SatelliteInfo info;
  info.moved = static_cast<int>(nearest - s.times.begin()) + 1;
  for (const auto& g : bracket_groups(s.expression))
    if (g.size() == 2 && (g[0] == info.moved || g[1] == info.moved))
      info.partner = g[0] == info.moved ? g[1] : g[0];
  if (info.partner == 0) throw std::invalid_argument("Isotopy: moved strand of " + s.label + " has no partner");
  info.center = sat.center;
  info.push = sat.direction.normalized();
  info.moved_dir = s.curve.tangent(sat.center).normalized();
  info.partner_dir = s.curve.tangent(s.times[static_cast<std::size_t>(info.partner - 1)]).normalized();
  return info;
}

}  // namespace knotcycle::knots
