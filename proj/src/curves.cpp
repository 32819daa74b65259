#include "knotcycle/curves.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace knotcycle::knots {

double bump(double t, double center, double halfwidth) {
  double x = (t - center) / halfwidth;
  if (std::abs(x) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - x * x));
}

double bump_derivative(double t, double center, double halfwidth) {
  double x = (t - center) / halfwidth;
  if (std::abs(x) >= 1.0) return 0.0;
  double q = 1.0 - x * x;
  // d/dx exp(1 - 1/q) = exp(..) * (-2x / q^2)
  return std::exp(1.0 - 1.0 / q) * (-2.0 * x / (q * q)) / halfwidth;
}

double wrap01(double t) {
  double w = t - std::floor(t);
  return w >= 1.0 ? 0.0 : w;
}

double circle_distance(double s, double t) {
  double x = std::abs(wrap01(s) - wrap01(t));
  return std::min(x, 1.0 - x);
}

namespace {

Vec embed(const Vec3& p, int d) {
  Vec v = Vec::Zero(d);
  v.head<3>() = p;
  return v;
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  Vec3 ab = b - a;
  double l2 = ab.squaredNorm();
  double lam = l2 > 0 ? std::clamp((p - a).dot(ab) / l2, 0.0, 1.0) : 0.0;
  return (p - a - lam * ab).norm();
}

}  // namespace

PolyCurve::PolyCurve(int d, std::vector<Vec3> vertices, const Vec3& basepoint, std::vector<Window> windows,
                     double fillet_radius, double speed)
    : d_(d), vertices_(std::move(vertices)), basepoint_(basepoint), windows_(windows), fillet_(fillet_radius),
      speed_(speed) {
  const std::size_t n = vertices_.size();
  if (n < 3) throw std::invalid_argument("PolyCurve: need at least three vertices");
  if (d < 3) throw std::invalid_argument("PolyCurve: ambient dimension below 3");

  std::vector<Vec3> dir(n);
  std::vector<double> elen(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 e = vertices_[(i + 1) % n] - vertices_[i];
    elen[i] = e.norm();
    if (elen[i] < 1e-12) throw std::invalid_argument("PolyCurve: repeated vertex");
    dir[i] = e / elen[i];
  }
  // trim at vertex i, shared by edges i-1 and i
  std::vector<double> trim(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t prev = (i + n - 1) % n;
    double c = dir[prev].dot(dir[i]);
    if (c > 1 - 1e-12) {
      trim[i] = 0;
    } else if (c < -1 + 1e-6) {
      throw std::invalid_argument("PolyCurve: polygon reverses at a vertex");
    } else {
      trim[i] = std::min({fillet_radius, 0.4 * elen[prev], 0.4 * elen[i]});
    }
  }

  if (point_segment_distance(basepoint, vertices_[0], vertices_[1]) > 1e-12)
    throw std::invalid_argument("PolyCurve: basepoint not on the first edge");
  Vec3 line0_start = vertices_[0] + trim[0] * dir[0];
  Vec3 line0_end = vertices_[1] - trim[1] * dir[0];
  if ((basepoint - line0_start).dot(dir[0]) <= 0 || (line0_end - basepoint).dot(dir[0]) <= 0)
    throw std::invalid_argument("PolyCurve: basepoint inside a fillet");

  double u = 0;
  auto push_line = [&](const Vec3& a, const Vec3& b, int edge) {
    Piece p;
    p.edge = edge;
    p.p0 = a;
    p.p2 = b;
    p.u0 = u;
    p.len = (b - a).norm();
    if (p.len > 0) {
      pieces_.push_back(p);
      u += p.len;
    }
  };
  auto push_fillet = [&](std::size_t i) {
    if (trim[i] == 0) return;
    std::size_t prev = (i + n - 1) % n;
    Piece p;
    p.quad = true;
    p.p0 = vertices_[i] - trim[i] * dir[prev];
    p.p1 = vertices_[i];
    p.p2 = vertices_[i] + trim[i] * dir[i];
    p.u0 = u;
    p.len = 2 * trim[i];
    pieces_.push_back(p);
    u += p.len;
  };

  push_line(basepoint, line0_end, 0);
  for (std::size_t k = 1; k < n; ++k) {
    push_fillet(k);
    push_line(vertices_[k] + trim[k] * dir[k], vertices_[(k + 1) % n] - trim[(k + 1) % n] * dir[k],
              static_cast<int>(k));
  }
  push_fillet(0);
  push_line(line0_start, basepoint, 0);
  length_ = u;

  std::sort(windows.begin(), windows.end(), [](const Window& a, const Window& b) { return a.time < b.time; });
  knots_.push_back({0.0, 0.0, speed});
  for (const auto& w : windows) {
    double uc = arclength_of(w.edge, w.through);
    double half = speed * w.halfwidth;
    // the whole window must sit on one straight piece
    auto on_line = [&](double uu) {
      for (const auto& p : pieces_)
        if (!p.quad && uu >= p.u0 - 1e-12 && uu <= p.u0 + p.len + 1e-12) return true;
      return false;
    };
    auto same_piece = [&](double a, double b) {
      for (const auto& p : pieces_)
        if (!p.quad && a >= p.u0 - 1e-12 && b <= p.u0 + p.len + 1e-12) return true;
      return false;
    };
    if (!on_line(uc) || !same_piece(uc - half, uc + half))
      throw std::invalid_argument("PolyCurve: window at t=" + std::to_string(w.time) + " is not straight");
    knots_.push_back({w.time - w.halfwidth, uc - half, speed});
    knots_.push_back({w.time + w.halfwidth, uc + half, speed});
  }
  knots_.push_back({1.0, length_, speed});
  for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
    double h = knots_[k + 1].t - knots_[k].t;
    double secant = (knots_[k + 1].u - knots_[k].u) / h;
    if (h <= 0 || secant <= 0)
      throw std::invalid_argument("PolyCurve: windows overlap or are out of order");
    double a = knots_[k].slope / secant, b = knots_[k + 1].slope / secant;
    // Fritsch-Carlson; strict so the speed stays positive
    if (a * a + b * b >= 9.0 - 1e-9) throw std::invalid_argument("PolyCurve: time map not monotone");
  }
}

double PolyCurve::arclength_of(int edge, const Vec3& p) const {
  for (const auto& pc : pieces_) {
    if (pc.quad || pc.edge != edge) continue;
    if (point_segment_distance(p, pc.p0, pc.p2) < 1e-9) return pc.u0 + (p - pc.p0).norm();
  }
  throw std::invalid_argument("PolyCurve: window point not on a straight piece");
}

void PolyCurve::eval(double t, Vec3* p, Vec3* dp) const {
  t = wrap01(t);
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t, [](double x, const Knot& k) { return x < k.t; });
  std::size_t k = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - knots_.begin() - 1, 0,
                                                                      static_cast<std::ptrdiff_t>(knots_.size()) - 2));
  const Knot& a = knots_[k];
  const Knot& b = knots_[k + 1];
  double h = b.t - a.t;
  double l = (t - a.t) / h;
  double l2 = l * l, l3 = l2 * l;
  double u = (2 * l3 - 3 * l2 + 1) * a.u + (l3 - 2 * l2 + l) * h * a.slope + (-2 * l3 + 3 * l2) * b.u +
             (l3 - l2) * h * b.slope;
  double du = (6 * l2 - 6 * l) / h * a.u + (3 * l2 - 4 * l + 1) * a.slope + (-6 * l2 + 6 * l) / h * b.u +
              (3 * l2 - 2 * l) * b.slope;
  u = std::clamp(u, 0.0, length_);

  auto pit = std::upper_bound(pieces_.begin(), pieces_.end(), u, [](double x, const Piece& pc) { return x < pc.u0; });
  const Piece& pc = *(pit == pieces_.begin() ? pit : pit - 1);
  double lam = std::clamp((u - pc.u0) / pc.len, 0.0, 1.0);
  if (!pc.quad) {
    Vec3 e = (pc.p2 - pc.p0) / pc.len;
    if (p) *p = pc.p0 + (u - pc.u0) * e;
    if (dp) *dp = e * du;
  } else {
    if (p) *p = (1 - lam) * (1 - lam) * pc.p0 + 2 * lam * (1 - lam) * pc.p1 + lam * lam * pc.p2;
    if (dp) *dp = (2 * (1 - lam) * (pc.p1 - pc.p0) + 2 * lam * (pc.p2 - pc.p1)) / pc.len * du;
  }
}

Vec PolyCurve::point(double t) const {
  Vec3 p;
  eval(t, &p, nullptr);
  return embed(p, d_);
}

Vec PolyCurve::tangent(double t) const {
  Vec3 dp;
  eval(t, nullptr, &dp);
  return embed(dp, d_);
}

Vec ParametricCurve::point(double t) const {
  t = wrap01(t);
  Vec p = base_->point(t);
  for (const auto& b : bumps_) {
    // bumps never straddle t = 0 here: centers keep their halfwidth inside (0,1)
    double v = bump(t, b.center, b.halfwidth);
    if (v != 0.0) p += b.amplitude * v * b.direction;
  }
  return p;
}

Vec ParametricCurve::tangent(double t) const {
  t = wrap01(t);
  Vec p = base_->tangent(t);
  for (const auto& b : bumps_) {
    double v = bump_derivative(t, b.center, b.halfwidth);
    if (v != 0.0) p += b.amplitude * v * b.direction;
  }
  return p;
}

ParametricCurve ParametricCurve::with_bump(const Bump& b) const {
  if (b.direction.size() != dim()) throw std::invalid_argument("bump direction has the wrong dimension");
  if (b.center - b.halfwidth <= 0 || b.center + b.halfwidth >= 1)
    throw std::invalid_argument("bump support must lie inside (0,1)");
  ParametricCurve out = *this;
  out.bumps_.push_back(b);
  return out;
}

std::vector<Vec> sample(const ParametricCurve& c, int n) {
  std::vector<Vec> pts(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) pts[static_cast<std::size_t>(k)] = c.point(static_cast<double>(k) / n);
  return pts;
}

namespace {

// small vectors without heap allocation
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 16, 1>;

// closest points between segments p0p1 and q0q1, returns (distance, lam, mu)
std::array<double, 3> segment_distance(const SmallVec& p0, const SmallVec& p1, const SmallVec& q0, const SmallVec& q1) {
  SmallVec d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
  double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0, t = 0;
  if (a <= 1e-300 && e <= 1e-300) return {r.norm(), 0, 0};
  if (a <= 1e-300) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    double c = d1.dot(r);
    if (e <= 1e-300) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      double b = d1.dot(d2);
      double den = a * e - b * b;
      s = den > 1e-300 ? std::clamp((b * f - c * e) / den, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0) {
        t = 0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1) {
        t = 1;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return {(p0 + s * d1 - q0 - t * d2).norm(), s, t};
}

struct CellKey {
  long x, y, z;
  bool operator==(const CellKey&) const = default;
};
struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return static_cast<std::size_t>(k.x * 73856093L ^ k.y * 19349663L ^ k.z * 83492791L);
  }
};

}  // namespace

std::vector<ClosePair> close_pairs(const ParametricCurve& c, int n, double eta, double reach,
                                   const std::vector<ExcludedBox>& excluded) {
  if (c.dim() > 16) throw std::invalid_argument("close_pairs: dimension above 16");
  std::vector<SmallVec> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (const Vec& p : sample(c, n)) pts.emplace_back(p);
  double max_seg = 0;
  for (int k = 0; k < n; ++k)
    max_seg = std::max(max_seg, (pts[static_cast<std::size_t>((k + 1) % n)] - pts[static_cast<std::size_t>(k)]).norm());
  const double cell = reach + max_seg;
  std::vector<double> arc(static_cast<std::size_t>(n) + 1, 0.0);
  for (int k = 0; k < n; ++k)
    arc[static_cast<std::size_t>(k) + 1] =
        arc[static_cast<std::size_t>(k)] +
        (pts[static_cast<std::size_t>((k + 1) % n)] - pts[static_cast<std::size_t>(k)]).norm();
  const double total = arc.back();
  auto key_of = [&](const SmallVec& p) {
    return CellKey{static_cast<long>(std::floor(p[0] / cell)), static_cast<long>(std::floor(p[1] / cell)),
                   static_cast<long>(std::floor(p[2] / cell))};
  };
  std::unordered_map<CellKey, std::vector<int>, CellHash> grid;
  std::vector<CellKey> keys(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    SmallVec mid = 0.5 * (pts[static_cast<std::size_t>(k)] + pts[static_cast<std::size_t>((k + 1) % n)]);
    keys[static_cast<std::size_t>(k)] = key_of(mid);
    grid[keys[static_cast<std::size_t>(k)]].push_back(k);
  }
  auto skip = [&](int k, int m, double s, double t) {
    double a = std::abs(arc[static_cast<std::size_t>(k)] - arc[static_cast<std::size_t>(m)]);
    if (std::min(a, total - a) < eta) return true;
    for (const auto& b : excluded) {
      if (circle_distance(s, b.a) < b.radius && circle_distance(t, b.b) < b.radius) return true;
      if (circle_distance(t, b.a) < b.radius && circle_distance(s, b.b) < b.radius) return true;
    }
    return false;
  };

  std::vector<ClosePair> found;
  for (int k = 0; k < n; ++k) {
    const CellKey& ck = keys[static_cast<std::size_t>(k)];
    for (long dx = -1; dx <= 1; ++dx)
      for (long dy = -1; dy <= 1; ++dy)
        for (long dz = -1; dz <= 1; ++dz) {
          auto it = grid.find(CellKey{ck.x + dx, ck.y + dy, ck.z + dz});
          if (it == grid.end()) continue;
          for (int m : it->second) {
            if (m <= k) continue;
            double s = (k + 0.5) / n, t = (m + 0.5) / n;
            if (skip(k, m, s, t)) continue;
            auto [dist, lam, mu] =
                segment_distance(pts[static_cast<std::size_t>(k)], pts[static_cast<std::size_t>((k + 1) % n)],
                                 pts[static_cast<std::size_t>(m)], pts[static_cast<std::size_t>((m + 1) % n)]);
            if (dist < reach) found.push_back(ClosePair{(k + lam) / n, (m + mu) / n, dist});
          }
        }
  }
  return found;
}

std::optional<ClosePair> closest_nonlocal_pair(const ParametricCurve& c, int n, double eta, double reach,
                                               const std::vector<ExcludedBox>& excluded) {
  auto all = close_pairs(c, n, eta, reach, excluded);
  if (all.empty()) return std::nullopt;
  return *std::min_element(all.begin(), all.end(),
                           [](const ClosePair& a, const ClosePair& b) { return a.distance < b.distance; });
}

double min_speed(const ParametricCurve& c, int n) {
  double m = INFINITY;
  for (int k = 0; k < n; ++k) m = std::min(m, c.tangent(static_cast<double>(k) / n).norm());
  return m;
}

}  // namespace knotcycle::knots
