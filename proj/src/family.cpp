#include "knotcycle/family.hpp"

#include "knotcycle/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace knotcycle::knots {

namespace {

Eigen::MatrixXd projector(const std::vector<Vec>& vs, int d) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(d, d);
  if (vs.empty()) return P;
  Eigen::MatrixXd A(d, static_cast<int>(vs.size()));
  for (std::size_t i = 0; i < vs.size(); ++i) A.col(static_cast<int>(i)) = vs[i];
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, A.cols());
  return P - Q * Q.transpose();
}

// A (A^T A)^{-1/2}
Eigen::MatrixXd lowdin(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.transpose() * A);
  const Vec ev = es.eigenvalues();
  if (ev.minCoeff() < 1e-12) throw std::runtime_error("lowdin: degenerate projected frame");
  Vec inv = ev.cwiseSqrt().cwiseInverse();
  return A * es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Vec unit_orth(const Vec& x, const Vec& r) {
  Vec e = x - x.dot(r) * r;
  return e.normalized();
}

// Which strand amplitudes the variant uses on the double point of t1 and t4,
// blended by weight w in [0,1] (w = 0: plain resolution).
struct VariantFactors {
  double later = 1, earlier = 0, halfwidth = 1;
};

VariantFactors variant_factors(Variant v, const std::vector<double>& params, double w) {
  VariantFactors f;
  switch (v) {
    case Variant::none: return f;
    case Variant::prime: f.earlier = 1; break;
    case Variant::double_prime: f.later = 0; f.earlier = 1; break;
    case Variant::W1: f.earlier = params.at(0); break;
    case Variant::W2: f.later = params.at(0); f.earlier = 1; break;
    case Variant::W3:
      f.later = params.at(0);
      f.earlier = 1;
      f.halfwidth = params.at(1);
      break;
  }
  f.later = 1 - w * (1 - f.later);
  f.earlier *= w;
  f.halfwidth = 1 - w * (1 - f.halfwidth);
  return f;
}

int variant_intervals(Variant v) {
  switch (v) {
    case Variant::W1:
    case Variant::W2: return 1;
    case Variant::W3: return 2;
    default: return 0;
  }
}

std::string variant_suffix(Variant v) {
  switch (v) {
    case Variant::none: return "";
    case Variant::prime: return "'";
    case Variant::double_prime: return "''";
    case Variant::W1: return "/W1";
    case Variant::W2: return "/W2";
    case Variant::W3: return "/W3";
  }
  return "";
}

void push_variant_moves(std::vector<StrandMove>& out, Variant v, const std::vector<double>& params, double w,
                        int later, int earlier, const Vec& u, double a, double eps_later, double eps_earlier) {
  const VariantFactors f = variant_factors(v, params, w);
  if (f.later > 0 && f.halfwidth > 0) out.push_back({later, u, f.later * a, f.halfwidth * eps_later});
  if (f.earlier > 0) out.push_back({earlier, -u, f.earlier * a, eps_earlier});
}

int find_time(const std::vector<double>& times, double t) {
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - t) < 1e-9) return static_cast<int>(i) + 1;
  return 0;
}

// Group of a pair monomial holding variable x (1-based), and the other variable.
int partner_of(const std::vector<std::vector<int>>& groups, int x) {
  for (const auto& g : groups)
    if (g.size() == 2 && (g[0] == x || g[1] == x)) return g[0] == x ? g[1] : g[0];
  return 0;
}

// ---------------------------------------------------------------------------
// M1, M2: resolve x3 (triple point) and x4, x5 on a base knot.

class ResolutionChart final : public Chart {
 public:
  ResolutionChart(SingularKnotSpec k, const std::string& label, Variant variant) : k_(std::move(k)) {
    label_ = label + variant_suffix(variant);
    variant_ = variant;
    d_ = k_.curve.dim();
    const Constants& c = constants();
    const auto groups = bracket_groups(k_.expression);
    std::vector<int> triple;
    for (const auto& g : groups)
      if (g.size() == 3) triple = g;
    if (triple.empty() || std::find(triple.begin(), triple.end(), 3) == triple.end())
      throw std::invalid_argument("ResolutionChart: x3 must lie on the triple point");
    for (int j : triple)
      if (j != 3) {
        caps_.push_back(k_.tangents[static_cast<std::size_t>(j - 1)]);
        caps_.push_back(-k_.tangents[static_cast<std::size_t>(j - 1)]);
      }
    // after x3 leaves, the triple group is a pair; x4 and x5 sit on pairs
    for (int m : {3, 4, 5}) {
      std::vector<Vec> span{k_.tangents[static_cast<std::size_t>(m - 1)]};
      if (m != 3) {
        int p = 0;
        for (const auto& g : groups)
          if (std::find(g.begin(), g.end(), m) != g.end())
            for (int x : g)
              if (x != m && x != 3) p = x;
        if (p == 0) throw std::invalid_argument("ResolutionChart: no partner");
        partner_.push_back(p);
        span.push_back(k_.tangents[static_cast<std::size_t>(p - 1)]);
      } else {
        partner_.push_back(0);
      }
      frames_.push_back(complement_frame(span, d_));
      sphere_dims_.push_back(static_cast<int>(frames_.back().cols()) - 1);
      amplitude_.push_back(m == 3 ? c.a3 : c.a_double);
    }
    intervals_ = variant_intervals(variant);
  }

  bool in_domain(const ChartPoint& p) const override {
    if (!Chart::in_domain(p)) return false;
    const Vec v3 = ambient_of(0, p.spheres[0]);
    for (const Vec& w : caps_)
      if ((v3 - w).norm() < k_.delta * (1 - 1e-12)) return false;
    return true;
  }

  SingularKnotSpec base(const ChartPoint&) const override { return k_; }

  std::vector<StrandMove> moves(const ChartPoint& p) const override {
    std::vector<StrandMove> out;
    const double eps = k_.epsilon;
    for (int j = 0; j < 3; ++j) {
      const Vec u = ambient_of(j, p.spheres[static_cast<std::size_t>(j)]);
      const int m = 3 + j;
      // the double point of t1 and t4 is the group of x4 here
      if (m == 4)
        push_variant_moves(out, variant_, p.intervals, 1.0, m, partner_[1], u, amplitude_[1], eps, eps);
      else
        out.push_back({m, u, amplitude_[static_cast<std::size_t>(j)], eps});
    }
    return out;
  }

  Vec ambient_of(int j, const Vec& v) const { return frames_[static_cast<std::size_t>(j)] * v; }
  Vec intrinsic_of(int j, const Vec& v) const { return frames_[static_cast<std::size_t>(j)].transpose() * v; }
  const SingularKnotSpec& knot() const { return k_; }

 private:
  SingularKnotSpec k_;
  std::vector<Vec> caps_;
  std::vector<Eigen::MatrixXd> frames_;
  std::vector<int> partner_;
  std::vector<double> amplitude_;
};

// ---------------------------------------------------------------------------
// A knot with double points only, some of them resolved.

class DoublePointChart final : public Chart {
 public:
  DoublePointChart(SingularKnotSpec k, std::vector<int> S, double amplitude, const std::string& label)
      : k_(std::move(k)), S_(std::move(S)), a_(amplitude) {
    label_ = label;
    d_ = k_.curve.dim();
    const auto groups = bracket_groups(k_.expression);
    for (int m : S_) {
      const int p = partner_of(groups, m);
      if (p == 0) throw std::invalid_argument("DoublePointChart: x" + std::to_string(m) + " is not on a double point");
      frames_.push_back(complement_frame({k_.tangents[static_cast<std::size_t>(m - 1)], k_.tangents[static_cast<std::size_t>(p - 1)]}, d_));
      sphere_dims_.push_back(d_ - 3);
    }
  }
  SingularKnotSpec base(const ChartPoint&) const override { return k_; }
  std::vector<StrandMove> moves(const ChartPoint& p) const override {
    std::vector<StrandMove> out;
    for (std::size_t j = 0; j < S_.size(); ++j) out.push_back({S_[j], frames_[j] * p.spheres[j], a_, k_.epsilon});
    return out;
  }

 private:
  SingularKnotSpec k_;
  std::vector<int> S_;
  double a_;
  std::vector<Eigen::MatrixXd> frames_;
};

// ---------------------------------------------------------------------------
// M_i x I: the three double points of h_i(tau), each resolved by a
// sphere S^{d-3} in the normal space of its two strands.

class IsotopyChart final : public Chart {
 public:
  static constexpr int kFrameGrid = 1000;
  static constexpr double kSwitchStart = 0.9;

  IsotopyChart(std::shared_ptr<const Isotopy> iso, const SingularKnotSpec& k1, const SingularKnotSpec& k2,
               const std::string& label, Variant variant)
      : iso_(std::move(iso)) {
    static std::atomic<std::uint64_t> next{1};
    id_ = next++;
    label_ = label + variant_suffix(variant);
    variant_ = variant;
    const SingularKnotSpec& a = iso_->start();
    const SingularKnotSpec& b = iso_->end();
    d_ = a.curve.dim();
    delta_ = a.delta;
    eps_ = a.epsilon;
    amplitude_ = constants().a_double;
    sa_ = satellite_info(a);
    sb_ = satellite_info(b);
    const auto groups = bracket_groups(a.expression);
    auto resolved = [](const SingularKnotSpec& s, const SingularKnotSpec& base, const std::vector<int>& g) {
      int r = 0;
      for (int x : g)
        for (int m : base.moved)
          if (std::abs(s.times[static_cast<std::size_t>(x - 1)] - base.times[static_cast<std::size_t>(m - 1)]) < 1e-9) {
            if (r != 0) throw std::invalid_argument("IsotopyChart: two resolvable strands in one group");
            r = x;
          }
      if (r == 0) throw std::invalid_argument("IsotopyChart: no resolvable strand in a group of " + s.label);
      return r;
    };
    auto is_t14 = [](const SingularKnotSpec& s, const SingularKnotSpec& base, const std::vector<int>& g) {
      return std::abs(s.times[static_cast<std::size_t>(g[0] - 1)] - base.times[0]) < 1e-9 &&
             std::abs(s.times[static_cast<std::size_t>(g[1] - 1)] - base.times[3]) < 1e-9;
    };
    for (const auto& g : groups) {
      if (g.size() != 2) throw std::invalid_argument("IsotopyChart: expected three double points");
      Group G;
      G.vars = {g[0], g[1]};
      G.r_a = resolved(a, k1, g);
      G.r_b = resolved(b, k2, g);
      G.o_a = G.r_a == g[0] ? g[1] : g[0];
      G.o_b = G.r_b == g[0] ? g[1] : g[0];
      G.swap = G.r_a != G.r_b;
      G.t14_a = is_t14(a, k1, g);
      G.t14_b = is_t14(b, k2, g);
      if (sa_.moved == g[0] || sa_.moved == g[1]) {
        if (G.r_a != sa_.moved) throw std::logic_error("IsotopyChart: satellite strand not resolved at start");
        G.sat_a = true;
        const Vec E = unit_orth(a.tangents[static_cast<std::size_t>(G.o_a - 1)], a.tangents[static_cast<std::size_t>(G.r_a - 1)]);
        G.c_a = -0.5 * delta_ * sa_.push.dot(E);
      }
      if (sb_.moved == g[0] || sb_.moved == g[1]) {
        if (G.r_b != sb_.moved) throw std::logic_error("IsotopyChart: satellite strand not resolved at end");
        G.sat_b = true;
        const Vec E = unit_orth(b.tangents[static_cast<std::size_t>(G.o_b - 1)], b.tangents[static_cast<std::size_t>(G.r_b - 1)]);
        G.c_b = -0.5 * delta_ * sb_.push.dot(E);
      }
      if (G.swap && (G.t14_a || G.t14_b) && variant != Variant::none)
        throw std::logic_error("IsotopyChart: strand switch on the t1/t4 double point");
      groups_.push_back(G);
      sphere_dims_.push_back(d_ - 3);
    }
    has_switch_ = std::any_of(groups_.begin(), groups_.end(), [](const Group& g) { return g.swap; });
    intervals_ = 1 + variant_intervals(variant);
    // frames continued along tau on a grid
    for (auto& G : groups_) G.frames.reserve(kFrameGrid + 1);
    for (int k = 0; k <= kFrameGrid; ++k) {
      const double tau = static_cast<double>(k) / kFrameGrid;
      const auto tangents = iso_->spec_at(tau).tangents;
      for (auto& G : groups_) {
        std::vector<Vec> span{tangents[static_cast<std::size_t>(G.r_a - 1)], tangents[static_cast<std::size_t>(G.o_a - 1)]};
        G.frames.push_back(k == 0 ? complement_frame(span, d_) : continue_frame(G.frames.back(), span));
      }
    }
  }

  struct Phase {
    double tau = 0, lambda = 0;
  };
  Phase phase(double theta) const {
    if (!has_switch_) return {theta, 0};
    if (theta <= kSwitchStart) return {theta / kSwitchStart, 0};
    return {1, (theta - kSwitchStart) / (1 - kSwitchStart)};
  }

  SingularKnotSpec base(const ChartPoint& p) const override {
    const Phase ph = phase(p.intervals.at(0));
    if (ph.tau >= 1) return iso_->end();
    if (ph.tau <= 0) return iso_->start();
    // curve() asks twice per point; Monte Carlo asks again for nearby params
    struct Cache {
      std::uint64_t owner = 0;
      double tau = -1;
      SingularKnotSpec spec;
    };
    static thread_local Cache cache;
    if (cache.owner != id_ || cache.tau != ph.tau) cache = {id_, ph.tau, iso_->spec_at(ph.tau)};
    return cache.spec;
  }

  // Resolution direction of group j at tau (before any switch).
  Vec direction(std::size_t j, double tau, const std::vector<Vec>& tangents, const Vec& n_int) const {
    const Group& G = groups_[j];
    const Vec Tr = tangents[static_cast<std::size_t>(G.r_a - 1)];
    const Vec To = tangents[static_cast<std::size_t>(G.o_a - 1)];
    const Vec n = frame_at(G, tau, {Tr, To}) * n_int;
    const double c = (1 - tau) * G.c_a + tau * (G.swap ? 0.0 : G.c_b);
    return c * unit_orth(To, Tr) + std::sqrt(1 - c * c) * n;
  }

  // Direction resolving r_b at the end of a switching group.
  Vec switched_direction(std::size_t j, const Vec& n_int) const {
    const Group& G = groups_[j];
    const auto& t = iso_->end().tangents;
    const Vec Tr = t[static_cast<std::size_t>(G.r_b - 1)];
    const Vec To = t[static_cast<std::size_t>(G.o_b - 1)];
    const Vec n = G.frames.back() * n_int;
    return G.c_b * unit_orth(To, Tr) - std::sqrt(1 - G.c_b * G.c_b) * n;
  }

  // Mid-isotopy a singular time can sit where the curve runs fast (the
  // elevated partner leaves its slow window), so the strand window shrinks
  // to keep the moved strand inside the 1/10 ball. Equals epsilon at both faces.
  double halfwidth(const SingularKnotSpec& s, int var) const {
    const double speed = s.curve.tangent(s.times[static_cast<std::size_t>(var - 1)]).norm();
    return std::min(eps_, 0.5 * (kBall - amplitude_) / speed);
  }

  std::vector<StrandMove> moves(const ChartPoint& p) const override {
    const Phase ph = phase(p.intervals.at(0));
    const SingularKnotSpec s = base(p);
    const std::vector<double> vparams(p.intervals.begin() + 1, p.intervals.end());
    std::vector<StrandMove> out;
    for (std::size_t j = 0; j < groups_.size(); ++j) {
      const Group& G = groups_[j];
      const Vec& n_int = p.spheres[j];
      const Vec u = direction(j, ph.tau, s.tangents, n_int);
      if (G.swap && ph.lambda > 0) {
        if (ph.lambda < 1) out.push_back({G.r_a, u, (1 - ph.lambda) * amplitude_, halfwidth(s, G.r_a)});
        out.push_back({G.r_b, switched_direction(j, n_int), ph.lambda * amplitude_, halfwidth(s, G.r_b)});
        continue;
      }
      const double w = (1 - ph.tau) * (G.t14_a ? 1 : 0) + ph.tau * (G.t14_b ? 1 : 0);
      push_variant_moves(out, variant_, vparams, w, G.r_a, G.o_a, u, amplitude_, halfwidth(s, G.r_a),
                         halfwidth(s, G.o_a));
    }
    return out;
  }

  // Glued M1 (face 0) or M2 (face 1) parameters for a face point.
  ChartPoint glue(const ChartPoint& p, double face, const ResolutionChart& target) const {
    const SingularKnotSpec& s = face == 0 ? iso_->start() : iso_->end();
    const SatelliteInfo& si = face == 0 ? sa_ : sb_;
    ChartPoint q;
    q.spheres.assign(3, Vec());
    q.intervals.assign(p.intervals.begin() + 1, p.intervals.end());
    for (std::size_t j = 0; j < groups_.size(); ++j) {
      const Group& G = groups_[j];
      int r;
      Vec V;
      if (face == 0) {
        r = G.r_a;
        V = direction(j, 0, s.tangents, p.spheres[j]);
      } else if (G.swap) {
        r = G.r_b;
        V = switched_direction(j, p.spheres[j]);
      } else {
        r = G.r_b;
        V = direction(j, 1, s.tangents, p.spheres[j]);
      }
      if (r == si.moved) V = si.push + delta_ * V;
      const int m = find_time(target.knot().times, s.times[static_cast<std::size_t>(r - 1)]);
      if (m < 3 || m > 5) throw std::logic_error("IsotopyChart::glue: strand does not match the target chart");
      q.spheres[static_cast<std::size_t>(m - 3)] = target.intrinsic_of(m - 3, V);
    }
    return q;
  }

  bool has_switch() const { return has_switch_; }

 private:
  struct Group {
    std::array<int, 2> vars{};
    int r_a = 0, o_a = 0, r_b = 0, o_b = 0;
    bool swap = false, sat_a = false, sat_b = false, t14_a = false, t14_b = false;
    double c_a = 0, c_b = 0;
    std::vector<Eigen::MatrixXd> frames;
  };

  Eigen::MatrixXd frame_at(const Group& G, double tau, const std::vector<Vec>& span) const {
    const int k = std::clamp(static_cast<int>(std::floor(tau * kFrameGrid)), 0, kFrameGrid);
    if (static_cast<double>(k) == tau * kFrameGrid) return G.frames[static_cast<std::size_t>(k)];
    return continue_frame(G.frames[static_cast<std::size_t>(k)], span);
  }

  std::shared_ptr<const Isotopy> iso_;
  std::uint64_t id_ = 0;
  SatelliteInfo sa_, sb_;
  std::vector<Group> groups_;
  bool has_switch_ = false;
  double delta_ = 0, eps_ = 0, amplitude_ = 0;
  static constexpr double kBall = 0.1;
};

Vec random_unit(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec v(n);
  do {
    for (int i = 0; i < n; ++i) v[i] = g(rng);
  } while (v.norm() < 1e-8);
  return v.normalized();
}

ParametricCurve apply_moves(const SingularKnotSpec& s, const std::vector<StrandMove>& mv, double scale) {
  ParametricCurve c = s.curve;
  for (const auto& m : mv)
    c = resolve(c, s.times[static_cast<std::size_t>(m.variable - 1)], ResolutionDatum{m.direction, scale * m.amplitude, m.halfwidth});
  return c;
}

}  // namespace

Eigen::MatrixXd complement_frame(const std::vector<Vec>& vs, int d) {
  const Eigen::MatrixXd P = projector(vs, d);
  const int m = static_cast<int>(std::lround(P.trace()));
  std::vector<int> idx(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) idx[static_cast<std::size_t>(i)] = i;
  // keep the standard vectors best preserved, in index order
  std::stable_sort(idx.begin(), idx.end(), [&](int i, int j) { return P(i, i) > P(j, j) + 1e-12; });
  idx.resize(static_cast<std::size_t>(m));
  std::sort(idx.begin(), idx.end());
  Eigen::MatrixXd A(d, m);
  for (int k = 0; k < m; ++k) A.col(k) = P.col(idx[static_cast<std::size_t>(k)]);
  return lowdin(A);
}

Eigen::MatrixXd continue_frame(const Eigen::MatrixXd& F, const std::vector<Vec>& vs) {
  return lowdin(projector(vs, static_cast<int>(F.rows())) * F);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::none: return "Mbeta";
    case Variant::prime: return "Mbeta'";
    case Variant::double_prime: return "Mbeta''";
    case Variant::W1: return "W1";
    case Variant::W2: return "W2";
    case Variant::W3: return "W3";
  }
  return "?";
}

std::shared_ptr<const Chart> make_double_point_chart(SingularKnotSpec k, std::vector<int> S, double amplitude,
                                                     const std::string& label) {
  return std::make_shared<DoublePointChart>(std::move(k), std::move(S), amplitude, label);
}

int Chart::dimension() const {
  int n = intervals_;
  for (int k : sphere_dims_) n += k;
  return n;
}

bool Chart::in_domain(const ChartPoint& p) const {
  if (p.spheres.size() != sphere_dims_.size() || static_cast<int>(p.intervals.size()) != intervals_) return false;
  for (std::size_t i = 0; i < p.spheres.size(); ++i)
    if (p.spheres[i].size() != sphere_dims_[i] + 1 || std::abs(p.spheres[i].norm() - 1) > 1e-9) return false;
  for (double x : p.intervals)
    if (x < 0 || x > 1) return false;
  return true;
}

ParametricCurve Chart::curve(const ChartPoint& p) const { return apply_moves(base(p), moves(p), 1.0); }

ChartPoint Chart::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> U(0, 1);
  for (int tries = 0; tries < 100000; ++tries) {
    ChartPoint p;
    for (int k : sphere_dims_) p.spheres.push_back(random_unit(k + 1, rng));
    for (int i = 0; i < intervals_; ++i) p.intervals.push_back(U(rng));
    if (in_domain(p)) return p;
  }
  throw std::runtime_error("Chart::sample: domain looks empty");
}

int GluedFamily::dimension() const { return charts.empty() ? 0 : charts.front()->dimension(); }

std::vector<std::shared_ptr<const Isotopy>> build_isotopies(int d, IsotopyMode mode) {
  const BaseKnots b = build_base_knots(d);
  const auto sats = derive_satellites(b);
  const std::array<std::pair<int, int>, 4> pairs{{{0, 6}, {1, 4}, {2, 5}, {3, 7}}};
  std::vector<std::shared_ptr<const Isotopy>> out(pairs.size());
  parallel_for(0, static_cast<int>(pairs.size()), [&](int i) {
    const auto& pr = pairs[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] =
        std::make_shared<Isotopy>(sats[static_cast<std::size_t>(pr.first)], sats[static_cast<std::size_t>(pr.second)], mode);
  });
  return out;
}

GluedFamily build_family(int d, const std::vector<std::shared_ptr<const Isotopy>>& isotopies, Variant variant) {
  if (isotopies.size() != 4) throw std::invalid_argument("build_family: need four isotopies");
  const BaseKnots b = build_base_knots(d);
  GluedFamily f;
  f.d = d;
  f.variant = variant;
  f.isotopies = isotopies;
  auto m1 = std::make_shared<ResolutionChart>(b.k1, "M1", variant);
  auto m2 = std::make_shared<ResolutionChart>(b.k2, "M2", variant);
  f.charts = {m1, m2};
  for (std::size_t i = 0; i < isotopies.size(); ++i) {
    if (isotopies[i]->start().curve.dim() != d) throw std::invalid_argument("build_family: isotopy dimension");
    auto c = std::make_shared<IsotopyChart>(isotopies[i], b.k1, b.k2, "M" + std::to_string(i + 3) + "xI", variant);
    const int idx = static_cast<int>(f.charts.size());
    f.charts.push_back(c);
    for (double face : {0.0, 1.0}) {
      Gluing g;
      g.chart = idx;
      g.face = face;
      g.target = face == 0 ? 0 : 1;
      // outward normal of the interval factor
      g.sign = face == 0 ? -1 : 1;
      const ResolutionChart* target = face == 0 ? m1.get() : m2.get();
      g.map = [c, face, target](const ChartPoint& p) { return c->glue(p, face, *target); };
      g.description = c->label() + (face == 0 ? " at 0 ~ " : " at 1 ~ ") + target->label() + " cap boundary around " +
                      (face == 0 ? isotopies[i]->start().label : isotopies[i]->end().label);
      f.gluings.push_back(std::move(g));
    }
  }
  const int expected = 3 * d - 8 + variant_intervals(variant);
  for (const auto& c : f.charts)
    if (c->dimension() != expected)
      throw std::logic_error("build_family: chart " + c->label() + " has dimension " + std::to_string(c->dimension()));
  return f;
}

GluedFamily build_family(int d, IsotopyMode mode) { return build_family(d, build_isotopies(d, mode), Variant::none); }

GluedFamily build_variant(int d, Variant which, IsotopyMode mode) {
  return build_family(d, build_isotopies(d, mode), which);
}

BoundaryReport boundary_match_check(const GluedFamily& f, int n_samples, double tol, std::uint64_t seed,
                                    double amplitude_perturbation, int curve_samples) {
  BoundaryReport rep;
  rep.ok = true;
  for (std::size_t gi = 0; gi < f.gluings.size(); ++gi) {
    const Gluing& g = f.gluings[gi];
    const Chart& c = *f.charts[static_cast<std::size_t>(g.chart)];
    const Chart& t = *f.charts[static_cast<std::size_t>(g.target)];
    std::mt19937_64 rng(seed + 7919 * gi);
    GluingReport r;
    r.description = g.description;
    for (int s = 0; s < n_samples; ++s) {
      ChartPoint p = c.sample(rng);
      p.intervals[0] = g.face;
      const ChartPoint q = g.map(p);
      if (!t.in_domain(q)) {
        r.sup = std::max(r.sup, 1.0);
        continue;
      }
      const ParametricCurve a = apply_moves(c.base(p), c.moves(p), amplitude_perturbation);
      const ParametricCurve b = t.curve(q);
      for (int k = 0; k < curve_samples; ++k) {
        const double tt = (k + 0.5) / curve_samples;
        r.sup = std::max(r.sup, (a.point(tt) - b.point(tt)).norm());
      }
    }
    r.ok = r.sup < tol;
    rep.ok = rep.ok && r.ok;
    rep.worst = std::max(rep.worst, r.sup);
    rep.gluings.push_back(r);
  }
  return rep;
}

Verdict check_chart_point(const Chart& c, const ChartPoint& p, const EmbeddingOptions& opt) {
  if (!c.in_domain(p)) return {false, 0, c.label() + ": point outside the domain"};
  Verdict v = check_embedding(c.curve(p), opt);
  if (!v.ok) v.detail = c.label() + ": " + v.detail;
  return v;
}

}  // namespace knotcycle::knots
