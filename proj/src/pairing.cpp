#include "knotcycle/pairing.hpp"

#include "knotcycle/parallel.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace knotcycle::pairing {

using knots::StrandMove;

void validate(const IntegralTerm& t) {
  const int n = t.n_external + t.n_internal;
  for (auto [i, j] : t.thetas)
    if (i < 1 || j < 1 || i > n || j > n || i == j)
      throw std::invalid_argument("IntegralTerm " + t.name + ": bad theta (" + std::to_string(i) + "," +
                                  std::to_string(j) + ")");
}

IntegralTerm omega1_term() { return {"omega1", Rational(1), 4, 1, {{1, 5}, {4, 5}, {3, 5}, {2, 5}}}; }
IntegralTerm omega2_term() { return {"omega2", Rational(2), 5, 0, {{1, 3}, {1, 4}, {2, 5}}}; }
IntegralTerm ccl_chord_term() { return {"ccl_chord", Rational(1, 4), 4, 0, {{1, 3}, {2, 4}}}; }
IntegralTerm ccl_tripod_term() { return {"ccl_tripod", Rational(-1, 3), 3, 1, {{1, 4}, {2, 4}, {3, 4}}}; }

double sphere_area(int k) {
  const double h = 0.5 * (k + 1);
  return 2 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

double AlphaSpec::log_normalizer(int d, double kappa) {
  if (kappa < 0) throw std::invalid_argument("AlphaSpec: negative concentration");
  if (kappa == 0) return -std::log(sphere_area(d - 1));
  if (kappa > 600) throw std::invalid_argument("AlphaSpec: concentration above 600 overflows");
  const double nu = 0.5 * d - 1;
  return nu * std::log(kappa) - 0.5 * d * std::log(2 * std::numbers::pi) -
         std::log(boost::math::cyl_bessel_i(nu, kappa));
}

double AlphaSpec::density(const Vec& v) const {
  const int d = static_cast<int>(v.size());
  const double x = axis.size() == 0 ? v[d - 1] : v.dot(axis);
  const double lc = log_normalizer(d, kappa);
  if (kappa == 0) return std::exp(lc);
  // C cosh(kappa x) without overflow
  const double ax = std::abs(x);
  return 0.5 * std::exp(lc + kappa * ax) * (1 + std::exp(-2 * kappa * ax));
}

std::string RegionLabel::str() const {
  std::string s = "C" + std::to_string(points);
  return index == 0 ? s + "c" : s + "(" + std::to_string(index) + ")";
}

RegionLabel classify_region(const std::vector<double>& s, const std::vector<double>& t, double eps) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] > 0 && s[i] < 1)) throw std::invalid_argument("classify_region: point outside (0,1)");
    if (i > 0 && !(s[i] > s[i - 1])) throw std::invalid_argument("classify_region: configuration not increasing");
  }
  RegionLabel r{static_cast<int>(s.size()), 0};
  for (std::size_t i = 0; i < t.size(); ++i) {
    bool hit = false;
    for (double x : s) hit = hit || (x > t[i] - eps && x < t[i] + eps);
    if (!hit) {
      r.index = static_cast<int>(i) + 1;
      return r;
    }
  }
  return r;
}

std::vector<Vec> gauss_map(const IntegralTerm& term, const std::vector<double>& s, const ParametricCurve& curve,
                           const std::vector<Vec>& internal) {
  validate(term);
  if (static_cast<int>(s.size()) != term.n_external || static_cast<int>(internal.size()) != term.n_internal)
    throw std::invalid_argument("gauss_map: wrong number of points");
  auto point = [&](int i) -> Vec {
    return i <= term.n_external ? curve.point(s[static_cast<std::size_t>(i - 1)])
                                : internal[static_cast<std::size_t>(i - term.n_external - 1)];
  };
  std::vector<Vec> out;
  for (auto [i, j] : term.thetas) {
    Vec v = point(j) - point(i);
    const double n = v.norm();
    if (n < 1e-14)
      throw std::domain_error("gauss_map: points " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
    out.push_back(v / n);
  }
  return out;
}

std::vector<Vec> gauss_map(const IntegralTerm& term, const std::vector<double>& s, const Chart& chart,
                           const ChartPoint& p, const std::vector<Vec>& internal) {
  return gauss_map(term, s, chart.curve(p), internal);
}

Eigen::MatrixXd tangent_basis(const Vec& v) {
  const int n = static_cast<int>(v.size());
  Eigen::MatrixXd A(n, 1);
  A.col(0) = v;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  if (Q.col(0).dot(v) < 0) Q.col(0) = -Q.col(0);
  Eigen::MatrixXd B = Q.rightCols(n - 1);
  Eigen::MatrixXd M(n, n);
  M.col(0) = v;
  M.rightCols(n - 1) = B;
  if (M.determinant() < 0) B.col(n - 2) = -B.col(n - 2);
  return B;
}

// ---------------------------------------------------------------------------

GaussSystem::GaussSystem(IntegralTerm term, const Chart& chart, std::vector<double> times, double eps)
    : term_(std::move(term)), chart_(chart), times_(std::move(times)), eps_(eps) {
  validate(term_);
  if (term_.n_internal != 0) throw std::invalid_argument("GaussSystem: terms with free points are not supported");
  if (static_cast<int>(times_.size()) != term_.n_external)
    throw std::invalid_argument("GaussSystem: one window per circle point expected");
}

int GaussSystem::unknowns() const { return term_.n_external + chart_.dimension(); }
int GaussSystem::equations() const { return term_.form_degree(chart_.ambient()); }

std::vector<Vec> GaussSystem::points(const State& x) const {
  const ParametricCurve c = chart_.curve(x.p);
  std::vector<Vec> P;
  for (double s : x.s) P.push_back(c.point(s));
  return P;
}

std::vector<Vec> GaussSystem::value(const State& x) const {
  const auto P = points(x);
  std::vector<Vec> out;
  for (auto [i, j] : term_.thetas) {
    Vec v = P[static_cast<std::size_t>(j - 1)] - P[static_cast<std::size_t>(i - 1)];
    const double n = v.norm();
    if (n < 1e-14) throw std::domain_error("GaussSystem: coincident points");
    out.push_back(v / n);
  }
  return out;
}

GaussSystem::State GaussSystem::step(const State& x, const Vec& dx) const {
  State y = x;
  int k = 0;
  for (auto& s : y.s) s += dx[k++];
  for (auto& v : y.p.spheres) {
    const Eigen::MatrixXd B = tangent_basis(v);
    v = (v + B * dx.segment(k, B.cols())).normalized();
    k += static_cast<int>(B.cols());
  }
  for (auto& u : y.p.intervals) u += dx[k++];
  return y;
}

bool GaussSystem::in_domain(const State& x) const {
  for (std::size_t i = 0; i < x.s.size(); ++i)
    if (!(x.s[i] > times_[i] - eps_ && x.s[i] < times_[i] + eps_)) return false;
  return chart_.in_domain(x.p);
}

Eigen::MatrixXd GaussSystem::jacobian(const State& x, const std::vector<Vec>& frames) const {
  const int n = term_.n_external;
  const int m = unknowns();
  const int d = chart_.ambient();
  const ParametricCurve c = chart_.curve(x.p);
  std::vector<Vec> P;
  for (double s : x.s) P.push_back(c.point(s));
  // dP[k] : d x m, derivative of every curve point along coordinate k
  std::vector<Eigen::MatrixXd> dP(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(d, m));
  for (int i = 0; i < n; ++i) dP[static_cast<std::size_t>(i)].col(i) = c.tangent(x.s[static_cast<std::size_t>(i)]);
  const double h = 1e-6;
  for (int k = n; k < m; ++k) {
    Vec e = Vec::Zero(m);
    double hp = h, hm = h;
    // intervals stay inside [0,1]
    const int first_interval = m - chart_.interval_count();
    if (k >= first_interval) {
      const double u = x.p.intervals[static_cast<std::size_t>(k - first_interval)];
      if (u + h > 1) hp = 0;
      if (u - h < 0) hm = 0;
    }
    e[k] = hp;
    const ParametricCurve cp = chart_.curve(step(x, e).p);
    e[k] = -hm;
    const ParametricCurve cm = chart_.curve(step(x, e).p);
    for (int i = 0; i < n; ++i) {
      const double s = x.s[static_cast<std::size_t>(i)];
      dP[static_cast<std::size_t>(i)].col(k) = (cp.point(s) - cm.point(s)) / (hp + hm);
    }
  }
  Eigen::MatrixXd J(equations(), m);
  int row = 0;
  for (std::size_t t = 0; t < term_.thetas.size(); ++t) {
    auto [i, j] = term_.thetas[t];
    const Vec D = P[static_cast<std::size_t>(j - 1)] - P[static_cast<std::size_t>(i - 1)];
    const double len = D.norm();
    const Vec phi = D / len;
    const Eigen::MatrixXd dD = dP[static_cast<std::size_t>(j - 1)] - dP[static_cast<std::size_t>(i - 1)];
    const Eigen::MatrixXd dphi = (dD - phi * (phi.transpose() * dD)) / len;
    const Eigen::MatrixXd B = tangent_basis(frames[t]);
    J.middleRows(row, d - 1) = B.transpose() * dphi;
    row += d - 1;
  }
  return J;
}

// ---------------------------------------------------------------------------
// Root counting

namespace {

using State = GaussSystem::State;

double mismatch(const std::vector<Vec>& phi, const std::vector<Vec>& y) {
  double r = 0;
  for (std::size_t j = 0; j < phi.size(); ++j) r = std::max(r, (phi[j] - y[j]).norm());
  return r;
}

State random_state(const GaussSystem& sys, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1, 1);
  State x;
  x.p = sys.chart().sample(rng);
  for (double t : sys.times()) x.s.push_back(t + 0.999 * sys.eps() * U(rng));
  return x;
}

std::optional<Root> newton(const GaussSystem& sys, State x, const std::vector<Vec>& y, const CountOptions& opt) {
  const int d = sys.chart().ambient();
  std::vector<Eigen::MatrixXd> B;
  for (const auto& v : y) B.push_back(tangent_basis(v));
  try {
    auto phi = sys.value(x);
    double r = mismatch(phi, y);
    for (int it = 0; it < opt.max_iterations && r > opt.tol; ++it) {
      Vec F(sys.equations());
      for (std::size_t j = 0; j < phi.size(); ++j)
        F.segment(static_cast<int>(j) * (d - 1), d - 1) = B[j].transpose() * phi[j];
      const Eigen::MatrixXd J = sys.jacobian(x, y);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
      if (lu.rank() < J.cols()) return std::nullopt;
      const Vec dx = lu.solve(-F);
      if (!dx.allFinite()) return std::nullopt;
      bool moved = false;
      for (double a = 1; a > 1e-3; a *= 0.5) {
        State z = sys.step(x, a * dx);
        if (!sys.in_domain(z)) continue;
        auto pz = sys.value(z);
        const double rz = mismatch(pz, y);
        if (rz < r) {
          x = std::move(z);
          phi = std::move(pz);
          r = rz;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    if (r > std::max(opt.tol, 1e-11)) return std::nullopt;
    Root root;
    root.s = x.s;
    root.p = x.p;
    root.residual = r;
    root.det = sys.jacobian(x, phi).determinant();
    root.sign = (root.det > 0 ? 1 : -1) * sys.chart().orientation();
    return root;
  } catch (const std::domain_error&) {
    return std::nullopt;
  }
}

double root_distance(const Root& a, const Root& b) {
  double r = 0;
  for (std::size_t i = 0; i < a.s.size(); ++i) r = std::max(r, std::abs(a.s[i] - b.s[i]));
  for (std::size_t i = 0; i < a.p.spheres.size(); ++i) r = std::max(r, (a.p.spheres[i] - b.p.spheres[i]).norm());
  for (std::size_t i = 0; i < a.p.intervals.size(); ++i) r = std::max(r, std::abs(a.p.intervals[i] - b.p.intervals[i]));
  return r;
}

std::vector<Vec> default_target(const IntegralTerm& term, int d) {
  Vec e = Vec::Zero(d);
  e[d - 1] = 1;
  return std::vector<Vec>(term.thetas.size(), e);
}

}  // namespace

namespace {

struct RootSearch {
  std::vector<Root> roots;
  int runs = 0, failures = 0;
};

// screen random starts, keep the best per block, then Newton on the best overall
RootSearch find_roots(const GaussSystem& sys, const std::vector<Vec>& target, const CountOptions& opt,
                      std::uint64_t salt) {
  constexpr int kBlock = 1024;
  const int blocks = (opt.candidates + kBlock - 1) / kBlock;
  std::vector<std::vector<std::pair<double, State>>> kept(static_cast<std::size_t>(blocks));
  parallel_for(0, blocks, [&](int b) {
    std::seed_seq seq{opt.seed, salt, static_cast<std::uint64_t>(b)};
    std::mt19937_64 rng(seq);
    auto& out = kept[static_cast<std::size_t>(b)];
    const int n = std::min(kBlock, opt.candidates - b * kBlock);
    for (int i = 0; i < n; ++i) {
      State x = random_state(sys, rng);
      double r;
      try {
        r = mismatch(sys.value(x), target);
      } catch (const std::domain_error&) {
        continue;
      }
      out.emplace_back(r, std::move(x));
      if (static_cast<int>(out.size()) > 2 * opt.newton_starts) {
        std::nth_element(out.begin(), out.begin() + opt.newton_starts, out.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        out.resize(static_cast<std::size_t>(opt.newton_starts));
      }
    }
  });
  std::vector<std::pair<double, State>> all;
  for (auto& k : kept)
    for (auto& e : k) all.push_back(std::move(e));
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  if (static_cast<int>(all.size()) > opt.newton_starts) all.resize(static_cast<std::size_t>(opt.newton_starts));
  std::vector<std::optional<Root>> found(all.size());
  parallel_for(0, static_cast<int>(all.size()), [&](int i) {
    found[static_cast<std::size_t>(i)] = newton(sys, all[static_cast<std::size_t>(i)].second, target, opt);
  });
  RootSearch out;
  for (auto& f : found) {
    ++out.runs;
    if (!f) {
      ++out.failures;
      continue;
    }
    bool dup = false;
    for (const auto& r : out.roots) dup = dup || root_distance(r, *f) < 1e-6;
    if (!dup) out.roots.push_back(*f);
  }
  return out;
}

}  // namespace

CountReport intersection_count(const std::vector<std::shared_ptr<const Chart>>& charts, const IntegralTerm& term,
                               const std::vector<double>& times, double eps, const std::vector<Vec>& target_in,
                               const CountOptions& opt) {
  CountReport rep;
  if (charts.empty()) return rep;
  const int d = charts.front()->ambient();
  const auto target = target_in.empty() ? default_target(term, d) : target_in;
  if (target.size() != term.thetas.size()) throw std::invalid_argument("intersection_count: target size");
  for (std::size_t ci = 0; ci < charts.size(); ++ci) {
    GaussSystem sys(term, *charts[ci], times, eps);
    if (!sys.square())
      throw std::invalid_argument("intersection_count: " + charts[ci]->label() + " gives a non-square system (" +
                                  std::to_string(sys.unknowns()) + " unknowns, " + std::to_string(sys.equations()) +
                                  " equations)");
    auto found = find_roots(sys, target, opt, static_cast<std::uint64_t>(ci));
    rep.newton_runs += found.runs;
    rep.newton_failures += found.failures;
    int chart_count = 0;
    for (auto& r : found.roots) {
      r.chart = static_cast<int>(ci);
      chart_count += r.sign;
      rep.roots.push_back(r);
    }
    rep.per_chart.push_back(chart_count);
    rep.signed_count += chart_count;
  }
  return rep;
}

CountReport intersection_count(const GluedFamily& f, const IntegralTerm& term, const std::vector<Vec>& target,
                               const CountOptions& opt) {
  const auto& c = knots::constants();
  CountReport rep = intersection_count(f.charts, term, std::vector<double>(c.times.begin(), c.times.end()), c.epsilon,
                                       target, opt);
  // ambient sphere parameters, for reporting
  for (auto& r : rep.roots) {
    const auto mv = f.charts[static_cast<std::size_t>(r.chart)]->moves(r.p);
    for (const auto& m : mv) r.ambient.push_back(m.direction);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Monte Carlo with a VEGAS grid

namespace {

class VegasGrid {
 public:
  VegasGrid(int dims, int bins) : D_(dims), N_(bins), edges_(static_cast<std::size_t>(dims)) {
    for (auto& e : edges_) {
      e.resize(static_cast<std::size_t>(bins) + 1);
      for (int i = 0; i <= bins; ++i) e[static_cast<std::size_t>(i)] = static_cast<double>(i) / bins;
    }
  }
  int dims() const { return D_; }
  int bins() const { return N_; }
  // r uniform in [0,1)^D -> u, returns the Jacobian
  double map(const std::vector<double>& r, std::vector<double>& u, std::vector<int>& bin) const {
    double jac = 1;
    for (int k = 0; k < D_; ++k) {
      const double y = r[static_cast<std::size_t>(k)] * N_;
      const int b = std::min(N_ - 1, static_cast<int>(y));
      const auto& e = edges_[static_cast<std::size_t>(k)];
      const double w = e[static_cast<std::size_t>(b) + 1] - e[static_cast<std::size_t>(b)];
      u[static_cast<std::size_t>(k)] = e[static_cast<std::size_t>(b)] + (y - b) * w;
      bin[static_cast<std::size_t>(k)] = b;
      jac *= N_ * w;
    }
    return jac;
  }
  // d: D x N accumulated (f jac)^2 per bin
  void refine(const std::vector<double>& d, double alpha = 1.5) {
    for (int k = 0; k < D_; ++k) {
      std::vector<double> a(static_cast<std::size_t>(N_));
      for (int i = 0; i < N_; ++i) a[static_cast<std::size_t>(i)] = d[static_cast<std::size_t>(k * N_ + i)];
      // smooth
      std::vector<double> sm(a.size());
      for (int i = 0; i < N_; ++i) {
        const double l = a[static_cast<std::size_t>(std::max(i - 1, 0))], r = a[static_cast<std::size_t>(std::min(i + 1, N_ - 1))];
        sm[static_cast<std::size_t>(i)] = (i == 0 || i == N_ - 1) ? (a[static_cast<std::size_t>(i)] * 3 + (i == 0 ? r : l)) / 4
                                                                  : (l + 6 * a[static_cast<std::size_t>(i)] + r) / 8;
      }
      double tot = 0;
      for (double x : sm) tot += x;
      if (!(tot > 0)) continue;
      std::vector<double> w(sm.size());
      double wt = 0;
      for (std::size_t i = 0; i < sm.size(); ++i) {
        const double x = sm[i] / tot;
        w[i] = x <= 0 ? 0 : (x >= 1 ? 1 : std::pow((x - 1) / std::log(x), alpha));
        if (!std::isfinite(w[i])) w[i] = 0;
        wt += w[i];
      }
      if (!(wt > 0)) continue;
      // redistribute edges so each new bin holds equal weight
      const auto& old = edges_[static_cast<std::size_t>(k)];
      std::vector<double> ne(old.size());
      ne.front() = 0;
      ne.back() = 1;
      const double per = wt / N_;
      double acc = 0;
      int j = 0;
      for (int i = 1; i < N_; ++i) {
        const double want = per * i;
        while (j < N_ && acc + w[static_cast<std::size_t>(j)] < want) acc += w[static_cast<std::size_t>(j++)];
        const int jj = std::min(j, N_ - 1);
        const double frac = w[static_cast<std::size_t>(jj)] > 0 ? (want - acc) / w[static_cast<std::size_t>(jj)] : 0;
        ne[static_cast<std::size_t>(i)] = old[static_cast<std::size_t>(jj)] + frac * (old[static_cast<std::size_t>(jj) + 1] - old[static_cast<std::size_t>(jj)]);
      }
      for (int i = 1; i < N_; ++i) ne[static_cast<std::size_t>(i)] = std::max(ne[static_cast<std::size_t>(i)], ne[static_cast<std::size_t>(i) - 1]);
      edges_[static_cast<std::size_t>(k)] = ne;
    }
  }

 private:
  int D_, N_;
  std::vector<std::vector<double>> edges_;
};

struct Integrand {
  const GaussSystem& sys;
  AlphaSpec alpha;
  RegionLabel region;
  double peak_cut = 0;
  int dims = 0;

  // u in (0,1)^dims -> state; w is the volume factor of the cube map
  bool cube_state(const std::vector<double>& u, State& x, double& w) const {
    const Chart& chart = sys.chart();
    const int n = sys.term().n_external;
    x = State{};
    w = 1;
    int k = 0;
    if (region.index == 0) {
      for (int i = 0; i < n; ++i) {
        const double t = sys.times()[static_cast<std::size_t>(i)];
        x.s.push_back(t - sys.eps() + 2 * sys.eps() * u[static_cast<std::size_t>(k++)]);
        w *= 2 * sys.eps();
      }
    } else {
      for (int i = 0; i < n; ++i) x.s.push_back(u[static_cast<std::size_t>(k++)]);
      std::sort(x.s.begin(), x.s.end());
      for (int i = 2; i <= n; ++i) w /= i;
      for (int i = 0; i < n; ++i)
        if (!(x.s[static_cast<std::size_t>(i)] > 0 && x.s[static_cast<std::size_t>(i)] < 1) ||
            (i > 0 && !(x.s[static_cast<std::size_t>(i)] > x.s[static_cast<std::size_t>(i) - 1])))
          return false;
      if (!(classify_region(x.s, sys.times(), sys.eps()) == region)) return false;
    }
    for (int dim : chart.sphere_dims()) {
      Vec z(dim + 1);
      for (int i = 0; i <= dim; ++i) {
        const double r = std::clamp(u[static_cast<std::size_t>(k++)], 1e-16, 1 - 1e-16);
        z[i] = -std::numbers::sqrt2 * boost::math::erfc_inv(2 * r);
      }
      const double nz = z.norm();
      if (nz < 1e-300) return false;
      x.p.spheres.push_back(z / nz);
      w *= sphere_area(dim);
    }
    for (int i = 0; i < chart.interval_count(); ++i) x.p.intervals.push_back(u[static_cast<std::size_t>(k++)]);
    return true;
  }

  // pulled-back form against ds dA du at x; 0 off the chart domain
  double at(const State& x) const {
    if (!sys.chart().in_domain(x.p)) return 0;
    try {
      const auto phi = sys.value(x);
      double rho = 1;
      for (const auto& v : phi) rho *= alpha.density(v);
      if (rho < peak_cut) return 0;
      const double det = sys.jacobian(x, phi).determinant();
      return sys.chart().orientation() * det * rho;
    } catch (const std::domain_error&) {
      return 0;
    }
  }

  double operator()(const std::vector<double>& u) const {
    State x;
    double w;
    return cube_state(u, x, w) ? at(x) * w : 0;
  }
};

// Multivariate t proposal around a preimage of a sign pattern (+-e_d, ...),
// in the local coordinates of GaussSystem (gnomonic on the spheres).
struct ModeProposal {
  State centre;
  Eigen::MatrixXd L;     // xi = L z / sqrt(chi2/nu)
  Eigen::MatrixXd Linv;
  double log_norm = 0;   // log of the t density constant over |det L|
};

double log_t_const(int p, double nu) {
  return std::lgamma(0.5 * (nu + p)) - std::lgamma(0.5 * nu) - 0.5 * p * std::log(nu * std::numbers::pi);
}

// local coordinates of x around c, or nothing when x is on the far hemisphere
std::optional<Vec> local_coords(const State& c, const State& x, int dim, double& log_jac) {
  Vec xi(dim);
  int k = 0;
  log_jac = 0;
  for (std::size_t i = 0; i < c.s.size(); ++i) xi[k++] = x.s[i] - c.s[i];
  for (std::size_t i = 0; i < c.p.spheres.size(); ++i) {
    const Vec& v = c.p.spheres[i];
    const double dot = x.p.spheres[i].dot(v);
    if (dot <= 1e-12) return std::nullopt;
    const Eigen::MatrixXd B = tangent_basis(v);
    xi.segment(k, B.cols()) = B.transpose() * x.p.spheres[i] / dot;
    k += static_cast<int>(B.cols());
    log_jac -= static_cast<double>(v.size()) * std::log(dot);
  }
  for (std::size_t i = 0; i < c.p.intervals.size(); ++i) xi[k++] = x.p.intervals[i] - c.p.intervals[i];
  return xi;
}

}  // namespace

namespace {

MonteCarloResult mode_mixture(const GaussSystem& sys, const Integrand& f, const MonteCarloOptions& opt) {
  MonteCarloResult res;
  const Chart& chart = sys.chart();
  const int d = chart.ambient();
  const int p = sys.unknowns();
  const int k = static_cast<int>(sys.term().thetas.size());
  const double nu = opt.mode_dof;
  const double sigma = opt.mode_scale / std::sqrt(std::max(f.alpha.kappa, 1.0));
  // uniform density on the box x spheres x intervals
  double log_vol = sys.term().n_external * std::log(2 * sys.eps());
  for (int dim : chart.sphere_dims()) log_vol += std::log(sphere_area(dim));

  std::vector<ModeProposal> modes;
  for (int pattern = 0; pattern < (1 << k); ++pattern) {
    std::vector<Vec> target;
    for (int j = 0; j < k; ++j) {
      Vec e = Vec::Zero(d);
      e[d - 1] = (pattern >> j) & 1 ? -1 : 1;
      target.push_back(e);
    }
    const auto found = find_roots(sys, target, opt.mode_search, 1000 + static_cast<std::uint64_t>(pattern));
    for (const auto& r : found.roots) {
      ModeProposal m;
      m.centre = State{r.s, r.p};
      const Eigen::MatrixXd J = sys.jacobian(m.centre, target);
      m.L = sigma * J.inverse();
      m.Linv = J / sigma;
      m.log_norm = log_t_const(p, nu) - std::log(std::abs(m.L.determinant()));
      modes.push_back(std::move(m));
    }
  }
  res.modes = static_cast<int>(modes.size());
  const double defensive = modes.empty() ? 1.0 : opt.defensive;
  const double log_mix_t = modes.empty() ? 0 : std::log((1 - defensive) / static_cast<double>(modes.size()));

  auto q_mix = [&](const State& x) {
    double q = defensive * std::exp(-log_vol);
    for (const auto& m : modes) {
      double lj;
      const auto xi = local_coords(m.centre, x, p, lj);
      if (!xi) continue;
      const double r2 = (m.Linv * *xi).squaredNorm();
      q += std::exp(log_mix_t + m.log_norm - 0.5 * (nu + p) * std::log1p(r2 / nu) + lj);
    }
    return q;
  };

  const long long blocks = (opt.samples + opt.block - 1) / opt.block;
  struct Sums {
    double sum = 0, sum2 = 0;
    long long nonzero = 0;
  };
  std::vector<Sums> out(static_cast<std::size_t>(blocks));
  parallel_for(0, static_cast<int>(blocks), [&](int b) {
    std::seed_seq seq{opt.seed, std::uint64_t{77}, static_cast<std::uint64_t>(b)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> U(0, 1);
    std::normal_distribution<double> N(0, 1);
    std::chi_squared_distribution<double> chi(nu);
    Sums& s = out[static_cast<std::size_t>(b)];
    std::vector<double> u(static_cast<std::size_t>(f.dims));
    const long long n = std::min<long long>(opt.block, opt.samples - static_cast<long long>(b) * opt.block);
    for (long long i = 0; i < n; ++i) {
      State x;
      if (U(rng) < defensive) {
        double w;
        for (auto& r : u) r = U(rng);
        if (!f.cube_state(u, x, w)) continue;
      } else {
        const auto& m = modes[std::min(modes.size() - 1, static_cast<std::size_t>(U(rng) * static_cast<double>(modes.size())))];
        Vec z(p);
        for (int j = 0; j < p; ++j) z[j] = N(rng);
        const Vec xi = m.L * z / std::sqrt(chi(rng) / nu);
        x = sys.step(m.centre, xi);
        if (!sys.in_domain(x)) continue;
      }
      const double fx = f.at(x);
      if (fx == 0) continue;
      const double v = fx / q_mix(x);
      ++s.nonzero;
      s.sum += v;
      s.sum2 += v * v;
    }
  });
  double sum = 0, sum2 = 0;
  for (const auto& b : out) {
    sum += b.sum;
    sum2 += b.sum2;
    res.nonzero += b.nonzero;
  }
  const double Nn = static_cast<double>(opt.samples);
  res.samples = opt.samples;
  res.estimate = sum / Nn;
  res.standard_error = opt.samples > 1 ? std::sqrt(std::max(0.0, sum2 / Nn - res.estimate * res.estimate) / (Nn - 1)) : 0;
  return res;
}

}  // namespace

MonteCarloResult monte_carlo(const Chart& chart, const IntegralTerm& term, const AlphaSpec& alpha,
                             const RegionLabel& region, const std::vector<double>& times, double eps,
                             const MonteCarloOptions& opt) {
  MonteCarloResult res;
  res.region = region.str();
  if (opt.samples < 1) throw std::invalid_argument("monte_carlo: need at least one sample");
  GaussSystem sys(term, chart, times, eps);
  if (!sys.square()) {
    res.degenerate_degree = true;
    return res;
  }
  const int d = chart.ambient();
  Vec e = Vec::Zero(d);
  e[d - 1] = 1;
  const double peak = alpha.axis.size() ? alpha.density(alpha.axis) : alpha.density(e);
  Integrand f{sys, alpha, region, opt.cutoff * std::pow(peak, static_cast<double>(term.thetas.size())), 0};
  int dims = term.n_external + chart.interval_count();
  for (int k : chart.sphere_dims()) dims += k + 1;
  f.dims = dims;
  if (opt.sampler == Sampler::modes && region.index == 0) {
    auto r = mode_mixture(sys, f, opt);
    r.region = res.region;
    return r;
  }
  VegasGrid grid(dims, opt.bins);

  struct BlockSums {
    double sum = 0, sum2 = 0;
    long long nonzero = 0;
    std::vector<double> acc;
  };
  auto run = [&](long long total, int stage, bool adapt) {
    const long long blocks = (total + opt.block - 1) / opt.block;
    std::vector<BlockSums> out(static_cast<std::size_t>(blocks));
    parallel_for(0, static_cast<int>(blocks), [&](int b) {
      std::seed_seq seq{opt.seed, static_cast<std::uint64_t>(stage), static_cast<std::uint64_t>(b)};
      std::mt19937_64 rng(seq);
      std::uniform_real_distribution<double> U(0, 1);
      BlockSums& s = out[static_cast<std::size_t>(b)];
      if (adapt) s.acc.assign(static_cast<std::size_t>(dims * opt.bins), 0.0);
      std::vector<double> r(static_cast<std::size_t>(dims)), u(static_cast<std::size_t>(dims));
      std::vector<int> bin(static_cast<std::size_t>(dims));
      const long long n = std::min<long long>(opt.block, total - static_cast<long long>(b) * opt.block);
      for (long long i = 0; i < n; ++i) {
        for (auto& x : r) x = U(rng);
        const double jac = grid.map(r, u, bin);
        const double v = f(u) * jac;
        if (v == 0) continue;
        ++s.nonzero;
        s.sum += v;
        s.sum2 += v * v;
        if (adapt)
          for (int k = 0; k < dims; ++k) s.acc[static_cast<std::size_t>(k * opt.bins + bin[static_cast<std::size_t>(k)])] += v * v;
      }
    });
    return out;
  };

  const long long n_adapt = std::min<long long>(static_cast<long long>(opt.adapt_fraction * static_cast<double>(opt.samples)),
                                                opt.samples - 1);
  const int iters = n_adapt > 0 ? opt.adapt_iterations : 0;
  for (int it = 0; it < iters; ++it) {
    auto blocks = run(std::max<long long>(1, n_adapt / iters), 1 + it, true);
    std::vector<double> acc(static_cast<std::size_t>(dims * opt.bins), 0.0);
    for (const auto& b : blocks)
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += b.acc[i];
    grid.refine(acc);
  }
  const long long n_final = opt.samples - (iters > 0 ? n_adapt : 0);
  auto blocks = run(n_final, 0, false);
  double sum = 0, sum2 = 0;
  for (const auto& b : blocks) {
    sum += b.sum;
    sum2 += b.sum2;
    res.nonzero += b.nonzero;
  }
  const double N = static_cast<double>(n_final);
  res.samples = opt.samples;
  res.estimate = sum / N;
  res.standard_error = n_final > 1 ? std::sqrt(std::max(0.0, sum2 / N - res.estimate * res.estimate) / (N - 1)) : 0;
  return res;
}

// ---------------------------------------------------------------------------

std::vector<VanishingRow> vanishing_report(int d) {
  std::vector<VanishingRow> rows;
  auto add = [&](std::string term, std::string region, std::string chart, std::string space, int dim, int req) {
    std::string verdict = d < 4 ? "not applicable" : (dim < req ? "vanishes" : "does not vanish");
    rows.push_back({std::move(term), std::move(region), std::move(chart), std::move(space), dim, req, verdict});
  };
  const int r2 = 3 * d - 3;  // three sphere factors
  const int r1 = 4 * d - 4;  // four sphere factors
  // omega2 on five circle points
  add("omega2", "C5(3)", "M1", "C5(3) x S^{d-3} x S^{d-3}", 5 + 2 * (d - 3), r2);
  add("omega2", "C5(4)", "M1", "C5(4) x (S^{d-2} minus caps) x S^{d-3}", 5 + (d - 2) + (d - 3), r2);
  add("omega2", "C5(5)", "M1", "C5(5) x (S^{d-2} minus caps) x S^{d-3}", 5 + (d - 2) + (d - 3), r2);
  add("omega2", "C5(3)", "M2", "C5(3) x S^{d-3} x S^{d-3}", 5 + 2 * (d - 3), r2);
  add("omega2", "C5(4)", "M2", "C5(4) x (S^{d-2} minus caps) x S^{d-3}", 5 + (d - 2) + (d - 3), r2);
  add("omega2", "C5(5)", "M2", "C5(5) x (S^{d-2} minus caps) x S^{d-3}", 5 + (d - 2) + (d - 3), r2);
  for (int m = 3; m <= 5; ++m)
    add("omega2", "C5(" + std::to_string(m) + ")", "M3..M6 x I", "C5(m) x S^{d-3} x S^{d-3} x I", 5 + 2 * (d - 3) + 1, r2);
  for (int m : {1, 2}) {
    const std::string R = "C5(" + std::to_string(m) + ")";
    add("omega2", R, "M1..M6 (W1 boundary)", "boundary of " + R + " x M_i", 4 + 3 * d - 8, r2);
    add("omega2", R, "M1, M2 (moved-first family)", R + " x (S^{d-2} minus caps) x S^{d-3}", 5 + (d - 2) + (d - 3), r2);
    add("omega2", R, "M3..M6 x I (moved-first family)", R + " x S^{d-3} x S^{d-3} x I", 5 + 2 * (d - 3) + 1, r2);
    add("omega2", R, "W2/W3 endpoint", "W2 with zero strand length", 2 * d - 3, r2);
  }
  // omega1: four circle points and a free point in R^d
  for (int m = 1; m <= 5; ++m) {
    const std::string R = "C4(" + std::to_string(m) + ")";
    if (m >= 3) {
      add("omega1", R, "M1, M2", R + " x R^d x (two of the three spheres)", 4 + d + (m == 3 ? 2 * (d - 3) : (d - 2) + (d - 3)), r1);
      add("omega1", R, "M3..M6 x I", R + " x R^d x S^{d-3} x S^{d-3} x I", 4 + d + 2 * (d - 3) + 1, r1);
    } else {
      add("omega1", R, "M1..M6 (W1 boundary)", "boundary of " + R + " x R^d x M_i", 3 + d + 3 * d - 8, r1);
      add("omega1", R, "M1, M2 (moved-first family)", R + " x R^d x (S^{d-2} minus caps) x S^{d-3}", 4 + d + (d - 2) + (d - 3), r1);
      add("omega1", R, "M3..M6 x I (moved-first family)", R + " x R^d x S^{d-3} x S^{d-3} x I", 4 + d + 2 * (d - 3) + 1, r1);
      add("omega1", R, "W2/W3 endpoint", "W2 with zero strand length", 2 * d - 3, r1);
    }
  }
  return rows;
}

OmegaReport evaluate_omega(const GluedFamily& f, Method method, const CountOptions& copt, const MonteCarloOptions& mopt,
                           double kappa) {
  OmegaReport rep;
  const auto rows = vanishing_report(f.d);
  bool omega1_zero = true, other_regions_zero = true;
  for (const auto& r : rows) {
    if (r.verdict == "vanishes") continue;
    (r.term == "omega1" ? omega1_zero : other_regions_zero) = false;
  }
  rep.contributions.push_back({"omega1", "all", "C4(1..5)", "dimension", 0, 0,
                               omega1_zero ? "every region factors through a smaller space" : "NOT certified"});
  if (!omega1_zero || !other_regions_zero) {
    rep.ok = false;
    rep.diagnostic = "vanishing table does not certify every region";
  }
  const IntegralTerm t2 = omega2_term();
  const double coeff = t2.coefficient.get_d();
  const auto& c = knots::constants();
  const std::vector<double> times(c.times.begin(), c.times.end());
  if (method == Method::count) {
    rep.count = intersection_count(f, t2, {}, copt);
    for (std::size_t i = 0; i < f.charts.size(); ++i)
      rep.contributions.push_back({"omega2", f.charts[i]->label(), "C5c", "count",
                                   coeff * rep.count.per_chart[i], 0, std::to_string(rep.count.per_chart[i]) + " signed roots"});
    for (const auto& r : rep.count.roots)
      if (r.chart != 0) {
        rep.ok = false;
        rep.diagnostic += (rep.diagnostic.empty() ? "" : "; ") + std::string("root outside M1 on ") +
                          f.charts[static_cast<std::size_t>(r.chart)]->label();
      }
    rep.value = coeff * rep.count.signed_count;
  } else {
    AlphaSpec alpha{kappa, {}};
    double var = 0;
    for (std::size_t i = 0; i < f.charts.size(); ++i) {
      MonteCarloOptions o = mopt;
      o.seed = mopt.seed + 1000 * i;
      const auto r = monte_carlo(*f.charts[i], t2, alpha, RegionLabel{5, 0}, times, c.epsilon, o);
      rep.contributions.push_back({"omega2", f.charts[i]->label(), "C5c", "monte_carlo", coeff * r.estimate,
                                   coeff * r.standard_error, std::to_string(r.nonzero) + " nonzero samples"});
      rep.value += coeff * r.estimate;
      var += coeff * coeff * r.standard_error * r.standard_error;
    }
    rep.error = std::sqrt(var);
  }
  return rep;
}

CclReport ccl_check(int d, const CountOptions& opt) {
  CclReport rep;
  const auto k = knots::build_two_double_point_knot(d);
  const auto chart = knots::make_double_point_chart(k, {3, 4}, knots::constants().a_double, "K_ccl x S x S");
  const auto chord = ccl_chord_term();
  auto cnt = intersection_count({chart}, chord, k.times, k.epsilon, {}, opt);
  rep.chord_count = cnt.signed_count;
  rep.chord_roots = cnt.roots;
  // tripod: theta14 theta24 theta34 at (e_d, e_d, e_d) needs three circle
  // points with the same projection off e_d; measure how close that gets
  std::vector<double> best;
  const int starts = std::max(1, opt.candidates);
  constexpr int kBlock = 1024;
  const int blocks = (starts + kBlock - 1) / kBlock;
  std::vector<std::pair<double, std::pair<std::vector<double>, ChartPoint>>> block_best(static_cast<std::size_t>(blocks));
  // sines of the pairwise chords against e_d; scale-free, so colliding
  // points on one strand do not fake a zero
  auto objective = [&](const std::vector<double>& s, const ChartPoint& p) {
    const auto c = chart->curve(p);
    const Vec P[3] = {c.point(s[0]), c.point(s[1]), c.point(s[2])};
    double acc = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        Vec u = P[j] - P[i];
        const double n = u.norm();
        if (n < 1e-12) return 1e300;
        u /= n;
        acc += 1 - u[d - 1] * u[d - 1];
      }
    return std::sqrt(acc);
  };
  parallel_for(0, blocks, [&](int bi) {
    std::seed_seq seq{opt.seed, std::uint64_t{99}, static_cast<std::uint64_t>(bi)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> U(0, 1);
    auto& bb = block_best[static_cast<std::size_t>(bi)];
    bb.first = 1e300;
    const int n = std::min(kBlock, starts - bi * kBlock);
    for (int i = 0; i < n; ++i) {
      std::vector<double> s{U(rng), U(rng), U(rng)};
      std::sort(s.begin(), s.end());
      ChartPoint p = chart->sample(rng);
      const double v = objective(s, p);
      if (v < bb.first) bb = {v, {s, p}};
    }
  });
  // polish the best start by coordinate descent on s (chart params stay)
  auto best_it = std::min_element(block_best.begin(), block_best.end(),
                                  [](const auto& a, const auto& b) { return a.first < b.first; });
  double v = best_it->first;
  auto [s, p] = best_it->second;
  for (double h = 1e-2; h > 1e-7; h *= 0.5)
    for (bool improved = true; improved;) {
      improved = false;
      for (int i = 0; i < 3; ++i)
        for (double sg : {-1.0, 1.0}) {
          auto t = s;
          t[static_cast<std::size_t>(i)] = knots::wrap01(t[static_cast<std::size_t>(i)] + sg * h);
          const double w = objective(t, p);
          if (w < v) {
            v = w;
            s = t;
            improved = true;
          }
        }
    }
  rep.tripod_min_residual = v;
  rep.tripod_vanishes = v > 1e-3;
  rep.value = ccl_chord_term().coefficient * Rational(rep.chord_count);
  std::ostringstream os;
  os << "chord roots " << cnt.roots.size() << ", signed " << rep.chord_count << "; tripod min chord sine " << v;
  rep.detail = os.str();
  return rep;
}

}  // namespace knotcycle::pairing
