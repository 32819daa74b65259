#include "knotcycle/knotgeom.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace knotcycle::knots {

using brackets::BracketMonomial;
using brackets::BracketTree;

const Constants& constants() {
  static const Constants c{};
  return c;
}

int d_of_r(int r, int d) {
  if (r < 2) throw std::invalid_argument("d_of_r: rank must be at least 2");
  if (d < 4) throw std::invalid_argument("d_of_r: ambient dimension must be at least 4");
  return r > 2 ? d - 2 : d - 3;
}

ParametricCurve resolve(const ParametricCurve& c, double time, const ResolutionDatum& datum) {
  if (datum.v.size() != c.dim()) throw std::invalid_argument("resolve: direction has the wrong dimension");
  if (std::abs(datum.v.norm() - 1.0) > 1e-9) throw std::invalid_argument("resolve: direction is not a unit vector");
  if (datum.eps <= 0) throw std::invalid_argument("resolve: halfwidth must be positive");
  return c.with_bump(Bump{time, datum.eps, datum.v, datum.a});
}

ParametricCurve resolve(const SingularKnotSpec& k, int i, const ResolutionDatum& datum) {
  if (i < 1 || i > static_cast<int>(k.times.size())) throw std::out_of_range("resolve: variable out of range");
  if (datum.eps > k.epsilon * (1 + 1e-12)) throw std::invalid_argument("resolve: halfwidth exceeds epsilon");
  return resolve(k.curve, k.times[static_cast<std::size_t>(i - 1)], datum);
}

ParametricCurve resolve_composite(const SingularKnotSpec& k, const std::vector<int>& S,
                                  const std::vector<ResolutionDatum>& data) {
  if (S.size() != data.size()) throw std::invalid_argument("resolve_composite: |S| != |data|");
  BracketMonomial work = k.expression;
  // current index of each original variable, 0 once removed
  std::vector<int> index(k.times.size() + 1);
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = static_cast<int>(i);
  ParametricCurve out = k.curve;
  for (std::size_t m = 0; m < S.size(); ++m) {
    int orig = S[m];
    if (orig < 1 || orig > static_cast<int>(k.times.size()) || index[static_cast<std::size_t>(orig)] == 0)
      throw std::invalid_argument("resolve_composite: bad or repeated variable");
    int cur = index[static_cast<std::size_t>(orig)];
    if (brackets::rank_of_var(work, cur) == 0)
      throw std::invalid_argument("resolve_composite: variable x" + std::to_string(orig) + " has rank 0");
    if (data[m].eps > k.epsilon * (1 + 1e-12)) throw std::invalid_argument("resolve: halfwidth exceeds epsilon");
    out = resolve(out, k.times[static_cast<std::size_t>(orig - 1)], data[m]);
    work = brackets::remove_var(work, cur);
    index[static_cast<std::size_t>(orig)] = 0;
    for (auto& x : index)
      if (x > cur) --x;
  }
  return out;
}

std::vector<std::vector<int>> bracket_groups(const BracketMonomial& m) {
  std::vector<std::vector<int>> out;
  for (const auto& f : m.factors()) {
    if (f.is_leaf()) continue;
    auto l = f.leaves();
    std::sort(l.begin(), l.end());
    out.push_back(l);
  }
  return out;
}

BracketMonomial monomial_of_pairs(const std::vector<std::vector<int>>& groups) {
  std::vector<BracketTree> fs;
  for (auto g : groups) {
    std::sort(g.begin(), g.end());
    BracketTree t = BracketTree::leaf(g.at(0));
    for (std::size_t i = 1; i < g.size(); ++i) t = BracketTree::bracket(t, BracketTree::leaf(g[i]));
    fs.push_back(t);
  }
  std::sort(fs.begin(), fs.end(), [](const BracketTree& a, const BracketTree& b) { return a.min_leaf() < b.min_leaf(); });
  return BracketMonomial(std::move(fs));
}

Verdict check_respects(const ParametricCurve& c, const std::vector<double>& times, const BracketMonomial& expression,
                       const RespectOptions& opt) {
  Verdict v;
  if (static_cast<int>(times.size()) != expression.arity()) {
    v.detail = "time count does not match the expression arity";
    return v;
  }
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i - 1] < times[i])) {
      v.detail = "times not increasing";
      return v;
    }
  const int d = c.dim();
  std::vector<ExcludedBox> boxes;
  for (const auto& g : bracket_groups(expression)) {
    Vec p0 = c.point(times[static_cast<std::size_t>(g[0] - 1)]);
    Eigen::MatrixXd tang(d, static_cast<Eigen::Index>(g.size()));
    for (std::size_t k = 0; k < g.size(); ++k) {
      double t = times[static_cast<std::size_t>(g[k] - 1)];
      double dist = (c.point(t) - p0).norm();
      if (dist > opt.tol) {
        std::ostringstream os;
        os << "x" << g[0] << " and x" << g[k] << " are " << dist << " apart";
        v.worst = dist;
        v.detail = os.str();
        return v;
      }
      tang.col(static_cast<Eigen::Index>(k)) = c.tangent(t).normalized();
      for (std::size_t m = 0; m < k; ++m)
        boxes.push_back({times[static_cast<std::size_t>(g[m] - 1)], t, opt.box});
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(tang);
    auto sv = svd.singularValues();
    int r = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) r += sv[k] > 1e-6 ? 1 : 0;
    if (r < std::min<int>(static_cast<int>(g.size()), d)) {
      v.detail = "tangents at a singular point are not generic";
      v.worst = sv[sv.size() - 1];
      return v;
    }
  }
  if (opt.strict) {
    auto cp = closest_nonlocal_pair(c, opt.samples, 0.2, opt.separation, boxes);
    if (cp) {
      std::ostringstream os;
      os << "unlisted near-coincidence at t=" << cp->s << ", " << cp->t << " (distance " << cp->distance << ")";
      v.worst = cp->distance;
      v.detail = os.str();
      return v;
    }
  }
  v.ok = true;
  return v;
}

Verdict check_embedding(const ParametricCurve& c, const EmbeddingOptions& opt) {
  Verdict v;
  double sp = min_speed(c, opt.samples);
  if (sp <= opt.tol) {
    v.worst = sp;
    v.detail = "not an immersion";
    return v;
  }
  auto cp = closest_nonlocal_pair(c, opt.samples, opt.eta, opt.tol);
  if (cp) {
    std::ostringstream os;
    os << "self-intersection near t=" << cp->s << ", " << cp->t << " (distance " << cp->distance << ")";
    v.worst = cp->distance;
    v.detail = os.str();
    return v;
  }
  v.ok = true;
  return v;
}

namespace {

std::vector<Vec> unit_tangents(const ParametricCurve& c, const std::vector<double>& times) {
  std::vector<Vec> out;
  for (double t : times) out.push_back(c.tangent(t).normalized());
  return out;
}

// Polygons sharing the basepoint edge along e1 through (-1,0,0) and the tail
// from the fourth strand onwards.
const std::vector<Vec3>& tail() {
  static const std::vector<Vec3> v = {{0, 0, -0.7},   {0, 0, 0.7},    {0.6, 0.9, 1.0},   {2.5, 0.6, -1.0},
                                      {2, 0, -0.7},   {2, 0, 0.7},    {1.5, -0.3, 1.4},  {-1.0, -0.8, 1.0},
                                      {-1.9, -0.4, 0.3}};
  return v;
}

}  // namespace

BaseKnots build_base_knots(int d) {
  if (d < 4) throw std::invalid_argument("build_base_knots: d must be at least 4");
  const Constants& k = constants();
  const auto& t = k.times;
  const Vec3 O(0, 0, 0), A(2, 0, 0);
  const Vec3 base(-1, 0, 0);

  std::vector<Vec3> v1 = {{-1.4, 0, 0},      {0.7, 0, 0}, {1.3, -0.7, 0.6}, {2, -0.7, 0}, {2, 0.7, 0},
                          {1.0, 1.2, -1.1}, {-0.6, -1.2, -1.1}, {0, -0.7, 0},   {0, 0.7, 0},  {-0.5, 0.7, -0.9}};
  v1.insert(v1.end(), tail().begin(), tail().end());
  std::vector<PolyCurve::Window> w1 = {{t[0], 0, O, k.window},
                                       {t[1], 3, A, k.window},
                                       {t[2], 7, O, k.window},
                                       {t[3], 10, O, k.window},
                                       {t[4], 14, A, k.window}};

  std::vector<Vec3> v2 = {{-1.4, 0, 0},     {0.7, 0, 0},      {1.3, -0.7, 0.6}, {2, -0.7, 0},
                          {2, 0.7, 0},      {2.3, 1.2, 0.8},  {1.0, 0.5, 0.6},  {1.3, 0, 0},
                          {2.7, 0, 0},      {3.0, -0.6, -0.9}, {1.0, -1.3, -1.4}, {-0.5, 0.7, -0.9}};
  v2.insert(v2.end(), tail().begin(), tail().end());
  std::vector<PolyCurve::Window> w2 = {{t[0], 0, O, k.window},
                                       {t[1], 3, A, k.window},
                                       {t[2], 7, A, k.window},
                                       {t[3], 12, O, k.window},
                                       {t[4], 16, A, k.window}};

  BaseKnots out;
  std::vector<double> times(t.begin(), t.end());
  auto make = [&](const std::string& label, std::vector<Vec3> v, std::vector<PolyCurve::Window> w,
                  const BracketMonomial& expr) {
    SingularKnotSpec s;
    s.label = label;
    s.curve = ParametricCurve(std::make_shared<PolyCurve>(d, std::move(v), base, std::move(w), k.fillet, k.speed));
    s.times = times;
    s.expression = expr;
    s.tangents = unit_tangents(s.curve, times);
    s.moved = {3, 4, 5};
    s.delta = k.delta;
    s.epsilon = k.epsilon;
    return s;
  };
  out.k1 = make("K1", v1, w1, brackets::beta1());
  out.k2 = make("K2", v2, w2, brackets::beta2());
  return out;
}

SingularKnotSpec satellite(const SingularKnotSpec& k, int j, int sign, const std::string& label) {
  const Constants& c = constants();
  auto groups = bracket_groups(k.expression);
  auto triple = std::find_if(groups.begin(), groups.end(), [](const auto& g) {
    return g.size() == 3 && std::find(g.begin(), g.end(), 3) != g.end();
  });
  if (triple == groups.end()) throw std::invalid_argument("satellite: x3 is not on a triple point");
  if (j == 3 || std::find(triple->begin(), triple->end(), j) == triple->end())
    throw std::invalid_argument("satellite: x" + std::to_string(j) + " is not another strand of the triple point");
  if (sign != 1 && sign != -1) throw std::invalid_argument("satellite: sign must be +-1");

  const double t3 = k.times[2];
  const double tj = k.times[static_cast<std::size_t>(j - 1)];
  Vec w = k.tangents[static_cast<std::size_t>(j - 1)];
  const double speed = k.curve.tangent(tj).norm();
  const double t_new = tj + sign * c.satellite_shift / speed;

  SingularKnotSpec s;
  s.label = label;
  s.curve = k.curve.with_bump(Bump{t3, k.epsilon, sign * w, c.satellite_shift});
  s.delta = k.delta;
  s.epsilon = k.epsilon;

  // old variable i -> new index; the new time gets index `fresh`
  std::vector<double> times = k.times;
  times.push_back(t_new);
  std::vector<std::size_t> order(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  std::vector<int> new_index(times.size());
  for (std::size_t r = 0; r < order.size(); ++r) new_index[order[r]] = static_cast<int>(r) + 1;
  for (std::size_t r = 0; r < order.size(); ++r) s.times.push_back(times[order[r]]);
  const int fresh = new_index.back();
  auto ni = [&](int old) { return new_index[static_cast<std::size_t>(old - 1)]; };

  std::vector<std::vector<int>> pairs;
  for (const auto& g : groups) {
    if (&g == &*triple) {
      std::vector<int> rest;
      for (int x : g)
        if (x != 3) rest.push_back(ni(x));
      pairs.push_back(rest);
      pairs.push_back({ni(3), fresh});
    } else {
      std::vector<int> h;
      for (int x : g) h.push_back(ni(x));
      pairs.push_back(h);
    }
  }
  s.expression = monomial_of_pairs(pairs);
  for (int m : k.moved) s.moved.push_back(ni(m));
  s.tangents = unit_tangents(s.curve, s.times);
  return s;
}

std::vector<SingularKnotSpec> derive_satellites(const BaseKnots& b) {
  return {satellite(b.k1, 4, +1, "K3"),  satellite(b.k1, 4, -1, "K4"), satellite(b.k1, 1, +1, "K5"),
          satellite(b.k1, 1, -1, "K6"),  satellite(b.k2, 2, +1, "K7"), satellite(b.k2, 2, -1, "K8"),
          satellite(b.k2, 5, -1, "K9"), satellite(b.k2, 5, +1, "K10")};
}

SingularKnotSpec build_two_double_point_knot(int d) {
  if (d < 4) throw std::invalid_argument("build_two_double_point_knot: d must be at least 4");
  const Constants& k = constants();
  std::vector<Vec3> v = {{-1.4, 0, 0},      {0.7, 0, 0},  {1.5, -0.7, 0},   {1.5, 0.7, 0},
                         {0.9, 1.1, -1.0},  {0, -0.7, 0}, {0, 0.7, 0},      {0.5, 1.4, 0.6},
                         {1.5, 0, -0.7},    {1.5, 0, 0.7}, {0.3, -1.2, 1.0}, {-1.9, -0.4, 0.3}};
  std::vector<double> t = {0.2, 0.4, 0.6, 0.8};
  const Vec3 O(0, 0, 0), B(1.5, 0, 0);
  std::vector<PolyCurve::Window> w = {
      {t[0], 0, O, k.window}, {t[1], 2, B, k.window}, {t[2], 5, O, k.window}, {t[3], 8, B, k.window}};
  SingularKnotSpec s;
  s.label = "K_ccl";
  s.curve = ParametricCurve(std::make_shared<PolyCurve>(d, std::move(v), Vec3(-1, 0, 0), std::move(w), k.fillet, k.speed));
  s.times = t;
  s.expression = monomial_of_pairs({{1, 3}, {2, 4}});
  s.tangents = unit_tangents(s.curve, t);
  s.moved = {3, 4};
  s.delta = k.delta;
  s.epsilon = k.epsilon;
  return s;
}

namespace {

nlohmann::json vec_json(const Vec& v) {
  auto j = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

[[noreturn]] void fixture_error(const std::string& where, const std::string& what) {
  throw std::invalid_argument("knot fixture at " + where + ": " + what);
}

Vec vec_from(const nlohmann::json& j, const std::string& where, int n = -1) {
  if (!j.is_array()) fixture_error(where, "expected an array of numbers");
  if (n >= 0 && static_cast<int>(j.size()) != n) fixture_error(where, "expected " + std::to_string(n) + " entries");
  Vec v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fixture_error(where + "[" + std::to_string(i) + "]", "not a number");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

const nlohmann::json& field(const nlohmann::json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fixture_error(where, "missing key \"" + key + "\"");
  return j.at(key);
}

double number(const nlohmann::json& j, const std::string& key, const std::string& where) {
  const auto& v = field(j, key, where);
  if (!v.is_number()) fixture_error(where + "." + key, "not a number");
  return v.get<double>();
}

}  // namespace

nlohmann::json to_json(const SingularKnotSpec& k) {
  const auto* poly = dynamic_cast<const PolyCurve*>(k.curve.base().get());
  if (!poly) throw std::invalid_argument("to_json: only polygon-based knots are serializable");
  nlohmann::json j;
  j["version"] = 1;
  j["label"] = k.label;
  j["d"] = poly->dim();
  auto verts = nlohmann::json::array();
  for (const auto& v : poly->vertices()) verts.push_back({v[0], v[1], v[2]});
  j["vertices"] = verts;
  j["basepoint"] = {poly->basepoint()[0], poly->basepoint()[1], poly->basepoint()[2]};
  auto wins = nlohmann::json::array();
  for (const auto& w : poly->windows())
    wins.push_back({{"time", w.time}, {"edge", w.edge}, {"through", {w.through[0], w.through[1], w.through[2]}},
                    {"halfwidth", w.halfwidth}});
  j["windows"] = wins;
  j["fillet"] = poly->fillet_radius();
  j["speed"] = poly->speed();
  auto bumps = nlohmann::json::array();
  for (const auto& b : k.curve.bumps())
    bumps.push_back({{"center", b.center}, {"halfwidth", b.halfwidth}, {"direction", vec_json(b.direction)},
                     {"amplitude", b.amplitude}});
  j["bumps"] = bumps;
  j["times"] = k.times;
  j["expression"] = brackets::to_json(k.expression);
  auto tans = nlohmann::json::array();
  for (const auto& t : k.tangents) tans.push_back(vec_json(t));
  j["tangents"] = tans;
  j["moved"] = k.moved;
  j["delta"] = k.delta;
  j["epsilon"] = k.epsilon;
  return j;
}

SingularKnotSpec knot_from_json(const nlohmann::json& j) {
  const std::string root = "$";
  if (!j.is_object()) fixture_error(root, "expected an object");
  if (j.contains("version") && j["version"] != 1) fixture_error(root + ".version", "unsupported version");
  const int d = static_cast<int>(number(j, "d", root));
  if (d < 3) fixture_error(root + ".d", "dimension below 3");
  std::vector<Vec3> verts;
  const auto& jv = field(j, "vertices", root);
  if (!jv.is_array()) fixture_error(root + ".vertices", "expected an array");
  for (std::size_t i = 0; i < jv.size(); ++i)
    verts.push_back(vec_from(jv[i], root + ".vertices[" + std::to_string(i) + "]", 3));
  const Vec3 base = vec_from(field(j, "basepoint", root), root + ".basepoint", 3);
  std::vector<PolyCurve::Window> wins;
  const auto& jw = field(j, "windows", root);
  if (!jw.is_array()) fixture_error(root + ".windows", "expected an array");
  for (std::size_t i = 0; i < jw.size(); ++i) {
    const std::string w = root + ".windows[" + std::to_string(i) + "]";
    PolyCurve::Window win;
    win.time = number(jw[i], "time", w);
    win.edge = static_cast<int>(number(jw[i], "edge", w));
    win.through = vec_from(field(jw[i], "through", w), w + ".through", 3);
    win.halfwidth = number(jw[i], "halfwidth", w);
    wins.push_back(win);
  }
  SingularKnotSpec k;
  try {
    k.curve = ParametricCurve(std::make_shared<PolyCurve>(d, verts, base, wins, number(j, "fillet", root),
                                                          number(j, "speed", root)));
  } catch (const std::invalid_argument& e) {
    fixture_error(root + ".vertices", e.what());
  }
  if (j.contains("bumps")) {
    const auto& jb = j["bumps"];
    for (std::size_t i = 0; i < jb.size(); ++i) {
      const std::string w = root + ".bumps[" + std::to_string(i) + "]";
      Bump b;
      b.center = number(jb[i], "center", w);
      b.halfwidth = number(jb[i], "halfwidth", w);
      b.direction = vec_from(field(jb[i], "direction", w), w + ".direction", d);
      b.amplitude = number(jb[i], "amplitude", w);
      k.curve = k.curve.with_bump(b);
    }
  }
  k.label = j.value("label", std::string());
  const auto& jt = field(j, "times", root);
  for (std::size_t i = 0; i < jt.size(); ++i) {
    if (!jt[i].is_number()) fixture_error(root + ".times[" + std::to_string(i) + "]", "not a number");
    k.times.push_back(jt[i].get<double>());
    if (i > 0 && !(k.times[i] > k.times[i - 1])) fixture_error(root + ".times[" + std::to_string(i) + "]", "not increasing");
  }
  try {
    k.expression = brackets::monomial_from_json(field(j, "expression", root));
  } catch (const std::exception& e) {
    fixture_error(root + ".expression", e.what());
  }
  const auto& jtan = field(j, "tangents", root);
  if (jtan.size() != k.times.size()) fixture_error(root + ".tangents", "one tangent per time expected");
  for (std::size_t i = 0; i < jtan.size(); ++i) {
    const std::string w = root + ".tangents[" + std::to_string(i) + "]";
    Vec t = vec_from(jtan[i], w, d);
    const Vec actual = k.curve.tangent(k.times[i]).normalized();
    if ((t - actual).norm() > 1e-8) fixture_error(w, "does not match the curve tangent");
    k.tangents.push_back(t);
  }
  for (const auto& m : field(j, "moved", root)) k.moved.push_back(m.get<int>());
  k.delta = number(j, "delta", root);
  k.epsilon = number(j, "epsilon", root);
  return k;
}

}  // namespace knotcycle::knots
