#include "checks.hpp"

#include "knotcycle/brackets.hpp"
#include "knotcycle/family.hpp"
#include "knotcycle/graphcx.hpp"
#include "knotcycle/pairing.hpp"
#include "knotcycle/parallel.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <random>
#include <sstream>

namespace knotcycle::app {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << x;
  return os.str();
}

// d = 4 constrained family, shared by criteria 5, 7 and 8
const knots::GluedFamily& family_d4() {
  static const knots::GluedFamily f = knots::build_family(4, knots::IsotopyMode::constrained);
  return f;
}

CriterionResult graph_soundness() {
  CriterionResult r{1, "graph complex soundness", false, "", 0, 120, {}};
  const auto conv = graphs::shipped_graph_conventions();
  std::size_t total = 0, bad = 0;
  // e <= 4: ord = e - v_i in [0,4]; deg = 2e - 3 v_i - v_e in [-1, 8]
  for (int ord = 0; ord <= 4; ++ord)
    for (int deg = -1; deg <= 8; ++deg)
      for (const auto& g : graphs::enumerate_graphs(4, ord, deg, conv)) {
        ++total;
        if (!graphs::cobound(graphs::cobound(g, conv), conv).is_zero()) ++bad;
      }
  r.pass = total > 0 && bad == 0;
  r.detail = std::to_string(total) + " graphs with e <= 4, " + std::to_string(bad) + " with nonzero cobound^2";
  r.data = {{"graphs", total}, {"failures", bad}, {"conventions", conv.str()}};
  return r;
}

CriterionResult cocycles() {
  CriterionResult r{2, "cocycle verification", false, "", 0, 1, {}};
  const auto conv = graphs::shipped_graph_conventions();
  auto t0 = Clock::now();
  const bool ccl = graphs::cobound(graphs::ccl_cocycle(conv), conv).is_zero();
  const double t_ccl = since(t0);
  t0 = Clock::now();
  const bool lon = graphs::cobound(graphs::longoni_cocycle(conv), conv).is_zero();
  const double t_lon = since(t0);
  // each check has its own 1 s budget
  r.pass = ccl && lon && t_ccl < 1 && t_lon < 1;
  r.budget = 2;
  r.detail = std::string("1/4 chord - 1/3 tripod: ") + (ccl ? "closed" : "NOT closed") + " (" + fmt(t_ccl, 2) +
             " s); star + 2 second: " + (lon ? "closed" : "NOT closed") + " (" + fmt(t_lon, 2) + " s)";
  r.data = {{"ccl_closed", ccl}, {"longoni_closed", lon}, {"ccl_seconds", t_ccl}, {"longoni_seconds", t_lon}};
  return r;
}

CriterionResult bracket_soundness() {
  CriterionResult r{3, "bracket complex soundness", false, "", 0, 60, {}};
  const auto conv = brackets::shipped_convention();
  std::size_t monomials = 0, bad = 0;
  for (int p = 1; p <= 4; ++p)
    for (int q = 1; q < p; ++q)
      for (const auto& m : brackets::e1_basis(p, q)) {
        ++monomials;
        if (!brackets::d1(brackets::d1(m, conv), conv).is_zero()) ++bad;
      }
  const auto db = brackets::d1(brackets::beta(conv), conv);
  const bool beta_cycle = db.is_zero();
  const bool closed_cycle = brackets::d1(brackets::beta_closed(conv), conv).is_zero();
  r.pass = monomials > 0 && bad == 0 && beta_cycle;
  r.detail = "d1^2 = 0 on " + std::to_string(monomials - bad) + "/" + std::to_string(monomials) +
             " monomials (p <= 4); d1(beta1+beta2) " + (beta_cycle ? "= 0" : "= " + db.str() + " != 0") +
             (beta_cycle ? "" : std::string("; no sign convention with d1^2 = 0 makes it a cycle for d even, ") +
                                    "the closure beta1+beta2+2[[x1,x5],x3][x2,x4] is " +
                                    (closed_cycle ? "a cycle" : "NOT a cycle"));
  r.data = {{"monomials", monomials},
            {"d1_squared_failures", bad},
            {"beta_cycle", beta_cycle},
            {"beta_closed_cycle", closed_cycle},
            {"convention", conv.str()}};
  return r;
}

CriterionResult ss_rank() {
  CriterionResult r{4, "spectral-sequence rank", false, "", 0, 300, {}};
  const auto e2 = brackets::e2_rank_detailed(5, 3, brackets::shipped_convention());
  r.pass = e2.rank_with_jacobi == 1 && e2.jacobi_preserved;
  r.detail = "e2_rank(5,3,even): " + std::to_string(e2.rank_without_jacobi) + " without Jacobi, " +
             std::to_string(e2.rank_with_jacobi) + " modulo Jacobi" +
             (e2.jacobi_preserved ? "" : " (d1 does NOT preserve the Jacobi span)");
  r.data = {{"without_jacobi", e2.rank_without_jacobi},
            {"with_jacobi", e2.rank_with_jacobi},
            {"jacobi_preserved", e2.jacobi_preserved}};
  return r;
}

CriterionResult family_construction(const AcceptanceOptions& opt) {
  CriterionResult r{5, "family construction", false, "", 0, 600, {}};
  const auto& f = family_d4();
  // embeddings
  nlohmann::json charts = nlohmann::json::array();
  bool emb_ok = true;
  for (std::size_t ci = 0; ci < f.charts.size(); ++ci) {
    const auto& c = *f.charts[ci];
    std::vector<knots::Verdict> out(static_cast<std::size_t>(opt.embed_samples));
    parallel_for(0, opt.embed_samples, [&](int i) {
      std::seed_seq seq{opt.seed, static_cast<std::uint64_t>(ci), static_cast<std::uint64_t>(i)};
      std::mt19937_64 rng(seq);
      out[static_cast<std::size_t>(i)] = knots::check_chart_point(c, c.sample(rng));
    });
    int fails = 0;
    double worst = 1e300;
    std::string first;
    for (const auto& v : out) {
      if (!v.ok) {
        if (first.empty()) first = v.detail;
        ++fails;
      }
      worst = std::min(worst, v.worst);
    }
    emb_ok = emb_ok && fails == 0;
    charts.push_back({{"chart", c.label()}, {"samples", opt.embed_samples}, {"failures", fails},
                      {"least_clearance", worst}, {"first_failure", first}});
  }
  // K1..K10
  const auto base = knots::build_base_knots(4);
  std::vector<knots::SingularKnotSpec> ks{base.k1, base.k2};
  for (auto& s : knots::derive_satellites(base)) ks.push_back(s);
  knots::RespectOptions ro;
  ro.strict = true;
  nlohmann::json knots_j = nlohmann::json::array();
  bool resp_ok = true;
  for (const auto& k : ks) {
    const auto v = knots::check_respects(k.curve, k.times, k.expression, ro);
    resp_ok = resp_ok && v.ok;
    knots_j.push_back({{"knot", k.label}, {"ok", v.ok}, {"detail", v.detail}});
  }
  // gluings
  const auto br = knots::boundary_match_check(f, 50, 1e-9, opt.seed);
  r.pass = emb_ok && resp_ok && br.ok && br.gluings.size() == 8;
  int failed_charts = 0;
  for (const auto& c : charts) failed_charts += c["failures"].get<int>() > 0;
  r.detail = std::to_string(opt.embed_samples) + " samples x " + std::to_string(f.charts.size()) + " charts: " +
             (emb_ok ? "all embedded" : std::to_string(failed_charts) + " charts with failures") + "; K1..K10 strict: " +
             (resp_ok ? "all respect" : "FAIL") + "; " + std::to_string(br.gluings.size()) +
             " gluings, worst sup " + fmt(br.worst, 3);
  r.data = {{"charts", charts}, {"knots", knots_j}, {"gluing_worst", br.worst}, {"gluings", br.gluings.size()}};
  return r;
}

CriterionResult vanishing() {
  CriterionResult r{6, "vanishing table", false, "", 0, 1, {}};
  // independent arithmetic for the stated bounds
  bool ok = true;
  std::string bad;
  nlohmann::json per_d = nlohmann::json::object();
  for (int d : {4, 6, 8}) {
    const auto rows = pairing::vanishing_report(d);
    auto find = [&](const std::string& term, const std::string& region, const std::string& chart_prefix) {
      for (const auto& row : rows)
        if (row.term == term && row.region == region && row.chart.rfind(chart_prefix, 0) == 0) return &row;
      return static_cast<const pairing::VanishingRow*>(nullptr);
    };
    struct Expect {
      std::string term, region, chart;
      int factor, required;
    };
    const std::vector<Expect> expect{
        {"omega2", "C5(3)", "M1", 2 * d - 1, 3 * d - 3},     {"omega2", "C5(4)", "M1", 2 * d, 3 * d - 3},
        {"omega2", "C5(5)", "M1", 2 * d, 3 * d - 3},         {"omega2", "C5(4)", "M2", 2 * d, 3 * d - 3},
        {"omega2", "C5(5)", "M2", 2 * d, 3 * d - 3},         {"omega2", "C5(3)", "M3..M6", 2 * d, 3 * d - 3},
        {"omega2", "C5(4)", "M3..M6", 2 * d, 3 * d - 3},     {"omega2", "C5(5)", "M3..M6", 2 * d, 3 * d - 3},
        {"omega2", "C5(1)", "W2/W3", 2 * d - 3, 3 * d - 3},  {"omega2", "C5(2)", "W2/W3", 2 * d - 3, 3 * d - 3},
    };
    for (const auto& e : expect) {
      const auto* row = find(e.term, e.region, e.chart);
      const bool good = row && row->factor_dimension == e.factor && row->required_dimension == e.required &&
                        row->verdict == "vanishes";
      if (!good) {
        ok = false;
        bad += " d=" + std::to_string(d) + " " + e.region + "/" + e.chart;
      }
    }
    int vanish = 0;
    for (const auto& row : rows) {
      vanish += row.verdict == "vanishes";
      if (row.factor_dimension >= row.required_dimension || row.verdict != "vanishes") {
        ok = false;
        bad += " d=" + std::to_string(d) + " " + row.term + " " + row.region + "/" + row.chart;
      }
    }
    per_d[std::to_string(d)] = {{"rows", rows.size()}, {"vanishing", vanish}};
  }
  bool d3 = true;
  for (const auto& row : pairing::vanishing_report(3)) d3 = d3 && row.verdict == "not applicable";
  ok = ok && d3;
  r.pass = ok;
  r.detail = std::string("d in {4,6,8}: every listed bound reproduced and strict") + (d3 ? "; d=3 not applicable" : "") +
             (bad.empty() ? "" : "; mismatches:" + bad);
  r.data = per_d;
  return r;
}

CriterionResult intersection(const AcceptanceOptions&) {
  CriterionResult r{7, "intersection pairing", false, "", 0, 900, {}};
  const auto& c = knots::constants();
  bool ok = true;
  std::string detail;
  nlohmann::json runs = nlohmann::json::array();
  for (auto [d, mode] : {std::pair{4, knots::IsotopyMode::constrained}, std::pair{6, knots::IsotopyMode::generic}}) {
    const auto fam = d == 4 ? family_d4() : knots::build_family(d, mode);
    const auto rep = pairing::evaluate_omega(fam, pairing::Method::count);
    const auto& roots = rep.count.roots;
    bool here = rep.ok && std::abs(std::abs(rep.value) - 2) < 1e-12 && roots.size() == 1;
    double s_err = 0, v_err = 0;
    if (roots.size() == 1) {
      const auto& root = roots.front();
      here = here && root.chart == 0 && root.residual < 1e-10 && std::abs(root.det) > 1e-6;
      for (std::size_t i = 0; i < root.s.size(); ++i) s_err = std::max(s_err, std::abs(root.s[i] - c.times[i]));
      knots::Vec e = knots::Vec::Zero(d);
      e[d - 1] = 1;
      for (const auto& v : root.ambient) v_err = std::max(v_err, (v - e).norm());
      here = here && s_err < 1e-8 && v_err < 1e-8 && root.ambient.size() == 3;
      runs.push_back({{"d", d}, {"value", rep.value}, {"roots", roots.size()}, {"chart", fam.charts[0]->label()},
                      {"s_error", s_err}, {"v_error", v_err}, {"residual", root.residual}, {"det", root.det},
                      {"sign", root.sign}});
    } else {
      runs.push_back({{"d", d}, {"value", rep.value}, {"roots", roots.size()}, {"diagnostic", rep.diagnostic}});
    }
    ok = ok && here;
    detail += (detail.empty() ? "" : "; ") + std::string("d=") + std::to_string(d) + " " +
              (mode == knots::IsotopyMode::constrained ? "constrained" : "generic") + ": omega = " +
              fmt(rep.value) + ", " + std::to_string(roots.size()) + " root(s)" +
              (roots.size() == 1 ? " on " + fam.charts[static_cast<std::size_t>(roots[0].chart)]->label() +
                                       ", |s-t| " + fmt(s_err, 2) + ", |v-e_d| " + fmt(v_err, 2) + ", residual " +
                                       fmt(roots[0].residual, 2)
                                 : "");
  }
  r.pass = ok;
  r.detail = detail;
  r.data = runs;
  return r;
}

CriterionResult monte_carlo_check(const AcceptanceOptions& opt) {
  CriterionResult r{8, "Monte Carlo corroboration", false, "", 0, 1800, {}};
  const auto& f = family_d4();
  const auto& c = knots::constants();
  const std::vector<double> times(c.times.begin(), c.times.end());
  bool ok = true;
  std::string detail;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < f.charts.size(); ++i) {
    pairing::MonteCarloOptions mo;
    mo.samples = opt.mc_samples;
    mo.seed = opt.seed + 1000 * i;
    const auto res = pairing::monte_carlo(*f.charts[i], pairing::omega2_term(), pairing::AlphaSpec{opt.kappa, {}},
                                          pairing::RegionLabel{5, 0}, times, c.epsilon, mo);
    bool good;
    if (i == 0)
      good = std::abs(std::abs(res.estimate) - 1) <= 0.15 && res.standard_error <= 0.05;
    else
      good = std::abs(res.estimate) <= 3 * res.standard_error || res.estimate == 0;
    ok = ok && good;
    rows.push_back({{"chart", f.charts[i]->label()}, {"estimate", res.estimate}, {"standard_error", res.standard_error},
                    {"samples", res.samples}, {"nonzero", res.nonzero}, {"modes", res.modes}, {"ok", good}});
    detail += (detail.empty() ? "" : "; ") + f.charts[i]->label() + " " + fmt(res.estimate) + " +- " +
              fmt(res.standard_error, 2);
  }
  r.pass = ok;
  r.detail = "kappa " + fmt(opt.kappa) + ", n " + std::to_string(opt.mc_samples) + " per chart: " + detail;
  r.data = rows;
  return r;
}

CriterionResult ccl() {
  CriterionResult r{9, "cross-check on the classical cycle", false, "", 0, 300, {}};
  const auto rep = pairing::ccl_check(4);
  r.pass = rep.chord_count != 0 && rep.tripod_vanishes && rep.value != 0;
  r.detail = "signed chord count " + std::to_string(rep.chord_count) + ", tripod min chord sine " +
             fmt(rep.tripod_min_residual, 3) + (rep.tripod_vanishes ? " (no preimage)" : " (NOT separated)") +
             ", value " + to_string(rep.value);
  r.data = {{"chord_count", rep.chord_count}, {"tripod_min_residual", rep.tripod_min_residual},
            {"value", to_string(rep.value)}};
  return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt, const std::vector<int>& which,
                                            const std::function<void(const CriterionResult&)>& on_result) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= 9; ++id) {
    if (!which.empty() && std::find(which.begin(), which.end(), id) == which.end()) continue;
    const auto t0 = Clock::now();
    CriterionResult r;
    try {
      switch (id) {
        case 1: r = graph_soundness(); break;
        case 2: r = cocycles(); break;
        case 3: r = bracket_soundness(); break;
        case 4: r = ss_rank(); break;
        case 5: r = family_construction(opt); break;
        case 6: r = vanishing(); break;
        case 7: r = intersection(opt); break;
        case 8: r = monte_carlo_check(opt); break;
        default: r = ccl(); break;
      }
    } catch (const std::exception& e) {
      r.id = id;
      r.title = "criterion " + std::to_string(id);
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = since(t0);
    // the family shared by 5, 7, 8 is built inside whichever runs first
    if (r.budget > 0 && r.seconds >= r.budget) {
      r.pass = false;
      r.detail += "; over the time budget of " + fmt(r.budget) + " s";
    }
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_line(const CriterionResult& r) {
  char t[32];
  std::snprintf(t, sizeof t, "%.1f s", r.seconds);
  return std::string(r.pass ? "[PASS] " : "[FAIL] ") + std::to_string(r.id) + " " + r.title + " (" + t + "): " +
         r.detail;
}

nlohmann::json to_json(const CriterionResult& r) {
  return {{"id", r.id},           {"title", r.title},   {"pass", r.pass}, {"detail", r.detail},
          {"seconds", r.seconds}, {"budget", r.budget}, {"data", r.data}};
}

}  // namespace knotcycle::app
