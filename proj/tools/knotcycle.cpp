// knotcycle: graphs | ss | knots | pair | all
// Exit codes: 0 pass, 1 verification failure, 2 usage or input error.
// Worker threads: KNOTCYCLE_THREADS (default: hardware concurrency).

#include "checks.hpp"

#include "knotcycle/brackets.hpp"
#include "knotcycle/family.hpp"
#include "knotcycle/graphcx.hpp"
#include "knotcycle/pairing.hpp"
#include "knotcycle/parallel.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace knotcycle;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Config {
  int d = 4;
  std::string mode = "constrained";  // isotopy regime
  std::string space = "long";        // long | closed
  std::uint64_t seed = 1;
  long long samples = 1'000'000;
  double tolerance = 1e-9;
  double kappa = 50;
  std::string report = "knotcycle_report.json";
  std::string fixture;
  std::string out = ".";
  std::string term = "omega2";
  std::string method = "count";
  std::string format = "csv";
  int p = 5, q = 3, ord = 3, deg = 1, max_edges = 4;
  int embed_samples = 1000;
  bool isotopies = false;

  json to_json() const {
    return {{"d", d},
            {"mode", mode},
            {"space", space},
            {"seed", seed},
            {"samples", samples},
            {"tolerance", tolerance},
            {"kappa", kappa},
            {"fixture", fixture},
            {"term", term},
            {"method", method},
            {"threads", thread_count()}};
  }
};

knots::IsotopyMode isotopy_mode(const Config& c) {
  return c.mode == "generic" ? knots::IsotopyMode::generic : knots::IsotopyMode::constrained;
}

json read_fixture(const std::string& path) {
  if (path.empty()) throw UsageError("--fixture is required");
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open fixture " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("malformed fixture " + path + ": " + e.what());
  }
}

// fixtures may wrap the payload: {"schema": 1, "sum": [...]} or be the bare payload
const json& payload(const json& j, const char* key) { return j.is_object() && j.contains(key) ? j.at(key) : j; }

struct Outcome {
  int code = 0;
  json result;
};

void write_report(const Config& cfg, const std::string& command, const Outcome& o) {
  json j{{"schema", 1}, {"command", command}, {"config", cfg.to_json()}, {"pass", o.code == 0}, {"result", o.result}};
  std::ofstream(cfg.report) << j.dump(2) << "\n";
}

// ---- graphs

Outcome graphs_verify(const Config& cfg) {
  const auto conv = graphs::shipped_graph_conventions();
  std::vector<std::pair<std::string, graphs::GraphSum>> sums;
  if (cfg.fixture.empty()) {
    sums = {{"ccl", graphs::ccl_cocycle(conv)}, {"longoni", graphs::longoni_cocycle(conv)}};
  } else {
    const json j = read_fixture(cfg.fixture);
    try {
      sums.push_back({j.value("name", cfg.fixture), graphs::graph_sum_from_json(payload(j, "sum"), conv)});
    } catch (const std::exception& e) {
      throw UsageError("malformed fixture " + cfg.fixture + " at $.sum: " + e.what());
    }
  }
  Outcome o;
  o.result = json::array();
  for (const auto& [name, s] : sums) {
    const auto d = graphs::cobound(s, conv);
    std::cout << name << ": cobound " << (d.is_zero() ? "= 0" : "= " + d.str()) << "\n";
    o.result.push_back({{"name", name}, {"closed", d.is_zero()}, {"cobound", graphs::to_json(d)}});
    if (!d.is_zero()) o.code = 1;
  }
  return o;
}

Outcome graphs_cobound(const Config& cfg) {
  const auto conv = graphs::shipped_graph_conventions();
  const json j = read_fixture(cfg.fixture);
  graphs::GraphSum s;
  try {
    s = graphs::graph_sum_from_json(payload(j, "sum"), conv);
  } catch (const std::exception& e) {
    throw UsageError("malformed fixture " + cfg.fixture + " at $.sum: " + e.what());
  }
  const auto d = graphs::cobound(s, conv);
  std::cout << (d.is_zero() ? "0" : d.str()) << "\n";
  return {0, {{"cobound", graphs::to_json(d)}}};
}

Outcome graphs_enumerate(const Config& cfg) {
  const auto gs = graphs::enumerate_graphs(cfg.max_edges, cfg.ord, cfg.deg);
  json arr = json::array();
  for (const auto& g : gs) {
    std::cout << g.str() << "\n";
    arr.push_back(graphs::to_json(g));
  }
  std::cout << gs.size() << " graphs\n";
  return {0, {{"count", gs.size()}, {"graphs", arr}}};
}

Outcome graphs_rank(const Config& cfg) {
  const auto r = graphs::cohomology_rank(cfg.ord, cfg.deg, cfg.max_edges);
  std::cout << "H^(" << cfg.ord << "," << cfg.deg << ") rank " << r << " (e <= " << cfg.max_edges << ")\n";
  return {0, {{"rank", r}}};
}

// ---- ss

brackets::SignConvention convention_for(int d) {
  if (d % 2 == 0) return brackets::shipped_convention();
  auto c = brackets::search_convention(false);
  if (!c) throw std::runtime_error("no consistent convention for d odd");
  return *c;
}

brackets::BracketSum read_bracket_sum(const Config& cfg, const brackets::SignConvention& conv) {
  const json j = read_fixture(cfg.fixture);
  try {
    return brackets::sum_from_json(payload(j, "sum"), conv);
  } catch (const std::exception& e) {
    throw UsageError("malformed fixture " + cfg.fixture + " at $.sum: " + e.what());
  }
}

Outcome ss_d1(const Config& cfg) {
  const auto conv = convention_for(cfg.d);
  const auto d = brackets::d1(read_bracket_sum(cfg, conv), conv);
  std::cout << (d.is_zero() ? "0" : d.str()) << "\n";
  return {0, {{"d1", brackets::to_json(d)}, {"convention", conv.str()}}};
}

Outcome ss_cycle_check(const Config& cfg) {
  const auto conv = convention_for(cfg.d);
  const auto d = brackets::d1(read_bracket_sum(cfg, conv), conv);
  std::cout << (d.is_zero() ? "d1 = 0" : "d1 = " + d.str()) << "\n";
  return {d.is_zero() ? 0 : 1, {{"cycle", d.is_zero()}, {"d1", brackets::to_json(d)}, {"convention", conv.str()}}};
}

Outcome ss_rank(const Config& cfg) {
  const auto e2 = brackets::e2_rank_detailed(cfg.p, cfg.q, convention_for(cfg.d));
  std::cout << "e2_rank(" << cfg.p << "," << cfg.q << "): " << e2.rank_without_jacobi << " without Jacobi, "
            << e2.rank_with_jacobi << " modulo Jacobi\n";
  return {e2.jacobi_preserved ? 0 : 1,
          {{"without_jacobi", e2.rank_without_jacobi},
           {"with_jacobi", e2.rank_with_jacobi},
           {"jacobi_preserved", e2.jacobi_preserved}}};
}

// ---- knots

std::vector<knots::SingularKnotSpec> all_knots(int d) {
  const auto b = knots::build_base_knots(d);
  std::vector<knots::SingularKnotSpec> ks{b.k1, b.k2};
  for (auto& s : knots::derive_satellites(b)) ks.push_back(s);
  ks.push_back(knots::build_two_double_point_knot(d));
  return ks;
}

Outcome knots_build(const Config& cfg) {
  fs::create_directories(cfg.out);
  json files = json::array();
  for (const auto& k : all_knots(cfg.d)) {
    const fs::path p = fs::path(cfg.out) / (k.label + "_d" + std::to_string(cfg.d) + ".json");
    std::ofstream(p) << knots::to_json(k).dump(2) << "\n";
    std::cout << "wrote " << p.string() << "\n";
    files.push_back(p.string());
  }
  return {0, {{"files", files}}};
}

Outcome knots_check(const Config& cfg) {
  std::vector<knots::SingularKnotSpec> ks;
  if (!cfg.fixture.empty()) {
    try {
      ks.push_back(knots::knot_from_json(read_fixture(cfg.fixture)));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  } else {
    ks = all_knots(cfg.d);
  }
  knots::RespectOptions ro;
  ro.strict = true;
  Outcome o;
  o.result = json::array();
  for (const auto& k : ks) {
    const auto r = knots::check_respects(k.curve, k.times, k.expression, ro);
    const auto e = knots::check_embedding(k.curve);
    std::cout << k.label << ": respects " << (r.ok ? "ok" : "FAIL " + r.detail) << "\n";
    o.result.push_back({{"knot", k.label}, {"respects", r.ok}, {"respects_detail", r.detail}, {"embedded_off_singular", e.ok}});
    if (!r.ok) o.code = 1;
  }
  if (cfg.isotopies) {
    const auto iso = knots::build_isotopies(cfg.d, isotopy_mode(cfg));
    for (const auto& i : iso) {
      const auto v = i->verify(300);
      std::cout << i->start().label << " -> " << i->end().label << ": " << (v.ok ? "ok" : "FAIL " + v.detail) << "\n";
      o.result.push_back({{"isotopy", i->start().label + "->" + i->end().label}, {"ok", v.ok}, {"detail", v.detail}});
      if (!v.ok) o.code = 1;
    }
    const auto fam = knots::build_family(cfg.d, iso);
    const auto br = knots::boundary_match_check(fam, 50, cfg.tolerance, cfg.seed);
    std::cout << "gluings: worst sup " << br.worst << (br.ok ? " ok" : " FAIL") << "\n";
    o.result.push_back({{"gluings", br.gluings.size()}, {"worst", br.worst}, {"ok", br.ok}});
    if (!br.ok) o.code = 1;
  }
  return o;
}

Outcome knots_export(const Config& cfg) {
  if (cfg.format != "csv" && cfg.format != "svg") throw UsageError("--format must be csv or svg");
  fs::create_directories(cfg.out);
  json files = json::array();
  const int n = 2000;
  for (const auto& k : all_knots(cfg.d)) {
    const auto pts = knots::sample(k.curve, n);
    const fs::path p = fs::path(cfg.out) / (k.label + "." + cfg.format);
    std::ofstream f(p);
    if (cfg.format == "csv") {
      f << "t";
      for (int i = 0; i < cfg.d; ++i) f << ",x" << i + 1;
      f << "\n";
      for (int j = 0; j < n; ++j) {
        f << static_cast<double>(j) / n;
        for (int i = 0; i < cfg.d; ++i) f << "," << pts[static_cast<std::size_t>(j)][i];
        f << "\n";
      }
    } else {
      // three coordinate-plane projections side by side
      const double s = 80, w = 320;
      f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 3 * w << "\" height=\"" << w << "\">\n";
      const int planes[3][2] = {{0, 1}, {0, 2}, {1, 2}};
      for (int pl = 0; pl < 3; ++pl) {
        f << "<text x=\"" << pl * w + 10 << "\" y=\"20\">x" << planes[pl][0] + 1 << " x" << planes[pl][1] + 1
          << "</text>\n<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"";
        for (const auto& v : pts)
          f << pl * w + w / 2 + s * (v[planes[pl][0]] - 0.5) << "," << w / 2 - s * v[planes[pl][1]] << " ";
        f << "\"/>\n";
        for (double t : k.times) {
          const auto v = k.curve.point(t);
          f << "<circle r=\"3\" fill=\"red\" cx=\"" << pl * w + w / 2 + s * (v[planes[pl][0]] - 0.5) << "\" cy=\""
            << w / 2 - s * v[planes[pl][1]] << "\"/>\n";
        }
      }
      f << "</svg>\n";
    }
    files.push_back(p.string());
    std::cout << "wrote " << p.string() << "\n";
  }
  return {0, {{"files", files}}};
}

// ---- pair

std::string pm(double v) {
  std::ostringstream os;
  os << (v < 0 ? "-" : "+") << std::abs(v);
  return os.str();
}

void require_square_term(const Config& cfg) {
  if (cfg.term == "omega1")
    throw UsageError("omega1 has a free point; its contribution is certified by `pair vanishing`, not computed");
  if (cfg.term != "omega2" && cfg.term != "ccl") throw UsageError("--term must be omega1, omega2 or ccl");
}

json root_json(const pairing::Root& r) {
  json amb = json::array();
  for (const auto& v : r.ambient) amb.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  return {{"chart", r.chart}, {"s", r.s}, {"residual", r.residual}, {"det", r.det}, {"sign", r.sign}, {"ambient", amb}};
}

Outcome pair_count(const Config& cfg) {
  require_square_term(cfg);
  pairing::CountOptions co;
  co.seed = cfg.seed;
  if (cfg.term == "ccl") {
    const auto r = pairing::ccl_check(cfg.d, co);
    std::cout << r.detail << "\nvalue " << to_string(r.value) << "\n";
    json roots = json::array();
    for (const auto& x : r.chord_roots) roots.push_back(root_json(x));
    return {r.chord_count != 0 && r.tripod_vanishes ? 0 : 1,
            {{"chord_count", r.chord_count}, {"tripod_min_residual", r.tripod_min_residual},
             {"value", to_string(r.value)}, {"roots", roots}}};
  }
  const auto fam = knots::build_family(cfg.d, isotopy_mode(cfg));
  const auto rep = pairing::intersection_count(fam, pairing::omega2_term(), {}, co);
  json roots = json::array();
  for (const auto& x : rep.roots) roots.push_back(root_json(x));
  json per = json::array();
  for (std::size_t i = 0; i < fam.charts.size(); ++i) {
    std::cout << fam.charts[i]->label() << ": " << rep.per_chart[i] << "\n";
    per.push_back({{"chart", fam.charts[i]->label()}, {"signed", rep.per_chart[i]}});
  }
  std::cout << "signed count " << rep.signed_count << " (" << rep.roots.size() << " roots, " << rep.newton_runs
            << " Newton runs, " << rep.newton_failures << " did not converge)\n";
  return {0, {{"signed_count", rep.signed_count}, {"per_chart", per}, {"roots", roots},
              {"newton_runs", rep.newton_runs}, {"newton_failures", rep.newton_failures}}};
}

Outcome pair_mc(const Config& cfg) {
  require_square_term(cfg);
  if (cfg.term == "ccl") throw UsageError("pair mc supports --term omega2");
  const auto fam = knots::build_family(cfg.d, isotopy_mode(cfg));
  const auto& c = knots::constants();
  const std::vector<double> times(c.times.begin(), c.times.end());
  json rows = json::array();
  double total = 0, var = 0;
  for (std::size_t i = 0; i < fam.charts.size(); ++i) {
    pairing::MonteCarloOptions mo;
    mo.samples = cfg.samples;
    mo.seed = cfg.seed + 1000 * i;
    const auto r = pairing::monte_carlo(*fam.charts[i], pairing::omega2_term(), {cfg.kappa, {}}, {5, 0}, times,
                                        c.epsilon, mo);
    std::cout << fam.charts[i]->label() << ": " << r.estimate << " +- " << r.standard_error << "\n";
    rows.push_back({{"chart", fam.charts[i]->label()}, {"region", r.region}, {"estimate", r.estimate},
                    {"standard_error", r.standard_error}, {"samples", r.samples}, {"nonzero", r.nonzero},
                    {"modes", r.modes}});
    total += r.estimate;
    var += r.standard_error * r.standard_error;
  }
  std::cout << "C5c total " << total << " +- " << std::sqrt(var) << "\n";
  return {0, {{"charts", rows}, {"total", total}, {"standard_error", std::sqrt(var)}}};
}

Outcome pair_vanishing(const Config& cfg) {
  const auto rows = pairing::vanishing_report(cfg.d);
  json arr = json::array();
  bool all = true;
  for (const auto& r : rows) {
    std::cout << r.term << "  " << r.region << "  " << r.chart << "  " << r.factor_space << "  dim "
              << r.factor_dimension << " vs " << r.required_dimension << "  " << r.verdict << "\n";
    arr.push_back({{"term", r.term}, {"region", r.region}, {"chart", r.chart}, {"factor_space", r.factor_space},
                   {"factor_dimension", r.factor_dimension}, {"required_dimension", r.required_dimension},
                   {"verdict", r.verdict}});
    all = all && r.verdict == "vanishes";
  }
  return {all ? 0 : 1, {{"rows", arr}}};
}

Outcome pair_omega(const Config& cfg) {
  if (cfg.method != "count" && cfg.method != "monte_carlo" && cfg.method != "mc")
    throw UsageError("--method must be count or monte_carlo");
  const auto fam = knots::build_family(cfg.d, isotopy_mode(cfg));
  pairing::CountOptions co;
  co.seed = cfg.seed;
  pairing::MonteCarloOptions mo;
  mo.samples = cfg.samples;
  mo.seed = cfg.seed;
  const auto rep = pairing::evaluate_omega(fam, cfg.method == "count" ? pairing::Method::count
                                                                        : pairing::Method::monte_carlo,
                                           co, mo, cfg.kappa);
  json contrib = json::array();
  for (const auto& c : rep.contributions)
    contrib.push_back({{"term", c.term}, {"chart", c.chart}, {"region", c.region}, {"method", c.method},
                       {"value", c.value}, {"error", c.error}, {"note", c.note}});
  if (cfg.method == "count")
    std::cout << "omega = " << pm(rep.value) << "  (reported as ±" << std::abs(rep.value)
              << "; sign follows the chart parameter order)\n";
  else
    std::cout << "omega = " << pm(rep.value) << " +- " << rep.error << "\n";
  if (!rep.diagnostic.empty()) std::cout << "diagnostic: " << rep.diagnostic << "\n";
  return {rep.ok ? 0 : 1,
          {{"value", rep.value}, {"error", rep.error}, {"contributions", contrib}, {"diagnostic", rep.diagnostic}}};
}

Outcome run_all(const Config& cfg) {
  app::AcceptanceOptions opt;
  opt.seed = cfg.seed;
  opt.embed_samples = cfg.embed_samples;
  opt.mc_samples = cfg.samples;
  opt.kappa = cfg.kappa;
  json arr = json::array();
  const auto res = app::run_acceptance(opt, {}, [&](const auto& r) {
    std::cout << app::format_line(r) << std::endl;
    arr.push_back(app::to_json(r));
  });
  int code = 0;
  for (const auto& r : res) code = r.pass ? code : 1;
  return {code, arr};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knotcycle: graph and bracket complexes, the glued knot family and its pairing"};
  app.require_subcommand(1);
  Config cfg;
  auto common = [&](CLI::App* s) {
    s->add_option("--d", cfg.d, "ambient dimension")->check(CLI::Range(3, 64));
    s->add_option("--mode", cfg.mode, "isotopy regime")->check(CLI::IsMember({"generic", "constrained"}));
    s->add_option("--space", cfg.space, "knot space")->check(CLI::IsMember({"long", "closed"}));
    s->add_option("--seed", cfg.seed);
    s->add_option("--samples", cfg.samples, "sample count");
    s->add_option("--tolerance", cfg.tolerance);
    s->add_option("--report", cfg.report, "JSON report path");
    s->add_option("--fixture", cfg.fixture, "input JSON");
  };

  std::string command;
  std::function<Outcome(const Config&)> action;
  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help, auto fn) {
    auto* s = parent->add_subcommand(name, help);
    common(s);
    s->callback([&, s, fn, name] {
      command = s->get_parent()->get_name() + " " + name;
      action = fn;
    });
    return s;
  };

  auto* g = app.add_subcommand("graphs", "decorated graph complex");
  g->require_subcommand(1);
  leaf(g, "verify", "cobound of the named cocycles (or --fixture) is zero", graphs_verify);
  leaf(g, "cobound", "cobound of the sum in --fixture", graphs_cobound);
  for (auto* s : {leaf(g, "enumerate", "nonzero graphs of a bidegree", graphs_enumerate),
                  leaf(g, "rank", "cohomology rank of the truncation", graphs_rank)}) {
    s->add_option("--ord", cfg.ord);
    s->add_option("--deg", cfg.deg);
    s->add_option("--max-edges", cfg.max_edges);
  }

  auto* ss = app.add_subcommand("ss", "bracket-expression E1 complex");
  ss->require_subcommand(1);
  leaf(ss, "d1", "d1 of the sum in --fixture", ss_d1);
  leaf(ss, "cycle-check", "is the sum in --fixture a d1-cycle", ss_cycle_check);
  auto* rk = leaf(ss, "rank", "E2 rank at (p, q)", ss_rank);
  rk->add_option("--p", cfg.p);
  rk->add_option("--q", cfg.q);

  auto* kn = app.add_subcommand("knots", "singular knots and the glued family");
  kn->require_subcommand(1);
  leaf(kn, "build", "write K1..K10 and K_ccl fixtures", knots_build)->add_option("--out", cfg.out);
  leaf(kn, "check", "strict respects checks (and --isotopies)", knots_check)->add_flag("--isotopies", cfg.isotopies);
  auto* ex = leaf(kn, "export", "sampled curves as CSV or SVG projections", knots_export);
  ex->add_option("--out", cfg.out);
  ex->add_option("--format", cfg.format)->check(CLI::IsMember({"csv", "svg"}));

  auto* pr = app.add_subcommand("pair", "configuration-space integrals on the family");
  pr->require_subcommand(1);
  for (auto* s : {leaf(pr, "count", "signed count of Gauss-map preimages of (e_d, ...)", pair_count),
                  leaf(pr, "mc", "Monte Carlo integral per chart", pair_mc)}) {
    s->add_option("--term", cfg.term)->check(CLI::IsMember({"omega1", "omega2", "ccl"}));
    s->add_option("--kappa", cfg.kappa);
  }
  leaf(pr, "vanishing", "dimension table", pair_vanishing);
  auto* om = leaf(pr, "omega", "value of the cocycle on the family", pair_omega);
  om->add_option("--method", cfg.method)->check(CLI::IsMember({"count", "monte_carlo", "mc"}));
  om->add_option("--kappa", cfg.kappa);

  auto* all = app.add_subcommand("all", "full acceptance pipeline");
  common(all);
  all->add_option("--embed-samples", cfg.embed_samples);
  all->callback([&] {
    command = "all";
    action = run_all;
    if (all->count("--samples") == 0) cfg.samples = 10'000'000;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    if (cfg.d < 4 && command.rfind("pair", 0) == 0 && command != "pair vanishing")
      throw UsageError("the family needs d >= 4");
    const Outcome o = action(cfg);
    write_report(cfg, command, o);
    return o.code;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
