#include "knotcycle/pairing.hpp"
#include "shared_family.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <cstdlib>
#include <random>

using namespace knotcycle;
using namespace knotcycle::pairing;

namespace {

std::vector<double> tbar() {
  const auto& c = knots::constants();
  return {c.times.begin(), c.times.end()};
}

Vec e(int d, int i) {
  Vec v = Vec::Zero(d);
  v[i] = 1;
  return v;
}

ChartPoint north(const Chart& c) {
  ChartPoint p;
  for (int k : c.sphere_dims()) p.spheres.push_back(e(k + 1, k));
  for (int i = 0; i < c.interval_count(); ++i) p.intervals.push_back(0.5);
  return p;
}

}  // namespace

TEST_CASE("terms") {
  CHECK(omega2_term().form_degree(4) == 9);
  CHECK(omega2_term().configuration_dimension(4) == 5);
  CHECK(omega1_term().configuration_dimension(4) == 8);
  CHECK(omega1_term().form_degree(4) == 12);
  CHECK(ccl_chord_term().coefficient == Rational(1, 4));
  CHECK(ccl_tripod_term().coefficient == Rational(-1, 3));
  IntegralTerm bad{"bad", Rational(1), 3, 0, {{1, 4}}};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad.thetas = {{2, 2}};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("regions partition ordered configurations") {
  const auto t = tbar();
  const double eps = knots::constants().epsilon;
  CHECK(classify_region(t, t, eps) == RegionLabel{5, 0});
  CHECK(classify_region({0.2, 0.3, 0.5, 0.7, 0.9}, t, eps) == RegionLabel{5, 1});
  CHECK(classify_region({0.1, 0.3, 0.5, 0.6, 0.65}, t, eps).str() == "C5(4)");
  CHECK(classify_region(t, t, eps).str() == "C5c");
  CHECK_THROWS_AS(classify_region({0.3, 0.2, 0.5, 0.7, 0.9}, t, eps), std::invalid_argument);
  // four points never fill five windows
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> s{t[0] + 0.01 * (2 * U(rng) - 1), U(rng), U(rng), U(rng)};
    std::sort(s.begin(), s.end());
    const auto r = classify_region(s, t, eps);
    CHECK(r.points == 4);
    CHECK(r.index >= 1);
  }
}

TEST_CASE("sphere densities integrate to one") {
  using boost::math::quadrature::gauss_kronrod;
  for (int d : {3, 4, 6})
    for (double kappa : {0.0, 10.0, 50.0}) {
      const AlphaSpec a{kappa, {}};
      // zonal: area(S^{d-2}) * int rho(x) (1 - x^2)^{(d-3)/2} dx
      auto f = [&](double x) {
        Vec v = Vec::Zero(d);
        v[d - 1] = x;
        v[0] = std::sqrt(std::max(0.0, 1 - x * x));
        return a.density(v) * std::pow(1 - x * x, 0.5 * (d - 3));
      };
      const double I = sphere_area(d - 2) * gauss_kronrod<double, 61>::integrate(f, -1.0, 1.0, 15, 1e-13);
      INFO("d=" << d << " kappa=" << kappa);
      CHECK(std::abs(I - 1) < 1e-6);
      std::mt19937_64 rng(1);
      std::normal_distribution<double> N(0, 1);
      for (int i = 0; i < 20; ++i) {
        Vec v(d);
        for (int j = 0; j < d; ++j) v[j] = N(rng);
        v.normalize();
        CHECK(a.density(v) == a.density(-v));
      }
    }
  CHECK(sphere_area(2) == doctest::Approx(4 * std::numbers::pi));
  CHECK_THROWS_AS(AlphaSpec::log_normalizer(4, -1), std::invalid_argument);
}

TEST_CASE("tangent bases are oriented") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> N(0, 1);
  for (int n : {2, 3, 5}) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = N(rng);
    v.normalize();
    const auto B = tangent_basis(v);
    Eigen::MatrixXd M(n, n);
    M.col(0) = v;
    M.rightCols(n - 1) = B;
    CHECK(M.determinant() == doctest::Approx(1.0));
  }
}

TEST_CASE("Gauss map on the family") {
  const auto& f = family_d4();
  const auto t = tbar();
  const auto term = omega2_term();
  // M1 at s = t, v = e_d
  const auto phi = gauss_map(term, t, *f.charts[0], north(*f.charts[0]));
  for (const auto& v : phi) CHECK((v - e(4, 3)).norm() < 1e-12);
  // antisymmetry
  IntegralTerm flipped = term;
  for (auto& [i, j] : flipped.thetas) std::swap(i, j);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 20; ++k) {
    const auto p = f.charts[0]->sample(rng);
    const auto a = gauss_map(term, t, *f.charts[0], p);
    const auto b = gauss_map(flipped, t, *f.charts[0], p);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(std::abs(a[i].norm() - 1) < 1e-12);
      CHECK((a[i] + b[i]).norm() == 0.0);
    }
  }
  // M2 at s = t never starts with e_d
  for (int k = 0; k < 200; ++k) {
    const auto p = f.charts[1]->sample(rng);
    CHECK((gauss_map(term, t, *f.charts[1], p)[0] - e(4, 3)).norm() > 1e-3);
  }
  // coincident points
  CHECK_THROWS_AS(gauss_map(IntegralTerm{"c", Rational(1), 2, 0, {{1, 2}}}, {0.3, 0.3}, f.charts[0]->curve(north(*f.charts[0]))),
                  std::domain_error);
}

TEST_CASE("vanishing table") {
  auto find = [](const std::vector<VanishingRow>& rows, const std::string& region, const std::string& chart) {
    for (const auto& r : rows)
      if (r.term == "omega2" && r.region == region && r.chart.rfind(chart, 0) == 0) return r;
    FAIL("row missing");
    return VanishingRow{};
  };
  const auto rows = vanishing_report(4);
  const auto r = find(rows, "C5(3)", "M1");
  CHECK(r.factor_dimension == 7);
  CHECK(r.required_dimension == 9);
  CHECK(r.verdict == "vanishes");
  CHECK(find(rows, "C5(1)", "W2/W3").factor_dimension == 5);
  for (const auto& row : vanishing_report(3)) CHECK(row.verdict == "not applicable");
  for (int d : {4, 6, 8})
    for (const auto& row : vanishing_report(d)) CHECK(row.verdict == "vanishes");
}

TEST_CASE("intersection count") {
  const auto& f = family_d4();
  const auto t = tbar();
  const double eps = knots::constants().epsilon;
  CountOptions co;
  co.candidates = 20000;
  co.newton_starts = 24;
  const auto rep = intersection_count({f.charts[0], f.charts[1]}, omega2_term(), t, eps, {}, co);
  REQUIRE(rep.roots.size() == 1);
  const auto& root = rep.roots[0];
  CHECK(root.chart == 0);
  CHECK(root.residual < 1e-10);
  CHECK(std::abs(root.det) > 1e-6);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(root.s[i] - t[i]) < 1e-8);
  CHECK(std::abs(rep.signed_count) == 1);
  CHECK(rep.per_chart[1] == 0);
  // a slightly tilted regular value gives the same degree
  const Vec y = (e(4, 3) + 0.02 * e(4, 0) - 0.01 * e(4, 1)).normalized();
  const auto tilted = intersection_count({f.charts[0]}, omega2_term(), t, eps, {y, y, y}, co);
  CHECK(tilted.signed_count == rep.signed_count);
  // non-square systems are refused
  CHECK_THROWS_AS(intersection_count({f.charts[0]}, ccl_chord_term(), {0.1, 0.3, 0.5, 0.7}, eps, {}, co),
                  std::invalid_argument);
}

TEST_CASE("omega on the d = 4 family") {
  const auto rep = evaluate_omega(family_d4(), Method::count);
  CHECK(rep.ok);
  CHECK(std::abs(rep.value) == 2);
  CHECK(rep.count.roots.size() == 1);
}

TEST_CASE("Monte Carlo") {
  const auto& f = family_d4();
  const auto t = tbar();
  const double eps = knots::constants().epsilon;
  MonteCarloOptions mo;
  mo.samples = 20000;
  mo.mode_search = {8000, 16, 60, 1e-12, 11};
  const auto r = monte_carlo(*f.charts[0], omega2_term(), {50, {}}, {5, 0}, t, eps, mo);
  CHECK(r.modes == 8);
  CHECK(std::abs(std::abs(r.estimate) - 1) < 0.1);
  CHECK(r.standard_error < 0.05);
  // deterministic whatever the worker count
  setenv("KNOTCYCLE_THREADS", "1", 1);
  const auto a = monte_carlo(*f.charts[0], omega2_term(), {50, {}}, {5, 0}, t, eps, mo);
  setenv("KNOTCYCLE_THREADS", "3", 1);
  const auto b = monte_carlo(*f.charts[0], omega2_term(), {50, {}}, {5, 0}, t, eps, mo);
  unsetenv("KNOTCYCLE_THREADS");
  CHECK(a.estimate == b.estimate);
  CHECK(a.standard_error == b.standard_error);
  // no preimage on M2
  const auto z = monte_carlo(*f.charts[1], omega2_term(), {50, {}}, {5, 0}, t, eps, mo);
  CHECK(std::abs(z.estimate) <= 3 * z.standard_error + 1e-300);
  // degree mismatch
  const auto deg = monte_carlo(*f.charts[0], ccl_chord_term(), {50, {}}, {4, 0}, {0.1, 0.3, 0.5, 0.7}, eps, mo);
  CHECK(deg.degenerate_degree);
  CHECK(deg.estimate == 0);
}

TEST_CASE("the plain VEGAS sampler agrees with zero on M2") {
  const auto& f = family_d4();
  MonteCarloOptions mo;
  mo.samples = 20000;
  mo.sampler = Sampler::vegas;
  const auto z = monte_carlo(*f.charts[1], omega2_term(), {50, {}}, {5, 0}, tbar(), knots::constants().epsilon, mo);
  CHECK(std::abs(z.estimate) <= 3 * z.standard_error + 1e-300);
}

TEST_CASE("classical cycle") {
  for (int d : {4, 5}) {
    const auto r = ccl_check(d);
    CHECK(std::abs(r.chord_count) == 1);
    CHECK(r.tripod_vanishes);
    CHECK(r.value != 0);
    REQUIRE(r.chord_roots.size() == 1);
    CHECK(r.chord_roots[0].residual < 1e-10);
  }
}

// Off M1 the smooth form still leaks a tail e^-O(kappa): two independent
// samplers agree it is nonzero at small kappa, and it shrinks as kappa grows.
TEST_CASE("chart integrals off M1 are a small positive tail, not zero") {
  const auto& f = family_d4();
  const auto t = tbar();
  const double eps = knots::constants().epsilon;
  MonteCarloOptions mo;
  mo.samples = 100000;
  mo.seed = 21;
  const auto m5 = monte_carlo(*f.charts[3], omega2_term(), {5, {}}, {5, 0}, t, eps, mo);
  mo.sampler = Sampler::vegas;
  const auto v5 = monte_carlo(*f.charts[3], omega2_term(), {5, {}}, {5, 0}, t, eps, mo);
  mo.sampler = Sampler::modes;
  const auto m10 = monte_carlo(*f.charts[3], omega2_term(), {10, {}}, {5, 0}, t, eps, mo);
  INFO("modes " << m5.estimate << " +- " << m5.standard_error << ", vegas " << v5.estimate << " +- "
                << v5.standard_error << ", kappa 10 " << m10.estimate);
  CHECK(m5.modes == 0);
  CHECK(m5.estimate > 5 * m5.standard_error);
  CHECK(v5.estimate > 3 * v5.standard_error);
  CHECK(std::abs(m5.estimate - v5.estimate) < 4 * std::hypot(m5.standard_error, v5.standard_error));
  CHECK(m10.estimate < 0.1 * m5.estimate);
}
