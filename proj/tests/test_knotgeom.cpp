#include "knotcycle/knotgeom.hpp"

#include <doctest.h>

#include <fstream>
#include <random>

using namespace knotcycle;
using namespace knotcycle::knots;

namespace {

Vec unit(int d, int i) {
  Vec v = Vec::Zero(d);
  v[i] = 1;
  return v;
}

std::vector<SingularKnotSpec> k1_to_k10(int d) {
  const auto b = build_base_knots(d);
  std::vector<SingularKnotSpec> ks{b.k1, b.k2};
  for (auto& s : derive_satellites(b)) ks.push_back(s);
  return ks;
}

nlohmann::json load(const std::string& name) {
  std::ifstream in(std::string(KNOTCYCLE_FIXTURE_DIR) + "/" + name);
  REQUIRE(in);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("bump peaks at 1 and vanishes outside its support") {
  CHECK(bump(0.3, 0.3, 0.01) == doctest::Approx(1.0));
  CHECK(bump(0.31, 0.3, 0.01) == 0.0);
  CHECK(bump(0.2899, 0.3, 0.01) == 0.0);
  // derivative against a central difference
  const double h = 1e-7, t = 0.3043;
  CHECK(bump_derivative(t, 0.3, 0.01) ==
        doctest::Approx((bump(t + h, 0.3, 0.01) - bump(t - h, 0.3, 0.01)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("resolution is linear in a v and local") {
  const auto b = build_base_knots(5);
  const auto& k = b.k1;
  const double e = constants().epsilon;
  const Vec v = unit(5, 3), w = (unit(5, 4) + unit(5, 3)).normalized();
  const double a = 0.03, a2 = 0.05;
  const auto twice = resolve(resolve(k.curve, k.times[2], {v, a, e}), k.times[2], {w, a2, e});
  const Vec sum = a * v + a2 * w;
  const auto once = resolve(k.curve, k.times[2], {sum.normalized(), sum.norm(), e});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < 400; ++i) {
    const double t = i < 200 ? k.times[2] + e * (2 * U(rng) - 1) : U(rng);
    CHECK((twice.point(t) - once.point(t)).norm() < 1e-14);
    if (std::abs(t - k.times[2]) >= e) CHECK((once.point(t) - k.curve.point(t)).norm() == 0.0);
  }
  CHECK_THROWS_AS(resolve(k, 3, {v, a, 2 * e}), std::invalid_argument);
  CHECK_THROWS_AS(resolve(k, 3, {2 * v, a, e}), std::invalid_argument);
}

TEST_CASE("K1..K10 respect their expressions strictly") {
  RespectOptions ro;
  ro.strict = true;
  for (int d : {4, 6})
    for (const auto& k : k1_to_k10(d)) {
      const auto v = check_respects(k.curve, k.times, k.expression, ro);
      INFO(k.label << " d=" << d << ": " << v.detail);
      CHECK(v.ok);
    }
  const auto ccl = build_two_double_point_knot(4);
  CHECK(check_respects(ccl.curve, ccl.times, ccl.expression, ro).ok);
}

TEST_CASE("d = 4 base knots sit in R^3") {
  for (const auto& k : k1_to_k10(4))
    for (const auto& p : sample(k.curve, 500)) CHECK(p[3] == 0.0);
}

TEST_CASE("a resolved K1 is not singular any more") {
  const auto b = build_base_knots(4);
  const auto& k = b.k1;
  const double e = constants().epsilon;
  RespectOptions ro;
  const auto c = resolve(k.curve, k.times[1], {unit(4, 3), constants().a_double, e});
  CHECK_FALSE(check_respects(c, k.times, k.expression, ro).ok);
}

TEST_CASE("shipped knot fixtures match the construction") {
  for (const auto& k : k1_to_k10(4)) {
    const auto f = knot_from_json(load("knots/" + k.label + "_d4.json"));
    CHECK(f.label == k.label);
    CHECK(f.times == k.times);
    CHECK(f.expression == k.expression);
    for (int i = 0; i <= 500; ++i) {
      const double t = i / 500.0;
      CHECK((f.curve.point(t) - k.curve.point(t)).norm() < 1e-12);
    }
  }
}

TEST_CASE("malformed knot fixtures report where") {
  auto j = load("knots/K1_d4.json");
  auto bad = j;
  bad.erase("times");
  CHECK_THROWS_WITH_AS(knot_from_json(bad), doctest::Contains("missing key \"times\""), std::invalid_argument);
  bad = j;
  bad["tangents"][2][0] = 0.3;
  CHECK_THROWS_WITH_AS(knot_from_json(bad), doctest::Contains("$.tangents[2]"), std::invalid_argument);
  bad = j;
  bad["windows"][1]["time"] = "x";
  CHECK_THROWS_WITH_AS(knot_from_json(bad), doctest::Contains("$.windows[1].time"), std::invalid_argument);
  // round trip
  const auto k = knot_from_json(j);
  CHECK(to_json(k) == j);
}
