#include "shared_family.hpp"

#include <doctest.h>

#include <random>

using namespace knotcycle;
using namespace knotcycle::knots;

TEST_CASE("complement frames are orthonormal and orthogonal to the span") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N(0, 1);
  for (int d : {4, 5, 7}) {
    std::vector<Vec> vs;
    for (int k = 0; k < 2; ++k) {
      Vec v(d);
      for (int i = 0; i < d; ++i) v[i] = N(rng);
      vs.push_back(v);
    }
    const auto F = complement_frame(vs, d);
    CHECK(F.cols() == d - 2);
    CHECK((F.transpose() * F - Eigen::MatrixXd::Identity(d - 2, d - 2)).norm() < 1e-12);
    for (const auto& v : vs) CHECK((F.transpose() * v).norm() < 1e-12 * v.norm());
    // a small change of span keeps the continued frame close
    auto ws = vs;
    ws[0][0] += 1e-4;
    const auto G = continue_frame(F, ws);
    CHECK((G - F).norm() < 1e-2);
    CHECK((G.transpose() * ws[0]).norm() < 1e-12 * ws[0].norm());
  }
}

TEST_CASE("family dimensions") {
  const auto& f = family_d4();
  CHECK(f.charts.size() == 6);
  CHECK(f.gluings.size() == 8);
  CHECK(f.dimension() == 3 * 4 - 8);
  for (const auto& c : f.charts) CHECK(c->dimension() == 4);
  CHECK(f.charts[0]->sphere_dims() == std::vector<int>{2, 1, 1});
  CHECK(f.charts[2]->interval_count() == 1);
  const auto w3 = build_family(4, f.isotopies, Variant::W3);
  CHECK(w3.dimension() == 4 + 2);
  CHECK(build_family(4, f.isotopies, Variant::W1).dimension() == 5);
  CHECK(build_family(4, f.isotopies, Variant::double_prime).dimension() == 4);
}

TEST_CASE("boundary gluings match, and a perturbed family does not") {
  const auto& f = family_d4();
  const auto r = boundary_match_check(f, 20, 1e-9, 3);
  CHECK(r.ok);
  CHECK(r.worst < 1e-9);
  const auto bad = boundary_match_check(f, 5, 1e-9, 3, 1.01);
  CHECK_FALSE(bad.ok);
  for (auto v : {Variant::prime, Variant::double_prime, Variant::W1, Variant::W2, Variant::W3}) {
    INFO(variant_name(v));
    CHECK(boundary_match_check(build_family(4, f.isotopies, v), 5, 1e-9, 4).ok);
  }
}

TEST_CASE("chart samples are embeddings with strands inside the 1/10 balls") {
  const auto& f = family_d4();
  std::mt19937_64 rng(11);
  for (const auto& c : f.charts) {
    // Satellites carry the triple-point strand bumped by exactly 1/10 over
    // +-epsilon, so a window around its new double point runs back down the
    // bump: sqrt(0.1^2 + (2.5 eps)^2) ~ 0.103 at the faces, a little more
    // while that strand is elevated. M1 and M2 sit on straight strands.
    const double ball = c->interval_count() == 0 ? 0.1 : 0.11;
    for (int i = 0; i < 40; ++i) {
      const auto p = c->sample(rng);
      const auto v = check_chart_point(*c, p);
      INFO(c->label() << ": " << v.detail);
      CHECK(v.ok);
      const auto base = c->base(p);
      const auto curve = c->curve(p);
      for (const auto& m : c->moves(p)) {
        CHECK(m.amplitude <= 0.1 + 1e-15);
        const double t = base.times[static_cast<std::size_t>(m.variable - 1)];
        const Vec centre = base.curve.point(t);
        for (int k = -10; k <= 10; ++k) {
          const double s = t + m.halfwidth * k / 10.0;
          CHECK((curve.point(s) - centre).norm() <= ball + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("the base point of M1 at v = e_d resolves K1") {
  const auto& f = family_d4();
  const auto& m1 = *f.charts[0];
  ChartPoint p;
  for (int k : m1.sphere_dims()) {
    Vec v = Vec::Zero(k + 1);
    v[k] = 1;
    p.spheres.push_back(v);
  }
  CHECK(m1.in_domain(p));
  // every moved strand goes along e_4
  for (const auto& m : m1.moves(p)) CHECK(std::abs(m.direction[3]) == doctest::Approx(1.0));
}

TEST_CASE("one isotopy respects its expression along the way") {
  const auto& f = family_d4();
  const auto v = f.isotopies[1]->verify(40);
  INFO(v.detail);
  CHECK(v.ok);
}
