#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "filament/selfsimilar.hpp"

using namespace filament;

namespace {

double exact_a1(double a) { return std::exp(-std::numbers::pi * a * a / 2.0); }

}  // namespace

TEST_CASE("corner angle closed form") {
  for (double a : {0.0, 0.25, 0.5, 1.0, 2.0}) {
    const CornerAngle ca = corner_angle(a);
    CHECK(ca.a1 == doctest::Approx(exact_a1(a)).epsilon(1e-15));
    CHECK(ca.gamma == doctest::Approx(2.0 * std::asin(exact_a1(a))).epsilon(1e-15));
  }
  // Rounded published values.
  CHECK(std::abs(corner_angle(0.25).a1 - 0.90651) < 2e-5);
  CHECK(std::abs(corner_angle(0.5).a1 - 0.67517) < 1e-4);
  CHECK(std::abs(corner_angle(1.0).a1 - 0.20788) < 1e-5);
  CHECK_THROWS_AS(corner_angle(-1.0), Error);
}

TEST_CASE("profile modulus and parity") {
  for (double a : {0.25, 0.5, 1.0}) {
    const SelfSimilarProfile p = profile(a, 30.0);
    const std::size_t n = p.curve.size();
    REQUIRE(n % 2 == 1);
    CHECK(p.curve.s_grid[n / 2] == 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = p.curve.s_grid[i];
      const Vec3& g = p.curve.points[i];
      CHECK(dot(g, g) == doctest::Approx(s * s + 4.0 * a * a).epsilon(1e-10));
      const Vec3& m = p.curve.points[n - 1 - i];
      CHECK(p.curve.s_grid[n - 1 - i] == doctest::Approx(-s));
      CHECK(distance(g, Vec3{-m.x, m.y, m.z}) < 1e-10);
    }
    CHECK(p.A_plus[0] == doctest::Approx(p.A_minus[0]));
    CHECK(p.A_plus[1] == doctest::Approx(-p.A_minus[1]));
  }
}

TEST_CASE("profile satisfies G = s T + 2a b") {
  const double a = 0.7;
  const SelfSimilarProfile p = profile(a, 20.0);
  for (std::size_t i = 0; i < p.curve.size(); i += 13) {
    const auto& f = p.curve.frames[i];
    const Vec3 g = p.curve.s_grid[i] * f.T + 2.0 * a * f.b;
    CHECK(distance(g, p.curve.points[i]) < 1e-9);
  }
}

TEST_CASE("zero curvature gives the straight line") {
  const SelfSimilarProfile p = profile(0.0, 10.0);
  for (std::size_t i = 0; i < p.curve.size(); ++i) {
    CHECK(distance(p.curve.points[i], Vec3{p.curve.s_grid[i], 0.0, 0.0}) < 1e-11);
  }
  CHECK(p.a1_estimate == doctest::Approx(1.0));
  CHECK(self_intersections(p).empty());
}

TEST_CASE("angle law within the reported error bound") {
  for (double a : {0.25, 0.5, 1.0}) {
    const SelfSimilarProfile p = profile(a, 400.0);
    CHECK(p.a1_error_bound == doctest::Approx(2.0 * a / 400.0));
    CHECK(std::abs(p.a1_estimate - exact_a1(a)) <= p.a1_error_bound);
    CHECK(std::abs(p.a1_estimate - exact_a1(a)) < 1e-3);
  }
}

TEST_CASE("a1 estimate decreases strictly in a") {
  double prev = 2.0;
  for (double a : {0.25, 0.5, 1.0, 1.5, 2.0}) {
    const double est = profile(a, 200.0).a1_estimate;
    CHECK(est < prev);
    prev = est;
  }
}

TEST_CASE("self-similar curve stays within 2a sqrt(t) of its cone") {
  const double a = 0.5;
  const SelfSimilarProfile p = profile(a, 60.0);
  for (double t : {1.0, 0.25, 0.01}) {
    const double bound = 2.0 * a * std::sqrt(t);
    for (int i = -500; i <= 500; ++i) {
      const double s = 0.01 * i;
      const Vec3 cone = (s >= 0.0 ? p.A_plus.vec() : p.A_minus.vec()) * s;
      const double d = distance(chi(p, s, t), cone);
      if (i == 0) {
        CHECK(d == doctest::Approx(bound).epsilon(1e-12));
      } else {
        CHECK(d < bound);
      }
    }
  }
}

TEST_CASE("chi scaling and the t = 0 limit") {
  const double a = 0.4;
  const SelfSimilarProfile p = profile(a, 50.0);
  CHECK(distance(chi(p, 1.5, 0.0), 1.5 * p.A_plus.vec()) < 1e-15);
  CHECK(distance(chi(p, -2.0, 0.0), -2.0 * p.A_minus.vec()) < 1e-15);
  const std::size_t i = 1234;
  const double s = p.curve.s_grid[i];
  CHECK(distance(chi(p, 0.5 * s, 0.25), 0.5 * p.curve.points[i]) < 1e-12);
  CHECK_THROWS_AS(chi(p, 10.0, 0.01), Error);
  CHECK_THROWS_AS(chi(p, 1.0, -1.0), Error);
}

TEST_CASE("chi solves the binormal flow") {
  const double a = 0.5;
  const SelfSimilarProfile p = profile(a, 40.0);
  auto slice = [&](double t, double h) {
    Curve c;
    for (int i = 0; i <= static_cast<int>(std::lround(4.0 / h)); ++i) {
      const double s = -2.0 + h * i;
      c.s_grid.push_back(s);
      c.points.push_back(chi(p, s, t));
    }
    return c;
  };
  const double h = 0.01;
  const double r = bf_residual(slice(0.5 - h, h), slice(0.5, h), slice(0.5 + h, h), 0.5 - h, 0.5, 0.5 + h);
  CHECK(r < 2e-3);
}

TEST_CASE("self-intersection dichotomy") {
  const SelfSimilarProfile small = profile(0.1, 100.0);
  CHECK(self_intersections(small).empty());
  const SelfSimilarProfile big = profile(2.0, 100.0);
  const std::vector<double> roots = self_intersections(big);
  REQUIRE(!roots.empty());
  for (double r : roots) {
    CHECK(r > 0.0);
    CHECK(std::abs(hermite_point(big.curve, r).x) < 1e-8);
    CHECK(distance(hermite_point(big.curve, r), hermite_point(big.curve, -r)) < 1e-7);
  }
  for (std::size_t i = 1; i < roots.size(); ++i) CHECK(roots[i] - roots[i - 1] > 1e-8);
}

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(profile(-0.1, 10.0), Error);
  CHECK_THROWS_AS(profile(0.5, 0.0), Error);
  CHECK_THROWS_AS(profile(std::nan(""), 10.0), Error);
}
