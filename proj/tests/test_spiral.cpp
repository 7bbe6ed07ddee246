#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "filament/selfsimilar.hpp"
#include "filament/spiral.hpp"

using namespace filament;

namespace {

const UnitVec3 e1{Vec3{1.0, 0.0, 0.0}};

SpiralParams params(double mu, double a) { return SpiralParams::make(mu, Vec3{0.0, 0.0, 2.0 * a}, e1); }

double profile_energy(const SpiralProfile& p, std::size_t i, double nu) {
  const double c2 = p.c2[i];
  const double y = p.y[i];
  const double h = p.h[i];
  return (0.25 * y * y + h * h) / c2 + 0.25 * (c2 + nu) * (c2 + nu);
}

}  // namespace

TEST_CASE("parameters: constraint and derived nu") {
  const Vec3 G0{0.3, -0.2, 0.8};
  const double mu = 0.4;
  const Vec3 g{G0.x - mu * G0.y, G0.y + mu * G0.x, G0.z};
  const Vec3 t = cross(g, Vec3{0.0, 0.0, 1.0});
  const UnitVec3 T0 = UnitVec3::normalized(t);
  const SpiralParams p = SpiralParams::make(mu, G0, T0);
  CHECK(p.nu == doctest::Approx(-mu * T0[2] - 0.25 * dot(g, g)));
  CHECK_THROWS_AS(SpiralParams::make(mu, G0, UnitVec3::normalized(g)), Error);
  CHECK(distance(spiral_apply(mu, Vec3{1.0, 2.0, 3.0}), Vec3{1.0 - 2.0 * mu, 2.0 + mu, 3.0}) < 1e-15);
}

TEST_CASE("zero rotation reproduces the self-similar profile") {
  const double a = 0.5;
  const SpiralProfile sp = spiral_profile(params(0.0, a), {-20.0, 20.0});
  const SelfSimilarProfile ss = profile(a, 20.0);
  REQUIRE(sp.curve.size() == ss.curve.size());
  double err = 0.0;
  for (std::size_t i = 0; i < ss.curve.size(); ++i) {
    CHECK(sp.curve.s_grid[i] == doctest::Approx(ss.curve.s_grid[i]));
    err = std::max(err, distance(sp.curve.points[i], ss.curve.points[i]));
    err = std::max(err, distance(sp.curve.frames[i].T, ss.curve.frames[i].T));
  }
  CHECK(err <= 1e-6);
  for (double c2 : sp.c2) CHECK(c2 == doctest::Approx(a * a));
}

TEST_CASE("unit speed, lemma and energy over |s| <= 100") {
  for (double mu : {0.3, -0.7}) {
    const SpiralParams p = params(mu, 0.5);
    const SpiralProfile sp = spiral_profile(p, {-100.0, 100.0});
    CHECK(sp.speed_defect <= 1e-8);
    CHECK(sp.lemma_residual <= 1e-8);
    const double e0 = spiral_energy(p);
    const std::size_t mid = sp.curve.size() / 2;
    CHECK(sp.curve.s_grid[mid] == 0.0);
    CHECK(profile_energy(sp, mid, p.nu) == doctest::Approx(e0).epsilon(1e-12));
    double drift = 0.0;
    for (std::size_t i = 0; i < sp.curve.size(); ++i) drift = std::max(drift, std::abs(profile_energy(sp, i, p.nu) - e0) / e0);
    CHECK(drift <= 1e-8);
  }
}

TEST_CASE("(y, h) system follows the profile") {
  const SpiralParams p = params(0.3, 0.5);
  const SpiralProfile sp = spiral_profile(p, {-30.0, 30.0});
  const std::size_t mid = sp.curve.size() / 2;
  const double e0 = spiral_energy(p);
  for (double end : {30.0, -30.0}) {
    const auto yh = yh_evolve(sp.y[mid], sp.h[mid], sp.c2[mid], p.nu, e0, {0.0, end});
    CHECK(yh.size() == mid + 1);
    double err = 0.0;
    for (std::size_t j = 0; j < yh.size(); ++j) {
      const std::size_t i = end > 0.0 ? mid + j : mid - j;
      CHECK(yh[j].s == doctest::Approx(sp.curve.s_grid[i]));
      err = std::max({err, std::abs(yh[j].y - sp.y[i]), std::abs(yh[j].h - sp.h[i]), std::abs(yh[j].c2 - sp.c2[i])});
    }
    CHECK(err < 1e-6);
  }
}

TEST_CASE("f equation: energy, constant states and agreement with the profile") {
  const SpiralParams p = params(0.3, 0.5);
  const SpiralProfile sp = spiral_profile(p, {-20.0, 20.0});
  const std::size_t mid = sp.curve.size() / 2;
  // f = c exp(i int (tau - s/2)), so f(0) = c(0) and f'(0) = c'(0) + i c(0) (tau(0)).
  const double c0 = std::sqrt(sp.c2[mid]);
  const std::complex<double> f0{c0, 0.0};
  const std::complex<double> fp0{sp.y[mid] / (2.0 * c0), sp.h[mid] / c0};
  const auto f = f_solve(f0, fp0, p.nu, {0.0, 20.0});
  CHECK(f_energy(f.front(), p.nu) == doctest::Approx(spiral_energy(p)).epsilon(1e-12));
  double drift = 0.0;
  double err = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    drift = std::max(drift, std::abs(f_energy(f[j], p.nu) - f_energy(f.front(), p.nu)));
    err = std::max(err, std::abs(std::norm(f[j].f) - sp.c2[mid + j]));
  }
  CHECK(drift <= 1e-8 * f_energy(f.front(), p.nu));
  CHECK(err < 1e-6);

  const auto wide = f_solve(f0, fp0, p.nu, {0.0, -100.0});
  double wide_drift = 0.0;
  for (const FState& st : wide) wide_drift = std::max(wide_drift, std::abs(f_energy(st, p.nu) - f_energy(wide.front(), p.nu)));
  CHECK(wide_drift <= 1e-8 * f_energy(wide.front(), p.nu));

  // |f|^2 = -nu with f' = 0 is a fixed point.
  const auto still = f_solve({0.0, std::sqrt(0.3)}, {0.0, 0.0}, -0.3, {0.0, 10.0});
  CHECK(std::abs(still.back().f - std::complex<double>{0.0, std::sqrt(0.3)}) < 1e-14);
}

TEST_CASE("spiral family: scaling, rotation and the binormal flow") {
  const double mu = 0.3;
  const SpiralParams p = params(mu, 0.5);
  const SpiralProfile sp = spiral_profile(p, {-30.0, 30.0});
  CHECK(distance(spiral_chi(p, sp, 0.0, 1.0), Vec3{0.0, 0.0, 1.0}) < 1e-14);
  const Vec3 g = sp.curve.points[sp.curve.size() / 2 + 100];  // s = 1
  const Vec3 r = spiral_chi(p, sp, 2.0, 4.0);
  const double ang = 0.5 * mu * std::log(4.0);
  CHECK(distance(r, 2.0 * Vec3{std::cos(ang) * g.x - std::sin(ang) * g.y, std::sin(ang) * g.x + std::cos(ang) * g.y, g.z}) <
        1e-12);

  auto slice = [&](double t) {
    Curve c;
    for (int i = 0; i <= 400; ++i) {
      const double s = -2.0 + 0.01 * i;
      c.s_grid.push_back(s);
      c.points.push_back(spiral_chi(p, sp, s, t));
    }
    return c;
  };
  const double h = 0.01;
  CHECK(bf_residual(slice(1.0 - h), slice(1.0), slice(1.0 + h), 1.0 - h, 1.0, 1.0 + h) < 2e-3);
  CHECK_THROWS_AS(spiral_chi(p, sp, 1.0, 0.0), Error);
  CHECK_THROWS_AS(spiral_profile(p, {1.0, 2.0}), Error);
}
