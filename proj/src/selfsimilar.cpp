#include "filament/selfsimilar.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace filament {

SelfSimilarProfile profile(double a, double s_max, const SolverConfig& cfg) {
  require(a >= 0.0 && std::isfinite(a), ErrorCode::InvalidParameter, "a must be >= 0");
  require(s_max > 0.0 && std::isfinite(s_max), ErrorCode::InvalidParameter, "s_max must be > 0");
  SolverConfig run = cfg;
  if (run.output_spacing == 0.0) run.output_spacing = kDefaultProfileSpacing;

  const ScalarFn c = [a](double) { return a; };
  const ScalarFn tau = [](double s) { return 0.5 * s; };
  const FrenetFrame frame0 = FrenetFrame::identity();
  const Vec3 G0{0.0, 0.0, 2.0 * a};
  const Curve fwd = frenet_integrate_curve(c, tau, frame0, G0, {0.0, s_max}, run);
  const Curve bwd = frenet_integrate_curve(c, tau, frame0, G0, {0.0, -s_max}, run);

  SelfSimilarProfile p;
  p.a = a;
  p.s_max = s_max;
  Curve& g = p.curve;
  const std::size_t n = fwd.size() + bwd.size() - 1;
  g.s_grid.reserve(n);
  g.points.reserve(n);
  g.frames.reserve(n);
  for (std::size_t i = bwd.size(); i-- > 1;) {
    g.s_grid.push_back(bwd.s_grid[i]);
    g.points.push_back(bwd.points[i]);
    g.frames.push_back(bwd.frames[i]);
  }
  g.s_grid.insert(g.s_grid.end(), fwd.s_grid.begin(), fwd.s_grid.end());
  g.points.insert(g.points.end(), fwd.points.begin(), fwd.points.end());
  g.frames.insert(g.frames.end(), fwd.frames.begin(), fwd.frames.end());

  // |G/S| >= 1, so normalizing is a projection onto the unit ball and keeps
  // the 2a/S error bound.
  p.A_plus = UnitVec3::normalized(g.points.back() / s_max);
  p.A_minus = UnitVec3::normalized(g.points.front() / (-s_max));
  p.a1_estimate = p.A_plus[0];
  p.a1_error_bound = 2.0 * a / s_max;
  return p;
}

CornerAngle corner_angle(double a) {
  require(a >= 0.0 && std::isfinite(a), ErrorCode::InvalidParameter, "a must be >= 0");
  const double a1 = std::exp(-0.5 * std::numbers::pi * a * a);
  return {a1, 2.0 * std::asin(a1)};
}

Vec3 chi(const SelfSimilarProfile& p, double s, double t) {
  require(t >= 0.0 && std::isfinite(t), ErrorCode::InvalidParameter, "t must be >= 0");
  if (t == 0.0) return s >= 0.0 ? s * p.A_plus.vec() : s * p.A_minus.vec();
  const double root = std::sqrt(t);
  const double x = s / root;
  require(std::abs(x) <= p.s_max * (1.0 + 1e-12), ErrorCode::OutOfProfileRange,
          "s / sqrt(t) lies outside the computed profile");
  return root * hermite_point(p.curve, std::clamp(x, -p.s_max, p.s_max));
}

std::vector<double> self_intersections(const SelfSimilarProfile& p, const SolverConfig& cfg) {
  const Curve& g = p.curve;
  const ScalarFn c = [a = p.a](double) { return a; };
  const ScalarFn tau = [](double s) { return 0.5 * s; };
  SolverConfig local = cfg;
  local.output_spacing = 0.0;
  local.step = std::min(cfg.step, 1e-4);
  // First component of G at s, integrated from sample i.
  const auto x_at = [&](std::size_t i, double s) {
    if (s == g.s_grid[i]) return g.points[i].x;
    const Curve piece = frenet_integrate_curve(c, tau, g.frames[i], g.points[i], {g.s_grid[i], s}, local);
    return piece.points.back().x;
  };

  std::vector<double> roots;
  const auto push = [&](double s) {
    if (roots.empty() || s - roots.back() > 1e-8) roots.push_back(s);
  };
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    if (g.s_grid[i + 1] <= 0.0) continue;
    const double x0 = g.points[i].x;
    const double x1 = g.points[i + 1].x;
    if (g.s_grid[i] > 0.0 && x0 == 0.0) {
      push(g.s_grid[i]);
      continue;
    }
    if (g.s_grid[i] < 0.0 || x0 * x1 >= 0.0) continue;
    double lo = g.s_grid[i];
    double hi = g.s_grid[i + 1];
    double f_lo = x0;
    while (hi - lo > 1e-11) {
      const double mid = 0.5 * (lo + hi);
      const double f_mid = x_at(i, mid);
      if (f_mid == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((f_mid < 0.0) == (f_lo < 0.0)) {
        lo = mid;
        f_lo = f_mid;
      } else {
        hi = mid;
      }
    }
    push(0.5 * (lo + hi));
  }
  return roots;
}

}  // namespace filament
