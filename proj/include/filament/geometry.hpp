#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "filament/ode.hpp"
#include "filament/vec3.hpp"

namespace filament {

using ScalarFn = std::function<double(double)>;

struct Interval {
  double from = 0.0;
  double to = 0.0;
};

// Sampled space curve. When `frames` is non-empty it has one entry per point
// and the curve is expected to be parametrized by arclength.
struct Curve {
  std::vector<double> s_grid;
  std::vector<Vec3> points;
  std::vector<FrenetFrame> frames;

  std::size_t size() const { return s_grid.size(); }
  bool has_frames() const { return !frames.empty(); }
  double spacing() const { return s_grid.size() > 1 ? s_grid[1] - s_grid[0] : 0.0; }

  // Throws GridNonUniform / InvalidParameter when the invariants fail.
  void validate(double unit_speed_tol = 1e-3) const;
};

struct FrameSample {
  double s;
  FrenetFrame frame;
};

// Integrates T' = c n, n' = -c T + tau b, b' = -tau n with classical RK4 and
// modified Gram-Schmidt every cfg.renorm_every steps. The step is the smaller
// of cfg.step and cfg.max_phase_step / max(c + |tau|) sampled on the span.
std::vector<FrameSample> frenet_integrate(const ScalarFn& c, const ScalarFn& tau, const FrenetFrame& frame0,
                                          Interval span, const SolverConfig& cfg);

// Same system with the position chi' = T carried along; returns the sampled
// curve on [span.from, span.to] (ordered as integrated).
Curve frenet_integrate_curve(const ScalarFn& c, const ScalarFn& tau, const FrenetFrame& frame0, const Vec3& point0,
                             Interval span, const SolverConfig& cfg);

struct TangentSample {
  double s;
  Vec3 T;
};

// Composite-Simpson antiderivative of T on a uniform grid, starting at `base`.
Curve curve_from_tangent(std::span<const TangentSample> tangents, const Vec3& base);

// Single time slice of curvature/torsion. Torsion is flagged (not invented)
// wherever the curvature falls below `kCurvatureThreshold`.
struct IntrinsicSlice {
  std::vector<double> s;
  std::vector<double> c;
  std::vector<double> tau;
  std::vector<bool> tau_valid;

  std::size_t flagged() const;
};

inline constexpr double kCurvatureThreshold = 1e-6;

IntrinsicSlice curvature_torsion_from_curve(const Curve& curve);

// max over interior nodes of |chi_t - chi_s x chi_ss| with a three-point
// (possibly non-uniform) time difference and central differences in s.
double bf_residual(const Curve& prev, const Curve& mid, const Curve& next, double t_prev, double t_mid, double t_next);

// Finite-difference weights (Fornberg) for derivative `order` at x0 from nodes x.
std::vector<double> fd_weights(double x0, std::span<const double> x, int order);

// Cubic Hermite interpolation of a curve with frames (uses T as derivative).
Vec3 hermite_point(const Curve& curve, double s);

void write_curve_csv(const Curve& curve, const std::string& path);

}  // namespace filament
