#pragma once

#include <vector>

#include "filament/geometry.hpp"

namespace filament {

// Profile G_a of the self-similar family chi(s,t) = sqrt(t) G(s / sqrt(t)),
// sampled on the symmetric grid [-s_max, s_max] with its Frenet frames.
struct SelfSimilarProfile {
  double a = 0.0;
  double s_max = 0.0;
  Curve curve;
  UnitVec3 A_plus{Vec3{1.0, 0.0, 0.0}};
  UnitVec3 A_minus{Vec3{1.0, 0.0, 0.0}};
  double a1_estimate = 1.0;
  double a1_error_bound = 0.0;  // 2a / s_max, unconditional
};

// Output spacing used when cfg.output_spacing is left at 0.
inline constexpr double kDefaultProfileSpacing = 0.01;

SelfSimilarProfile profile(double a, double s_max, const SolverConfig& cfg = {});

struct CornerAngle {
  double a1;     // exp(-pi a^2 / 2)
  double gamma;  // angle between A+ and -A-
};

CornerAngle corner_angle(double a);

// sqrt(t) G(s / sqrt(t)) for t > 0, the V-shaped limit s A± at t = 0.
Vec3 chi(const SelfSimilarProfile& p, double s, double t);

// Positive zeros of the first component of G, i.e. the self-intersection
// parameters (G(s) = G(-s) there by parity).
std::vector<double> self_intersections(const SelfSimilarProfile& p, const SolverConfig& cfg = {});

}  // namespace filament
