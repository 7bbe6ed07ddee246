#pragma once

#include <complex>
#include <vector>

#include "filament/geometry.hpp"

namespace filament {

// Rotating self-similar family chi = exp((A/2) log t) sqrt(t) G(s/sqrt(t))
// with A the rotation generator of rate mu in the xy-plane.
struct SpiralParams {
  double mu = 0.0;
  Vec3 G0;
  UnitVec3 T0{Vec3{1.0, 0.0, 0.0}};
  double nu = 0.0;  // derived: -mu T0_z - |(I+A) G0|^2 / 4

  // Checks (I+A) G0 . T0 = 0 and derives nu.
  static SpiralParams make(double mu, const Vec3& G0, const UnitVec3& T0);
};

// (I + A) v.
Vec3 spiral_apply(double mu, const Vec3& v);

struct SpiralProfile {
  Curve curve;                  // G with Frenet frames of G
  std::vector<double> c2;       // |T'|^2
  std::vector<double> y;        // d|T'|^2/ds
  std::vector<double> h;        // |T'|^2 (tau - s/2)
  double speed_defect = 0.0;    // max | |G'| - 1 |
  double lemma_residual = 0.0;  // max | |T'|^2 + mu T_z + nu |
};

SpiralProfile spiral_profile(const SpiralParams& params, Interval span, const SolverConfig& cfg = {});

// c'(0)^2 + c(0)^2 tau(0)^2 + (c(0)^2 + nu)^2 / 4 from the initial data.
double spiral_energy(const SpiralParams& params);

struct YHState {
  double s = 0.0;
  double y = 0.0;
  double h = 0.0;
  double c2 = 0.0;  // integrated alongside, c2' = y
};

std::vector<YHState> yh_evolve(double y0, double h0, double c2_0, double nu, double E0, Interval span,
                               const SolverConfig& cfg = {});

struct FState {
  double s = 0.0;
  std::complex<double> f;
  std::complex<double> f_prime;
};

// f'' + i (s/2) f' + (f/2)(|f|^2 + nu) = 0.
std::vector<FState> f_solve(std::complex<double> f0, std::complex<double> f0_prime, double nu, Interval span,
                            const SolverConfig& cfg = {});

// |f'|^2 + (|f|^2 + nu)^2 / 4.
double f_energy(const FState& st, double nu);

Vec3 spiral_chi(const SpiralParams& params, const SpiralProfile& profile, double s, double t);

}  // namespace filament
