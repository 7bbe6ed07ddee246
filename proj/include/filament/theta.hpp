#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "filament/geometry.hpp"

namespace filament {

using Complex = std::complex<double>;

struct ThetaState {
  double s = 0.0;
  Complex theta;
  Complex theta_prime;
};

// Coefficients of theta'' + (-c'/c + i tau) theta' + (c^2/4) theta = 0.
// When `c_prime` is empty it is obtained by a five-point difference of `c`.
struct ThetaCoefficients {
  ScalarFn c;
  ScalarFn tau;
  ScalarFn c_prime;
};

// |theta'/c|^2 + |theta|^2 / 4, conserved along solutions.
double theta_energy(const ThetaState& st, double c);

std::vector<ThetaState> theta_solve(const ThetaCoefficients& coef, const ThetaState& init, Interval span,
                                    const SolverConfig& cfg = {});

// The three initial data at s0 whose solutions carry the components of
// (T, n, b) for the frame e1, e2, e3 at s0. Each has energy 1/2.
std::array<ThetaState, 3> canonical_theta_data(double c0, double s0 = 0.0);

// Frames assembled componentwise from three trajectories on a common grid:
// T_j = 1 - |theta_j|^2 / (2 E0) and n_j - i b_j = -theta_j conj(theta_j') / (E0 c).
std::vector<FrenetFrame> frame_from_theta(std::span<const ThetaState> traj1, std::span<const ThetaState> traj2,
                                          std::span<const ThetaState> traj3, const ScalarFn& c, double E0);

struct ThetaLimit {
  double a1 = 0.0;
  double spread = 0.0;        // half of (max - min) of T_1 on the window
  double energy_drift = 0.0;  // max relative deviation of the energy
};

// Limit of T_1 for the self-similar coefficients c = a, tau = s/2, as the mean
// of T_1 over [s_max/2, s_max].
ThetaLimit a1_from_theta(double a, double s_max, const SolverConfig& cfg = {});

}  // namespace filament
