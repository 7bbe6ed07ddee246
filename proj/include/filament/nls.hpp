#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "filament/geometry.hpp"

namespace filament {

using Complex = std::complex<double>;

// Uniform periodic samples at s_i = -L/2 + i L/n.
struct ComplexField {
  double domain_length = 0.0;
  std::vector<Complex> values;

  ComplexField() = default;
  ComplexField(double length, std::size_t n, Complex fill = {}) : domain_length(length), values(n, fill) {}

  std::size_t size() const { return values.size(); }
  double dx() const { return domain_length / static_cast<double>(values.size()); }
  double s(std::size_t i) const { return -0.5 * domain_length + static_cast<double>(i) * dx(); }
  // Angular wavenumber of FFT bin i.
  double k(std::size_t i) const;

  // n a power of two >= 16, positive length, finite values.
  void validate() const;
};

double l2_norm(const ComplexField& f);
double l2_distance(const ComplexField& f, const ComplexField& g);
double mass(const ComplexField& f);

// order-th spectral derivative (Nyquist bin dropped for odd orders).
ComplexField spectral_derivative(const ComplexField& f, int order);

// Fraction of spectral energy in the top third of |k|, relative to all
// non-constant modes (0 when the field is constant).
double aliasing_fraction(const ComplexField& f);

// Eight-point Lagrange interpolation at x, without wrap-around.
Complex interpolate(const ComplexField& f, double x);

// u = c exp(i int_0^s tau) on a uniform grid; the phase origin is s = 0.
ComplexField hasimoto(std::span<const double> s, std::span<const double> c, std::span<const double> tau);

enum class Potential {
  None,  // i v_t + v_ss + sign k (|v|^2 - a^2) v = 0
  Gp,    // i v_t + v_ss + sign (k / t) (|v|^2 - a^2) v = 0
};

struct NlsProblem {
  int sign = 1;               // +1 focusing, -1 defocusing
  double nonlinearity = 1.0;  // k above
  double background_a = 0.0;
  Potential potential = Potential::None;
  Interval t_span{1.0, 2.0};  // may run backward; must not contain 0

  void validate() const;
};

struct EvolveOptions {
  long steps = 1000;          // Strang steps (uniform in t, or in log t for Gp)
  long snapshot_every = 0;    // 0: only the endpoints
  bool check_aliasing = true;
  double aliasing_threshold = 1e-6;
};

struct EvolveResult {
  std::vector<double> times;
  std::vector<ComplexField> snapshots;
  double mass_drift = 0.0;  // max relative deviation across the run
  double max_aliasing = 0.0;
};

EvolveResult evolve(const NlsProblem& problem, const ComplexField& v0, const EvolveOptions& opts = {});

// Maps v(., 1/t) to u(., t) = e^{i s^2/4t} / sqrt(t) conj(v(s/t, 1/t)) on a
// grid of the given length and size.
ComplexField pseudo_conformal(const ComplexField& v_slice, double t, double target_length, std::size_t target_n);
// Inverse: from u(., t) to v(., 1/t).
ComplexField pseudo_conformal_inverse(const ComplexField& u_slice, double t, double target_length,
                                      std::size_t target_n);

// a + e^{i sign k a^2 log t} e^{i t d_s^2} u_plus.
ComplexField long_range_ansatz(const ComplexField& u_plus, double a, int sign, double t, double nonlinearity = 1.0);
// Same with the phase frozen at t_ref (the phase-free comparison ansatz when
// t_ref is the initial time).
ComplexField free_ansatz(const ComplexField& u_plus, double a, int sign, double t, double t_ref,
                         double nonlinearity = 1.0);

// 1/2 int |v_s|^2 - sign k / (4t) int (|v|^2 - a^2)^2.
double gp_energy(const ComplexField& v, double t, double a, int sign, double nonlinearity = 1.0);

// Max over interior snapshots of |dE/dt - sign k / (4 t^2) int (|v|^2 - a^2)^2|
// with a three-point difference in t.
double gp_energy_law_defect(std::span<const ComplexField> snapshots, std::span<const double> times, double a, int sign,
                            double nonlinearity = 1.0);

// Second derivative of a Gaussian of the given width, scaled to the L2 norm;
// its transform vanishes to second order at k = 0.
ComplexField mexican_hat_field(double length, std::size_t n, double width, double l2);

// Forward GP run from v1(t_start) compared against the log-phase ansatz and
// against the ansatz with its phase frozen at t_start.
struct LongRangeOptions {
  double a = 0.5;
  int sign = -1;
  double nonlinearity = 1.0;
  double t_start = 10.0;
  double t_end = 1e4;
  double length = 2048.0;
  std::size_t points = 4096;
  double uplus_norm = 1e-2;
  double width = 2.0;
  long steps = 20000;
  long snapshots = 40;

  void validate() const;
};

struct LongRangeReport {
  std::vector<double> times;
  std::vector<double> defect_phase;        // ||v - v1||
  std::vector<double> defect_free;         // ||v - v1 with frozen phase||
  std::vector<double> defect_phase_deriv;  // ||d_s (v - v1)||
  double final_phase = 0.0;
  double final_free = 0.0;
  double ratio = 0.0;        // final_phase / final_free
  double slope_l2 = 0.0;     // log-log slope over the later half (in log t)
  double slope_deriv = 0.0;
  double mass_drift = 0.0;
};

LongRangeReport long_range_experiment(const LongRangeOptions& opts);

// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace filament
