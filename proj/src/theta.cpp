#include "filament/theta.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace filament {

namespace {

// State layout: Re theta, Im theta, Re theta', Im theta', and an optional
// running integral of 1 - |theta|^2 / (2 E0) used by the windowed mean.
using ThetaVec = State<5>;

ScalarFn derivative_of(const ScalarFn& f) {
  return [f](double s) {
    const double h = 1e-3 * std::max(1.0, std::abs(s));
    return (f(s - 2 * h) - 8 * f(s - h) + 8 * f(s + h) - f(s + 2 * h)) / (12 * h);
  };
}

struct ThetaRhs {
  const ScalarFn& c;
  const ScalarFn& tau;
  const ScalarFn& c_prime;
  double inv_two_energy;

  ThetaVec operator()(double s, const ThetaVec& y) const {
    const double k = c(s);
    const double kp = c_prime(s);
    const double w = tau(s);
    if (!std::isfinite(k) || !std::isfinite(kp) || !std::isfinite(w)) {
      throw Error(ErrorCode::NonFiniteCoefficient, "theta coefficients are not finite");
    }
    if (!(k > kCurvatureThreshold)) throw Error(ErrorCode::CurvatureVanishes, "curvature vanishes on the span");
    const Complex th{y[0], y[1]};
    const Complex dth{y[2], y[3]};
    const Complex dd = (kp / k) * dth - Complex{0.0, w} * dth - (0.25 * k * k) * th;
    return {dth.real(), dth.imag(), dd.real(), dd.imag(), 1.0 - std::norm(th) * inv_two_energy};
  }
};

double rate_at(const ThetaCoefficients& coef, double s) {
  const double k = coef.c(s);
  if (!(k > kCurvatureThreshold) && std::isfinite(k)) {
    throw Error(ErrorCode::CurvatureVanishes, "curvature vanishes on the span");
  }
  return k + std::abs(coef.tau(s)) + std::abs(coef.c_prime(s) / k);
}

// Fixed-step RK4 over `span` with uniform outputs every `spacing` (every
// step when spacing is 0); per output interval the step obeys the phase cap.
template <class Emit>
ThetaVec run_theta(const ThetaCoefficients& coef, const ThetaVec& y0, Interval span, const SolverConfig& cfg,
                   double inv_two_energy, Emit&& emit) {
  cfg.validate();
  const ThetaRhs rhs{coef.c, coef.tau, coef.c_prime, inv_two_energy};
  ThetaVec y = y0;
  emit(span.from, y);
  const double length = std::abs(span.to - span.from);
  if (length == 0.0) return y;
  long total = 0;
  const auto step_cap = [&](double s0, double s1) {
    const double r = std::max({rate_at(coef, s0), rate_at(coef, 0.5 * (s0 + s1)), rate_at(coef, s1)});
    require(std::isfinite(r), ErrorCode::NonFiniteCoefficient, "theta coefficients are not finite");
    return r > 0.0 ? std::min(cfg.step, cfg.max_phase_step / r) : cfg.step;
  };
  if (cfg.output_spacing > 0.0) {
    const long samples = std::max(1L, static_cast<long>(std::ceil(length / cfg.output_spacing - 1e-9)));
    const double ds = (span.to - span.from) / static_cast<double>(samples);
    for (long i = 0; i < samples; ++i) {
      const double s = span.from + static_cast<double>(i) * ds;
      const long n = std::max(1L, static_cast<long>(std::ceil(std::abs(ds) / step_cap(s, s + ds) - 1e-9)));
      const double h = ds / static_cast<double>(n);
      for (long j = 0; j < n; ++j) y = rk4_step<5>(rhs, s + static_cast<double>(j) * h, y, h);
      total += n;
      require(total <= cfg.max_steps, ErrorCode::StepLimitExceeded, "theta integration exceeded max_steps");
      emit(i + 1 == samples ? span.to : s + ds, y);
    }
    return y;
  }
  double cap = cfg.step;
  constexpr int kProbe = 1024;
  for (int i = 0; i < kProbe; ++i) {
    const double s0 = span.from + (span.to - span.from) * i / kProbe;
    const double s1 = span.from + (span.to - span.from) * (i + 1) / kProbe;
    cap = std::min(cap, step_cap(s0, s1));
  }
  const StepPlan plan = plan_steps(span.from, span.to, cap, 0.0, cfg.max_steps);
  for (long k = 0; k < plan.total(); ++k) {
    const double s = span.from + static_cast<double>(k) * plan.h;
    y = rk4_step<5>(rhs, s, y, plan.h);
    emit(k + 1 == plan.total() ? span.to : s + plan.h, y);
  }
  return y;
}

ThetaCoefficients completed(const ThetaCoefficients& coef) {
  require(static_cast<bool>(coef.c) && static_cast<bool>(coef.tau), ErrorCode::InvalidParameter,
          "curvature and torsion are required");
  ThetaCoefficients out = coef;
  if (!out.c_prime) out.c_prime = derivative_of(coef.c);
  return out;
}

}  // namespace

double theta_energy(const ThetaState& st, double c) {
  return std::norm(st.theta_prime / c) + 0.25 * std::norm(st.theta);
}

std::vector<ThetaState> theta_solve(const ThetaCoefficients& coef, const ThetaState& init, Interval span,
                                    const SolverConfig& cfg) {
  require(init.s == span.from, ErrorCode::InvalidParameter, "initial state must sit at the start of the span");
  const ThetaCoefficients full = completed(coef);
  std::vector<ThetaState> out;
  const ThetaVec y0{init.theta.real(), init.theta.imag(), init.theta_prime.real(), init.theta_prime.imag(), 0.0};
  run_theta(full, y0, span, cfg, 0.0, [&](double s, const ThetaVec& y) {
    out.push_back({s, {y[0], y[1]}, {y[2], y[3]}});
  });
  return out;
}

std::array<ThetaState, 3> canonical_theta_data(double c0, double s0) {
  require(c0 > kCurvatureThreshold, ErrorCode::CurvatureVanishes, "curvature vanishes at the initial point");
  return {ThetaState{s0, {0.0, 0.0}, {c0 / std::numbers::sqrt2, 0.0}},
          ThetaState{s0, {1.0, 0.0}, {-0.5 * c0, 0.0}},
          ThetaState{s0, {0.0, 1.0}, {0.5 * c0, 0.0}}};
}

std::vector<FrenetFrame> frame_from_theta(std::span<const ThetaState> traj1, std::span<const ThetaState> traj2,
                                          std::span<const ThetaState> traj3, const ScalarFn& c, double E0) {
  require(E0 > 1e-12, ErrorCode::EnergyDegenerate, "initial energy is degenerate");
  const std::size_t n = traj1.size();
  require(traj2.size() == n && traj3.size() == n, ErrorCode::GridMismatch, "trajectories differ in length");
  std::vector<FrenetFrame> out(n);
  const std::span<const ThetaState> trajs[3] = {traj1, traj2, traj3};
  for (std::size_t i = 0; i < n; ++i) {
    const double s = traj1[i].s;
    const double k = c(s);
    require(k > kCurvatureThreshold, ErrorCode::CurvatureVanishes, "curvature vanishes on the grid");
    FrenetFrame& f = out[i];
    for (int j = 0; j < 3; ++j) {
      const ThetaState& st = trajs[j][i];
      require(std::abs(st.s - s) <= 1e-12 * std::max(1.0, std::abs(s)), ErrorCode::GridMismatch,
              "trajectories are not on a common grid");
      f.T[j] = 1.0 - std::norm(st.theta) / (2.0 * E0);
      const Complex nb = -st.theta * std::conj(st.theta_prime) / (E0 * k);
      f.n[j] = nb.real();
      f.b[j] = -nb.imag();
    }
  }
  return out;
}

ThetaLimit a1_from_theta(double a, double s_max, const SolverConfig& cfg) {
  require(a > 0.0 && std::isfinite(a), ErrorCode::InvalidParameter, "a must be > 0");
  require(s_max > 0.0 && std::isfinite(s_max), ErrorCode::InvalidParameter, "s_max must be > 0");
  const ThetaCoefficients coef{[a](double) { return a; }, [](double s) { return 0.5 * s; },
                               [](double) { return 0.0; }};
  SolverConfig run = cfg;
  if (run.output_spacing == 0.0) run.output_spacing = 0.01;
  const ThetaState init = canonical_theta_data(a)[0];
  const double E0 = theta_energy(init, a);
  ThetaVec y0{0.0, 0.0, init.theta_prime.real(), 0.0, 0.0};

  ThetaLimit out;
  double t_min = 1.0;
  double t_max = -1.0;
  double integral_mid = 0.0;
  const double half = 0.5 * s_max;
  // Integrate to the window start, then across it; the fifth component
  // accumulates the integral of T_1.
  y0 = run_theta(coef, y0, {0.0, half}, run, 0.5 / E0, [&](double, const ThetaVec& y) {
    const Complex th{y[0], y[1]};
    const Complex dth{y[2], y[3]};
    out.energy_drift = std::max(out.energy_drift, std::abs(std::norm(dth / a) + 0.25 * std::norm(th) - E0) / E0);
  });
  integral_mid = y0[4];
  const ThetaVec y1 = run_theta(coef, y0, {half, s_max}, run, 0.5 / E0, [&](double, const ThetaVec& y) {
    const Complex th{y[0], y[1]};
    const Complex dth{y[2], y[3]};
    out.energy_drift = std::max(out.energy_drift, std::abs(std::norm(dth / a) + 0.25 * std::norm(th) - E0) / E0);
    const double T1 = 1.0 - std::norm(th) / (2.0 * E0);
    t_min = std::min(t_min, T1);
    t_max = std::max(t_max, T1);
  });
  out.a1 = (y1[4] - integral_mid) / (s_max - half);
  out.spread = 0.5 * (t_max - t_min);
  return out;
}

}  // namespace filament
