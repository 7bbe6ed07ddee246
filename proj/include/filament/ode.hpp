#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "filament/error.hpp"

namespace filament {

struct SolverConfig {
  double step = 1e-3;           // upper bound on the integration step
  double tol_abs = 1e-12;       // root bracketing / comparison tolerance
  double tol_rel = 1e-10;
  long max_steps = 200'000'000;
  int renorm_every = 16;        // frame re-orthonormalization period, in steps
  double max_phase_step = 0.01; // cap on (local angular rate) * step
  double output_spacing = 0.0;  // 0: emit every step

  void validate() const {
    require(step > 0.0 && std::isfinite(step), ErrorCode::InvalidParameter, "step must be > 0");
    require(tol_abs > 0.0 && tol_rel > 0.0, ErrorCode::InvalidParameter, "tolerances must be > 0");
    require(max_steps > 0, ErrorCode::InvalidParameter, "max_steps must be > 0");
    require(renorm_every > 0, ErrorCode::InvalidParameter, "renorm_every must be > 0");
    require(max_phase_step > 0.0, ErrorCode::InvalidParameter, "max_phase_step must be > 0");
    require(output_spacing >= 0.0, ErrorCode::InvalidParameter, "output_spacing must be >= 0");
  }
};

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N>
inline State<N> axpy(const State<N>& y, double h, const State<N>& k) {
  State<N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = y[i] + h * k[i];
  return r;
}

// One classical fourth-order Runge-Kutta step of y' = f(s, y).
template <std::size_t N, class Rhs>
State<N> rk4_step(const Rhs& f, double s, const State<N>& y, double h) {
  const State<N> k1 = f(s, y);
  const State<N> k2 = f(s + 0.5 * h, axpy(y, 0.5 * h, k1));
  const State<N> k3 = f(s + 0.5 * h, axpy(y, 0.5 * h, k2));
  const State<N> k4 = f(s + h, axpy(y, h, k3));
  State<N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
  return r;
}

// Uniform step plan from s0 to s1: `samples` output intervals, each split into
// `substeps` equal RK steps no longer than `max_step`.
struct StepPlan {
  long samples = 1;
  long substeps = 1;
  double h = 0.0;

  long total() const { return samples * substeps; }
};

inline StepPlan plan_steps(double s0, double s1, double max_step, double output_spacing, long max_steps) {
  const double span = std::abs(s1 - s0);
  StepPlan p;
  if (span == 0.0) return p;
  p.samples = output_spacing > 0.0 ? std::max(1L, static_cast<long>(std::ceil(span / output_spacing - 1e-9))) : 0;
  if (p.samples == 0) {
    p.samples = static_cast<long>(std::ceil(span / max_step - 1e-9));
    p.substeps = 1;
  } else {
    p.substeps = std::max(1L, static_cast<long>(std::ceil(span / p.samples / max_step - 1e-9)));
  }
  require(static_cast<double>(p.samples) * static_cast<double>(p.substeps) <= static_cast<double>(max_steps),
          ErrorCode::StepLimitExceeded,
          "integration needs " + std::to_string(p.samples * p.substeps) + " steps, limit " + std::to_string(max_steps));
  p.h = (s1 - s0) / static_cast<double>(p.total());
  return p;
}

// Fixed-step RK4 driver. `emit(s, y)` is called at s0 and after every
// `substeps` steps; `post(step_index, y)` may modify the state in place
// (used for re-orthonormalization).
template <std::size_t N, class Rhs, class Emit, class Post>
State<N> integrate(const Rhs& f, double s0, double s1, State<N> y, const StepPlan& plan, Emit&& emit, Post&& post) {
  emit(s0, y);
  long k = 0;
  for (long i = 0; i < plan.samples; ++i) {
    for (long j = 0; j < plan.substeps; ++j, ++k) {
      const double s = s0 + static_cast<double>(k) * plan.h;
      y = rk4_step<N>(f, s, y, plan.h);
      post(k + 1, y);
    }
    const double s = (i + 1 == plan.samples) ? s1 : s0 + static_cast<double>(k) * plan.h;
    emit(s, y);
  }
  return y;
}

}  // namespace filament
