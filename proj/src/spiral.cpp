#include "filament/spiral.hpp"

#include <algorithm>
#include <cmath>

namespace filament {

namespace {

using GState = State<6>;  // G, G'

Vec3 accel(double mu, const Vec3& G, const Vec3& T) { return 0.5 * cross(spiral_apply(mu, G), T); }

// Fixed-step RK4 with uniform outputs every `spacing`; the step inside each
// output interval obeys the phase cap for the rate `rate(y)`.
template <std::size_t N, class Rhs, class Rate, class Emit>
void run_uniform(const Rhs& rhs, const Rate& rate, State<N> y, Interval span, const SolverConfig& cfg, double spacing,
                 Emit&& emit) {
  cfg.validate();
  emit(span.from, y);
  const double length = std::abs(span.to - span.from);
  if (length == 0.0) return;
  const long samples = std::max(1L, static_cast<long>(std::ceil(length / spacing - 1e-9)));
  const double ds = (span.to - span.from) / static_cast<double>(samples);
  long total = 0;
  for (long i = 0; i < samples; ++i) {
    const double s = span.from + static_cast<double>(i) * ds;
    const double r = std::max(rate(s, y), rate(s + ds, y));
    const double cap = r > 0.0 ? std::min(cfg.step, cfg.max_phase_step / r) : cfg.step;
    const long n = std::max(1L, static_cast<long>(std::ceil(std::abs(ds) / cap - 1e-9)));
    const double h = ds / static_cast<double>(n);
    for (long j = 0; j < n; ++j) y = rk4_step<N>(rhs, s + static_cast<double>(j) * h, y, h);
    total += n;
    require(total <= cfg.max_steps, ErrorCode::StepLimitExceeded, "integration exceeded max_steps");
    emit(i + 1 == samples ? span.to : s + ds, y);
  }
}

double spacing_of(const SolverConfig& cfg) { return cfg.output_spacing > 0.0 ? cfg.output_spacing : 0.01; }

}  // namespace

Vec3 spiral_apply(double mu, const Vec3& v) { return {v.x - mu * v.y, v.y + mu * v.x, v.z}; }

SpiralParams SpiralParams::make(double mu, const Vec3& G0, const UnitVec3& T0) {
  require(std::isfinite(mu) && G0.finite(), ErrorCode::InvalidParameter, "spiral parameters must be finite");
  const Vec3 g = spiral_apply(mu, G0);
  require(std::abs(dot(g, T0.vec())) <= 1e-10, ErrorCode::ConstraintViolated,
          "(I+A) G0 must be orthogonal to T0");
  SpiralParams p;
  p.mu = mu;
  p.G0 = G0;
  p.T0 = T0;
  p.nu = -mu * T0.vec().z - 0.25 * dot(g, g);
  return p;
}

SpiralProfile spiral_profile(const SpiralParams& params, Interval span, const SolverConfig& cfg) {
  require(span.from <= 0.0 && span.to >= 0.0, ErrorCode::InvalidParameter, "span must contain s = 0");
  const double mu = params.mu;
  const auto rhs = [mu](double, const GState& y) {
    const Vec3 G{y[0], y[1], y[2]};
    const Vec3 T{y[3], y[4], y[5]};
    const Vec3 d = accel(mu, G, T);
    return GState{T.x, T.y, T.z, d.x, d.y, d.z};
  };
  // Frame rotation rate is bounded by |T'| + |tau|, both O(|(I+A)G|).
  const auto rate = [mu](double, const GState& y) {
    return std::sqrt(1.0 + mu * mu) * (norm(Vec3{y[0], y[1], y[2]}) + 1.0) + std::abs(mu);
  };
  const GState y0{params.G0.x, params.G0.y, params.G0.z, params.T0[0], params.T0[1], params.T0[2]};
  const double spacing = spacing_of(cfg);

  std::vector<std::pair<double, GState>> fwd, bwd;
  run_uniform<6>(rhs, rate, y0, {0.0, span.to}, cfg, spacing, [&](double s, const GState& y) { fwd.emplace_back(s, y); });
  run_uniform<6>(rhs, rate, y0, {0.0, span.from}, cfg, spacing,
                 [&](double s, const GState& y) { bwd.emplace_back(s, y); });
  std::vector<std::pair<double, GState>> all(bwd.rbegin(), bwd.rend() - 1);
  all.insert(all.end(), fwd.begin(), fwd.end());

  SpiralProfile out;
  Vec3 prev_n{0.0, 1.0, 0.0};
  for (const auto& [s, y] : all) {
    const Vec3 G{y[0], y[1], y[2]};
    const Vec3 Traw{y[3], y[4], y[5]};
    const Vec3 dT = accel(mu, G, Traw);
    // T'' = (1/2) [ (A T) x T + (I+A) G x T' ]
    const Vec3 AT = spiral_apply(mu, Traw) - Traw;
    const Vec3 ddT = 0.5 * (cross(AT, Traw) + cross(spiral_apply(mu, G), dT));
    const double c2 = dot(dT, dT);
    const double k = std::sqrt(c2);
    out.speed_defect = std::max(out.speed_defect, std::abs(norm(Traw) - 1.0));
    out.lemma_residual = std::max(out.lemma_residual, std::abs(c2 + mu * Traw.z + params.nu));

    const Vec3 T = Traw / norm(Traw);
    Vec3 n = k > kCurvatureThreshold ? dT / k : prev_n - dot(prev_n, T) * T;
    n = n / norm(n);
    prev_n = n;
    out.curve.s_grid.push_back(s);
    out.curve.points.push_back(G);
    out.curve.frames.push_back({T, n, cross(T, n)});
    out.c2.push_back(c2);
    out.y.push_back(2.0 * dot(dT, ddT));
    // c^2 tau = (T x T') . T''
    out.h.push_back(dot(cross(Traw, dT), ddT) - 0.5 * s * c2);
  }
  return out;
}

double spiral_energy(const SpiralParams& params) {
  const Vec3 T = params.T0.vec();
  const Vec3 dT = accel(params.mu, params.G0, T);
  const Vec3 AT = spiral_apply(params.mu, T) - T;
  const Vec3 ddT = 0.5 * (cross(AT, T) + cross(spiral_apply(params.mu, params.G0), dT));
  const double c2 = dot(dT, dT);
  const double y = 2.0 * dot(dT, ddT);
  const double h = dot(cross(T, dT), ddT);  // c^2 tau at s = 0
  // |f'|^2 = c'^2 + c^2 tau^2 = (y^2/4 + h^2) / c^2 at s = 0
  const double kinetic = c2 > 0.0 ? (0.25 * y * y + h * h) / c2 : 0.0;
  return kinetic + 0.25 * (c2 + params.nu) * (c2 + params.nu);
}

std::vector<YHState> yh_evolve(double y0, double h0, double c2_0, double nu, double E0, Interval span,
                               const SolverConfig& cfg) {
  using Y = State<3>;  // y, h, c2
  const auto rhs = [nu, E0](double s, const Y& v) {
    const double P = v[2];
    const double g = 2.0 * E0 - 0.5 * (3.0 * P + nu) * (P + nu);
    return Y{s * v[1] + g, -0.25 * s * v[0], v[0]};
  };
  const auto rate = [](double s, const Y& v) { return 0.5 * std::abs(s) + 1.0 + std::abs(v[2]); };
  std::vector<YHState> out;
  run_uniform<3>(rhs, rate, Y{y0, h0, c2_0}, span, cfg, spacing_of(cfg),
                 [&](double s, const Y& v) { out.push_back({s, v[0], v[1], v[2]}); });
  return out;
}

std::vector<FState> f_solve(std::complex<double> f0, std::complex<double> f0_prime, double nu, Interval span,
                            const SolverConfig& cfg) {
  using F = State<4>;
  const auto rhs = [nu](double s, const F& v) {
    const std::complex<double> f{v[0], v[1]};
    const std::complex<double> fp{v[2], v[3]};
    const std::complex<double> fpp = -std::complex<double>{0.0, 0.5 * s} * fp - 0.5 * f * (std::norm(f) + nu);
    return F{fp.real(), fp.imag(), fpp.real(), fpp.imag()};
  };
  const auto rate = [nu](double s, const F& v) {
    return 0.5 * std::abs(s) + std::sqrt(0.5 * std::abs(v[0] * v[0] + v[1] * v[1] + nu)) + 1.0;
  };
  std::vector<FState> out;
  run_uniform<4>(rhs, rate, F{f0.real(), f0.imag(), f0_prime.real(), f0_prime.imag()}, span, cfg, spacing_of(cfg),
                 [&](double s, const F& v) { out.push_back({s, {v[0], v[1]}, {v[2], v[3]}}); });
  return out;
}

double f_energy(const FState& st, double nu) {
  const double p = std::norm(st.f) + nu;
  return std::norm(st.f_prime) + 0.25 * p * p;
}

Vec3 spiral_chi(const SpiralParams& params, const SpiralProfile& profile, double s, double t) {
  require(t > 0.0 && std::isfinite(t), ErrorCode::InvalidParameter, "t must be > 0");
  const double root = std::sqrt(t);
  const Vec3 g = root * hermite_point(profile.curve, s / root);
  const double angle = 0.5 * params.mu * std::log(t);
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  return {cs * g.x - sn * g.y, sn * g.x + cs * g.y, g.z};
}

}  // namespace filament
