#include "filament/nls.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "filament/fft.hpp"

namespace filament {

namespace {

constexpr double kPi = std::numbers::pi;

double spectral_k(std::size_t i, std::size_t n, double length) {
  const double base = 2.0 * kPi / length;
  const auto half = n / 2;
  return i < half ? base * static_cast<double>(i) : base * (static_cast<double>(i) - static_cast<double>(n));
}

double top_third_fraction(std::span<const Complex> spectrum) {
  const std::size_t n = spectrum.size();
  const double cutoff = (2.0 / 3.0) * static_cast<double>(n / 2);
  double total = 0.0;
  double high = 0.0;
  const double mean = std::norm(spectrum[0]);
  for (std::size_t i = 1; i < n; ++i) {
    const double mode = std::abs(i < n / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(n));
    const double e = std::norm(spectrum[i]);
    total += e;
    if (mode > cutoff) high += e;
  }
  // Round-off level non-constant content counts as a constant field.
  if (total <= 1e-20 * (total + mean)) return 0.0;
  return high / total;
}

}  // namespace

double ComplexField::k(std::size_t i) const { return spectral_k(i, values.size(), domain_length); }

void ComplexField::validate() const {
  require(domain_length > 0.0 && std::isfinite(domain_length), ErrorCode::InvalidParameter,
          "domain length must be > 0");
  require(values.size() >= 16 && std::has_single_bit(values.size()), ErrorCode::InvalidParameter,
          "grid size must be a power of two >= 16");
  for (const Complex& z : values) {
    require(std::isfinite(z.real()) && std::isfinite(z.imag()), ErrorCode::NonFiniteCoefficient,
            "field has non-finite values");
  }
}

double mass(const ComplexField& f) {
  double m = 0.0;
  for (const Complex& z : f.values) m += std::norm(z);
  return m * f.dx();
}

double l2_norm(const ComplexField& f) { return std::sqrt(mass(f)); }

double l2_distance(const ComplexField& f, const ComplexField& g) {
  require(f.size() == g.size(), ErrorCode::GridMismatch, "fields differ in size");
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) m += std::norm(f.values[i] - g.values[i]);
  return std::sqrt(m * f.dx());
}

ComplexField spectral_derivative(const ComplexField& f, int order) {
  require(order >= 0, ErrorCode::InvalidParameter, "derivative order must be >= 0");
  ComplexField out = f;
  if (order == 0) return out;
  Fft fft(f.size());
  fft.forward(out.values);
  const std::size_t n = f.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (order % 2 == 1 && i == n / 2) {
      out.values[i] = 0.0;
      continue;
    }
    out.values[i] *= std::pow(Complex{0.0, f.k(i)}, order);
  }
  fft.inverse(out.values);
  return out;
}

double aliasing_fraction(const ComplexField& f) {
  std::vector<Complex> spec = f.values;
  Fft fft(spec.size());
  fft.forward(spec);
  return top_third_fraction(spec);
}

Complex interpolate(const ComplexField& f, double x) {
  constexpr int kPoints = 8;
  const double p = (x + 0.5 * f.domain_length) / f.dx();
  const long i = static_cast<long>(std::floor(p));
  const long first = i - kPoints / 2 + 1;
  require(first >= 0 && first + kPoints <= static_cast<long>(f.size()), ErrorCode::ResampleOutOfRange,
          "interpolation point outside the sampled window");
  Complex acc = 0.0;
  for (int j = 0; j < kPoints; ++j) {
    double w = 1.0;
    const double xj = static_cast<double>(first + j);
    for (int m = 0; m < kPoints; ++m) {
      if (m == j) continue;
      const double xm = static_cast<double>(first + m);
      w *= (p - xm) / (xj - xm);
    }
    acc += w * f.values[static_cast<std::size_t>(first + j)];
  }
  return acc;
}

ComplexField hasimoto(std::span<const double> s, std::span<const double> c, std::span<const double> tau) {
  const std::size_t n = s.size();
  require(c.size() == n && tau.size() == n, ErrorCode::GridMismatch, "curvature, torsion and grid differ in size");
  require(n >= 2, ErrorCode::GridTooCoarse, "need at least 2 samples");
  const double h = s[1] - s[0];
  require(h > 0.0, ErrorCode::GridNonUniform, "grid must be increasing");
  for (std::size_t i = 1; i < n; ++i) {
    require(std::abs(s[i] - s[i - 1] - h) <= 1e-9 * std::max(1.0, h), ErrorCode::GridNonUniform,
            "grid is not uniform");
  }
  std::size_t origin = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(s[i]) < std::abs(s[origin])) origin = i;
  }
  std::vector<double> phase(n);
  phase[origin] = tau[origin] * s[origin];
  for (std::size_t i = origin + 1; i < n; ++i) phase[i] = phase[i - 1] + 0.5 * h * (tau[i - 1] + tau[i]);
  for (std::size_t i = origin; i-- > 0;) phase[i] = phase[i + 1] - 0.5 * h * (tau[i] + tau[i + 1]);
  ComplexField u(h * static_cast<double>(n), n);
  for (std::size_t i = 0; i < n; ++i) u.values[i] = std::polar(c[i], phase[i]);
  return u;
}

void NlsProblem::validate() const {
  require(sign == 1 || sign == -1, ErrorCode::InvalidParameter, "sign must be +1 or -1");
  require(nonlinearity >= 0.0 && std::isfinite(nonlinearity), ErrorCode::InvalidParameter,
          "nonlinearity coefficient must be >= 0");
  require(background_a >= 0.0 && std::isfinite(background_a), ErrorCode::InvalidParameter, "a must be >= 0");
  require(std::isfinite(t_span.from) && std::isfinite(t_span.to), ErrorCode::InvalidParameter,
          "time span must be finite");
  require(t_span.from * t_span.to > 0.0, ErrorCode::TimeSpanCrossesZero, "time span must not contain t = 0");
}

EvolveResult evolve(const NlsProblem& problem, const ComplexField& v0, const EvolveOptions& opts) {
  problem.validate();
  v0.validate();
  require(opts.steps > 0, ErrorCode::InvalidParameter, "steps must be > 0");
  require(opts.snapshot_every >= 0, ErrorCode::InvalidParameter, "snapshot_every must be >= 0");
  const bool gp = problem.potential == Potential::Gp;
  const std::size_t n = v0.size();
  const double t0 = problem.t_span.from;
  const double t1 = problem.t_span.to;
  const auto time_at = [&](long k) {
    if (k == opts.steps) return t1;
    const double frac = static_cast<double>(k) / static_cast<double>(opts.steps);
    return gp ? t0 * std::pow(t1 / t0, frac) : t0 + (t1 - t0) * frac;
  };
  const double a2 = problem.background_a * problem.background_a;
  const double coupling = problem.sign * problem.nonlinearity;

  std::vector<double> k2(n);
  for (std::size_t i = 0; i < n; ++i) k2[i] = v0.k(i) * v0.k(i);

  Fft fft(n);
  ComplexField v = v0;
  EvolveResult result;
  const double mass0 = mass(v0);
  const auto record = [&](double t) {
    result.times.push_back(t);
    result.snapshots.push_back(v);
  };
  const auto linear = [&](double dt) {
    fft.forward(v.values);
    for (std::size_t i = 0; i < n; ++i) v.values[i] *= std::polar(1.0, -k2[i] * dt);
    if (opts.check_aliasing) {
      const double frac = top_third_fraction(v.values);
      result.max_aliasing = std::max(result.max_aliasing, frac);
      require(frac <= opts.aliasing_threshold, ErrorCode::AliasingDetected,
              "spectral energy in the top third of wavenumbers is " + std::to_string(frac));
    }
    fft.inverse(v.values);
  };

  record(t0);
  double pending = 0.0;  // linear time owed from the previous half step
  for (long k = 0; k < opts.steps; ++k) {
    const double ta = time_at(k);
    const double tb = time_at(k + 1);
    const double dt = tb - ta;
    linear(pending + 0.5 * dt);
    const double weight = gp ? std::log(tb / ta) : dt;
    for (Complex& z : v.values) z *= std::polar(1.0, coupling * (std::norm(z) - a2) * weight);
    pending = 0.5 * dt;
    const bool snap = (k + 1 == opts.steps) || (opts.snapshot_every > 0 && (k + 1) % opts.snapshot_every == 0);
    if (snap) {
      linear(pending);
      pending = 0.0;
      record(tb);
    }
    if (mass0 > 0.0) result.mass_drift = std::max(result.mass_drift, std::abs(mass(v) - mass0) / mass0);
  }
  return result;
}

ComplexField pseudo_conformal(const ComplexField& v_slice, double t, double target_length, std::size_t target_n) {
  require(t > 0.0 && std::isfinite(t), ErrorCode::InvalidParameter, "t must be > 0");
  ComplexField u(target_length, target_n);
  const double root = std::sqrt(t);
  for (std::size_t i = 0; i < target_n; ++i) {
    const double s = u.s(i);
    const Complex v = interpolate(v_slice, s / t);
    u.values[i] = std::polar(1.0 / root, s * s / (4.0 * t)) * std::conj(v);
  }
  return u;
}

ComplexField pseudo_conformal_inverse(const ComplexField& u_slice, double t, double target_length,
                                      std::size_t target_n) {
  require(t > 0.0 && std::isfinite(t), ErrorCode::InvalidParameter, "t must be > 0");
  // Remove the chirp before interpolating so the resampled data is smooth.
  ComplexField smooth = u_slice;
  for (std::size_t i = 0; i < smooth.size(); ++i) {
    const double s = smooth.s(i);
    smooth.values[i] *= std::polar(1.0, -s * s / (4.0 * t));
  }
  ComplexField v(target_length, target_n);
  const double root = std::sqrt(t);
  for (std::size_t i = 0; i < target_n; ++i) v.values[i] = root * std::conj(interpolate(smooth, v.s(i) * t));
  return v;
}

ComplexField free_ansatz(const ComplexField& u_plus, double a, int sign, double t, double t_ref, double nonlinearity) {
  require(t > 0.0 && t_ref > 0.0, ErrorCode::InvalidParameter, "times must be > 0");
  ComplexField w = u_plus;
  Fft fft(w.size());
  fft.forward(w.values);
  for (std::size_t i = 0; i < w.size(); ++i) w.values[i] *= std::polar(1.0, -w.k(i) * w.k(i) * t);
  fft.inverse(w.values);
  const Complex phase = std::polar(1.0, sign * nonlinearity * a * a * std::log(t_ref));
  for (Complex& z : w.values) z = a + phase * z;
  return w;
}

ComplexField long_range_ansatz(const ComplexField& u_plus, double a, int sign, double t, double nonlinearity) {
  return free_ansatz(u_plus, a, sign, t, t, nonlinearity);
}

double gp_energy(const ComplexField& v, double t, double a, int sign, double nonlinearity) {
  require(t > 0.0, ErrorCode::InvalidParameter, "t must be > 0");
  const ComplexField vs = spectral_derivative(v, 1);
  double kinetic = 0.0;
  double potential = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    kinetic += std::norm(vs.values[i]);
    const double d = std::norm(v.values[i]) - a * a;
    potential += d * d;
  }
  return v.dx() * (0.5 * kinetic - sign * nonlinearity / (4.0 * t) * potential);
}

double gp_energy_law_defect(std::span<const ComplexField> snapshots, std::span<const double> times, double a, int sign,
                            double nonlinearity) {
  require(snapshots.size() == times.size(), ErrorCode::GridMismatch, "snapshots and times differ in length");
  require(snapshots.size() >= 3, ErrorCode::GridTooCoarse, "need at least 3 snapshots");
  std::vector<double> energy(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) energy[k] = gp_energy(snapshots[k], times[k], a, sign, nonlinearity);
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < times.size(); ++k) {
    const double ts[3] = {times[k - 1], times[k], times[k + 1]};
    const auto w = fd_weights(ts[1], ts, 1);
    const double dE = w[0] * energy[k - 1] + w[1] * energy[k] + w[2] * energy[k + 1];
    double potential = 0.0;
    for (const Complex& z : snapshots[k].values) {
      const double d = std::norm(z) - a * a;
      potential += d * d;
    }
    potential *= snapshots[k].dx();
    const double law = sign * nonlinearity / (4.0 * times[k] * times[k]) * potential;
    worst = std::max(worst, std::abs(dE - law));
  }
  return worst;
}

ComplexField mexican_hat_field(double length, std::size_t n, double width, double l2) {
  ComplexField f(length, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = f.s(i) / width;
    f.values[i] = (x * x - 1.0) * std::exp(-0.5 * x * x);
  }
  const double norm0 = l2_norm(f);
  if (norm0 > 0.0) {
    for (Complex& z : f.values) z *= l2 / norm0;
  }
  return f;
}

void LongRangeOptions::validate() const {
  require(a >= 0.0 && std::isfinite(a), ErrorCode::InvalidParameter, "a must be >= 0");
  require(sign == 1 || sign == -1, ErrorCode::InvalidParameter, "sign must be +1 or -1");
  require(t_start > 0.0 && t_end > t_start, ErrorCode::InvalidParameter, "need 0 < t_start < t_end");
  require(length > 0.0 && points >= 16 && std::has_single_bit(points), ErrorCode::InvalidParameter,
          "grid must have a power-of-two size >= 16");
  require(uplus_norm >= 0.0 && width > 0.0, ErrorCode::InvalidParameter, "perturbation must have norm >= 0, width > 0");
  require(steps > 0 && snapshots > 1 && steps % snapshots == 0, ErrorCode::InvalidParameter,
          "steps must be a positive multiple of snapshots");
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::GridTooCoarse, "need at least 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

LongRangeReport long_range_experiment(const LongRangeOptions& opts) {
  opts.validate();
  const ComplexField u_plus = mexican_hat_field(opts.length, opts.points, opts.width, opts.uplus_norm);
  NlsProblem problem;
  problem.sign = opts.sign;
  problem.nonlinearity = opts.nonlinearity;
  problem.background_a = opts.a;
  problem.potential = Potential::Gp;
  problem.t_span = {opts.t_start, opts.t_end};
  EvolveOptions eo;
  eo.steps = opts.steps;
  eo.snapshot_every = opts.steps / opts.snapshots;
  const ComplexField v0 = long_range_ansatz(u_plus, opts.a, opts.sign, opts.t_start, opts.nonlinearity);
  const EvolveResult run = evolve(problem, v0, eo);

  LongRangeReport rep;
  rep.mass_drift = run.mass_drift;
  for (std::size_t k = 1; k < run.times.size(); ++k) {
    const double t = run.times[k];
    const ComplexField v1 = long_range_ansatz(u_plus, opts.a, opts.sign, t, opts.nonlinearity);
    const ComplexField vf = free_ansatz(u_plus, opts.a, opts.sign, t, opts.t_start, opts.nonlinearity);
    ComplexField diff = run.snapshots[k];
    for (std::size_t i = 0; i < diff.size(); ++i) diff.values[i] -= v1.values[i];
    rep.times.push_back(t);
    rep.defect_phase.push_back(l2_norm(diff));
    rep.defect_free.push_back(l2_distance(run.snapshots[k], vf));
    rep.defect_phase_deriv.push_back(l2_norm(spectral_derivative(diff, 1)));
  }
  rep.final_phase = rep.defect_phase.back();
  rep.final_free = rep.defect_free.back();
  rep.ratio = rep.final_free > 0.0 ? rep.final_phase / rep.final_free : 0.0;

  const double split = std::sqrt(opts.t_start * opts.t_end);
  std::vector<double> ts, d0, d1;
  for (std::size_t k = 0; k < rep.times.size(); ++k) {
    if (rep.times[k] < split) continue;
    ts.push_back(rep.times[k]);
    d0.push_back(rep.defect_phase[k]);
    d1.push_back(rep.defect_phase_deriv[k]);
  }
  if (ts.size() >= 2) {
    rep.slope_l2 = loglog_slope(ts, d0);
    rep.slope_deriv = loglog_slope(ts, d1);
  }
  return rep;
}

}  // namespace filament
