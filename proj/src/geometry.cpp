#include "filament/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "filament/error.hpp"

namespace filament {

namespace {

using FrameState = State<12>;  // T, n, b, chi

FrameState pack(const FrenetFrame& f, const Vec3& p) {
  return {f.T.x, f.T.y, f.T.z, f.n.x, f.n.y, f.n.z, f.b.x, f.b.y, f.b.z, p.x, p.y, p.z};
}

FrenetFrame unpack_frame(const FrameState& y) {
  return {{y[0], y[1], y[2]}, {y[3], y[4], y[5]}, {y[6], y[7], y[8]}};
}

Vec3 unpack_point(const FrameState& y) { return {y[9], y[10], y[11]}; }

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteCoefficient, std::string(what) + " is not finite");
  return v;
}

double local_rate(const ScalarFn& c, const ScalarFn& tau, double s) {
  return std::abs(checked(c(s), "curvature")) + std::abs(checked(tau(s), "torsion"));
}

// Runs the frame ODE; `emit(s, frame, point)` receives every output sample.
// With cfg.output_spacing > 0 the outputs are uniform and each output
// interval picks its own substep count from the local angular rate.
template <class Emit>
void run_frenet(const ScalarFn& c, const ScalarFn& tau, const FrenetFrame& frame0, const Vec3& point0, Interval span,
                const SolverConfig& cfg, Emit&& emit) {
  cfg.validate();
  require(frame0.defect() <= 1e-8, ErrorCode::InvalidParameter, "initial frame is not orthonormal");
  const auto rhs = [&](double s, const FrameState& y) {
    const double k = checked(c(s), "curvature");
    const double w = checked(tau(s), "torsion");
    FrameState d;
    for (int i = 0; i < 3; ++i) {
      d[i] = k * y[3 + i];
      d[3 + i] = -k * y[i] + w * y[6 + i];
      d[6 + i] = -w * y[3 + i];
      d[9 + i] = y[i];
    }
    return d;
  };
  long steps_since_renorm = 0;
  long total_steps = 0;
  const auto advance = [&](double s, FrameState& y, double h, long n) {
    for (long j = 0; j < n; ++j) {
      y = rk4_step<12>(rhs, s + static_cast<double>(j) * h, y, h);
      if (++steps_since_renorm >= cfg.renorm_every) {
        FrenetFrame f = unpack_frame(y);
        f.orthonormalize();
        const Vec3 p = unpack_point(y);
        y = pack(f, p);
        steps_since_renorm = 0;
      }
    }
    total_steps += n;
    require(total_steps <= cfg.max_steps, ErrorCode::StepLimitExceeded,
            "frame integration exceeded " + std::to_string(cfg.max_steps) + " steps");
  };

  FrameState y = pack(frame0, point0);
  const double length = std::abs(span.to - span.from);
  emit(span.from, unpack_frame(y), unpack_point(y));
  if (length == 0.0) return;

  if (cfg.output_spacing > 0.0) {
    const long samples = std::max(1L, static_cast<long>(std::ceil(length / cfg.output_spacing - 1e-9)));
    const double ds = (span.to - span.from) / static_cast<double>(samples);
    require(static_cast<double>(samples) <= static_cast<double>(cfg.max_steps), ErrorCode::StepLimitExceeded,
            "too many output samples");
    for (long i = 0; i < samples; ++i) {
      const double s = span.from + static_cast<double>(i) * ds;
      const double rate = std::max({local_rate(c, tau, s), local_rate(c, tau, s + 0.5 * ds), local_rate(c, tau, s + ds)});
      double h_max = cfg.step;
      if (rate > 0.0) h_max = std::min(h_max, cfg.max_phase_step / rate);
      const long n = std::max(1L, static_cast<long>(std::ceil(std::abs(ds) / h_max - 1e-9)));
      advance(s, y, ds / static_cast<double>(n), n);
      const double s_out = (i + 1 == samples) ? span.to : span.from + static_cast<double>(i + 1) * ds;
      emit(s_out, unpack_frame(y), unpack_point(y));
    }
    return;
  }

  double rate = 0.0;
  constexpr int kProbe = 1024;
  for (int i = 0; i <= kProbe; ++i) rate = std::max(rate, local_rate(c, tau, span.from + (span.to - span.from) * i / kProbe));
  double h_max = cfg.step;
  if (rate > 0.0) h_max = std::min(h_max, cfg.max_phase_step / rate);
  const StepPlan plan = plan_steps(span.from, span.to, h_max, 0.0, cfg.max_steps);
  for (long k = 0; k < plan.total(); ++k) {
    const double s = span.from + static_cast<double>(k) * plan.h;
    advance(s, y, plan.h, 1);
    const double s_out = (k + 1 == plan.total()) ? span.to : span.from + static_cast<double>(k + 1) * plan.h;
    emit(s_out, unpack_frame(y), unpack_point(y));
  }
}

// Central/one-sided stencil of `width` nodes around i, clamped to the grid.
std::size_t stencil_start(std::size_t i, std::size_t n, std::size_t width) {
  const std::size_t half = width / 2;
  if (i < half) return 0;
  if (i + (width - half) > n) return n - width;
  return i - half;
}

}  // namespace

void Curve::validate(double unit_speed_tol) const {
  require(points.size() == s_grid.size(), ErrorCode::GridMismatch, "points and grid differ in length");
  require(frames.empty() || frames.size() == s_grid.size(), ErrorCode::GridMismatch,
          "frames and grid differ in length");
  for (std::size_t i = 1; i < s_grid.size(); ++i) {
    require(s_grid[i] > s_grid[i - 1], ErrorCode::GridNonUniform, "grid is not strictly increasing");
  }
  if (!has_frames()) return;
  for (std::size_t i = 1; i < s_grid.size(); ++i) {
    const double speed = distance(points[i], points[i - 1]) / (s_grid[i] - s_grid[i - 1]);
    require(std::abs(speed - 1.0) <= unit_speed_tol, ErrorCode::InvalidParameter,
            "curve is not parametrized by arclength");
  }
}

std::size_t IntrinsicSlice::flagged() const {
  return static_cast<std::size_t>(std::count(tau_valid.begin(), tau_valid.end(), false));
}

std::vector<FrameSample> frenet_integrate(const ScalarFn& c, const ScalarFn& tau, const FrenetFrame& frame0,
                                          Interval span, const SolverConfig& cfg) {
  std::vector<FrameSample> out;
  run_frenet(c, tau, frame0, Vec3{}, span, cfg,
             [&](double s, const FrenetFrame& f, const Vec3&) { out.push_back({s, f}); });
  return out;
}

Curve frenet_integrate_curve(const ScalarFn& c, const ScalarFn& tau, const FrenetFrame& frame0, const Vec3& point0,
                             Interval span, const SolverConfig& cfg) {
  Curve curve;
  run_frenet(c, tau, frame0, point0, span, cfg, [&](double s, const FrenetFrame& f, const Vec3& p) {
    curve.s_grid.push_back(s);
    curve.points.push_back(p);
    curve.frames.push_back(f);
  });
  return curve;
}

Curve curve_from_tangent(std::span<const TangentSample> tangents, const Vec3& base) {
  Curve curve;
  const std::size_t n = tangents.size();
  if (n == 0) return curve;
  curve.s_grid.reserve(n);
  curve.points.reserve(n);
  for (const auto& t : tangents) curve.s_grid.push_back(t.s);
  if (n > 1) {
    const double h = tangents[1].s - tangents[0].s;
    require(h > 0.0, ErrorCode::GridNonUniform, "tangent grid must be increasing");
    for (std::size_t i = 1; i < n; ++i) {
      require(std::abs((tangents[i].s - tangents[i - 1].s) - h) <= 1e-9 * std::max(1.0, std::abs(h)),
              ErrorCode::GridNonUniform, "tangent grid is not uniform");
    }
  }
  curve.points.resize(n);
  curve.points[0] = base;
  if (n == 1) return curve;
  const double h = tangents[1].s - tangents[0].s;
  // Even nodes: Simpson panels from node 0. Odd nodes: node 1 from the local
  // cubic, then Simpson panels from node 1. Every node is fourth order.
  const auto T = [&](std::size_t i) { return tangents[i].T; };
  if (n == 2) {
    curve.points[1] = base + 0.5 * h * (T(0) + T(1));
    return curve;
  }
  for (std::size_t i = 2; i < n; i += 2) {
    curve.points[i] = curve.points[i - 2] + (h / 3.0) * (T(i - 2) + 4.0 * T(i - 1) + T(i));
  }
  // Node 1 from the 4-point cubic integrated over the first interval (or the
  // 3-point parabola when only three nodes exist).
  if (n >= 4) {
    curve.points[1] = base + (h / 24.0) * (9.0 * T(0) + 19.0 * T(1) - 5.0 * T(2) + T(3));
  } else {
    curve.points[1] = base + (h / 12.0) * (5.0 * T(0) + 8.0 * T(1) - T(2));
  }
  for (std::size_t i = 3; i < n; i += 2) {
    curve.points[i] = curve.points[i - 2] + (h / 3.0) * (T(i - 2) + 4.0 * T(i - 1) + T(i));
  }
  return curve;
}

std::vector<double> fd_weights(double x0, std::span<const double> x, int order) {
  const std::size_t n = x.size();
  require(order >= 0 && static_cast<std::size_t>(order) < n, ErrorCode::GridTooCoarse,
          "stencil too small for derivative order");
  const std::size_t m = static_cast<std::size_t>(order);
  // Fornberg's recursion, keeping only derivative orders 0..m.
  std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k) {
          c[i][k] = c1 * (static_cast<double>(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k) {
        c[j][k] = (c4 * c[j][k] - static_cast<double>(k) * c[j][k - 1]) / c3;
      }
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = c[i][m];
  return w;
}

IntrinsicSlice curvature_torsion_from_curve(const Curve& curve) {
  const std::size_t n = curve.size();
  require(n >= 5, ErrorCode::GridTooCoarse, "need at least 5 samples");
  require(curve.points.size() == n, ErrorCode::GridMismatch, "points and grid differ in length");
  IntrinsicSlice out;
  out.s = curve.s_grid;
  out.c.resize(n);
  out.tau.resize(n);
  out.tau_valid.resize(n);
  constexpr std::size_t kWidth = 5;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j0 = stencil_start(i, n, kWidth);
    const std::span<const double> xs(curve.s_grid.data() + j0, kWidth);
    Vec3 d1, d2, d3;
    const auto w1 = fd_weights(curve.s_grid[i], xs, 1);
    const auto w2 = fd_weights(curve.s_grid[i], xs, 2);
    const auto w3 = fd_weights(curve.s_grid[i], xs, 3);
    for (std::size_t k = 0; k < kWidth; ++k) {
      d1 += w1[k] * curve.points[j0 + k];
      d2 += w2[k] * curve.points[j0 + k];
      d3 += w3[k] * curve.points[j0 + k];
    }
    const Vec3 x12 = cross(d1, d2);
    const double speed = norm(d1);
    const double k = norm(x12) / (speed * speed * speed);
    out.c[i] = k;
    if (k > kCurvatureThreshold) {
      out.tau[i] = dot(x12, d3) / dot(x12, x12);
      out.tau_valid[i] = true;
    } else {
      out.tau[i] = 0.0;
      out.tau_valid[i] = false;
    }
  }
  return out;
}

double bf_residual(const Curve& prev, const Curve& mid, const Curve& next, double t_prev, double t_mid,
                   double t_next) {
  const std::size_t n = mid.size();
  require(prev.size() == n && next.size() == n && mid.points.size() == n && prev.points.size() == n &&
              next.points.size() == n,
          ErrorCode::GridMismatch, "snapshots have different grids");
  for (std::size_t i = 0; i < n; ++i) {
    const double tol = 1e-12 * std::max(1.0, std::abs(mid.s_grid[i]));
    require(std::abs(prev.s_grid[i] - mid.s_grid[i]) <= tol && std::abs(next.s_grid[i] - mid.s_grid[i]) <= tol,
            ErrorCode::GridMismatch, "snapshots have different grids");
  }
  require(n >= 3, ErrorCode::GridTooCoarse, "need at least 3 samples");
  require(t_prev < t_mid && t_mid < t_next, ErrorCode::InvalidParameter, "times must be increasing");
  const double ts[3] = {t_prev, t_mid, t_next};
  const auto wt = fd_weights(t_mid, ts, 1);
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double xs[3] = {mid.s_grid[i - 1], mid.s_grid[i], mid.s_grid[i + 1]};
    const auto w1 = fd_weights(xs[1], xs, 1);
    const auto w2 = fd_weights(xs[1], xs, 2);
    Vec3 chi_s, chi_ss;
    for (std::size_t k = 0; k < 3; ++k) {
      chi_s += w1[k] * mid.points[i - 1 + k];
      chi_ss += w2[k] * mid.points[i - 1 + k];
    }
    const Vec3 chi_t = wt[0] * prev.points[i] + wt[1] * mid.points[i] + wt[2] * next.points[i];
    worst = std::max(worst, norm(chi_t - cross(chi_s, chi_ss)));
  }
  return worst;
}

Vec3 hermite_point(const Curve& curve, double s) {
  const std::size_t n = curve.size();
  require(n >= 2 && curve.has_frames(), ErrorCode::InvalidParameter, "hermite interpolation needs framed samples");
  const double lo = curve.s_grid.front();
  const double hi = curve.s_grid.back();
  const double slack = 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  require(s >= lo - slack && s <= hi + slack, ErrorCode::OutOfProfileRange, "parameter outside sampled range");
  auto it = std::upper_bound(curve.s_grid.begin(), curve.s_grid.end(), s);
  std::size_t i = static_cast<std::size_t>(std::distance(curve.s_grid.begin(), it));
  i = std::clamp<std::size_t>(i, 1, n - 1) - 1;
  const double h = curve.s_grid[i + 1] - curve.s_grid[i];
  const double u = (s - curve.s_grid[i]) / h;
  const double u2 = u * u;
  const double u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1;
  const double h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2;
  const double h11 = u3 - u2;
  return h00 * curve.points[i] + (h10 * h) * curve.frames[i].T + h01 * curve.points[i + 1] +
         (h11 * h) * curve.frames[i + 1].T;
}

void write_curve_csv(const Curve& curve, const std::string& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "w"), &std::fclose);
  require(f != nullptr, ErrorCode::IoError, "cannot open " + path + " for writing");
  std::fputs(curve.has_frames() ? "s,x,y,z,Tx,Ty,Tz,nx,ny,nz,bx,by,bz\n" : "s,x,y,z\n", f.get());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const Vec3& p = curve.points[i];
    std::fprintf(f.get(), "%.17g,%.17g,%.17g,%.17g", curve.s_grid[i], p.x, p.y, p.z);
    if (curve.has_frames()) {
      const FrenetFrame& fr = curve.frames[i];
      for (const Vec3* v : {&fr.T, &fr.n, &fr.b}) std::fprintf(f.get(), ",%.17g,%.17g,%.17g", v->x, v->y, v->z);
    }
    std::fputc('\n', f.get());
  }
  require(std::ferror(f.get()) == 0, ErrorCode::IoError, "write failed for " + path);
}

}  // namespace filament
