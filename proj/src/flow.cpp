#include "filament/flow.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "filament/fft.hpp"
#include "filament/selfsimilar.hpp"

namespace filament {

namespace {

void require_log_uniform(const std::vector<double>& t) {
  require(t.size() >= 2, ErrorCode::GridTooCoarse, "need at least 2 times");
  for (double v : t) require(v > 0.0 && std::isfinite(v), ErrorCode::InvalidParameter, "times must be > 0");
  const double step = std::log(t[1] / t[0]);
  require(step > 0.0, ErrorCode::GridNonUniform, "times must be increasing");
  for (std::size_t k = 1; k < t.size(); ++k) {
    require(std::abs(std::log(t[k] / t[k - 1]) - step) <= 1e-9 * std::max(1.0, step), ErrorCode::GridNonUniform,
            "times are not log-uniform");
  }
}

void require_uniform(const std::vector<double>& s) {
  require(s.size() >= 2, ErrorCode::GridTooCoarse, "need at least 2 samples");
  const double h = s[1] - s[0];
  require(h > 0.0, ErrorCode::GridNonUniform, "grid must be increasing");
  for (std::size_t i = 1; i < s.size(); ++i) {
    require(std::abs(s[i] - s[i - 1] - h) <= 1e-9 * std::max(1.0, h), ErrorCode::GridNonUniform,
            "grid is not uniform");
  }
}

// Eight-point Lagrange weights for fractional position p (in node units)
// relative to the first stencil node.
struct Lagrange8 {
  static constexpr int kPoints = 8;
  double w[kPoints];

  explicit Lagrange8(double p) {
    static constexpr double kDenominator[kPoints] = {-5040.0, 720.0, -240.0, 144.0, -144.0, 240.0, -720.0, 5040.0};
    double prefix[kPoints + 1];
    double suffix[kPoints + 1];
    prefix[0] = 1.0;
    for (int m = 0; m < kPoints; ++m) prefix[m + 1] = prefix[m] * (p - m);
    suffix[kPoints] = 1.0;
    for (int m = kPoints - 1; m >= 0; --m) suffix[m] = suffix[m + 1] * (p - m);
    for (int j = 0; j < kPoints; ++j) w[j] = prefix[j] * suffix[j + 1] / kDenominator[j];
  }
};

// Window of the v-side field (and its first two derivatives) used by one
// u-side time slice.
struct VWindow {
  double t = 0.0;    // u-side time
  double big_t = 0;  // 1 / t
  double xi0 = 0.0;  // xi of values[0]
  double dx = 0.0;
  std::size_t origin = 0;  // index of xi = 0
  std::vector<Complex> v, v1, v2;
};

class VSideSource final : public IntrinsicSource {
 public:
  VSideSource(std::vector<VWindow> windows) : windows_(std::move(windows)) {
    for (const auto& w : windows_) times_.push_back(w.t);
  }

  const std::vector<double>& times() const override { return times_; }

  double curvature(std::size_t k, double s) const override {
    const Sample& e = eval(k, s);
    return std::abs(e.v) / std::sqrt(windows_[k].t);
  }

  double torsion(std::size_t k, double s) const override {
    const Sample& e = eval(k, s);
    const VWindow& w = windows_[k];
    return 0.5 * s / w.t - w.big_t * (e.v1 / e.v).imag();
  }

  OriginSample origin(std::size_t k) const override {
    const VWindow& w = windows_[k];
    const Complex v = w.v[w.origin];
    const Complex v1 = w.v1[w.origin];
    const Complex v2 = w.v2[w.origin];
    const double mod = std::abs(v);
    const double re1 = (std::conj(v) * v1).real();
    const double mod_s = re1 / mod;
    const double mod_ss = (std::norm(v1) + (std::conj(v) * v2).real()) / mod - re1 * re1 / (mod * mod * mod);
    OriginSample o;
    o.c = mod / std::sqrt(w.t);
    o.tau = -w.big_t * (v1 / v).imag();
    o.c_s = mod_s * std::pow(w.t, -1.5);
    const double c_ss = mod_ss * std::pow(w.t, -2.5);
    o.q = (c_ss - o.c * o.tau * o.tau) / o.c;
    return o;
  }

  double phase_at_origin(std::size_t k) const {
    const VWindow& w = windows_[k];
    return -std::arg(w.v[w.origin]);
  }

 private:
  struct Sample {
    const VSideSource* owner = nullptr;
    std::size_t k = 0;
    double s = std::numeric_limits<double>::quiet_NaN();
    Complex v, v1;
  };

  // Curvature and torsion are requested at the same s in turn; cache per thread.
  const Sample& eval(std::size_t k, double s) const {
    thread_local Sample cache;
    if (cache.owner == this && cache.k == k && cache.s == s) return cache;
    const VWindow& w = windows_[k];
    const double pos = (s * w.big_t - w.xi0) / w.dx;
    const long first = static_cast<long>(std::floor(pos)) - Lagrange8::kPoints / 2 + 1;
    require(first >= 0 && first + Lagrange8::kPoints <= static_cast<long>(w.v.size()), ErrorCode::ResampleOutOfRange,
            "u-side point maps outside the stored v window");
    const Lagrange8 lw(pos - static_cast<double>(first));
    Complex v = 0.0;
    Complex v1 = 0.0;
    for (int j = 0; j < Lagrange8::kPoints; ++j) {
      v += lw.w[j] * w.v[static_cast<std::size_t>(first + j)];
      v1 += lw.w[j] * w.v1[static_cast<std::size_t>(first + j)];
    }
    cache = {this, k, s, v, v1};
    return cache;
  }

  std::vector<VWindow> windows_;
  std::vector<double> times_;
};

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, const Fn& fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Curve symmetric_curve(const ScalarFn& c, const ScalarFn& tau, const FrenetFrame& frame, const Vec3& point,
                      double s_max, const SolverConfig& cfg) {
  const Curve fwd = frenet_integrate_curve(c, tau, frame, point, {0.0, s_max}, cfg);
  const Curve bwd = frenet_integrate_curve(c, tau, frame, point, {0.0, -s_max}, cfg);
  Curve out;
  for (std::size_t i = bwd.size(); i-- > 1;) {
    out.s_grid.push_back(bwd.s_grid[i]);
    out.points.push_back(bwd.points[i]);
    out.frames.push_back(bwd.frames[i]);
  }
  out.s_grid.insert(out.s_grid.end(), fwd.s_grid.begin(), fwd.s_grid.end());
  out.points.insert(out.points.end(), fwd.points.begin(), fwd.points.end());
  out.frames.insert(out.frames.end(), fwd.frames.begin(), fwd.frames.end());
  return out;
}

void fill_trace(FlowResult& r) {
  if (r.curves.empty()) return;
  r.trace = r.curves.front();
  r.trace_constant = 0.0;
  for (std::size_t k = 1; k < r.curves.size(); ++k) {
    const Curve& cv = r.curves[k];
    double worst = 0.0;
    for (std::size_t i = 0; i < cv.size(); ++i) worst = std::max(worst, distance(cv.points[i], r.trace.points[i]));
    r.trace_constant = std::max(r.trace_constant, worst / std::sqrt(r.times[k]));
  }
  r.trace_bound = r.trace_constant * std::sqrt(r.times.front());
}

// Tangent of the self-similar profile at x by cubic Hermite (T' = a n).
Vec3 profile_tangent(const SelfSimilarProfile& p, double x) {
  const Curve& g = p.curve;
  require(x >= g.s_grid.front() && x <= g.s_grid.back(), ErrorCode::OutOfProfileRange,
          "tangent requested outside the profile");
  const double h = g.s_grid[1] - g.s_grid[0];
  std::size_t i = static_cast<std::size_t>(std::floor((x - g.s_grid.front()) / h));
  i = std::min(i, g.size() - 2);
  const double u = (x - g.s_grid[i]) / h;
  const double u2 = u * u;
  const double u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * g.frames[i].T + ((u3 - 2 * u2 + u) * h * p.a) * g.frames[i].n +
         (-2 * u3 + 3 * u2) * g.frames[i + 1].T + ((u3 - u2) * h * p.a) * g.frames[i + 1].n;
}

}  // namespace

void IntrinsicData::validate() const {
  require(ns() >= 5, ErrorCode::GridTooCoarse, "need at least 5 s-samples");
  require(nt() >= 3, ErrorCode::GridTooCoarse, "need at least 3 time slices");
  require(c.size() == ns() * nt() && tau.size() == ns() * nt(), ErrorCode::GridMismatch,
          "data size does not match the grids");
  require_uniform(s_grid);
  require_log_uniform(t_grid);
  for (double v : c) require(v > kCurvatureThreshold, ErrorCode::CurvatureVanishes, "curvature must stay positive");
}

std::vector<double> uniform_grid(double from, double to, std::size_t n) {
  require(n >= 2, ErrorCode::GridTooCoarse, "need at least 2 nodes");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = from + (to - from) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

std::vector<double> log_grid(double from, double to, std::size_t n) {
  require(from > 0.0 && to > 0.0, ErrorCode::InvalidParameter, "log grid endpoints must be > 0");
  std::vector<double> g = uniform_grid(std::log(from), std::log(to), n);
  for (double& v : g) v = std::exp(v);
  g.front() = from;
  g.back() = to;
  return g;
}

double intrinsic_residual(const IntrinsicData& d) {
  require(d.nt() >= 3, ErrorCode::GridTooCoarse, "need at least 3 time slices");
  require(d.ns() >= 5, ErrorCode::GridTooCoarse, "need at least 5 s-samples");
  require(d.c.size() == d.ns() * d.nt() && d.tau.size() == d.ns() * d.nt(), ErrorCode::GridMismatch,
          "data size does not match the grids");
  require_uniform(d.s_grid);
  const double h = d.s_grid[1] - d.s_grid[0];
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < d.nt(); ++k) {
    const double ts[3] = {d.t_grid[k - 1], d.t_grid[k], d.t_grid[k + 1]};
    const auto wt = fd_weights(ts[1], ts, 1);
    const auto q = [&](std::size_t j) {
      const double c = d.c_at(k, j);
      const double c_ss = (d.c_at(k, j + 1) - 2.0 * c + d.c_at(k, j - 1)) / (h * h);
      return (c_ss - c * d.tau_at(k, j) * d.tau_at(k, j)) / c;
    };
    for (std::size_t i = 2; i + 2 < d.ns(); ++i) {
      const double c = d.c_at(k, i);
      const double tau = d.tau_at(k, i);
      const double c_t = wt[0] * d.c_at(k - 1, i) + wt[1] * c + wt[2] * d.c_at(k + 1, i);
      const double tau_t = wt[0] * d.tau_at(k - 1, i) + wt[1] * tau + wt[2] * d.tau_at(k + 1, i);
      const double c_s = (d.c_at(k, i + 1) - d.c_at(k, i - 1)) / (2.0 * h);
      const double ctau_s =
          (d.c_at(k, i + 1) * d.tau_at(k, i + 1) - d.c_at(k, i - 1) * d.tau_at(k, i - 1)) / (2.0 * h);
      const double q_s = (q(i + 1) - q(i - 1)) / (2.0 * h);
      worst = std::max(worst, std::abs(c_t + ctau_s + c_s * tau));
      worst = std::max(worst, std::abs(tau_t - q_s - c_s * c));
    }
  }
  return worst;
}

SampledSource::SampledSource(const IntrinsicData& data) : data_(data) {
  data_.validate();
  const auto it = std::min_element(data_.s_grid.begin(), data_.s_grid.end(),
                                   [](double x, double y) { return std::abs(x) < std::abs(y); });
  origin_ = static_cast<std::size_t>(std::distance(data_.s_grid.begin(), it));
  const double h = data_.s_grid[1] - data_.s_grid[0];
  require(std::abs(*it) <= 1e-9 * h, ErrorCode::GridMismatch, "s = 0 must be a grid node");
  require(origin_ >= 2 && origin_ + 2 < data_.ns(), ErrorCode::GridTooCoarse, "s = 0 too close to the grid edge");
}

double SampledSource::interp(const std::vector<double>& field, std::size_t k, double s) const {
  const double h = data_.s_grid[1] - data_.s_grid[0];
  const double pos = (s - data_.s_grid.front()) / h;
  require(pos >= -1e-9 && pos <= static_cast<double>(data_.ns() - 1) + 1e-9, ErrorCode::ResampleOutOfRange,
          "s outside the sampled grid");
  long first = static_cast<long>(std::floor(pos)) - 1;
  first = std::clamp(first, 0L, static_cast<long>(data_.ns()) - 4);
  const double p = pos - static_cast<double>(first);
  const double* f = field.data() + k * data_.ns() + static_cast<std::size_t>(first);
  // Cubic Lagrange on nodes 0..3.
  return -f[0] * (p - 1) * (p - 2) * (p - 3) / 6.0 + f[1] * p * (p - 2) * (p - 3) / 2.0 -
         f[2] * p * (p - 1) * (p - 3) / 2.0 + f[3] * p * (p - 1) * (p - 2) / 6.0;
}

double SampledSource::curvature(std::size_t k, double s) const { return interp(data_.c, k, s); }
double SampledSource::torsion(std::size_t k, double s) const { return interp(data_.tau, k, s); }

OriginSample SampledSource::origin(std::size_t k) const {
  const double h = data_.s_grid[1] - data_.s_grid[0];
  const std::size_t i = origin_;
  const auto c = [&](long off) { return data_.c_at(k, static_cast<std::size_t>(static_cast<long>(i) + off)); };
  OriginSample o;
  o.c = c(0);
  o.tau = data_.tau_at(k, i);
  o.c_s = (c(-2) - 8.0 * c(-1) + 8.0 * c(1) - c(2)) / (12.0 * h);
  const double c_ss = (-c(-2) + 16.0 * c(-1) - 30.0 * c(0) + 16.0 * c(1) - c(2)) / (12.0 * h * h);
  o.q = (c_ss - o.c * o.tau * o.tau) / o.c;
  return o;
}

FlowResult reconstruct_flow(const IntrinsicSource& source, const FrenetFrame& frame0, const Vec3& point0,
                            const ReconstructOptions& opts) {
  const std::vector<double>& t = source.times();
  require(t.size() >= 3, ErrorCode::GridTooCoarse, "need at least 3 time slices");
  require_log_uniform(t);
  require(opts.s_max > 0.0 && opts.s_step > 0.0, ErrorCode::InvalidParameter, "s_max and s_step must be > 0");
  require(frame0.defect() <= 1e-8, ErrorCode::InvalidParameter, "initial frame is not orthonormal");
  const std::size_t K = t.size();

  std::vector<OriginSample> origin(K);
  for (std::size_t k = 0; k < K; ++k) {
    origin[k] = source.origin(k);
    require(origin[k].c > kCurvatureThreshold, ErrorCode::CurvatureVanishes, "curvature vanishes at s = 0");
    require(std::isfinite(origin[k].tau) && std::isfinite(origin[k].c_s) && std::isfinite(origin[k].q),
            ErrorCode::NonFiniteCoefficient, "non-finite coefficients at s = 0");
  }

  // Frame and point at s = 0, in sigma = log t; stages use grid values.
  using Y = State<12>;
  const auto rhs = [&](std::size_t k, const Y& y) {
    const OriginSample& o = origin[k];
    const double w = t[k];
    const double ct = o.c * o.tau;
    Y d;
    for (int i = 0; i < 3; ++i) {
      const double T = y[i], n = y[3 + i], b = y[6 + i];
      d[i] = w * (-ct * n + o.c_s * b);
      d[3 + i] = w * (ct * T + o.q * b);
      d[6 + i] = w * (-o.c_s * T - o.q * n);
      d[9 + i] = w * o.c * b;
    }
    return d;
  };

  std::vector<std::size_t> slices;
  std::vector<FrenetFrame> frames;
  std::vector<Vec3> points;
  Y y{frame0.T.x, frame0.T.y, frame0.T.z, frame0.n.x, frame0.n.y, frame0.n.z,
      frame0.b.x, frame0.b.y, frame0.b.z, point0.x,   point0.y,   point0.z};
  for (std::size_t j = K - 1;; j -= 2) {
    slices.push_back(j);
    FrenetFrame f{{y[0], y[1], y[2]}, {y[3], y[4], y[5]}, {y[6], y[7], y[8]}};
    if (j != K - 1) f.orthonormalize();
    frames.push_back(f);
    points.push_back({y[9], y[10], y[11]});
    if (j < 2) break;
    const double h = std::log(t[j - 2]) - std::log(t[j]);
    const Y k1 = rhs(j, y);
    const Y k2 = rhs(j - 1, axpy(y, 0.5 * h, k1));
    const Y k3 = rhs(j - 1, axpy(y, 0.5 * h, k2));
    const Y k4 = rhs(j - 2, axpy(y, h, k3));
    for (std::size_t i = 0; i < 12; ++i) y[i] += (h / 6.0) * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    f = {{y[0], y[1], y[2]}, {y[3], y[4], y[5]}, {y[6], y[7], y[8]}};
    f.orthonormalize();
    for (int i = 0; i < 3; ++i) {
      y[i] = f.T[i];
      y[3 + i] = f.n[i];
      y[6 + i] = f.b[i];
    }
  }

  const std::size_t m = slices.size();
  FlowResult r;
  r.times.resize(m);
  r.curves.resize(m);
  r.frame_at_origin.resize(m);
  r.origin_points.resize(m);
  SolverConfig cfg = opts.frenet;
  cfg.output_spacing = opts.s_step;
  parallel_for(m, opts.threads, [&](std::size_t idx) {
    const std::size_t out = m - 1 - idx;  // increasing time order
    const std::size_t k = slices[idx];
    const ScalarFn c = [&, k](double s) {
      const double v = source.curvature(k, s);
      require(v > kCurvatureThreshold, ErrorCode::CurvatureVanishes, "curvature vanishes along the slice");
      return v;
    };
    const ScalarFn tau = [&, k](double s) { return source.torsion(k, s); };
    r.times[out] = t[k];
    r.frame_at_origin[out] = frames[idx];
    r.origin_points[out] = points[idx];
    r.curves[out] = symmetric_curve(c, tau, frames[idx], points[idx], opts.s_max, cfg);
  });
  fill_trace(r);
  return r;
}

FlowResult reconstruct_flow(const IntrinsicData& data, const FrenetFrame& frame0, const Vec3& point0,
                            const ReconstructOptions& opts) {
  const SampledSource source(data);
  return reconstruct_flow(source, frame0, point0, opts);
}

TraceEstimate trace_at_zero(const FlowResult& result) {
  const std::size_t m = result.times.size();
  require(m >= 4, ErrorCode::InsufficientTimeRange, "need at least 4 time slices");
  require(result.times.front() / result.times.back() <= 1e-2, ErrorCode::InsufficientTimeRange,
          "t_min / t_max must be <= 1e-2");
  TraceEstimate est;
  FlowResult copy_free = result;
  fill_trace(copy_free);
  est.trace = std::move(copy_free.trace);
  est.constant = copy_free.trace_constant;
  est.bound = copy_free.trace_bound;

  // Nodes near t_min, 4 t_min and 16 t_min, quadratic in sqrt(t) to 0.
  const double t_min = result.times.front();
  std::vector<std::size_t> picks;
  for (double factor : {1.0, 4.0, 16.0}) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < m; ++k) {
      if (std::abs(std::log(result.times[k] / (factor * t_min))) <
          std::abs(std::log(result.times[best] / (factor * t_min)))) {
        best = k;
      }
    }
    if (std::find(picks.begin(), picks.end(), best) == picks.end()) picks.push_back(best);
  }
  for (std::size_t k = 0; picks.size() < 3; ++k) {
    if (std::find(picks.begin(), picks.end(), k) == picks.end()) picks.push_back(k);
  }
  double r[3];
  for (int j = 0; j < 3; ++j) r[j] = std::sqrt(result.times[picks[j]]);
  const auto w = fd_weights(0.0, r, 0);
  est.origin = {};
  for (int j = 0; j < 3; ++j) est.origin += w[j] * result.origin_points[picks[j]];
  return est;
}

void StabilityOptions::validate() const {
  require(a > 0.0 && std::isfinite(a), ErrorCode::InvalidParameter, "a must be > 0");
  require(t_min > 0.0 && t_min < t0 && std::isfinite(t0), ErrorCode::InvalidParameter, "need 0 < t_min < t0");
  require(window > 0.0, ErrorCode::InvalidParameter, "window must be > 0");
  require(v_length > 0.0 && v_points >= 16 && (v_points & (v_points - 1)) == 0, ErrorCode::InvalidParameter,
          "v grid must have a power-of-two size >= 16");
  require(dlogt > 0.0, ErrorCode::InvalidParameter, "dlogt must be > 0");
  require(slices >= 5 && slices % 2 == 1, ErrorCode::InvalidParameter, "slices must be odd and >= 5");
  require(s_step > 0.0 && s_step < window, ErrorCode::InvalidParameter, "s_step must be in (0, window)");
  require(gate > 0.0 && gate < 1.0, ErrorCode::InvalidParameter, "gate must be in (0, 1)");
  frenet.validate();
}

ComplexField gaussian_field(double length, std::size_t n, double width, double l2) {
  ComplexField f(length, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = f.s(i);
    f.values[i] = std::exp(-0.5 * s * s / (width * width));
  }
  const double norm0 = l2_norm(f);
  if (norm0 > 0.0) {
    for (Complex& z : f.values) z *= l2 / norm0;
  }
  return f;
}

StabilityReport stability_experiment(const StabilityOptions& opts, const ComplexField& u_plus) {
  opts.validate();
  require(u_plus.size() == opts.v_points && std::abs(u_plus.domain_length - opts.v_length) <= 1e-12 * opts.v_length,
          ErrorCode::GridMismatch, "u_plus must live on the v grid");
  const double a = opts.a;
  const double T_hi = 1.0 / opts.t_min;
  const double T_lo = 1.0 / opts.t0;
  const std::size_t intervals = opts.slices - 1;
  const long per_slice =
      std::max(1L, static_cast<long>(std::ceil(std::log(T_hi / T_lo) / static_cast<double>(intervals) / opts.dlogt)));

  StabilityReport rep;
  std::vector<VWindow> windows(opts.slices);
  {
    NlsProblem problem;
    problem.sign = 1;
    problem.nonlinearity = 0.5;
    problem.background_a = a;
    problem.potential = Potential::Gp;
    problem.t_span = {T_hi, T_lo};
    EvolveOptions eo;
    eo.steps = per_slice * static_cast<long>(intervals);
    eo.snapshot_every = per_slice;
    const ComplexField v1 = long_range_ansatz(u_plus, a, 1, T_hi, 0.5);
    // Fail fast when the initial state already violates the gate.
    rep.min_modulus = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v1.size(); ++i) {
      if (std::abs(v1.s(i)) <= opts.window * T_hi) rep.min_modulus = std::min(rep.min_modulus, std::abs(v1.values[i]));
    }
    require(rep.min_modulus >= opts.gate * a, ErrorCode::CurvatureVanishes,
            "filament function too close to zero: min |v| = " + std::to_string(rep.min_modulus));
    EvolveResult run = evolve(problem, v1, eo);
    rep.mass_drift = run.mass_drift;
    rep.max_aliasing = run.max_aliasing;
    require(run.snapshots.size() == opts.slices, ErrorCode::InvalidParameter, "unexpected snapshot count");

    // Snapshot j is v at time T_j = T_hi (T_lo / T_hi)^{j / intervals}; the
    // matching u-side time 1/T_j increases with j.
    const double dx = u_plus.dx();
    const std::size_t n = u_plus.size();
    rep.min_modulus = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < opts.slices; ++j) {
      ComplexField& v = run.snapshots[j];
      const double big_t = run.times[j];
      const ComplexField d1 = spectral_derivative(v, 1);
      const ComplexField d2 = spectral_derivative(v, 2);
      const double half = opts.window * big_t + 8.0 * dx;
      const long centre = static_cast<long>(n / 2);
      const long reach = static_cast<long>(std::ceil(half / dx));
      require(centre - reach >= 0 && centre + reach < static_cast<long>(n), ErrorCode::ResampleOutOfRange,
              "v box too small for the requested u-side window");
      VWindow& w = windows[j];
      w.big_t = big_t;
      w.t = 1.0 / big_t;
      w.dx = dx;
      w.xi0 = v.s(static_cast<std::size_t>(centre - reach));
      w.origin = static_cast<std::size_t>(reach);
      const auto lo = static_cast<std::size_t>(centre - reach);
      const auto hi = static_cast<std::size_t>(centre + reach + 1);
      w.v.assign(v.values.begin() + lo, v.values.begin() + hi);
      w.v1.assign(d1.values.begin() + lo, d1.values.begin() + hi);
      w.v2.assign(d2.values.begin() + lo, d2.values.begin() + hi);
      for (const Complex& z : w.v) rep.min_modulus = std::min(rep.min_modulus, std::abs(z));
      v.values.clear();
      v.values.shrink_to_fit();
    }
  }
  require(rep.min_modulus >= opts.gate * a, ErrorCode::CurvatureVanishes,
          "filament function too close to zero: min |v| = " + std::to_string(rep.min_modulus));

  const VSideSource source(std::move(windows));
  ReconstructOptions ro;
  ro.s_max = opts.window;
  ro.s_step = opts.s_step;
  ro.frenet = opts.frenet;
  ro.threads = opts.threads;
  rep.flow = reconstruct_flow(source, FrenetFrame::identity(), Vec3{0.0, 0.0, 2.0 * a * std::sqrt(opts.t0)}, ro);
  rep.times = rep.flow.times;

  const TraceEstimate tr = trace_at_zero(rep.flow);
  rep.trace_constant = tr.constant;
  rep.trace_bound = tr.bound;
  rep.corner = tr.origin;

  // Secant directions over the outer half of the window.
  const Curve& trace = tr.trace;
  rep.cone_s_lo = 0.5 * opts.window;
  const Vec3 plus = trace.points.back() - tr.origin;
  const Vec3 minus = trace.points.front() - tr.origin;
  rep.A_plus = plus / norm(plus);
  rep.A_minus = minus / (-norm(minus));
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double s = trace.s_grid[i];
    if (std::abs(s) < rep.cone_s_lo) continue;
    const Vec3 dir = s > 0.0 ? rep.A_plus : rep.A_minus;
    rep.cone_defect = std::max(rep.cone_defect, norm(trace.points[i] - tr.origin - s * dir) / std::abs(s));
  }
  rep.gamma_measured = std::acos(std::clamp(-dot(rep.A_plus, rep.A_minus), -1.0, 1.0));
  rep.gamma_closed_form = corner_angle(a).gamma;

  // Tangent deviation from the unperturbed family.
  const SelfSimilarProfile prof = profile(a, opts.window / std::sqrt(opts.t_min) + 1.0, opts.frenet);
  for (std::size_t k = 0; k < rep.flow.times.size(); ++k) {
    const Curve& cv = rep.flow.curves[k];
    const double root = std::sqrt(rep.flow.times[k]);
    for (std::size_t i = 0; i < cv.size(); ++i) {
      const Vec3 Ta = profile_tangent(prof, cv.s_grid[i] / root);
      rep.sup_T_defect = std::max(rep.sup_T_defect, distance(cv.frames[i].T, Ta));
    }
  }

  // a^2/t + 2 phi_t(0,t) - 2 q(0,t) - c^2(0,t) on interior slices, with phi
  // tracked continuously in t.
  const std::vector<double>& ts = source.times();
  std::vector<double> phi(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    phi[k] = source.phase_at_origin(k);
    if (k > 0) {
      while (phi[k] - phi[k - 1] > std::numbers::pi) phi[k] -= 2.0 * std::numbers::pi;
      while (phi[k] - phi[k - 1] < -std::numbers::pi) phi[k] += 2.0 * std::numbers::pi;
    }
  }
  for (std::size_t k = 1; k + 1 < ts.size(); ++k) {
    const double nodes[3] = {ts[k - 1], ts[k], ts[k + 1]};
    const auto w = fd_weights(ts[k], nodes, 1);
    const double phi_t = w[0] * phi[k - 1] + w[1] * phi[k] + w[2] * phi[k + 1];
    const OriginSample o = source.origin(k);
    const double res = std::abs(a * a / ts[k] + 2.0 * phi_t - 2.0 * o.q - o.c * o.c);
    rep.identity_residual = std::max(rep.identity_residual, res);
    rep.identity_relative = std::max(rep.identity_relative, res * ts[k] / (a * a));
  }
  return rep;
}

}  // namespace filament
