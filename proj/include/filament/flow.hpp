#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "filament/geometry.hpp"
#include "filament/nls.hpp"

namespace filament {

// Curvature and torsion on a uniform s-grid and a log-uniform t-grid, stored
// row-major (one row per time).
struct IntrinsicData {
  std::vector<double> s_grid;
  std::vector<double> t_grid;
  std::vector<double> c;
  std::vector<double> tau;

  std::size_t ns() const { return s_grid.size(); }
  std::size_t nt() const { return t_grid.size(); }
  double& c_at(std::size_t k, std::size_t i) { return c[k * ns() + i]; }
  double c_at(std::size_t k, std::size_t i) const { return c[k * ns() + i]; }
  double& tau_at(std::size_t k, std::size_t i) { return tau[k * ns() + i]; }
  double tau_at(std::size_t k, std::size_t i) const { return tau[k * ns() + i]; }

  static IntrinsicData sample(std::vector<double> s_grid, std::vector<double> t_grid, const auto& c_fn,
                              const auto& tau_fn) {
    IntrinsicData d{std::move(s_grid), std::move(t_grid), {}, {}};
    d.c.resize(d.ns() * d.nt());
    d.tau.resize(d.ns() * d.nt());
    for (std::size_t k = 0; k < d.nt(); ++k) {
      for (std::size_t i = 0; i < d.ns(); ++i) {
        d.c_at(k, i) = c_fn(d.s_grid[i], d.t_grid[k]);
        d.tau_at(k, i) = tau_fn(d.s_grid[i], d.t_grid[k]);
      }
    }
    return d;
  }

  void validate() const;
};

std::vector<double> uniform_grid(double from, double to, std::size_t n);
std::vector<double> log_grid(double from, double to, std::size_t n);

// Max residual of c_t + (c tau)_s + c_s tau and tau_t - ((c_ss - c tau^2)/c)_s - c c_s
// with central differences on interior nodes.
double intrinsic_residual(const IntrinsicData& data);

// Values at s = 0 that drive the time evolution of the frame there.
struct OriginSample {
  double c = 0.0;
  double tau = 0.0;
  double c_s = 0.0;
  double q = 0.0;  // (c_ss - c tau^2) / c
};

// Intrinsic description of a flow on a log-uniform time grid (increasing).
class IntrinsicSource {
 public:
  virtual ~IntrinsicSource() = default;
  virtual const std::vector<double>& times() const = 0;
  virtual double curvature(std::size_t k, double s) const = 0;
  virtual double torsion(std::size_t k, double s) const = 0;
  virtual OriginSample origin(std::size_t k) const = 0;
};

// c = a / sqrt(t), tau = s / 2t.
class SelfSimilarSource final : public IntrinsicSource {
 public:
  SelfSimilarSource(double a, std::vector<double> times) : a_(a), times_(std::move(times)) {}
  const std::vector<double>& times() const override { return times_; }
  double curvature(std::size_t k, double) const override { return a_ / std::sqrt(times_[k]); }
  double torsion(std::size_t k, double s) const override { return 0.5 * s / times_[k]; }
  OriginSample origin(std::size_t k) const override { return {curvature(k, 0.0), 0.0, 0.0, 0.0}; }

 private:
  double a_;
  std::vector<double> times_;
};

// Sampled data; cubic interpolation in s, five-point differences at s = 0
// (which must be a grid node).
class SampledSource final : public IntrinsicSource {
 public:
  explicit SampledSource(const IntrinsicData& data);
  const std::vector<double>& times() const override { return data_.t_grid; }
  double curvature(std::size_t k, double s) const override;
  double torsion(std::size_t k, double s) const override;
  OriginSample origin(std::size_t k) const override;

 private:
  double interp(const std::vector<double>& field, std::size_t k, double s) const;
  IntrinsicData data_;
  std::size_t origin_ = 0;
};

struct ReconstructOptions {
  double s_max = 5.0;
  double s_step = 0.01;  // output spacing of each curve
  SolverConfig frenet;
  unsigned threads = 1;
};

struct FlowResult {
  std::vector<double> times;  // increasing
  std::vector<Curve> curves;
  std::vector<FrenetFrame> frame_at_origin;
  std::vector<Vec3> origin_points;
  Curve trace;  // chi(., t_min)
  double trace_constant = 0.0;
  double trace_bound = 0.0;  // trace_constant * sqrt(t_min)
};

// Integrates the frame at s = 0 backward in log t from (frame0, point0) at
// the largest time, then each slice in s. With K times, the slices
// K-1, K-3, ... are reconstructed (the others serve as RK midpoints).
FlowResult reconstruct_flow(const IntrinsicSource& source, const FrenetFrame& frame0, const Vec3& point0,
                            const ReconstructOptions& opts = {});
FlowResult reconstruct_flow(const IntrinsicData& data, const FrenetFrame& frame0, const Vec3& point0,
                            const ReconstructOptions& opts = {});

struct TraceEstimate {
  Curve trace;
  double constant = 0.0;
  double bound = 0.0;
  Vec3 origin;  // chi(0, t) extrapolated to t = 0 with the basis {1, sqrt t, t}
};

TraceEstimate trace_at_zero(const FlowResult& result);

struct StabilityOptions {
  double a = 0.5;
  double t0 = 1.0;      // largest u-side time; the frame is pinned there
  double t_min = 5e-4;  // smallest u-side time
  double window = 4.0;  // |s| <= window on the u-side
  double v_length = 16384.0;
  std::size_t v_points = 32768;
  double dlogt = 0.005;        // GP step in log t
  std::size_t slices = 121;    // u-side time slices (log-uniform, odd)
  double s_step = 0.01;
  double gate = 0.5;           // abort when min |v| < gate * a
  SolverConfig frenet;
  unsigned threads = 1;

  void validate() const;
};

struct StabilityReport {
  std::vector<double> times;  // reconstructed u-side times
  double sup_T_defect = 0.0;
  double cone_defect = 0.0;
  double cone_s_lo = 0.0;
  Vec3 A_plus;
  Vec3 A_minus;
  double gamma_measured = 0.0;
  double gamma_closed_form = 0.0;
  double trace_constant = 0.0;
  double trace_bound = 0.0;
  Vec3 corner;
  double identity_residual = 0.0;       // max |a^2/t + 2 phi_t - 2q - c^2| at s = 0
  double identity_relative = 0.0;       // the same divided by a^2/t
  double min_modulus = 0.0;             // min |v| over the used window
  double mass_drift = 0.0;
  double max_aliasing = 0.0;
  FlowResult flow;
};

// Builds v1 at t = 1/t_min from u_plus, runs the (1/2)-normalized focusing GP
// backward to t = 1/t0, maps to the filament function, reconstructs the
// curves and measures the corner.
StabilityReport stability_experiment(const StabilityOptions& opts, const ComplexField& u_plus);

// Gaussian exp(-s^2 / (2 width^2)) on the grid, scaled to the given L2 norm.
ComplexField gaussian_field(double length, std::size_t n, double width, double l2);

}  // namespace filament
