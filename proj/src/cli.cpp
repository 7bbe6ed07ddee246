#include "filament/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "filament/error.hpp"
#include "filament/flow.hpp"
#include "filament/geometry.hpp"
#include "filament/io.hpp"
#include "filament/nls.hpp"
#include "filament/selfsimilar.hpp"
#include "filament/spiral.hpp"
#include "filament/theta.hpp"

namespace filament::cli {
namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kSubcommands = {"profile", "angle",  "evolve",    "theta",
                                               "nls",     "spiral", "stability", "selfcheck"};

// Options that are part of the run's identity, in registration order.
class Registry {
 public:
  explicit Registry(CLI::App& app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& name, T& var, const std::string& desc, bool hashed = true) {
    CLI::Option* opt = app_.add_option("--" + name, var, desc)->capture_default_str();
    if (hashed) entries_.emplace_back(name, [&var] { return canonical(var); });
    return opt;
  }

  std::string canonical_config(const std::string& sub) const {
    std::string s = sub + "\n";
    for (const auto& [k, f] : entries_) s += k + "=" + f() + "\n";
    return s;
  }

 private:
  template <class T>
  static std::string canonical(const T& v) {
    if constexpr (std::is_floating_point_v<T>) {
      return format_double(v);
    } else if constexpr (std::is_integral_v<T>) {
      return std::to_string(v);
    } else {
      return std::string(v);
    }
  }

  CLI::App& app_;
  std::vector<std::pair<std::string, std::function<std::string()>>> entries_;
};

struct Common {
  std::string config;
  std::string out = "filamentlab-out";
  unsigned threads = 1;
  long long seed = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Flat `key = value` lines; '#' starts a comment.
std::vector<std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot read config " + path);
  std::vector<std::string> flags;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::InvalidParameter,
            path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), ErrorCode::InvalidParameter, path + ":" + std::to_string(lineno) + ": empty key");
    if (key.rfind("--", 0) != 0) key = "--" + key;
    flags.push_back(key);
    flags.push_back(value);
  }
  return flags;
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string frame_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu.csv", k);
  return buf;
}

std::string snapshot_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%04zu.csv", k);
  return buf;
}

void write_field_csv(const ComplexField& f, const std::string& path) {
  std::string body = "s,re,im\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    body += format_double(f.s(i)) + "," + format_double(f.values[i].real()) + "," +
            format_double(f.values[i].imag()) + "\n";
  }
  write_text_file(path, body);
}

std::vector<double> curve_range(const Curve& c) {
  return {c.s_grid.front(), c.s_grid.back()};
}

void finish(JsonWriter& j, const std::string& path) {
  j.field("timestamp", timestamp());
  j.end_object();
  write_text_file(path, j.str() + "\n");
}

// Angle between A+ and -A-.
double measured_gamma(const Vec3& plus, const Vec3& minus) {
  return std::acos(std::clamp(-dot(plus, minus), -1.0, 1.0));
}

// ----------------------------------------------------------------- profile

struct ProfileArgs {
  double a = 0.5;
  double smax = 20.0;
  double ds = kDefaultProfileSpacing;
};

void register_args(Registry& r, ProfileArgs& p) {
  r.add("a", p.a, "curvature parameter");
  r.add("smax", p.smax, "half-length of the profile");
  r.add("ds", p.ds, "output spacing");
}

void run_profile(const ProfileArgs& p, const Common&, const fs::path& dir, std::ostream&) {
  SolverConfig cfg;
  cfg.output_spacing = p.ds;
  cfg.validate();
  const SelfSimilarProfile prof = profile(p.a, p.smax, cfg);
  const std::vector<double> roots = self_intersections(prof);
  write_curve_csv(prof.curve, (dir / "profile.csv").string());

  JsonWriter j;
  j.begin_object();
  j.field("a", p.a).field("s_max", p.smax);
  j.field("A_plus", prof.A_plus.vec()).field("A_minus", prof.A_minus.vec());
  j.field("a1_estimate", prof.a1_estimate).field("a1_error_bound", prof.a1_error_bound);
  j.field("gamma", measured_gamma(prof.A_plus.vec(), prof.A_minus.vec()));
  j.field("intersections", roots);
  finish(j, (dir / "profile.json").string());
}

// ------------------------------------------------------------------- angle

struct AngleArgs {
  double a = 0.5;
  double smax = 400.0;
  std::string method = "both";
};

void register_args(Registry& r, AngleArgs& p) {
  r.add("a", p.a, "curvature parameter");
  r.add("smax", p.smax, "integration half-length");
  r.add("method", p.method, "closed, frenet, theta or both")
      ->check(CLI::IsMember({"closed", "frenet", "theta", "both"}));
}

void run_angle(const AngleArgs& p, const Common&, const fs::path& dir, std::ostream&) {
  const CornerAngle exact = corner_angle(p.a);
  JsonWriter j;
  j.begin_object();
  j.field("a", p.a).field("s_max", p.smax).field("method", p.method);
  j.field("closed_form", exact.a1).field("gamma_closed_form", exact.gamma);
  if (p.method == "frenet" || p.method == "both") {
    const SelfSimilarProfile prof = profile(p.a, p.smax);
    j.field("ode_estimate", prof.a1_estimate).field("ode_error_bound", prof.a1_error_bound);
    j.field("gamma_measured", measured_gamma(prof.A_plus.vec(), prof.A_minus.vec()));
  }
  if (p.method == "theta" || p.method == "both") {
    const ThetaLimit lim = a1_from_theta(p.a, p.smax);
    if (p.method == "theta") {
      j.field("ode_estimate", lim.a1).field("ode_error_bound", lim.spread);
    } else {
      j.field("theta_estimate", lim.a1).field("theta_spread", lim.spread);
    }
    j.field("theta_energy_drift", lim.energy_drift);
  }
  finish(j, (dir / "angle.json").string());
}

// ------------------------------------------------------------------ evolve

struct EvolveArgs {
  double a = 0.5;
  double tmin = 0.05;
  double tmax = 1.0;
  std::size_t slices = 33;
  double smax = 5.0;
  double ds = 0.01;
};

void register_args(Registry& r, EvolveArgs& p) {
  r.add("a", p.a, "curvature parameter");
  r.add("tmin", p.tmin, "smallest time");
  r.add("tmax", p.tmax, "largest time (frame pinned here)");
  r.add("slices", p.slices, "log-uniform time slices");
  r.add("smax", p.smax, "half-length of each curve");
  r.add("ds", p.ds, "output spacing in s");
}

void run_evolve(const EvolveArgs& p, const Common& common, const fs::path& dir, std::ostream&) {
  require(p.a > 0.0 && std::isfinite(p.a), ErrorCode::InvalidParameter, "a must be > 0");
  require(p.tmin > 0.0 && p.tmin < p.tmax && std::isfinite(p.tmax), ErrorCode::InvalidParameter,
          "need 0 < tmin < tmax");
  require(p.slices >= 3, ErrorCode::InvalidParameter, "slices must be >= 3");
  require(p.smax > 0.0 && p.ds > 0.0 && p.ds <= p.smax, ErrorCode::InvalidParameter, "need 0 < ds <= smax");
  const SelfSimilarSource source(p.a, log_grid(p.tmin, p.tmax, p.slices));
  ReconstructOptions ro;
  ro.s_max = p.smax;
  ro.s_step = p.ds;
  ro.threads = common.threads;
  const FlowResult flow =
      reconstruct_flow(source, FrenetFrame::identity(), Vec3{0.0, 0.0, 2.0 * p.a * std::sqrt(p.tmax)}, ro);

  const SelfSimilarProfile prof = profile(p.a, p.smax / std::sqrt(p.tmin) + 1.0);
  double max_error = 0.0;
  for (std::size_t k = 0; k < flow.curves.size(); ++k) {
    const Curve& c = flow.curves[k];
    for (std::size_t i = 0; i < c.size(); ++i) {
      max_error = std::max(max_error, distance(c.points[i], chi(prof, c.s_grid[i], flow.times[k])));
    }
    write_curve_csv(c, (dir / frame_name(k)).string());
  }

  JsonWriter j;
  j.begin_object();
  j.field("a", p.a).field("t_grid", flow.times).field("s_range", curve_range(flow.curves.front()));
  j.field("max_error_vs_profile", max_error);
  j.field("trace_constant", flow.trace_constant).field("trace_bound", flow.trace_bound);
  finish(j, (dir / "run.json").string());
}

// ------------------------------------------------------------------- theta

struct ThetaArgs {
  double a = 0.5;
  double smax = 400.0;
};

void register_args(Registry& r, ThetaArgs& p) {
  r.add("a", p.a, "curvature parameter");
  r.add("smax", p.smax, "integration length");
}

void run_theta(const ThetaArgs& p, const Common&, const fs::path& dir, std::ostream&) {
  const ThetaLimit lim = a1_from_theta(p.a, p.smax);
  JsonWriter j;
  j.begin_object();
  j.field("a", p.a).field("s_max", p.smax);
  j.field("a1", lim.a1).field("a1_spread", lim.spread).field("energy_drift", lim.energy_drift);
  finish(j, (dir / "theta.json").string());
}

// --------------------------------------------------------------------- nls

struct NlsArgs {
  std::string experiment = "demo";
  double a = 0.5;
  int sign = 1;
  double kappa = 0.5;
  double t0 = 1.0;
  double t1 = 2.0;
  double length = 256.0;
  std::size_t points = 1024;
  long steps = 2000;
  long snapshots = 10;
  double eps = 1e-2;
  double width = 2.0;
};

void register_args(Registry& r, NlsArgs& p) {
  r.add("experiment", p.experiment, "demo or longrange")->check(CLI::IsMember({"demo", "longrange"}));
  r.add("a", p.a, "background modulus");
  r.add("sign", p.sign, "+1 focusing, -1 defocusing")->check(CLI::IsMember({-1, 1}));
  r.add("kappa", p.kappa, "nonlinearity coefficient");
  r.add("t0", p.t0, "initial time");
  r.add("t1", p.t1, "final time");
  r.add("length", p.length, "periodic box length");
  r.add("points", p.points, "grid points (power of two)");
  r.add("steps", p.steps, "splitting steps");
  r.add("snapshots", p.snapshots, "snapshots after the initial one");
  r.add("eps", p.eps, "L2 norm of the perturbation");
  r.add("width", p.width, "perturbation width");
}

void run_nls_demo(const NlsArgs& p, const Common& common, const fs::path& dir) {
  require(p.snapshots >= 1 && p.steps >= p.snapshots && p.steps % p.snapshots == 0, ErrorCode::InvalidParameter,
          "steps must be a positive multiple of snapshots");
  NlsProblem problem;
  problem.sign = p.sign;
  problem.nonlinearity = p.kappa;
  problem.background_a = p.a;
  problem.potential = Potential::Gp;
  problem.t_span = {p.t0, p.t1};
  problem.validate();

  ComplexField v0 = gaussian_field(p.length, p.points, p.width, p.eps);
  std::mt19937_64 rng(static_cast<std::uint64_t>(common.seed));
  const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  for (Complex& z : v0.values) z = p.a + z * std::polar(1.0, phase);

  EvolveOptions eo;
  eo.steps = p.steps;
  eo.snapshot_every = p.steps / p.snapshots;
  const EvolveResult run = evolve(problem, v0, eo);

  std::vector<double> energy;
  for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
    energy.push_back(gp_energy(run.snapshots[k], run.times[k], p.a, p.sign, p.kappa));
    write_field_csv(run.snapshots[k], (dir / snapshot_name(k)).string());
  }

  JsonWriter j;
  j.begin_object();
  j.field("experiment", p.experiment);
  j.field("sign", p.sign).field("a", p.a).field("kappa", p.kappa).field("seed", common.seed);
  j.field("t_grid", run.times).field("mass_drift", run.mass_drift).field("energy_series", energy);
  j.field("energy_law_defect", gp_energy_law_defect(run.snapshots, run.times, p.a, p.sign, p.kappa));
  j.field("max_aliasing", run.max_aliasing);
  finish(j, (dir / "run.json").string());
}

void run_nls_longrange(const NlsArgs& p, const fs::path& dir) {
  LongRangeOptions lo;
  lo.a = p.a;
  lo.sign = p.sign;
  lo.nonlinearity = p.kappa;
  lo.t_start = p.t0;
  lo.t_end = p.t1;
  lo.length = p.length;
  lo.points = p.points;
  lo.uplus_norm = p.eps;
  lo.width = p.width;
  lo.steps = p.steps;
  lo.snapshots = p.snapshots;
  const LongRangeReport rep = long_range_experiment(lo);

  JsonWriter j;
  j.begin_object();
  j.field("experiment", p.experiment);
  j.field("sign", p.sign).field("a", p.a).field("kappa", p.kappa);
  j.field("t_grid", rep.times).field("mass_drift", rep.mass_drift);
  j.field("defect_phase", rep.defect_phase).field("defect_free", rep.defect_free);
  j.field("defect_phase_deriv", rep.defect_phase_deriv);
  j.field("final_phase", rep.final_phase).field("final_free", rep.final_free).field("ratio", rep.ratio);
  j.field("slope_l2", rep.slope_l2).field("slope_deriv", rep.slope_deriv);
  finish(j, (dir / "run.json").string());
}

// Demo defaults differ from the long-range defaults; flags left untouched
// pick up the latter.
void apply_longrange_defaults(NlsArgs& p, const CLI::App& app) {
  const LongRangeOptions d;
  auto unset = [&](const char* name) { return app.count(name) == 0; };
  if (unset("--a")) p.a = d.a;
  if (unset("--sign")) p.sign = d.sign;
  if (unset("--kappa")) p.kappa = d.nonlinearity;
  if (unset("--t0")) p.t0 = d.t_start;
  if (unset("--t1")) p.t1 = d.t_end;
  if (unset("--length")) p.length = d.length;
  if (unset("--points")) p.points = d.points;
  if (unset("--steps")) p.steps = d.steps;
  if (unset("--snapshots")) p.snapshots = d.snapshots;
  if (unset("--eps")) p.eps = d.uplus_norm;
  if (unset("--width")) p.width = d.width;
}

void run_nls(const NlsArgs& p, const Common& common, const fs::path& dir, std::ostream&) {
  if (p.experiment == "longrange") {
    run_nls_longrange(p, dir);
  } else {
    run_nls_demo(p, common, dir);
  }
}

// ------------------------------------------------------------------ spiral

struct SpiralArgs {
  double mu = 0.2;
  double a = 0.5;
  double smax = 20.0;
  double ds = kDefaultProfileSpacing;
};

void register_args(Registry& r, SpiralArgs& p) {
  r.add("mu", p.mu, "rotation rate");
  r.add("a", p.a, "G(0) = 2a e3");
  r.add("smax", p.smax, "half-length of the profile");
  r.add("ds", p.ds, "output spacing");
}

void run_spiral(const SpiralArgs& p, const Common&, const fs::path& dir, std::ostream&) {
  const SpiralParams params = SpiralParams::make(p.mu, Vec3{0.0, 0.0, 2.0 * p.a}, UnitVec3(Vec3{1.0, 0.0, 0.0}));
  require(p.smax > 0.0, ErrorCode::InvalidParameter, "smax must be > 0");
  SolverConfig cfg;
  cfg.output_spacing = p.ds;
  cfg.validate();
  const SpiralProfile prof = spiral_profile(params, {-p.smax, p.smax}, cfg);
  write_curve_csv(prof.curve, (dir / "profile.csv").string());

  JsonWriter j;
  j.begin_object();
  j.field("mu", p.mu).field("a", p.a).field("s_max", p.smax);
  j.field("nu", params.nu).field("E0", spiral_energy(params));
  j.field("speed_defect", prof.speed_defect).field("lemma_residual", prof.lemma_residual);
  finish(j, (dir / "profile.json").string());
}

// --------------------------------------------------------------- stability

struct StabilityArgs {
  StabilityOptions o;
  double eps = 1e-2;
  double width = 2.0;
};

void register_args(Registry& r, StabilityArgs& p) {
  r.add("a", p.o.a, "curvature parameter");
  r.add("t0", p.o.t0, "largest time");
  r.add("tmin", p.o.t_min, "smallest time");
  r.add("window", p.o.window, "half-width of the curve window");
  r.add("vlength", p.o.v_length, "NLS box length");
  r.add("vpoints", p.o.v_points, "NLS grid points");
  r.add("dlogt", p.o.dlogt, "NLS step in log t");
  r.add("slices", p.o.slices, "time slices (odd)");
  r.add("ds", p.o.s_step, "output spacing in s");
  r.add("gate", p.o.gate, "abort below this fraction of a in |v|");
  r.add("eps", p.eps, "L2 norm of the scattering datum");
  r.add("width", p.width, "width of the scattering datum");
}

void run_stability(StabilityArgs p, const Common& common, const fs::path& dir, std::ostream&) {
  p.o.threads = common.threads;
  p.o.validate();
  const ComplexField u_plus = gaussian_field(p.o.v_length, p.o.v_points, p.width, p.eps);
  const StabilityReport rep = stability_experiment(p.o, u_plus);
  for (std::size_t k = 0; k < rep.flow.curves.size(); ++k) {
    write_curve_csv(rep.flow.curves[k], (dir / frame_name(k)).string());
  }

  JsonWriter j;
  j.begin_object();
  j.field("a", p.o.a).field("t_grid", rep.times);
  j.field("cone_defect", rep.cone_defect).field("gamma_measured", rep.gamma_measured);
  j.field("trace_constant", rep.trace_constant).field("sup_T_defect", rep.sup_T_defect);
  j.field("gamma_closed_form", rep.gamma_closed_form).field("trace_bound", rep.trace_bound);
  j.field("A_plus", rep.A_plus).field("A_minus", rep.A_minus).field("corner", rep.corner);
  j.field("identity_residual", rep.identity_residual).field("identity_relative", rep.identity_relative);
  j.field("min_modulus", rep.min_modulus).field("mass_drift", rep.mass_drift);
  j.field("max_aliasing", rep.max_aliasing);
  j.field("eps", p.eps).field("width", p.width).field("t0", p.o.t0).field("t_min", p.o.t_min);
  j.field("window", p.o.window).field("v_length", p.o.v_length).field("v_points", p.o.v_points);
  j.field("dlogt", p.o.dlogt);
  finish(j, (dir / "run.json").string());
}

// --------------------------------------------------------------- selfcheck

struct SelfcheckArgs {};

void register_args(Registry&, SelfcheckArgs&) {}

struct Check {
  std::string name;
  double value;
  double limit;
  bool pass() const { return std::isfinite(value) && value <= limit; }
};

std::vector<Check> selfcheck_suite(unsigned threads) {
  std::vector<Check> checks;
  const double a = 0.5;

  const SelfSimilarProfile prof = profile(a, 20.0);
  double modulus = 0.0;
  double parity = 0.0;
  const std::size_t n = prof.curve.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double s = prof.curve.s_grid[i];
    const Vec3& g = prof.curve.points[i];
    modulus = std::max(modulus, std::abs(dot(g, g) - (s * s + 4.0 * a * a)) / (s * s + 4.0 * a * a));
    const Vec3& m = prof.curve.points[n - 1 - i];
    parity = std::max(parity, distance(g, Vec3{-m.x, m.y, m.z}));
  }
  checks.push_back({"profile_modulus", modulus, 1e-8});
  checks.push_back({"profile_parity", parity, 1e-8});

  const SelfSimilarProfile wide = profile(a, 100.0);
  checks.push_back({"angle_law_excess", std::abs(wide.a1_estimate - corner_angle(a).a1) - wide.a1_error_bound, 0.0});

  double corner = 0.0;
  for (double t : {1.0, 0.25}) {
    for (double s = -5.0; s <= 5.0; s += 0.05) {
      const Vec3 cone = s >= 0.0 ? s * prof.A_plus.vec() : s * prof.A_minus.vec();
      corner = std::max(corner, distance(chi(prof, s, t), cone) / (2.0 * a * std::sqrt(t)));
    }
  }
  checks.push_back({"corner_bound_ratio", corner, 1.0});

  checks.push_back({"theta_energy_drift", a1_from_theta(a, 50.0).energy_drift, 1e-8});

  const SpiralParams sp = SpiralParams::make(0.3, Vec3{0.0, 0.0, 1.0}, UnitVec3(Vec3{1.0, 0.0, 0.0}));
  const SpiralProfile spiral = spiral_profile(sp, {-10.0, 10.0});
  checks.push_back({"spiral_lemma_residual", spiral.lemma_residual, 1e-8});

  NlsProblem problem;
  problem.background_a = a;
  problem.potential = Potential::Gp;
  problem.nonlinearity = 0.5;
  problem.t_span = {1.0, 2.0};
  ComplexField v0 = gaussian_field(64.0, 256, 2.0, 1e-2);
  for (Complex& z : v0.values) z += a;
  EvolveOptions eo;
  eo.steps = 400;
  checks.push_back({"nls_mass_drift", evolve(problem, v0, eo).mass_drift, 1e-10});

  const ComplexField v = gaussian_field(64.0, 512, 4.0, 1.0);
  const ComplexField u = pseudo_conformal(v, 2.0, 64.0, 512);
  const ComplexField back = pseudo_conformal_inverse(u, 2.0, 16.0, 512);
  double roundtrip = 0.0;
  for (std::size_t i = 0; i < back.size(); ++i) {
    roundtrip = std::max(roundtrip, std::abs(interpolate(v, back.s(i)) - back.values[i]));
  }
  checks.push_back({"pseudo_conformal_roundtrip", roundtrip, 1e-6});

  const SelfSimilarSource source(a, log_grid(0.25, 1.0, 5));
  ReconstructOptions ro;
  ro.s_max = 2.0;
  ro.threads = threads;
  const FlowResult flow = reconstruct_flow(source, FrenetFrame::identity(), Vec3{0.0, 0.0, 2.0 * a}, ro);
  double recon = 0.0;
  for (std::size_t k = 0; k < flow.curves.size(); ++k) {
    const Curve& c = flow.curves[k];
    for (std::size_t i = 0; i < c.size(); ++i) {
      recon = std::max(recon, distance(c.points[i], chi(prof, c.s_grid[i], flow.times[k])));
    }
  }
  checks.push_back({"reconstruction_error", recon, 1e-4});
  return checks;
}

int run_selfcheck(const SelfcheckArgs&, const Common& common, const fs::path& dir, std::ostream& out) {
  const std::vector<Check> checks = selfcheck_suite(common.threads);
  bool all = true;
  JsonWriter j;
  j.begin_object();
  j.key("checks").begin_array();
  for (const Check& c : checks) {
    all = all && c.pass();
    out << (c.pass() ? "PASS " : "FAIL ") << c.name << " value=" << format_double(c.value)
        << " limit=" << format_double(c.limit) << "\n";
    j.begin_object().field("name", c.name).field("value", c.value).field("limit", c.limit).field("pass", c.pass());
    j.end_object();
  }
  j.end_array();
  j.field("all_pass", all);
  finish(j, (dir / "selfcheck.json").string());
  return all ? 0 : 1;
}

// ---------------------------------------------------------------- dispatch

template <class Args, class Body>
int dispatch(const std::string& sub, std::vector<std::string> flags, std::ostream& out, Body&& body) {
  CLI::App app("filamentlab " + sub, "filamentlab " + sub);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  Common common;
  Args args;
  Registry reg(app);
  register_args(reg, args);
  app.add_option("--config", common.config, "flat key = value file (flags override it)");
  app.add_option("--out", common.out, "output directory")->capture_default_str();
  app.add_option("--threads", common.threads, "worker cap")->capture_default_str()->check(CLI::Range(1u, 1024u));
  reg.add("seed", common.seed, "random seed");

  std::reverse(flags.begin(), flags.end());
  try {
    app.parse(flags);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  }
  if constexpr (std::is_same_v<Args, NlsArgs>) {
    if (args.experiment == "longrange") apply_longrange_defaults(args, app);
  }

  if (const char* env = std::getenv("FILAMENTLAB_OUT"); env != nullptr && *env != '\0') common.out = env;
  const std::string cfg = reg.canonical_config(sub);
  const fs::path dir = fs::path(common.out) / (sub + "-" + hex64(fnv1a(cfg)));
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  write_text_file((dir / "config.txt").string(), cfg);

  int status = 0;
  if constexpr (std::is_same_v<std::invoke_result_t<Body, const Args&, const Common&, const fs::path&, std::ostream&>,
                               int>) {
    status = body(args, common, dir, out);
  } else {
    body(args, common, dir, out);
  }
  out << dir.string() << "\n";
  return status;
}

// Config-file entries go first so that later command-line flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& flags) {
  std::vector<std::string> from_file;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] == "--config" && i + 1 < flags.size()) {
      from_file = read_config(flags[i + 1]);
    } else if (flags[i].rfind("--config=", 0) == 0) {
      from_file = read_config(flags[i].substr(9));
    }
  }
  from_file.insert(from_file.end(), flags.begin(), flags.end());
  return from_file;
}

int run_sub(const std::string& sub, const std::vector<std::string>& raw, std::ostream& out) {
  const std::vector<std::string> flags = expand_config(raw);
  if (sub == "profile") return dispatch<ProfileArgs>(sub, flags, out, run_profile);
  if (sub == "angle") return dispatch<AngleArgs>(sub, flags, out, run_angle);
  if (sub == "evolve") return dispatch<EvolveArgs>(sub, flags, out, run_evolve);
  if (sub == "theta") return dispatch<ThetaArgs>(sub, flags, out, run_theta);
  if (sub == "nls") return dispatch<NlsArgs>(sub, flags, out, run_nls);
  if (sub == "spiral") return dispatch<SpiralArgs>(sub, flags, out, run_spiral);
  if (sub == "stability") return dispatch<StabilityArgs>(sub, flags, out, run_stability);
  return dispatch<SelfcheckArgs>(sub, flags, out, run_selfcheck);
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return trim(s);
}

std::string usage() {
  std::string s = "usage: filamentlab <subcommand> [--flag value ...] [--config file]\nsubcommands:";
  for (const auto& sub : kSubcommands) s += " " + sub;
  return s + "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    (args.empty() ? err : out) << usage();
    return args.empty() ? 2 : 0;
  }
  const std::string& sub = args[0];
  if (std::find(kSubcommands.begin(), kSubcommands.end(), sub) == kSubcommands.end()) {
    err << "UnknownFlag: unknown subcommand '" << sub << "'\n";
    return 2;
  }
  try {
    return run_sub(sub, std::vector<std::string>(args.begin() + 1, args.end()), out);
  } catch (const CLI::ExtrasError& e) {
    err << "UnknownFlag: " << one_line(e.what()) << "\n";
  } catch (const CLI::ParseError& e) {
    err << "ValidationFailed: " << one_line(e.what()) << "\n";
  } catch (const Error& e) {
    // Module messages already start with their code name.
    err << (e.code() == ErrorCode::IoError ? "" : "ValidationFailed: ") << one_line(e.what()) << "\n";
  } catch (const fs::filesystem_error& e) {
    err << "IoError: " << one_line(e.what()) << "\n";
  } catch (const std::exception& e) {
    err << "ValidationFailed: " << one_line(e.what()) << "\n";
  }
  return 2;
}

}  // namespace filament::cli
