// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
#include <json.hpp>

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "filament/cli.hpp"
#include "filament/flow.hpp"
#include "filament/nls.hpp"
#include "filament/selfsimilar.hpp"
#include "filament/spiral.hpp"
#include "filament/theta.hpp"

namespace fs = std::filesystem;
using namespace filament;

namespace {

constexpr double kAngleTol = 1e-3;
constexpr double kConservedTol = 1e-8;
constexpr double kMassTol = 1e-10;
constexpr double kCrossTol = 1e-6;
constexpr double kReconstructTol = 1e-4;
constexpr double kMinOrder = 1.9;
constexpr double kConeTol = 0.05;
constexpr double kAngleDriftTol = 0.05;
constexpr double kRatioMax = 0.5;

double exact_a1(double a) { return std::exp(-std::numbers::pi * a * a / 2.0); }

SolverConfig spaced(double ds) {
  SolverConfig cfg;
  cfg.output_spacing = ds;
  return cfg;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Verdict()> check;
};

std::string fmt(const char* f, auto... v) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

Verdict angle_law() {
  bool ok = true;
  std::string d;
  for (double a : {0.25, 0.5, 1.0}) {
    const SelfSimilarProfile p = profile(a, 400.0);
    const ThetaLimit th = a1_from_theta(a, 400.0);
    const double exact = exact_a1(a);
    const double ef = std::abs(p.a1_estimate - exact);
    const double et = std::abs(th.a1 - exact);
    const double cross = std::abs(p.a1_estimate - th.a1);
    ok = ok && ef <= kAngleTol && et <= kAngleTol && cross <= p.a1_error_bound + th.spread;
    d += fmt("a=%.2f frenet %.3e theta %.3e cross %.3e; ", a, ef, et, cross);
  }
  return {ok, d};
}

Verdict corner_bound() {
  const double a = 0.5;
  const SelfSimilarProfile p = profile(a, 5.0 / std::sqrt(0.01) + 1.0);
  bool ok = true;
  double worst = 0.0;
  double at_zero = 0.0;
  for (double t : {1.0, 0.25, 0.01}) {
    const double bound = 2.0 * a * std::sqrt(t);
    for (int i = -1000; i <= 1000; ++i) {
      const double s = 0.005 * i;
      const Vec3 cone = (s >= 0.0 ? p.A_plus.vec() : p.A_minus.vec()) * s;
      const double ratio = distance(chi(p, s, t), cone) / bound;
      if (i == 0) {
        at_zero = std::max(at_zero, std::abs(ratio - 1.0));
      } else {
        worst = std::max(worst, ratio);
        ok = ok && ratio < 1.0;
      }
    }
  }
  ok = ok && at_zero < 1e-12;
  return {ok, fmt("max ratio off s=0 %.6f (< 1), |ratio-1| at s=0 %.1e", worst, at_zero)};
}

Verdict dichotomy() {
  const auto small = self_intersections(profile(0.1, 100.0));
  const auto big = self_intersections(profile(2.0, 100.0));
  return {small.empty() && !big.empty(),
          fmt("a=0.1: %zu crossings, a=2: %zu crossings (first at s=%.4f)", small.size(), big.size(),
              big.empty() ? 0.0 : big.front())};
}

struct CliRun {
  int code;
  fs::path dir;
};

CliRun cli(std::vector<std::string> args, const fs::path& out) {
  args.push_back("--out");
  args.push_back(out.string());
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  std::string body = o.str();
  body = body.substr(0, body.find_last_not_of('\n') + 1);
  return {code, fs::path(body.substr(body.find_last_of('\n') + 1))};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Scratch {
  fs::path path = fs::temp_directory_path() / ("filamentlab-acceptance-" + std::to_string(::getpid()));
  Scratch() {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Scratch() { fs::remove_all(path); }
};

Verdict conserved() {
  // Theta energy for the three canonical data, both directions.
  const double a = 0.5;
  const ScalarFn c = [a](double) { return a; };
  const ThetaCoefficients coef{c, [](double s) { return 0.5 * s; }, [](double) { return 0.0; }};
  double theta_drift = 0.0;
  for (const ThetaState& init : canonical_theta_data(a)) {
    for (double end : {100.0, -100.0}) {
      const auto traj = theta_solve(coef, init, {0.0, end}, spaced(0.05));
      const double e0 = theta_energy(traj.front(), a);
      for (const ThetaState& st : traj) theta_drift = std::max(theta_drift, std::abs(theta_energy(st, a) - e0) / e0);
    }
  }

  // Spiral energy along the (y, h, c2) profile and the lemma.
  double spiral_drift = 0.0;
  double lemma = 0.0;
  for (double mu : {0.3, -0.7}) {
    const SpiralParams sp = SpiralParams::make(mu, Vec3{0.0, 0.0, 2.0 * a}, UnitVec3{Vec3{1.0, 0.0, 0.0}});
    const SpiralProfile prof = spiral_profile(sp, {-100.0, 100.0});
    const double e0 = spiral_energy(sp);
    for (std::size_t i = 0; i < prof.curve.size(); ++i) {
      const double c2 = prof.c2[i];
      const double e = (0.25 * prof.y[i] * prof.y[i] + prof.h[i] * prof.h[i]) / c2 + 0.25 * (c2 + sp.nu) * (c2 + sp.nu);
      spiral_drift = std::max(spiral_drift, std::abs(e - e0) / e0);
    }
    lemma = std::max(lemma, prof.lemma_residual);
  }

  // Mass on the shipped nls demo.
  Scratch tmp;
  const CliRun demo = cli({"nls"}, tmp.path);
  double mass = demo.code == 0 ? nlohmann::json::parse(slurp(demo.dir / "run.json"))["mass_drift"].get<double>() : INFINITY;

  const bool ok = theta_drift <= kConservedTol && spiral_drift <= kConservedTol && lemma <= kConservedTol && mass <= kMassTol;
  return {ok, fmt("theta energy %.2e, spiral energy %.2e, lemma %.2e, nls demo mass %.2e", theta_drift, spiral_drift,
                  lemma, mass)};
}

Verdict cross_oracle() {
  const double a = 0.5;
  const ScalarFn c = [a](double) { return a; };
  const ScalarFn tau = [](double s) { return 0.5 * s; };
  const ThetaCoefficients coef{c, tau, [](double) { return 0.0; }};
  const auto data = canonical_theta_data(a);
  double frame_err = 0.0;
  for (double end : {50.0, -50.0}) {
    const auto t1 = theta_solve(coef, data[0], {0.0, end}, spaced(0.01));
    const auto t2 = theta_solve(coef, data[1], {0.0, end}, spaced(0.01));
    const auto t3 = theta_solve(coef, data[2], {0.0, end}, spaced(0.01));
    const auto frames = frame_from_theta(t1, t2, t3, c, 0.5);
    const auto ref = frenet_integrate(c, tau, FrenetFrame::identity(), {0.0, end}, spaced(0.01));
    if (ref.size() != frames.size()) return {false, "grid size mismatch"};
    for (std::size_t i = 0; i < ref.size(); ++i) frame_err = std::max(frame_err, distance(frames[i].T, ref[i].frame.T));
  }

  const SpiralProfile sp = spiral_profile(SpiralParams::make(0.0, Vec3{0.0, 0.0, 2.0 * a}, UnitVec3{Vec3{1.0, 0.0, 0.0}}),
                                          {-20.0, 20.0});
  const SelfSimilarProfile ss = profile(a, 20.0);
  double spiral_err = 0.0;
  if (sp.curve.size() != ss.curve.size()) return {false, "spiral grid mismatch"};
  for (std::size_t i = 0; i < ss.curve.size(); ++i) {
    spiral_err = std::max(spiral_err, distance(sp.curve.points[i], ss.curve.points[i]));
  }
  return {frame_err <= kCrossTol && spiral_err <= kCrossTol,
          fmt("theta vs Frenet T %.2e, spiral(mu=0) vs profile %.2e", frame_err, spiral_err)};
}

Verdict reconstruction() {
  const double a = 0.5;
  const Vec3 origin0{0.0, 0.0, 2.0 * a};
  const SelfSimilarProfile p = profile(a, 5.0 / std::sqrt(0.05) + 1.0);
  ReconstructOptions ro;
  ro.s_max = 5.0;
  const FlowResult flow = reconstruct_flow(SelfSimilarSource(a, log_grid(0.05, 1.0, 33)), FrenetFrame::identity(), origin0, ro);
  double err = 0.0;
  for (std::size_t k = 0; k < flow.curves.size(); ++k) {
    const Curve& cv = flow.curves[k];
    for (std::size_t i = 0; i < cv.size(); ++i) err = std::max(err, distance(cv.points[i], chi(p, cv.s_grid[i], flow.times[k])));
  }

  auto residual = [&](std::size_t nt, double ds) {
    ReconstructOptions o;
    o.s_max = 5.0;
    o.s_step = ds;
    const FlowResult f = reconstruct_flow(SelfSimilarSource(a, log_grid(0.05, 1.0, nt)), FrenetFrame::identity(), origin0, o);
    const std::size_t m = f.times.size() / 2;
    return bf_residual(f.curves[m - 1], f.curves[m], f.curves[m + 1], f.times[m - 1], f.times[m], f.times[m + 1]);
  };
  const double r1 = residual(257, 0.005);
  const double r2 = residual(513, 0.0025);
  const double order = std::log2(r1 / r2);
  return {err <= kReconstructTol && order >= kMinOrder,
          fmt("max error %.2e over %zu slices, residual %.2e -> %.2e (order %.2f)", err, flow.times.size(), r1, r2, order)};
}

Verdict stability() {
  StabilityOptions o;
  const ComplexField u_plus = gaussian_field(o.v_length, o.v_points, 2.0, 1e-2);
  const StabilityReport r = stability_experiment(o, u_plus);
  const double gamma_gap = std::abs(r.gamma_measured - corner_angle(o.a).gamma);
  const bool ok = r.trace_constant <= 3.0 * o.a && r.cone_defect <= kConeTol && gamma_gap <= kAngleDriftTol;
  return {ok, fmt("trace constant %.4f (<= %.2f), cone defect %.2e, |gamma - closed form| %.2e, min|v| %.4f", r.trace_constant,
                  3.0 * o.a, r.cone_defect, gamma_gap, r.min_modulus)};
}

Verdict long_range() {
  const LongRangeReport r = long_range_experiment(LongRangeOptions{});
  return {r.ratio <= kRatioMax, fmt("ratio %.4f (<= %.1f), slopes l2 %.4f deriv %.4f, mass %.1e", r.ratio, kRatioMax, r.slope_l2,
                                    r.slope_deriv, r.mass_drift)};
}

Verdict determinism() {
  Scratch tmp;
  const std::regex stamp(R"("timestamp":"[^"]*")");
  const std::vector<std::vector<std::string>> runs{
      {"profile", "--a", "0.5", "--smax", "40"},
      {"angle", "--a", "0.5", "--smax", "100", "--method", "both"},
      {"theta", "--a", "0.5", "--smax", "100"},
      {"evolve", "--slices", "9"},
      {"spiral", "--mu", "0.2"},
      {"nls", "--steps", "400", "--snapshots", "4", "--seed", "11"},
      {"selfcheck"},
  };
  std::size_t files = 0;
  for (const auto& args : runs) {
    const CliRun first = cli(args, tmp.path);
    if (first.code != 0) return {false, args[0] + " failed"};
    std::vector<std::pair<fs::path, std::string>> snap;
    for (const auto& e : fs::directory_iterator(first.dir)) {
      snap.emplace_back(e.path().filename(), std::regex_replace(slurp(e.path()), stamp, "\"timestamp\":\"\""));
    }
    const CliRun second = cli(args, tmp.path);
    if (second.code != 0 || second.dir != first.dir) return {false, args[0] + ": second run differs in directory"};
    for (const auto& [name, body] : snap) {
      if (std::regex_replace(slurp(second.dir / name), stamp, "\"timestamp\":\"\"") != body) {
        return {false, args[0] + ": " + name.string() + " differs"};
      }
      ++files;
    }
  }
  return {true, fmt("%zu subcommands, %zu files identical after masking timestamps", runs.size(), files)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "angle law", 10.0, angle_law},
      {2, "corner bound", 5.0, corner_bound},
      {3, "self-intersection dichotomy", 5.0, dichotomy},
      {4, "conserved quantities", 10.0, conserved},
      {5, "cross-oracle agreement", 10.0, cross_oracle},
      {6, "reconstruction fidelity", 60.0, reconstruction},
      {7, "corner stability", 300.0, stability},
      {8, "long-range correction", 300.0, long_range},
      {9, "determinism", 60.0, determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = v.pass && secs <= c.budget_s;
    failures += pass ? 0 : 1;
    std::printf("%s %d %s: %s [%.1f s, budget %.0f s]\n", pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs,
                c.budget_s);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
