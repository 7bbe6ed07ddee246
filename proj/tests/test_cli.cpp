#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "filament/cli.hpp"

namespace fs = std::filesystem;
using filament::cli::run;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
  // The artifact directory is the last line printed.
  fs::path dir() const {
    const std::string body = out.substr(0, out.find_last_not_of('\n') + 1);
    return fs::path(body.substr(body.find_last_of('\n') + 1));
  }
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("filamentlab-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json load(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

std::string mask_timestamp(std::string s) {
  return std::regex_replace(s, std::regex(R"("timestamp":"[^"]*")"), R"("timestamp":"")");
}

}  // namespace

TEST_CASE("angle reproduces the closed form") {
  TempDir tmp;
  const Outcome o = call({"angle", "--a", "0.5", "--method", "both", "--out", tmp.path.string()});
  REQUIRE(o.code == 0);
  const auto j = load(o.dir() / "angle.json");
  CHECK(std::abs(j["closed_form"].get<double>() - 0.67517) < 1e-4);
  CHECK(std::abs(j["ode_estimate"].get<double>() - j["closed_form"].get<double>()) < 1e-3);
  CHECK(std::abs(j["theta_estimate"].get<double>() - j["closed_form"].get<double>()) < 1e-3);
  CHECK(j.contains("timestamp"));
}

TEST_CASE("profile with a = 0 is the straight line") {
  TempDir tmp;
  const Outcome o = call({"profile", "--a", "0", "--smax", "10", "--out", tmp.path.string()});
  REQUIRE(o.code == 0);
  std::ifstream in(o.dir() / "profile.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("s,x,y,z", 0) == 0);
  int rows = 0;
  while (std::getline(in, line)) {
    double s, x, y, z;
    char c;
    std::istringstream ls(line);
    ls >> s >> c >> x >> c >> y >> c >> z;
    CHECK(std::abs(x - s) < 1e-11);
    CHECK(std::abs(y) < 1e-11);
    CHECK(std::abs(z) < 1e-11);
    ++rows;
  }
  CHECK(rows == 2001);
  const auto j = load(o.dir() / "profile.json");
  CHECK(j["intersections"].empty());
  const std::vector<std::string> order{"a", "s_max", "A_plus", "A_minus", "a1_estimate", "a1_error_bound", "gamma",
                                       "intersections", "timestamp"};
  const std::string raw = slurp(o.dir() / "profile.json");
  std::size_t pos = 0;
  for (const auto& k : order) {
    const std::size_t at = raw.find("\"" + k + "\"", pos);
    REQUIRE(at != std::string::npos);
    pos = at;
  }
}

TEST_CASE("selfcheck passes") {
  TempDir tmp;
  const Outcome o = call({"selfcheck", "--out", tmp.path.string()});
  CHECK(o.code == 0);
  CHECK(load(o.dir() / "selfcheck.json")["all_pass"].get<bool>());
}

TEST_CASE("artifact directories are named after the configuration") {
  TempDir tmp;
  const Outcome a = call({"theta", "--a", "0.5", "--smax", "20", "--out", tmp.path.string()});
  const Outcome b = call({"theta", "--smax", "20", "--a", "0.5", "--out", tmp.path.string()});
  const Outcome c = call({"theta", "--a", "0.6", "--smax", "20", "--out", tmp.path.string()});
  REQUIRE(a.code == 0);
  CHECK(a.dir() == b.dir());
  CHECK(a.dir() != c.dir());
  CHECK(std::regex_match(a.dir().filename().string(), std::regex("theta-[0-9a-f]{16}")));
  CHECK(a.dir().parent_path() == tmp.path);
  const auto j = load(a.dir() / "theta.json");
  for (const char* k : {"a", "s_max", "a1", "a1_spread", "energy_drift"}) CHECK(j.contains(k));
}

TEST_CASE("repeated runs are byte-identical apart from the timestamp") {
  TempDir tmp;
  for (const std::vector<std::string>& args :
       {std::vector<std::string>{"evolve", "--slices", "9", "--out"}, std::vector<std::string>{"spiral", "--mu", "0.2", "--out"},
        std::vector<std::string>{"nls", "--steps", "200", "--snapshots", "4", "--seed", "7", "--out"}}) {
    std::vector<std::string> full = args;
    full.push_back(tmp.path.string());
    const Outcome first = call(full);
    REQUIRE(first.code == 0);
    std::vector<std::pair<std::string, std::string>> snapshot;
    for (const auto& e : fs::directory_iterator(first.dir())) snapshot.emplace_back(e.path().filename().string(), slurp(e.path()));
    const Outcome second = call(full);
    REQUIRE(second.dir() == first.dir());
    for (const auto& [name, content] : snapshot) CHECK(mask_timestamp(slurp(first.dir() / name)) == mask_timestamp(content));
  }
}

TEST_CASE("nls demo writes snapshots and metadata") {
  TempDir tmp;
  const Outcome o = call({"nls", "--steps", "400", "--snapshots", "4", "--out", tmp.path.string()});
  REQUIRE(o.code == 0);
  const auto j = load(o.dir() / "run.json");
  CHECK(j["mass_drift"].get<double>() <= 1e-10);
  CHECK(j["t_grid"].size() == 5);
  CHECK(j["energy_series"].size() == 5);
  CHECK(fs::exists(o.dir() / "snapshot_0004.csv"));
  CHECK(slurp(o.dir() / "snapshot_0000.csv").rfind("s,re,im\n", 0) == 0);
}

TEST_CASE("config file values apply and flags override them") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "run.cfg";
  std::ofstream(cfg) << "# theta settings\na = 0.25\nsmax=30\n";
  const Outcome from_file = call({"theta", "--config", cfg.string(), "--out", tmp.path.string()});
  REQUIRE(from_file.code == 0);
  auto j = load(from_file.dir() / "theta.json");
  CHECK(j["a"].get<double>() == 0.25);
  CHECK(j["s_max"].get<double>() == 30.0);
  const Outcome overridden = call({"theta", "--config", cfg.string(), "--a", "0.75", "--out", tmp.path.string()});
  REQUIRE(overridden.code == 0);
  j = load(overridden.dir() / "theta.json");
  CHECK(j["a"].get<double>() == 0.75);
  CHECK(j["s_max"].get<double>() == 30.0);

  std::ofstream(tmp.path / "bad.cfg") << "nonsense line\n";
  const Outcome bad = call({"theta", "--config", (tmp.path / "bad.cfg").string(), "--out", tmp.path.string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.rfind("ValidationFailed:", 0) == 0);
  std::ofstream(tmp.path / "unknown.cfg") << "colour = blue\n";
  CHECK(call({"theta", "--config", (tmp.path / "unknown.cfg").string(), "--out", tmp.path.string()}).err.rfind(
            "UnknownFlag:", 0) == 0);
}

TEST_CASE("environment overrides the output directory") {
  TempDir tmp;
  TempDir env;
  ::setenv("FILAMENTLAB_OUT", env.path.c_str(), 1);
  const Outcome o = call({"theta", "--smax", "10", "--out", tmp.path.string()});
  ::unsetenv("FILAMENTLAB_OUT");
  REQUIRE(o.code == 0);
  CHECK(o.dir().parent_path() == env.path);
}

TEST_CASE("errors map to exit 2 with a single-line prefixed diagnostic") {
  TempDir tmp;
  const std::string out = tmp.path.string();
  struct Case {
    std::vector<std::string> args;
    std::string prefix;
  };
  const std::vector<Case> cases{
      {{"profile", "--bogus", "1", "--out", out}, "UnknownFlag:"},
      {{"frobnicate"}, "UnknownFlag:"},
      {{"profile", "--a", "-1", "--out", out}, "ValidationFailed:"},
      {{"profile", "--a", "abc", "--out", out}, "ValidationFailed:"},
      {{"angle", "--method", "guess", "--out", out}, "ValidationFailed:"},
      {{"spiral", "--mu", "nan", "--out", out}, "ValidationFailed:"},
      {{"theta", "--a", "0", "--out", out}, "ValidationFailed:"},
      {{"evolve", "--tmin", "2", "--out", out}, "ValidationFailed:"},
      {{"nls", "--t0", "-1", "--t1", "1", "--out", out}, "ValidationFailed:"},
      {{"nls", "--points", "1000", "--out", out}, "ValidationFailed:"},
      {{"stability", "--slices", "10", "--out", out}, "ValidationFailed:"},
      {{"theta", "--threads", "0", "--out", out}, "ValidationFailed:"},
      {{"theta", "--config", (tmp.path / "missing.cfg").string(), "--out", out}, "IoError:"},
  };
  for (const Case& c : cases) {
    const Outcome o = call(c.args);
    INFO(c.args[0] << " " << (c.args.size() > 1 ? c.args[1] : "") << " -> " << o.err);
    CHECK(o.code == 2);
    CHECK(o.err.rfind(c.prefix, 0) == 0);
    CHECK(std::count(o.err.begin(), o.err.end(), '\n') == 1);
  }

  // A regular file where the output directory should go.
  std::ofstream(tmp.path / "blocker") << "x";
  const Outcome io = call({"theta", "--smax", "10", "--out", (tmp.path / "blocker").string()});
  CHECK(io.code == 2);
  CHECK(io.err.rfind("IoError:", 0) == 0);

  CHECK(call({}).code == 2);
  CHECK(call({"profile", "--help"}).code == 0);
}
