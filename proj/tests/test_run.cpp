#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "frontlab/run.hpp"

using namespace frontlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

fs::path fresh_dir(const std::string& name) {
  fs::path d = fs::path("run_out") / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

const char* kConstantSpeedConfig = R"({
  "task": "speed",
  "field": {"kind": "constant", "a": {"value": 1.0}, "c": {"value": 1.0}},
  "output_dir": "OUT",
  "numerics": {
    "speed": {"kp_check": true, "p_points": 9}
  }
})";

std::string with_out(const std::string& tmpl, const fs::path& out) {
  std::string s = tmpl;
  auto pos = s.find("OUT");
  s.replace(pos, 3, out.string());
  return s;
}

}  // namespace

TEST_CASE("run: speed task writes the report with w_star near 2") {
  fs::path out = fresh_dir("speed");
  RunConfig cfg = RunConfig::from_json_text(with_out(kConstantSpeedConfig, out));
  CHECK(run(cfg) == 0);
  std::string rep = slurp(out / "speed_report.json");
  auto pos = rep.find("\"w_star\"");
  REQUIRE(pos != std::string::npos);
  double w_star = std::stod(rep.substr(pos + 9));
  CHECK(w_star >= 1.99);
  CHECK(w_star <= 2.01);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "speed_scan.csv"));
  CHECK(fs::exists(out / "kp_scan.csv"));
  CHECK(fs::exists(out / "mu_curve.csv"));
}

TEST_CASE("run: identical configs produce bit-identical outputs") {
  fs::path out1 = fresh_dir("det1");
  fs::path out2 = fresh_dir("det2");
  RunConfig cfg1 = RunConfig::from_json_text(with_out(kConstantSpeedConfig, out1));
  RunConfig cfg2 = RunConfig::from_json_text(with_out(kConstantSpeedConfig, out2));
  cfg2.threads = 3;  // sweep partitioning must not change the bytes
  CHECK(run(cfg1) == 0);
  CHECK(run(cfg2) == 0);
  for (const char* name : {"speed_report.json", "speed_scan.csv", "kp_scan.csv",
                           "mu_curve.csv"})
    CHECK(slurp(out1 / name) == slurp(out2 / name));
}

TEST_CASE("run: manifest echoes every numeric block") {
  fs::path out = fresh_dir("manifest");
  RunConfig cfg = RunConfig::from_json_text(with_out(kConstantSpeedConfig, out));
  cfg.task = Task::validate;
  std::string manifest = cfg.manifest_json();
  for (const char* key :
       {"lambda1", "decay", "speed", "kp", "hyp1", "front", "profile", "tol", "h",
        "eps_schedule", "dt", "burn_in_fraction", "doubling_tol", "x_window"})
    CHECK(manifest.find(key) != std::string::npos);
  // Round-trip: the manifest itself parses as a config.
  RunConfig echo = RunConfig::from_json_text(manifest);
  CHECK(echo.lambda1.tol == cfg.lambda1.tol);
  CHECK(echo.front.t_end == cfg.front.t_end);
}

TEST_CASE("run: validate task passes on the stock fields") {
  fs::path out = fresh_dir("validate");
  std::string text = R"({
    "task": "validate",
    "field": {"kind": "periodic", "period": 1.0,
              "a": {"offset": 1.0}, "c": {"offset": 1.0, "sin_amplitudes": [0.5]}},
    "output_dir": ")" + out.string() + R"("
  })";
  RunConfig cfg = RunConfig::from_json_text(text);
  CHECK(run(cfg) == 0);
  std::string rep = slurp(out / "validate_report.json");
  CHECK(rep.find("\"pass\": true") != std::string::npos);
}

TEST_CASE("run: front task writes the trace and report") {
  fs::path out = fresh_dir("front");
  std::string text = R"({
    "task": "front",
    "field": {"kind": "constant", "a": {"value": 1.0}, "c": {"value": 1.0}},
    "output_dir": ")" + out.string() + R"(",
    "numerics": {"front": {"w": 2.5, "t_start": -12.0, "t_end": 12.0}}
  })";
  CHECK(run(RunConfig::from_json_text(text)) == 0);
  std::string trace = slurp(out / "front_trace.csv");
  CHECK(trace.rfind("t,X,avg_window_speed", 0) == 0);
  std::string rep = slurp(out / "front_report.json");
  CHECK(rep.find("average_speed") != std::string::npos);
}

TEST_CASE("run: config errors are reported as such") {
  CHECK_THROWS_AS(RunConfig::from_json_text("{oops"), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"task": "speed"})"),
                  std::invalid_argument);  // missing field
  CHECK_THROWS_AS(RunConfig::from_json_text(
                      R"({"task": "warp", "field": {"kind": "constant",
                          "a": {"value": 1}, "c": {"value": 1}}})"),
                  std::invalid_argument);
}

TEST_CASE("cli binary: exit codes for good, bad, and broken configs") {
  fs::path dir = fresh_dir("cli");
  fs::path good = dir / "good.json";
  spit(good, R"({
    "task": "eigen",
    "field": {"kind": "constant", "a": {"value": 1.0}, "c": {"value": 1.0}},
    "output_dir": ")" + (dir / "eigen_out").string() + R"("
  })");
  fs::path broken = dir / "broken.json";
  spit(broken, "{this is not json");

  std::string cli = FRONTLAB_CLI_PATH;
  auto run_cmd = [&](const std::string& args) {
    std::string cmd = cli + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
  };
  CHECK(run_cmd("eigen --config " + good.string()) == 0);
  CHECK(fs::exists(dir / "eigen_out" / "lambda_table.csv"));
  CHECK(fs::exists(dir / "eigen_out" / "eigenfunction.csv"));
  CHECK(run_cmd("eigen --config " + broken.string()) == 2);
  CHECK(run_cmd("eigen --config " + (dir / "missing.json").string()) == 2);
  CHECK(run_cmd("bogus-subcommand --config " + good.string()) == 2);

  // A computation error (front with an inadmissible speed) exits 1.
  fs::path bad_front = dir / "bad_front.json";
  spit(bad_front, R"({
    "task": "front",
    "field": {"kind": "constant", "a": {"value": 1.0}, "c": {"value": 1.0}},
    "output_dir": ")" + (dir / "bad_front_out").string() + R"(",
    "numerics": {"front": {"w": 0.5}}
  })");
  CHECK(run_cmd("front --config " + bad_front.string()) == 1);
  CHECK(fs::exists(dir / "bad_front_out" / "error.json"));
}
