#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "specflow/cli.hpp"
#include "specflow/report.hpp"
#include "specflow/scenarios.hpp"

using namespace specflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("specflow_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args, const fs::path& out, std::string* stdout_text = nullptr) {
  const fs::path capture = out / "stdout.txt";
  const std::string cmd = std::string(SPECFLOW_CLI_PATH) + " " + args + " --out " + out.string() + " > " +
                          capture.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  if (stdout_text) {
    std::ifstream is(capture);
    std::stringstream ss;
    ss << is.rdbuf();
    *stdout_text = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Json report(const fs::path& dir) { return Json::parse(slurp(dir / "report.json")); }

}  // namespace

TEST_CASE("sf-loop on the twisted pitchfork") {
  const fs::path out = scratch("sfloop");
  CHECK(run_cli("sf-loop --scenario pitchfork-twisted --param N=16 --param twist=1", out) == 0);
  const Json r = report(out);
  CHECK(r["value"] == 1);
  CHECK(r["convention"] == "RealDim");
  CHECK(r["method"] == "CrossingForm");
  REQUIRE(r["crossings"].size() == 1);
  const Json& c = r["crossings"][0];
  CHECK(c["t"].get<double>() == doctest::Approx(1.0));
  CHECK(c["kernel_dim"] == 1);
  CHECK(c["signature"] == 1);
  CHECK(c["regular"] == true);
  // Key order is part of the format.
  std::vector<std::string> keys;
  for (const auto& [k, v] : r.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"value", "convention", "method", "crossings"});
}

TEST_CASE("chern on the twisted pitchfork") {
  const fs::path out = scratch("chern");
  CHECK(run_cli("chern --scenario pitchfork-twisted --param N=16 --param twist=1", out) == 0);
  const Json r = report(out);
  CHECK(r["chern"] == 1);
  CHECK(r["sf"] == 1);
  CHECK(r["agree"] == true);
  CHECK(r["closure_defect"].get<double>() < 0.2);
  CHECK(r["window"].get<double>() == 8.0);
}

TEST_CASE("unknown scenario is a validation error with an error report") {
  const fs::path out = scratch("unknown");
  CHECK(run_cli("sf --scenario nonexistent", out) == 2);
  const Json r = report(out);
  CHECK(r["error"]["kind"] == "config");
  CHECK(r["error"]["detail"].get<std::string>().find("nonexistent") != std::string::npos);
  CHECK_FALSE(fs::exists(out / "eigenflow.csv"));
}

TEST_CASE("validation errors") {
  const fs::path out = scratch("validation");
  CHECK(run_cli("sf --scenario diag-linear --param bogus=1", out) == 2);
  CHECK(run_cli("sf --scenario diag-linear --param up=1.5", out) == 2);
  CHECK(run_cli("sf --scenario diag-linear --param up=abc", out) == 2);
  CHECK(run_cli("frobnicate --scenario diag-linear", out) == 2);
  CHECK(run_cli("bif-scan --scenario diag-linear", out) == 2);
  CHECK(run_cli("sf --scenario diag-linear --tol mystery=1", out) == 2);
  CHECK(run_cli("sf --scenario diag-linear --tol kernel_tol=-1", out) == 2);
  CHECK(run_cli("sf --scenario diag-linear --config /nonexistent/config.json", out) == 2);
}

TEST_CASE("computational errors exit with 3") {
  const fs::path out = scratch("computational");
  CHECK(run_cli("sf-loop --scenario twisted-fourier --param window=1e-11", out) == 3);
  CHECK(report(out)["error"]["kind"] == "window");
  CHECK(run_cli("sf --scenario diag-linear --param shift=1", out) == 3);
  CHECK(report(out)["error"]["kind"] == "endpoint_singular");
}

TEST_CASE("list is alphabetical, stable and contains the built-ins") {
  const fs::path out = scratch("list");
  std::string first, second;
  CHECK(run_cli("list", out, &first) == 0);
  CHECK(run_cli("list", out, &second) == 0);
  CHECK(first == second);
  CHECK(first == list_scenarios());
  CHECK(first.find("pitchfork-twisted") != std::string::npos);
  std::vector<std::string> keys;
  for (const auto& s : scenario_registry()) keys.push_back(s.key);
  CHECK(std::is_sorted(keys.begin(), keys.end()));
  for (const std::string k : {"diag-linear", "twisted-fourier", "planted-crossings", "random-smooth",
                              "pitchfork-twisted", "pitchfork-perturbed-torus", "quadratic-invertible",
                              "two-crossing"})
    CHECK(find_scenario(k) != nullptr);
}

TEST_CASE("every scenario runs with its defaults and its report has the documented shape") {
  for (const auto& info : scenario_registry()) {
    for (const auto& command : info.commands) {
      CAPTURE(info.key);
      CAPTURE(command);
      const fs::path out = scratch("sweep_" + info.key + "_" + command);
      CHECK(run_cli(command + " --scenario " + info.key, out) == 0);
      const Json r = report(out);
      CHECK_FALSE(r.contains("error"));
      std::vector<std::string> keys;
      for (const auto& [k, v] : r.items()) keys.push_back(k);
      if (command == "sf" || command == "sf-loop") {
        CHECK(keys == std::vector<std::string>{"value", "convention", "method", "crossings"});
      } else if (command == "chern") {
        CHECK(keys == std::vector<std::string>{"chern", "sf", "agree", "closure_defect", "window"});
        CHECK(r["agree"] == true);
      } else if (command == "bif-locate") {
        CHECK(keys == std::vector<std::string>{"scenario", "loop", "sf", "bracket", "witness", "exponent_fit"});
        CHECK(r["bracket"].size() == 2);
        CHECK(r["witness"].contains("x"));
        CHECK(r["witness"].contains("norm_u"));
        CHECK(r["witness"].contains("residual"));
      } else if (command == "bif-scan") {
        CHECK(r.contains("box_dimension"));
        CHECK(r["wraps_generator"].size() == 2);
        CHECK(r.contains("complement_connected"));
      } else if (command == "verify") {
        CHECK(r["pass"] == true);
      }
    }
  }
}

TEST_CASE("eigenflow.csv header and layout") {
  const fs::path out = scratch("csv");
  CHECK(run_cli("sf --scenario diag-linear --param up=2 --param fixed=1", out) == 0);
  const std::string csv = slurp(out / "eigenflow.csv");
  CHECK(csv.rfind("t,lambda_1,lambda_2,lambda_3\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 202);
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  std::getline(is, line);
  CHECK(line.rfind("-1,-1,-1,1", 0) == 0);
}

TEST_CASE("identical runs produce byte-identical reports") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  for (const std::string args : {"sf --scenario planted-crossings --seed 17", "bif-locate --scenario pitchfork-twisted",
                                 "chern --scenario twisted-fourier --param twist=3",
                                 "sf --scenario random-smooth --seed 5"}) {
    CAPTURE(args);
    CHECK(run_cli(args, a) == 0);
    CHECK(run_cli(args, b) == 0);
    CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
    CHECK(slurp(a / "eigenflow.csv") == slurp(b / "eigenflow.csv"));
  }
  CHECK(run_cli("sf --scenario planted-crossings --seed 17", a) == 0);
  CHECK(run_cli("sf --scenario planted-crossings --seed 18", b) == 0);
  CHECK(slurp(a / "eigenflow.csv") != slurp(b / "eigenflow.csv"));
}

TEST_CASE("config file with flag overrides") {
  const fs::path out = scratch("config");
  const fs::path cfg = out / "run.json";
  std::ofstream(cfg) << R"({"command": "sf-loop", "scenario": "twisted-fourier",
                            "params": {"twist": 2, "N": 16}, "tolerances": {"clutch_tol": 1e-8}, "seed": 0})";
  CHECK(run_cli("sf-loop --config " + cfg.string(), out) == 0);
  CHECK(report(out)["value"] == 2);
  CHECK(run_cli("sf-loop --config " + cfg.string() + " --param twist=-1", out) == 0);
  CHECK(report(out)["value"] == -1);

  std::ofstream(cfg) << R"({"scenario": "twisted-fourier", "colour": "blue"})";
  CHECK(run_cli("sf-loop --config " + cfg.string(), out) == 2);
}

TEST_CASE("load_config and apply_tolerance in process") {
  const RunConfig c = load_config(R"({"command": "chern", "scenario": "two-crossing", "params": {"N": 5, "window": 2.5},
                                      "tolerances": {"winding_tol": 0.1}, "output_dir": "x", "seed": 9})");
  CHECK(c.command == "chern");
  CHECK(c.params.at("N") == "5");
  CHECK(std::stod(c.params.at("window")) == 2.5);
  CHECK(*c.tolerances.winding_tol == 0.1);
  CHECK(c.seed == 9);
  CHECK_THROWS_AS(load_config("[1, 2]"), Error);
  CHECK_THROWS_AS(load_config("{not json"), Error);
  CHECK_THROWS_AS(load_config(R"({"params": {"N": [1]}})"), Error);
  Tolerances t;
  apply_tolerance(t, "locate_tol=1e-9");
  CHECK(*t.locate_tol == 1e-9);
  CHECK_THROWS_AS(apply_tolerance(t, "locate_tol"), Error);
}

TEST_CASE("execute maps errors onto exit codes without touching disk") {
  RunConfig c;
  c.command = "sf";
  c.scenario = "diag-linear";
  c.params["shift"] = "-1";
  const RunOutcome o = execute(c);
  CHECK(o.exit_code == kExitComputation);
  CHECK(o.report["error"]["kind"] == "endpoint_singular");
  CHECK(o.eigenflow.empty());
  c.params.clear();
  c.params["up"] = "1";
  c.params["down"] = "2";
  const RunOutcome ok = execute(c);
  CHECK(ok.exit_code == kExitOk);
  CHECK(ok.report["value"] == -1);
}
