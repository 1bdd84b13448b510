#include "specflow/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "specflow/scenarios.hpp"

namespace specflow {

const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> commands{"sf", "sf-loop", "chern", "bif-locate", "bif-scan", "verify"};
  return commands;
}

void apply_tolerance(Tolerances& tol, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw Error(ErrorKind::Config, "tolerance must be name=value: " + assignment);
  const std::string name = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  double value = 0.0;
  std::size_t used = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(value > 0.0)) {
    throw Error(ErrorKind::Config, "tolerance " + name + " must be a positive number");
  }
  if (name == "kernel_tol") tol.kernel_tol = value;
  else if (name == "clutch_tol") tol.clutch_tol = value;
  else if (name == "winding_tol") tol.winding_tol = value;
  else if (name == "locate_tol") tol.locate_tol = value;
  else throw Error(ErrorKind::Config, "unknown tolerance '" + name + "'");
}

RunConfig load_config(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::Config, "config must be a JSON object");
  RunConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "command") cfg.command = value.get<std::string>();
      else if (key == "scenario") cfg.scenario = value.get<std::string>();
      else if (key == "output_dir") cfg.output_dir = value.get<std::string>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "params") {
        for (const auto& [name, v] : value.items()) {
          if (v.is_string()) {
            cfg.params[name] = v.get<std::string>();
          } else if (v.is_number()) {
            // keep exact integers free of a decimal point
            cfg.params[name] = v.is_number_integer() ? std::to_string(v.get<long long>()) : v.dump();
          } else {
            throw Error(ErrorKind::Config, "parameter '" + name + "' must be a number");
          }
        }
      } else if (key == "tolerances") {
        for (const auto& [name, v] : value.items()) apply_tolerance(cfg.tolerances, name + "=" + v.dump());
      } else {
        throw Error(ErrorKind::Config, "unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("config has a field of the wrong type: ") + e.what());
  }
  return cfg;
}

namespace {

int exit_code_for(ErrorKind kind) {
  return (kind == ErrorKind::Config || kind == ErrorKind::RejectedInput) ? kExitValidation : kExitComputation;
}

SpectralFlowOptions flow_options(const Tolerances& tol) {
  SpectralFlowOptions o;
  o.kernel_tol = tol.kernel_tol;
  return o;
}

SpectralFlowResult flow_with_fallback(const OperatorPath& path, const SpectralFlowOptions& o) {
  try {
    return spectral_flow_crossing(path, o);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::IrregularCrossing) throw;
    return spectral_flow_counting(path, o);
  }
}

SpectralFlowResult loop_flow_with_fallback(const ClutchedLoop& loop, const SpectralFlowOptions& o,
                                           double clutch_tol) {
  try {
    return spectral_flow_loop(loop, Method::CrossingForm, o, clutch_tol);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::IrregularCrossing) throw;
    return spectral_flow_loop(loop, Method::EigenvalueTracking, o, clutch_tol);
  }
}

struct Checks {
  Json list = Json::array();
  bool all = true;
  void add(const std::string& name, bool pass, const std::string& detail) {
    list.push_back(Json{{"name", name}, {"pass", pass}, {"detail", detail}});
    all = all && pass;
  }
};

std::string pair_text(int x, int y) { return std::to_string(x) + " vs " + std::to_string(y); }

Json run_verify(const RunConfig& cfg, const ParamMap& params, const ScenarioInstance& inst,
                const Tolerances& tol, bool& pass) {
  Checks checks;
  const SpectralFlowOptions o = flow_options(tol);
  const double clutch_tol = tol.clutch_tol.value_or(1e-8);
  const bool torus = inst.family && std::holds_alternative<TorusGrid>(inst.family->space);

  if (inst.path && !torus) {
    const SpectralFlowResult counting = spectral_flow_counting(*inst.path, o);
    try {
      const SpectralFlowResult crossing = spectral_flow_crossing(*inst.path, o);
      checks.add("crossing_form_equals_counting", crossing.value == counting.value,
                 pair_text(crossing.value, counting.value));
      if (inst.path->field() == ScalarField::Real) {
        const DoublingPair d = doubling_pair(*inst.path, o);
        checks.add("doubling",
                   d.sf_complex_realdim == 2 * d.sf_real && d.sf_complex_complexdim == d.sf_real,
                   "(" + std::to_string(d.sf_real) + ", " + std::to_string(d.sf_complex_realdim) + ", " +
                       std::to_string(d.sf_complex_complexdim) + ")");
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::IrregularCrossing) throw;
      checks.add("crossing_form_equals_counting", true, std::string("skipped: ") + e.what());
    }
    if (inst.key == "planted-crossings") {
      const PlantedPath planted = planted_crossings(static_cast<int>(params.at("dim")),
                                                    static_cast<int>(params.at("crossings")), cfg.seed);
      checks.add("planted_signature_sum", counting.value == planted.signature_sum(),
                 pair_text(counting.value, planted.signature_sum()));
    }
  }
  if (inst.loop && !torus) {
    const SpectralFlowResult tracking = spectral_flow_loop(*inst.loop, Method::EigenvalueTracking, o, clutch_tol);
    const SpectralFlowResult crossing = loop_flow_with_fallback(*inst.loop, o, clutch_tol);
    checks.add("loop_methods_agree", tracking.value == crossing.value, pair_text(crossing.value, tracking.value));
    ChernOptions co;
    co.clutch_tol = clutch_tol;
    if (tol.winding_tol) co.winding_tol = *tol.winding_tol;
    const ChernResult chern = chern_number_selfadjoint_loop(*inst.loop, co);
    SpectralFlowOptions cd = o;
    cd.convention = Convention::ComplexDim;
    const int sf_c = loop_flow_with_fallback(*inst.loop, cd, clutch_tol).value;
    checks.add("chern_equals_sf", chern.value == sf_c, pair_text(chern.value, sf_c));
  }
  if (inst.family) {
    const TrivialBranchReport tb = verify_trivial_branch(*inst.family, 16);
    std::ostringstream os;
    os << "max residual " << tb.max_residual;
    checks.add("trivial_branch", tb.pass, os.str());
    if (torus) {
      const BifSetScan scan = bif_set_scan(*inst.family, ScanOptions{tol.kernel_tol});
      bool all_hit = true;
      for (int i = 0; i < scan.n_phi; ++i) {
        if (scan.t_loop_sf[static_cast<std::size_t>(i)] == 0) continue;
        bool hit = false;
        for (int j = 0; j < scan.n_t && !hit; ++j) hit = scan.is_flagged(j, i);
        all_hit = all_hit && hit;
      }
      checks.add("flow_loops_meet_flagged_set", all_hit, "t-loops with nonzero flow");
    }
  }
  pass = checks.all;
  return Json{{"scenario", inst.key}, {"checks", checks.list}, {"pass", checks.all}};
}

}  // namespace

RunOutcome execute(const RunConfig& cfg) {
  RunOutcome out;
  try {
    const auto& commands = known_commands();
    if (std::find(commands.begin(), commands.end(), cfg.command) == commands.end()) {
      throw Error(ErrorKind::Config, "unknown command '" + cfg.command + "'");
    }
    const ScenarioInfo* info = find_scenario(cfg.scenario);
    if (!info) throw Error(ErrorKind::Config, "unknown scenario '" + cfg.scenario + "'");
    if (std::find(info->commands.begin(), info->commands.end(), cfg.command) == info->commands.end()) {
      throw Error(ErrorKind::Config, "scenario " + cfg.scenario + " does not support command " + cfg.command);
    }
    const ParamMap params = resolve_params(*info, cfg.params);
    const ScenarioInstance inst = build_scenario(cfg.scenario, params, cfg.seed);
    const Tolerances& tol = cfg.tolerances;
    const SpectralFlowOptions o = flow_options(tol);
    const double clutch_tol = tol.clutch_tol.value_or(1e-8);

    if (cfg.command == "sf") {
      out.report = to_json(flow_with_fallback(*inst.path, o));
    } else if (cfg.command == "sf-loop") {
      out.report = to_json(loop_flow_with_fallback(*inst.loop, o, clutch_tol));
    } else if (cfg.command == "chern") {
      ChernOptions co;
      co.clutch_tol = clutch_tol;
      if (tol.winding_tol) co.winding_tol = *tol.winding_tol;
      const ChernResult chern = chern_number_selfadjoint_loop(*inst.loop, co);
      SpectralFlowOptions cd = o;
      cd.convention = Convention::ComplexDim;
      const SpectralFlowResult sf = loop_flow_with_fallback(*inst.loop, cd, clutch_tol);
      out.report = chern_report(chern, sf, inst.loop->window);
      if (chern.value != sf.value) out.exit_code = kExitIdentityMismatch;
    } else if (cfg.command == "bif-locate") {
      LocateOptions lo;
      if (tol.locate_tol) lo.locate_tol = *tol.locate_tol;
      const ParameterLoop loop = t_generator(*inst.family);
      out.report = bifurcation_report(cfg.scenario, certify_bifurcation(*inst.family, loop, lo));
    } else if (cfg.command == "bif-scan") {
      out.report = scan_report(cfg.scenario, bif_set_scan(*inst.family, ScanOptions{tol.kernel_tol}));
    } else if (cfg.command == "verify") {
      bool pass = true;
      out.report = run_verify(cfg, params, inst, tol, pass);
      if (!pass) out.exit_code = kExitIdentityMismatch;
    }
    if (inst.path) out.eigenflow = eigenflow_csv(*inst.path);
  } catch (const Error& e) {
    out.exit_code = exit_code_for(e.kind());
    out.report = error_report(e.kind(), e.what());
    out.eigenflow.clear();
  }
  return out;
}

int run(const RunConfig& cfg) {
  const RunOutcome out = execute(cfg);
  try {
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "report.json", out.report.dump(2) + "\n");
    if (!out.eigenflow.empty()) write_file_atomic(dir / "eigenflow.csv", out.eigenflow);
  } catch (const std::exception& e) {
    std::cerr << "specflow: cannot write output: " << e.what() << "\n";
    return kExitValidation;
  }
  return out.exit_code;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"specflow: spectral flow, odd Chern numbers and variational bifurcation"};
  std::string command;
  std::string scenario;
  std::vector<std::string> params;
  std::vector<std::string> tols;
  std::string config_file;
  std::string out_dir;
  std::uint64_t seed = 0;

  app.add_option("command", command, "sf | sf-loop | chern | bif-locate | bif-scan | verify | list")->required();
  auto* scenario_opt = app.add_option("--scenario", scenario, "scenario registry key");
  app.add_option("--param", params, "scenario parameter k=v (repeatable)");
  app.add_option("--tol", tols, "tolerance override name=value (kernel_tol, clutch_tol, winding_tol, locate_tol)");
  app.add_option("--config", config_file, "JSON config file; flags override it");
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  if (command == "list") {
    std::cout << list_scenarios();
    return kExitOk;
  }

  RunConfig cfg;
  try {
    if (!config_file.empty()) {
      std::ifstream is(config_file);
      if (!is) throw Error(ErrorKind::Config, "cannot read config file " + config_file);
      std::stringstream ss;
      ss << is.rdbuf();
      cfg = load_config(ss.str());
    }
    cfg.command = command;
    if (scenario_opt->count()) cfg.scenario = scenario;
    if (out_opt->count()) cfg.output_dir = out_dir;
    if (seed_opt->count()) cfg.seed = seed;
    for (const auto& p : params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::Config, "parameter must be k=v: " + p);
      cfg.params[p.substr(0, eq)] = p.substr(eq + 1);
    }
    for (const auto& t : tols) apply_tolerance(cfg.tolerances, t);
  } catch (const Error& e) {
    const Json report = error_report(e.kind(), e.what());
    std::cerr << report.dump() << "\n";
    if (!cfg.output_dir.empty() || !out_dir.empty()) {
      try {
        const std::filesystem::path dir(out_dir.empty() ? cfg.output_dir : out_dir);
        std::filesystem::create_directories(dir);
        write_file_atomic(dir / "report.json", report.dump(2) + "\n");
      } catch (const std::exception&) {
      }
    }
    return kExitValidation;
  }
  const int code = run(cfg);
  std::cerr << "specflow: " << cfg.command << " " << cfg.scenario << " -> exit " << code << "\n";
  return code;
}

}  // namespace specflow
