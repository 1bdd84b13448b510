#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "specflow/report.hpp"

namespace specflow {

struct Tolerances {
  std::optional<double> kernel_tol;
  std::optional<double> clutch_tol;
  std::optional<double> winding_tol;
  std::optional<double> locate_tol;
};

struct RunConfig {
  std::string command;  // sf, sf-loop, chern, bif-locate, bif-scan, verify
  std::string scenario;
  std::map<std::string, std::string> params;
  Tolerances tolerances;
  std::string output_dir = ".";
  std::uint64_t seed = 0;
};

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitComputation = 3,
  kExitIdentityMismatch = 4,
};

const std::vector<std::string>& known_commands();

/// Reads a JSON config; unknown keys are rejected with a Config error.
RunConfig load_config(const std::string& json_text);

/// Applies tolerance overrides of the form name=value.
void apply_tolerance(Tolerances& tol, const std::string& assignment);

struct RunOutcome {
  int exit_code = kExitOk;
  Json report;
  std::string eigenflow;  // empty when no path was computed
};

/// Validates the config, runs the pipeline and returns the report without touching disk.
RunOutcome execute(const RunConfig& config);

/// execute() plus report.json / eigenflow.csv written atomically to output_dir.
int run(const RunConfig& config);

/// Entry point used by the specflow executable.
int cli_main(int argc, char** argv);

}  // namespace specflow
