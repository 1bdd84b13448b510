#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace specflow {

enum class ErrorKind {
  RejectedInput,     // malformed or non-self-adjoint input
  Inconsistency,     // evaluator does not satisfy its contract
  ResolutionExhausted,
  EndpointSingular,
  IrregularCrossing,
  Window,
  ClutchValidation,
  Precision,
  Degenerate,
  Evaluation,
  Precondition,
  Config,            // CLI/config validation
};

std::string_view to_string(ErrorKind kind);

/// Base exception for everything the toolkit throws. `kind` selects the CLI
/// exit code; `what()` carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown by the sampler; carries the subinterval that could not be resolved.
class ResolutionError : public Error {
 public:
  ResolutionError(const std::string& detail, double lo, double hi)
      : Error(ErrorKind::ResolutionExhausted, detail), lo_(lo), hi_(hi) {}

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

}  // namespace specflow
