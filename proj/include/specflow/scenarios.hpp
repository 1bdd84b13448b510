#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "specflow/bifurcation.hpp"

namespace specflow {

// ---- built-in operator path families -------------------------------------

/// diag(t - shift) x up, diag(shift - t) x down, diag(1) x fixed on [a, b].
OperatorPath diag_linear(int up, int down, int fixed, double a = -1.0, double b = 1.0,
                         double shift = 0.0);

/// Cyclic index shift on modes n = -N..N: e_n -> e_{n - k}.
ComplexMatrix mode_shift(int n_modes_half, int k);

/// Fourier truncation diag(n + 1/2 + twist (t - a)), n = -N..N, t in [a, a + 1],
/// clutched by the shift e_n -> e_{n - twist}. For twist 1 and a = 1/2 this is diag(n + t).
ClutchedLoop twisted_fourier(int n_modes_half, int twist, double window, double a = 0.5);

struct PlantedPath {
  OperatorPath path;
  std::vector<double> instants;  // planted crossing instants, increasing
  std::vector<int> signatures;   // +-1 per instant
  int signature_sum() const;
};

/// Q(t) diag(d(t)) Q(t)^T on [-1, 1] with Q(t) = Q0 exp(t K) orthogonal, K skew,
/// and d_i(t) = s_i * slope_i * (t - c_i) for the first `crossings` entries,
/// nonzero constants otherwise. The derivative is analytic.
PlantedPath planted_crossings(int dim, int crossings, std::uint64_t seed);

/// A0 + t A1 + t^2 A2 on [-1, 1] with Gaussian symmetric coefficients.
OperatorPath random_smooth(int dim, std::uint64_t seed);

/// Genuine matrix loop A(t) = B0 + cos(2 pi t) B1 + sin(2 pi t) B2 on [0, 1]
/// with the coefficients shifted so that A(0) is invertible.
OperatorPath random_matrix_loop(int dim, std::uint64_t seed);

// ---- built-in functional families ----------------------------------------

/// f_t(u) = 1/2 sum_n lambda_n(t) u_n^2 + 1/4 ||u||^4 with lambda_n from
/// twisted_fourier, repeated `modes` times; the circle is clutched by the shift.
FunctionalFamily pitchfork_twisted(int n_modes_half, int twist, double window, int modes = 1);

/// Same family on T^2 with lambda_{-1} perturbed by eps cos(phi).
FunctionalFamily pitchfork_perturbed_torus(int n_modes_half, double eps, int grid, double window);

/// f_x(u) = 1/2 <A(x) u, u> with A(x) positive definite for all x; U = I.
FunctionalFamily quadratic_invertible(int dim, std::uint64_t seed);

/// lambda_n(t) = n + g(t), g(t) = 1/2 + 2t + sin(2 pi t) / (4 pi), t in [0, 1],
/// plus the quartic term; two upward crossings, clutched by the double shift.
FunctionalFamily two_crossing(int n_modes_half, double window);
double two_crossing_shift(double t);

/// f = 1/4 ||u||^4 on a circle; Hessian at 0 vanishes identically.
FunctionalFamily quartic_only(int dim);

// ---- registry -------------------------------------------------------------

struct ParamSpec {
  std::string name;
  double default_value;
  bool integer;
  std::string description;
};

struct ScenarioInfo {
  std::string key;
  std::string description;
  std::vector<ParamSpec> params;
  std::vector<std::string> commands;  // commands this scenario supports
  std::string default_command;
};

using ParamMap = std::map<std::string, double>;

/// Alphabetical by key.
const std::vector<ScenarioInfo>& scenario_registry();
const ScenarioInfo* find_scenario(const std::string& key);

/// Fills defaults and validates names and integrality. Throws Config.
ParamMap resolve_params(const ScenarioInfo& info, const std::map<std::string, std::string>& given);

struct ScenarioInstance {
  std::string key;
  std::optional<OperatorPath> path;
  std::optional<ClutchedLoop> loop;
  std::optional<FunctionalFamily> family;
};

ScenarioInstance build_scenario(const std::string& key, const ParamMap& params, std::uint64_t seed);

/// Text listing of every key with its parameter schema.
std::string list_scenarios();

}  // namespace specflow
