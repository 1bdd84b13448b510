#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "specflow/sflow.hpp"

namespace specflow {

struct ParameterPoint {
  double t = 0.0;
  double phi = 0.0;
};

/// Circle parameterized by t in [a, b); the end fiber is glued to the start
/// fiber through the family's clutch (identity when none is given).
struct CircleSpace {
  double a = 0.0;
  double b = 1.0;
};

/// T^2 = circle(t in [a, b), clutched) x circle(phi in [0, phi_period)).
struct TorusGrid {
  int n_t = 32;
  int n_phi = 32;
  double a = 0.0;
  double b = 1.0;
  double phi_period = 6.283185307179586;
};

using ParameterSpace = std::variant<CircleSpace, TorusGrid>;

struct ClutchData {
  ComplexMatrix unitary;
  double window = 0.0;
};

/// x -> f_x on a Galerkin space R^state_dim with a branch sigma of critical points.
struct FunctionalFamily {
  std::string name;
  ParameterSpace space;
  Eigen::Index state_dim = 0;
  std::function<double(ParameterPoint, const RealVector&)> value;
  std::function<RealVector(ParameterPoint, const RealVector&)> gradient;
  std::function<RealMatrix(ParameterPoint, const RealVector&)> hessian;  // optional
  std::function<RealVector(ParameterPoint)> trivial_branch;              // optional, default 0
  std::optional<ClutchData> clutch;  // identification along the t-generator

  RealVector sigma(ParameterPoint x) const;
  /// Analytic Hessian if present, else central differences of the gradient
  /// with step 1e-5, symmetrized.
  RealMatrix hessian_at(ParameterPoint x, const RealVector& u) const;
  double t_begin() const;
  double t_end() const;
};

/// s in [a, b] -> parameter point; `clutched` loops close up through the family clutch.
struct ParameterLoop {
  std::string description;
  double a = 0.0;
  double b = 1.0;
  std::function<ParameterPoint(double)> at;
  bool clutched = false;
};

/// The t-generator at fixed phi (the only generator of a circle space).
ParameterLoop t_generator(const FunctionalFamily& family, double phi = 0.0);
/// The phi-generator of a torus at fixed t.
ParameterLoop phi_generator(const FunctionalFamily& family, double t);

struct TrivialBranchReport {
  double max_residual = 0.0;
  ParameterPoint worst;
  double branch_tol = 1e-10;
  bool pass = false;
};

TrivialBranchReport verify_trivial_branch(const FunctionalFamily& family, int n_samples,
                                          double branch_tol = 1e-10);

struct HessianFamily {
  OperatorPath path;
  ClutchedLoop loop;     // identity clutch and unbounded window when no clutch applies
  bool degenerate = false;  // Hessian singular at every probe
};

HessianFamily hessian_family(const FunctionalFamily& family, const ParameterLoop& loop);

struct LoopFlow {
  SpectralFlowResult result;      // real path, crossing form (tracking on irregular crossings)
  int sf = 0;                     // real count
  int sf_complex_realdim = 0;
  int sf_complex_complexdim = 0;
};

LoopFlow sf_along_loop(const FunctionalFamily& family, const ParameterLoop& loop);

struct LocateOptions {
  double locate_tol = 1e-8;      // relative to the loop length
  double endpoint_nudge = 1e-7;  // relative to the loop length
  int max_nudges = 8;
};

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
  int loop_sf = 0;
  int bracket_sf = 0;
  double center() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
};

/// Keeps halving the loop into arcs with invertible endpoints, retaining an arc
/// with nonzero spectral flow, until its width drops below locate_tol.
Bracket locate_bifurcation(const FunctionalFamily& family, const ParameterLoop& loop,
                           const LocateOptions& options = {});

struct ContinueOptions {
  int n_steps = 13;
  double min_offset = 1e-4;  // relative to the loop length
  double max_offset = 1e-1;
  double seed_amplitude = 1e-3;
  int max_iter = 50;
  double residual_tol = 1e-10;
  double step_floor = 1e-9;
};

struct BranchPoint {
  double s = 0.0;       // loop parameter
  double offset = 0.0;  // |s - bracket center|
  ParameterPoint x;
  RealVector u;
  double amplitude = 0.0;  // ||u - sigma(x)||
  double residual = 0.0;   // ||gradient(x, u)||
  int iterations = 0;
};

struct BranchResult {
  int side = 0;  // +1: branch for s > center, -1: s < center
  std::vector<BranchPoint> points;
  std::vector<double> failed_offsets;
  std::optional<double> exponent;  // slope of log amplitude vs log offset
  bool found() const { return !points.empty(); }
};

/// Deflated Newton from sigma(x) + delta v, v the kernel vector at the bracket center.
/// `side` = 0 selects the side where the crossing eigenvalue is negative.
BranchResult continue_branch(const FunctionalFamily& family, const ParameterLoop& loop,
                             const Bracket& bracket, const ContinueOptions& options = {},
                             int side = 0);

/// Single deflated-Newton solve at x; nullopt if it does not converge to a
/// nontrivial critical point.
std::optional<BranchPoint> newton_nontrivial(const FunctionalFamily& family, ParameterPoint x,
                                             const RealVector& seed_direction,
                                             const ContinueOptions& options);

struct Witness {
  ParameterPoint x;
  double s = 0.0;
  double norm_u = 0.0;
  double residual = 0.0;
};

struct BifurcationCertificate {
  std::string loop;
  int sf = 0;
  Bracket bracket;
  std::optional<Witness> witness;
  std::optional<double> exponent;
  BranchResult branch;
};

BifurcationCertificate certify_bifurcation(const FunctionalFamily& family, const ParameterLoop& loop,
                                           const LocateOptions& locate = {},
                                           const ContinueOptions& cont = {});

struct BifSetScan {
  int n_t = 0;
  int n_phi = 0;
  std::vector<char> flagged;         // n_t * n_phi, index j * n_phi + i
  std::vector<char> certified;       // flagged through an edge with nonzero flow
  std::vector<char> candidate_only;  // degenerate corner, no edge flow
  double box_dimension = 0.0;
  std::vector<std::pair<int, int>> box_counts;  // (box size in cells, occupied boxes)
  std::array<bool, 2> wraps_generator{false, false};  // {t, phi}
  bool complement_connected = false;
  std::vector<int> t_loop_sf;    // per phi row
  std::vector<int> phi_loop_sf;  // per t column
  std::vector<int> morse_index;  // (n_t + 1) * n_phi corners

  bool is_flagged(int j, int i) const { return flagged[static_cast<std::size_t>(j * n_phi + i)] != 0; }
  std::size_t flagged_count() const;
  std::size_t certified_count() const;
  std::size_t candidate_count() const;
};

struct ScanOptions {
  std::optional<double> kernel_tol;
};

BifSetScan bif_set_scan(const FunctionalFamily& family, const ScanOptions& options = {});

/// Least-squares slope of log N(s) against log(1/s) for dyadic boxes s = 1, 2, ..., 16.
double box_counting_dimension(const std::vector<char>& mask, int n_t, int n_phi,
                              std::vector<std::pair<int, int>>* counts = nullptr);

}  // namespace specflow
