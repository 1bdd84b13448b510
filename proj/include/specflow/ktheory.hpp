#pragma once

#include <vector>

#include "specflow/paths.hpp"

namespace specflow {

/// Samples of alpha(A)(t) = Id cos(pi t) + i A sin(pi t), t in [0, 1].
struct AlphaPath {
  ComplexMatrix source;
  std::vector<double> grid;
  std::vector<ComplexMatrix> samples;
  std::vector<double> min_singular_values;

  /// Grid instants where the smallest singular value is <= tol.
  std::vector<double> singular_instants(double tol) const;
};

AlphaPath alpha_path(const HermitianMatrix& a, int n_samples);

/// Family x -> L_x of (not necessarily square) matrices over a finite grid.
using MatrixFamily = std::function<ComplexMatrix(double)>;

/// Smallest singular value of [L_x | V] viewed as a map onto the codomain.
double transversality_margin(const ComplexMatrix& l, const ComplexMatrix& v);

struct TransverseOptions {
  std::optional<double> transversality_tol;  // default 1e-6 (1 + max ||L_x||)
};

/// Greedy construction of V with Im L_x + V = codomain on every grid point.
/// Returns a codomain_dim x dim(V) matrix with orthonormal columns.
ComplexMatrix transverse_subspace(const MatrixFamily& family, const std::vector<double>& grid,
                                  const TransverseOptions& options = {});

struct IndexBundleData {
  std::vector<double> grid;
  ComplexMatrix transverse;          // V
  std::vector<Eigen::Index> fiber_ranks;  // dim Y_x
  std::vector<Eigen::Index> classical_index;  // dim ker L_x - dim coker L_x
  Eigen::Index fiber_rank = 0;
  Eigen::Index virtual_rank = 0;
};

IndexBundleData index_bundle_data(const MatrixFamily& family, const std::vector<double>& grid,
                                  const ComplexMatrix& transverse,
                                  const TransverseOptions& options = {});

struct WindingResult {
  int value = 0;
  double raw_phase_change = 0.0;  // radians, along the sequence as given
  double closure_defect = 0.0;    // |raw_phase_change - 2 pi value|
};

/// Degree of a sampled curve in C \ {0}. Adjacent phase steps must be < pi/2.
/// With closed=true the step from the last sample back to the first also
/// takes part in the rounding.
WindingResult winding_number(const std::vector<cplx>& samples, bool closed);

struct ChernOptions {
  int initial_points = 129;
  double winding_tol = 0.2;
  double clutch_tol = 1e-8;
  std::size_t max_points = 200000;
  /// Refinement target for the per-step phase of the determinant.
  double target_step = 0.25 * 3.14159265358979323846;
};

struct ChernResult {
  int value = 0;
  WindingResult winding;
  std::vector<double> grid;
};

/// det of the Cayley transform of A(t) compressed to its window subspace.
cplx windowed_cayley_determinant(const ComplexMatrix& a, double window);

/// Odd first Chern number of a clutched loop as the winding of
/// t -> det cayley(P_window A(t) P_window).
ChernResult chern_number_selfadjoint_loop(const ClutchedLoop& loop, const ChernOptions& options = {});

}  // namespace specflow
