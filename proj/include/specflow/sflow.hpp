#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "specflow/paths.hpp"

namespace specflow {

/// How kernel dimensions of complex operators are counted. RealDim counts real
/// dimensions (a complex line contributes 2), ComplexDim counts complex ones.
/// For real paths both coincide with the real count.
enum class Convention { RealDim, ComplexDim };
enum class Method { CrossingForm, EigenvalueTracking };

std::string_view to_string(Convention c);
std::string_view to_string(Method m);

struct CrossingRecord {
  double t = 0.0;
  ComplexMatrix kernel_basis;  // dim x kernel_dim, orthonormal columns
  ComplexMatrix form;          // kernel_dim x kernel_dim, empty until crossing_form()
  RealVector form_eigenvalues;
  int signature = 0;           // #positive - #negative eigenvalues of form
  bool regular = false;
  bool has_form = false;

  Eigen::Index kernel_dim() const { return kernel_basis.cols(); }
};

struct SpectralFlowResult {
  int value = 0;
  Convention convention = Convention::RealDim;
  Method method = Method::CrossingForm;
  std::vector<CrossingRecord> crossings;  // increasing t
};

struct SpectralFlowOptions {
  int initial_points = 65;
  std::optional<double> lipschitz_bound;  // default: estimate_lipschitz_bound
  std::optional<double> kernel_tol;       // absolute; default 1e-8 (1 + max ||A||)
  /// Absolute regularity threshold; default 1e-6 (1 + ||A'(t)||) per crossing.
  std::optional<double> regularity_tol;
  std::optional<Convention> convention;   // default: RealDim for real paths, ComplexDim otherwise
  std::size_t max_points = 200000;
  int max_cluster = 16;
};

Convention default_convention(const OperatorPath& path);

/// Crossing instants bracketed to 1e-10 (b - a); records carry kernels but no forms.
std::vector<CrossingRecord> find_crossings(const OperatorPath& path, const PathSampling& sampling,
                                           double kernel_tol, int max_cluster = 16);

/// Fills form, signature and regularity of `record`.
CrossingRecord crossing_form(const OperatorPath& path, CrossingRecord record,
                             std::optional<double> regularity_tol = std::nullopt);

/// Sum of crossing-form signatures; throws IrregularCrossing if a crossing is degenerate.
SpectralFlowResult spectral_flow_crossing(const OperatorPath& path,
                                          const SpectralFlowOptions& options = {});

/// Signed count of zero transits of the sorted eigenvalue branches; needs no derivative.
SpectralFlowResult spectral_flow_counting(const OperatorPath& path,
                                          const SpectralFlowOptions& options = {});

SpectralFlowResult spectral_flow(const OperatorPath& path, Method method,
                                 const SpectralFlowOptions& options = {});

/// Spectral flow of a clutched loop: the clutch is validated on the window and
/// the flow of the underlying path is returned.
SpectralFlowResult spectral_flow_loop(const ClutchedLoop& loop, Method method,
                                      const SpectralFlowOptions& options = {},
                                      double clutch_tol = 1e-8);

struct DoublingPair {
  int sf_real;
  int sf_complex_realdim;
  int sf_complex_complexdim;
};

/// Runs the real path and its complexification under both conventions.
DoublingPair doubling_pair(const OperatorPath& path, const SpectralFlowOptions& options = {});

}  // namespace specflow
