#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "specflow/core.hpp"

namespace specflow {

enum class ScalarField { Real, Complex };

using MatrixFunction = std::function<ComplexMatrix(double)>;

/// t -> A(t) on [a, b]. Real paths are stored as complex matrices with zero
/// imaginary part; `field` records which scalar field the kernels live over.
/// Evaluators must be reentrant.
class OperatorPath {
 public:
  OperatorPath(double a, double b, MatrixFunction evaluate, MatrixFunction derivative = {},
               ScalarField field = ScalarField::Real);

  double a() const { return a_; }
  double b() const { return b_; }
  double length() const { return b_ - a_; }
  Eigen::Index dim() const { return dim_; }
  ScalarField field() const { return field_; }
  bool has_derivative() const { return static_cast<bool>(derivative_); }

  /// A(t); throws Evaluation on evaluator failure or a dimension change.
  ComplexMatrix operator()(double t) const;
  /// Analytic derivative; only valid when has_derivative().
  ComplexMatrix exact_derivative(double t) const;

  /// Same family on a subinterval [lo, hi] (used for arcs and concatenation tests).
  OperatorPath restricted(double lo, double hi) const;
  /// t -> A(a + b - t).
  OperatorPath reversed() const;
  /// Same matrices regarded as complex self-adjoint operators.
  OperatorPath complexified() const;

  const MatrixFunction& evaluator() const { return evaluate_; }
  const MatrixFunction& derivative_function() const { return derivative_; }

 private:
  double a_;
  double b_;
  Eigen::Index dim_;
  ScalarField field_;
  MatrixFunction evaluate_;
  MatrixFunction derivative_;
};

/// A generalized family over S^1: the path on [a, b] closes up through the
/// clutching unitary U, A(b) U = U A(a), on the spectral window |lambda| <= window.
struct ClutchedLoop {
  OperatorPath path;
  ComplexMatrix clutch;
  double window;
};

struct PathSampling {
  std::vector<double> grid;
  std::vector<Eigendecomposition> spectra;
  double lipschitz_bound = 0.0;
  double kernel_tol = 0.0;
};

struct SamplingOptions {
  std::size_t max_points = 200000;
  /// Absolute zero threshold; defaults to 1e-8 * (1 + max ||A(t)||) over the initial grid.
  std::optional<double> kernel_tol;
};

/// Adaptive sampling: an interval [t0, t1] is bisected while some sorted
/// eigenvalue branch could reach zero inside it under the Lipschitz bound M,
/// i.e. |lambda_k(t0)| + |lambda_k(t1)| <= M (t1 - t0), until M (t1 - t0) drops
/// below the kernel threshold.
PathSampling sample_path(const OperatorPath& path, int initial_points, double lipschitz_bound,
                         const SamplingOptions& options = {});

/// Upper estimate for the eigenvalue Lipschitz constant: twice the largest
/// ||A'(t)|| over `probes` uniform samples.
double estimate_lipschitz_bound(const OperatorPath& path, int probes = 33);

/// Exact derivative if the path carries one, else a Richardson-extrapolated
/// central difference (one-sided at the endpoints). Default step 1e-5 * (b - a).
ComplexMatrix path_derivative(const OperatorPath& path, double t,
                              std::optional<double> step = std::nullopt);

/// Frame t -> F(t), unitary for every t.
struct Frame {
  MatrixFunction value;
  MatrixFunction derivative;  // optional
};

/// t -> F(t)* A(t) F(t). Evaluation throws RejectedInput if F(t) is not
/// unitary to 1e-8.
OperatorPath cogredience_transform(const OperatorPath& path, const Frame& frame);

struct ClutchPair {
  double eigenvalue;
  double defect;
};

struct ClutchReport {
  bool pass = false;
  double max_defect = 0.0;
  double unitarity_defect = 0.0;
  double clutch_tol = 0.0;
  std::vector<ClutchPair> pairs;
};

/// Checks ||A(b) U v - lambda U v|| <= clutch_tol for every eigenpair of A(a)
/// inside the window. Failures are reported, never thrown.
ClutchReport validate_clutch(const ClutchedLoop& loop, double clutch_tol = 1e-8);

/// Throws ClutchValidation with a summary when the report fails.
void require_valid_clutch(const ClutchedLoop& loop, double clutch_tol = 1e-8);

double unitarity_defect(const ComplexMatrix& u);

}  // namespace specflow
