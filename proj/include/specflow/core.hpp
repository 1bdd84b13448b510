#pragma once

#include <complex>
#include <functional>
#include <string_view>

#include <Eigen/Dense>

#include "specflow/error.hpp"

namespace specflow {

using cplx = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

/// Dense real symmetric matrix. Construction symmetrizes the input after
/// checking it is symmetric to within 1e-12 * ||A||.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(const RealMatrix& entries);

  static SymmetricMatrix diagonal(const RealVector& d);

  Eigen::Index dim() const { return entries_.rows(); }
  const RealMatrix& entries() const { return entries_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

 private:
  RealMatrix entries_;
};

/// Dense complex self-adjoint matrix, same construction rules as SymmetricMatrix.
class HermitianMatrix {
 public:
  explicit HermitianMatrix(const ComplexMatrix& entries);

  static HermitianMatrix diagonal(const RealVector& d);

  Eigen::Index dim() const { return entries_.rows(); }
  const ComplexMatrix& entries() const { return entries_; }
  cplx operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

 private:
  ComplexMatrix entries_;
};

/// A quadratic form on R^dim given only through its values.
struct QuadraticForm {
  Eigen::Index dim = 0;
  std::function<double(const RealVector&)> evaluate;
};

struct Eigendecomposition {
  RealVector values;      // ascending
  ComplexMatrix vectors;  // orthonormal columns, vectors.col(k) <-> values(k)
};

/// Throws RejectedInput unless `a` is square and self-adjoint to 1e-12 * ||a||.
void require_self_adjoint(const ComplexMatrix& a);

Eigendecomposition eig_sym(const SymmetricMatrix& a);
Eigendecomposition eig_sym(const HermitianMatrix& a);
/// Unchecked variant for matrices already known to be self-adjoint (hot paths).
Eigendecomposition eig_self_adjoint(const ComplexMatrix& a);
RealVector eigenvalues_self_adjoint(const ComplexMatrix& a);

/// Operator of a quadratic form via polarization on standard basis pairs.
SymmetricMatrix form_to_operator(const QuadraticForm& q);

HermitianMatrix complexify(const SymmetricMatrix& a);

/// (A - iI)(A + iI)^{-1}; always unitary for self-adjoint A.
ComplexMatrix cayley(const HermitianMatrix& a);
ComplexMatrix cayley(const ComplexMatrix& self_adjoint);

enum class Component { EssentiallyPositive, EssentiallyNegative, Indefinite };
std::string_view to_string(Component c);

Component classify_component(const SymmetricMatrix& a, Eigen::Index essential_rank);
Component classify_component(const HermitianMatrix& a, Eigen::Index essential_rank);
Component classify_component(const HermitianMatrix& a);  // m = dim / 4

/// Default zero threshold for eigenvalues: 1e-8 * (1 + ||A||_2).
double default_kernel_tol(const ComplexMatrix& a);
double spectral_norm(const ComplexMatrix& a);

}  // namespace specflow
