#include "specflow/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace specflow {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RejectedInput: return "rejected_input";
    case ErrorKind::Inconsistency: return "inconsistency";
    case ErrorKind::ResolutionExhausted: return "resolution_exhausted";
    case ErrorKind::EndpointSingular: return "endpoint_singular";
    case ErrorKind::IrregularCrossing: return "irregular_crossing";
    case ErrorKind::Window: return "window";
    case ErrorKind::ClutchValidation: return "clutch_validation";
    case ErrorKind::Precision: return "precision";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Evaluation: return "evaluation";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

std::string_view to_string(Component c) {
  switch (c) {
    case Component::EssentiallyPositive: return "essentially_positive";
    case Component::EssentiallyNegative: return "essentially_negative";
    case Component::Indefinite: return "indefinite";
  }
  return "unknown";
}

namespace {

template <typename Matrix>
void check_square_self_adjoint(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    std::ostringstream os;
    os << "expected a non-empty square matrix, got " << a.rows() << "x" << a.cols();
    throw Error(ErrorKind::RejectedInput, os.str());
  }
  const double scale = a.norm();
  const double defect = (a - a.adjoint()).norm();
  if (defect > 1e-12 * scale) {
    std::ostringstream os;
    os << "matrix is not self-adjoint: ||A - A*|| = " << defect << " exceeds " << 1e-12 * scale;
    throw Error(ErrorKind::RejectedInput, os.str());
  }
}

}  // namespace

void require_self_adjoint(const ComplexMatrix& a) { check_square_self_adjoint(a); }

SymmetricMatrix::SymmetricMatrix(const RealMatrix& entries) {
  check_square_self_adjoint(entries);
  entries_ = 0.5 * (entries + entries.transpose());
}

SymmetricMatrix SymmetricMatrix::diagonal(const RealVector& d) {
  return SymmetricMatrix(RealMatrix(d.asDiagonal()));
}

HermitianMatrix::HermitianMatrix(const ComplexMatrix& entries) {
  check_square_self_adjoint(entries);
  entries_ = 0.5 * (entries + entries.adjoint());
  // diagonal of a Hermitian matrix is real
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) entries_(i, i) = entries_(i, i).real();
}

HermitianMatrix HermitianMatrix::diagonal(const RealVector& d) {
  return HermitianMatrix(ComplexMatrix(d.cast<cplx>().asDiagonal()));
}

Eigendecomposition eig_self_adjoint(const ComplexMatrix& a) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(a, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::Precision, "self-adjoint eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

RealVector eigenvalues_self_adjoint(const ComplexMatrix& a) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::Precision, "self-adjoint eigensolver did not converge");
  }
  return solver.eigenvalues();
}

Eigendecomposition eig_sym(const SymmetricMatrix& a) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(a.entries(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::Precision, "symmetric eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors().cast<cplx>()};
}

Eigendecomposition eig_sym(const HermitianMatrix& a) { return eig_self_adjoint(a.entries()); }

SymmetricMatrix form_to_operator(const QuadraticForm& q) {
  const Eigen::Index n = q.dim;
  if (n <= 0 || !q.evaluate) {
    throw Error(ErrorKind::RejectedInput, "quadratic form needs a positive dimension and an evaluator");
  }
  auto polar = [&](const RealVector& u, const RealVector& v) {
    return 0.25 * (q.evaluate(u + v) - q.evaluate(u - v));
  };

  RealMatrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      a(i, j) = polar(RealVector::Unit(n, i), RealVector::Unit(n, j));
      a(j, i) = a(i, j);
    }
  }

  // Spot-check bilinearity and homogeneity on a fixed set of probes.
  const double scale = 1.0 + a.norm();
  for (int probe = 0; probe < 4; ++probe) {
    RealVector u(n), v(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      u(k) = std::sin(1.3 * (k + 1) + probe);
      v(k) = std::cos(0.7 * (k + 2) * (probe + 1));
    }
    const double predicted = u.dot(a * v);
    const double measured = polar(u, v);
    const double homog = q.evaluate(2.0 * u) - 4.0 * q.evaluate(u);
    const double size = scale * (1.0 + u.squaredNorm() + v.squaredNorm());
    if (std::abs(predicted - measured) > 1e-8 * size || std::abs(homog) > 1e-8 * size) {
      throw Error(ErrorKind::Inconsistency,
                  "evaluator is not a quadratic form: polarization fails the bilinearity check");
    }
  }
  return SymmetricMatrix(a);
}

HermitianMatrix complexify(const SymmetricMatrix& a) {
  return HermitianMatrix(a.entries().cast<cplx>());
}

ComplexMatrix cayley(const ComplexMatrix& a) {
  const Eigen::Index n = a.rows();
  const ComplexMatrix shift = cplx(0.0, 1.0) * ComplexMatrix::Identity(n, n);
  // (A - iI)(A + iI)^{-1}; the two factors commute, so solve (A + iI) X = (A - iI).
  return (a + shift).partialPivLu().solve(a - shift);
}

ComplexMatrix cayley(const HermitianMatrix& a) { return cayley(a.entries()); }

namespace {

Component classify_values(const RealVector& values, Eigen::Index m, double tol) {
  const Eigen::Index n = values.size();
  if (m < 0 || m >= n) {
    throw Error(ErrorKind::RejectedInput, "essential rank must satisfy 0 <= m < dim");
  }
  Eigen::Index pos = 0, neg = 0;
  for (double v : values) {
    if (v > tol) ++pos;
    else if (v < -tol) ++neg;
  }
  if (neg <= m && m < pos) return Component::EssentiallyPositive;
  if (pos <= m && m < neg) return Component::EssentiallyNegative;
  if (pos > m && neg > m) return Component::Indefinite;
  std::ostringstream os;
  os << "cannot classify component: " << pos << " positive, " << neg
     << " negative eigenvalues with essential rank " << m;
  throw Error(ErrorKind::Degenerate, os.str());
}

}  // namespace

Component classify_component(const HermitianMatrix& a, Eigen::Index essential_rank) {
  const RealVector values = eigenvalues_self_adjoint(a.entries());
  return classify_values(values, essential_rank, default_kernel_tol(a.entries()));
}

Component classify_component(const SymmetricMatrix& a, Eigen::Index essential_rank) {
  return classify_component(complexify(a), essential_rank);
}

Component classify_component(const HermitianMatrix& a) {
  return classify_component(a, a.dim() / 4);
}

double spectral_norm(const ComplexMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(a);
  return svd.singularValues()(0);
}

double default_kernel_tol(const ComplexMatrix& a) {
  double norm;
  if (a.rows() == a.cols()) {
    // self-adjoint inputs: ||A||_2 is the largest |eigenvalue|
    const RealVector ev = eigenvalues_self_adjoint(a);
    norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  } else {
    norm = spectral_norm(a);
  }
  return 1e-8 * (1.0 + norm);
}

}  // namespace specflow
