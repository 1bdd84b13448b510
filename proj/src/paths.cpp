#include "specflow/paths.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace specflow {

OperatorPath::OperatorPath(double a, double b, MatrixFunction evaluate, MatrixFunction derivative,
                           ScalarField field)
    : a_(a), b_(b), dim_(0), field_(field), evaluate_(std::move(evaluate)),
      derivative_(std::move(derivative)) {
  if (!(a < b)) throw Error(ErrorKind::RejectedInput, "path interval must satisfy a < b");
  if (!evaluate_) throw Error(ErrorKind::RejectedInput, "path needs an evaluator");
  const ComplexMatrix first = evaluate_(a);
  if (first.rows() != first.cols() || first.rows() == 0) {
    throw Error(ErrorKind::RejectedInput, "path evaluator must return non-empty square matrices");
  }
  dim_ = first.rows();
}

ComplexMatrix OperatorPath::operator()(double t) const {
  ComplexMatrix m;
  try {
    m = evaluate_(t);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Evaluation, std::string("path evaluation failed: ") + e.what());
  }
  if (m.rows() != dim_ || m.cols() != dim_) {
    std::ostringstream os;
    os << "path dimension changed at t=" << t << ": " << m.rows() << "x" << m.cols()
       << " instead of " << dim_;
    throw Error(ErrorKind::Evaluation, os.str());
  }
  return m;
}

ComplexMatrix OperatorPath::exact_derivative(double t) const {
  if (!derivative_) throw Error(ErrorKind::Evaluation, "path has no analytic derivative");
  try {
    return derivative_(t);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Evaluation, std::string("derivative evaluation failed: ") + e.what());
  }
}

OperatorPath OperatorPath::restricted(double lo, double hi) const {
  return OperatorPath(lo, hi, evaluate_, derivative_, field_);
}

OperatorPath OperatorPath::reversed() const {
  const double s = a_ + b_;
  MatrixFunction eval = [f = evaluate_, s](double t) { return f(s - t); };
  MatrixFunction deriv;
  if (derivative_) deriv = [d = derivative_, s](double t) -> ComplexMatrix { return -d(s - t); };
  return OperatorPath(a_, b_, std::move(eval), std::move(deriv), field_);
}

OperatorPath OperatorPath::complexified() const {
  return OperatorPath(a_, b_, evaluate_, derivative_, ScalarField::Complex);
}

double estimate_lipschitz_bound(const OperatorPath& path, int probes) {
  probes = std::max(probes, 2);
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    const double t = path.a() + path.length() * i / (probes - 1);
    worst = std::max(worst, spectral_norm(path_derivative(path, t)));
  }
  // Positive floor so constant paths still get a usable bound.
  return 2.0 * worst + 1e-12;
}

namespace {

struct Sample {
  double t;
  Eigendecomposition spectrum;
};

bool needs_refinement(const Sample& lo, const Sample& hi, double bound, double min_step) {
  const double h = hi.t - lo.t;
  if (bound * h <= min_step) return false;
  const RealVector& x = lo.spectrum.values;
  const RealVector& y = hi.spectrum.values;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (std::abs(x(k)) + std::abs(y(k)) <= bound * h) return true;
  }
  return false;
}

}  // namespace

PathSampling sample_path(const OperatorPath& path, int initial_points, double lipschitz_bound,
                         const SamplingOptions& options) {
  if (initial_points < 2) throw Error(ErrorKind::RejectedInput, "initial_points must be >= 2");
  if (!(lipschitz_bound > 0.0)) throw Error(ErrorKind::RejectedInput, "lipschitz_bound must be positive");

  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(initial_points));
  double max_norm = 0.0;
  for (int i = 0; i < initial_points; ++i) {
    const double t = (i == initial_points - 1)
                         ? path.b()
                         : path.a() + path.length() * i / (initial_points - 1);
    Sample s{t, eig_self_adjoint(path(t))};
    max_norm = std::max({max_norm, std::abs(s.spectrum.values(0)),
                         std::abs(s.spectrum.values(s.spectrum.values.size() - 1))});
    samples.push_back(std::move(s));
  }
  const double kernel_tol = options.kernel_tol.value_or(1e-8 * (1.0 + max_norm));
  // Below this step every eigenvalue inside the interval is within kernel_tol of
  // an endpoint value, so further bisection cannot reveal anything new.
  const double min_step = std::max(kernel_tol, 1e-13 * path.length() * lipschitz_bound);

  bool refined = true;
  while (refined) {
    refined = false;
    std::vector<Sample> next;
    next.reserve(samples.size() * 2);
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
      next.push_back(samples[i]);
      if (needs_refinement(samples[i], samples[i + 1], lipschitz_bound, min_step)) {
        const double mid = 0.5 * (samples[i].t + samples[i + 1].t);
        next.push_back(Sample{mid, eig_self_adjoint(path(mid))});
        refined = true;
        if (next.size() + (samples.size() - i) > options.max_points) {
          std::ostringstream os;
          os << "sampling exceeded " << options.max_points << " points near [" << samples[i].t
             << ", " << samples[i + 1].t << "]";
          throw ResolutionError(os.str(), samples[i].t, samples[i + 1].t);
        }
      }
    }
    next.push_back(samples.back());
    samples = std::move(next);
  }

  PathSampling out;
  out.lipschitz_bound = lipschitz_bound;
  out.kernel_tol = kernel_tol;
  out.grid.reserve(samples.size());
  out.spectra.reserve(samples.size());
  for (auto& s : samples) {
    out.grid.push_back(s.t);
    out.spectra.push_back(std::move(s.spectrum));
  }
  return out;
}

ComplexMatrix path_derivative(const OperatorPath& path, double t, std::optional<double> step) {
  if (path.has_derivative()) return path.exact_derivative(t);

  const double h = step.value_or(1e-5 * path.length());
  // Second-order stencils, Richardson-extrapolated once: (4 D(h/2) - D(h)) / 3.
  auto central = [&](double s) { return ComplexMatrix((path(t + s) - path(t - s)) / (2.0 * s)); };
  auto forward = [&](double s) {
    return ComplexMatrix((-3.0 * path(t) + 4.0 * path(t + s) - path(t + 2.0 * s)) / (2.0 * s));
  };
  auto backward = [&](double s) {
    return ComplexMatrix((3.0 * path(t) - 4.0 * path(t - s) + path(t - 2.0 * s)) / (2.0 * s));
  };

  if (t - h < path.a()) return (4.0 * forward(0.5 * h) - forward(h)) / 3.0;
  if (t + h > path.b()) return (4.0 * backward(0.5 * h) - backward(h)) / 3.0;
  return (4.0 * central(0.5 * h) - central(h)) / 3.0;
}

double unitarity_defect(const ComplexMatrix& u) {
  if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
  return (u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols())).norm();
}

OperatorPath cogredience_transform(const OperatorPath& path, const Frame& frame) {
  if (!frame.value) throw Error(ErrorKind::RejectedInput, "frame needs an evaluator");
  auto checked = [f = frame.value](double t) {
    ComplexMatrix u = f(t);
    const double defect = unitarity_defect(u);
    if (!(defect <= 1e-8)) {
      std::ostringstream os;
      os << "frame is not unitary at t=" << t << " (defect " << defect << ")";
      throw Error(ErrorKind::RejectedInput, os.str());
    }
    return u;
  };
  // Probe the frame up front so a bad frame is rejected at construction.
  for (int i = 0; i <= 8; ++i) checked(path.a() + path.length() * i / 8.0);

  MatrixFunction eval = [p = path, checked](double t) -> ComplexMatrix {
    const ComplexMatrix u = checked(t);
    return u.adjoint() * p(t) * u;
  };
  MatrixFunction deriv;
  if (path.has_derivative() && frame.derivative) {
    deriv = [p = path, checked, df = frame.derivative](double t) -> ComplexMatrix {
      const ComplexMatrix u = checked(t);
      const ComplexMatrix du = df(t);
      const ComplexMatrix a = p(t);
      return du.adjoint() * a * u + u.adjoint() * p.exact_derivative(t) * u + u.adjoint() * a * du;
    };
  }
  return OperatorPath(path.a(), path.b(), std::move(eval), std::move(deriv), path.field());
}

ClutchReport validate_clutch(const ClutchedLoop& loop, double clutch_tol) {
  ClutchReport report;
  report.clutch_tol = clutch_tol;
  const ComplexMatrix& u = loop.clutch;
  report.unitarity_defect = unitarity_defect(u);
  if (u.rows() != loop.path.dim() || u.cols() != loop.path.dim()) {
    report.pass = false;
    report.max_defect = std::numeric_limits<double>::infinity();
    return report;
  }
  const Eigendecomposition start = eig_self_adjoint(loop.path(loop.path.a()));
  const ComplexMatrix end = loop.path(loop.path.b());
  for (Eigen::Index k = 0; k < start.values.size(); ++k) {
    const double lambda = start.values(k);
    if (std::abs(lambda) > loop.window) continue;
    const ComplexVector w = u * start.vectors.col(k);
    const double defect = (end * w - lambda * w).norm();
    report.pairs.push_back({lambda, defect});
    report.max_defect = std::max(report.max_defect, defect);
  }
  report.pass = report.unitarity_defect <= 1e-10 && report.max_defect <= clutch_tol;
  return report;
}

void require_valid_clutch(const ClutchedLoop& loop, double clutch_tol) {
  const ClutchReport report = validate_clutch(loop, clutch_tol);
  if (!report.pass) {
    std::ostringstream os;
    os << "clutch does not intertwine the endpoint spectra on the window " << loop.window
       << ": max defect " << report.max_defect << " (tol " << clutch_tol
       << "), unitarity defect " << report.unitarity_defect;
    throw Error(ErrorKind::ClutchValidation, os.str());
  }
}

}  // namespace specflow
