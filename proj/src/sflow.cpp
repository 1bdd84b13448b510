#include "specflow/sflow.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace specflow {

std::string_view to_string(Convention c) {
  return c == Convention::RealDim ? "RealDim" : "ComplexDim";
}

std::string_view to_string(Method m) {
  return m == Method::CrossingForm ? "CrossingForm" : "EigenvalueTracking";
}

Convention default_convention(const OperatorPath& path) {
  return path.field() == ScalarField::Real ? Convention::RealDim : Convention::ComplexDim;
}

namespace {

int sign_of(double x, double tol) { return x > tol ? 1 : (x < -tol ? -1 : 0); }

double branch_value(const OperatorPath& path, double t, Eigen::Index k) {
  return eigenvalues_self_adjoint(path(t))(k);
}

/// Sign-change bisection of the k-th sorted eigenvalue on [lo, hi].
double bisect_branch(const OperatorPath& path, Eigen::Index k, double lo, double hi, double acc) {
  const bool lo_negative = branch_value(path, lo, k) < 0.0;
  while (hi - lo > acc) {
    const double mid = 0.5 * (lo + hi);
    if ((branch_value(path, mid, k) < 0.0) == lo_negative) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct Minimum {
  double t;
  double value;
};

/// Golden-section minimization of |lambda_k| on [lo, hi].
Minimum minimize_branch(const OperatorPath& path, Eigen::Index k, double lo, double hi, double acc) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - r * (hi - lo);
  double x2 = lo + r * (hi - lo);
  double f1 = std::abs(branch_value(path, x1, k));
  double f2 = std::abs(branch_value(path, x2, k));
  while (hi - lo > acc) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = std::abs(branch_value(path, x1, k));
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = std::abs(branch_value(path, x2, k));
    }
  }
  const double t = 0.5 * (lo + hi);
  return {t, std::abs(branch_value(path, t, k))};
}

struct Event {
  double t;
  Eigen::Index branch;
};

void require_invertible_endpoints(const PathSampling& sampling, double kernel_tol) {
  for (std::size_t idx : {std::size_t{0}, sampling.grid.size() - 1}) {
    const RealVector& v = sampling.spectra[idx].values;
    const double smallest = v.cwiseAbs().minCoeff();
    if (smallest <= kernel_tol) {
      std::ostringstream os;
      os << "path endpoint t=" << sampling.grid[idx] << " is singular (min |lambda| = " << smallest
         << ", kernel_tol = " << kernel_tol << ")";
      throw Error(ErrorKind::EndpointSingular, os.str());
    }
  }
}

double resolved_kernel_tol(const OperatorPath& path, const SpectralFlowOptions& options) {
  if (options.kernel_tol) return *options.kernel_tol;
  const double na = spectral_norm(path(path.a()));
  const double nb = spectral_norm(path(path.b()));
  return 1e-8 * (1.0 + std::max(na, nb));
}

PathSampling sample_for_flow(const OperatorPath& path, const SpectralFlowOptions& options) {
  const double bound = options.lipschitz_bound.value_or(estimate_lipschitz_bound(path));
  SamplingOptions so;
  so.max_points = options.max_points;
  so.kernel_tol = resolved_kernel_tol(path, options);
  return sample_path(path, options.initial_points, bound, so);
}

/// Signature of the form viewed as a real quadratic form on the realified kernel.
int realified_signature(const ComplexMatrix& form, double tol) {
  const Eigen::Index k = form.rows();
  RealMatrix real(2 * k, 2 * k);
  real.topLeftCorner(k, k) = form.real();
  real.topRightCorner(k, k) = -form.imag();
  real.bottomLeftCorner(k, k) = form.imag();
  real.bottomRightCorner(k, k) = form.real();
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(0.5 * (real + real.transpose()),
                                                   Eigen::EigenvaluesOnly);
  int sig = 0;
  for (double v : solver.eigenvalues()) sig += sign_of(v, tol);
  return sig;
}

int convention_factor_value(const OperatorPath& path, Convention convention,
                            const std::vector<CrossingRecord>& crossings,
                            const std::vector<double>& tols) {
  int value = 0;
  for (std::size_t i = 0; i < crossings.size(); ++i) {
    const auto& c = crossings[i];
    if (path.field() == ScalarField::Complex && convention == Convention::RealDim) {
      value += realified_signature(c.form, tols[i]);
    } else {
      value += c.signature;
    }
  }
  return value;
}

}  // namespace

std::vector<CrossingRecord> find_crossings(const OperatorPath& path, const PathSampling& sampling,
                                           double kernel_tol, int max_cluster) {
  require_invertible_endpoints(sampling, kernel_tol);

  const double acc = 1e-10 * path.length();
  const std::size_t n = sampling.grid.size();
  const Eigen::Index dim = path.dim();
  const double bound = sampling.lipschitz_bound;

  std::vector<Event> events;
  for (Eigen::Index k = 0; k < dim; ++k) {
    std::size_t i = 0;  // last sample with a nonzero sign
    while (i + 1 < n) {
      const double vi = sampling.spectra[i].values(k);
      std::size_t j = i + 1;
      while (j < n && sign_of(sampling.spectra[j].values(k), kernel_tol) == 0) ++j;
      // Endpoints are invertible, so j < n.
      const double vj = sampling.spectra[j].values(k);
      const double lo = sampling.grid[i], hi = sampling.grid[j];
      if ((vi < 0.0) != (vj < 0.0)) {
        events.push_back({bisect_branch(path, k, lo, hi, acc), k});
      } else if (j > i + 1 || std::abs(vi) + std::abs(vj) <= bound * (hi - lo)) {
        // Either the branch sampled as zero or the sampler could not rule out a touch.
        const Minimum m = minimize_branch(path, k, lo, hi, acc);
        if (m.value <= kernel_tol) events.push_back({m.t, k});
      }
      i = j;
    }
  }

  std::sort(events.begin(), events.end(), [](const Event& x, const Event& y) {
    return x.t < y.t || (x.t == y.t && x.branch < y.branch);
  });

  // Events closer than the merge tolerance are one cluster.
  const double merge_tol = std::max(1e-8 * path.length(), 10.0 * acc);
  std::vector<CrossingRecord> out;
  std::size_t first = 0;
  while (first < events.size()) {
    std::size_t last = first;
    while (last + 1 < events.size() && events[last + 1].t - events[last].t <= merge_tol) ++last;
    const double t = 0.5 * (events[first].t + events[last].t);
    std::set<Eigen::Index> branches;
    for (std::size_t e = first; e <= last; ++e) branches.insert(events[e].branch);

    const Eigendecomposition spec = eig_self_adjoint(path(t));
    std::vector<Eigen::Index> cols(branches.begin(), branches.end());
    for (Eigen::Index j = 0; j < spec.values.size(); ++j) {
      if (std::abs(spec.values(j)) <= kernel_tol && !branches.count(j)) cols.push_back(j);
    }
    std::sort(cols.begin(), cols.end());
    if (static_cast<int>(cols.size()) > max_cluster) {
      std::ostringstream os;
      os << "unresolved crossing cluster of size " << cols.size() << " near t=" << t;
      throw ResolutionError(os.str(), events[first].t, events[last].t);
    }
    CrossingRecord rec;
    rec.t = t;
    rec.kernel_basis.resize(dim, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      rec.kernel_basis.col(static_cast<Eigen::Index>(c)) = spec.vectors.col(cols[c]);
    }
    out.push_back(std::move(rec));
    first = last + 1;
  }
  return out;
}

CrossingRecord crossing_form(const OperatorPath& path, CrossingRecord record,
                             std::optional<double> regularity_tol) {
  if (record.kernel_basis.cols() == 0) {
    throw Error(ErrorKind::RejectedInput, "crossing record has an empty kernel basis");
  }
  const ComplexMatrix& v = record.kernel_basis;
  const double ortho = (v.adjoint() * v - ComplexMatrix::Identity(v.cols(), v.cols())).norm();
  if (ortho > 1e-8) throw Error(ErrorKind::RejectedInput, "kernel basis is not orthonormal");

  const ComplexMatrix deriv = path_derivative(path, record.t);
  const double tol = regularity_tol.value_or(1e-6 * (1.0 + spectral_norm(deriv)));
  ComplexMatrix form = v.adjoint() * deriv * v;
  form = 0.5 * (form + form.adjoint()).eval();
  record.form_eigenvalues = eigenvalues_self_adjoint(form);
  record.form = std::move(form);
  record.signature = 0;
  for (double ev : record.form_eigenvalues) record.signature += sign_of(ev, tol);
  record.regular = record.form_eigenvalues.cwiseAbs().minCoeff() > tol;
  record.has_form = true;
  return record;
}

SpectralFlowResult spectral_flow_crossing(const OperatorPath& path,
                                          const SpectralFlowOptions& options) {
  const PathSampling sampling = sample_for_flow(path, options);
  std::vector<CrossingRecord> crossings = find_crossings(path, sampling, sampling.kernel_tol,
                                                         options.max_cluster);
  std::vector<double> tols;
  for (auto& c : crossings) {
    c = crossing_form(path, std::move(c), options.regularity_tol);
    const double tol =
        options.regularity_tol.value_or(1e-6 * (1.0 + spectral_norm(path_derivative(path, c.t))));
    tols.push_back(tol);
    if (!c.regular) {
      std::ostringstream os;
      os << "irregular crossing at t=" << c.t << " (min |eig Gamma| = "
         << c.form_eigenvalues.cwiseAbs().minCoeff() << ", tol " << tol
         << "); use the eigenvalue-tracking method";
      throw Error(ErrorKind::IrregularCrossing, os.str());
    }
  }
  SpectralFlowResult result;
  result.method = Method::CrossingForm;
  result.convention = options.convention.value_or(default_convention(path));
  result.value = convention_factor_value(path, result.convention, crossings, tols);
  result.crossings = std::move(crossings);
  return result;
}

SpectralFlowResult spectral_flow_counting(const OperatorPath& path,
                                          const SpectralFlowOptions& options) {
  const PathSampling sampling = sample_for_flow(path, options);
  require_invertible_endpoints(sampling, sampling.kernel_tol);

  SpectralFlowResult result;
  result.method = Method::EigenvalueTracking;
  result.convention = options.convention.value_or(default_convention(path));
  const int weight =
      (path.field() == ScalarField::Complex && result.convention == Convention::RealDim) ? 2 : 1;

  const std::size_t n = sampling.grid.size();
  for (Eigen::Index k = 0; k < path.dim(); ++k) {
    std::size_t prev = 0;
    int prev_sign = sign_of(sampling.spectra[0].values(k), sampling.kernel_tol);
    for (std::size_t i = 1; i < n; ++i) {
      const int s = sign_of(sampling.spectra[i].values(k), sampling.kernel_tol);
      if (s == 0) continue;
      if (s != prev_sign) {
        CrossingRecord rec;
        rec.t = 0.5 * (sampling.grid[prev] + sampling.grid[i]);
        rec.signature = s;  // -1 -> +1 is an upward transit
        result.crossings.push_back(std::move(rec));
        result.value += weight * s;
      }
      prev = i;
      prev_sign = s;
    }
  }
  std::stable_sort(result.crossings.begin(), result.crossings.end(),
                   [](const CrossingRecord& x, const CrossingRecord& y) { return x.t < y.t; });
  return result;
}

SpectralFlowResult spectral_flow(const OperatorPath& path, Method method,
                                 const SpectralFlowOptions& options) {
  return method == Method::CrossingForm ? spectral_flow_crossing(path, options)
                                        : spectral_flow_counting(path, options);
}

SpectralFlowResult spectral_flow_loop(const ClutchedLoop& loop, Method method,
                                      const SpectralFlowOptions& options, double clutch_tol) {
  require_valid_clutch(loop, clutch_tol);
  const double kernel_tol = resolved_kernel_tol(loop.path, options);
  if (!(loop.window > kernel_tol)) {
    std::ostringstream os;
    os << "spectral window " << loop.window << " does not exceed the kernel threshold " << kernel_tol;
    throw Error(ErrorKind::Window, os.str());
  }
  for (double t : {loop.path.a(), loop.path.b()}) {
    const RealVector ev = eigenvalues_self_adjoint(loop.path(t));
    bool any_inside = false;
    for (double v : ev) {
      if (std::abs(v) <= loop.window) any_inside = true;
      if (std::abs(v) <= kernel_tol) {
        std::ostringstream os;
        os << "loop endpoint t=" << t << " is singular inside the window";
        throw Error(ErrorKind::EndpointSingular, os.str());
      }
    }
    if (!any_inside) {
      std::ostringstream os;
      os << "no eigenvalue of A(" << t << ") lies in the window |lambda| <= " << loop.window;
      throw Error(ErrorKind::Window, os.str());
    }
  }
  SpectralFlowOptions opts = options;
  opts.kernel_tol = kernel_tol;
  return spectral_flow(loop.path, method, opts);
}

DoublingPair doubling_pair(const OperatorPath& path, const SpectralFlowOptions& options) {
  if (path.field() != ScalarField::Real) {
    throw Error(ErrorKind::RejectedInput, "doubling_pair needs a real path");
  }
  SpectralFlowOptions real_opts = options;
  real_opts.convention = Convention::RealDim;
  const int sf_real = spectral_flow_crossing(path, real_opts).value;

  const OperatorPath complex_path = path.complexified();
  SpectralFlowOptions realdim = options;
  realdim.convention = Convention::RealDim;
  SpectralFlowOptions complexdim = options;
  complexdim.convention = Convention::ComplexDim;
  return {sf_real, spectral_flow_crossing(complex_path, realdim).value,
          spectral_flow_crossing(complex_path, complexdim).value};
}

}  // namespace specflow
