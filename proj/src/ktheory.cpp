#include "specflow/ktheory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace specflow {

namespace {

double min_singular_value(const ComplexMatrix& m) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  const auto& s = svd.singularValues();
  if (m.rows() > m.cols()) return 0.0;
  return s(s.size() - 1);
}

/// Orthonormal basis of the orthogonal complement of the columns of v in C^m.
ComplexMatrix complement_basis(const ComplexMatrix& v, Eigen::Index m) {
  if (v.cols() == 0) return ComplexMatrix::Identity(m, m);
  Eigen::HouseholderQR<ComplexMatrix> qr(v);
  const ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(m, m);
  return q.rightCols(m - v.cols());
}

Eigen::Index numerical_rank(const ComplexMatrix& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  Eigen::Index rank = 0;
  for (double s : svd.singularValues()) {
    if (s > tol) ++rank;
  }
  return rank;
}

double resolve_transversality_tol(const MatrixFamily& family, const std::vector<double>& grid,
                                  const TransverseOptions& options) {
  if (options.transversality_tol) return *options.transversality_tol;
  double worst = 0.0;
  for (double x : grid) worst = std::max(worst, spectral_norm(family(x)));
  return 1e-6 * (1.0 + worst);
}

}  // namespace

std::vector<double> AlphaPath::singular_instants(double tol) const {
  std::vector<double> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (min_singular_values[i] <= tol) out.push_back(grid[i]);
  }
  return out;
}

AlphaPath alpha_path(const HermitianMatrix& a, int n_samples) {
  if (n_samples < 3) throw Error(ErrorKind::RejectedInput, "alpha_path needs at least 3 samples");
  AlphaPath out;
  out.source = a.entries();
  const Eigen::Index n = a.dim();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const cplx i_unit(0.0, 1.0);
  for (int k = 0; k < n_samples; ++k) {
    const double t = static_cast<double>(k) / (n_samples - 1);
    // cos/sin of exact multiples of pi/2 are snapped so the endpoints are exactly +-Id.
    double c = std::cos(std::numbers::pi * t);
    double s = std::sin(std::numbers::pi * t);
    if (2 * k == n_samples - 1) c = 0.0, s = 1.0;
    if (k == n_samples - 1) c = -1.0, s = 0.0;
    ComplexMatrix sample = c * id + i_unit * s * a.entries();
    out.grid.push_back(t);
    out.min_singular_values.push_back(min_singular_value(sample));
    out.samples.push_back(std::move(sample));
  }
  return out;
}

double transversality_margin(const ComplexMatrix& l, const ComplexMatrix& v) {
  const Eigen::Index m = l.rows();
  if (l.cols() + v.cols() < m) return 0.0;
  ComplexMatrix aug(m, l.cols() + v.cols());
  aug << l, v;
  const RealVector ev = eigenvalues_self_adjoint(aug * aug.adjoint());
  return std::sqrt(std::max(0.0, ev(0)));
}

ComplexMatrix transverse_subspace(const MatrixFamily& family, const std::vector<double>& grid,
                                  const TransverseOptions& options) {
  if (grid.empty()) throw Error(ErrorKind::RejectedInput, "transverse_subspace needs a grid");
  const Eigen::Index m = family(grid.front()).rows();
  const double tol = resolve_transversality_tol(family, grid, options);

  ComplexMatrix v(m, 0);
  for (double x : grid) {
    const ComplexMatrix l = family(x);
    if (l.rows() != m) throw Error(ErrorKind::RejectedInput, "family codomain dimension changed");
    while (transversality_margin(l, v) <= tol) {
      if (v.cols() >= m) {
        std::ostringstream os;
        os << "transverse subspace exhausted the codomain (dim " << m << ") at x=" << x;
        throw Error(ErrorKind::Inconsistency, os.str());
      }
      // Append the direction of V-perp least covered by Im L_x.
      const ComplexMatrix q = complement_basis(v, m);
      Eigen::JacobiSVD<ComplexMatrix> svd(q.adjoint() * l, Eigen::ComputeFullU);
      const Eigen::Index last = q.cols() - 1;
      ComplexVector w = q * svd.matrixU().col(last);
      // re-orthonormalize against V
      w -= v * (v.adjoint() * w);
      w.normalize();
      v.conservativeResize(m, v.cols() + 1);
      v.col(v.cols() - 1) = w;
    }
  }
  return v;
}

IndexBundleData index_bundle_data(const MatrixFamily& family, const std::vector<double>& grid,
                                  const ComplexMatrix& transverse, const TransverseOptions& options) {
  const double tol = resolve_transversality_tol(family, grid, options);
  IndexBundleData out;
  out.grid = grid;
  out.transverse = transverse;
  for (double x : grid) {
    const ComplexMatrix l = family(x);
    const Eigen::Index m = l.rows(), n = l.cols();
    if (transverse.rows() != m) throw Error(ErrorKind::RejectedInput, "V has the wrong ambient dimension");
    const double margin = transversality_margin(l, transverse);
    if (margin <= tol) {
      std::ostringstream os;
      os << "V is not transverse to the family at x=" << x << " (margin " << margin << ")";
      throw Error(ErrorKind::Precondition, os.str());
    }
    // Y_x = L_x^{-1}(V) = ker of the projection onto V-perp composed with L_x.
    const ComplexMatrix q = complement_basis(transverse, m);
    const Eigen::Index fiber = n - numerical_rank(q.adjoint() * l, tol);
    const Eigen::Index rank = numerical_rank(l, tol);
    out.fiber_ranks.push_back(fiber);
    out.classical_index.push_back((n - rank) - (m - rank));
  }
  out.fiber_rank = out.fiber_ranks.front();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (out.fiber_ranks[i] != out.fiber_rank) {
      std::ostringstream os;
      os << "fiber rank jumps from " << out.fiber_rank << " to " << out.fiber_ranks[i] << " at x="
         << grid[i] << ": family is not Fredholm-continuous on this grid";
      throw Error(ErrorKind::Inconsistency, os.str());
    }
  }
  out.virtual_rank = out.fiber_rank - transverse.cols();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (out.classical_index[i] != out.virtual_rank) {
      throw Error(ErrorKind::Inconsistency, "virtual rank differs from the classical index");
    }
  }
  return out;
}

WindingResult winding_number(const std::vector<cplx>& samples, bool closed) {
  if (samples.empty()) throw Error(ErrorKind::RejectedInput, "winding_number needs samples");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(std::abs(samples[i]) > 0.0) || !std::isfinite(std::abs(samples[i]))) {
      std::ostringstream os;
      os << "sample " << i << " is zero or not finite";
      throw Error(ErrorKind::Degenerate, os.str());
    }
  }
  auto step = [](cplx from, cplx to) { return std::arg(to * std::conj(from)); };
  auto check = [](double s, std::size_t i) {
    if (std::abs(s) >= 0.5 * std::numbers::pi) {
      std::ostringstream os;
      os << "phase step " << s << " rad after sample " << i << " is under-resolved (>= pi/2)";
      throw Error(ErrorKind::Precision, os.str());
    }
  };

  WindingResult out;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const double s = step(samples[i], samples[i + 1]);
    check(s, i);
    out.raw_phase_change += s;
  }
  double total = out.raw_phase_change;
  if (closed) {
    const double wrap = step(samples.back(), samples.front());
    check(wrap, samples.size() - 1);
    total += wrap;
  }
  out.value = static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
  out.closure_defect = std::abs(out.raw_phase_change - 2.0 * std::numbers::pi * out.value);
  return out;
}

cplx windowed_cayley_determinant(const ComplexMatrix& a, double window) {
  const Eigendecomposition spec = eig_self_adjoint(a);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index k = 0; k < spec.values.size(); ++k) {
    if (std::abs(spec.values(k)) <= window) cols.push_back(k);
  }
  if (cols.empty()) return cplx(1.0, 0.0);
  ComplexMatrix w(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) w.col(static_cast<Eigen::Index>(c)) = spec.vectors.col(cols[c]);
  ComplexMatrix compressed = w.adjoint() * a * w;
  compressed = 0.5 * (compressed + compressed.adjoint()).eval();
  return cayley(compressed).determinant();
}

ChernResult chern_number_selfadjoint_loop(const ClutchedLoop& loop, const ChernOptions& options) {
  require_valid_clutch(loop, options.clutch_tol);
  const OperatorPath& path = loop.path;
  if (options.initial_points < 2) throw Error(ErrorKind::RejectedInput, "initial_points must be >= 2");

  struct Point {
    double t;
    cplx det;
  };
  std::vector<Point> points;
  for (int i = 0; i < options.initial_points; ++i) {
    const double t = (i == options.initial_points - 1)
                         ? path.b()
                         : path.a() + path.length() * i / (options.initial_points - 1);
    points.push_back({t, windowed_cayley_determinant(path(t), loop.window)});
  }

  // Window-edge entries and exits are jumps that bisection cannot shrink, so
  // refinement stops at a minimal step; a remaining step >= pi/2 then means the
  // window is too narrow to resolve branches leaving it.
  const double min_step = 1e-10 * path.length();
  bool refined = true;
  while (refined) {
    refined = false;
    std::vector<Point> next;
    next.reserve(points.size() * 2);
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
      next.push_back(points[i]);
      const double phase = std::abs(std::arg(points[i + 1].det * std::conj(points[i].det)));
      if (phase > options.target_step && points[i + 1].t - points[i].t > min_step) {
        const double mid = 0.5 * (points[i].t + points[i + 1].t);
        next.push_back({mid, windowed_cayley_determinant(path(mid), loop.window)});
        refined = true;
      }
    }
    next.push_back(points.back());
    points = std::move(next);
    if (points.size() > options.max_points) {
      throw ResolutionError("determinant phase sampling exceeded max_points", path.a(), path.b());
    }
  }

  std::vector<cplx> dets;
  ChernResult out;
  for (const auto& p : points) {
    dets.push_back(p.det);
    out.grid.push_back(p.t);
  }
  try {
    out.winding = winding_number(dets, true);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Precision) throw;
    throw Error(ErrorKind::Window,
                std::string("eigenvalue branch crosses the window edge too abruptly: ") + e.what());
  }
  if (out.winding.closure_defect > options.winding_tol) {
    std::ostringstream os;
    os << "determinant winding closure defect " << out.winding.closure_defect << " exceeds "
       << options.winding_tol;
    throw Error(ErrorKind::Precision, os.str());
  }
  out.value = out.winding.value;
  return out;
}

}  // namespace specflow
