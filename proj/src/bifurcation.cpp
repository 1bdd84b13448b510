#include "specflow/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace specflow {

RealVector FunctionalFamily::sigma(ParameterPoint x) const {
  if (trivial_branch) return trivial_branch(x);
  return RealVector::Zero(state_dim);
}

RealMatrix FunctionalFamily::hessian_at(ParameterPoint x, const RealVector& u) const {
  if (hessian) return hessian(x, u);
  const double h = 1e-5;
  RealMatrix out(state_dim, state_dim);
  for (Eigen::Index j = 0; j < state_dim; ++j) {
    RealVector up = u, um = u;
    up(j) += h;
    um(j) -= h;
    out.col(j) = (gradient(x, up) - gradient(x, um)) / (2.0 * h);
  }
  return 0.5 * (out + out.transpose());
}

double FunctionalFamily::t_begin() const {
  return std::visit([](const auto& s) { return s.a; }, space);
}

double FunctionalFamily::t_end() const {
  return std::visit([](const auto& s) { return s.b; }, space);
}

ParameterLoop t_generator(const FunctionalFamily& family, double phi) {
  ParameterLoop loop;
  std::ostringstream os;
  os << "t-generator";
  if (std::holds_alternative<TorusGrid>(family.space)) os << " at phi=" << phi;
  loop.description = os.str();
  loop.a = family.t_begin();
  loop.b = family.t_end();
  loop.at = [phi](double s) { return ParameterPoint{s, phi}; };
  loop.clutched = true;
  return loop;
}

ParameterLoop phi_generator(const FunctionalFamily& family, double t) {
  const auto* torus = std::get_if<TorusGrid>(&family.space);
  if (!torus) throw Error(ErrorKind::RejectedInput, "phi_generator needs a torus parameter space");
  ParameterLoop loop;
  std::ostringstream os;
  os << "phi-generator at t=" << t;
  loop.description = os.str();
  loop.a = 0.0;
  loop.b = torus->phi_period;
  loop.at = [t](double s) { return ParameterPoint{t, s}; };
  loop.clutched = false;
  return loop;
}

TrivialBranchReport verify_trivial_branch(const FunctionalFamily& family, int n_samples,
                                          double branch_tol) {
  TrivialBranchReport report;
  report.branch_tol = branch_tol;
  n_samples = std::max(n_samples, 1);
  std::vector<double> phis{0.0};
  if (const auto* torus = std::get_if<TorusGrid>(&family.space)) {
    phis.clear();
    for (int i = 0; i < n_samples; ++i) phis.push_back(torus->phi_period * i / n_samples);
  }
  const double a = family.t_begin(), b = family.t_end();
  for (double phi : phis) {
    for (int k = 0; k < n_samples; ++k) {
      const ParameterPoint x{a + (b - a) * k / n_samples, phi};
      const double r = family.gradient(x, family.sigma(x)).norm();
      if (r >= report.max_residual) {
        report.max_residual = r;
        report.worst = x;
      }
    }
  }
  report.pass = report.max_residual <= branch_tol;
  return report;
}

HessianFamily hessian_family(const FunctionalFamily& family, const ParameterLoop& loop) {
  auto eval = [fam = family, at = loop.at](double s) -> ComplexMatrix {
    const ParameterPoint x = at(s);
    return fam.hessian_at(x, fam.sigma(x)).cast<cplx>();
  };
  OperatorPath path(loop.a, loop.b, eval, {}, ScalarField::Real);

  ComplexMatrix clutch = ComplexMatrix::Identity(path.dim(), path.dim());
  double window = std::numeric_limits<double>::infinity();
  if (loop.clutched && family.clutch) {
    clutch = family.clutch->unitary;
    window = family.clutch->window;
  }

  bool degenerate = true;
  for (int k = 0; k <= 16 && degenerate; ++k) {
    const ComplexMatrix h = path(loop.a + (loop.b - loop.a) * k / 16.0);
    const RealVector ev = eigenvalues_self_adjoint(h);
    if (ev.cwiseAbs().minCoeff() > default_kernel_tol(h)) degenerate = false;
  }
  return HessianFamily{path, ClutchedLoop{path, clutch, window}, degenerate};
}

LoopFlow sf_along_loop(const FunctionalFamily& family, const ParameterLoop& loop) {
  const HessianFamily hf = hessian_family(family, loop);
  LoopFlow out;
  Method method = Method::CrossingForm;
  try {
    out.result = spectral_flow_loop(hf.loop, Method::CrossingForm);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::IrregularCrossing) throw;
    method = Method::EigenvalueTracking;
    out.result = spectral_flow_loop(hf.loop, method);
  }
  out.sf = out.result.value;

  const ClutchedLoop complex_loop{hf.path.complexified(), hf.loop.clutch, hf.loop.window};
  SpectralFlowOptions realdim;
  realdim.convention = Convention::RealDim;
  SpectralFlowOptions complexdim;
  complexdim.convention = Convention::ComplexDim;
  out.sf_complex_realdim = spectral_flow_loop(complex_loop, method, realdim).value;
  out.sf_complex_complexdim = spectral_flow_loop(complex_loop, method, complexdim).value;
  return out;
}

namespace {

double min_abs_eigenvalue(const ComplexMatrix& h) {
  return eigenvalues_self_adjoint(h).cwiseAbs().minCoeff();
}

}  // namespace

Bracket locate_bifurcation(const FunctionalFamily& family, const ParameterLoop& loop,
                           const LocateOptions& options) {
  const LoopFlow flow = sf_along_loop(family, loop);
  if (flow.sf == 0) {
    throw Error(ErrorKind::Precondition,
                "spectral flow along " + loop.description + " vanishes; no bifurcation certificate");
  }
  const HessianFamily hf = hessian_family(family, loop);
  const double length = loop.b - loop.a;
  const double bound = estimate_lipschitz_bound(hf.path);
  const double scale = 1.0 + std::max(spectral_norm(hf.path(loop.a)), spectral_norm(hf.path(loop.b)));
  // Arc endpoints only need a well-defined inertia, so the zero threshold here
  // sits just above eigensolver accuracy rather than at the kernel threshold.
  const double tol = 1e-12 * scale;

  auto arc_sf = [&](double lo, double hi) {
    SpectralFlowOptions o;
    o.lipschitz_bound = bound;
    o.kernel_tol = tol;
    o.initial_points = 9;
    return spectral_flow_counting(hf.path.restricted(lo, hi), o).value;
  };

  Bracket br;
  br.lo = loop.a;
  br.hi = loop.b;
  br.loop_sf = flow.sf;
  br.bracket_sf = arc_sf(loop.a, loop.b);
  if (br.bracket_sf != flow.sf) {
    throw Error(ErrorKind::Inconsistency, "arc spectral flow of the full loop disagrees with the loop flow");
  }

  while (br.width() > options.locate_tol * length) {
    double mid = br.center();
    if (min_abs_eigenvalue(hf.path(mid)) <= tol) {
      const double nudge = std::min(options.endpoint_nudge * length, br.width() / 8.0);
      bool found = false;
      for (int k = 1; k <= options.max_nudges && !found; ++k) {
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        const double candidate = br.center() + sign * nudge * ((k + 1) / 2);
        if (candidate <= br.lo || candidate >= br.hi) continue;
        if (min_abs_eigenvalue(hf.path(candidate)) > tol) {
          mid = candidate;
          found = true;
        }
      }
      if (!found) {
        std::ostringstream os;
        os << "no invertible arc endpoint near s=" << br.center() << " after " << options.max_nudges
           << " nudges";
        throw Error(ErrorKind::Degenerate, os.str());
      }
    }
    const int left = arc_sf(br.lo, mid);
    if (left != 0) {
      br.hi = mid;
      br.bracket_sf = left;
      continue;
    }
    const int right = arc_sf(mid, br.hi);
    if (right == 0) {
      throw Error(ErrorKind::Inconsistency, "both arcs have zero spectral flow; additivity violated");
    }
    br.lo = mid;
    br.bracket_sf = right;
  }
  return br;
}

std::optional<BranchPoint> newton_nontrivial(const FunctionalFamily& family, ParameterPoint x,
                                             const RealVector& seed_direction,
                                             const ContinueOptions& options) {
  const RealVector sigma = family.sigma(x);
  RealVector u = sigma + options.seed_amplitude * seed_direction.normalized();
  BranchPoint point;
  point.x = x;

  // Deflation m(u) = 1/||u - sigma||^2 + 1 removes the trivial root so Newton
  // started next to the branch cannot fall back onto it.
  int it = 0;
  for (; it < options.max_iter; ++it) {
    const RealVector f = family.gradient(x, u);
    const RealMatrix j = family.hessian_at(x, u);
    const RealVector e = u - sigma;
    const double n2 = e.squaredNorm();
    if (!(n2 > 0.0) || !f.allFinite() || !j.allFinite()) return std::nullopt;
    if (f.norm() <= 1e-13 * (1.0 + j.norm())) break;
    const double m = 1.0 / n2 + 1.0;
    const RealVector grad_m = -2.0 * e / (n2 * n2);
    const RealMatrix jd = m * j + f * grad_m.transpose();
    const RealVector step = jd.partialPivLu().solve(-m * f);
    if (!step.allFinite()) return std::nullopt;
    u += step;
    if (step.norm() <= 1e-15 * (1.0 + u.norm())) {
      ++it;
      break;
    }
  }
  // A couple of undeflated steps to polish the residual.
  for (int k = 0; k < 3; ++k) {
    const RealVector f = family.gradient(x, u);
    if (f.norm() <= 1e-14) break;
    u -= family.hessian_at(x, u).partialPivLu().solve(f);
  }
  if (!u.allFinite()) return std::nullopt;

  point.u = u;
  point.iterations = it;
  point.residual = family.gradient(x, u).norm();
  point.amplitude = (u - sigma).norm();
  if (point.residual > options.residual_tol || point.amplitude < 10.0 * options.step_floor) {
    return std::nullopt;
  }
  return point;
}

BranchResult continue_branch(const FunctionalFamily& family, const ParameterLoop& loop,
                             const Bracket& bracket, const ContinueOptions& options, int side) {
  const double length = loop.b - loop.a;
  const double center = bracket.center();
  const ParameterPoint x0 = loop.at(center);
  const RealMatrix h0 = family.hessian_at(x0, family.sigma(x0));
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(h0);
  Eigen::Index k0 = 0;
  solver.eigenvalues().cwiseAbs().minCoeff(&k0);
  const RealVector v = solver.eigenvectors().col(k0);

  BranchResult out;
  if (side == 0) {
    auto rayleigh = [&](double s) {
      const ParameterPoint x = loop.at(s);
      return v.dot(family.hessian_at(x, family.sigma(x)) * v);
    };
    const double probe = 1e-3 * length;
    side = rayleigh(center + probe) < rayleigh(center - probe) ? 1 : -1;
  }
  out.side = side;

  const int n = std::max(options.n_steps, 2);
  const double log_hi = std::log(options.max_offset), log_lo = std::log(options.min_offset);
  for (int k = 0; k < n; ++k) {
    const double offset = length * std::exp(log_hi + (log_lo - log_hi) * k / (n - 1));
    const double s = center + side * offset;
    if (s < loop.a || s > loop.b) {
      out.failed_offsets.push_back(offset);
      continue;
    }
    auto point = newton_nontrivial(family, loop.at(s), v, options);
    if (!point) {
      out.failed_offsets.push_back(offset);
      continue;
    }
    point->s = s;
    point->offset = offset;
    out.points.push_back(std::move(*point));
  }

  if (out.points.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(out.points.size());
    for (const auto& p : out.points) {
      const double lx = std::log(p.offset), ly = std::log(p.amplitude);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    out.exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return out;
}

BifurcationCertificate certify_bifurcation(const FunctionalFamily& family, const ParameterLoop& loop,
                                           const LocateOptions& locate, const ContinueOptions& cont) {
  BifurcationCertificate cert;
  cert.loop = loop.description;
  cert.bracket = locate_bifurcation(family, loop, locate);
  cert.sf = cert.bracket.loop_sf;
  cert.branch = continue_branch(family, loop, cert.bracket, cont);
  cert.exponent = cert.branch.exponent;
  if (cert.branch.found()) {
    const auto closest = std::min_element(
        cert.branch.points.begin(), cert.branch.points.end(),
        [](const BranchPoint& p, const BranchPoint& q) { return p.offset < q.offset; });
    cert.witness = Witness{closest->x, closest->s, closest->amplitude, closest->residual};
  }
  return cert;
}

std::size_t BifSetScan::flagged_count() const {
  return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), 1));
}
std::size_t BifSetScan::certified_count() const {
  return static_cast<std::size_t>(std::count(certified.begin(), certified.end(), 1));
}
std::size_t BifSetScan::candidate_count() const {
  return static_cast<std::size_t>(std::count(candidate_only.begin(), candidate_only.end(), 1));
}

double box_counting_dimension(const std::vector<char>& mask, int n_t, int n_phi,
                              std::vector<std::pair<int, int>>* counts) {
  std::vector<std::pair<int, int>> local;
  for (int s = 1; s <= 16 && s <= std::min(n_t, n_phi); s *= 2) {
    const int bt = (n_t + s - 1) / s, bp = (n_phi + s - 1) / s;
    std::vector<char> occupied(static_cast<std::size_t>(bt * bp), 0);
    for (int j = 0; j < n_t; ++j) {
      for (int i = 0; i < n_phi; ++i) {
        if (mask[static_cast<std::size_t>(j * n_phi + i)]) occupied[static_cast<std::size_t>((j / s) * bp + i / s)] = 1;
      }
    }
    local.emplace_back(s, static_cast<int>(std::count(occupied.begin(), occupied.end(), 1)));
  }
  if (counts) *counts = local;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (auto [s, count] : local) {
    if (count == 0) continue;
    const double lx = std::log(1.0 / s), ly = std::log(static_cast<double>(count));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 2) return 0.0;
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

namespace {

/// Does the 8-connected flagged set contain a cycle wrapping either generator?
std::array<bool, 2> detect_wrapping(const std::vector<char>& mask, int n_t, int n_phi) {
  std::array<bool, 2> wraps{false, false};
  struct Lift {
    long jt, ip;
  };
  std::vector<char> seen(mask.size(), 0);
  std::vector<Lift> lift(mask.size());
  auto idx = [n_phi](int j, int i) { return static_cast<std::size_t>(j * n_phi + i); };
  auto mod = [](long a, long n) { return static_cast<int>(((a % n) + n) % n); };

  for (int j0 = 0; j0 < n_t; ++j0) {
    for (int i0 = 0; i0 < n_phi; ++i0) {
      if (!mask[idx(j0, i0)] || seen[idx(j0, i0)]) continue;
      std::deque<std::pair<int, int>> queue{{j0, i0}};
      seen[idx(j0, i0)] = 1;
      lift[idx(j0, i0)] = {j0, i0};
      while (!queue.empty()) {
        auto [j, i] = queue.front();
        queue.pop_front();
        const Lift here = lift[idx(j, i)];
        for (int dj = -1; dj <= 1; ++dj) {
          for (int di = -1; di <= 1; ++di) {
            if (dj == 0 && di == 0) continue;
            const Lift expect{here.jt + dj, here.ip + di};
            const int nj = mod(expect.jt, n_t), ni = mod(expect.ip, n_phi);
            if (!mask[idx(nj, ni)]) continue;
            if (!seen[idx(nj, ni)]) {
              seen[idx(nj, ni)] = 1;
              lift[idx(nj, ni)] = expect;
              queue.emplace_back(nj, ni);
            } else {
              const Lift& other = lift[idx(nj, ni)];
              if (other.jt != expect.jt) wraps[0] = true;
              if (other.ip != expect.ip) wraps[1] = true;
            }
          }
        }
      }
    }
  }
  return wraps;
}

bool complement_is_connected(const std::vector<char>& mask, int n_t, int n_phi) {
  auto idx = [n_phi](int j, int i) { return static_cast<std::size_t>(j * n_phi + i); };
  std::vector<char> seen(mask.size(), 0);
  int components = 0;
  for (int j0 = 0; j0 < n_t; ++j0) {
    for (int i0 = 0; i0 < n_phi; ++i0) {
      if (mask[idx(j0, i0)] || seen[idx(j0, i0)]) continue;
      ++components;
      std::deque<std::pair<int, int>> queue{{j0, i0}};
      seen[idx(j0, i0)] = 1;
      while (!queue.empty()) {
        auto [j, i] = queue.front();
        queue.pop_front();
        const int nbr[4][2] = {{(j + 1) % n_t, i}, {(j + n_t - 1) % n_t, i},
                               {j, (i + 1) % n_phi}, {j, (i + n_phi - 1) % n_phi}};
        for (const auto& nb : nbr) {
          const std::size_t k = idx(nb[0], nb[1]);
          if (mask[k] || seen[k]) continue;
          seen[k] = 1;
          queue.emplace_back(nb[0], nb[1]);
        }
      }
    }
  }
  return components <= 1;
}

}  // namespace

BifSetScan bif_set_scan(const FunctionalFamily& family, const ScanOptions& options) {
  const auto* torus = std::get_if<TorusGrid>(&family.space);
  if (!torus) throw Error(ErrorKind::RejectedInput, "bif_set_scan needs a torus parameter space");
  if (torus->n_t < 32 || torus->n_phi < 32) {
    throw Error(ErrorKind::RejectedInput, "bif_set_scan needs a grid of at least 32x32");
  }
  BifSetScan scan;
  const int nt = torus->n_t, np = torus->n_phi;
  scan.n_t = nt;
  scan.n_phi = np;

  // Corner (j, i): t_j = a + j (b - a) / n_t for j = 0..n_t, phi_i = i P / n_phi.
  const std::size_t corners = static_cast<std::size_t>((nt + 1) * np);
  scan.morse_index.assign(corners, 0);
  std::vector<char> degenerate(corners, 0);
  for (int j = 0; j <= nt; ++j) {
    const double t = torus->a + (torus->b - torus->a) * j / nt;
    for (int i = 0; i < np; ++i) {
      const ParameterPoint x{t, torus->phi_period * i / np};
      const RealMatrix h = family.hessian_at(x, family.sigma(x));
      Eigen::SelfAdjointEigenSolver<RealMatrix> solver(h, Eigen::EigenvaluesOnly);
      const RealVector& ev = solver.eigenvalues();
      const double tol =
          options.kernel_tol.value_or(1e-8 * (1.0 + std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)))));
      int neg = 0;
      bool zero = false;
      for (double v : ev) {
        if (v < -tol) ++neg;
        else if (v <= tol) zero = true;
      }
      const std::size_t c = static_cast<std::size_t>(j * np + i);
      scan.morse_index[c] = neg;
      degenerate[c] = zero ? 1 : 0;
    }
  }
  auto corner = [np](int j, int i) { return static_cast<std::size_t>(j * np + (i % np)); };
  auto edge_flow = [&](std::size_t c0, std::size_t c1) -> int {
    if (degenerate[c0] || degenerate[c1]) return 0;
    return scan.morse_index[c0] - scan.morse_index[c1];
  };

  const std::size_t cells = static_cast<std::size_t>(nt * np);
  scan.flagged.assign(cells, 0);
  scan.certified.assign(cells, 0);
  scan.candidate_only.assign(cells, 0);
  for (int j = 0; j < nt; ++j) {
    for (int i = 0; i < np; ++i) {
      const std::size_t c00 = corner(j, i), c10 = corner(j + 1, i), c01 = corner(j, i + 1),
                        c11 = corner(j + 1, i + 1);
      const bool jump = edge_flow(c00, c10) != 0 || edge_flow(c01, c11) != 0 ||
                        edge_flow(c00, c01) != 0 || edge_flow(c10, c11) != 0;
      const bool kernel = degenerate[c00] || degenerate[c10] || degenerate[c01] || degenerate[c11];
      const std::size_t cell = static_cast<std::size_t>(j * np + i);
      scan.certified[cell] = jump ? 1 : 0;
      scan.candidate_only[cell] = (!jump && kernel) ? 1 : 0;
      scan.flagged[cell] = (jump || kernel) ? 1 : 0;
    }
  }

  // Loop flows in the truncation: t-loops close through the clutch, so their
  // flow is the inertia drop between t = a and t = b; phi-loops are genuine loops.
  scan.t_loop_sf.resize(static_cast<std::size_t>(np));
  for (int i = 0; i < np; ++i) {
    int sf = 0;
    for (int j = 0; j < nt; ++j) sf += edge_flow(corner(j, i), corner(j + 1, i));
    if (!degenerate[corner(0, i)] && !degenerate[corner(nt, i)]) {
      sf = scan.morse_index[corner(0, i)] - scan.morse_index[corner(nt, i)];
    }
    scan.t_loop_sf[static_cast<std::size_t>(i)] = sf;
  }
  scan.phi_loop_sf.resize(static_cast<std::size_t>(nt + 1));
  for (int j = 0; j <= nt; ++j) {
    int sf = 0;
    for (int i = 0; i < np; ++i) sf += edge_flow(corner(j, i), corner(j, i + 1));
    scan.phi_loop_sf[static_cast<std::size_t>(j)] = sf;
  }

  const bool any_flow =
      std::any_of(scan.t_loop_sf.begin(), scan.t_loop_sf.end(), [](int v) { return v != 0; }) ||
      std::any_of(scan.phi_loop_sf.begin(), scan.phi_loop_sf.end(), [](int v) { return v != 0; });
  if (scan.flagged_count() == 0 && any_flow) {
    throw Error(ErrorKind::Inconsistency,
                "grid too coarse: a loop has nonzero spectral flow but no cell is flagged; refine the grid");
  }

  scan.box_dimension = box_counting_dimension(scan.flagged, nt, np, &scan.box_counts);
  scan.wraps_generator = detect_wrapping(scan.flagged, nt, np);
  scan.complement_connected = complement_is_connected(scan.flagged, nt, np);
  return scan;
}

}  // namespace specflow
