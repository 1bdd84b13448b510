#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "specflow/bifurcation.hpp"
#include "specflow/scenarios.hpp"

using namespace specflow;

namespace {

// f_x(u) = 1/2 sum d_n(x) (u_n - c_n(x))^2 + 1/4 ||u - c(x)||^4.
FunctionalFamily diagonal_quartic(ParameterSpace space, int dim, std::function<RealVector(ParameterPoint)> d,
                                  std::function<RealVector(ParameterPoint)> c = {}) {
  auto shift = [c, dim](ParameterPoint x) -> RealVector { return c ? c(x) : RealVector(RealVector::Zero(dim)); };
  FunctionalFamily f;
  f.name = "test-family";
  f.space = space;
  f.state_dim = dim;
  f.value = [d, shift](ParameterPoint x, const RealVector& u) {
    const RealVector w = u - shift(x);
    return 0.5 * w.dot(d(x).asDiagonal() * w) + 0.25 * w.squaredNorm() * w.squaredNorm();
  };
  f.gradient = [d, shift](ParameterPoint x, const RealVector& u) -> RealVector {
    const RealVector w = u - shift(x);
    return d(x).asDiagonal() * w + w.squaredNorm() * w;
  };
  return f;
}

// Root of t -> n + g(t) for the two-crossing family by plain bisection.
double two_crossing_root(double level) {
  double lo = 0, hi = 1;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (two_crossing_shift(mid) < level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("trivial branch of the pitchfork family") {
  const TrivialBranchReport r = verify_trivial_branch(pitchfork_twisted(16, 1, 8), 32);
  CHECK(r.pass);
  CHECK(r.max_residual == 0.0);
}

TEST_CASE("translated family passes only with its analytic branch") {
  auto d = [](ParameterPoint x) {
    RealVector v(3);
    v << x.t - 1, 2, 3;
    return v;
  };
  auto c = [](ParameterPoint x) {
    RealVector v(3);
    v << std::sin(x.t), 0.5, -std::cos(x.t);
    return v;
  };
  FunctionalFamily f = diagonal_quartic(CircleSpace{0, 2}, 3, d, c);
  CHECK_FALSE(verify_trivial_branch(f, 16).pass);
  f.trivial_branch = c;
  const TrivialBranchReport r = verify_trivial_branch(f, 16);
  CHECK(r.pass);
  CHECK(r.max_residual <= 1e-10);
}

TEST_CASE("random quadratic family has a trivial branch at zero") {
  CHECK(verify_trivial_branch(quadratic_invertible(6, 3), 20).pass);
}

TEST_CASE("hessian family of the pitchfork is diag(n + t)") {
  const FunctionalFamily f = pitchfork_twisted(16, 1, 8);
  const HessianFamily hf = hessian_family(f, t_generator(f));
  CHECK_FALSE(hf.degenerate);
  for (double t : {0.5, 0.8, 1.0, 1.37, 1.5}) {
    RealVector d(33);
    for (int n = -16; n <= 16; ++n) d(n + 16) = n + t;
    CHECK((hf.path(t) - ComplexMatrix(d.cast<cplx>().asDiagonal())).norm() < 1e-8);
  }
  // Same through the finite-difference fallback.
  FunctionalFamily fd = f;
  fd.hessian = nullptr;
  const HessianFamily hfd = hessian_family(fd, t_generator(fd));
  for (double t : {0.6, 1.2}) CHECK((hfd.path(t) - hf.path(t)).norm() < 1e-8);
  CHECK(hf.loop.window == 8);
}

TEST_CASE("hessian family of constant and quartic-only families") {
  auto d = [](ParameterPoint) {
    RealVector v(2);
    v << -1, 3;
    return v;
  };
  const FunctionalFamily c = diagonal_quartic(CircleSpace{0, 1}, 2, d);
  const HessianFamily hc = hessian_family(c, t_generator(c));
  CHECK((hc.path(0.1) - hc.path(0.9)).norm() < 1e-12);
  CHECK_FALSE(hc.degenerate);

  const FunctionalFamily q = quartic_only(4);
  const HessianFamily hq = hessian_family(q, t_generator(q));
  CHECK(hq.degenerate);
  CHECK(hq.path(0.3).norm() < 1e-8);
}

TEST_CASE("spectral flow along loops") {
  const FunctionalFamily p = pitchfork_twisted(16, 1, 8);
  const LoopFlow lf = sf_along_loop(p, t_generator(p));
  CHECK(lf.sf == 1);
  CHECK(lf.sf_complex_complexdim == 1);
  CHECK(lf.sf_complex_realdim == 2);
  CHECK(sf_along_loop(quadratic_invertible(5, 1), t_generator(quadratic_invertible(5, 1))).sf == 0);
  const FunctionalFamily two = pitchfork_twisted(16, 1, 8, 2);
  CHECK(sf_along_loop(two, t_generator(two)).sf == 2);
  const FunctionalFamily tc = two_crossing(16, 8);
  CHECK(sf_along_loop(tc, t_generator(tc)).sf == 2);
}

TEST_CASE("locate_bifurcation brackets the analytic parameter") {
  const FunctionalFamily p = pitchfork_twisted(16, 1, 8);
  const Bracket b = locate_bifurcation(p, t_generator(p));
  CHECK(b.lo <= 1.0);
  CHECK(b.hi >= 1.0);
  CHECK(b.width() <= 1e-8);
  CHECK(b.width() > 0);
  CHECK(b.loop_sf == 1);
  CHECK(b.bracket_sf != 0);

  const FunctionalFamily tc = two_crossing(16, 8);
  const Bracket bt = locate_bifurcation(tc, t_generator(tc));
  const double r1 = two_crossing_root(1.0), r2 = two_crossing_root(2.0);
  const bool contains_one = (bt.lo <= r1 && r1 <= bt.hi) || (bt.lo <= r2 && r2 <= bt.hi);
  CHECK(contains_one);
  CHECK(bt.width() <= 1e-8);
}

TEST_CASE("locate_bifurcation needs nonzero flow") {
  const FunctionalFamily q = quadratic_invertible(4, 2);
  try {
    locate_bifurcation(q, t_generator(q));
    FAIL("expected precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }
}

TEST_CASE("continue_branch follows sqrt(1 - t)") {
  const FunctionalFamily p = pitchfork_twisted(16, 1, 8);
  const ParameterLoop loop = t_generator(p);
  const Bracket b = locate_bifurcation(p, loop);
  const BranchResult br = continue_branch(p, loop, b);
  REQUIRE(br.found());
  CHECK(br.side == -1);
  REQUIRE(br.exponent.has_value());
  CHECK(std::abs(*br.exponent - 0.5) <= 0.05);
  for (const auto& pt : br.points) {
    CHECK(pt.residual <= 1e-10);
    CHECK(pt.x.t < 1.0);
    CHECK(pt.amplitude == doctest::Approx(std::sqrt(1.0 - pt.x.t)).epsilon(1e-6));
    // Independent residual: A(t) u + |u|^2 u.
    RealVector d(33);
    for (int n = -16; n <= 16; ++n) d(n + 16) = n + pt.x.t;
    CHECK((d.asDiagonal() * pt.u + pt.u.squaredNorm() * pt.u).norm() <= 1e-10);
  }
  const BranchResult other = continue_branch(p, loop, b, ContinueOptions{}, +1);
  CHECK_FALSE(other.found());
}

TEST_CASE("certificate bundles bracket, witness and exponent") {
  const FunctionalFamily p = pitchfork_twisted(16, 1, 8);
  const BifurcationCertificate c = certify_bifurcation(p, t_generator(p));
  CHECK(c.sf == 1);
  REQUIRE(c.witness.has_value());
  CHECK(c.witness->residual <= 1e-10);
  CHECK(c.witness->norm_u >= 10 * ContinueOptions{}.step_floor);
  CHECK(c.bracket.lo <= 1.0);
  CHECK(c.bracket.hi >= 1.0);
}

TEST_CASE("box counting on simple masks") {
  const int n = 64;
  std::vector<char> line(n * n, 0), full(n * n, 1);
  for (int i = 0; i < n; ++i) line[static_cast<std::size_t>(20 * n + i)] = 1;
  CHECK(box_counting_dimension(line, n, n) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(box_counting_dimension(full, n, n) == doctest::Approx(2.0).epsilon(0.02));
  std::vector<std::pair<int, int>> counts;
  box_counting_dimension(line, n, n, &counts);
  REQUIRE(counts.size() == 5);
  CHECK(counts[0] == std::make_pair(1, 64));
  CHECK(counts[4] == std::make_pair(16, 4));
}

TEST_CASE("torus scan follows the closed-form kernel curve") {
  const double eps = 0.3;
  const FunctionalFamily f = pitchfork_perturbed_torus(16, eps, 64, 8);
  const BifSetScan s = bif_set_scan(f);
  const auto& torus = std::get<TorusGrid>(f.space);
  const double dt = (torus.b - torus.a) / s.n_t, dphi = torus.phi_period / s.n_phi;
  CHECK(s.flagged_count() > 0);
  for (int j = 0; j < s.n_t; ++j) {
    for (int i = 0; i < s.n_phi; ++i) {
      if (!s.is_flagged(j, i)) continue;
      // Curve t = 1 - eps cos(phi) must pass within one cell of the flagged cell.
      const double t0 = torus.a + j * dt, t1 = t0 + dt;
      double lo = 1e9, hi = -1e9;
      for (int k = 0; k <= 8; ++k) {
        const double c = 1 - eps * std::cos((i + k / 8.0) * dphi);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
      CHECK(hi >= t0 - dt);
      CHECK(lo <= t1 + dt);
    }
  }
  for (int i = 0; i < s.n_phi; ++i) {
    bool hit = false;
    for (int j = 0; j < s.n_t; ++j) hit = hit || s.is_flagged(j, i);
    CHECK(hit);
    CHECK(s.t_loop_sf[static_cast<std::size_t>(i)] == 1);
  }
  CHECK(s.wraps_generator[1]);
  CHECK_FALSE(s.wraps_generator[0]);
  CHECK(s.box_dimension > 0.8);
  CHECK(s.box_dimension < 1.2);
}

TEST_CASE("unperturbed torus scan flags the circle t = 1") {
  const FunctionalFamily f = pitchfork_perturbed_torus(8, 0.0, 32, 4);
  const BifSetScan s = bif_set_scan(f);
  const auto& torus = std::get<TorusGrid>(f.space);
  const int j_star = static_cast<int>(std::lround((1.0 - torus.a) * s.n_t / (torus.b - torus.a)));
  for (int j = 0; j < s.n_t; ++j)
    for (int i = 0; i < s.n_phi; ++i)
      if (s.is_flagged(j, i)) CHECK((j == j_star || j == j_star - 1));
  for (int i = 0; i < s.n_phi; ++i) CHECK((s.is_flagged(j_star, i) || s.is_flagged(j_star - 1, i)));
  CHECK(s.wraps_generator[1]);
}

TEST_CASE("invertible torus family gives an empty scan") {
  auto d = [](ParameterPoint x) {
    RealVector v(3);
    v << -1 + 0.2 * std::cos(x.phi), 1, 2 + 0.3 * std::sin(2 * M_PI * x.t);
    return v;
  };
  TorusGrid g;
  g.n_t = 32;
  g.n_phi = 32;
  const FunctionalFamily f = diagonal_quartic(g, 3, d);
  const BifSetScan s = bif_set_scan(f);
  CHECK(s.flagged_count() == 0);
  CHECK(s.complement_connected);
  for (int v : s.t_loop_sf) CHECK(v == 0);
}

TEST_CASE("torus scan rejects coarse grids and circle families") {
  try {
    bif_set_scan(pitchfork_perturbed_torus(8, 0.3, 16, 4));
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RejectedInput);
  }
  CHECK_THROWS_AS(bif_set_scan(pitchfork_twisted(8, 1, 4)), Error);
}

TEST_CASE("property: every t-loop with flow meets the flagged set") {
  for (double eps : {0.1, 0.25, 0.4}) {
    const BifSetScan s = bif_set_scan(pitchfork_perturbed_torus(8, eps, 32, 4));
    for (int i = 0; i < s.n_phi; ++i) {
      if (s.t_loop_sf[static_cast<std::size_t>(i)] == 0) continue;
      bool hit = false;
      for (int j = 0; j < s.n_t; ++j) hit = hit || s.is_flagged(j, i);
      CHECK(hit);
    }
    // Morse index oracle for each corner.
    const FunctionalFamily f = pitchfork_perturbed_torus(8, eps, 32, 4);
    const auto& g = std::get<TorusGrid>(f.space);
    for (int j = 0; j < s.n_t; j += 7) {
      const ParameterPoint x{g.a + (g.b - g.a) * j / s.n_t, 0.0};
      const RealMatrix h = f.hessian_at(x, f.sigma(x));
      CHECK(s.morse_index[static_cast<std::size_t>(j * s.n_phi)] == oracle::negative_count(h.cast<cplx>(), 1e-12));
    }
  }
}
