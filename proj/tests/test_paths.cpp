#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "specflow/paths.hpp"
#include "specflow/scenarios.hpp"

using namespace specflow;

namespace {

ComplexMatrix diag2(double x, double y) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = x;
  m(1, 1) = y;
  return m;
}

ComplexMatrix rotation(double angle) {
  ComplexMatrix r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

OperatorPath diag_t_one() {
  return OperatorPath(-1, 1, [](double t) { return diag2(t, 1); });
}

}  // namespace

TEST_CASE("constant path needs no refinement") {
  OperatorPath p(0, 1, [](double) { return diag2(1, 2); });
  const PathSampling s = sample_path(p, 2, 1.0);
  CHECK(s.grid.size() == 2);
  CHECK(s.spectra.size() == 2);
}

TEST_CASE("sampling of diag(t) resolves the zero") {
  OperatorPath p(-1, 1, [](double t) { return ComplexMatrix::Constant(1, 1, t); });
  const PathSampling s = sample_path(p, 8, 1.0);
  // Every interval either keeps |l(t0)| + |l(t1)| > h, or is at kernel resolution.
  bool saw_zero_region = false;
  for (std::size_t i = 0; i + 1 < s.grid.size(); ++i) {
    const double h = s.grid[i + 1] - s.grid[i];
    CHECK(h > 0);
    const double l0 = s.grid[i], l1 = s.grid[i + 1];
    if (std::abs(l0) + std::abs(l1) <= h) {
      saw_zero_region = true;
      CHECK(h <= 2 * std::max(s.kernel_tol, 1e-13 * 2));
    }
  }
  CHECK(saw_zero_region);
  CHECK(sample_path(p, 8, 1.0).grid == s.grid);
}

TEST_CASE("steep planted crossing triggers local refinement") {
  // Slope 50 crossing at t = 0.3137.
  OperatorPath p(0, 1, [](double t) { return diag2(50 * (t - 0.3137), 1); });
  const double m = estimate_lipschitz_bound(p);
  CHECK(m >= 50);
  const PathSampling s = sample_path(p, 5, m);
  for (std::size_t i = 0; i + 1 < s.grid.size(); ++i) {
    const double h = s.grid[i + 1] - s.grid[i];
    for (Eigen::Index k = 0; k < 2; ++k) {
      const double sum = std::abs(s.spectra[i].values(k)) + std::abs(s.spectra[i + 1].values(k));
      if (sum <= m * h) CHECK(m * h <= std::max(s.kernel_tol, 1e-13 * m) * 1.0001);
    }
  }
  CHECK(s.grid.size() > 5);
}

TEST_CASE("sampler reports resolution exhaustion with the subinterval") {
  OperatorPath p(-1, 1, [](double t) { return ComplexMatrix::Constant(1, 1, t); });
  SamplingOptions o;
  o.max_points = 10;
  o.kernel_tol = 1e-14;
  try {
    sample_path(p, 4, 1.0, o);
    FAIL("expected a resolution error");
  } catch (const ResolutionError& e) {
    CHECK(e.kind() == ErrorKind::ResolutionExhausted);
    CHECK(e.lo() <= e.hi());
    CHECK(e.lo() >= -1);
    CHECK(e.hi() <= 1);
  }
}

TEST_CASE("path_derivative closed forms") {
  const ComplexMatrix d = path_derivative(diag_t_one(), 0.5);
  CHECK((d - diag2(1, 0)).norm() < 1e-9);

  OperatorPath sq(0, 1, [](double t) { return ComplexMatrix::Constant(1, 1, t * t); });
  CHECK(std::abs(path_derivative(sq, 1.0)(0, 0) - 2.0) < 1e-8);
  CHECK(std::abs(path_derivative(sq, 0.0)(0, 0)) < 1e-8);
  CHECK(std::abs(path_derivative(sq, 0.3)(0, 0) - 0.6) < 1e-8);

  OperatorPath c(0, 1, [](double) { return diag2(3, 4); });
  CHECK(path_derivative(c, 0.4).norm() < 1e-9);
}

TEST_CASE("exact and finite-difference derivatives agree on planted paths") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const PlantedPath pp = planted_crossings(6, 3, seed);
    REQUIRE(pp.path.has_derivative());
    OperatorPath fd(pp.path.a(), pp.path.b(), pp.path.evaluator());
    for (double t : {-0.9, -0.2, 0.0, 0.55, 1.0}) {
      const ComplexMatrix e = path_derivative(pp.path, t);
      const ComplexMatrix f = path_derivative(fd, t);
      CHECK((e - f).norm() <= 1e-6 * (1 + e.norm()));
    }
  }
}

TEST_CASE("evaluator failures and dimension changes surface as evaluation errors") {
  OperatorPath bad(0, 1, [](double t) -> ComplexMatrix {
    if (t > 0.5) throw std::runtime_error("boom");
    return diag2(1, 1);
  });
  try {
    bad(0.7);
    FAIL("expected evaluation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Evaluation);
  }
  OperatorPath grow(0, 1, [](double t) { return ComplexMatrix::Identity(t < 0.5 ? 2 : 3, t < 0.5 ? 2 : 3); });
  CHECK_THROWS_AS(grow(0.9), Error);
}

TEST_CASE("cogredience with identity and constant rotation") {
  const OperatorPath p = diag_t_one();
  const OperatorPath same = cogredience_transform(p, Frame{[](double) { return ComplexMatrix::Identity(2, 2); }, {}});
  for (double t : {-1.0, 0.0, 0.3}) CHECK((same(t) - p(t)).norm() < 1e-15);

  const OperatorPath rot = cogredience_transform(p, Frame{[](double) { return rotation(0.7); }, {}});
  for (double t : {-0.5, 0.25, 0.9}) {
    const RealVector l = eigenvalues_self_adjoint(rot(t));
    RealVector expected(2);
    expected << std::min(t, 1.0), std::max(t, 1.0);
    CHECK((l - expected).norm() < 1e-12);
  }
}

TEST_CASE("cogredience rejects a non-unitary frame") {
  const OperatorPath p = diag_t_one();
  try {
    cogredience_transform(p, Frame{[](double) { return ComplexMatrix(2.0 * ComplexMatrix::Identity(2, 2)); }, {}});
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RejectedInput);
  }
}

TEST_CASE("two cogredience transforms compose to the product frame") {
  std::mt19937_64 rng(17);
  const ComplexMatrix k1 = oracle::random_hermitian(3, rng), k2 = oracle::random_hermitian(3, rng);
  auto expi = [](const ComplexMatrix& h, double t) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    const ComplexVector ph = (es.eigenvalues().cast<cplx>() * cplx(0, t)).array().exp();
    return ComplexMatrix(es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint());
  };
  const OperatorPath p = planted_crossings(3, 2, 9).path;
  const Frame f{[&](double t) { return expi(k1, t); }, {}};
  const Frame g{[&](double t) { return expi(k2, t); }, {}};
  const Frame fg{[&](double t) { return ComplexMatrix(expi(k1, t) * expi(k2, t)); }, {}};
  const OperatorPath twice = cogredience_transform(cogredience_transform(p, f), g);
  const OperatorPath once = cogredience_transform(p, fg);
  for (double t : {-1.0, -0.3, 0.2, 0.8}) CHECK((twice(t) - once(t)).norm() < 1e-10);
}

TEST_CASE("validate_clutch on constant and twisted loops") {
  OperatorPath c(0, 1, [](double) { return diag2(-1, 2); });
  const ClutchReport r0 = validate_clutch(ClutchedLoop{c, ComplexMatrix::Identity(2, 2), 5.0});
  CHECK(r0.pass);
  CHECK(r0.max_defect == 0.0);
  CHECK(r0.pairs.size() == 2);

  const ClutchedLoop tw = twisted_fourier(16, 1, 8);
  const ClutchReport r1 = validate_clutch(tw);
  CHECK(r1.pass);
  CHECK(r1.max_defect < 1e-12);
  CHECK(r1.pairs.size() == 16);  // n + 1/2 in [-8, 8] for n = -8..7
  // Independent check: A(b) U e_n = (n + 1/2) U e_n on the window.
  const ComplexMatrix ab = tw.path(tw.path.b());
  for (int n = -8; n <= 7; ++n) {
    const ComplexVector v = tw.clutch.col(n + 16);
    CHECK((ab * v - (n + 0.5) * v).norm() < 1e-12);
  }

  ClutchedLoop ident{tw.path, ComplexMatrix::Identity(33, 33), 8};
  const ClutchReport r2 = validate_clutch(ident);
  CHECK_FALSE(r2.pass);
  for (const auto& pair : r2.pairs) CHECK(pair.defect == doctest::Approx(1.0));
  CHECK_THROWS_AS(require_valid_clutch(ident), Error);
}

TEST_CASE("restricted and reversed paths") {
  const OperatorPath p = diag_t_one();
  const OperatorPath r = p.reversed();
  CHECK((r(-0.25) - p(0.25)).norm() < 1e-15);
  const OperatorPath s = p.restricted(0.2, 0.4);
  CHECK(s.a() == 0.2);
  CHECK(s.b() == 0.4);
  CHECK(p.complexified().field() == ScalarField::Complex);
}
