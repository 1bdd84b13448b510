#include "specflow/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace specflow {

namespace {

RealMatrix gaussian_symmetric(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RealMatrix m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) m(i, j) = normal(rng);
  }
  return 0.5 * (m + m.transpose());
}

RealMatrix random_orthogonal(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RealMatrix m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) m(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<RealMatrix> qr(m);
  return qr.householderQ() * RealMatrix::Identity(dim, dim);
}

RealVector twisted_spectrum(int n_half, double shift) {
  RealVector d(2 * n_half + 1);
  for (int n = -n_half; n <= n_half; ++n) d(n + n_half) = n + shift;
  return d;
}

/// Smooth plateau: 0 outside [lo0, hi0], 1 on [lo1, hi1], C^1 ramps between.
double plateau(double t, double lo0, double lo1, double hi1, double hi0) {
  auto ramp = [](double s) { return s <= 0 ? 0.0 : (s >= 1 ? 1.0 : s * s * (3.0 - 2.0 * s)); };
  if (t <= lo0 || t >= hi0) return 0.0;
  if (t < lo1) return ramp((t - lo0) / (lo1 - lo0));
  if (t > hi1) return ramp((hi0 - t) / (hi0 - hi1));
  return 1.0;
}

/// Quartic functional 1/2 <diag(lambda) u, u> + 1/4 ||u||^4.
FunctionalFamily quartic_diagonal_family(std::string name, ParameterSpace space, Eigen::Index dim,
                                         std::function<RealVector(ParameterPoint)> spectrum) {
  FunctionalFamily f;
  f.name = std::move(name);
  f.space = space;
  f.state_dim = dim;
  f.value = [spectrum](ParameterPoint x, const RealVector& u) {
    const RealVector lambda = spectrum(x);
    const double n2 = u.squaredNorm();
    return 0.5 * u.dot(lambda.cwiseProduct(u)) + 0.25 * n2 * n2;
  };
  f.gradient = [spectrum](ParameterPoint x, const RealVector& u) -> RealVector {
    return spectrum(x).cwiseProduct(u) + u.squaredNorm() * u;
  };
  f.hessian = [spectrum](ParameterPoint x, const RealVector& u) -> RealMatrix {
    RealMatrix h = RealMatrix(spectrum(x).asDiagonal());
    h.diagonal().array() += u.squaredNorm();
    h += 2.0 * u * u.transpose();
    return h;
  };
  return f;
}

double default_window(double given, int n_half) { return given > 0.0 ? given : 0.5 * n_half; }

}  // namespace

OperatorPath diag_linear(int up, int down, int fixed, double a, double b, double shift) {
  const int dim = up + down + fixed;
  if (up < 0 || down < 0 || fixed < 0 || dim == 0) {
    throw Error(ErrorKind::RejectedInput, "diag_linear needs nonnegative counts with positive total");
  }
  RealVector slope = RealVector::Zero(dim), offset = RealVector::Zero(dim);
  for (int i = 0; i < up; ++i) slope(i) = 1.0, offset(i) = -shift;
  for (int i = up; i < up + down; ++i) slope(i) = -1.0, offset(i) = shift;
  for (int i = up + down; i < dim; ++i) offset(i) = 1.0;
  auto eval = [slope, offset](double t) -> ComplexMatrix {
    return RealVector(slope * t + offset).cast<cplx>().asDiagonal();
  };
  auto deriv = [slope](double) -> ComplexMatrix { return slope.cast<cplx>().asDiagonal(); };
  return OperatorPath(a, b, eval, deriv, ScalarField::Real);
}

ComplexMatrix mode_shift(int n_half, int k) {
  const int m = 2 * n_half + 1;
  ComplexMatrix u = ComplexMatrix::Zero(m, m);
  for (int src = 0; src < m; ++src) {
    const int dst = (((src - k) % m) + m) % m;
    u(dst, src) = 1.0;
  }
  return u;
}

ClutchedLoop twisted_fourier(int n_half, int twist, double window, double a) {
  if (n_half < 1) throw Error(ErrorKind::RejectedInput, "twisted_fourier needs N >= 1");
  auto eval = [n_half, twist, a](double t) -> ComplexMatrix {
    return twisted_spectrum(n_half, 0.5 + twist * (t - a)).cast<cplx>().asDiagonal();
  };
  auto deriv = [n_half, twist](double) -> ComplexMatrix {
    return RealVector::Constant(2 * n_half + 1, twist).cast<cplx>().asDiagonal();
  };
  OperatorPath path(a, a + 1.0, eval, deriv, ScalarField::Real);
  return ClutchedLoop{path, mode_shift(n_half, twist), default_window(window, n_half)};
}

int PlantedPath::signature_sum() const {
  int s = 0;
  for (int v : signatures) s += v;
  return s;
}

PlantedPath planted_crossings(int dim, int crossings, std::uint64_t seed) {
  if (dim < 1 || crossings < 0 || crossings > dim) {
    throw Error(ErrorKind::RejectedInput, "planted_crossings needs 0 <= crossings <= dim");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> centers;
  while (static_cast<int>(centers.size()) < crossings) {
    const double c = -0.8 + 1.6 * unit(rng);
    const bool separated = std::all_of(centers.begin(), centers.end(),
                                       [c](double o) { return std::abs(o - c) > 0.02; });
    if (separated) centers.push_back(c);
  }
  RealVector slope = RealVector::Zero(dim), offset(dim);
  std::vector<int> signs;
  for (int i = 0; i < dim; ++i) {
    if (i < crossings) {
      const int s = unit(rng) < 0.5 ? -1 : 1;
      signs.push_back(s);
      slope(i) = s * (0.5 + 1.5 * unit(rng));
      offset(i) = -slope(i) * centers[static_cast<std::size_t>(i)];
    } else {
      offset(i) = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + 1.5 * unit(rng));
    }
  }
  const RealMatrix q0 = random_orthogonal(dim, rng);
  RealMatrix k = RealMatrix::Zero(dim, dim);
  {
    std::normal_distribution<double> normal(0.0, 0.4);
    for (int i = 0; i < dim; ++i) {
      for (int j = i + 1; j < dim; ++j) {
        k(i, j) = normal(rng);
        k(j, i) = -k(i, j);
      }
    }
  }

  auto frame = [q0, k](double t) -> RealMatrix { return q0 * RealMatrix(k * t).exp(); };
  auto eval = [frame, slope, offset](double t) -> ComplexMatrix {
    const RealMatrix q = frame(t);
    const RealVector d = slope * t + offset;
    return (q * d.asDiagonal() * q.transpose()).cast<cplx>();
  };
  auto deriv = [frame, slope, offset, k](double t) -> ComplexMatrix {
    const RealMatrix q = frame(t);
    const RealMatrix d = RealVector(slope * t + offset).asDiagonal();
    const RealMatrix inner = k * d - d * k + RealMatrix(slope.asDiagonal());
    return (q * inner * q.transpose()).cast<cplx>();
  };

  PlantedPath out{OperatorPath(-1.0, 1.0, eval, deriv, ScalarField::Real), {}, {}};
  std::vector<std::size_t> order(centers.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return centers[x] < centers[y]; });
  for (std::size_t i : order) {
    out.instants.push_back(centers[i]);
    out.signatures.push_back(signs[i]);
  }
  return out;
}

OperatorPath random_smooth(int dim, std::uint64_t seed) {
  if (dim < 1) throw Error(ErrorKind::RejectedInput, "random_smooth needs dim >= 1");
  std::mt19937_64 rng(seed);
  const RealMatrix a0 = gaussian_symmetric(dim, rng);
  const RealMatrix a1 = gaussian_symmetric(dim, rng);
  const RealMatrix a2 = gaussian_symmetric(dim, rng);
  auto eval = [a0, a1, a2](double t) -> ComplexMatrix { return (a0 + t * a1 + t * t * a2).cast<cplx>(); };
  auto deriv = [a1, a2](double t) -> ComplexMatrix { return (a1 + 2.0 * t * a2).cast<cplx>(); };
  return OperatorPath(-1.0, 1.0, eval, deriv, ScalarField::Real);
}

OperatorPath random_matrix_loop(int dim, std::uint64_t seed) {
  if (dim < 1) throw Error(ErrorKind::RejectedInput, "random_matrix_loop needs dim >= 1");
  std::mt19937_64 rng(seed);
  RealMatrix b0, b1, b2;
  for (;;) {
    b0 = gaussian_symmetric(dim, rng);
    b1 = gaussian_symmetric(dim, rng);
    b2 = gaussian_symmetric(dim, rng);
    Eigen::SelfAdjointEigenSolver<RealMatrix> s(b0 + b1, Eigen::EigenvaluesOnly);
    if (s.eigenvalues().cwiseAbs().minCoeff() > 0.05) break;
  }
  const double w = 2.0 * std::numbers::pi;
  auto eval = [b0, b1, b2, w](double t) -> ComplexMatrix {
    return (b0 + std::cos(w * t) * b1 + std::sin(w * t) * b2).cast<cplx>();
  };
  auto deriv = [b1, b2, w](double t) -> ComplexMatrix {
    return (w * (-std::sin(w * t) * b1 + std::cos(w * t) * b2)).cast<cplx>();
  };
  return OperatorPath(0.0, 1.0, eval, deriv, ScalarField::Real);
}

FunctionalFamily pitchfork_twisted(int n_half, int twist, double window, int modes) {
  if (n_half < 1 || modes < 1) throw Error(ErrorKind::RejectedInput, "pitchfork_twisted needs N >= 1, modes >= 1");
  const int block = 2 * n_half + 1;
  const double a = 0.5;
  auto spectrum = [n_half, twist, modes, block, a](ParameterPoint x) -> RealVector {
    const RealVector one = twisted_spectrum(n_half, 0.5 + twist * (x.t - a));
    RealVector all(block * modes);
    for (int m = 0; m < modes; ++m) all.segment(m * block, block) = one;
    return all;
  };
  FunctionalFamily f = quartic_diagonal_family("pitchfork-twisted", CircleSpace{a, a + 1.0},
                                               block * modes, spectrum);
  ComplexMatrix u = ComplexMatrix::Zero(block * modes, block * modes);
  for (int m = 0; m < modes; ++m) u.block(m * block, m * block, block, block) = mode_shift(n_half, twist);
  f.clutch = ClutchData{u, default_window(window, n_half)};
  return f;
}

FunctionalFamily pitchfork_perturbed_torus(int n_half, double eps, int grid, double window) {
  if (n_half < 1) throw Error(ErrorKind::RejectedInput, "pitchfork_perturbed_torus needs N >= 1");
  const double a = 0.5;
  // The perturbation is switched off near the clutched ends so every t-loop
  // still closes exactly through the shift.
  auto spectrum = [n_half, eps, a](ParameterPoint x) -> RealVector {
    RealVector d = twisted_spectrum(n_half, 0.5 + (x.t - a));
    d(n_half - 1) += eps * std::cos(x.phi) * plateau(x.t, 0.55, 0.65, 1.35, 1.45);
    return d;
  };
  TorusGrid torus;
  torus.n_t = grid;
  torus.n_phi = grid;
  torus.a = a;
  torus.b = a + 1.0;
  FunctionalFamily f =
      quartic_diagonal_family("pitchfork-perturbed-torus", torus, 2 * n_half + 1, spectrum);
  f.clutch = ClutchData{mode_shift(n_half, 1), default_window(window, n_half)};
  return f;
}

FunctionalFamily quadratic_invertible(int dim, std::uint64_t seed) {
  if (dim < 1) throw Error(ErrorKind::RejectedInput, "quadratic_invertible needs dim >= 1");
  std::mt19937_64 rng(seed);
  RealMatrix s1 = gaussian_symmetric(dim, rng);
  RealMatrix s2 = gaussian_symmetric(dim, rng);
  s1 /= std::max(1e-12, Eigen::SelfAdjointEigenSolver<RealMatrix>(s1).eigenvalues().cwiseAbs().maxCoeff());
  s2 /= std::max(1e-12, Eigen::SelfAdjointEigenSolver<RealMatrix>(s2).eigenvalues().cwiseAbs().maxCoeff());
  RealVector d(dim);
  for (int i = 0; i < dim; ++i) d(i) = 1.0 + i;
  const double w = 2.0 * std::numbers::pi;
  auto op = [=](ParameterPoint x) -> RealMatrix {
    return RealMatrix(d.asDiagonal()) + 0.2 * std::cos(w * x.t) * s1 + 0.2 * std::sin(w * x.t) * s2;
  };
  FunctionalFamily f;
  f.name = "quadratic-invertible";
  f.space = CircleSpace{0.0, 1.0};
  f.state_dim = dim;
  f.value = [op](ParameterPoint x, const RealVector& u) { return 0.5 * u.dot(op(x) * u); };
  f.gradient = [op](ParameterPoint x, const RealVector& u) -> RealVector { return op(x) * u; };
  f.hessian = [op](ParameterPoint x, const RealVector&) -> RealMatrix { return op(x); };
  return f;
}

double two_crossing_shift(double t) {
  return 0.5 + 2.0 * t + std::sin(2.0 * std::numbers::pi * t) / (4.0 * std::numbers::pi);
}

FunctionalFamily two_crossing(int n_half, double window) {
  if (n_half < 3) throw Error(ErrorKind::RejectedInput, "two_crossing needs N >= 3");
  auto spectrum = [n_half](ParameterPoint x) -> RealVector {
    return twisted_spectrum(n_half, two_crossing_shift(x.t));
  };
  FunctionalFamily f = quartic_diagonal_family("two-crossing", CircleSpace{0.0, 1.0}, 2 * n_half + 1, spectrum);
  f.clutch = ClutchData{mode_shift(n_half, 2), default_window(window, n_half)};
  return f;
}

FunctionalFamily quartic_only(int dim) {
  return quartic_diagonal_family("quartic-only", CircleSpace{0.0, 1.0}, dim,
                                 [dim](ParameterPoint) -> RealVector { return RealVector::Zero(dim); });
}

// ---- registry -------------------------------------------------------------

const std::vector<ScenarioInfo>& scenario_registry() {
  static const std::vector<ScenarioInfo> registry = [] {
    std::vector<ScenarioInfo> r{
        {"diag-linear",
         "diagonal path with `up` entries t-shift, `down` entries shift-t and `fixed` entries 1",
         {{"a", -1.0, false, "interval start"},
          {"b", 1.0, false, "interval end"},
          {"down", 0, true, "entries crossing downward"},
          {"fixed", 1, true, "constant entries equal to 1"},
          {"shift", 0.0, false, "crossing instant"},
          {"up", 1, true, "entries crossing upward"}},
         {"sf"},
         "sf"},
        {"planted-crossings",
         "Q(t) diag(s_i (t - c_i), ...) Q(t)^T on [-1, 1] with seeded instants and signs",
         {{"crossings", 3, true, "number of planted crossings (<= dim)"},
          {"dim", 8, true, "matrix dimension"}},
         {"sf", "verify"},
         "sf"},
        {"pitchfork-perturbed-torus",
         "pitchfork family on T^2 with lambda_{-1} shifted by eps cos(phi)",
         {{"N", 16, true, "Fourier modes n = -N..N"},
          {"eps", 0.3, false, "perturbation amplitude"},
          {"grid", 128, true, "grid cells per torus direction"},
          {"window", 0.0, false, "spectral window (0 = N/2)"}},
         {"bif-scan", "verify"},
         "bif-scan"},
        {"pitchfork-twisted",
         "f_t(u) = 1/2 sum (n + 1/2 + k(t - 1/2)) u_n^2 + 1/4 ||u||^4, shift-clutched circle",
         {{"N", 16, true, "Fourier modes n = -N..N"},
          {"modes", 1, true, "number of identical copies"},
          {"twist", 1, true, "twist k"},
          {"window", 0.0, false, "spectral window (0 = N/2)"}},
         {"sf", "sf-loop", "chern", "bif-locate", "verify"},
         "bif-locate"},
        {"quadratic-invertible",
         "f_x(u) = 1/2 <A(x) u, u> with A(x) positive definite on the whole circle",
         {{"dim", 6, true, "state dimension"}},
         {"sf", "sf-loop", "chern", "verify"},
         "sf-loop"},
        {"random-smooth",
         "A0 + t A1 + t^2 A2 on [-1, 1] with seeded Gaussian symmetric coefficients",
         {{"dim", 6, true, "matrix dimension"}},
         {"sf"},
         "sf"},
        {"twisted-fourier",
         "Fourier truncation diag(n + 1/2 + k(t - a)) on [a, a + 1] clutched by e_n -> e_{n-k}",
         {{"N", 16, true, "Fourier modes n = -N..N"},
          {"a", 0.5, false, "interval start"},
          {"twist", 1, true, "twist k"},
          {"window", 0.0, false, "spectral window (0 = N/2)"}},
         {"sf", "sf-loop", "chern", "verify"},
         "sf-loop"},
        {"two-crossing",
         "pitchfork with lambda_n = n + g(t), g increasing by 2, two upward crossings",
         {{"N", 16, true, "Fourier modes n = -N..N"},
          {"window", 0.0, false, "spectral window (0 = N/2)"}},
         {"sf", "sf-loop", "chern", "bif-locate", "verify"},
         "bif-locate"},
    };
    std::sort(r.begin(), r.end(), [](const ScenarioInfo& x, const ScenarioInfo& y) { return x.key < y.key; });
    return r;
  }();
  return registry;
}

const ScenarioInfo* find_scenario(const std::string& key) {
  for (const auto& info : scenario_registry()) {
    if (info.key == key) return &info;
  }
  return nullptr;
}

ParamMap resolve_params(const ScenarioInfo& info, const std::map<std::string, std::string>& given) {
  ParamMap out;
  for (const auto& p : info.params) out[p.name] = p.default_value;
  for (const auto& [name, text] : given) {
    const auto it = std::find_if(info.params.begin(), info.params.end(),
                                 [&](const ParamSpec& p) { return p.name == name; });
    if (it == info.params.end()) {
      throw Error(ErrorKind::Config, "unknown parameter '" + name + "' for scenario " + info.key);
    }
    double value = 0.0;
    std::size_t used = 0;
    try {
      value = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || text.empty() || !std::isfinite(value)) {
      throw Error(ErrorKind::Config, "parameter '" + name + "' is not a number: " + text);
    }
    if (it->integer && value != std::floor(value)) {
      throw Error(ErrorKind::Config, "parameter '" + name + "' must be an integer");
    }
    out[name] = value;
  }
  return out;
}

ScenarioInstance build_scenario(const std::string& key, const ParamMap& params, std::uint64_t seed) {
  const ScenarioInfo* info = find_scenario(key);
  if (!info) throw Error(ErrorKind::Config, "unknown scenario '" + key + "'");
  auto get = [&](const std::string& name) { return params.at(name); };
  auto geti = [&](const std::string& name) { return static_cast<int>(params.at(name)); };

  ScenarioInstance inst;
  inst.key = key;
  if (key == "diag-linear") {
    inst.path = diag_linear(geti("up"), geti("down"), geti("fixed"), get("a"), get("b"), get("shift"));
  } else if (key == "planted-crossings") {
    inst.path = planted_crossings(geti("dim"), geti("crossings"), seed).path;
  } else if (key == "random-smooth") {
    inst.path = random_smooth(geti("dim"), seed);
  } else if (key == "twisted-fourier") {
    inst.loop = twisted_fourier(geti("N"), geti("twist"), get("window"), get("a"));
    inst.path = inst.loop->path;
  } else {
    if (key == "pitchfork-twisted") {
      inst.family = pitchfork_twisted(geti("N"), geti("twist"), get("window"), geti("modes"));
    } else if (key == "pitchfork-perturbed-torus") {
      inst.family = pitchfork_perturbed_torus(geti("N"), get("eps"), geti("grid"), get("window"));
    } else if (key == "quadratic-invertible") {
      inst.family = quadratic_invertible(geti("dim"), seed);
    } else if (key == "two-crossing") {
      inst.family = two_crossing(geti("N"), get("window"));
    }
    const HessianFamily hf = hessian_family(*inst.family, t_generator(*inst.family));
    inst.loop = hf.loop;
    inst.path = hf.path;
  }
  return inst;
}

std::string list_scenarios() {
  std::ostringstream os;
  for (const auto& info : scenario_registry()) {
    os << info.key << "\n  " << info.description << "\n  commands:";
    for (const auto& c : info.commands) os << ' ' << c;
    os << " (default " << info.default_command << ")\n";
    for (const auto& p : info.params) {
      os << "  --param " << p.name << "=" << p.default_value << (p.integer ? "  [int]   " : "  [real]  ")
         << p.description << "\n";
    }
  }
  return os.str();
}

}  // namespace specflow
