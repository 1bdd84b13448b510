#include "specflow/report.hpp"

#include <cstdio>
#include <fstream>

namespace specflow {

Json to_json(const SpectralFlowResult& result) {
  Json crossings = Json::array();
  for (const auto& c : result.crossings) {
    crossings.push_back(Json{{"t", c.t},
                             {"kernel_dim", c.kernel_dim()},
                             {"signature", c.signature},
                             {"regular", c.regular}});
  }
  return Json{{"value", result.value},
              {"convention", std::string(to_string(result.convention))},
              {"method", std::string(to_string(result.method))},
              {"crossings", crossings}};
}

Json chern_report(const ChernResult& chern, const SpectralFlowResult& sf, double window) {
  return Json{{"chern", chern.value},
              {"sf", sf.value},
              {"agree", chern.value == sf.value},
              {"closure_defect", chern.winding.closure_defect},
              {"window", window}};
}

Json bifurcation_report(const std::string& scenario, const BifurcationCertificate& cert) {
  Json witness = nullptr;
  if (cert.witness) {
    witness = Json{{"x", cert.witness->s},
                   {"norm_u", cert.witness->norm_u},
                   {"residual", cert.witness->residual}};
  }
  Json exponent = nullptr;
  if (cert.exponent) exponent = *cert.exponent;
  return Json{{"scenario", scenario},
              {"loop", cert.loop},
              {"sf", cert.sf},
              {"bracket", Json::array({cert.bracket.lo, cert.bracket.hi})},
              {"witness", witness},
              {"exponent_fit", exponent}};
}

Json scan_report(const std::string& scenario, const BifSetScan& scan) {
  Json counts = Json::array();
  for (auto [s, n] : scan.box_counts) counts.push_back(Json::array({s, n}));
  int nonzero_rows = 0;
  for (int v : scan.t_loop_sf) nonzero_rows += v != 0;
  return Json{{"scenario", scenario},
              {"grid", Json::array({scan.n_t, scan.n_phi})},
              {"flagged_cells", scan.flagged_count()},
              {"certified_cells", scan.certified_count()},
              {"candidate_only_cells", scan.candidate_count()},
              {"box_dimension", scan.box_dimension},
              {"box_counts", counts},
              {"wraps_generator", Json::array({scan.wraps_generator[0], scan.wraps_generator[1]})},
              {"complement_connected", scan.complement_connected},
              {"t_loops_with_flow", nonzero_rows}};
}

Json error_report(ErrorKind kind, const std::string& detail) {
  return Json{{"error", Json{{"kind", std::string(to_string(kind))}, {"detail", detail}}}};
}

std::string eigenflow_csv(const OperatorPath& path, int samples) {
  samples = std::max(samples, 2);
  std::string out = "t";
  for (Eigen::Index k = 1; k <= path.dim(); ++k) out += ",lambda_" + std::to_string(k);
  out += '\n';
  char buf[40];
  for (int i = 0; i < samples; ++i) {
    const double t = (i == samples - 1) ? path.b() : path.a() + path.length() * i / (samples - 1);
    const RealVector ev = eigenvalues_self_adjoint(path(t));
    std::snprintf(buf, sizeof buf, "%.17g", t);
    out += buf;
    for (double v : ev) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& target, const std::string& content) {
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorKind::Config, "cannot write " + tmp.string());
    os << content;
    if (!os) throw Error(ErrorKind::Config, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace specflow
