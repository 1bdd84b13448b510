#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "specflow/bifurcation.hpp"
#include "specflow/ktheory.hpp"

namespace specflow {

using Json = nlohmann::ordered_json;

/// {value, convention, method, crossings: [{t, kernel_dim, signature, regular}]}
Json to_json(const SpectralFlowResult& result);

/// {chern, sf, agree, closure_defect, window}
Json chern_report(const ChernResult& chern, const SpectralFlowResult& sf, double window);

/// {scenario, loop, sf, bracket: [lo, hi], witness: {x, norm_u, residual}, exponent_fit}
Json bifurcation_report(const std::string& scenario, const BifurcationCertificate& cert);

Json scan_report(const std::string& scenario, const BifSetScan& scan);

Json error_report(ErrorKind kind, const std::string& detail);

/// Header `t,lambda_1,...,lambda_m`, one row per instant, LF line endings.
std::string eigenflow_csv(const OperatorPath& path, int samples = 201);

/// Writes via a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::filesystem::path& target, const std::string& content);

}  // namespace specflow
