#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "fluxtherm/channels.hpp"
#include "fluxtherm/eta_solver.hpp"
#include "fluxtherm/hypothesis_checks.hpp"
#include "fluxtherm/quantum_core.hpp"

namespace fluxtherm {

using Json = nlohmann::json;

/// Shortest text that round-trips, capped at 17 significant digits.
std::string format_real(double x);

/// Complex matrix as rows of [re, im] pairs.
Json matrix_to_json(const ComplexMatrix& m);
Json matrix_to_json(const RealMatrix& m);

Json to_json(const ProbabilityVector& p);
Json to_json(const HypothesisVerdict& v);
Json to_json(const EtaSolution& s);
Json to_json(const DbcFit& fit);
Json to_json(const CubicCertificate& c);
Json to_json(const AsymptoticReport& r);

/// Real that may be NaN or infinite; those map to null.
Json real_or_null(double x);

/// Wide table: step, then one column per (i, f) pair.
std::string conditional_table_csv(const TPMRecord& record);

void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace fluxtherm
