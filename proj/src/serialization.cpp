#include "fluxtherm/serialization.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fluxtherm {

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  for (int digits = 15; digits <= 17; ++digits) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(digits) << x;
    if (digits == 17 || std::stod(os.str()) == x) return os.str();
  }
  return {};
}

Json real_or_null(double x) {
  return std::isfinite(x) ? Json(x) : Json(nullptr);
}

Json matrix_to_json(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

Json matrix_to_json(const RealMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(real_or_null(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const ProbabilityVector& p) { return Json(p.values()); }

Json to_json(const HypothesisVerdict& v) {
  Json j;
  j["name"] = v.name;
  j["passes"] = v.passes;
  j["max_deviation"] = v.max_deviation;
  j["tolerance"] = v.tolerance;
  j["onset_step"] = v.onset_step ? Json(*v.onset_step) : Json(nullptr);
  j["flags"] = v.flags;
  return j;
}

Json to_json(const EtaSolution& s) {
  Json j;
  j["kind"] = to_string(s.kind);
  j["eta_star"] = s.eta_star ? Json(*s.eta_star) : Json(nullptr);
  j["residual"] = s.residual;
  j["bracket"] = {s.bracket_lo, s.bracket_hi};
  j["slope_at_zero"] = s.slope_at_zero;
  j["iterations"] = s.iterations;
  j["eta_max"] = s.eta_max;
  j["g_at_minus_eta_max"] = real_or_null(s.g_at_minus_eta_max);
  j["g_at_plus_eta_max"] = real_or_null(s.g_at_plus_eta_max);
  return j;
}

Json to_json(const DbcFit& fit) {
  Json j;
  j["p_inf"] = to_json(fit.p_inf);
  j["tau_d"] = fit.tau_d;
  j["rms_residual"] = fit.rms_residual;
  return j;
}

Json to_json(const CubicCertificate& c) {
  Json j;
  j["coefficients"] = c.coefficients;
  Json roots = Json::array();
  for (const auto& r : c.roots) roots.push_back({r.real(), r.imag()});
  j["roots"] = roots;
  j["routh_permanences"] = c.routh_permanences;
  j["routh_variations"] = c.routh_variations;
  j["routh_epsilon_substituted"] = c.routh_epsilon;
  j["selected_root"] = {c.selected_root.real(), c.selected_root.imag()};
  j["eta_star"] = c.eta_star;
  return j;
}

Json to_json(const AsymptoticReport& r) {
  Json j;
  j["diagonal"] = to_json(r.diagonal);
  j["offdiag_residual"] = r.offdiag_residual;
  j["seed_spread"] = r.seed_spread;
  j["iterations"] = r.iterations;
  return j;
}

std::string conditional_table_csv(const TPMRecord& record) {
  const std::size_t n = record.num_levels();
  std::ostringstream os;
  os << "step";
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < n; ++f) os << ",P_f" << f << "_given_i" << i;
  os << '\n';
  for (std::size_t t = 0; t < record.num_times(); ++t) {
    os << record.steps[t];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t f = 0; f < n; ++f) os << ',' << format_real(record.cond[t](f, i));
    os << '\n';
  }
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace fluxtherm
