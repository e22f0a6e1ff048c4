#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fluxtherm {

/// Bad or incomplete configuration. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` configuration. Keys prefixed with `tol.` are
/// tolerances; `scenario`, `output_dir` and `format` are reserved.
struct ScenarioConfig {
  std::string scenario;
  std::map<std::string, std::string> parameters;
  std::map<std::string, double> tolerances;
  std::filesystem::path output_dir = ".";
  bool write_csv = true;
  bool write_json = true;

  /// Throws ConfigError naming the first unknown key and listing the valid
  /// ones.
  void check_keys(const std::vector<std::string>& valid_parameters,
                  const std::vector<std::string>& valid_tolerances) const;

  bool has(const std::string& key) const { return parameters.count(key) > 0; }

  double real(const std::string& key, double fallback) const;
  double require_real(const std::string& key) const;
  std::optional<double> find_real(const std::string& key) const;
  int integer(const std::string& key, int fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::string require_text(const std::string& key) const;
  /// Comma-separated reals.
  std::vector<double> real_list(const std::string& key) const;
  double tolerance(const std::string& key, double fallback) const;
};

/// Parses configuration text; `source` names it in error messages.
ScenarioConfig parse_config(const std::string& text, const std::string& source);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Applies one `key=value` assignment, reserved keys included.
void apply_assignment(ScenarioConfig& cfg, const std::string& key,
                      const std::string& value);

void set_formats(ScenarioConfig& cfg, const std::string& format);

double parse_real(const std::string& text, const std::string& key);

}  // namespace fluxtherm
