#include "fluxtherm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fluxtherm {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ", ";
    out += item;
  }
  return out;
}

}  // namespace

double parse_real(const std::string& text, const std::string& key) {
  const std::string s = trim(text);
  double value = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (s.empty() || ec != std::errc() || ptr != end)
    throw ConfigError("key '" + key + "': '" + text + "' is not a number");
  if (!std::isfinite(value))
    throw ConfigError("key '" + key + "': value must be finite");
  return value;
}

void set_formats(ScenarioConfig& cfg, const std::string& format) {
  if (format == "csv") {
    cfg.write_csv = true;
    cfg.write_json = false;
  } else if (format == "json") {
    cfg.write_csv = false;
    cfg.write_json = true;
  } else if (format == "both") {
    cfg.write_csv = cfg.write_json = true;
  } else {
    throw ConfigError("format must be csv, json or both, got '" + format + "'");
  }
}

void apply_assignment(ScenarioConfig& cfg, const std::string& key,
                      const std::string& value) {
  if (key.empty()) throw ConfigError("empty key");
  if (key == "scenario") {
    cfg.scenario = value;
  } else if (key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "format") {
    set_formats(cfg, value);
  } else if (key.rfind("tol.", 0) == 0) {
    const double v = parse_real(value, key);
    if (!(v > 0.0)) throw ConfigError("key '" + key + "': tolerance must be > 0");
    cfg.tolerances[key.substr(4)] = v;
  } else {
    cfg.parameters[key] = value;
  }
}

ScenarioConfig parse_config(const std::string& text, const std::string& source) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (cfg.parameters.count(key))
      throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" +
                        key + "'");
    apply_assignment(cfg, key, trim(line.substr(eq + 1)));
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

void ScenarioConfig::check_keys(const std::vector<std::string>& valid_parameters,
                                const std::vector<std::string>& valid_tolerances) const {
  for (const auto& [key, value] : parameters) {
    (void)value;
    bool known = false;
    for (const auto& k : valid_parameters) known = known || k == key;
    if (!known)
      throw ConfigError("unknown key '" + key + "'; valid keys: scenario, output_dir, format, " +
                        join(valid_parameters));
  }
  for (const auto& [key, value] : tolerances) {
    (void)value;
    bool known = false;
    for (const auto& k : valid_tolerances) known = known || k == key;
    if (!known) {
      std::vector<std::string> names;
      for (const auto& k : valid_tolerances) names.push_back("tol." + k);
      throw ConfigError("unknown key 'tol." + key + "'; valid tolerance keys: " +
                        (names.empty() ? std::string("none") : join(names)));
    }
  }
}

std::optional<double> ScenarioConfig::find_real(const std::string& key) const {
  const auto it = parameters.find(key);
  if (it == parameters.end()) return std::nullopt;
  return parse_real(it->second, key);
}

double ScenarioConfig::real(const std::string& key, double fallback) const {
  return find_real(key).value_or(fallback);
}

double ScenarioConfig::require_real(const std::string& key) const {
  const auto v = find_real(key);
  if (!v) throw ConfigError("missing required key '" + key + "'");
  return *v;
}

int ScenarioConfig::integer(const std::string& key, int fallback) const {
  const auto v = find_real(key);
  if (!v) return fallback;
  if (*v != std::floor(*v) || std::abs(*v) > 1e9)
    throw ConfigError("key '" + key + "' must be an integer");
  return static_cast<int>(*v);
}

std::string ScenarioConfig::text(const std::string& key,
                                 const std::string& fallback) const {
  const auto it = parameters.find(key);
  return it == parameters.end() ? fallback : it->second;
}

std::string ScenarioConfig::require_text(const std::string& key) const {
  const auto it = parameters.find(key);
  if (it == parameters.end() || it->second.empty())
    throw ConfigError("missing required key '" + key + "'");
  return it->second;
}

std::vector<double> ScenarioConfig::real_list(const std::string& key) const {
  std::vector<double> out;
  const auto it = parameters.find(key);
  if (it == parameters.end()) return out;
  std::istringstream in(it->second);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_real(item, key));
  if (out.empty()) throw ConfigError("key '" + key + "' is an empty list");
  return out;
}

double ScenarioConfig::tolerance(const std::string& key, double fallback) const {
  const auto it = tolerances.find(key);
  return it == tolerances.end() ? fallback : it->second;
}

}  // namespace fluxtherm
