#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fluxtherm/commands.hpp"
#include "fluxtherm/config.hpp"

namespace {

struct GlobalFlags {
  std::string config;
  std::string out;
  std::string format;
  std::vector<std::string> assignments;
};

void add_flags(CLI::App& app, GlobalFlags& flags) {
  app.add_option("--config", flags.config, "key = value configuration file");
  app.add_option("--out", flags.out, "output directory");
  app.add_option("--format", flags.format, "csv, json or both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
  app.add_option("--set", flags.assignments, "override as key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dissipative quantum dynamics and energy-scale-factor fluctuation relations"};
  app.require_subcommand(1);
  GlobalFlags flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"sg", "Stern-Gerlach-like protocol: conditional probabilities and memory loss"},
      {"nv-pulses", "NV centre under laser pulses: DBC fit and characteristic traces"},
      {"field-sweep", "eta* of the pumped NV centre along a magnetic-field grid"},
      {"solve-eta", "eta* for given energies and initial/asymptotic populations"},
      {"verify", "run the invariant suite; exit 1 on any failure"}};
  for (const auto& [name, help] : commands) add_flags(*app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fluxtherm::exit_code::config_error;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  fluxtherm::ScenarioConfig cfg;
  try {
    if (!flags.config.empty()) cfg = fluxtherm::load_config(flags.config);
    for (const auto& a : flags.assignments) {
      const auto eq = a.find('=');
      if (eq == std::string::npos)
        throw fluxtherm::ConfigError("--set expects key=value, got '" + a + "'");
      fluxtherm::apply_assignment(cfg, a.substr(0, eq), a.substr(eq + 1));
    }
    if (!flags.out.empty()) cfg.output_dir = flags.out;
    if (!flags.format.empty()) fluxtherm::set_formats(cfg, flags.format);
  } catch (const fluxtherm::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return fluxtherm::exit_code::config_error;
  }
  return fluxtherm::run_command(command, cfg, std::cout, std::cerr);
}
