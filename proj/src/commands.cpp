#include "fluxtherm/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <numbers>
#include <sstream>

#include "fluxtherm/eta_solver.hpp"
#include "fluxtherm/hypothesis_checks.hpp"
#include "fluxtherm/protocols.hpp"
#include "fluxtherm/verify_suite.hpp"

namespace fluxtherm {

namespace {

std::string tpm_csv(const TPMRecord& record) {
  std::ostringstream os;
  write_tpm_csv(os, record);
  return os.str();
}

void emit_csv(CommandOutcome& out, const ScenarioConfig& cfg, const std::string& name,
              const std::string& text) {
  if (!cfg.write_csv) return;
  const auto path = cfg.output_dir / name;
  write_text_file(path, text);
  out.files.push_back(path);
}

void emit_json(CommandOutcome& out, const ScenarioConfig& cfg, const std::string& name) {
  if (!cfg.write_json) return;
  const auto path = cfg.output_dir / name;
  write_json_file(path, out.summary);
  out.files.push_back(path);
}

Json asymptote_json(const ProtocolSpec& spec, const AsymptoticOptions& opts,
                    std::optional<AsymptoticReport>& report) {
  try {
    report = protocol_asymptote(spec, opts);
    Json j = to_json(*report);
    j["seed_dependent"] = false;
    return j;
  } catch (const SeedDependenceError& e) {
    Json j;
    j["seed_dependent"] = true;
    j["seed_spread"] = e.spread();
    j["message"] = e.what();
    return j;
  }
}

double max_deviation_from_uniform(const RealMatrix& m) {
  return (m.array() - 1.0 / static_cast<double>(m.rows())).abs().maxCoeff();
}

Json params_json(const ProtocolSpec& spec) {
  Json j = Json::object();
  for (const auto& [k, v] : spec.params) j[k] = v;
  return j;
}

}  // namespace

CommandOutcome cmd_sg(const ScenarioConfig& cfg) {
  cfg.check_keys({"variant", "p_m", "unitary_angle", "pump_q", "n_steps", "generator"},
                 {"hypothesis", "asymptote"});
  const SgVariant variant = [&] {
    try {
      return parse_sg_variant(cfg.require_text("variant"));
    } catch (const ValidationError& e) {
      throw ConfigError(e.what());
    }
  }();
  SternGerlachOptions opts;
  opts.p_m = cfg.real("p_m", opts.p_m);
  opts.unitary_angle = cfg.real("unitary_angle", std::numbers::pi / 5);
  opts.pump_q = cfg.real("pump_q", opts.pump_q);
  opts.n_steps = cfg.integer("n_steps", opts.n_steps);
  const std::string gen = cfg.text("generator", "x");
  const auto s = spin1_operators();
  if (gen == "x") opts.generator = s.sx;
  else if (gen == "y") opts.generator = s.sy;
  else if (gen == "z") opts.generator = s.sz;
  else throw ConfigError("key 'generator' must be x, y or z");

  const ProtocolSpec spec = build_stern_gerlach(variant, opts);
  const TPMRecord record = run_protocol(spec);
  const double tol = cfg.tolerance("hypothesis", 1e-2);
  AsymptoticOptions aopts;
  aopts.tol = cfg.tolerance("asymptote", aopts.tol);

  CommandOutcome out;
  Json& j = out.summary;
  j["scenario"] = "sg";
  j["variant"] = to_string(variant);
  j["generator"] = gen;
  j["params"] = params_json(spec);
  j["n_steps"] = spec.n_steps;
  j["energies"] = record.energies;
  j["flags"] = spec.flags;
  j["completeness_error"] = spec.step_channel.completeness_error();
  std::optional<AsymptoticReport> report;
  j["asymptote"] = asymptote_json(spec, aopts, report);
  const auto i_verdict = check_hypothesis_I(record, tol);
  j["hypothesis_I"] = to_json(i_verdict);
  j["hypothesis_I_star"] = to_json(check_hypothesis_I_star(record, tol));
  j["hypothesis_I_star_same_window"] =
      to_json(check_hypothesis_I_star(record, tol, {i_verdict.onset_step}));
  j["final_max_deviation_from_uniform"] = max_deviation_from_uniform(record.cond.back());
  j["final_conditional"] = matrix_to_json(record.cond.back());

  const std::string stem = "sg_" + to_string(variant);
  emit_csv(out, cfg, stem + "_conditional.csv", conditional_table_csv(record));
  emit_csv(out, cfg, stem + "_record.csv", tpm_csv(record));
  emit_json(out, cfg, stem + "_summary.json");
  return out;
}

CommandOutcome cmd_nv_pulses(const ScenarioConfig& cfg) {
  cfg.check_keys({"h_choice", "omega", "omega_tau", "delta", "gamma_e_b", "tau", "p_m",
                  "pump_q", "n_steps", "beta", "fit_level", "self_test_tau"},
                 {"dbc", "asymptote"});
  const std::string choice = cfg.require_text("h_choice");
  NvOptions opts;
  opts.p_m = cfg.real("p_m", opts.p_m);
  opts.pump_q = cfg.real("pump_q", opts.pump_q);
  opts.n_steps = cfg.integer("n_steps", opts.n_steps);
  NvHamiltonian h;
  if (choice == "x_drive") {
    h = XDrive{cfg.real("omega", 1.0), cfg.require_real("omega_tau")};
  } else if (choice == "z_natural") {
    h = ZNatural{cfg.real("delta", 1.0), cfg.require_real("gamma_e_b"), cfg.real("tau", 1.0)};
  } else {
    throw ConfigError("key 'h_choice' must be x_drive or z_natural");
  }
  const double beta = cfg.real("beta", 1.0);
  const double tau_true = cfg.real("self_test_tau", 3.11);
  if (!(tau_true > 0.0)) throw ConfigError("key 'self_test_tau' must be > 0");

  const ProtocolSpec spec = build_nv_demon(h, opts);
  TPMRecord record = run_protocol(spec);
  const ProbabilityVector p_init = thermal_probabilities(spec.hamiltonian, beta);
  record.initial_probs = p_init;
  AsymptoticOptions aopts;
  aopts.tol = cfg.tolerance("asymptote", aopts.tol);
  const AsymptoticReport asym = protocol_asymptote(spec, aopts);

  DbcFitOptions fopts;
  fopts.p_inf = asym.diagonal;
  if (cfg.has("fit_level")) {
    const int level = cfg.integer("fit_level", 0);
    if (level < 0 || static_cast<std::size_t>(level) >= record.num_levels())
      throw ConfigError("key 'fit_level' out of range");
    fopts.initial_level = static_cast<std::size_t>(level);
  }
  const DbcFit fit = fit_exponential_dbc_model(record, fopts);
  TPMRecord model = exponential_dbc_record(record.energies, fit.p_inf, fit.tau_d, record.steps);
  model.initial_probs = p_init;

  const auto sol_sim =
      solve_eta_star(stationary_distribution(record.energies, p_init, asym.diagonal));
  const auto sol_model =
      solve_eta_star(stationary_distribution(record.energies, p_init, fit.p_inf));
  const auto g_sim = characteristic_trace(record, p_init, sol_sim.value());
  const auto g_model = characteristic_trace(model, p_init, sol_model.value());

  const auto synthetic =
      exponential_dbc_record(record.energies, fit.p_inf, tau_true, record.steps);
  DbcFitOptions sopts;
  sopts.p_inf = fit.p_inf;
  const DbcFit self_fit = fit_exponential_dbc_model(synthetic, sopts);

  CommandOutcome out;
  Json& j = out.summary;
  j["scenario"] = "nv-pulses";
  j["h_choice"] = choice;
  j["params"] = params_json(spec);
  j["n_steps"] = spec.n_steps;
  j["beta"] = beta;
  j["energies"] = record.energies;
  j["initial_probs"] = to_json(p_init);
  j["completeness_error"] = spec.step_channel.completeness_error();
  j["asymptote"] = to_json(asym);
  j["dbc"] = to_json(check_dbc(record, asym.diagonal, cfg.tolerance("dbc", 1e-3)));
  j["fit"] = to_json(fit);
  j["eta_star_simulated"] = to_json(sol_sim);
  j["eta_star_model"] = to_json(sol_model);
  const auto worst = [](const std::vector<double>& g) {
    Json w;
    std::size_t arg = 0;
    for (std::size_t t = 0; t < g.size(); ++t)
      if (std::abs(g[t] - 1.0) > std::abs(g[arg] - 1.0)) arg = t;
    w["max_abs_deviation"] = std::abs(g[arg] - 1.0);
    w["at_step"] = arg;
    return w;
  };
  j["trace_simulated"] = worst(g_sim);
  j["trace_model"] = worst(g_model);
  Json self;
  self["tau_d_true"] = tau_true;
  self["tau_d_fit"] = self_fit.tau_d;
  self["relative_error"] = std::abs(self_fit.tau_d - tau_true) / tau_true;
  j["self_test"] = self;

  std::ostringstream traces;
  traces << "step,G_simulated,G_model\n";
  for (std::size_t t = 0; t < record.num_times(); ++t)
    traces << record.steps[t] << ',' << format_real(g_sim[t]) << ','
           << format_real(g_model[t]) << '\n';

  const std::string stem = "nv_" + choice;
  emit_csv(out, cfg, stem + "_conditional.csv", conditional_table_csv(record));
  emit_csv(out, cfg, stem + "_record.csv", tpm_csv(record));
  emit_csv(out, cfg, stem + "_traces.csv", traces.str());
  emit_json(out, cfg, stem + "_summary.json");
  return out;
}

CommandOutcome cmd_field_sweep(const ScenarioConfig& cfg) {
  cfg.check_keys({"beta", "delta", "b_grid", "b_min", "b_max", "b_count", "eta_max"}, {});
  std::vector<double> betas = cfg.has("beta") ? cfg.real_list("beta") : std::vector<double>{1.0};
  const double delta = cfg.real("delta", 1.0);
  std::vector<double> grid;
  if (cfg.has("b_grid")) {
    if (cfg.has("b_min") || cfg.has("b_max") || cfg.has("b_count"))
      throw ConfigError("give either 'b_grid' or 'b_min'/'b_max'/'b_count', not both");
    grid = cfg.real_list("b_grid");
  } else if (cfg.has("b_min") || cfg.has("b_max") || cfg.has("b_count")) {
    const double lo = cfg.require_real("b_min");
    const double hi = cfg.require_real("b_max");
    const int count = cfg.integer("b_count", 0);
    if (count < 2 || !(hi > lo)) throw ConfigError("need b_count >= 2 and b_max > b_min");
    for (int k = 0; k < count; ++k) grid.push_back(lo + (hi - lo) * k / (count - 1));
  } else {
    throw ConfigError("missing required key 'b_grid' (or 'b_min', 'b_max', 'b_count')");
  }
  const std::optional<double> eta_max = cfg.find_real("eta_max");

  CommandOutcome out;
  Json& j = out.summary;
  j["scenario"] = "field-sweep";
  j["delta"] = delta;
  j["grid_size"] = grid.size();
  Json per_beta = Json::array();
  std::ostringstream csv;
  csv << "gamma_e_B,beta,kind,eta_star,residual,slope_at_zero\n";
  for (double beta : betas) {
    const auto points = nv_field_sweep(beta, delta, grid, eta_max);
    Json b;
    b["beta"] = beta;
    bool trivial_below = true;
    std::optional<std::size_t> below;
    std::optional<std::size_t> above;
    bool crossing_on_grid = false;
    for (std::size_t k = 0; k < points.size(); ++k) {
      const auto& p = points[k];
      const std::string kind = p.level_crossing ? "level_crossing" : to_string(p.solution.kind);
      csv << format_real(p.gamma_e_b) << ',' << format_real(beta) << ',' << kind << ','
          << (p.solution.eta_star ? format_real(*p.solution.eta_star) : "") << ','
          << format_real(p.solution.residual) << ',' << format_real(p.solution.slope_at_zero)
          << '\n';
      if (p.level_crossing) {
        crossing_on_grid = true;
        continue;
      }
      if (p.gamma_e_b < delta) {
        trivial_below = trivial_below && p.solution.kind == EtaKind::trivial_only;
        if (!below || p.gamma_e_b > points[*below].gamma_e_b) below = k;
      } else if (!above || p.gamma_e_b < points[*above].gamma_e_b) {
        above = k;
      }
    }
    b["all_trivial_below_crossing"] = trivial_below;
    Json window;
    window["level_crossing_on_grid"] = crossing_on_grid;
    window["below"] = below ? Json(points[*below].gamma_e_b) : Json(nullptr);
    window["below_kind"] = below ? Json(to_string(points[*below].solution.kind)) : Json(nullptr);
    window["above"] = above ? Json(points[*above].gamma_e_b) : Json(nullptr);
    window["above_eta_star"] =
        above && points[*above].solution.eta_star ? Json(*points[*above].solution.eta_star)
                                                  : Json(nullptr);
    b["discontinuity_window"] = window;
    const auto top = std::max_element(points.begin(), points.end(),
                                      [](const SweepPoint& a, const SweepPoint& c) {
                                        return a.gamma_e_b < c.gamma_e_b;
                                      });
    if (top != points.end()) {
      b["highest_field"] = top->gamma_e_b;
      b["eta_over_beta_at_highest_field"] =
          top->solution.eta_star ? Json(*top->solution.eta_star / beta) : Json(nullptr);
    }
    per_beta.push_back(b);
  }
  j["sweeps"] = per_beta;
  emit_csv(out, cfg, "field_sweep.csv", csv.str());
  emit_json(out, cfg, "field_sweep_summary.json");
  return out;
}

CommandOutcome cmd_solve_eta(const ScenarioConfig& cfg) {
  cfg.check_keys({"energies", "p_init", "p_inf", "eta_max", "initial_guess"}, {"solver"});
  const auto energies = cfg.real_list("energies");
  if (energies.empty()) throw ConfigError("missing required key 'energies'");
  const auto list = [&](const char* key) {
    const auto v = cfg.real_list(key);
    if (v.empty()) throw ConfigError(std::string("missing required key '") + key + "'");
    if (v.size() != energies.size())
      throw ConfigError(std::string("key '") + key + "' must match the number of energies");
    return ProbabilityVector(v);
  };
  const ProbabilityVector p_init = list("p_init");
  const ProbabilityVector p_inf = list("p_inf");
  EtaSolverOptions opts;
  opts.eta_max = cfg.find_real("eta_max");
  opts.initial_guess = cfg.find_real("initial_guess");
  opts.tol = cfg.tolerance("solver", opts.tol);
  const auto dist = stationary_distribution(energies, p_init, p_inf);
  const auto sol = solve_eta_star(dist, opts);
  const double m = mean_energy_change(dist);

  CommandOutcome out;
  Json& j = out.summary;
  j["scenario"] = "solve-eta";
  j["energies"] = energies;
  j["p_init"] = to_json(p_init);
  j["p_inf"] = to_json(p_inf);
  j["solution"] = to_json(sol);
  j["mean_energy_change"] = m;
  j["energy_flow"] = to_string(energy_extraction_indicator(sol, m));
  if (energies.size() == 3 && energies[0] == 0.0 && energies[1] < 0.0 &&
      energies[2] == -energies[1]) {
    try {
      j["cubic"] = to_json(symmetric_qutrit_cubic(p_init, p_inf, energies[2]));
    } catch (const std::exception& e) {
      j["cubic"] = {{"error", e.what()}};
    }
  }
  emit_json(out, cfg, "solve_eta.json");
  return out;
}

CommandOutcome cmd_verify(const ScenarioConfig& cfg) {
  cfg.check_keys({"seed", "inject_dbc_violation"}, {});
  VerifyOptions opts;
  if (const char* env = std::getenv("FLUXTHERM_SEED")) {
    try {
      opts.seed = static_cast<std::uint64_t>(std::stoull(env));
    } catch (const std::exception&) {
      throw ConfigError("FLUXTHERM_SEED must be a non-negative integer");
    }
  }
  if (cfg.has("seed")) {
    try {
      opts.seed = static_cast<std::uint64_t>(std::stoull(cfg.text("seed", "")));
    } catch (const std::exception&) {
      throw ConfigError("key 'seed' must be a non-negative integer");
    }
  }
  opts.inject_dbc_violation = cfg.integer("inject_dbc_violation", 0) != 0;
  const VerifyReport report = run_verify_suite(opts);
  CommandOutcome out;
  out.summary = report.to_json();
  out.summary["scenario"] = "verify";
  out.summary["inject_dbc_violation"] = opts.inject_dbc_violation;
  out.exit_code = report.passes() ? exit_code::ok : exit_code::check_failed;
  emit_json(out, cfg, "verify_report.json");
  return out;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"sg", "nv-pulses", "field-sweep", "solve-eta",
                                              "verify"};
  return names;
}

namespace {

std::string normalized_name(std::string s) {
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

void print_summary(const std::string& name, const CommandOutcome& out, std::ostream& os) {
  const Json& j = out.summary;
  if (name == "verify") {
    for (const auto& c : j["checks"])
      os << (c["passes"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>()
         << "  deviation=" << c["deviation"].dump() << "  tol=" << c["tolerance"].dump()
         << '\n';
    os << (out.exit_code == exit_code::ok ? "all checks passed" : "some checks failed")
       << " (seed " << j["seed"].dump() << ")\n";
  } else if (name == "solve-eta") {
    os << "kind=" << j["solution"]["kind"].get<std::string>()
       << " eta_star=" << j["solution"]["eta_star"].dump() << '\n';
  }
  for (const auto& f : out.files) os << "wrote " << f.string() << '\n';
}

}  // namespace

int run_command(const std::string& name, const ScenarioConfig& cfg, std::ostream& out,
                std::ostream& err) {
  const std::string cmd = normalized_name(name);
  try {
    if (!cfg.scenario.empty() && normalized_name(cfg.scenario) != cmd)
      throw ConfigError("config scenario '" + cfg.scenario + "' does not match command '" +
                        cmd + "'");
    CommandOutcome result;
    if (cmd == "sg") result = cmd_sg(cfg);
    else if (cmd == "nv-pulses") result = cmd_nv_pulses(cfg);
    else if (cmd == "field-sweep") result = cmd_field_sweep(cfg);
    else if (cmd == "solve-eta") result = cmd_solve_eta(cfg);
    else if (cmd == "verify") result = cmd_verify(cfg);
    else throw ConfigError("unknown command '" + name + "'");
    print_summary(cmd, result, out);
    return result.exit_code;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return exit_code::config_error;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return exit_code::config_error;
  } catch (const ConvergenceError& e) {
    err << "did not converge: " << e.what() << " (last change " << e.last_change() << ")\n";
    return exit_code::no_convergence;
  }
}

}  // namespace fluxtherm
