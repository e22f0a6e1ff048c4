#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "fluxtherm/quantum_core.hpp"
#include "fluxtherm/tpm_statistics.hpp"

namespace fluxtherm {

enum class EtaKind { nontrivial, trivial_only, degenerate_flat };

std::string to_string(EtaKind kind);

/// Outcome of the search for the nonzero root of g(eta) = G(j eta) - 1.
struct EtaSolution {
  EtaKind kind = EtaKind::trivial_only;
  std::optional<double> eta_star;  // present iff kind == nontrivial
  double residual = 0.0;           // |G(j eta*) - 1|
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double slope_at_zero = 0.0;      // g'(0) = -<dE>
  int iterations = 0;
  double eta_max = 0.0;
  double g_at_minus_eta_max = 0.0;
  double g_at_plus_eta_max = 0.0;

  /// eta* for a nontrivial solution, 0 otherwise.
  double value() const { return eta_star.value_or(0.0); }
};

struct EtaSolverOptions {
  /// Search half-width; default 1e3 / range(dE).
  std::optional<double> eta_max;
  double tol = 1e-12;
  /// Warm start: a previous solution used as the first trial point.
  std::optional<double> initial_guess;
};

/// Finds the nonzero root of the convex function g(eta) = G(j eta) - 1.
/// The root lies on the side opposite to the sign of g'(0); the bracket is
/// grown geometrically and refined by bisection.
EtaSolution solve_eta_star(const EnergyChangeDistribution& dist,
                           const EtaSolverOptions& opts = {});

/// (sum_i P_i e^{eta E_i}) * (sum_f P_f(inf) e^{-eta E_f}).
double asymptotic_characteristic(const ProbabilityVector& p_init,
                                 const ProbabilityVector& p_inf,
                                 const std::vector<double>& energies,
                                 double eta);

struct RouthResult {
  std::array<double, 4> first_column{};
  int permanences = 0;
  int variations = 0;
  bool epsilon_substituted = false;
};

/// Routh table of a cubic c0 x^3 + c1 x^2 + c2 x + c3 (descending degree).
/// A zero pivot is replaced by 1e-30 carrying the sign of the previous pivot.
RouthResult routh_hurwitz_variations(const std::array<double, 4>& coeffs);

struct CubicCertificate {
  std::array<double, 4> coefficients{};  // descending degree
  std::array<std::complex<double>, 3> roots{};
  int routh_permanences = 0;
  int routh_variations = 0;
  bool routh_epsilon = false;
  std::complex<double> selected_root;
  double eta_star = 0.0;
};

/// Symmetric qutrit with energies (0, -e_bar, +e_bar), probability vectors
/// ordered the same way. Reduces G(j eta) = 1 in x = exp(-eta e_bar) to a
/// cubic after removing the trivial factor (x - 1).
CubicCertificate symmetric_qutrit_cubic(const ProbabilityVector& p_init,
                                        const ProbabilityVector& p_inf,
                                        double e_bar);

struct SweepPoint {
  double gamma_e_b = 0.0;
  double beta = 0.0;
  bool level_crossing = false;  // gamma_e B == Delta; not solved
  EtaSolution solution;
};

/// Energy-change distribution of the NV centre under H = Delta Sz^2 +
/// gamma_e B Sz with a thermal initial state and all population pumped to
/// |0>. Built from log-weights so that tiny Boltzmann factors survive.
EnergyChangeDistribution nv_pumped_distribution(double beta, double delta,
                                                double gamma_e_b);

/// Search half-width used by the field sweep: the larger of 1e3 over the
/// smallest nonzero |dE|, 1e3 over the range, and 100 beta.
double nv_sweep_eta_max(const EnergyChangeDistribution& dist, double beta);

/// Solves the pumped-NV problem along a field grid, warm-starting each point
/// from the previous nontrivial solution.
std::vector<SweepPoint> nv_field_sweep(double beta, double delta,
                                       const std::vector<double>& b_grid,
                                       std::optional<double> eta_max = std::nullopt);

enum class EnergyFlow { extraction, injection, neutral };

std::string to_string(EnergyFlow flow);

/// Sign rule: eta* < 0 means energy extraction. Throws if eta* <dE> < -1e-9.
EnergyFlow energy_extraction_indicator(const EtaSolution& sol, double mean_de);

}  // namespace fluxtherm
