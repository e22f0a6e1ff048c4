#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fluxtherm/quantum_core.hpp"
#include "fluxtherm/tpm_statistics.hpp"

namespace fluxtherm {

/// passes <=> every recorded deviation from onset_step on is within tol.
struct HypothesisVerdict {
  std::string name;
  bool passes = false;
  double max_deviation = 0.0;  // over t >= onset (or over all t when failing)
  std::optional<int> onset_step;
  double tolerance = 0.0;
  std::vector<double> deviations;  // one per recorded time
  std::vector<std::string> flags;
};

/// Optional restriction of the evaluation window to steps >= from_step.
/// Step 0 is never part of the window.
struct WindowOptions {
  std::optional<int> from_step;
};

/// Complete memory loss: P_{f|i}(t) independent of i.
HypothesisVerdict check_hypothesis_I_star(const TPMRecord& record, double tol,
                                          const WindowOptions& window = {});

/// Almost complete memory loss: P_{f|i}(t) independent of i for i != f.
HypothesisVerdict check_hypothesis_I(const TPMRecord& record, double tol,
                                     const WindowOptions& window = {});

/// Detailed balance in cross-multiplied form,
/// |P_{f|i}(t) P_i(inf) - P_{i|f}(t) P_f(inf)|.
HypothesisVerdict check_dbc(const TPMRecord& record,
                            const ProbabilityVector& p_inf, double tol,
                            const WindowOptions& window = {});

/// F_{i,f}(t) = P_{f|i}(t) / P_f(inf) off the diagonal. The diagonal holds
/// (1 - P_{i|i}(t)) / (1 - P_i(inf)), the common value F would need for the
/// completion P_{i|i} = 1 - sum_{f != i} F P_f(inf) to hold. Undefined
/// entries are NaN.
struct FTable {
  std::vector<int> steps;
  std::vector<RealMatrix> values;  // values[t](i, f)

  /// max - min over defined entries at time index t.
  double spread(std::size_t t) const;
};

FTable extract_F(const TPMRecord& record, const ProbabilityVector& p_inf);

struct DbcFit {
  ProbabilityVector p_inf;
  double tau_d = 0.0;  // in units of the step duration
  double rms_residual = 0.0;
};

struct DbcFitOptions {
  /// Fit only the column of this initial level (all levels when empty).
  std::optional<std::size_t> initial_level;
  /// Asymptotic populations; defaults to the mean of the final-step columns.
  std::optional<ProbabilityVector> p_inf;
};

/// Least-squares fit of P_{f|i}(t) = P_f(inf)(1 - e^{-t/tau_D}) +
/// delta_{if} e^{-t/tau_D} over tau_D in [1e-3, 1e3] steps.
DbcFit fit_exponential_dbc_model(const TPMRecord& record,
                                 const DbcFitOptions& opts = {});

/// Record generated by the exponential model on the given step grid.
TPMRecord exponential_dbc_record(const std::vector<double>& energies,
                                 const ProbabilityVector& p_inf, double tau_d,
                                 const std::vector<int>& steps);

/// Record with P_{f|i}(t) = fbar[t] P_f(inf) for i != f and the diagonal
/// completed so that every column sums to one.
TPMRecord factorized_record(const std::vector<double>& energies,
                            const ProbabilityVector& p_inf,
                            const std::vector<double>& fbar,
                            const std::vector<int>& steps);

}  // namespace fluxtherm
