#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fluxtherm/channels.hpp"
#include "fluxtherm/quantum_core.hpp"

namespace fluxtherm {

/// Two-point-measurement record: conditional probabilities P_{f|i}(t) on a
/// stroboscopic grid t = step * tau. cond[t](f, i) = P_{f|i}(steps[t]).
struct TPMRecord {
  std::vector<double> energies;
  std::optional<ProbabilityVector> initial_probs;
  std::vector<int> steps;
  std::vector<RealMatrix> cond;

  std::size_t num_levels() const { return energies.size(); }
  std::size_t num_times() const { return steps.size(); }

  /// Throws ValidationError unless every column is a distribution, all
  /// entries lie in [0, 1], and a step-0 matrix (if present) is the identity.
  void validate(double sum_tol = 1e-9, double identity_tol = 1e-12) const;
};

struct EnergyChange {
  double delta_e = 0.0;
  double prob = 0.0;
  double log_prob = 0.0;  // kept separately so that underflowed weights survive
};

/// Distribution of Delta E. Entries are sorted by delta_e and entries closer
/// than the merge tolerance are combined.
class EnergyChangeDistribution {
 public:
  EnergyChangeDistribution() = default;

  /// Builds from (delta_e, prob) pairs.
  static EnergyChangeDistribution from_probabilities(
      std::vector<std::pair<double, double>> entries);
  /// Builds from (delta_e, log prob) pairs.
  static EnergyChangeDistribution from_log_weights(
      std::vector<std::pair<double, double>> entries);

  const std::vector<EnergyChange>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// max(delta_e) - min(delta_e).
  double range() const;
  double max_abs_delta() const;

 private:
  static EnergyChangeDistribution build(std::vector<EnergyChange> raw);
  std::vector<EnergyChange> entries_;
};

ProbabilityVector initial_probabilities(const DensityOperator& rho0,
                                        const HermitianObservable& h);

/// Propagates Pi_i / rank(Pi_i) through n_steps applications of the step
/// channel and records Tr[Pi_f . state] at every step 0..n_steps.
TPMRecord conditional_probabilities(const QuantumChannel& step_channel,
                                    const HermitianObservable& h, int n_steps);

EnergyChangeDistribution energy_change_distribution(const TPMRecord& record,
                                                    std::size_t t_index);
EnergyChangeDistribution energy_change_distribution(
    const TPMRecord& record, std::size_t t_index,
    const ProbabilityVector& initial_probs);

/// Distribution of E_f - E_i with P_{f|i} = P_f(inf) for every i.
EnergyChangeDistribution stationary_distribution(
    const std::vector<double>& energies, const ProbabilityVector& p_init,
    const ProbabilityVector& p_inf);

/// G(j eta) = sum p exp(-eta dE), evaluated with a max-exponent shift.
double characteristic_function(const EnergyChangeDistribution& dist,
                               double eta);
double log_characteristic_function(const EnergyChangeDistribution& dist,
                                   double eta);

/// G(j eta) - 1 of the normalised distribution, with expm1 accuracy near
/// eta = 0.
double characteristic_minus_one(const EnergyChangeDistribution& dist,
                                double eta);

double mean_energy_change(const EnergyChangeDistribution& dist);

/// G(j eta, t) for every recorded time.
std::vector<double> characteristic_trace(const TPMRecord& record,
                                         const ProbabilityVector& p_init,
                                         double eta);

/// Long-format CSV: two header rows (energies, initial_probs), then
/// step,i,f,P_f_given_i rows. 17 significant digits, LF endings.
void write_tpm_csv(std::ostream& os, const TPMRecord& record);
TPMRecord read_tpm_csv(std::istream& is);

}  // namespace fluxtherm
