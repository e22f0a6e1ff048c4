#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluxtherm/quantum_core.hpp"

namespace fluxtherm {

/// Iteration budget exhausted before the asymptotic diagonal settled.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_change)
      : std::runtime_error(what), last_change_(last_change) {}
  double last_change() const { return last_change_; }

 private:
  double last_change_;
};

/// The asymptotic diagonal depends on the initial state.
class SeedDependenceError : public std::runtime_error {
 public:
  SeedDependenceError(const std::string& what, double spread)
      : std::runtime_error(what), spread_(spread) {}
  double spread() const { return spread_; }

 private:
  double spread_;
};

/// CPTP map in Kraus form. Construction verifies sum_k K^dagger K = I.
class QuantumChannel {
 public:
  QuantumChannel(std::vector<ComplexMatrix> kraus, std::string label,
                 double cptp_tol = Tolerances{}.cptp);

  Eigen::Index dim() const { return dim_; }
  const std::vector<ComplexMatrix>& kraus_ops() const { return kraus_; }
  const std::string& label() const { return label_; }

  /// max |sum_k K^dagger K - I|.
  double completeness_error() const;

  /// sum_k K rho K^dagger without validating the result.
  ComplexMatrix apply_raw(const ComplexMatrix& rho) const;

  static QuantumChannel identity(Eigen::Index dim);

 private:
  Eigen::Index dim_ = 0;
  std::vector<ComplexMatrix> kraus_;
  std::string label_;
};

QuantumChannel unitary_channel(const ComplexMatrix& u,
                               std::string label = "unitary");

/// Unread projective measurement of obs: rho -> sum_k Pi_k rho Pi_k.
QuantumChannel dephasing_channel(const HermitianObservable& obs);

/// Identity with probability 1 - p, inner with probability p.
QuantumChannel probabilistic_channel(double p, const QuantumChannel& inner);

/// Collapse in the eigenbasis of `basis`, then move each non-target level to
/// the (rank-1) target level with probability q.
QuantumChannel pump_channel(const HermitianObservable& basis,
                            std::size_t target_level, double q);

/// Applies `first`, then `then`.
QuantumChannel compose(const QuantumChannel& first, const QuantumChannel& then);

/// Applies the channel and validates the output state.
DensityOperator apply(const QuantumChannel& ch, const DensityOperator& rho);

struct AsymptoticReport {
  DensityOperator state;
  ProbabilityVector diagonal;  // P_f(inf) in the supplied energy basis
  double offdiag_residual = 0.0;
  double seed_spread = 0.0;
  int iterations = 0;
};

struct AsymptoticOptions {
  double tol = 1e-10;
  int max_iter = 100000;
};

/// Level populations Tr[Pi_k rho].
std::vector<double> level_populations(const HermitianObservable& basis,
                                      const ComplexMatrix& rho);

/// Default seeds: maximally mixed state followed by each normalised level
/// projector.
std::vector<DensityOperator> default_seeds(const HermitianObservable& basis);

/// Repeatedly applies ch to every seed until the populations in `basis`
/// change by less than tol between iterations. Off-diagonal terms are
/// reported, never required to converge.
AsymptoticReport asymptotic_state(const QuantumChannel& ch,
                                  const HermitianObservable& basis,
                                  std::vector<DensityOperator> seeds = {},
                                  const AsymptoticOptions& opts = {});

}  // namespace fluxtherm
