#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fluxtherm {

// Energies are in units where hbar = k_B = 1.
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;

/// Thrown when an input violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Tolerances shared across the library. Defaults follow the documented
/// contracts; every field can be overridden from the CLI configuration.
struct Tolerances {
  double hermiticity = 1e-10;
  double trace = 1e-10;
  double negativity = 1e-9;
  double projector = 1e-10;
  double cptp = 1e-10;
  double probability_sum = 1e-9;
  double probability_entry = 1e-12;
};

/// Maximum absolute entry, the norm used for every entrywise comparison.
template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : static_cast<double>(m.cwiseAbs().maxCoeff());
}

bool is_hermitian(const ComplexMatrix& m, double tol);
bool is_unitary(const ComplexMatrix& u, double tol);

/// Non-negative weights summing to one.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;
  explicit ProbabilityVector(std::vector<double> values,
                             const Tolerances& tol = {});

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }

  /// Clamps tiny negative round-off and renormalises. Throws if the input is
  /// further from a distribution than the tolerances allow.
  static ProbabilityVector normalized(std::vector<double> values,
                                      const Tolerances& tol = {});

 private:
  std::vector<double> values_;
};

struct DensityReport {
  double hermiticity_error = 0.0;
  double trace_error = 0.0;
  double min_eigenvalue = 0.0;
  std::vector<std::string> violations;

  bool passes() const { return violations.empty(); }
};

/// Checks a candidate density matrix. Never throws for square input.
DensityReport validate_density(const ComplexMatrix& rho,
                               const Tolerances& tol = {});

/// Hermitian, unit-trace, positive semidefinite matrix.
class DensityOperator {
 public:
  explicit DensityOperator(ComplexMatrix m, const Tolerances& tol = {});

  const ComplexMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

  static DensityOperator maximally_mixed(Eigen::Index dim);

 private:
  ComplexMatrix m_;
};

struct EnergyLevel {
  double energy = 0.0;
  ComplexMatrix projector;
  ComplexMatrix eigenvectors;  // orthonormal columns spanning the level
  int multiplicity = 1;
};

/// A Hermitian matrix together with its spectral decomposition. Levels are
/// sorted by ascending energy and degenerate eigenvalues share one projector.
class HermitianObservable {
 public:
  const ComplexMatrix& matrix() const { return matrix_; }
  const std::vector<EnergyLevel>& levels() const { return levels_; }
  const EnergyLevel& level(std::size_t k) const { return levels_.at(k); }
  std::size_t num_levels() const { return levels_.size(); }
  Eigen::Index dim() const { return matrix_.rows(); }

  std::vector<double> energies() const;
  double spectral_range() const;
  bool nondegenerate() const;

  /// Reconstructs sum_k E_k Pi_k.
  ComplexMatrix reconstruct() const;

 private:
  friend HermitianObservable spectral_decompose(const ComplexMatrix&,
                                                std::optional<double>);
  ComplexMatrix matrix_;
  std::vector<EnergyLevel> levels_;
};

/// Diagonalises a Hermitian matrix. Eigenvalues closer than degeneracy_tol
/// (default 1e-9 times the spectral range) are merged into one level.
HermitianObservable spectral_decompose(
    const ComplexMatrix& m, std::optional<double> degeneracy_tol = std::nullopt);

/// Gibbs state exp(-beta H)/Z. Exponents are shifted before evaluation so
/// that large |beta| does not overflow.
DensityOperator thermal_state(const HermitianObservable& h, double beta);

/// Gibbs weights per level (rank included), as a probability vector.
ProbabilityVector thermal_probabilities(const HermitianObservable& h,
                                        double beta);

struct SpinOneOperators {
  ComplexMatrix sx;
  ComplexMatrix sy;
  ComplexMatrix sz;
};

/// Spin-1 matrices in the ordered basis (|+1>, |0>, |-1>).
SpinOneOperators spin1_operators();

/// exp(-i * theta * generator) for a Hermitian generator.
ComplexMatrix unitary_from_generator(const ComplexMatrix& generator,
                                     double theta);

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace fluxtherm
