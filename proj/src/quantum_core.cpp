#include "fluxtherm/quantum_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace fluxtherm {

bool is_hermitian(const ComplexMatrix& m, double tol) {
  return m.rows() == m.cols() && max_abs(m - m.adjoint()) <= tol;
}

bool is_unitary(const ComplexMatrix& u, double tol) {
  if (u.rows() != u.cols()) return false;
  const auto id = ComplexMatrix::Identity(u.rows(), u.cols());
  return max_abs(u.adjoint() * u - id) <= tol;
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a * b - b * a;
}

// ---------------------------------------------------------------------------

ProbabilityVector::ProbabilityVector(std::vector<double> values,
                                     const Tolerances& tol)
    : values_(std::move(values)) {
  if (values_.empty()) throw ValidationError("probability vector is empty");
  double sum = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    const double p = values_[k];
    if (!std::isfinite(p) || p < -tol.probability_entry ||
        p > 1.0 + tol.probability_entry) {
      std::ostringstream msg;
      msg << "probability entry " << k << " = " << p << " outside [0, 1]";
      throw ValidationError(msg.str());
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > tol.probability_sum) {
    std::ostringstream msg;
    msg << "probabilities sum to " << sum << ", expected 1";
    throw ValidationError(msg.str());
  }
}

ProbabilityVector ProbabilityVector::normalized(std::vector<double> values,
                                                const Tolerances& tol) {
  ProbabilityVector checked(values, tol);
  double sum = 0.0;
  for (double& p : values) {
    p = std::max(p, 0.0);
    sum += p;
  }
  for (double& p : values) p /= sum;
  ProbabilityVector out;
  out.values_ = std::move(values);
  return out;
}

// ---------------------------------------------------------------------------

DensityReport validate_density(const ComplexMatrix& rho,
                               const Tolerances& tol) {
  DensityReport report;
  if (rho.rows() != rho.cols() || rho.rows() == 0) {
    report.violations.push_back("matrix is not square");
    return report;
  }
  if (!rho.allFinite()) {
    report.violations.push_back("non-finite entries");
    return report;
  }
  report.hermiticity_error = max_abs(rho - rho.adjoint());
  report.trace_error = std::abs(rho.trace() - Complex(1.0, 0.0));
  const ComplexMatrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(herm,
                                                      Eigen::EigenvaluesOnly);
  report.min_eigenvalue = solver.eigenvalues().minCoeff();

  std::ostringstream msg;
  if (report.hermiticity_error > tol.hermiticity) {
    msg << "not Hermitian: max |rho - rho^dagger| = "
        << report.hermiticity_error;
    report.violations.push_back(msg.str());
    msg.str("");
  }
  if (report.trace_error > tol.trace) {
    msg << "trace deviates from 1 by " << report.trace_error;
    report.violations.push_back(msg.str());
    msg.str("");
  }
  if (report.min_eigenvalue < -tol.negativity) {
    msg << "negative eigenvalue " << report.min_eigenvalue;
    report.violations.push_back(msg.str());
  }
  return report;
}

DensityOperator::DensityOperator(ComplexMatrix m, const Tolerances& tol)
    : m_(std::move(m)) {
  const auto report = validate_density(m_, tol);
  if (!report.passes()) {
    std::string what = "invalid density operator:";
    for (const auto& v : report.violations) what += " " + v + ";";
    throw ValidationError(what);
  }
}

DensityOperator DensityOperator::maximally_mixed(Eigen::Index dim) {
  if (dim <= 0) throw ValidationError("dimension must be positive");
  return DensityOperator(ComplexMatrix::Identity(dim, dim) /
                         static_cast<double>(dim));
}

// ---------------------------------------------------------------------------

std::vector<double> HermitianObservable::energies() const {
  std::vector<double> out;
  out.reserve(levels_.size());
  for (const auto& l : levels_) out.push_back(l.energy);
  return out;
}

double HermitianObservable::spectral_range() const {
  if (levels_.empty()) return 0.0;
  return levels_.back().energy - levels_.front().energy;
}

bool HermitianObservable::nondegenerate() const {
  return std::all_of(levels_.begin(), levels_.end(),
                     [](const EnergyLevel& l) { return l.multiplicity == 1; });
}

ComplexMatrix HermitianObservable::reconstruct() const {
  ComplexMatrix out = ComplexMatrix::Zero(dim(), dim());
  for (const auto& l : levels_) out += l.energy * l.projector;
  return out;
}

HermitianObservable spectral_decompose(const ComplexMatrix& m,
                                       std::optional<double> degeneracy_tol) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw ValidationError("spectral_decompose: matrix must be square");
  const double scale = std::max(1.0, max_abs(m));
  if (!is_hermitian(m, 1e-10 * scale))
    throw ValidationError("spectral_decompose: matrix is not Hermitian");

  const ComplexMatrix herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(herm);
  if (solver.info() != Eigen::Success)
    throw ValidationError("spectral_decompose: eigensolver failed");
  const Eigen::VectorXd& evals = solver.eigenvalues();
  const ComplexMatrix& evecs = solver.eigenvectors();
  const Eigen::Index n = evals.size();

  const double range = evals(n - 1) - evals(0);
  double tol = degeneracy_tol.value_or(1e-9 * range);
  if (degeneracy_tol && *degeneracy_tol <= 0.0)
    throw ValidationError("spectral_decompose: degeneracy_tol must be > 0");
  if (tol <= 0.0) tol = 1e-9 * scale;

  HermitianObservable obs;
  obs.matrix_ = m;
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && evals(end) - evals(end - 1) <= tol) ++end;
    EnergyLevel level;
    level.multiplicity = static_cast<int>(end - start);
    level.energy = evals.segment(start, end - start).mean();
    level.eigenvectors = evecs.middleCols(start, end - start);
    level.projector = level.eigenvectors * level.eigenvectors.adjoint();
    obs.levels_.push_back(std::move(level));
    start = end;
  }
  return obs;
}

ProbabilityVector thermal_probabilities(const HermitianObservable& h,
                                        double beta) {
  if (!std::isfinite(beta)) throw ValidationError("beta must be finite");
  const auto& levels = h.levels();
  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& l : levels) shift = std::max(shift, -beta * l.energy);
  std::vector<double> w;
  w.reserve(levels.size());
  double z = 0.0;
  for (const auto& l : levels) {
    w.push_back(l.multiplicity * std::exp(-beta * l.energy - shift));
    z += w.back();
  }
  for (double& x : w) x /= z;
  return ProbabilityVector(std::move(w));
}

DensityOperator thermal_state(const HermitianObservable& h, double beta) {
  const auto p = thermal_probabilities(h, beta);
  ComplexMatrix rho = ComplexMatrix::Zero(h.dim(), h.dim());
  for (std::size_t k = 0; k < h.num_levels(); ++k) {
    const auto& l = h.level(k);
    rho += (p[k] / l.multiplicity) * l.projector;
  }
  return DensityOperator(std::move(rho));
}

SpinOneOperators spin1_operators() {
  const double r = 1.0 / std::sqrt(2.0);
  const Complex i(0.0, 1.0);
  SpinOneOperators s;
  s.sx = ComplexMatrix::Zero(3, 3);
  s.sy = ComplexMatrix::Zero(3, 3);
  s.sz = ComplexMatrix::Zero(3, 3);
  s.sx(0, 1) = s.sx(1, 0) = s.sx(1, 2) = s.sx(2, 1) = r;
  s.sy(0, 1) = -i * r;
  s.sy(1, 0) = i * r;
  s.sy(1, 2) = -i * r;
  s.sy(2, 1) = i * r;
  s.sz(0, 0) = 1.0;
  s.sz(2, 2) = -1.0;
  return s;
}

ComplexMatrix unitary_from_generator(const ComplexMatrix& generator,
                                     double theta) {
  if (!is_hermitian(generator, 1e-10 * std::max(1.0, max_abs(generator))))
    throw ValidationError("unitary generator must be Hermitian");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(
      0.5 * (generator + generator.adjoint()));
  const Eigen::VectorXd& evals = solver.eigenvalues();
  ComplexVector phases(evals.size());
  for (Eigen::Index k = 0; k < evals.size(); ++k)
    phases(k) = std::exp(Complex(0.0, -theta * evals(k)));
  return solver.eigenvectors() * phases.asDiagonal() *
         solver.eigenvectors().adjoint();
}

}  // namespace fluxtherm
