#include "fluxtherm/channels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fluxtherm {

namespace {

// Kraus operators that are exactly or numerically zero carry no weight in
// sum K^dagger K and are dropped to keep compositions small.
std::vector<ComplexMatrix> prune(std::vector<ComplexMatrix> ops) {
  std::erase_if(ops, [](const ComplexMatrix& k) { return max_abs(k) < 1e-15; });
  return ops;
}

void require_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream msg;
    msg << name << " = " << p << " must lie in [0, 1]";
    throw ValidationError(msg.str());
  }
}

}  // namespace

QuantumChannel::QuantumChannel(std::vector<ComplexMatrix> kraus,
                               std::string label, double cptp_tol)
    : kraus_(prune(std::move(kraus))), label_(std::move(label)) {
  if (kraus_.empty())
    throw ValidationError("channel '" + label_ + "' has no Kraus operators");
  dim_ = kraus_.front().rows();
  for (const auto& k : kraus_) {
    if (k.rows() != dim_ || k.cols() != dim_)
      throw ValidationError("channel '" + label_ +
                            "': Kraus operators must share one square shape");
  }
  const double err = completeness_error();
  if (err > cptp_tol) {
    std::ostringstream msg;
    msg << "channel '" << label_ << "' is not trace preserving: max |sum K^dagger K - I| = "
        << err;
    throw ValidationError(msg.str());
  }
}

double QuantumChannel::completeness_error() const {
  ComplexMatrix sum = ComplexMatrix::Zero(dim_, dim_);
  for (const auto& k : kraus_) sum += k.adjoint() * k;
  return max_abs(sum - ComplexMatrix::Identity(dim_, dim_));
}

ComplexMatrix QuantumChannel::apply_raw(const ComplexMatrix& rho) const {
  ComplexMatrix out = ComplexMatrix::Zero(dim_, dim_);
  for (const auto& k : kraus_) out.noalias() += k * rho * k.adjoint();
  return out;
}

QuantumChannel QuantumChannel::identity(Eigen::Index dim) {
  return QuantumChannel({ComplexMatrix::Identity(dim, dim)}, "identity");
}

QuantumChannel unitary_channel(const ComplexMatrix& u, std::string label) {
  if (!is_unitary(u, 1e-10))
    throw ValidationError("unitary_channel: U^dagger U != I");
  return QuantumChannel({u}, std::move(label));
}

QuantumChannel dephasing_channel(const HermitianObservable& obs) {
  std::vector<ComplexMatrix> ops;
  for (const auto& l : obs.levels()) ops.push_back(l.projector);
  return QuantumChannel(std::move(ops), "dephasing");
}

QuantumChannel probabilistic_channel(double p, const QuantumChannel& inner) {
  require_probability(p, "probabilistic_channel: p");
  const Eigen::Index n = inner.dim();
  std::vector<ComplexMatrix> ops;
  ops.push_back(std::sqrt(1.0 - p) * ComplexMatrix::Identity(n, n));
  for (const auto& k : inner.kraus_ops()) ops.push_back(std::sqrt(p) * k);
  std::ostringstream label;
  label << "probabilistic(" << p << ", " << inner.label() << ")";
  return QuantumChannel(std::move(ops), label.str());
}

QuantumChannel pump_channel(const HermitianObservable& basis,
                            std::size_t target_level, double q) {
  require_probability(q, "pump_channel: q");
  if (target_level >= basis.num_levels())
    throw ValidationError("pump_channel: target level out of range");
  const auto& target = basis.level(target_level);
  if (target.multiplicity != 1)
    throw ValidationError("pump_channel: target level must be rank 1");
  const ComplexVector t = target.eigenvectors.col(0);

  std::vector<ComplexMatrix> ops;
  ops.push_back(target.projector);
  for (std::size_t k = 0; k < basis.num_levels(); ++k) {
    if (k == target_level) continue;
    const auto& l = basis.level(k);
    ops.push_back(std::sqrt(1.0 - q) * l.projector);
    for (Eigen::Index c = 0; c < l.eigenvectors.cols(); ++c)
      ops.push_back(std::sqrt(q) * t * l.eigenvectors.col(c).adjoint());
  }
  std::ostringstream label;
  label << "pump(level " << target_level << ", q=" << q << ")";
  return QuantumChannel(std::move(ops), label.str());
}

QuantumChannel compose(const QuantumChannel& first,
                       const QuantumChannel& then) {
  if (first.dim() != then.dim())
    throw ValidationError("compose: dimension mismatch between '" +
                          first.label() + "' and '" + then.label() + "'");
  std::vector<ComplexMatrix> ops;
  ops.reserve(first.kraus_ops().size() * then.kraus_ops().size());
  for (const auto& k2 : then.kraus_ops())
    for (const auto& k1 : first.kraus_ops()) ops.push_back(k2 * k1);
  return QuantumChannel(std::move(ops), then.label() + " o " + first.label());
}

DensityOperator apply(const QuantumChannel& ch, const DensityOperator& rho) {
  if (rho.dim() != ch.dim())
    throw ValidationError("apply: channel '" + ch.label() +
                          "' dimension does not match the state");
  try {
    return DensityOperator(ch.apply_raw(rho.matrix()));
  } catch (const ValidationError& e) {
    throw ValidationError("apply: channel '" + ch.label() +
                          "' produced " + e.what());
  }
}

std::vector<double> level_populations(const HermitianObservable& basis,
                                      const ComplexMatrix& rho) {
  std::vector<double> pops;
  pops.reserve(basis.num_levels());
  for (const auto& l : basis.levels())
    pops.push_back((l.projector * rho).trace().real());
  return pops;
}

std::vector<DensityOperator> default_seeds(const HermitianObservable& basis) {
  std::vector<DensityOperator> seeds;
  seeds.push_back(DensityOperator::maximally_mixed(basis.dim()));
  for (const auto& l : basis.levels())
    seeds.emplace_back(l.projector / static_cast<double>(l.multiplicity));
  return seeds;
}

AsymptoticReport asymptotic_state(const QuantumChannel& ch,
                                  const HermitianObservable& basis,
                                  std::vector<DensityOperator> seeds,
                                  const AsymptoticOptions& opts) {
  if (basis.dim() != ch.dim())
    throw ValidationError("asymptotic_state: basis and channel dimensions differ");
  if (seeds.empty()) seeds = default_seeds(basis);
  if (seeds.size() < 2)
    throw ValidationError("asymptotic_state: at least two seeds are required");

  std::vector<ComplexMatrix> states;
  std::vector<std::vector<double>> pops;
  for (const auto& s : seeds) {
    if (s.dim() != ch.dim())
      throw ValidationError("asymptotic_state: seed dimension mismatch");
    states.push_back(s.matrix());
    pops.push_back(level_populations(basis, s.matrix()));
  }

  // Convergence is judged on the envelope (max over a window) of the
  // per-step change, since rotating coherences make single steps oscillate.
  constexpr int kWindow = 10;
  std::vector<double> envelope;
  std::vector<double> recent;
  double change = 0.0;
  int iter = 0;
  bool converged = false;
  while (iter < opts.max_iter) {
    ++iter;
    change = 0.0;
    for (std::size_t s = 0; s < states.size(); ++s) {
      states[s] = ch.apply_raw(states[s]);
      auto next = level_populations(basis, states[s]);
      for (std::size_t k = 0; k < next.size(); ++k)
        change = std::max(change, std::abs(next[k] - pops[s][k]));
      pops[s] = std::move(next);
    }
    if (change <= 1e-14 && iter > 1 && recent.back() <= 1e-14) {
      converged = true;
      break;
    }
    recent.push_back(change);
    if (recent.size() > kWindow) recent.erase(recent.begin());
    envelope.push_back(*std::max_element(recent.begin(), recent.end()));
    if (envelope.back() < opts.tol && envelope.size() > kWindow) {
      // Remaining distance ~ env * r / (1 - r) for contraction r per step.
      const double env = envelope.back();
      const double older = envelope[envelope.size() - 1 - kWindow];
      const double r = older > 0.0 ? std::pow(env / older, 1.0 / kWindow) : 0.0;
      if (env <= 1e-14 || (r < 1.0 && env * r / (1.0 - r) < opts.tol)) {
        converged = true;
        break;
      }
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "asymptotic_state: no convergence after " << opts.max_iter
        << " iterations (last change " << change << ")";
    throw ConvergenceError(msg.str(), change);
  }

  double spread = 0.0;
  for (std::size_t a = 0; a < pops.size(); ++a)
    for (std::size_t b = a + 1; b < pops.size(); ++b)
      for (std::size_t k = 0; k < pops[a].size(); ++k)
        spread = std::max(spread, std::abs(pops[a][k] - pops[b][k]));
  if (spread > 100.0 * opts.tol) {
    std::ostringstream msg;
    msg << "asymptotic_state: diagonal not seed-independent (spread " << spread
        << ")";
    throw SeedDependenceError(msg.str(), spread);
  }

  ComplexMatrix diag_part = ComplexMatrix::Zero(ch.dim(), ch.dim());
  for (const auto& l : basis.levels())
    diag_part += l.projector * states.front() * l.projector;

  AsymptoticReport report{
      DensityOperator(states.front()),
      ProbabilityVector::normalized(pops.front()),
      max_abs(ComplexMatrix(states.front() - diag_part)),
      spread,
      iter,
  };
  return report;
}

}  // namespace fluxtherm
