#include "fluxtherm/tpm_statistics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace fluxtherm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// exp() overflows just above 709.78 and underflows to zero below -745.
constexpr double kSafeExponent = 700.0;

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// True when sum p exp(-eta dE) can be evaluated term by term from the stored
// linear-scale probabilities without overflow or losing an underflowed weight.
bool direct_evaluation_safe(const EnergyChangeDistribution& dist, double eta) {
  for (const auto& e : dist.entries()) {
    const double x = -eta * e.delta_e;
    if (x > kSafeExponent) return false;
    if (e.prob == 0.0 && e.log_prob != kNegInf &&
        e.log_prob + x > -kSafeExponent)
      return false;
  }
  return true;
}

std::string fmt17(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

void TPMRecord::validate(double sum_tol, double identity_tol) const {
  const std::size_t n = energies.size();
  if (n == 0) throw ValidationError("TPM record has no energy levels");
  if (steps.size() != cond.size())
    throw ValidationError("TPM record: steps and matrices differ in length");
  if (initial_probs && initial_probs->size() != n)
    throw ValidationError("TPM record: initial probabilities have wrong size");
  for (std::size_t t = 0; t < cond.size(); ++t) {
    const RealMatrix& m = cond[t];
    if (static_cast<std::size_t>(m.rows()) != n ||
        static_cast<std::size_t>(m.cols()) != n)
      throw ValidationError("TPM record: conditional matrix has wrong shape");
    for (std::size_t i = 0; i < n; ++i) {
      const double col = m.col(i).sum();
      if (std::abs(col - 1.0) > sum_tol) {
        std::ostringstream msg;
        msg << "TPM record: column i=" << i << " at step " << steps[t]
            << " sums to " << col;
        throw ValidationError(msg.str());
      }
      for (std::size_t f = 0; f < n; ++f) {
        const double p = m(f, i);
        if (!(p >= -1e-12 && p <= 1.0 + 1e-12))
          throw ValidationError("TPM record: entry outside [0, 1]");
      }
    }
    if (steps[t] == 0 &&
        max_abs(RealMatrix(m - RealMatrix::Identity(n, n))) > identity_tol)
      throw ValidationError("TPM record: step-0 matrix is not the identity");
  }
}

// ---------------------------------------------------------------------------

EnergyChangeDistribution EnergyChangeDistribution::build(
    std::vector<EnergyChange> raw) {
  std::erase_if(raw, [](const EnergyChange& e) {
    return e.prob == 0.0 && e.log_prob == kNegInf;
  });
  if (raw.empty()) throw ValidationError("energy-change distribution is empty");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& e : raw) {
    if (!std::isfinite(e.delta_e))
      throw ValidationError("energy change must be finite");
    if (e.prob < 0.0 || std::isnan(e.log_prob))
      throw ValidationError("energy-change probabilities must be non-negative");
    lo = std::min(lo, e.delta_e);
    hi = std::max(hi, e.delta_e);
  }
  const double merge_tol = 1e-12 * (hi - lo);
  std::sort(raw.begin(), raw.end(),
            [](const EnergyChange& a, const EnergyChange& b) {
              return a.delta_e < b.delta_e;
            });

  EnergyChangeDistribution out;
  for (const auto& e : raw) {
    if (!out.entries_.empty() &&
        e.delta_e - out.entries_.back().delta_e <= merge_tol) {
      auto& last = out.entries_.back();
      last.prob += e.prob;
      last.log_prob = log_add(last.log_prob, e.log_prob);
    } else {
      out.entries_.push_back(e);
    }
  }

  double log_total = kNegInf;
  for (const auto& e : out.entries_) log_total = log_add(log_total, e.log_prob);
  if (std::abs(std::expm1(log_total)) > 1e-9) {
    std::ostringstream msg;
    msg << "energy-change probabilities sum to " << std::exp(log_total);
    throw ValidationError(msg.str());
  }
  return out;
}

EnergyChangeDistribution EnergyChangeDistribution::from_probabilities(
    std::vector<std::pair<double, double>> entries) {
  std::vector<EnergyChange> raw;
  raw.reserve(entries.size());
  for (const auto& [de, p] : entries) {
    if (p < 0.0) throw ValidationError("negative probability in distribution");
    raw.push_back({de, p, p > 0.0 ? std::log(p) : kNegInf});
  }
  return build(std::move(raw));
}

EnergyChangeDistribution EnergyChangeDistribution::from_log_weights(
    std::vector<std::pair<double, double>> entries) {
  std::vector<EnergyChange> raw;
  raw.reserve(entries.size());
  for (const auto& [de, lp] : entries) {
    if (lp > 1e-12) throw ValidationError("log probability above zero");
    raw.push_back({de, std::exp(lp), lp});
  }
  return build(std::move(raw));
}

double EnergyChangeDistribution::range() const {
  if (entries_.empty()) return 0.0;
  return entries_.back().delta_e - entries_.front().delta_e;
}

double EnergyChangeDistribution::max_abs_delta() const {
  double m = 0.0;
  for (const auto& e : entries_) m = std::max(m, std::abs(e.delta_e));
  return m;
}

// ---------------------------------------------------------------------------

ProbabilityVector initial_probabilities(const DensityOperator& rho0,
                                        const HermitianObservable& h) {
  if (rho0.dim() != h.dim())
    throw ValidationError("initial_probabilities: dimension mismatch");
  return ProbabilityVector::normalized(level_populations(h, rho0.matrix()));
}

TPMRecord conditional_probabilities(const QuantumChannel& step_channel,
                                    const HermitianObservable& h,
                                    int n_steps) {
  if (step_channel.dim() != h.dim())
    throw ValidationError(
        "conditional_probabilities: channel and observable dimensions differ");
  if (n_steps < 0) throw ValidationError("n_steps must be non-negative");
  const std::size_t n = h.num_levels();

  TPMRecord record;
  record.energies = h.energies();
  record.steps.resize(n_steps + 1);
  record.cond.assign(n_steps + 1, RealMatrix::Zero(n, n));
  for (int t = 0; t <= n_steps; ++t) record.steps[t] = t;

  for (std::size_t i = 0; i < n; ++i) {
    const auto& li = h.level(i);
    ComplexMatrix state = li.projector / static_cast<double>(li.multiplicity);
    for (int t = 0; t <= n_steps; ++t) {
      if (t == 0) {
        record.cond[0](i, i) = 1.0;
        continue;
      }
      state = step_channel.apply_raw(state);
      const auto pops = level_populations(h, state);
      for (std::size_t f = 0; f < n; ++f) {
        double p = pops[f];
        // clip round-off only; genuine violations are left for validate()
        if (p < 0.0 && p > -1e-12) p = 0.0;
        if (p > 1.0 && p < 1.0 + 1e-12) p = 1.0;
        record.cond[t](f, i) = p;
      }
    }
  }
  return record;
}

EnergyChangeDistribution energy_change_distribution(
    const TPMRecord& record, std::size_t t_index,
    const ProbabilityVector& initial_probs) {
  if (t_index >= record.cond.size())
    throw ValidationError("energy_change_distribution: time index out of range");
  const std::size_t n = record.num_levels();
  if (initial_probs.size() != n)
    throw ValidationError("energy_change_distribution: P_i has wrong size");
  std::vector<std::pair<double, double>> entries;
  entries.reserve(n * n);
  const RealMatrix& m = record.cond[t_index];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < n; ++f)
      entries.emplace_back(record.energies[f] - record.energies[i],
                           initial_probs[i] * std::max(m(f, i), 0.0));
  return EnergyChangeDistribution::from_probabilities(std::move(entries));
}

EnergyChangeDistribution energy_change_distribution(const TPMRecord& record,
                                                    std::size_t t_index) {
  if (!record.initial_probs)
    throw ValidationError(
        "energy_change_distribution: record has no initial probabilities");
  return energy_change_distribution(record, t_index, *record.initial_probs);
}

EnergyChangeDistribution stationary_distribution(
    const std::vector<double>& energies, const ProbabilityVector& p_init,
    const ProbabilityVector& p_inf) {
  const std::size_t n = energies.size();
  if (p_init.size() != n || p_inf.size() != n)
    throw ValidationError("stationary_distribution: size mismatch");
  std::vector<std::pair<double, double>> entries;
  entries.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < n; ++f)
      entries.emplace_back(energies[f] - energies[i], p_init[i] * p_inf[f]);
  return EnergyChangeDistribution::from_probabilities(std::move(entries));
}

double log_characteristic_function(const EnergyChangeDistribution& dist,
                                   double eta) {
  double shift = kNegInf;
  for (const auto& e : dist.entries())
    shift = std::max(shift, e.log_prob - eta * e.delta_e);
  double sum = 0.0;
  for (const auto& e : dist.entries())
    sum += std::exp(e.log_prob - eta * e.delta_e - shift);
  return shift + std::log(sum);
}

double characteristic_function(const EnergyChangeDistribution& dist,
                               double eta) {
  if (!direct_evaluation_safe(dist, eta))
    return std::exp(log_characteristic_function(dist, eta));
  double g = 0.0;
  for (const auto& e : dist.entries())
    g += e.prob * std::exp(-eta * e.delta_e);
  return g;
}

double characteristic_minus_one(const EnergyChangeDistribution& dist,
                                double eta) {
  // Evaluated on the normalised distribution, so g(0) = 0 exactly.
  if (!direct_evaluation_safe(dist, eta)) {
    double log_total = kNegInf;
    for (const auto& e : dist.entries()) log_total = log_add(log_total, e.log_prob);
    return std::expm1(log_characteristic_function(dist, eta) - log_total);
  }
  double total = 0.0;
  double g = 0.0;
  for (const auto& e : dist.entries()) {
    g += e.prob * std::expm1(-eta * e.delta_e);
    total += e.prob;
  }
  return g / total;
}

double mean_energy_change(const EnergyChangeDistribution& dist) {
  double m = 0.0;
  for (const auto& e : dist.entries()) m += e.prob * e.delta_e;
  return m;
}

std::vector<double> characteristic_trace(const TPMRecord& record,
                                         const ProbabilityVector& p_init,
                                         double eta) {
  std::vector<double> out;
  out.reserve(record.num_times());
  for (std::size_t t = 0; t < record.num_times(); ++t)
    out.push_back(characteristic_function(
        energy_change_distribution(record, t, p_init), eta));
  return out;
}

// ---------------------------------------------------------------------------

void write_tpm_csv(std::ostream& os, const TPMRecord& record) {
  os << "energies";
  for (double e : record.energies) os << ',' << fmt17(e);
  os << '\n' << "initial_probs";
  if (record.initial_probs)
    for (double p : record.initial_probs->values()) os << ',' << fmt17(p);
  os << '\n' << "step,i,f,P_f_given_i\n";
  const std::size_t n = record.num_levels();
  for (std::size_t t = 0; t < record.num_times(); ++t)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t f = 0; f < n; ++f)
        os << record.steps[t] << ',' << i << ',' << f << ','
           << fmt17(record.cond[t](f, i)) << '\n';
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw ValidationError("malformed number '" + s + "'");
  return v;
}

}  // namespace

TPMRecord read_tpm_csv(std::istream& is) {
  TPMRecord record;
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("TPM CSV: missing energies row");
  auto cells = split_csv(line);
  if (cells.empty() || cells[0] != "energies")
    throw ValidationError("TPM CSV: first row must start with 'energies'");
  for (std::size_t k = 1; k < cells.size(); ++k)
    record.energies.push_back(parse_double(cells[k]));
  const std::size_t n = record.energies.size();

  if (!std::getline(is, line)) throw ValidationError("TPM CSV: missing initial_probs row");
  cells = split_csv(line);
  if (cells.empty() || cells[0] != "initial_probs")
    throw ValidationError("TPM CSV: second row must start with 'initial_probs'");
  if (cells.size() > 1) {
    std::vector<double> p;
    for (std::size_t k = 1; k < cells.size(); ++k) p.push_back(parse_double(cells[k]));
    record.initial_probs = ProbabilityVector(std::move(p));
  }
  if (!std::getline(is, line) || line != "step,i,f,P_f_given_i")
    throw ValidationError("TPM CSV: missing column header");

  while (std::getline(is, line)) {
    if (line.empty()) continue;
    cells = split_csv(line);
    if (cells.size() != 4) throw ValidationError("TPM CSV: row must have 4 columns");
    const int step = std::stoi(cells[0]);
    const auto i = static_cast<std::size_t>(std::stoul(cells[1]));
    const auto f = static_cast<std::size_t>(std::stoul(cells[2]));
    if (i >= n || f >= n) throw ValidationError("TPM CSV: level index out of range");
    if (record.steps.empty() || record.steps.back() != step) {
      record.steps.push_back(step);
      record.cond.push_back(RealMatrix::Zero(n, n));
    }
    record.cond.back()(f, i) = parse_double(cells[3]);
  }
  record.validate();
  return record;
}

}  // namespace fluxtherm
