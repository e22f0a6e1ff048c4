#include "fluxtherm/hypothesis_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "fluxtherm/channels.hpp"

namespace fluxtherm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Step 0 is excluded: P_{f|i}(0) = delta_{fi} for every process.
std::size_t window_start(const TPMRecord& record, const WindowOptions& window) {
  const int first = std::max(1, window.from_step.value_or(1));
  std::size_t t = 0;
  while (t < record.num_times() && record.steps[t] < first) ++t;
  return t;
}

// Onset: first index after which every deviation stays within tol.
HypothesisVerdict make_verdict(std::string name, const TPMRecord& record,
                               std::vector<double> devs, double tol,
                               const WindowOptions& window,
                               bool require_whole_window) {
  HypothesisVerdict v;
  v.name = std::move(name);
  v.tolerance = tol;
  v.deviations = std::move(devs);
  const std::size_t start = window_start(record, window);
  const std::size_t end = v.deviations.size();
  if (start >= end) {
    v.flags.push_back("empty evaluation window");
    return v;
  }

  std::size_t onset = end;
  while (onset > start && v.deviations[onset - 1] <= tol) --onset;
  if (onset < end) v.onset_step = record.steps[onset];

  const bool whole = require_whole_window || window.from_step.has_value();
  v.passes = whole ? onset == start : onset < end;
  const std::size_t from = v.passes ? onset : start;
  v.max_deviation = 0.0;
  for (std::size_t t = from; t < end; ++t)
    v.max_deviation = std::max(v.max_deviation, v.deviations[t]);
  if (!v.passes && whole) v.onset_step.reset();
  return v;
}

}  // namespace

HypothesisVerdict check_hypothesis_I_star(const TPMRecord& record, double tol,
                                          const WindowOptions& window) {
  const std::size_t n = record.num_levels();
  std::vector<double> devs;
  devs.reserve(record.num_times());
  for (const auto& m : record.cond) {
    double dev = 0.0;
    for (std::size_t f = 0; f < n; ++f)
      dev = std::max(dev, m.row(f).maxCoeff() - m.row(f).minCoeff());
    devs.push_back(dev);
  }
  return make_verdict("hypothesis_I_star", record, std::move(devs), tol, window,
                      false);
}

HypothesisVerdict check_hypothesis_I(const TPMRecord& record, double tol,
                                     const WindowOptions& window) {
  const std::size_t n = record.num_levels();
  std::vector<double> devs;
  devs.reserve(record.num_times());
  for (const auto& m : record.cond) {
    double dev = 0.0;
    for (std::size_t f = 0; f < n; ++f) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t i = 0; i < n; ++i) {
        if (i == f) continue;
        lo = std::min(lo, m(f, i));
        hi = std::max(hi, m(f, i));
      }
      if (hi >= lo) dev = std::max(dev, hi - lo);
    }
    devs.push_back(dev);
  }
  auto v = make_verdict("hypothesis_I", record, std::move(devs), tol, window,
                        false);
  if (n < 3)
    v.flags.push_back("vacuous: fewer than three levels leave one i != f per f");
  return v;
}

HypothesisVerdict check_dbc(const TPMRecord& record,
                            const ProbabilityVector& p_inf, double tol,
                            const WindowOptions& window) {
  const std::size_t n = record.num_levels();
  if (p_inf.size() != n) throw ValidationError("check_dbc: P(inf) has wrong size");
  std::vector<double> devs;
  devs.reserve(record.num_times());
  int skipped = 0;
  for (const auto& m : record.cond) {
    double dev = 0.0;
    skipped = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = i + 1; f < n; ++f) {
        if (p_inf[i] <= 1e-15 || p_inf[f] <= 1e-15) {
          ++skipped;
          continue;
        }
        dev = std::max(dev, std::abs(m(f, i) * p_inf[i] - m(i, f) * p_inf[f]));
      }
    }
    devs.push_back(dev);
  }
  // Detailed balance must hold at every recorded time, not only eventually.
  auto v = make_verdict("detailed_balance", record, std::move(devs), tol, window,
                        true);
  if (skipped > 0) {
    std::ostringstream msg;
    msg << skipped << " level pair(s) skipped: P(inf) vanishes on one side";
    v.flags.push_back(msg.str());
  }
  return v;
}

double FTable::spread(std::size_t t) const {
  const RealMatrix& m = values.at(t);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      if (std::isnan(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  return hi >= lo ? hi - lo : 0.0;
}

FTable extract_F(const TPMRecord& record, const ProbabilityVector& p_inf) {
  const std::size_t n = record.num_levels();
  if (p_inf.size() != n) throw ValidationError("extract_F: P(inf) has wrong size");
  FTable table;
  table.steps = record.steps;
  for (const auto& m : record.cond) {
    RealMatrix f_values(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < n; ++f) {
        if (i != f) {
          f_values(i, f) = p_inf[f] > 1e-15 ? m(f, i) / p_inf[f] : kNaN;
        } else {
          const double away = 1.0 - p_inf[i];
          f_values(i, i) = away > 1e-15 ? (1.0 - m(i, i)) / away : kNaN;
        }
      }
    }
    table.values.push_back(std::move(f_values));
  }
  return table;
}

TPMRecord exponential_dbc_record(const std::vector<double>& energies,
                                 const ProbabilityVector& p_inf, double tau_d,
                                 const std::vector<int>& steps) {
  const std::size_t n = energies.size();
  if (p_inf.size() != n) throw ValidationError("exponential_dbc_record: size mismatch");
  if (!(tau_d > 0.0)) throw ValidationError("exponential_dbc_record: tau_D must be > 0");
  TPMRecord record;
  record.energies = energies;
  record.steps = steps;
  for (int s : steps) {
    const double decay = std::exp(-static_cast<double>(s) / tau_d);
    RealMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t f = 0; f < n; ++f)
        m(f, i) = p_inf[f] * (1.0 - decay) + (i == f ? decay : 0.0);
    record.cond.push_back(std::move(m));
  }
  return record;
}

TPMRecord factorized_record(const std::vector<double>& energies,
                            const ProbabilityVector& p_inf,
                            const std::vector<double>& fbar,
                            const std::vector<int>& steps) {
  const std::size_t n = energies.size();
  if (p_inf.size() != n || fbar.size() != steps.size())
    throw ValidationError("factorized_record: size mismatch");
  TPMRecord record;
  record.energies = energies;
  record.steps = steps;
  for (double fb : fbar) {
    RealMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      double off = 0.0;
      for (std::size_t f = 0; f < n; ++f) {
        if (f == i) continue;
        m(f, i) = fb * p_inf[f];
        off += m(f, i);
      }
      m(i, i) = 1.0 - off;
    }
    record.cond.push_back(std::move(m));
  }
  return record;
}

DbcFit fit_exponential_dbc_model(const TPMRecord& record,
                                 const DbcFitOptions& opts) {
  const std::size_t n = record.num_levels();
  if (record.num_times() < 5)
    throw ValidationError("fit_exponential_dbc_model: at least 5 time points required");
  if (opts.initial_level && *opts.initial_level >= n)
    throw ValidationError("fit_exponential_dbc_model: initial level out of range");

  std::vector<std::size_t> columns;
  if (opts.initial_level) {
    columns.push_back(*opts.initial_level);
  } else {
    for (std::size_t i = 0; i < n; ++i) columns.push_back(i);
  }

  ProbabilityVector p_inf;
  if (opts.p_inf) {
    if (opts.p_inf->size() != n)
      throw ValidationError("fit_exponential_dbc_model: P(inf) has wrong size");
    p_inf = *opts.p_inf;
  } else {
    const RealMatrix& last = record.cond.back();
    std::vector<double> mean(n, 0.0);
    for (std::size_t i : columns)
      for (std::size_t f = 0; f < n; ++f) mean[f] += last(f, i) / columns.size();
    p_inf = ProbabilityVector::normalized(std::move(mean));
  }

  struct Sample {
    double step;
    double target;
    double delta_minus_p;  // delta_{if} - P_f(inf)
    double p;
  };
  std::vector<Sample> samples;
  for (std::size_t t = 0; t < record.num_times(); ++t)
    for (std::size_t i : columns)
      for (std::size_t f = 0; f < n; ++f)
        samples.push_back({static_cast<double>(record.steps[t]), record.cond[t](f, i),
                           (i == f ? 1.0 : 0.0) - p_inf[f], p_inf[f]});

  const auto ssr = [&samples](double tau) {
    double s = 0.0;
    for (const auto& x : samples) {
      const double r = x.p + x.delta_minus_p * std::exp(-x.step / tau) - x.target;
      s += r * r;
    }
    return s;
  };

  // Coarse scan in log(tau), then Brent inside the best cell.
  const double lo = std::log(1e-3);
  const double hi = std::log(1e3);
  constexpr int kGrid = 241;
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kGrid; ++k) {
    const double u = lo + (hi - lo) * k / (kGrid - 1);
    const double v = ssr(std::exp(u));
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  if (best == 0 || best == kGrid - 1)
    throw ConvergenceError(
        "fit_exponential_dbc_model: tau_D bracket [1e-3, 1e3] steps exhausted",
        best_val);
  const double step = (hi - lo) / (kGrid - 1);
  const auto [u_best, f_best] = boost::math::tools::brent_find_minima(
      [&ssr](double u) { return ssr(std::exp(u)); }, lo + (best - 1) * step,
      lo + (best + 1) * step, std::numeric_limits<double>::digits / 2);
  double tau = std::exp(u_best);
  double value = f_best;

  // Gauss-Newton polish; Brent alone stops near sqrt(machine epsilon).
  for (int it = 0; it < 20; ++it) {
    double jtj = 0.0;
    double jtr = 0.0;
    for (const auto& x : samples) {
      const double decay = std::exp(-x.step / tau);
      const double r = x.p + x.delta_minus_p * decay - x.target;
      const double j = x.delta_minus_p * decay * x.step / (tau * tau);
      jtj += j * j;
      jtr += j * r;
    }
    if (jtj <= 0.0) break;
    const double candidate = tau - jtr / jtj;
    if (!(candidate > 0.0)) break;
    const double cand_value = ssr(candidate);
    if (!(cand_value < value)) break;
    tau = candidate;
    value = cand_value;
  }

  return DbcFit{p_inf, tau, std::sqrt(value / samples.size())};
}

}  // namespace fluxtherm
