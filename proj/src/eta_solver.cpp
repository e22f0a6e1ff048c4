#include "fluxtherm/eta_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace fluxtherm {

std::string to_string(EtaKind kind) {
  switch (kind) {
    case EtaKind::nontrivial: return "nontrivial";
    case EtaKind::trivial_only: return "trivial_only";
    case EtaKind::degenerate_flat: return "degenerate_flat";
  }
  return "unknown";
}

std::string to_string(EnergyFlow flow) {
  switch (flow) {
    case EnergyFlow::extraction: return "extraction";
    case EnergyFlow::injection: return "injection";
    case EnergyFlow::neutral: return "neutral";
  }
  return "unknown";
}

namespace {

constexpr double kResidualTarget = 1e-11;
constexpr int kMaxBisections = 4000;

}  // namespace

EtaSolution solve_eta_star(const EnergyChangeDistribution& dist,
                           const EtaSolverOptions& opts) {
  if (dist.size() == 0) throw ValidationError("solve_eta_star: empty distribution");
  if (!(opts.tol > 0.0)) throw ValidationError("solve_eta_star: tol must be > 0");
  const double range = dist.range();
  double eta_max = 0.0;
  if (opts.eta_max) {
    eta_max = *opts.eta_max;
  } else if (range > 0.0) {
    eta_max = 1e3 / range;
  } else {
    eta_max = 1e3 / std::max(dist.max_abs_delta(), 1.0);
  }
  if (!(eta_max > 0.0) || !std::isfinite(eta_max))
    throw ValidationError("solve_eta_star: eta_max must be positive and finite");

  const auto g = [&dist](double eta) { return characteristic_minus_one(dist, eta); };

  EtaSolution sol;
  sol.slope_at_zero = -mean_energy_change(dist);
  sol.eta_max = eta_max;
  sol.g_at_minus_eta_max = g(-eta_max);
  sol.g_at_plus_eta_max = g(eta_max);

  if (std::abs(sol.slope_at_zero) <= 1e-12 * range) {
    sol.kind = EtaKind::degenerate_flat;
    sol.residual = 0.0;
    return sol;
  }

  // Work with magnitudes along the search direction: g(dir * x) < 0 for small
  // x > 0 and, by convexity, crosses zero at most once further out.
  const double dir = sol.slope_at_zero < 0.0 ? 1.0 : -1.0;
  const auto gx = [&](double x) { return g(dir * x); };
  int iterations = 0;
  double inner = 0.0;  // g <= 0
  double outer = 0.0;  // g > 0
  bool bracketed = false;

  double x = opts.tol;
  if (opts.initial_guess && std::isfinite(*opts.initial_guess) &&
      *opts.initial_guess * dir > 0.0 && std::abs(*opts.initial_guess) <= eta_max) {
    x = std::abs(*opts.initial_guess);
    if (gx(x) > 0.0) {
      outer = x;
      bracketed = true;
      double trial = x / 2.0;
      while (trial >= opts.tol && gx(trial) > 0.0) {
        outer = trial;
        trial /= 2.0;
        ++iterations;
      }
      inner = trial >= opts.tol ? trial : 0.0;
    }
  }

  if (!bracketed) {
    while (true) {
      ++iterations;
      if (gx(x) > 0.0) {
        outer = x;
        bracketed = true;
        break;
      }
      inner = x;
      if (x >= eta_max) break;
      x = std::min(2.0 * x, eta_max);
    }
  }

  if (!bracketed) {
    sol.kind = EtaKind::trivial_only;
    sol.iterations = iterations;
    sol.bracket_lo = std::min(0.0, dir * eta_max);
    sol.bracket_hi = std::max(0.0, dir * eta_max);
    sol.residual = 0.0;
    return sol;
  }

  double g_inner = gx(inner);
  double g_outer = gx(outer);
  for (int k = 0; k < kMaxBisections; ++k) {
    const double width = outer - inner;
    const bool narrow = width <= opts.tol * std::max(1.0, inner);
    const double best = std::min(std::abs(g_inner), std::abs(g_outer));
    if (narrow && best <= kResidualTarget) break;
    const double mid = inner + 0.5 * width;
    if (mid <= inner || mid >= outer) break;
    const double gm = gx(mid);
    ++iterations;
    if (gm > 0.0) {
      outer = mid;
      g_outer = gm;
    } else {
      inner = mid;
      g_inner = gm;
    }
  }

  const double best_x = std::abs(g_inner) <= std::abs(g_outer) ? inner : outer;
  sol.kind = EtaKind::nontrivial;
  sol.eta_star = dir * best_x;
  sol.residual = std::abs(gx(best_x));
  sol.bracket_lo = std::min(dir * inner, dir * outer);
  sol.bracket_hi = std::max(dir * inner, dir * outer);
  sol.iterations = iterations;
  return sol;
}

double asymptotic_characteristic(const ProbabilityVector& p_init,
                                 const ProbabilityVector& p_inf,
                                 const std::vector<double>& energies,
                                 double eta) {
  const std::size_t n = energies.size();
  if (p_init.size() != n || p_inf.size() != n)
    throw ValidationError("asymptotic_characteristic: size mismatch");
  double shift_in = -std::numeric_limits<double>::infinity();
  double shift_inf = shift_in;
  for (std::size_t k = 0; k < n; ++k) {
    if (p_init[k] > 0.0) shift_in = std::max(shift_in, eta * energies[k]);
    if (p_inf[k] > 0.0) shift_inf = std::max(shift_inf, -eta * energies[k]);
  }
  double a = 0.0;
  double b = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (p_init[k] > 0.0) a += p_init[k] * std::exp(eta * energies[k] - shift_in);
    if (p_inf[k] > 0.0) b += p_inf[k] * std::exp(-eta * energies[k] - shift_inf);
  }
  return std::exp(shift_in + shift_inf) * a * b;
}

RouthResult routh_hurwitz_variations(const std::array<double, 4>& c) {
  for (double v : c)
    if (!std::isfinite(v)) throw ValidationError("Routh table: non-finite coefficient");
  if (c[0] == 0.0) throw ValidationError("Routh table: leading coefficient is zero");
  double scale = 0.0;
  for (double v : c) scale = std::max(scale, std::abs(v));
  const double zero_tol = 1e-14 * scale;

  RouthResult out;
  auto pivot = [&](double value, double previous) {
    if (std::abs(value) <= zero_tol) {
      out.epsilon_substituted = true;
      return std::copysign(1e-30, previous);
    }
    return value;
  };

  auto& col = out.first_column;
  col[0] = c[0];
  col[1] = pivot(c[1], col[0]);
  col[2] = pivot((col[1] * c[2] - col[0] * c[3]) / col[1], col[1]);
  col[3] = pivot(c[3], col[2]);
  for (int k = 0; k < 3; ++k) {
    if (std::signbit(col[k]) == std::signbit(col[k + 1]))
      ++out.permanences;
    else
      ++out.variations;
  }
  return out;
}

CubicCertificate symmetric_qutrit_cubic(const ProbabilityVector& p_init,
                                        const ProbabilityVector& p_inf,
                                        double e_bar) {
  if (p_init.size() != 3 || p_inf.size() != 3)
    throw ValidationError("symmetric_qutrit_cubic: qutrit probabilities required");
  if (!(e_bar > 0.0)) throw ValidationError("symmetric_qutrit_cubic: e_bar must be > 0");

  // Levels ordered as energies (0, -e_bar, +e_bar).
  const double p1 = p_init[0], p2 = p_init[1], p3 = p_init[2];
  const double q1 = p_inf[0], q2 = p_inf[1], q3 = p_inf[2];

  CubicCertificate cert;
  cert.coefficients = {
      p2 * q3,
      p1 * q3 + p2 * q1 + p2 * q3,
      -(p1 * q2 + p3 * q1 + p3 * q2),
      -p3 * q2,
  };
  const auto& a = cert.coefficients;
  if (a[0] == 0.0 || a[3] == 0.0)
    throw ValidationError(
        "symmetric_qutrit_cubic: degenerate coefficients (P_2 P_3(inf) or "
        "P_3 P_2(inf) vanishes)");

  const auto routh = routh_hurwitz_variations(a);
  cert.routh_permanences = routh.permanences;
  cert.routh_variations = routh.variations;
  cert.routh_epsilon = routh.epsilon_substituted;

  Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
  companion(0, 0) = -a[1] / a[0];
  companion(0, 1) = -a[2] / a[0];
  companion(0, 2) = -a[3] / a[0];
  companion(1, 0) = 1.0;
  companion(2, 1) = 1.0;
  Eigen::EigenSolver<Eigen::Matrix3d> solver(companion, false);
  for (int k = 0; k < 3; ++k) cert.roots[k] = solver.eigenvalues()(k);

  const auto poly = [&a](double x) { return ((a[0] * x + a[1]) * x + a[2]) * x + a[3]; };
  const auto dpoly = [&a](double x) { return (3.0 * a[0] * x + 2.0 * a[1]) * x + a[2]; };

  int selected = -1;
  for (int k = 0; k < 3; ++k) {
    const auto r = cert.roots[k];
    if (r.real() > 0.0 && std::abs(r - 1.0) > 1e-9) {
      if (selected >= 0)
        throw std::runtime_error(
            "symmetric_qutrit_cubic: more than one root with positive real part");
      selected = k;
    }
  }
  if (selected < 0)
    throw std::runtime_error("symmetric_qutrit_cubic: no admissible positive root");
  const auto root = cert.roots[selected];
  if (std::abs(root.imag()) > 1e-9 * std::max(1.0, std::abs(root)))
    throw std::runtime_error("symmetric_qutrit_cubic: selected root is not real");

  double x = root.real();
  for (int k = 0; k < 8; ++k) {
    const double d = dpoly(x);
    if (d == 0.0) break;
    const double step = poly(x) / d;
    const double next = x - step;
    if (!(next > 0.0)) break;
    x = next;
    if (std::abs(step) <= 1e-17 * x) break;
  }
  cert.selected_root = {x, 0.0};
  cert.eta_star = -std::log(x) / e_bar;
  return cert;
}

EnergyChangeDistribution nv_pumped_distribution(double beta, double delta,
                                                double gamma_e_b) {
  // Levels m_S = +1, 0, -1. Every initial level ends in |0>, so dE = -E_i.
  const std::array<double, 3> energies{delta + gamma_e_b, 0.0, delta - gamma_e_b};
  double shift = -std::numeric_limits<double>::infinity();
  for (double e : energies) shift = std::max(shift, -beta * e);
  double z = 0.0;
  for (double e : energies) z += std::exp(-beta * e - shift);
  const double log_z = shift + std::log(z);
  std::vector<std::pair<double, double>> entries;
  for (double e : energies) entries.emplace_back(-e, -beta * e - log_z);
  return EnergyChangeDistribution::from_log_weights(std::move(entries));
}

double nv_sweep_eta_max(const EnergyChangeDistribution& dist, double beta) {
  double min_gap = std::numeric_limits<double>::infinity();
  for (const auto& e : dist.entries())
    if (e.delta_e != 0.0) min_gap = std::min(min_gap, std::abs(e.delta_e));
  double eta_max = 100.0 * beta;
  if (std::isfinite(min_gap)) eta_max = std::max(eta_max, 1e3 / min_gap);
  if (dist.range() > 0.0) eta_max = std::max(eta_max, 1e3 / dist.range());
  return eta_max;
}

std::vector<SweepPoint> nv_field_sweep(double beta, double delta,
                                       const std::vector<double>& b_grid,
                                       std::optional<double> eta_max) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw ValidationError("nv_field_sweep: delta must be > 0");
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw ValidationError("nv_field_sweep: beta must be > 0");

  std::vector<SweepPoint> out;
  out.reserve(b_grid.size());
  std::optional<double> guess;
  for (double b : b_grid) {
    if (!std::isfinite(b)) throw ValidationError("nv_field_sweep: non-finite field value");
    SweepPoint point;
    point.gamma_e_b = b;
    point.beta = beta;
    if (std::abs(b - delta) <= 1e-12 * delta) {
      point.level_crossing = true;
      point.solution.kind = EtaKind::degenerate_flat;
      guess.reset();
      out.push_back(point);
      continue;
    }
    const auto dist = nv_pumped_distribution(beta, delta, b);
    EtaSolverOptions opts;
    opts.initial_guess = guess;
    opts.eta_max = eta_max ? *eta_max : nv_sweep_eta_max(dist, beta);
    point.solution = solve_eta_star(dist, opts);
    if (point.solution.kind == EtaKind::nontrivial)
      guess = point.solution.eta_star;
    else
      guess.reset();
    out.push_back(point);
  }
  return out;
}

EnergyFlow energy_extraction_indicator(const EtaSolution& sol, double mean_de) {
  if (sol.kind != EtaKind::nontrivial) return EnergyFlow::neutral;
  if (sol.residual > 1e-8)
    throw ValidationError("energy_extraction_indicator: solution residual above 1e-8");
  const double eta = *sol.eta_star;
  if (eta * mean_de < -1e-9) {
    std::ostringstream msg;
    msg << "energy_extraction_indicator: eta* <dE> = " << eta * mean_de
        << " is negative, contradicting Jensen's inequality";
    throw std::logic_error(msg.str());
  }
  return eta < 0.0 ? EnergyFlow::extraction : EnergyFlow::injection;
}

}  // namespace fluxtherm
