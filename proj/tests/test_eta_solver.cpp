#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fluxtherm/eta_solver.hpp"

using namespace fluxtherm;

namespace {

ProbabilityVector random_probs(std::mt19937_64& rng, int n) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) total += (x = ex(rng) + 0.01);
  for (auto& x : w) x /= total;
  return ProbabilityVector::normalized(w);
}

// Independent long-double evaluation of G for a product law.
long double product_g(const std::vector<double>& e, const ProbabilityVector& p,
                      const ProbabilityVector& q, long double eta) {
  long double a = 0.0L;
  long double b = 0.0L;
  for (std::size_t k = 0; k < e.size(); ++k) {
    a += p[k] * std::exp(eta * e[k]);
    b += q[k] * std::exp(-eta * e[k]);
  }
  return a * b;
}

// Grid-scan oracle: first sign change of G - 1 away from zero, then bisection.
double scan_root(const std::vector<double>& e, const ProbabilityVector& p,
                 const ProbabilityVector& q, double lo, double hi, double spacing) {
  const auto g = [&](double x) { return product_g(e, p, q, x) - 1.0L; };
  double prev = lo;
  long double gprev = g(prev);
  for (double x = lo + spacing; x <= hi; x += spacing) {
    const long double gx = g(x);
    if (std::abs(x) > spacing && std::abs(prev) > spacing && (gx > 0) != (gprev > 0)) {
      double a = prev, b = x;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        if ((g(m) > 0) == (gprev > 0)) a = m; else b = m;
      }
      return 0.5 * (a + b);
    }
    prev = x;
    gprev = gx;
  }
  return 0.0;
}

// NV reduced equation sum_i P_i e^{eta E_i} = 1 with thermal P_i.
double nv_oracle(double beta, double delta, double b) {
  const long double e[3] = {delta + b, 0.0L, delta - b};
  long double emin = std::min({e[0], e[1], e[2]});
  long double z = 0.0L, w[3];
  for (int k = 0; k < 3; ++k) z += (w[k] = std::exp(-beta * (e[k] - emin)));
  const auto f = [&](long double eta) {
    long double s = 0.0L;
    for (int k = 0; k < 3; ++k) s += w[k] / z * std::exp(eta * e[k]);
    return s - 1.0L;
  };
  // Slope at zero is <E>; the root sits on the side where f returns to zero.
  long double mean = 0.0L;
  for (int k = 0; k < 3; ++k) mean += w[k] / z * e[k];
  const long double dir = mean < 0 ? 1.0L : -1.0L;
  long double a = 1e-9L, c = 1e-9L;
  while (f(dir * c) < 0) { a = c; c *= 2; }
  for (int it = 0; it < 300; ++it) {
    const long double m = 0.5L * (a + c);
    if (f(dir * m) < 0) a = m; else c = m;
  }
  return static_cast<double>(dir * 0.5L * (a + c));
}

}  // namespace

TEST_CASE("solver agrees with a grid scan on random qutrits") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    std::vector<double> e{u(rng), u(rng), u(rng)};
    const auto p = random_probs(rng, 3);
    const auto q = random_probs(rng, 3);
    EtaSolverOptions opts;
    opts.eta_max = 10.0;
    const auto sol = solve_eta_star(stationary_distribution(e, p, q), opts);
    const double oracle = scan_root(e, p, q, -10.0, 10.0, 1e-4);
    if (oracle == 0.0) {
      CHECK(sol.kind != EtaKind::nontrivial);
      continue;
    }
    REQUIRE(sol.kind == EtaKind::nontrivial);
    CHECK(std::abs(sol.value() - oracle) < 1e-3);
    CHECK(sol.residual < 1e-10);
  }
}

TEST_CASE("thermal input and mixed asymptote give eta* = beta") {
  const std::vector<double> e{-0.7, 0.1, 1.3};
  const double beta = 0.7;
  std::vector<double> w;
  double z = 0.0;
  for (double x : e) z += std::exp(-beta * x);
  for (double x : e) w.push_back(std::exp(-beta * x) / z);
  const auto p = ProbabilityVector::normalized(w);
  const ProbabilityVector q({1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto sol = solve_eta_star(stationary_distribution(e, p, q));
  REQUIRE(sol.kind == EtaKind::nontrivial);
  CHECK(std::abs(sol.value() - beta) < 1e-9);
  CHECK(sol.slope_at_zero < 0.0);
}

TEST_CASE("one-signed energy changes have only the trivial root") {
  const auto d = EnergyChangeDistribution::from_probabilities({{0.0, 0.5}, {1.0, 0.5}});
  const auto sol = solve_eta_star(d);
  CHECK(sol.kind == EtaKind::trivial_only);
  CHECK_FALSE(sol.eta_star.has_value());
  CHECK(sol.value() == 0.0);
  CHECK(sol.eta_max == doctest::Approx(1e3));
  CHECK(sol.g_at_minus_eta_max > 0.0);
}

TEST_CASE("zero mean change is flat at the origin") {
  const auto d = EnergyChangeDistribution::from_probabilities({{-1.0, 0.5}, {1.0, 0.5}});
  CHECK(solve_eta_star(d).kind == EtaKind::degenerate_flat);
}

TEST_CASE("solver input checks") {
  const auto d = EnergyChangeDistribution::from_probabilities({{-1.0, 0.3}, {1.0, 0.7}});
  EtaSolverOptions opts;
  opts.eta_max = 0.0;
  CHECK_THROWS_AS(solve_eta_star(d, opts), ValidationError);
  opts.eta_max = -1.0;
  CHECK_THROWS_AS(solve_eta_star(d, opts), ValidationError);
}

TEST_CASE("two-point law root") {
  // 0.3 e^{eta} + 0.7 e^{-eta} = 1  ->  e^{eta} = 7/3.
  const auto d = EnergyChangeDistribution::from_probabilities({{-1.0, 0.3}, {1.0, 0.7}});
  const auto sol = solve_eta_star(d);
  REQUIRE(sol.kind == EtaKind::nontrivial);
  CHECK(sol.value() == doctest::Approx(std::log(7.0 / 3.0)).epsilon(1e-12));
  EtaSolverOptions warm;
  warm.initial_guess = 0.8;
  CHECK(solve_eta_star(d, warm).value() == doctest::Approx(std::log(7.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("Routh table") {
  const auto stable = routh_hurwitz_variations({1.0, 2.0, 3.0, 4.0});
  CHECK(stable.first_column[2] == doctest::Approx(1.0));
  CHECK(stable.first_column[3] == doctest::Approx(4.0));
  CHECK(stable.permanences == 3);
  CHECK(stable.variations == 0);
  const auto zero_pivot = routh_hurwitz_variations({1.0, 1.0, -1.0, -1.0});
  CHECK(zero_pivot.epsilon_substituted);
  CHECK(zero_pivot.variations == 1);
  CHECK_THROWS(routh_hurwitz_variations({0.0, 1.0, 1.0, 1.0}));
}

TEST_CASE("symmetric qutrit cubic") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 30; ++k) {
    const double e_bar = 0.3 + 0.1 * k;
    const auto p = random_probs(rng, 3);
    const auto q = random_probs(rng, 3);
    const std::vector<double> e{0.0, -e_bar, e_bar};
    const auto cert = symmetric_qutrit_cubic(p, q, e_bar);
    CHECK(cert.routh_variations == 1);

    // Quartic x^2 (A(x) B(x) - 1) with A = P1 + P2 x + P3 / x and
    // B = Q1 + Q2 / x + Q3 x, divided by (x - 1).
    const double quartic[5] = {p[1] * q[2],
                               p[0] * q[2] + p[1] * q[0],
                               p[0] * q[0] + p[1] * q[1] + p[2] * q[2] - 1.0,
                               p[0] * q[1] + p[2] * q[0],
                               p[2] * q[1]};
    double cubic[4];
    cubic[0] = quartic[0];
    for (int j = 1; j < 4; ++j) cubic[j] = quartic[j] + cubic[j - 1];
    CHECK(std::abs(quartic[4] + cubic[3]) < 1e-14);
    const double scale = cert.coefficients[0] / cubic[0];
    for (int j = 0; j < 4; ++j)
      CHECK(cert.coefficients[j] == doctest::Approx(scale * cubic[j]).epsilon(1e-12));

    const auto sol = solve_eta_star(stationary_distribution(e, p, q));
    if (sol.kind == EtaKind::nontrivial) CHECK(std::abs(cert.eta_star - sol.value()) < 1e-9);
  }
}

TEST_CASE("pumped NV field sweep") {
  const std::vector<double> grid{0.25, 0.5, 0.999, 1.0, 1.001, 1.5, 2.0, 10.0, 1000.0};
  const auto pts = nv_field_sweep(1.0, 1.0, grid);
  REQUIRE(pts.size() == grid.size());
  for (const auto& pt : pts) {
    if (pt.gamma_e_b < 1.0) CHECK(pt.solution.kind == EtaKind::trivial_only);
  }
  CHECK(pts[3].level_crossing);
  CHECK(pts[3].solution.kind == EtaKind::degenerate_flat);
  for (std::size_t k : {4u, 5u, 6u, 7u, 8u}) {
    REQUIRE(pts[k].solution.kind == EtaKind::nontrivial);
    const double oracle = nv_oracle(1.0, 1.0, grid[k]);
    CHECK(pts[k].solution.value() == doctest::Approx(oracle).epsilon(1e-9));
  }
  CHECK(pts[4].solution.value() < -10.0);
  CHECK(pts[8].solution.value() == doctest::Approx(2000.0 / 1001.0).epsilon(1e-9));
}

TEST_CASE("field sweep varies smoothly away from the crossing") {
  const auto max_jump = [](int n) {
    std::vector<double> grid;
    for (int k = 0; k < n; ++k) grid.push_back(1.5 + 1.5 * k / (n - 1));
    const auto pts = nv_field_sweep(1.0, 1.0, grid);
    double jump = 0.0;
    for (int k = 1; k < n; ++k)
      jump = std::max(jump, std::abs(pts[k].solution.value() - pts[k - 1].solution.value()));
    return jump;
  };
  const double coarse = max_jump(101);
  const double fine = max_jump(201);
  // First-order scaling; the curvature of eta*(B) keeps the ratio near 1/2.
  CHECK(fine / coarse < 0.51);
  CHECK(fine / coarse > 0.49);
}

TEST_CASE("energy flow indicator") {
  const auto d = EnergyChangeDistribution::from_probabilities({{-1.0, 0.3}, {1.0, 0.7}});
  const auto sol = solve_eta_star(d);
  CHECK(energy_extraction_indicator(sol, mean_energy_change(d)) == EnergyFlow::injection);
  const auto mirrored = EnergyChangeDistribution::from_probabilities({{1.0, 0.3}, {-1.0, 0.7}});
  const auto neg = solve_eta_star(mirrored);
  CHECK(neg.value() < 0.0);
  CHECK(energy_extraction_indicator(neg, mean_energy_change(mirrored)) == EnergyFlow::extraction);
  CHECK_THROWS_AS(energy_extraction_indicator(sol, -1.0), std::logic_error);
  EtaSolution loose = sol;
  loose.residual = 1e-6;
  CHECK_THROWS_AS(energy_extraction_indicator(loose, 0.4), ValidationError);
  EtaSolution trivial;
  CHECK(energy_extraction_indicator(trivial, 0.0) == EnergyFlow::neutral);
}

TEST_CASE("asymptotic characteristic matches the product law") {
  const std::vector<double> e{-1.0, 0.5, 2.0};
  const ProbabilityVector p({0.5, 0.3, 0.2});
  const ProbabilityVector q({0.1, 0.6, 0.3});
  for (double eta : {-0.7, 0.0, 0.4, 1.9})
    CHECK(asymptotic_characteristic(p, q, e, eta) ==
          doctest::Approx(static_cast<double>(product_g(e, p, q, eta))).epsilon(1e-13));
}
