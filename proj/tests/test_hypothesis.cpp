#include <cmath>
#include <random>

#include "doctest.h"
#include "fluxtherm/channels.hpp"
#include "fluxtherm/eta_solver.hpp"
#include "fluxtherm/hypothesis_checks.hpp"

using namespace fluxtherm;

namespace {

std::vector<int> steps_upto(int n) {
  std::vector<int> s;
  for (int k = 0; k <= n; ++k) s.push_back(k);
  return s;
}

const std::vector<double> kEnergies{-1.0, 0.2, 1.5};
const ProbabilityVector kPinf({0.5, 0.3, 0.2});

}  // namespace

TEST_CASE("exponential model satisfies detailed balance at every step") {
  const auto r = exponential_dbc_record(kEnergies, kPinf, 2.5, steps_upto(20));
  CHECK_NOTHROW(r.validate());
  const auto v = check_dbc(r, kPinf, 1e-12);
  CHECK(v.passes);
  CHECK(v.max_deviation < 1e-15);
  REQUIRE(v.onset_step.has_value());
  CHECK(*v.onset_step == 1);
}

TEST_CASE("F extraction on the exponential model") {
  const double tau = 2.5;
  const auto r = exponential_dbc_record(kEnergies, kPinf, tau, steps_upto(20));
  const auto table = extract_F(r, kPinf);
  for (std::size_t t = 0; t < table.steps.size(); ++t) {
    const double expected = 1.0 - std::exp(-table.steps[t] / tau);
    CHECK(table.values[t].maxCoeff() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(table.spread(t) < 1e-12);
  }
  CHECK(table.values[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("undefined F entries are NaN") {
  const ProbabilityVector pinned({0.0, 1.0, 0.0});
  const auto r = exponential_dbc_record(kEnergies, pinned, 1.0, steps_upto(3));
  const auto table = extract_F(r, pinned);
  CHECK(std::isnan(table.values[1](1, 0)));
  CHECK(std::isnan(table.values[1](1, 1)));
  CHECK(table.values[1](0, 1) == doctest::Approx(1.0 - std::exp(-1.0)));
}

TEST_CASE("factorised records: I holds, I* only when F = 1") {
  std::vector<double> fbar;
  for (int s = 0; s <= 10; ++s) fbar.push_back(s == 0 ? 0.0 : 0.6);
  const auto r = factorized_record(kEnergies, kPinf, fbar, steps_upto(10));
  CHECK_NOTHROW(r.validate());
  CHECK(check_hypothesis_I(r, 1e-12).passes);
  const auto star = check_hypothesis_I_star(r, 1e-2);
  CHECK_FALSE(star.passes);
  CHECK_FALSE(star.onset_step.has_value());

  std::vector<double> full(11, 1.0);
  full[0] = 0.0;
  const auto mixed = factorized_record(kEnergies, kPinf, full, steps_upto(10));
  const auto ok = check_hypothesis_I_star(mixed, 1e-12);
  CHECK(ok.passes);
  REQUIRE(ok.onset_step.has_value());
  CHECK(*ok.onset_step == 1);
}

TEST_CASE("onset and window semantics") {
  std::vector<double> fbar{0.0, 0.2, 0.5, 0.9, 1.0, 1.0, 1.0};
  const auto r = factorized_record(kEnergies, kPinf, fbar, steps_upto(6));
  const auto v = check_hypothesis_I_star(r, 1e-12);
  CHECK(v.passes);
  REQUIRE(v.onset_step.has_value());
  CHECK(*v.onset_step == 4);
  CHECK(v.max_deviation < 1e-12);
  CHECK(v.deviations.size() == 7);
  // A window starting before the onset must fail; one after it passes.
  CHECK_FALSE(check_hypothesis_I_star(r, 1e-12, {2}).passes);
  CHECK(check_hypothesis_I_star(r, 1e-12, {5}).passes);
}

TEST_CASE("hypothesis I is vacuous for two levels") {
  const auto r = exponential_dbc_record({0.0, 1.0}, ProbabilityVector({0.4, 0.6}), 1.0,
                                        steps_upto(4));
  const auto v = check_hypothesis_I(r, 1e-12);
  CHECK(v.passes);
  REQUIRE(v.flags.size() == 1);
}

TEST_CASE("broken detailed balance is detected") {
  auto r = exponential_dbc_record(kEnergies, kPinf, 2.0, steps_upto(10));
  r.cond[5](2, 0) += 0.01;
  r.cond[5](0, 0) -= 0.01;
  const auto v = check_dbc(r, kPinf, 1e-3);
  CHECK_FALSE(v.passes);
  CHECK(v.max_deviation == doctest::Approx(0.01 * kPinf[0]).epsilon(1e-9));
}

TEST_CASE("pairs with vanishing asymptotic weight are skipped") {
  const ProbabilityVector pinned({0.0, 1.0, 0.0});
  const auto r = exponential_dbc_record(kEnergies, pinned, 1.0, steps_upto(3));
  const auto v = check_dbc(r, pinned, 1e-9);
  CHECK(v.passes);
  CHECK_FALSE(v.flags.empty());
}

TEST_CASE("exponential fit recovers tau_D") {
  const auto r = exponential_dbc_record(kEnergies, kPinf, 3.11, steps_upto(40));
  DbcFitOptions opts;
  opts.p_inf = kPinf;
  const auto fit = fit_exponential_dbc_model(r, opts);
  CHECK(fit.tau_d == doctest::Approx(3.11).epsilon(1e-8));
  CHECK(fit.rms_residual < 1e-10);
  opts.initial_level = 1;
  CHECK(fit_exponential_dbc_model(r, opts).tau_d == doctest::Approx(3.11).epsilon(1e-8));
  // Default asymptote: final-step columns.
  const auto long_run = exponential_dbc_record(kEnergies, kPinf, 3.11, steps_upto(200));
  CHECK(fit_exponential_dbc_model(long_run).tau_d == doctest::Approx(3.11).epsilon(1e-6));
}

TEST_CASE("fit preconditions") {
  const auto short_rec = exponential_dbc_record(kEnergies, kPinf, 1.0, steps_upto(3));
  CHECK_THROWS_AS(fit_exponential_dbc_model(short_rec), ValidationError);
  const auto frozen = exponential_dbc_record(kEnergies, kPinf, 1e7, steps_upto(10));
  DbcFitOptions opts;
  opts.p_inf = kPinf;
  CHECK_THROWS_AS(fit_exponential_dbc_model(frozen, opts), ConvergenceError);
}

TEST_CASE("factorised records reproduce G = 1 at every step") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    std::vector<double> w{u(rng) + 0.05, u(rng) + 0.05, u(rng) + 0.05};
    const double total = w[0] + w[1] + w[2];
    for (auto& x : w) x /= total;
    const auto p_inf = ProbabilityVector::normalized(w);
    const ProbabilityVector p_init({0.2, 0.5, 0.3});
    std::vector<double> fbar{0.0};
    for (int s = 1; s <= 15; ++s) fbar.push_back(u(rng));
    const auto r = factorized_record(kEnergies, p_inf, fbar, steps_upto(15));
    const auto sol = solve_eta_star(stationary_distribution(kEnergies, p_init, p_inf));
    REQUIRE(sol.kind == EtaKind::nontrivial);
    for (double g : characteristic_trace(r, p_init, sol.value())) CHECK(std::abs(g - 1.0) < 1e-9);
  }
}
