#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fluxtherm/tpm_statistics.hpp"

using namespace fluxtherm;

namespace {

ComplexMatrix pauli_x() {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 1) = m(1, 0) = 1.0;
  return m;
}

ComplexMatrix pauli_z() {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

}  // namespace

TEST_CASE("qubit rotation conditional probabilities") {
  // exp(-i theta sigma_x / 2) per step flips with probability sin^2(t theta / 2).
  const double theta = 0.3;
  const auto h = spectral_decompose(0.5 * pauli_z());
  const auto ch = unitary_channel(unitary_from_generator(0.5 * pauli_x(), theta));
  const auto record = conditional_probabilities(ch, h, 12);
  REQUIRE(record.num_times() == 13);
  CHECK(record.steps.front() == 0);
  CHECK(max_abs(record.cond[0] - RealMatrix::Identity(2, 2)) == 0.0);
  for (std::size_t t = 0; t < record.num_times(); ++t) {
    const double flip = std::pow(std::sin(t * theta / 2.0), 2);
    CHECK(record.cond[t](1, 0) == doctest::Approx(flip).epsilon(1e-12));
    CHECK(record.cond[t](0, 0) == doctest::Approx(1.0 - flip).epsilon(1e-12));
  }
  CHECK_NOTHROW(record.validate());
}

TEST_CASE("dephasing in the measured basis freezes the record") {
  const auto h = spectral_decompose(0.5 * pauli_z());
  const auto record = conditional_probabilities(dephasing_channel(h), h, 5);
  for (const auto& m : record.cond) CHECK(max_abs(m - RealMatrix::Identity(2, 2)) < 1e-15);
}

TEST_CASE("record validation") {
  TPMRecord r;
  r.energies = {0.0, 1.0};
  r.steps = {0, 1};
  r.cond = {RealMatrix::Identity(2, 2), RealMatrix::Constant(2, 2, 0.5)};
  CHECK_NOTHROW(r.validate());
  r.cond[1](0, 0) = 0.6;
  CHECK_THROWS_AS(r.validate(), ValidationError);
  r.cond[1](0, 0) = 0.5;
  r.cond[0](0, 1) = 1e-6;
  r.cond[0](1, 1) = 1.0 - 1e-6;
  CHECK_THROWS_AS(r.validate(), ValidationError);
}

TEST_CASE("characteristic function of a symmetric two-point law") {
  const auto d = EnergyChangeDistribution::from_probabilities({{1.0, 0.5}, {-1.0, 0.5}});
  CHECK(characteristic_function(d, 1.0) == doctest::Approx(1.5430806348152437).epsilon(1e-14));
  CHECK(characteristic_minus_one(d, 0.0) == 0.0);
  // cosh(eta) - 1 = 2 sinh^2(eta / 2), accurate far below sqrt(epsilon).
  const double eta = 1e-7;
  const double exact = 2.0 * std::pow(std::sinh(eta / 2.0), 2);
  CHECK(characteristic_minus_one(d, eta) == doctest::Approx(exact).epsilon(1e-9));
  CHECK(mean_energy_change(d) == doctest::Approx(0.0));
  CHECK(d.range() == 2.0);
}

TEST_CASE("entries are merged and sorted") {
  const auto d = EnergyChangeDistribution::from_probabilities(
      {{0.5, 0.25}, {-1.0, 0.25}, {0.5 + 1e-15, 0.25}, {2.0, 0.25}});
  REQUIRE(d.size() == 3);
  CHECK(d.entries()[0].delta_e == -1.0);
  CHECK(d.entries()[1].prob == doctest::Approx(0.5));
  CHECK_THROWS_AS(EnergyChangeDistribution::from_probabilities({{0.0, 0.4}}), ValidationError);
}

TEST_CASE("underflowed weights still dominate at large eta") {
  // P(dE = -1000) = e^-900 underflows as a probability but not as a log.
  const auto d = EnergyChangeDistribution::from_log_weights(
      {{-1000.0, -900.0}, {0.0, std::log1p(-std::exp(-900.0))}});
  CHECK(d.entries()[0].prob == 0.0);
  CHECK(log_characteristic_function(d, 1.0) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(characteristic_minus_one(d, 0.0) == 0.0);
}

TEST_CASE("stationary distribution is a product law") {
  const std::vector<double> e{-1.0, 0.0, 2.0};
  const ProbabilityVector p({0.2, 0.3, 0.5});
  const ProbabilityVector q({0.6, 0.3, 0.1});
  const auto d = stationary_distribution(e, p, q);
  double expected_mean = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int f = 0; f < 3; ++f) expected_mean += p[i] * q[f] * (e[f] - e[i]);
  CHECK(mean_energy_change(d) == doctest::Approx(expected_mean).epsilon(1e-14));
  const double eta = 0.4;
  double direct = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int f = 0; f < 3; ++f) direct += p[i] * q[f] * std::exp(-eta * (e[f] - e[i]));
  CHECK(characteristic_function(d, eta) == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("record distribution and trace") {
  TPMRecord r;
  r.energies = {0.0, 1.0};
  r.steps = {0, 3};
  RealMatrix m(2, 2);
  m << 0.7, 0.4, 0.3, 0.6;
  r.cond = {RealMatrix::Identity(2, 2), m};
  const ProbabilityVector p({0.25, 0.75});
  const auto d = energy_change_distribution(r, 1, p);
  // dE = +1 : 0.25 * 0.3; dE = -1 : 0.75 * 0.4.
  REQUIRE(d.size() == 3);
  CHECK(d.entries()[0].prob == doctest::Approx(0.3));
  CHECK(d.entries()[2].prob == doctest::Approx(0.075));
  CHECK_THROWS_AS(energy_change_distribution(r, 1), ValidationError);
  const auto g = characteristic_trace(r, p, 0.0);
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(1.0));
}

TEST_CASE("initial probabilities from a density operator") {
  const auto h = spectral_decompose(0.5 * pauli_z());
  ComplexMatrix rho = ComplexMatrix::Zero(2, 2);
  rho(0, 0) = 0.3;
  rho(1, 1) = 0.7;
  rho(0, 1) = rho(1, 0) = 0.1;
  const auto p = initial_probabilities(DensityOperator(rho), h);
  // Levels ascend: -1/2 is basis state |1>.
  CHECK(p[0] == doctest::Approx(0.7));
}

TEST_CASE("csv round trip is exact") {
  const auto h = spectral_decompose(0.5 * pauli_z());
  const auto ch = unitary_channel(unitary_from_generator(0.5 * pauli_x(), 0.123456789));
  auto record = conditional_probabilities(ch, h, 7);
  record.initial_probs = ProbabilityVector({0.1, 0.9});
  std::stringstream buf;
  write_tpm_csv(buf, record);
  const auto back = read_tpm_csv(buf);
  CHECK(back.energies == record.energies);
  CHECK(back.steps == record.steps);
  REQUIRE(back.initial_probs.has_value());
  CHECK((*back.initial_probs)[1] == 0.9);
  for (std::size_t t = 0; t < record.num_times(); ++t)
    CHECK(max_abs(back.cond[t] - record.cond[t]) == 0.0);
}

TEST_CASE("csv reader rejects broken input") {
  std::stringstream bad("energies,0,1\ninitial_probs\nstep,i,f,P_f_given_i\n0,0,0,1\n0,0,1,0\n"
                        "0,1,0,0\n0,1,1,1\n1,0,0,0.9\n1,0,1,0.3\n1,1,0,0\n1,1,1,1\n");
  CHECK_THROWS_AS(read_tpm_csv(bad), ValidationError);
  std::stringstream junk("not a record\n");
  CHECK_THROWS_AS(read_tpm_csv(junk), ValidationError);
}
