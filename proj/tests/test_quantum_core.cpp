#include <cmath>
#include <random>

#include "doctest.h"
#include "fluxtherm/quantum_core.hpp"

using namespace fluxtherm;

namespace {

ComplexMatrix random_hermitian(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> gauss;
  ComplexMatrix a(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) a(r, c) = Complex(gauss(rng), gauss(rng));
  return (a + a.adjoint()) / 2.0;
}

}  // namespace

TEST_CASE("spin-1 algebra") {
  const auto s = spin1_operators();
  const Complex i(0.0, 1.0);
  CHECK(max_abs(commutator(s.sx, s.sy) - i * s.sz) < 1e-14);
  CHECK(max_abs(commutator(s.sy, s.sz) - i * s.sx) < 1e-14);
  const ComplexMatrix casimir = s.sx * s.sx + s.sy * s.sy + s.sz * s.sz;
  CHECK(max_abs(casimir - 2.0 * ComplexMatrix::Identity(3, 3)) < 1e-14);
}

TEST_CASE("spectral decomposition of S_x") {
  const auto h = spectral_decompose(spin1_operators().sx);
  REQUIRE(h.num_levels() == 3);
  const auto e = h.energies();
  CHECK(e[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::abs(e[1]) < 1e-14);
  CHECK(e[2] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(h.nondegenerate());
  CHECK(h.spectral_range() == doctest::Approx(2.0));
  ComplexMatrix sum = ComplexMatrix::Zero(3, 3);
  for (const auto& lvl : h.levels()) {
    CHECK(max_abs(lvl.projector * lvl.projector - lvl.projector) < 1e-12);
    sum += lvl.projector;
  }
  CHECK(max_abs(sum - ComplexMatrix::Identity(3, 3)) < 1e-12);
  CHECK(max_abs(h.reconstruct() - h.matrix()) < 1e-12);
}

TEST_CASE("degenerate eigenvalues share one level") {
  ComplexMatrix m = ComplexMatrix::Zero(3, 3);
  m.diagonal() << 1.0, 2.0, 1.0;
  const auto h = spectral_decompose(m);
  REQUIRE(h.num_levels() == 2);
  CHECK(h.level(0).multiplicity == 2);
  CHECK(h.level(0).projector(0, 0).real() == doctest::Approx(1.0));
  CHECK(h.level(0).projector(2, 2).real() == doctest::Approx(1.0));
  CHECK_FALSE(h.nondegenerate());
}

TEST_CASE("non-Hermitian input is rejected") {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(spectral_decompose(m), ValidationError);
}

TEST_CASE("random Hermitian matrices reconstruct") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 20; ++k) {
    const int n = 2 + k % 3;
    const auto m = random_hermitian(rng, n);
    const auto h = spectral_decompose(m);
    CHECK(max_abs(h.reconstruct() - m) < 1e-10);
  }
}

TEST_CASE("thermal probabilities") {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m.diagonal() << 0.0, 1.0;
  const auto h = spectral_decompose(m);
  const auto p = thermal_probabilities(h, 1.0);
  CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-14));
  // Large |beta| must not overflow.
  const auto cold = thermal_probabilities(h, 800.0);
  CHECK(cold[0] == doctest::Approx(1.0));
  const auto inverted = thermal_probabilities(h, -800.0);
  CHECK(inverted[1] == doctest::Approx(1.0));
  const auto rho = thermal_state(h, 1.0);
  CHECK(rho.matrix()(0, 0).real() == doctest::Approx(p[0]));
}

TEST_CASE("thermal weights include multiplicity") {
  ComplexMatrix m = ComplexMatrix::Zero(3, 3);
  m.diagonal() << 0.0, 0.0, 1.0;
  const auto p = thermal_probabilities(spectral_decompose(m), 0.0);
  REQUIRE(p.size() == 2);
  CHECK(p[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("probability vectors") {
  CHECK_THROWS_AS(ProbabilityVector({0.5, 0.6}), ValidationError);
  CHECK_THROWS_AS(ProbabilityVector({1.1, -0.1}), ValidationError);
  const auto p = ProbabilityVector::normalized({0.5, 0.5 + 1e-12, -1e-13});
  CHECK(p[2] == 0.0);
  CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("density operator validation") {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m.diagonal() << 1.2, -0.2;
  CHECK_THROWS_AS(DensityOperator{m}, ValidationError);
  const auto report = validate_density(m);
  CHECK_FALSE(report.passes());
  CHECK(report.min_eigenvalue == doctest::Approx(-0.2));
  const auto mixed = DensityOperator::maximally_mixed(4);
  CHECK(mixed.matrix().trace().real() == doctest::Approx(1.0));
}

TEST_CASE("unitary from generator") {
  const auto s = spin1_operators();
  const double theta = 0.37;
  const auto u = unitary_from_generator(s.sz, theta);
  CHECK(is_unitary(u, 1e-12));
  CHECK(std::abs(u(0, 0) - std::exp(Complex(0.0, -theta))) < 1e-14);
  CHECK(std::abs(u(2, 2) - std::exp(Complex(0.0, theta))) < 1e-14);
  const auto ux = unitary_from_generator(s.sx, 2.0 * M_PI);
  CHECK(max_abs(ux - ComplexMatrix::Identity(3, 3)) < 1e-12);
}
