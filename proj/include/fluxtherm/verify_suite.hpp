#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fluxtherm/serialization.hpp"

namespace fluxtherm {

struct CheckResult {
  std::string name;
  bool passes = false;
  double deviation = 0.0;
  double tolerance = 0.0;
  int instances = 0;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 20240611;
  /// Replaces the theorem fixture by records that break detailed balance.
  bool inject_dbc_violation = false;
};

struct VerifyReport {
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;

  bool passes() const;
  Json to_json() const;
};

VerifyReport run_verify_suite(const VerifyOptions& opts = {});

/// mt19937_64 with the top 53 bits mapped to [0, 1) by hand, so that streams
/// agree across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi);  // inclusive

  /// Sorted energies in [-2, 2] with neighbours at least 0.05 apart.
  std::vector<double> spectrum(std::size_t n);
  /// Strictly positive weights (each at least ~1e-3 after normalisation).
  ProbabilityVector distribution(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace fluxtherm
