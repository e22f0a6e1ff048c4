#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fluxtherm/channels.hpp"
#include "fluxtherm/quantum_core.hpp"
#include "fluxtherm/tpm_statistics.hpp"

namespace fluxtherm {

/// One stroboscopic experiment: the measured observable and the map applied
/// between the two energy measurements, once per step.
struct ProtocolSpec {
  Eigen::Index dim = 0;
  HermitianObservable hamiltonian;
  QuantumChannel step_channel = QuantumChannel::identity(1);
  int n_steps = 1;
  std::string label;
  std::map<std::string, double> params;
  std::vector<std::string> flags;

  void validate() const;
};

enum class SgVariant { a, b, c };

SgVariant parse_sg_variant(const std::string& name);
std::string to_string(SgVariant v);

struct SternGerlachOptions {
  double p_m = 0.35;
  double unitary_angle = 0.6283185307179586;  // pi / 5
  double pump_q = 1.0;
  int n_steps = 60;
  /// Generator of the in-between unitary; S_x when empty.
  std::optional<ComplexMatrix> generator;
};

/// Spin-1 measured in S_x at both ends, with S_z measurements of occurrence
/// probability p_m in between. (b) and (c) add a unitary before each
/// measurement slot, (c) also pumps to |0> after a measurement.
ProtocolSpec build_stern_gerlach(SgVariant variant,
                                 const SternGerlachOptions& opts = {});

struct XDrive {
  double omega = 1.0;
  double omega_tau = 1.0;
};

struct ZNatural {
  double delta = 1.0;
  double gamma_e_b = 0.5;
  double tau = 1.0;
};

using NvHamiltonian = std::variant<XDrive, ZNatural>;

struct NvOptions {
  double p_m = 0.5;
  double pump_q = 0.5;
  int n_steps = 40;
};

/// NV spin under H for one period tau, then a laser pulse acting as an S_z
/// measurement plus pumping to |0> with probability p_m.
ProtocolSpec build_nv_demon(const NvHamiltonian& h, const NvOptions& opts = {});

/// Conditional probabilities over steps 0..n_steps; P_i left unset.
TPMRecord run_protocol(const ProtocolSpec& spec);

/// Asymptotic populations of the step channel in the measured basis.
AsymptoticReport protocol_asymptote(const ProtocolSpec& spec,
                                    const AsymptoticOptions& opts = {});

}  // namespace fluxtherm
