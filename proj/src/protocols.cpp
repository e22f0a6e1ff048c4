#include "fluxtherm/protocols.hpp"

#include <cmath>
#include <sstream>

namespace fluxtherm {

namespace {

void require_probability(double p, const char* what) {
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
    std::ostringstream msg;
    msg << what << " must lie in [0, 1], got " << p;
    throw ValidationError(msg.str());
  }
}

std::size_t level_of_basis_state(const HermitianObservable& obs,
                                 Eigen::Index state) {
  for (std::size_t k = 0; k < obs.num_levels(); ++k)
    if (obs.level(k).projector(state, state).real() > 0.5) return k;
  throw ValidationError("basis state not found among the observable's levels");
}

// Measurement of S_z followed by pumping into |0> with efficiency q.
QuantumChannel measure_and_pump(const HermitianObservable& sz, double q) {
  const std::size_t zero = level_of_basis_state(sz, 1);
  return compose(dephasing_channel(sz), pump_channel(sz, zero, q));
}

}  // namespace

void ProtocolSpec::validate() const {
  if (hamiltonian.dim() != dim || step_channel.dim() != dim)
    throw ValidationError("protocol '" + label + "': dimension mismatch");
  if (n_steps < 0)
    throw ValidationError("protocol '" + label + "': n_steps must be >= 0");
}

SgVariant parse_sg_variant(const std::string& name) {
  if (name == "a") return SgVariant::a;
  if (name == "b") return SgVariant::b;
  if (name == "c") return SgVariant::c;
  throw ValidationError("unknown Stern-Gerlach variant '" + name +
                        "' (expected a, b or c)");
}

std::string to_string(SgVariant v) {
  switch (v) {
    case SgVariant::a: return "a";
    case SgVariant::b: return "b";
    case SgVariant::c: return "c";
  }
  return "?";
}

ProtocolSpec build_stern_gerlach(SgVariant variant,
                                 const SternGerlachOptions& opts) {
  require_probability(opts.p_m, "p_m");
  require_probability(opts.pump_q, "pump_q");
  if (opts.n_steps < 1) throw ValidationError("n_steps must be >= 1");
  if (!std::isfinite(opts.unitary_angle))
    throw ValidationError("unitary_angle must be finite");

  const SpinOneOperators s = spin1_operators();
  const HermitianObservable sx = spectral_decompose(s.sx);
  const HermitianObservable sz = spectral_decompose(s.sz);

  const QuantumChannel slot =
      variant == SgVariant::c ? measure_and_pump(sz, opts.pump_q)
                              : dephasing_channel(sz);
  QuantumChannel step = probabilistic_channel(opts.p_m, slot);

  ProtocolSpec spec;
  spec.dim = 3;
  spec.hamiltonian = sx;
  spec.n_steps = opts.n_steps;
  spec.label = "stern_gerlach_" + to_string(variant);
  spec.params = {{"p_m", opts.p_m}};

  if (variant != SgVariant::a) {
    const ComplexMatrix g = opts.generator.value_or(s.sx);
    if (g.rows() != 3 || !is_hermitian(g, Tolerances{}.hermiticity))
      throw ValidationError("generator must be a Hermitian 3x3 matrix");
    if (max_abs(commutator(g, s.sz)) <= 1e-12)
      spec.flags.push_back("generator commutes with S_z: reduces to variant (a)");
    const ComplexMatrix u = unitary_from_generator(g, opts.unitary_angle);
    step = compose(unitary_channel(u, "scrambling unitary"), step);
    spec.params["unitary_angle"] = opts.unitary_angle;
  }
  if (variant == SgVariant::c) spec.params["q"] = opts.pump_q;
  spec.step_channel = std::move(step);
  spec.validate();
  return spec;
}

ProtocolSpec build_nv_demon(const NvHamiltonian& h, const NvOptions& opts) {
  require_probability(opts.p_m, "p_m");
  require_probability(opts.pump_q, "pump_q");
  if (opts.n_steps < 1) throw ValidationError("n_steps must be >= 1");

  const SpinOneOperators s = spin1_operators();
  ProtocolSpec spec;
  spec.dim = 3;
  spec.n_steps = opts.n_steps;
  spec.params = {{"p_m", opts.p_m}, {"q", opts.pump_q}};

  ComplexMatrix hm;
  double tau = 0.0;
  if (const auto* x = std::get_if<XDrive>(&h)) {
    if (!(x->omega > 0.0) || !std::isfinite(x->omega))
      throw ValidationError("omega must be > 0");
    if (!(x->omega_tau > 0.0) || !std::isfinite(x->omega_tau))
      throw ValidationError("omega_tau must be > 0");
    hm = x->omega * s.sx;
    tau = x->omega_tau / x->omega;
    spec.label = "nv_x_drive";
    spec.params["omega"] = x->omega;
    spec.params["tau"] = tau;
  } else {
    const auto& z = std::get<ZNatural>(h);
    if (!std::isfinite(z.delta) || !std::isfinite(z.gamma_e_b))
      throw ValidationError("delta and gamma_e_b must be finite");
    if (!(z.tau > 0.0) || !std::isfinite(z.tau))
      throw ValidationError("tau must be > 0");
    hm = z.delta * s.sz * s.sz + z.gamma_e_b * s.sz;
    tau = z.tau;
    spec.label = "nv_z_natural";
    spec.params["delta"] = z.delta;
    spec.params["gamma_e_b"] = z.gamma_e_b;
    spec.params["tau"] = tau;
  }

  spec.hamiltonian = spectral_decompose(hm);
  const HermitianObservable sz = spectral_decompose(s.sz);
  const QuantumChannel pulse =
      probabilistic_channel(opts.p_m, measure_and_pump(sz, opts.pump_q));
  spec.step_channel = compose(
      unitary_channel(unitary_from_generator(hm, tau), "free evolution"), pulse);
  spec.validate();
  return spec;
}

TPMRecord run_protocol(const ProtocolSpec& spec) {
  spec.validate();
  return conditional_probabilities(spec.step_channel, spec.hamiltonian,
                                   spec.n_steps);
}

AsymptoticReport protocol_asymptote(const ProtocolSpec& spec,
                                    const AsymptoticOptions& opts) {
  spec.validate();
  return asymptotic_state(spec.step_channel, spec.hamiltonian, {}, opts);
}

}  // namespace fluxtherm
