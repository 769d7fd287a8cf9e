#pragma once

#include <string>
#include <vector>

#include "saser/hilbert.hpp"
#include "saser/params.hpp"

namespace saser {

/// Extra resonator loss from the detuned e↔f transition, κ_P = g_fe²·Γ_fe/Δ² (MHz).
///
/// With g_fe disabled the e↔f channel is assumed to double the resonator loss,
/// so κ_P = κ.
inline double purcell_kappa(const ModelParams& p) {
  if (!p.g_fe) return p.kappa;
  if (p.delta_anharm == 0.0) throw DomainError("purcell_kappa: delta_anharm = 0 is a singular point");
  const double ratio = *p.g_fe / p.delta_anharm;
  return ratio * ratio * p.gamma_fe;
}

/// Rotating-frame Hamiltonian in rad/µs (ħ = 1):
///
///   H = δ_ge σ_ee + δ_gf σ_ff + (Ω/2)(σ_gf + σ_fg) + g(σ_eg b + σ_ge b†)
///
/// The coupling is written in the excitation-conserving order, so b†b + σ_ee
/// commutes with everything except the pump. With g_fe enabled the detuned
/// e↔f coupling is included through its second-order (dispersive) part
/// χ(σ_ff b b† − σ_ee b†b), χ = g_fe²/Δ; its dissipative part is the Purcell
/// channel added by build_collapse_ops.
inline OperatorMatrix build_hamiltonian(const ModelParams& p, const HilbertSpace& space) {
  require_valid(p, /*steady_state=*/false);
  if (p.fock_cutoff != space.fock_cutoff())
    throw DimensionError("build_hamiltonian: params and space disagree on fock_cutoff");

  const OperatorMatrix s_ee = atomic_op(space, Level::e, Level::e);
  const OperatorMatrix s_ff = atomic_op(space, Level::f, Level::f);
  const OperatorMatrix s_gf = atomic_op(space, Level::g, Level::f);
  const OperatorMatrix s_eg = atomic_op(space, Level::e, Level::g);
  const OperatorMatrix b = mode_op(space);
  const OperatorMatrix jc = s_eg * b;

  OperatorMatrix h = Complex(to_angular(p.delta_ge)) * s_ee + Complex(to_angular(p.delta_gf)) * s_ff;
  const OperatorMatrix pump = s_gf + OperatorMatrix(s_gf.adjoint());
  h += Complex(0.5 * to_angular(p.omega_pump)) * pump;
  h += Complex(to_angular(p.g)) * (jc + OperatorMatrix(jc.adjoint()));

  if (p.g_fe) {
    const double chi = to_angular(*p.g_fe) * (*p.g_fe / p.delta_anharm);
    const OperatorMatrix num = number_op(space);
    const OperatorMatrix bbdag = identity_op(space) + num;
    h += Complex(chi) * (OperatorMatrix(s_ff * bbdag) - OperatorMatrix(s_ee * num));
  }
  h.prune(Complex(0.0));
  h.makeCompressed();
  return h;
}

/// Lindblad channel: rate·(c ρ c† − ½{c†c, ρ}), rate in rad/µs.
struct CollapseChannel {
  std::string name;
  OperatorMatrix op;
  double rate;
};

/// Decay channels of the atom and the resonator, plus optional pure dephasing
/// and Purcell channels. Zero-rate channels are omitted.
inline std::vector<CollapseChannel> build_collapse_ops(const ModelParams& p, const HilbertSpace& space) {
  require_valid(p, /*steady_state=*/false);
  std::vector<CollapseChannel> out;
  auto add = [&](std::string name, OperatorMatrix op, double rate_mhz) {
    if (rate_mhz > 0.0) out.push_back({std::move(name), std::move(op), to_angular(rate_mhz)});
  };
  add("relax_eg", atomic_op(space, Level::g, Level::e), p.gamma_eg);
  add("relax_fg", atomic_op(space, Level::g, Level::f), p.gamma_fg);
  add("relax_fe", atomic_op(space, Level::e, Level::f), p.gamma_fe);
  add("resonator", mode_op(space), p.kappa);
  // D[σ_ii] at rate 2γ damps every coherence of |i⟩ at rate γ.
  add("dephase_e", atomic_op(space, Level::e, Level::e), 2.0 * p.gamma_phi_e);
  add("dephase_f", atomic_op(space, Level::f, Level::f), 2.0 * p.gamma_phi_f);
  if (p.g_fe) add("purcell", mode_op(space), purcell_kappa(p));
  return out;
}

}  // namespace saser
