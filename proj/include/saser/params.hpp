#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "saser/errors.hpp"

namespace saser {

/// Device values reported for the SAW resonator and flux-qubit atom (MHz, f = ω/2π).
namespace device {
inline constexpr double g = 11.0;
inline constexpr double gamma_eg = 35.0;
inline constexpr double gamma_fg = 6.0;
inline constexpr double gamma_fe = 100.0;
inline constexpr double kappa_single_phonon = 0.134;  // κ0, Q0 = 24e3
inline constexpr double kappa_multi_phonon = 0.094;   // κm, Qm = 34e3
inline constexpr double optimal_pump_numeric = 290.0;
inline constexpr double optimal_pump_measured = 270.0;
inline constexpr double max_phonon_number = 90.0;
}  // namespace device

/// Physical and numerical parameters of the pumped three-level atom coupled to
/// one resonator mode.
///
/// All frequencies and rates are f = ω/2π in MHz. Detunings are measured in the
/// frame where |e⟩ and the resonator rotate at ω_r and |f⟩ rotates with the pump.
struct ModelParams {
  double delta_ge = 0.0;     ///< (ω_ge − ω_r)/2π
  double delta_gf = 0.0;     ///< (ω_gf − ω_pump)/2π, 0 for a resonant pump
  double g = device::g;      ///< g↔e coupling to the resonator
  double omega_pump = 0.0;   ///< pump Rabi amplitude Ω, entering as Ω/2
  double gamma_eg = device::gamma_eg;
  double gamma_fg = device::gamma_fg;
  double gamma_fe = device::gamma_fe;
  double gamma_phi_e = 0.0;  ///< pure dephasing of |e⟩ (coherence decay rate)
  double gamma_phi_f = 0.0;  ///< pure dephasing of |f⟩
  double kappa = device::kappa_multi_phonon;
  double kappa_in = 0.5 * device::kappa_multi_phonon;
  double kappa_out = 0.5 * device::kappa_multi_phonon;
  std::optional<double> g_fe;  ///< e↔f coupling to the resonator; disabled when empty
  double delta_anharm = 0.0;   ///< Δ = (ω_ef − ω_r)/2π
  int fock_cutoff = 10;        ///< highest retained Fock state n_max

  bool operator==(const ModelParams&) const = default;
};

/// Name table of the real-valued fields, used by config loading, sweeps and hashing.
struct RealField {
  std::string_view name;
  double ModelParams::*member;
};

inline constexpr std::array<RealField, 13> real_fields{{
    {"delta_ge", &ModelParams::delta_ge},
    {"delta_gf", &ModelParams::delta_gf},
    {"g", &ModelParams::g},
    {"omega_pump", &ModelParams::omega_pump},
    {"gamma_eg", &ModelParams::gamma_eg},
    {"gamma_fg", &ModelParams::gamma_fg},
    {"gamma_fe", &ModelParams::gamma_fe},
    {"gamma_phi_e", &ModelParams::gamma_phi_e},
    {"gamma_phi_f", &ModelParams::gamma_phi_f},
    {"kappa", &ModelParams::kappa},
    {"kappa_in", &ModelParams::kappa_in},
    {"kappa_out", &ModelParams::kappa_out},
    {"delta_anharm", &ModelParams::delta_anharm},
}};

inline bool is_param_name(std::string_view name) {
  if (name == "fock_cutoff" || name == "g_fe") return true;
  for (const auto& f : real_fields)
    if (f.name == name) return true;
  return false;
}

/// Reads a named parameter. A disabled g_fe reads as 0.
inline double get_param(const ModelParams& p, std::string_view name) {
  if (name == "fock_cutoff") return p.fock_cutoff;
  if (name == "g_fe") return p.g_fe.value_or(0.0);
  for (const auto& f : real_fields)
    if (f.name == name) return p.*f.member;
  throw ValidationError("unknown parameter '" + std::string(name) + "'");
}

inline void set_param(ModelParams& p, std::string_view name, double value) {
  if (name == "fock_cutoff") {
    if (value != std::floor(value)) throw ValidationError("fock_cutoff must be an integer");
    p.fock_cutoff = static_cast<int>(value);
    return;
  }
  if (name == "g_fe") {
    p.g_fe = value;
    return;
  }
  for (const auto& f : real_fields) {
    if (f.name == name) {
      p.*f.member = value;
      return;
    }
  }
  throw ValidationError("unknown parameter '" + std::string(name) + "'");
}

/// Hard violations of the parameter invariants. Empty when the set is usable.
inline std::vector<std::string> param_violations(const ModelParams& p, bool steady_state = true) {
  std::vector<std::string> out;
  for (const auto& f : real_fields) {
    if (!std::isfinite(p.*f.member)) out.push_back(std::string(f.name) + " must be finite");
  }
  const std::pair<std::string_view, double> nonneg[] = {
      {"g", p.g},           {"omega_pump", p.omega_pump}, {"gamma_eg", p.gamma_eg},
      {"gamma_fg", p.gamma_fg}, {"gamma_fe", p.gamma_fe}, {"gamma_phi_e", p.gamma_phi_e},
      {"gamma_phi_f", p.gamma_phi_f}, {"kappa", p.kappa}, {"kappa_in", p.kappa_in},
      {"kappa_out", p.kappa_out}};
  for (const auto& [name, v] : nonneg)
    if (v < 0.0) out.push_back(std::string(name) + " must be >= 0 (got " + std::to_string(v) + ")");
  if (steady_state && !(p.kappa > 0.0)) out.push_back("kappa must be > 0 for steady-state solves");
  if (p.fock_cutoff < 1) out.push_back("fock_cutoff must be >= 1");
  if (p.g_fe) {
    if (!std::isfinite(*p.g_fe) || *p.g_fe < 0.0) out.push_back("g_fe must be finite and >= 0");
    if (p.delta_anharm == 0.0) out.push_back("g_fe is enabled but delta_anharm is 0");
  }
  return out;
}

inline void require_valid(const ModelParams& p, bool steady_state = true) {
  if (auto v = param_violations(p, steady_state); !v.empty()) throw ValidationError(std::move(v));
}

}  // namespace saser
