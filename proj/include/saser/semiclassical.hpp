#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <optional>
#include <vector>

#include "saser/model.hpp"
#include "saser/params.hpp"
#include "saser/units.hpp"

namespace saser {

/// Mean values s_ij = ⟨σ_ij⟩ and β = ⟨b⟩ of the factorised dynamics.
struct SemiclassicalState {
  double s_gg = 1.0, s_ee = 0.0, s_ff = 0.0;
  Complex s_ge{}, s_gf{}, s_ef{};
  Complex beta{};

  double n_pn() const { return std::norm(beta); }
  double population_sum() const { return s_gg + s_ee + s_ff; }
};

/// Effective resonator loss used by the mean-field model (MHz).
inline double effective_kappa(const ModelParams& p, bool apply_purcell) {
  return apply_purcell ? p.kappa + purcell_kappa(p) : p.kappa;
}

namespace detail {

using Mat3 = Eigen::Matrix3cd;

/// Atomic density matrix: ρ(j, i) = ⟨σ_ij⟩.
inline Mat3 atomic_rho(const SemiclassicalState& s) {
  Mat3 r;
  r(0, 0) = s.s_gg;
  r(1, 1) = s.s_ee;
  r(2, 2) = s.s_ff;
  r(1, 0) = s.s_ge;
  r(0, 1) = std::conj(s.s_ge);
  r(2, 0) = s.s_gf;
  r(0, 2) = std::conj(s.s_gf);
  r(2, 1) = s.s_ef;
  r(1, 2) = std::conj(s.s_ef);
  return r;
}

inline Mat3 unit(int i, int j) {
  Mat3 m = Mat3::Zero();
  m(i, j) = 1.0;
  return m;
}

inline void dissipate(Mat3& out, const Mat3& r, const Mat3& c, double rate) {
  if (rate == 0.0) return;
  const Mat3 cdc = c.adjoint() * c;
  out += rate * (c * r * c.adjoint() - 0.5 * (cdc * r + r * cdc));
}

}  // namespace detail

/// Right-hand side of the factorised (mean-field) equations.
///
/// Closing d⟨O⟩/dt = tr(L[ρ] O) with ⟨σ_ij b⟩ → ⟨σ_ij⟩⟨b⟩ leaves the atom
/// evolving under the classical-field Hamiltonian
///   H_a = δ_ge σ_ee + δ_gf σ_ff + (Ω/2)(σ_gf + σ_fg) + g(β σ_eg + β* σ_ge)
/// with its own Lindblad channels. Written out (all quantities angular,
/// γ_ge = Γ_eg/2 + γ_φe, γ_gf = (Γ_fg + Γ_fe)/2 + γ_φf, γ_ef = (Γ_eg + Γ_fg + Γ_fe)/2 + γ_φe + γ_φf):
///
///   ds_gg/dt = Γ_eg s_ee + Γ_fg s_ff + Ω Im s_gf + 2g Im(β* s_ge)
///   ds_ee/dt = −Γ_eg s_ee + Γ_fe s_ff − 2g Im(β* s_ge)
///   ds_ff/dt = −(Γ_fe + Γ_fg) s_ff − Ω Im s_gf
///   ds_ge/dt = −(iδ_ge + γ_ge) s_ge + i(Ω/2) s_ef* + i g β (s_ee − s_gg)
///   ds_gf/dt = −(iδ_gf + γ_gf) s_gf + i(Ω/2)(s_ff − s_gg) + i g β s_ef
///   ds_ef/dt = (i(δ_ge − δ_gf) − γ_ef) s_ef − i(Ω/2) s_ge* + i g β* s_gf
///   dβ/dt    = −(κ/2) β − i g s_ge
///
/// `frame_mhz` moves |e⟩ and the resonator to a frame rotating at
/// ω_r + 2π·frame_mhz (δ_ge → δ_ge − frame, dβ/dt gains +i·frame·β).
inline SemiclassicalState mean_field_rhs(const SemiclassicalState& s, const ModelParams& p, double kappa_mhz,
                                         double frame_mhz = 0.0) {
  using detail::unit;
  const double dge = to_angular(p.delta_ge - frame_mhz);
  const double dgf = to_angular(p.delta_gf);
  const double om = to_angular(p.omega_pump);
  const double g = to_angular(p.g);

  const detail::Mat3 r = detail::atomic_rho(s);
  detail::Mat3 h = dge * unit(1, 1) + dgf * unit(2, 2) + 0.5 * om * (unit(0, 2) + unit(2, 0));
  h += g * (s.beta * unit(1, 0) + std::conj(s.beta) * unit(0, 1));

  detail::Mat3 dr = Complex(0.0, -1.0) * (h * r - r * h);
  detail::dissipate(dr, r, unit(0, 1), to_angular(p.gamma_eg));
  detail::dissipate(dr, r, unit(0, 2), to_angular(p.gamma_fg));
  detail::dissipate(dr, r, unit(1, 2), to_angular(p.gamma_fe));
  detail::dissipate(dr, r, unit(1, 1), 2.0 * to_angular(p.gamma_phi_e));
  detail::dissipate(dr, r, unit(2, 2), 2.0 * to_angular(p.gamma_phi_f));

  SemiclassicalState d;
  d.s_gg = dr(0, 0).real();
  d.s_ee = dr(1, 1).real();
  d.s_ff = dr(2, 2).real();
  d.s_ge = dr(1, 0);
  d.s_gf = dr(2, 0);
  d.s_ef = dr(2, 1);
  d.beta = -0.5 * to_angular(kappa_mhz) * s.beta - Complex(0.0, g) * s.s_ge +
           Complex(0.0, to_angular(frame_mhz)) * s.beta;
  return d;
}

inline SemiclassicalState mean_field_rhs(const SemiclassicalState& s, const ModelParams& p) {
  return mean_field_rhs(s, p, p.kappa);
}

namespace detail {

/// Packed real coordinates with s_ff = 1 − s_gg − s_ee eliminated.
using Packed = std::array<double, 10>;

inline Packed pack(const SemiclassicalState& s) {
  return {s.s_gg, s.s_ee, s.s_ge.real(), s.s_ge.imag(), s.s_gf.real(),
          s.s_gf.imag(), s.s_ef.real(), s.s_ef.imag(), s.beta.real(), s.beta.imag()};
}

inline SemiclassicalState unpack(const Packed& x) {
  SemiclassicalState s;
  s.s_gg = x[0];
  s.s_ee = x[1];
  s.s_ff = 1.0 - x[0] - x[1];
  s.s_ge = {x[2], x[3]};
  s.s_gf = {x[4], x[5]};
  s.s_ef = {x[6], x[7]};
  s.beta = {x[8], x[9]};
  return s;
}

inline Packed pack_derivative(const SemiclassicalState& d) {
  return {d.s_gg, d.s_ee, d.s_ge.real(), d.s_ge.imag(), d.s_gf.real(),
          d.s_gf.imag(), d.s_ef.real(), d.s_ef.imag(), d.beta.real(), d.beta.imag()};
}

inline double rate_scale(const ModelParams& p, double kappa_mhz) {
  return to_angular(std::max({p.gamma_eg, p.gamma_fg, p.gamma_fe, p.omega_pump, p.g, kappa_mhz, std::abs(p.delta_ge),
                              std::abs(p.delta_gf), 1e-6}));
}

/// Damped Newton with a central-difference Jacobian.
template <int N, typename F>
bool newton(Eigen::Matrix<double, N, 1>& x, F&& residual, const Eigen::Matrix<double, N, 1>& step_scale, double tol,
            int max_iter, double& final_norm) {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;
  Vec f = residual(x);
  final_norm = f.template lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_iter && final_norm >= tol; ++it) {
    Mat jac;
    for (int j = 0; j < N; ++j) {
      const double h = 1e-7 * std::max(std::abs(x(j)), step_scale(j));
      Vec xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      jac.col(j) = (residual(xp) - residual(xm)) / (2.0 * h);
    }
    const Vec dx = jac.fullPivLu().solve(-f);
    if (!dx.allFinite()) return false;
    double lambda = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls) {
      const Vec xn = x + lambda * dx;
      const Vec fn = residual(xn);
      const double nn = fn.template lpNorm<Eigen::Infinity>();
      if (std::isfinite(nn) && nn < final_norm) {
        x = xn;
        f = fn;
        final_norm = nn;
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) return final_norm < tol;
  }
  return final_norm < tol;
}

}  // namespace detail

struct MeanFieldOptions {
  bool apply_purcell = false;     ///< use κ + κ_Purc as the resonator loss
  double horizon_kappa = 60.0;    ///< integration horizon in units of 1/κ_eff
  double max_horizon_us = 4000.0;
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double residual_tol = 1e-10;    ///< on ‖rhs‖∞ / largest rate
  double lasing_floor = 1e-9;     ///< N_pn below this counts as not lasing
};

struct MeanFieldSteady {
  SemiclassicalState state;
  double n_pn = 0.0;
  double lasing_offset_mhz = 0.0;  ///< oscillation frequency of β relative to ω_r
  double residual = 0.0;           ///< scaled ‖rhs‖∞ in the co-rotating frame
  bool lasing = false;
  double kappa_eff = 0.0;
};

/// Integrates the mean-field equations (Dormand–Prince) for `duration_us`.
inline SemiclassicalState integrate_mean_field(const SemiclassicalState& s0, const ModelParams& p, double kappa_mhz,
                                               double duration_us, double rel_tol = 1e-9, double abs_tol = 1e-11) {
  namespace ode = boost::numeric::odeint;
  detail::Packed x = detail::pack(s0);
  auto sys = [&](const detail::Packed& in, detail::Packed& out, double) {
    out = detail::pack_derivative(mean_field_rhs(detail::unpack(in), p, kappa_mhz));
  };
  try {
    ode::integrate_adaptive(ode::make_controlled(abs_tol, rel_tol, ode::runge_kutta_dopri5<detail::Packed>()), sys, x,
                            0.0, duration_us, 1e-4);
  } catch (const std::exception& e) {
    throw IntegrationError(std::string("mean-field integration failed: ") + e.what());
  }
  return detail::unpack(x);
}

namespace detail {

/// Non-lasing fixed point (β = 0) by Newton on the eight atomic coordinates.
inline std::optional<SemiclassicalState> atomic_fixed_point(SemiclassicalState guess, const ModelParams& p,
                                                            double kappa_mhz, double tol, double& norm) {
  const double scale = rate_scale(p, kappa_mhz);
  Eigen::Matrix<double, 8, 1> x;
  guess.beta = 0.0;
  const Packed g0 = pack(guess);
  for (int i = 0; i < 8; ++i) x(i) = g0[static_cast<std::size_t>(i)];
  auto res = [&](const Eigen::Matrix<double, 8, 1>& v) {
    Packed pk{};
    for (int i = 0; i < 8; ++i) pk[static_cast<std::size_t>(i)] = v(i);
    const Packed d = pack_derivative(mean_field_rhs(unpack(pk), p, kappa_mhz));
    Eigen::Matrix<double, 8, 1> f;
    for (int i = 0; i < 8; ++i) f(i) = d[static_cast<std::size_t>(i)] / scale;
    return f;
  };
  const Eigen::Matrix<double, 8, 1> ss = Eigen::Matrix<double, 8, 1>::Constant(1e-3);
  if (!newton<8>(x, res, ss, tol, 60, norm)) return std::nullopt;
  Packed pk{};
  for (int i = 0; i < 8; ++i) pk[static_cast<std::size_t>(i)] = x(i);
  return unpack(pk);
}

/// Lasing fixed point in the frame rotating with β: unknowns are the atomic
/// coordinates, Re β (Im β = 0 fixes the phase) and the frame offset.
inline std::optional<MeanFieldSteady> lasing_fixed_point(const SemiclassicalState& from, double offset_guess,
                                                         const ModelParams& p, double kappa_mhz, double tol) {
  const double scale = rate_scale(p, kappa_mhz);
  // rotate so β is real and positive
  SemiclassicalState s = from;
  const double amp = std::abs(s.beta);
  if (!(amp > 0.0)) return std::nullopt;
  const Complex ph = std::conj(s.beta) / amp;
  s.beta *= ph;
  s.s_ge *= ph;
  s.s_ef *= std::conj(ph);

  Eigen::Matrix<double, 10, 1> x;
  const Packed p0 = pack(s);
  for (int i = 0; i < 9; ++i) x(i) = p0[static_cast<std::size_t>(i)];
  x(9) = offset_guess;
  auto res = [&](const Eigen::Matrix<double, 10, 1>& v) {
    Packed pk{};
    for (int i = 0; i < 9; ++i) pk[static_cast<std::size_t>(i)] = v(i);
    pk[9] = 0.0;
    const Packed d = pack_derivative(mean_field_rhs(unpack(pk), p, kappa_mhz, v(9)));
    Eigen::Matrix<double, 10, 1> f;
    for (int i = 0; i < 10; ++i) f(i) = d[static_cast<std::size_t>(i)] / scale;
    return f;
  };
  Eigen::Matrix<double, 10, 1> ss = Eigen::Matrix<double, 10, 1>::Constant(1e-3);
  ss(8) = 1e-3 * std::max(1.0, amp);
  ss(9) = 1e-3 * std::max(1.0, p.g);
  double norm = 0.0;
  if (!newton<10>(x, res, ss, tol, 80, norm)) return std::nullopt;

  MeanFieldSteady out;
  Packed pk{};
  for (int i = 0; i < 9; ++i) pk[static_cast<std::size_t>(i)] = x(i);
  out.state = unpack(pk);
  out.n_pn = out.state.n_pn();
  out.lasing_offset_mhz = x(9);
  out.residual = norm;
  out.lasing = true;
  return out;
}

}  // namespace detail

/// Largest real part of the linearised mean-field dynamics around the
/// non-lasing fixed point, in rad/µs. Positive means the zero-field state is
/// unstable, i.e. the system lases.
inline double zero_field_growth_rate(const ModelParams& p, double kappa_mhz) {
  double norm = 0.0;
  auto fp = detail::atomic_fixed_point(SemiclassicalState{}, p, kappa_mhz, 1e-13, norm);
  if (!fp) {
    const SemiclassicalState relaxed = integrate_mean_field(SemiclassicalState{}, p, kappa_mhz,
                                                            20.0 / to_angular(std::max(p.gamma_eg, 1e-3)));
    fp = detail::atomic_fixed_point(relaxed, p, kappa_mhz, 1e-13, norm);
    if (!fp) throw SolverError("zero-field fixed point did not converge", norm);
  }
  const detail::Packed x0 = detail::pack(*fp);
  Eigen::Matrix<double, 10, 10> jac;
  for (int j = 0; j < 10; ++j) {
    const double h = 1e-7;
    detail::Packed xp = x0, xm = x0;
    xp[static_cast<std::size_t>(j)] += h;
    xm[static_cast<std::size_t>(j)] -= h;
    const auto fp_ = detail::pack_derivative(mean_field_rhs(detail::unpack(xp), p, kappa_mhz));
    const auto fm_ = detail::pack_derivative(mean_field_rhs(detail::unpack(xm), p, kappa_mhz));
    for (int i = 0; i < 10; ++i)
      jac(i, j) = (fp_[static_cast<std::size_t>(i)] - fm_[static_cast<std::size_t>(i)]) / (2.0 * h);
  }
  Eigen::EigenSolver<Eigen::Matrix<double, 10, 10>> es(jac, false);
  return es.eigenvalues().real().maxCoeff();
}

/// Mean-field steady state reached from `seed`.
///
/// The equations are integrated from the seed, then polished by Newton: on the
/// lasing branch in the frame co-rotating with β (so a detuned laser is a fixed
/// point), otherwise on the β = 0 branch. N_pn = |β|².
inline MeanFieldSteady mean_field_steady(const ModelParams& p, const SemiclassicalState& seed,
                                         const MeanFieldOptions& opt = {}) {
  require_valid(p);
  if (!(std::abs(seed.beta) > 0.0))
    throw ValidationError("mean_field_steady: seed must have |beta| > 0 (mean field cannot self-start)");
  const double kappa = effective_kappa(p, opt.apply_purcell);
  const double horizon = std::min(opt.horizon_kappa / to_angular(kappa), opt.max_horizon_us);

  SemiclassicalState s = seed;
  double last_residual = 0.0;
  for (int round = 0; round < 4; ++round) {
    s = integrate_mean_field(s, p, kappa, horizon, opt.rel_tol, opt.abs_tol);
    if (s.n_pn() > opt.lasing_floor) {
      const SemiclassicalState d = mean_field_rhs(s, p, kappa);
      const double offset = -to_mhz((d.beta / s.beta).imag());
      if (auto las = detail::lasing_fixed_point(s, offset, p, kappa, opt.residual_tol)) {
        if (las->n_pn > opt.lasing_floor) {
          las->kappa_eff = kappa;
          return *las;
        }
      }
    }
    double norm = 0.0;
    auto fp = detail::atomic_fixed_point(s, p, kappa, opt.residual_tol, norm);
    last_residual = norm;
    if (fp && zero_field_growth_rate(p, kappa) <= 0.0) {
      MeanFieldSteady out;
      out.state = *fp;
      out.residual = norm;
      out.kappa_eff = kappa;
      return out;
    }
    // unstable zero field but no lasing solution yet: keep integrating
    if (s.n_pn() < 1e-12) s.beta = 0.1;
  }
  throw SolverError("mean_field_steady: no converged steady state after extended horizon", last_residual);
}

/// Default seed: ground state with a small coherent field to break the U(1) symmetry.
inline SemiclassicalState default_seed(double beta = 0.1) {
  SemiclassicalState s;
  s.beta = beta;
  return s;
}

// ---------------------------------------------------------------------------
// Analytic estimators

/// (Γ_fe − Γ_eg)/(3κ_eff), the saturated three-level estimate of the maximal phonon number.
inline double phonon_number_estimate(const ModelParams& p, bool apply_purcell) {
  if (!(p.gamma_fe > p.gamma_eg))
    throw DomainError("phonon_number_estimate: no population inversion (gamma_fe <= gamma_eg)");
  const double kappa = effective_kappa(p, apply_purcell);
  if (!(kappa > 0.0)) throw DomainError("phonon_number_estimate: kappa must be > 0");
  return (p.gamma_fe - p.gamma_eg) / (3.0 * kappa);
}

/// Pump amplitude at which the bare atom reaches inversion, √(Γ_fe Γ_eg).
inline double lasing_threshold(const ModelParams& p) { return std::sqrt(p.gamma_fe * p.gamma_eg); }

struct Linewidth {
  double guide = 0.0;             ///< 2κ/√(2N)
  double schawlow_townes = 0.0;   ///< κ/(2N)
};

inline Linewidth linewidth_estimate(double n_pn, double kappa) {
  if (!(n_pn > 0.0)) throw DomainError("linewidth_estimate: phonon number must be > 0");
  return {2.0 * kappa / std::sqrt(2.0 * n_pn), kappa / (2.0 * n_pn)};
}

/// (Γ_fe s_ff − Γ_eg s_ee − κ N)/(κ N + ε); zero for the empty state.
inline double rate_balance_residual(double s_ee, double s_ff, double n_pn, const ModelParams& p) {
  constexpr double eps = 1e-12;
  const double num = p.gamma_fe * s_ff - p.gamma_eg * s_ee - p.kappa * n_pn;
  if (std::abs(num) < eps && n_pn == 0.0) return 0.0;
  return num / (p.kappa * n_pn + eps);
}

struct LasingEstimates {
  double n_pn_max = 0.0;
  double omega_threshold = 0.0;  ///< MHz
  double omega_optimal = 0.0;    ///< MHz, 2g√N heuristic
  double kappa_purcell = 0.0;    ///< MHz
  double fwhm_estimate_khz = 0.0;
  double fwhm_schawlow_townes_khz = 0.0;
};

/// All closed-form estimates for one κ choice; linewidths use the bare κ.
inline LasingEstimates lasing_estimates(const ModelParams& p, bool apply_purcell) {
  LasingEstimates e;
  e.n_pn_max = phonon_number_estimate(p, apply_purcell);
  e.omega_threshold = lasing_threshold(p);
  e.omega_optimal = 2.0 * p.g * std::sqrt(e.n_pn_max);
  e.kappa_purcell = purcell_kappa(p);
  const Linewidth lw = linewidth_estimate(e.n_pn_max, p.kappa);
  e.fwhm_estimate_khz = 1e3 * lw.guide;
  e.fwhm_schawlow_townes_khz = 1e3 * lw.schawlow_townes;
  return e;
}

}  // namespace saser
