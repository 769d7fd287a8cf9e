#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "saser/errors.hpp"
#include "saser/units.hpp"

namespace saser::fit {

// All evaluators take frequencies and rates in one consistent unit (the SI
// spectroscopy formulas are written in f = ω/2π without explicit 2π factors).

/// Notch transmission of a driven two-level transition:
/// S21 = 1 − (Γ1/2Γ2)·(1 + iΔ/Γ2) / (1 + Δ²/Γ2² + Ω²/(Γ1Γ2)), Δ = f − f0.
inline Complex eval_notch_ge(double f, double gamma1, double gamma2, double f0, double omega) {
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) throw DomainError("eval_notch_ge: rates must be > 0");
  const double x = (f - f0) / gamma2;
  const Complex num(1.0, x);
  const double den = 1.0 + x * x + omega * omega / (gamma1 * gamma2);
  return 1.0 - (gamma1 / (2.0 * gamma2)) * num / den;
}

/// Notch transmission probed on g↔f of the pumped three-level atom:
/// S21 = 1 − (Γ1/2Γ2) / (1 − 2iΔ/Γ2 + Ω²(2 + Γ_fe/Γ_eg) / (Γ2(Γ2 + 2iΔ))).
/// With only the atom's own decay, Γ1 = Γ_fg and Γ2 = Γ_fe + Γ_fg.
inline Complex eval_notch_gf(double f, double gamma1, double gamma2, double f0, double omega, double fe_over_eg) {
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) throw DomainError("eval_notch_gf: rates must be > 0");
  if (!(fe_over_eg >= 0.0)) throw DomainError("eval_notch_gf: rate ratio must be >= 0");
  const double d = f - f0;
  const Complex den = Complex(1.0, -2.0 * d / gamma2) +
                      omega * omega * (2.0 + fe_over_eg) / (gamma2 * Complex(gamma2, 2.0 * d));
  return 1.0 - (gamma1 / (2.0 * gamma2)) / den;
}

/// Loaded resonator transmission |S21|² = a²Q²/(1 + 4Q²(f/f0 − 1)²); FWHM = f0/Q.
inline double eval_lorentzian_resonator(double f, double q, double f0, double a) {
  if (!(q > 0.0) || !(f0 > 0.0)) throw DomainError("eval_lorentzian_resonator: Q and f0 must be > 0");
  const double x = f / f0 - 1.0;
  return a * a * q * q / (1.0 + 4.0 * q * q * x * x);
}

namespace detail {

/// Weideman's rational expansion of the Faddeeva function, valid for Im z ≥ 0.
/// 64 terms keep the relative error far below 1e-6 over the Voigt range.
struct Weideman {
  static constexpr int terms = 64;
  double l;
  std::array<double, terms> coef;  // coefficient of Z^k, k = 0..terms−1

  Weideman() {
    constexpr int m = 2 * terms;
    constexpr int m2 = 2 * m;
    l = std::sqrt(terms / std::numbers::sqrt2);
    std::array<double, m2> f{};
    for (int k = -m + 1; k <= m - 1; ++k) {
      const double t = l * std::tan(k * std::numbers::pi / m2);
      f[static_cast<std::size_t>(k + m)] = std::exp(-t * t) * (l * l + t * t);
    }
    // f[0] = 0 is the t = ±∞ sample. Coefficients are the DFT of fftshift(f).
    for (int k = 1; k <= terms; ++k) {
      double acc = 0.0;
      for (int j = 0; j < m2; ++j) {
        const double shifted = f[static_cast<std::size_t>((j + m) % m2)];
        acc += shifted * std::cos(2.0 * std::numbers::pi * j * k / m2);
      }
      coef[static_cast<std::size_t>(k - 1)] = acc / m2;
    }
  }

  Complex operator()(Complex z) const {
    const Complex lz = Complex(l, 0.0) - Complex(0.0, 1.0) * z;
    const Complex big_z = (Complex(l, 0.0) + Complex(0.0, 1.0) * z) / lz;
    Complex p = 0.0;
    for (int k = terms - 1; k >= 0; --k) p = p * big_z + coef[static_cast<std::size_t>(k)];
    return 2.0 * p / (lz * lz) + (1.0 / std::sqrt(std::numbers::pi)) / lz;
  }
};

inline const Weideman& weideman() {
  static const Weideman w;
  return w;
}

}  // namespace detail

/// Faddeeva function w(z) = e^{−z²} erfc(−iz) for Im z ≥ 0.
inline Complex faddeeva(Complex z) {
  if (z.imag() < 0.0) throw DomainError("faddeeva: only the upper half plane is supported");
  return detail::weideman()(z);
}

/// Unit-area Voigt profile at offset x from the centre.
inline double voigt_profile(double x, double lorentz_fwhm, double gauss_fwhm) {
  if (lorentz_fwhm < 0.0 || gauss_fwhm < 0.0) throw DomainError("voigt_profile: widths must be >= 0");
  if (lorentz_fwhm == 0.0 && gauss_fwhm == 0.0) throw DomainError("voigt_profile: both widths are zero");
  const double gamma = 0.5 * lorentz_fwhm;
  if (gauss_fwhm == 0.0) return gamma / (std::numbers::pi * (x * x + gamma * gamma));
  const double sigma = gauss_fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  if (gamma == 0.0) return norm * std::exp(-0.5 * x * x / (sigma * sigma));
  const Complex z = Complex(x, gamma) / (sigma * std::numbers::sqrt2);
  return norm * faddeeva(z).real();
}

/// amplitude·V(f − center) + background, amplitude being the line area.
inline double eval_voigt(double f, double center, double lorentz_fwhm, double gauss_fwhm, double amplitude,
                         double background) {
  return amplitude * voigt_profile(f - center, lorentz_fwhm, gauss_fwhm) + background;
}

/// FWHM approximation f_V ≈ 0.5346 f_L + √(0.2166 f_L² + f_G²).
inline double voigt_fwhm_approx(double lorentz_fwhm, double gauss_fwhm) {
  return 0.5346 * lorentz_fwhm + std::sqrt(0.2166 * lorentz_fwhm * lorentz_fwhm + gauss_fwhm * gauss_fwhm);
}

}  // namespace saser::fit
