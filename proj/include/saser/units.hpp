#pragma once

#include <complex>
#include <numbers>

namespace saser {

using Complex = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Every user-facing frequency or rate is f = ω/2π in MHz. The dynamics run in
// angular units (rad/µs, so time is in µs). These two functions are the only
// place the factor 2π is applied.
constexpr double to_angular(double mhz) noexcept { return two_pi * mhz; }
constexpr double to_mhz(double rad_per_us) noexcept { return rad_per_us / two_pi; }

/// Resonator frequency of the device, kept as display metadata only.
inline constexpr double resonator_frequency_ghz = 3.21;

}  // namespace saser
