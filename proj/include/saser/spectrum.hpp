#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "saser/lindblad.hpp"

namespace saser {

/// Emission power spectral density relative to the resonator frequency.
struct Spectrum {
  std::vector<double> freq_mhz;  ///< grid, (ω − ω_r)/2π
  std::vector<double> psd;       ///< phonons per MHz; ∫ psd df = ⟨b†b⟩ over the full line
  double n_ss = 0.0;             ///< ⟨b†b⟩ of the state the correlation started from
  double grid_integral = 0.0;    ///< trapezoid ∫ psd df over the supplied grid
  double tail_ratio = 0.0;       ///< |C(τ_end)| / |C(0)|
  double horizon_us = 0.0;
  double max_clip = 0.0;         ///< largest negative value set to 0
  std::vector<std::string> warnings;

  /// grid_integral / n_ss, the sum-rule ratio.
  double sum_rule() const { return n_ss > 0.0 ? grid_integral / n_ss : 0.0; }
};

struct SpectrumOptions {
  double tail_tol = 1e-4;          ///< stop once |C| stays below tail_tol·|C(0)|
  double max_horizon_us = 2000.0;
  double samples_per_period = 10.0;  ///< of the fastest frequency on the grid or in L
  EvolveOptions evolve{};
};

namespace detail {

/// U(1) charge b†b + σ_ee of each basis state; the pump, the coupling and all
/// decay channels conserve the charge difference between ket and bra.
inline std::vector<int> excitation_charge(const HilbertSpace& space) {
  std::vector<int> q(static_cast<std::size_t>(space.dim()));
  for (int a = 0; a < atom_levels; ++a)
    for (int n = 0; n < space.fock_dim(); ++n)
      q[static_cast<std::size_t>(space.index(static_cast<Level>(a), n))] = n + (a == static_cast<int>(Level::e) ? 1 : 0);
  return q;
}

struct Sector {
  std::vector<Eigen::Index> index;  ///< vec indices kept
  Eigen::SparseMatrix<Complex> block;
};

/// Restriction of L to vec indices with charge(row) − charge(col) = k, or an
/// empty sector if L couples it to the outside.
inline Sector charge_sector(const SuperOperator& l, const HilbertSpace& space, int k) {
  const auto q = excitation_charge(space);
  const int d = l.dim;
  std::vector<Eigen::Index> map(static_cast<std::size_t>(d) * d, -1);
  Sector s;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i)
      if (q[i] - q[j] == k) {
        map[static_cast<std::size_t>(i + j * d)] = static_cast<Eigen::Index>(s.index.size());
        s.index.push_back(i + static_cast<Eigen::Index>(j) * d);
      }
  std::vector<Eigen::Triplet<Complex>> t;
  for (std::size_t c = 0; c < s.index.size(); ++c)
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(l.matrix, s.index[c]); it; ++it) {
      const Eigen::Index r = map[static_cast<std::size_t>(it.row())];
      if (r < 0) return {};
      t.emplace_back(r, static_cast<Eigen::Index>(c), it.value());
    }
  const auto n = static_cast<Eigen::Index>(s.index.size());
  s.block.resize(n, n);
  s.block.setFromTriplets(t.begin(), t.end());
  s.block.makeCompressed();
  return s;
}

/// ∫₀ʰ e^{−iθs/h}(a + (b−a)s/h) ds / h, exact for the linear interpolant.
inline Complex linear_segment_weight(double theta, Complex a, Complex b) {
  Complex alpha, beta;
  if (std::abs(theta) < 1e-3) {
    const Complex it(0.0, theta);
    alpha = 1.0 - it / 2.0 + it * it / 6.0 - it * it * it / 24.0;
    beta = 0.5 - it / 3.0 + it * it / 8.0 - it * it * it / 30.0;
  } else {
    const Complex e = std::exp(Complex(0.0, -theta));
    alpha = (1.0 - e) / Complex(0.0, theta);
    beta = e * (Complex(0.0, 1.0 / theta) + 1.0 / (theta * theta)) - 1.0 / (theta * theta);
  }
  return a * (alpha - beta) + b * beta;
}

}  // namespace detail

/// One-sided Fourier transform S(f) = 2 Re ∫₀^T e^{−i2πfτ} C(τ) dτ of a correlation
/// sampled uniformly with step dtau (µs), integrating the linear interpolant exactly.
inline std::vector<double> correlation_to_psd(std::span<const Complex> corr, double dtau,
                                              std::span<const double> freq_mhz) {
  std::vector<double> out(freq_mhz.size(), 0.0);
  for (std::size_t k = 0; k < freq_mhz.size(); ++k) {
    const double omega = to_angular(freq_mhz[k]);
    const double theta = omega * dtau;
    const Complex step = std::exp(Complex(0.0, -theta));
    Complex phase = 1.0, acc = 0.0;
    for (std::size_t i = 0; i + 1 < corr.size(); ++i) {
      if (i % 512 == 0) phase = std::exp(Complex(0.0, -theta * static_cast<double>(i)));
      acc += phase * detail::linear_segment_weight(theta, corr[i], corr[i + 1]);
      phase *= step;
    }
    out[k] = 2.0 * (acc * dtau).real();
  }
  return out;
}

inline double trapezoid(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

/// Frequency grid for a single line: uniform with `core_points` samples over
/// center ± core_halfwidth, then `wing_points` geometrically spaced samples on
/// each side out to center ± span.
inline std::vector<double> line_grid(double center_mhz, double core_halfwidth, double span, std::size_t core_points = 201,
                                     std::size_t wing_points = 80) {
  if (!(core_halfwidth > 0.0) || !(span > core_halfwidth) || core_points < 3)
    throw ValidationError("line_grid: need 0 < core_halfwidth < span and at least 3 core points");
  std::vector<double> wing(wing_points);
  const double ratio = std::pow(span / core_halfwidth, 1.0 / static_cast<double>(std::max<std::size_t>(wing_points, 1)));
  double r = core_halfwidth;
  for (std::size_t i = 0; i < wing_points; ++i) wing[i] = (r *= ratio);
  std::vector<double> out;
  out.reserve(core_points + 2 * wing_points);
  for (auto it = wing.rbegin(); it != wing.rend(); ++it) out.push_back(center_mhz - *it);
  for (std::size_t i = 0; i < core_points; ++i)
    out.push_back(center_mhz - core_halfwidth + 2.0 * core_halfwidth * static_cast<double>(i) / static_cast<double>(core_points - 1));
  for (double w : wing) out.push_back(center_mhz + w);
  return out;
}

/// Emission spectrum by the quantum regression theorem.
///
/// C(τ) = ⟨b†(τ) b(0)⟩ = tr[b† e^{Lτ}(b ρ_ss)] and
/// S(f) = 2 Re ∫₀^∞ e^{−i2πfτ} C(τ) dτ, so a line at ω_r + 2πf₀ peaks at f = +f₀
/// and ∫ S df = ⟨b†b⟩. The propagation is restricted to the charge sector of
/// b ρ_ss whenever L conserves it.
inline Spectrum emission_spectrum(const SuperOperator& l, const DensityMatrix& rho_ss, std::span<const double> freq_mhz,
                                  const SpectrumOptions& opt = {}) {
  if (rho_ss.dim() != l.dim) throw DimensionError("emission_spectrum: state and generator dimensions differ");
  for (std::size_t i = 1; i < freq_mhz.size(); ++i)
    if (!(freq_mhz[i] > freq_mhz[i - 1])) throw ValidationError("emission_spectrum: frequency grid must be increasing");

  const HilbertSpace space = HilbertSpace::from_dim(l.dim);
  const OperatorMatrix b = mode_op(space);
  const OperatorMatrix bdag = b.adjoint();
  Spectrum out;
  out.freq_mhz.assign(freq_mhz.begin(), freq_mhz.end());
  out.psd.assign(freq_mhz.size(), 0.0);
  out.n_ss = expectation(rho_ss, OperatorMatrix(bdag * b)).real();
  if (out.n_ss < 1e-14) return out;

  const int d = l.dim;
  const Eigen::MatrixXcd x0 = b * rho_ss.matrix();

  // Work in the −1 charge sector when possible.
  detail::Sector sector = detail::charge_sector(l, space, -1);
  const bool reduced = !sector.index.empty();
  SuperOperator gen;
  StateVector state;
  std::vector<Complex> weight;  // C = Σ weight·x
  if (reduced) {
    gen = SuperOperator{d, std::move(sector.block)};
    state.resize(sector.index.size());
    weight.resize(sector.index.size());
    for (std::size_t c = 0; c < sector.index.size(); ++c) {
      const Eigen::Index v = sector.index[c];
      const Eigen::Index row = v % d, col = v / d;
      state[c] = x0(row, col);
      weight[c] = bdag.coeff(col, row);
    }
  } else {
    gen = l;
    state.assign(x0.data(), x0.data() + x0.size());
    weight.assign(static_cast<std::size_t>(d) * d, 0.0);
    for (Eigen::Index k = 0; k < bdag.outerSize(); ++k)
      for (OperatorMatrix::InnerIterator it(bdag, k); it; ++it)
        weight[static_cast<std::size_t>(it.col() + it.row() * d)] = it.value();
  }
  auto observe = [&](const StateVector& x) {
    Complex c = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) c += weight[i] * x[i];
    return c;
  };

  double f_max = 0.0;
  for (double f : freq_mhz) f_max = std::max(f_max, std::abs(f));
  f_max = std::max(f_max, to_mhz(l.scale()));
  const double dtau = 1.0 / (opt.samples_per_period * f_max);

  const Complex c0 = observe(state);
  std::vector<Complex> corr{c0};
  const std::size_t chunk = 256;
  double t0 = 0.0;
  bool decayed = false;
  while (!decayed && t0 < opt.max_horizon_us) {
    std::vector<double> times(chunk + 1);
    for (std::size_t i = 0; i <= chunk; ++i) times[i] = t0 + dtau * static_cast<double>(i);
    double chunk_max = 0.0;
    StateVector last;
    propagate(
        gen, state, times,
        [&](const StateVector& x, double t) {
          if (t == times.front()) return;
          const Complex c = observe(x);
          corr.push_back(c);
          chunk_max = std::max(chunk_max, std::abs(c));
          last = x;
        },
        opt.evolve);
    state = std::move(last);
    t0 = times.back();
    decayed = chunk_max < opt.tail_tol * std::abs(c0);
  }
  out.horizon_us = t0;
  out.tail_ratio = std::abs(corr.back()) / std::abs(c0);
  if (!decayed)
    out.warnings.push_back("correlation not decayed within " + std::to_string(t0) +
                           " us horizon; tail ratio " + std::to_string(out.tail_ratio));

  out.psd = correlation_to_psd(corr, dtau, freq_mhz);
  for (double& v : out.psd) {
    if (v < 0.0) {
      out.max_clip = std::max(out.max_clip, -v);
      v = 0.0;
    }
  }
  out.grid_integral = trapezoid(out.freq_mhz, out.psd);
  return out;
}

}  // namespace saser
