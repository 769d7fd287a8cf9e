#pragma once

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "saser/lindblad.hpp"
#include "saser/spectrum.hpp"

namespace saser {

enum class ProbeMethod {
  linear_response,  ///< first order in the drive, one sector solve per point
  driven,           ///< full steady state with the drive term, per point
};

struct ProbeOptions {
  /// Drive strength as the bare-resonator amplitude it would produce on
  /// resonance, |⟨b⟩| = 2ε/κ.
  double amplitude = 0.01;
  ProbeMethod method = ProbeMethod::linear_response;
  bool check_linearity = true;
  double linearity_tol = 0.01;
  SteadyStateOptions steady{.residual_tol = 1e-10, .verify_unique = false, .uniqueness_tol = 1e-6};
};

struct ProbeResult {
  std::vector<double> detuning_mhz;
  std::vector<Complex> t;  ///< normalised so the bare resonator has t = 1 on resonance
  double s21_scale = 0.0;  ///< |S21| = |t|·s21_scale for the given port couplings
  /// |t(ε) − t(ε/2)| / |t(ε)| from driven solves at the largest-|t| point
  double nonlinearity = 0.0;
  /// |t_driven(ε) − t| / |t| at the same point (linear-response method only)
  double driven_deviation = 0.0;
  double n_ss = 0.0;     ///< ⟨b†b⟩ of the unprobed steady state
  CutoffCheck cutoff{};  ///< of the unprobed steady state
  std::vector<std::string> warnings;
};

/// Steady-state probe response with the drive included, in the frame
/// co-rotating with the probe.
///
/// |e⟩ and the resonator are moved to the probe frequency, |f⟩ stays with the
/// pump, so H' = H − δ_p(b†b + σ_ee) + ε(b + b†) is static. Every term of the
/// model conserves b†b + σ_ee apart from the probe itself, so no rotating
/// terms are dropped.
inline Complex probe_response(const ModelParams& p, double detuning_mhz, double amplitude,
                              const SteadyStateOptions& steady = {}) {
  const HilbertSpace space(p.fock_cutoff);
  const OperatorMatrix b = mode_op(space);
  const double kappa = to_angular(p.kappa);
  const double eps = 0.5 * amplitude * kappa;

  OperatorMatrix h = build_hamiltonian(p, space);
  const OperatorMatrix shift = number_op(space) + atomic_op(space, Level::e, Level::e);
  h -= Complex(to_angular(detuning_mhz)) * shift;
  h += Complex(eps) * (b + OperatorMatrix(b.adjoint()));
  const auto channels = build_collapse_ops(p, space);
  const DensityMatrix rho = steady_state(liouvillian(h, channels), steady);
  const Complex mean_b = expectation(rho, b);
  return Complex(0.0, kappa) * mean_b / (2.0 * eps);
}

/// Weak-probe response in the limit ε → 0.
///
/// With ρ = ρ₀ + ερ₁, the first-order part obeys (L + iδ_p[N, ·])ρ₁ = i[b + b†, ρ₀].
/// ρ₀ is charge-diagonal, and only the +1 charge sector of ρ₁ contributes to ⟨b⟩.
/// On that sector the frame shift is the scalar iδ_p, so one sparse block of L
/// serves every detuning.
class LinearProbe {
 public:
  explicit LinearProbe(const ModelParams& p, const SteadyStateOptions& steady = {}) : kappa_(to_angular(p.kappa)) {
    const HilbertSpace space(p.fock_cutoff);
    const SuperOperator l = liouvillian(p);
    rho0_ = steady_state(l, steady);
    const DensityMatrix& rho0 = rho0_;
    detail::Sector sector = detail::charge_sector(l, space, +1);
    if (sector.index.empty()) throw SolverError("linear probe: Liouvillian does not conserve the excitation charge");
    block_ = std::move(sector.block);

    const OperatorMatrix b = mode_op(space);
    const Eigen::MatrixXcd bd = Eigen::MatrixXcd(b.adjoint());
    const Eigen::MatrixXcd src = Complex(0.0, 1.0) * (bd * rho0.matrix() - rho0.matrix() * bd);
    const int d = l.dim;
    source_.resize(static_cast<Eigen::Index>(sector.index.size()));
    weight_.resize(source_.size());
    for (std::size_t c = 0; c < sector.index.size(); ++c) {
      const Eigen::Index v = sector.index[c];
      const Eigen::Index row = v % d, col = v / d;
      source_(static_cast<Eigen::Index>(c)) = src(row, col);
      weight_(static_cast<Eigen::Index>(c)) = b.coeff(col, row);  // tr(b X) = Σ b_cr X_rc
    }
  }

  Complex operator()(double detuning_mhz) const {
    Eigen::SparseMatrix<Complex> a = block_;
    Eigen::SparseMatrix<Complex> id(a.rows(), a.cols());
    id.setIdentity();
    a += Complex(0.0, to_angular(detuning_mhz)) * id;
    Eigen::SparseLU<Eigen::SparseMatrix<Complex>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw SolverError("linear probe: singular response block");
    const Eigen::VectorXcd rho1 = lu.solve(source_);
    const Complex db = (weight_.array() * rho1.array()).sum();
    return Complex(0.0, 0.5 * kappa_) * db;
  }

  /// Steady state without the probe.
  const DensityMatrix& unprobed_state() const noexcept { return rho0_; }

 private:
  double kappa_;
  DensityMatrix rho0_;
  Eigen::SparseMatrix<Complex> block_;
  Eigen::VectorXcd source_;
  Eigen::VectorXcd weight_;
};

inline ProbeResult probe_transmission(const ModelParams& p, std::span<const double> detunings_mhz,
                                      const ProbeOptions& opt = {}) {
  require_valid(p);
  if (!(p.kappa_in > 0.0) || !(p.kappa_out > 0.0))
    throw ValidationError("probe_transmission requires kappa_in > 0 and kappa_out > 0");
  if (!(opt.amplitude > 0.0)) throw ValidationError("probe amplitude must be > 0");

  ProbeResult out;
  out.detuning_mhz.assign(detunings_mhz.begin(), detunings_mhz.end());
  out.s21_scale = 2.0 * std::sqrt(p.kappa_in * p.kappa_out) / p.kappa;
  out.t.reserve(detunings_mhz.size());
  DensityMatrix rho0;
  if (opt.method == ProbeMethod::linear_response) {
    const LinearProbe probe(p, opt.steady);
    for (double d : detunings_mhz) out.t.push_back(probe(d));
    rho0 = probe.unprobed_state();
  } else {
    for (double d : detunings_mhz) out.t.push_back(probe_response(p, d, opt.amplitude, opt.steady));
    rho0 = steady_state(liouvillian(p), opt.steady);
  }
  out.n_ss = expectation(rho0, number_op(HilbertSpace(p.fock_cutoff))).real();
  out.cutoff = cutoff_check(rho0);
  if (!out.cutoff.converged)
    out.warnings.push_back("fock_cutoff " + std::to_string(p.fock_cutoff) + " too small: top Fock levels hold " +
                           std::to_string(out.cutoff.top_weight) + " of the population");

  if (opt.check_linearity && !out.t.empty()) {
    std::size_t peak = 0;
    for (std::size_t i = 1; i < out.t.size(); ++i)
      if (std::abs(out.t[i]) > std::abs(out.t[peak])) peak = i;
    const double d = detunings_mhz[peak];
    const Complex full = opt.method == ProbeMethod::driven ? out.t[peak] : probe_response(p, d, opt.amplitude, opt.steady);
    const Complex half = probe_response(p, d, 0.5 * opt.amplitude, opt.steady);
    out.nonlinearity = std::abs(full - half) / std::max(std::abs(full), 1e-300);
    if (opt.method == ProbeMethod::linear_response)
      out.driven_deviation = std::abs(full - out.t[peak]) / std::max(std::abs(out.t[peak]), 1e-300);
    if (out.nonlinearity >= opt.linearity_tol)
      out.warnings.push_back("probe response is nonlinear: halving the amplitude changes t by " +
                             std::to_string(100.0 * out.nonlinearity) + "%");
  }
  return out;
}

/// Local maxima of |t| above rel_floor·max|t|, refined by a parabola through
/// the three samples around each maximum. Sorted by detuning.
inline std::vector<double> transmission_peaks(std::span<const double> detuning_mhz, std::span<const Complex> t,
                                              double rel_floor = 0.1) {
  if (detuning_mhz.size() != t.size()) throw DimensionError("transmission_peaks: length mismatch");
  std::vector<double> mag(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) mag[i] = std::abs(t[i]);
  std::vector<double> out;
  if (mag.size() < 3) return out;
  const double floor = rel_floor * *std::max_element(mag.begin(), mag.end());
  for (std::size_t i = 1; i + 1 < mag.size(); ++i) {
    if (!(mag[i] > floor && mag[i] > mag[i - 1] && mag[i] >= mag[i + 1])) continue;
    const double x0 = detuning_mhz[i - 1], x1 = detuning_mhz[i], x2 = detuning_mhz[i + 1];
    const double y0 = mag[i - 1], y1 = mag[i], y2 = mag[i + 1];
    const double den = (x0 - x1) * (x0 - x2) * (x1 - x2);
    const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den;
    const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den;
    out.push_back(a < 0.0 ? std::clamp(-b / (2.0 * a), x0, x2) : x1);
  }
  return out;
}

}  // namespace saser
