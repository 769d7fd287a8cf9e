#include <gtest/gtest.h>

#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/KroneckerProduct>

#include "helpers.hpp"
#include "saser/fit/curve.hpp"
#include "saser/probe.hpp"

using namespace saser;

namespace {

std::vector<double> grid(double a, double b, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / (n - 1));
  return v;
}

/// Peak positions (local maxima of |t|) above `floor`.
std::vector<double> peaks(const ProbeResult& r, double floor) {
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < r.t.size(); ++i) {
    const double v = std::abs(r.t[i]);
    if (v > floor && v > std::abs(r.t[i - 1]) && v >= std::abs(r.t[i + 1])) out.push_back(r.detuning_mhz[i]);
  }
  return out;
}

/// Transmission from explicit time evolution with the drive ε(b e^{iδt} + b† e^{−iδt})
/// in the pump frame, after transients have decayed.
Complex time_domain_t(const ModelParams& p, double detuning, double amplitude) {
  namespace ode = boost::numeric::odeint;
  const HilbertSpace s(p.fock_cutoff);
  const SuperOperator l0 = liouvillian(p);
  const OperatorMatrix b = mode_op(s);
  OperatorMatrix id(s.dim(), s.dim());
  id.setIdentity();
  using Sparse = Eigen::SparseMatrix<Complex>;
  auto comm = [&](const OperatorMatrix& a) {
    Sparse left = Eigen::kroneckerProduct(id, a);
    Sparse right = Eigen::kroneckerProduct(OperatorMatrix(a.transpose()), id);
    return Sparse(Complex(0.0, -1.0) * (left - right));
  };
  const Sparse kb = comm(b), kbd = comm(OperatorMatrix(b.adjoint()));
  const double kappa = to_angular(p.kappa), eps = 0.5 * amplitude * kappa, w = to_angular(detuning);

  using State = std::vector<Complex>;
  State x(static_cast<std::size_t>(s.dim()) * s.dim(), 0.0);
  x[0] = 1.0;  // |g,0⟩⟨g,0|
  auto rhs = [&](const State& in, State& out, double t) {
    out.resize(in.size());
    Eigen::Map<const Eigen::VectorXcd> v(in.data(), static_cast<Eigen::Index>(in.size()));
    Eigen::Map<Eigen::VectorXcd> o(out.data(), static_cast<Eigen::Index>(out.size()));
    o = l0.matrix * v + eps * std::exp(Complex(0.0, w * t)) * (kb * v) + eps * std::exp(Complex(0.0, -w * t)) * (kbd * v);
  };
  const double t_settle = 40.0 / kappa;
  auto stepper = ode::make_dense_output(1e-11, 1e-9, ode::runge_kutta_dopri5<State>());
  ode::integrate_adaptive(stepper, rhs, x, 0.0, t_settle, 1e-4);
  // average ⟨b⟩e^{iδt} over one probe period
  const int n = 64;
  const double period = w != 0.0 ? two_pi / std::abs(w) : 1.0;
  Complex acc = 0.0;
  double t = t_settle;
  for (int k = 0; k < n; ++k) {
    const double t_next = t_settle + period * (k + 1) / n;
    ode::integrate_adaptive(stepper, rhs, x, t, t_next, 1e-4);
    t = t_next;
    const Eigen::MatrixXcd rho = Eigen::Map<const Eigen::MatrixXcd>(x.data(), s.dim(), s.dim());
    acc += (Eigen::MatrixXcd(b) * rho).trace() * std::exp(Complex(0.0, w * t));
  }
  return Complex(0.0, kappa) * (acc / double(n)) / (2.0 * eps);
}

}  // namespace

TEST(Probe, BareResonatorLorentzian) {
  ModelParams p;
  p.kappa = 2.0;
  p.kappa_in = p.kappa_out = 1.0;
  p.delta_ge = 5000.0;
  p.fock_cutoff = 3;
  const auto det = line_grid(0.0, 3.0, 300.0, 601, 100);
  const ProbeResult r = probe_transmission(p, det);
  double mx = 0.0;
  std::vector<double> mag2;
  for (const auto& t : r.t) {
    mx = std::max(mx, std::abs(t));
    mag2.push_back(std::norm(t));
  }
  EXPECT_NEAR(mx, 1.0, 1e-3);
  EXPECT_NEAR(fit::fwhm(fit::CurveData::real(det, mag2, fit::YKind::magnitude_squared)), p.kappa, 0.01);
  EXPECT_DOUBLE_EQ(r.s21_scale, 1.0);
  EXPECT_LT(r.nonlinearity, 1e-6);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Probe, NormalisationOnResonance) {
  ModelParams p;
  p.g = 0.0;
  p.kappa = 1.3;
  p.kappa_in = p.kappa_out = 0.65;
  p.fock_cutoff = 2;
  const std::vector<double> det{0.0};
  EXPECT_NEAR(std::abs(probe_transmission(p, det).t[0] - 1.0), 0.0, 1e-10);
}

TEST(Probe, VacuumRabiDoubletForNarrowAtom) {
  ModelParams p;
  p.gamma_eg = 2.0;
  p.kappa = 2.0;
  p.kappa_in = p.kappa_out = 1.0;
  p.fock_cutoff = 3;
  const ProbeResult r = probe_transmission(p, grid(-30.0, 30.0, 1201));
  const auto pk = peaks(r, 0.05);
  ASSERT_EQ(pk.size(), 2u);
  EXPECT_NEAR(pk[1] - pk[0], 2.0 * p.g, 0.05 * 2.0 * p.g);
}

TEST(Probe, PumpedHotSpotExceedsUnity) {
  ModelParams p;
  p.kappa = 2.0;
  p.kappa_in = p.kappa_out = 1.0;
  p.fock_cutoff = 30;
  const std::vector<double> det{0.0};
  ModelParams off = p;
  p.omega_pump = 100.0;
  ProbeOptions opt;
  opt.check_linearity = true;
  const ProbeResult on = probe_transmission(p, det, opt);
  const ProbeResult bare = probe_transmission(off, det, opt);
  EXPECT_GT(std::abs(on.t[0]), 1.0);
  EXPECT_LT(std::abs(bare.t[0]), 1.0);
  EXPECT_LT(on.nonlinearity, 0.01);
  EXPECT_LT(on.driven_deviation, 0.01);
}

TEST(Probe, LinearResponseMatchesDrivenSolve) {
  ModelParams p = saser::testing::desk_params(0.8, 90.0, 20);
  p.delta_ge = 4.0;
  p.gamma_phi_e = 1.0;
  const LinearProbe lin(p);
  for (double d : {-9.0, -0.4, 0.0, 0.3, 6.0}) {
    const Complex a = lin(d);
    const Complex b = probe_response(p, d, 1e-3, {.residual_tol = 1e-10, .verify_unique = false});
    EXPECT_LT(std::abs(a - b), 1e-4 * std::max(1.0, std::abs(a))) << d;
  }
}

TEST(Probe, TimeDomainSpotChecks) {
  ModelParams p;
  p.kappa = 2.0;
  p.kappa_in = p.kappa_out = 1.0;
  p.omega_pump = 40.0;
  p.delta_ge = 3.0;
  p.delta_gf = 1.5;
  p.fock_cutoff = 5;
  const double amp = 0.01;
  for (double d : {-4.0, 0.0, 2.5}) {
    const Complex ref = time_domain_t(p, d, amp);
    const Complex t = probe_response(p, d, amp, {.residual_tol = 1e-10, .verify_unique = false});
    EXPECT_LT(std::abs(t - ref), 1e-4 * std::max(1.0, std::abs(ref))) << d;
  }
}

TEST(Probe, InputValidation) {
  ModelParams p;
  p.kappa_in = 0.0;
  const std::vector<double> det{0.0};
  EXPECT_THROW(probe_transmission(p, det), ValidationError);
  p.kappa_in = 0.047;
  ProbeOptions opt;
  opt.amplitude = 0.0;
  EXPECT_THROW(probe_transmission(p, det, opt), ValidationError);
}

TEST(Probe, StrongDriveFlagsNonlinearity) {
  ModelParams p;
  p.kappa = 2.0;
  p.kappa_in = p.kappa_out = 1.0;
  p.fock_cutoff = 25;
  ProbeOptions opt;
  opt.amplitude = 3.0;  // |⟨b⟩| ~ 3 saturates the resonant atom
  opt.method = ProbeMethod::driven;
  const std::vector<double> det{-11.0, 0.0, 11.0};
  const ProbeResult r = probe_transmission(p, det, opt);
  EXPECT_GT(r.nonlinearity, 0.01);
  EXPECT_FALSE(r.warnings.empty());
}
