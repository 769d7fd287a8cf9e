#include <gtest/gtest.h>

#include <Eigen/SparseLU>

#include "helpers.hpp"
#include "saser/fit/curve.hpp"
#include "saser/spectrum.hpp"

using namespace saser;

namespace {

DensityMatrix thermal_state(const HilbertSpace& s, double nbar) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(s.dim(), s.dim());
  const double q = nbar / (1.0 + nbar);
  double norm = 0.0;
  for (int n = 0; n <= s.fock_cutoff(); ++n) norm += std::pow(q, n);
  for (int n = 0; n <= s.fock_cutoff(); ++n) m(s.index(Level::g, n), s.index(Level::g, n)) = std::pow(q, n) / norm;
  return DensityMatrix(m);
}

/// S(f) from the resolvent: 2 Re tr[b† (iω − L)⁻¹ (b ρ)].
std::vector<double> resolvent_psd(const SuperOperator& l, const DensityMatrix& rho, const std::vector<double>& f) {
  const HilbertSpace s = HilbertSpace::from_dim(l.dim);
  const OperatorMatrix b = mode_op(s);
  const Eigen::MatrixXcd x0 = b * rho.matrix();
  const Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(x0.data(), x0.size());
  const Eigen::MatrixXcd bd = Eigen::MatrixXcd(b.adjoint());
  std::vector<double> out;
  for (double fk : f) {
    Eigen::SparseMatrix<Complex> a = -l.matrix;
    Eigen::SparseMatrix<Complex> id(a.rows(), a.cols());
    id.setIdentity();
    a += Complex(0.0, to_angular(fk)) * id;
    Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu(a);
    const Eigen::VectorXcd y = lu.solve(v);
    const Eigen::MatrixXcd ym = Eigen::Map<const Eigen::MatrixXcd>(y.data(), l.dim, l.dim);
    out.push_back(2.0 * (bd * ym).trace().real());
  }
  return out;
}

}  // namespace

TEST(Spectrum, ThermalModeIsLorentzianOfWidthKappa) {
  const HilbertSpace s(12);
  const double kappa = 1.0, nbar = 0.5;
  const OperatorMatrix h(s.dim(), s.dim());
  const std::vector<CollapseChannel> ch{{"resonator", mode_op(s), to_angular(kappa)}};
  const SuperOperator l = liouvillian(h, ch);
  const DensityMatrix rho = thermal_state(s, nbar);
  const auto grid = line_grid(0.0, 5.0 * kappa, 400.0 * kappa, 401, 120);
  SpectrumOptions opt;
  opt.tail_tol = 1e-6;
  const Spectrum sp = emission_spectrum(l, rho, grid, opt);
  const double n = sp.n_ss;
  const double k = to_angular(kappa);
  const double peak = 4.0 * n / k;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = to_angular(grid[i]);
    const double expect = n * k / (0.25 * k * k + w * w);
    EXPECT_NEAR(sp.psd[i], expect, 1e-4 * peak) << grid[i];
  }
  const fit::CurveData c = fit::CurveData::real(grid, sp.psd);
  EXPECT_NEAR(fit::fwhm(c), kappa, 5e-3 * kappa);
  EXPECT_TRUE(sp.warnings.empty());
  EXPECT_NEAR(sp.sum_rule(), 1.0, 0.02);
}

TEST(Spectrum, VacuumGivesZero) {
  ModelParams p;
  p.fock_cutoff = 3;
  const SuperOperator l = liouvillian(p);
  const DensityMatrix ss = steady_state(l);
  const std::vector<double> grid{-1.0, 0.0, 1.0};
  const Spectrum sp = emission_spectrum(l, ss, grid);
  for (double v : sp.psd) EXPECT_EQ(v, 0.0);
}

TEST(Spectrum, MatchesResolventOnPumpedInstance) {
  const ModelParams p = saser::testing::desk_params(2.0, 100.0, 12);
  const SuperOperator l = liouvillian(p);
  const DensityMatrix ss = steady_state(l);
  const std::vector<double> probe{-30.0, -8.0, -1.0, -0.3, 0.0, 0.4, 2.0, 11.0, 50.0};
  SpectrumOptions opt;
  opt.tail_tol = 1e-7;
  const Spectrum sp = emission_spectrum(l, ss, probe, opt);
  const auto oracle = resolvent_psd(l, ss, probe);
  const double peak = *std::max_element(oracle.begin(), oracle.end());
  for (std::size_t i = 0; i < probe.size(); ++i) EXPECT_NEAR(sp.psd[i], oracle[i], 2e-4 * peak) << probe[i];
}

TEST(Spectrum, SumRuleOnLasingInstance) {
  const ModelParams p = saser::testing::desk_params(0.7, 120.0, 35);
  const SuperOperator l = liouvillian(p);
  const DensityMatrix ss = steady_state(l);
  const auto grid = line_grid(0.0, 3.0, 2000.0, 301, 150);
  const Spectrum sp = emission_spectrum(l, ss, grid);
  EXPECT_TRUE(sp.warnings.empty());
  EXPECT_LT(sp.tail_ratio, 1e-4);
  EXPECT_NEAR(sp.sum_rule(), 1.0, 0.02);
  EXPECT_LE(sp.max_clip, 1e-6 * *std::max_element(sp.psd.begin(), sp.psd.end()));
}

TEST(Spectrum, HorizonWarning) {
  const HilbertSpace s(4);
  const OperatorMatrix h(s.dim(), s.dim());
  const std::vector<CollapseChannel> ch{{"resonator", mode_op(s), to_angular(0.01)}};
  const SuperOperator l = liouvillian(h, ch);
  SpectrumOptions opt;
  opt.max_horizon_us = 1.0;
  const std::vector<double> grid{-1.0, 0.0, 1.0};
  const Spectrum sp = emission_spectrum(l, thermal_state(s, 0.3), grid, opt);
  ASSERT_FALSE(sp.warnings.empty());
  EXPECT_GE(sp.horizon_us, 1.0);
  EXPECT_NEAR(sp.tail_ratio, std::exp(-0.5 * to_angular(0.01) * sp.horizon_us), 1e-6);
}

TEST(Spectrum, CorrelationTransformOfExponential) {
  // C(τ) = e^{−aτ}: S(f) = 2a / (a² + ω²)
  const double a = 3.0, dt = 1e-3;
  std::vector<Complex> c;
  for (int i = 0; i < 20000; ++i) c.push_back(std::exp(-a * dt * i));
  const std::vector<double> f{0.0, 0.3, 1.0, 40.0};
  const auto s = correlation_to_psd(c, dt, f);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double w = to_angular(f[k]);
    EXPECT_NEAR(s[k], 2.0 * a / (a * a + w * w), 1e-6 * 2.0 / a);
  }
}

TEST(Spectrum, GridMustIncrease) {
  const HilbertSpace s(2);
  const OperatorMatrix h(s.dim(), s.dim());
  const std::vector<CollapseChannel> ch{{"resonator", mode_op(s), 1.0}};
  const std::vector<double> grid{0.0, -1.0};
  EXPECT_THROW(emission_spectrum(liouvillian(h, ch), thermal_state(s, 0.1), grid), ValidationError);
}

TEST(LineGrid, ShapeAndBounds) {
  const auto g = line_grid(1.0, 2.0, 100.0, 11, 5);
  ASSERT_EQ(g.size(), 21u);
  EXPECT_NEAR(g.front(), -99.0, 1e-9);
  EXPECT_NEAR(g.back(), 101.0, 1e-9);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
}
