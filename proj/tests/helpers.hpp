#pragma once

#include <Eigen/Dense>
#include <random>

#include "saser/hilbert.hpp"
#include "saser/lindblad.hpp"

namespace saser::testing {

inline Eigen::MatrixXcd dense(const OperatorMatrix& m) { return Eigen::MatrixXcd(m); }

inline double max_abs(const Eigen::MatrixXcd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// Random full-rank density matrix A A† / tr.
inline DensityMatrix random_state(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXcd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = Complex(n(rng), n(rng));
  Eigen::MatrixXcd rho = a * a.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix(rho);
}

/// Desk-scale lasing instance: device atom, κ raised so ⟨n⟩ is around ten.
inline ModelParams desk_params(double kappa = 0.5, double omega = 100.0, int cutoff = 40) {
  ModelParams p;
  p.kappa = kappa;
  p.kappa_in = p.kappa_out = 0.5 * kappa;
  p.omega_pump = omega;
  p.fock_cutoff = cutoff;
  return p;
}

}  // namespace saser::testing
