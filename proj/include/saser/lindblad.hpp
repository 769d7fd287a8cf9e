#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>
#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "saser/hilbert.hpp"
#include "saser/model.hpp"

namespace saser {

/// Density operator on the composite space. Construction only checks shape;
/// physical validity is reported by check_state().
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(Eigen::MatrixXcd rho) : rho_(std::move(rho)) {
    if (rho_.rows() != rho_.cols()) throw DimensionError("density matrix must be square");
  }

  static DensityMatrix pure(const HilbertSpace& space, Level atom, int n) {
    if (n < 0 || n > space.fock_cutoff()) throw ValidationError("Fock index out of range");
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(space.dim(), space.dim());
    const int k = space.index(atom, n);
    m(k, k) = 1.0;
    return DensityMatrix(std::move(m));
  }

  static DensityMatrix maximally_mixed(Eigen::Index dim) {
    return DensityMatrix(Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(dim));
  }

  /// Inverse of vec(): column-stacked vector of length dim².
  static DensityMatrix from_vec(const Eigen::VectorXcd& v) {
    const auto dim = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    if (dim * dim != v.size()) throw DimensionError("vector length is not a square");
    return DensityMatrix(Eigen::Map<const Eigen::MatrixXcd>(v.data(), dim, dim));
  }

  Eigen::VectorXcd vec() const { return Eigen::Map<const Eigen::VectorXcd>(rho_.data(), rho_.size()); }

  Eigen::Index dim() const noexcept { return rho_.rows(); }
  const Eigen::MatrixXcd& matrix() const noexcept { return rho_; }
  Complex trace() const { return rho_.trace(); }

 private:
  Eigen::MatrixXcd rho_;
};

struct StateDiagnostics {
  double trace_error = 0.0;        ///< |tr ρ − 1|
  double hermiticity_error = 0.0;  ///< max |ρ − ρ†|
  double min_eigenvalue = 0.0;

  bool ok(double trace_tol = 1e-9, double herm_tol = 1e-10, double pos_tol = 1e-8) const {
    return trace_error < trace_tol && hermiticity_error < herm_tol && min_eigenvalue > -pos_tol;
  }
};

inline StateDiagnostics check_state(const DensityMatrix& rho) {
  const Eigen::MatrixXcd& m = rho.matrix();
  StateDiagnostics d;
  d.trace_error = std::abs(m.trace() - 1.0);
  d.hermiticity_error = (m - m.adjoint()).cwiseAbs().maxCoeff();
  const Eigen::MatrixXcd h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  d.min_eigenvalue = es.eigenvalues().minCoeff();
  return d;
}

/// tr(ρ O).
inline Complex expectation(const DensityMatrix& rho, const OperatorMatrix& op) {
  if (op.rows() != rho.dim() || op.cols() != rho.dim()) throw DimensionError("expectation: dimension mismatch");
  Complex acc = 0.0;
  // tr(ρO) = Σ_kl ρ_lk O_kl
  for (Eigen::Index k = 0; k < op.outerSize(); ++k)
    for (OperatorMatrix::InnerIterator it(op, k); it; ++it) acc += rho.matrix()(it.col(), it.row()) * it.value();
  return acc;
}

/// P(n) = Σ_atom ⟨atom, n|ρ|atom, n⟩.
inline std::vector<double> phonon_distribution(const DensityMatrix& rho) {
  const HilbertSpace space = HilbertSpace::from_dim(static_cast<int>(rho.dim()));
  std::vector<double> p(static_cast<std::size_t>(space.fock_dim()), 0.0);
  for (int a = 0; a < atom_levels; ++a)
    for (int n = 0; n < space.fock_dim(); ++n) {
      const int k = space.index(static_cast<Level>(a), n);
      p[static_cast<std::size_t>(n)] += rho.matrix()(k, k).real();
    }
  return p;
}

struct CutoffCheck {
  double top_weight = 0.0;  ///< population in the highest max(2, 10%) Fock levels
  bool converged = false;
};

/// Truncation flag: the top of the Fock ladder must be essentially empty.
inline CutoffCheck cutoff_check(const DensityMatrix& rho, double tol = 1e-4) {
  const auto p = phonon_distribution(rho);
  const std::size_t top = std::max<std::size_t>(2, p.size() / 10);
  CutoffCheck c;
  for (std::size_t n = p.size() > top ? p.size() - top : 0; n < p.size(); ++n) c.top_weight += std::max(p[n], 0.0);
  c.converged = c.top_weight < tol;
  return c;
}

/// Generator of dρ/dt = L[ρ] acting on column-stacked vec(ρ).
struct SuperOperator {
  int dim = 0;  ///< Hilbert-space dimension; matrix is dim²×dim²
  Eigen::SparseMatrix<Complex> matrix;

  Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const { return matrix * v; }

  DensityMatrix apply(const DensityMatrix& rho) const {
    return DensityMatrix::from_vec(matrix * rho.vec());
  }

  /// Largest absolute entry; the natural rate scale for residual checks.
  double scale() const {
    double s = 0.0;
    for (Eigen::Index k = 0; k < matrix.outerSize(); ++k)
      for (Eigen::SparseMatrix<Complex>::InnerIterator it(matrix, k); it; ++it) s = std::max(s, std::abs(it.value()));
    return s;
  }
};

/// L[ρ] = −i[H, ρ] + Σ_k γ_k (c_k ρ c_k† − ½{c_k†c_k, ρ}), using vec(AρB) = (Bᵀ ⊗ A) vec(ρ).
inline SuperOperator liouvillian(const OperatorMatrix& h, std::span<const CollapseChannel> channels) {
  const Eigen::Index d = h.rows();
  if (h.cols() != d) throw DimensionError("liouvillian: Hamiltonian is not square");
  for (const auto& c : channels)
    if (c.op.rows() != d || c.op.cols() != d)
      throw DimensionError("liouvillian: channel '" + c.name + "' has mismatched dimension");

  using Sparse = Eigen::SparseMatrix<Complex>;
  Sparse id(d, d);
  id.setIdentity();
  const Complex mi(0.0, -1.0);

  Sparse l = mi * Sparse(Eigen::kroneckerProduct(id, h)) - mi * Sparse(Eigen::kroneckerProduct(Sparse(h.transpose()), id));
  for (const auto& c : channels) {
    if (c.rate < 0.0) throw ValidationError("liouvillian: channel '" + c.name + "' has negative rate");
    const Sparse cdc = c.op.adjoint() * c.op;
    Sparse term = Sparse(Eigen::kroneckerProduct(Sparse(c.op.conjugate()), c.op));
    term -= 0.5 * Sparse(Eigen::kroneckerProduct(id, cdc));
    term -= 0.5 * Sparse(Eigen::kroneckerProduct(Sparse(cdc.transpose()), id));
    l += c.rate * term;
  }
  l.prune(Complex(0.0));
  l.makeCompressed();
  return SuperOperator{static_cast<int>(d), std::move(l)};
}

inline SuperOperator liouvillian(const ModelParams& p) {
  const HilbertSpace space(p.fock_cutoff);
  const auto channels = build_collapse_ops(p, space);
  return liouvillian(build_hamiltonian(p, space), channels);
}

/// max_j |Σ_i L_{(ii),j}|: how far the trace functional is from being a left null vector.
inline double trace_defect(const SuperOperator& l) {
  const int d = l.dim;
  Eigen::VectorXcd col_sums = Eigen::VectorXcd::Zero(l.matrix.cols());
  for (Eigen::Index k = 0; k < l.matrix.outerSize(); ++k)
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(l.matrix, k); it; ++it)
      if (it.row() % (d + 1) == 0) col_sums(it.col()) += it.value();
  return col_sums.cwiseAbs().maxCoeff();
}

struct SteadyStateOptions {
  double residual_tol = 1e-10;  ///< on ‖L vec(ρ)‖∞ / L.scale()
  bool verify_unique = true;    ///< second solve with a different constraint row
  double uniqueness_tol = 1e-6;
};

namespace detail {

/// L with row `row` replaced by the trace functional.
inline Eigen::SparseMatrix<Complex> constrained_system(const SuperOperator& l, Eigen::Index row) {
  const int d = l.dim;
  std::vector<Eigen::Triplet<Complex>> t;
  t.reserve(static_cast<std::size_t>(l.matrix.nonZeros() + d));
  for (Eigen::Index k = 0; k < l.matrix.outerSize(); ++k)
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(l.matrix, k); it; ++it)
      if (it.row() != row) t.emplace_back(it.row(), it.col(), it.value());
  for (int i = 0; i < d; ++i) t.emplace_back(row, i * (d + 1), 1.0);
  Eigen::SparseMatrix<Complex> a(l.matrix.rows(), l.matrix.cols());
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  return a;
}

inline Eigen::VectorXcd solve_constrained(const SuperOperator& l, Eigen::Index row) {
  const Eigen::SparseMatrix<Complex> a = constrained_system(l, row);
  Eigen::SparseLU<Eigen::SparseMatrix<Complex>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success)
    throw DegeneracyError("steady_state: constrained Liouvillian is singular (" + lu.lastErrorMessage() + ")");
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(a.rows());
  rhs(row) = 1.0;
  Eigen::VectorXcd x = lu.solve(rhs);
  // one step of iterative refinement
  const Eigen::VectorXcd r = rhs - a * x;
  x += lu.solve(r);
  if (!x.allFinite()) throw DegeneracyError("steady_state: solution is not finite");
  return x;
}

}  // namespace detail

/// Unique trace-one null vector of L, found by a sparse LU solve with one row
/// of L replaced by the trace constraint.
inline DensityMatrix steady_state(const SuperOperator& l, const SteadyStateOptions& opt = {}) {
  const int d = l.dim;
  Eigen::VectorXcd x = detail::solve_constrained(l, 0);
  if (opt.verify_unique && d > 1) {
    const Eigen::VectorXcd y = detail::solve_constrained(l, static_cast<Eigen::Index>(d - 1) * (d + 1));
    const double diff = (x - y).cwiseAbs().maxCoeff();
    if (!(diff < opt.uniqueness_tol))
      throw DegeneracyError("steady_state: null space is not one-dimensional (solutions differ by " +
                                std::to_string(diff) + ")",
                            diff);
  }
  Eigen::MatrixXcd rho = Eigen::Map<Eigen::MatrixXcd>(x.data(), d, d);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace().real();
  DensityMatrix out(std::move(rho));

  const double scale = std::max(l.scale(), 1e-300);
  const double residual = (l.matrix * out.vec()).cwiseAbs().maxCoeff() / scale;
  if (!(residual < opt.residual_tol))
    throw DegeneracyError("steady_state: residual " + std::to_string(residual) + " above tolerance", residual);
  return out;
}

struct EvolveOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double initial_step = 1e-4;  ///< µs
  std::size_t max_steps = 5'000'000;
};

using StateVector = std::vector<Complex>;

/// Integrates dx/dt = L x over the increasing times `times`, calling
/// observer(x, t) at each. Adaptive Dormand–Prince with dense output.
template <typename Observer>
void propagate(const SuperOperator& l, StateVector x, std::span<const double> times, Observer&& observer,
               const EvolveOptions& opt = {}) {
  namespace ode = boost::numeric::odeint;
  if (times.empty()) return;
  if (static_cast<Eigen::Index>(x.size()) != l.matrix.cols()) throw DimensionError("propagate: state size mismatch");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ValidationError("propagate: time grid must be strictly increasing");

  auto rhs = [&l](const StateVector& in, StateVector& out, double /*t*/) {
    out.resize(in.size());
    Eigen::Map<const Eigen::VectorXcd> vin(in.data(), static_cast<Eigen::Index>(in.size()));
    Eigen::Map<Eigen::VectorXcd> vout(out.data(), static_cast<Eigen::Index>(out.size()));
    vout.noalias() = l.matrix * vin;
  };
  auto stepper = ode::make_dense_output(opt.abs_tol, opt.rel_tol, ode::runge_kutta_dopri5<StateVector>());
  double reached = times.front();
  try {
    ode::integrate_times(
        stepper, rhs, x, times.begin(), times.end(), opt.initial_step,
        [&](const StateVector& s, double t) {
          reached = t;
          observer(s, t);
        },
        ode::max_step_checker(opt.max_steps));
  } catch (const std::exception& e) {
    throw IntegrationError("propagate: integration failed after t = " + std::to_string(reached) + " µs: " + e.what());
  }
}

/// ρ(t) at each grid time (µs), ρ(times[0]) = rho0.
inline std::vector<DensityMatrix> evolve(const DensityMatrix& rho0, const SuperOperator& l,
                                         std::span<const double> times, const EvolveOptions& opt = {}) {
  if (rho0.dim() != l.dim) throw DimensionError("evolve: state and generator dimensions differ");
  const Eigen::VectorXcd v = rho0.vec();
  std::vector<DensityMatrix> out;
  out.reserve(times.size());
  propagate(
      l, StateVector(v.data(), v.data() + v.size()), times,
      [&](const StateVector& s, double) {
        out.push_back(DensityMatrix(Eigen::Map<const Eigen::MatrixXcd>(s.data(), l.dim, l.dim)));
      },
      opt);
  return out;
}

/// Trace distance ½‖ρ − σ‖₁.
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  const Eigen::MatrixXcd diff = a.matrix() - b.matrix();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace saser
