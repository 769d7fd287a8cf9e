#pragma once

#include <Eigen/Sparse>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "saser/errors.hpp"
#include "saser/units.hpp"

namespace saser {

enum class Level : int { g = 0, e = 1, f = 2 };

inline constexpr int atom_levels = 3;

inline Level parse_level(std::string_view label) {
  if (label == "g") return Level::g;
  if (label == "e") return Level::e;
  if (label == "f") return Level::f;
  throw ValidationError("unknown level label '" + std::string(label) + "' (expected g, e or f)");
}

inline const char* level_name(Level l) {
  switch (l) {
    case Level::g: return "g";
    case Level::e: return "e";
    case Level::f: return "f";
  }
  return "?";
}

/// Linear operator on the composite space, stored column-major sparse.
using OperatorMatrix = Eigen::SparseMatrix<Complex>;

/// Atom ⊗ truncated Fock space. Basis index = atom_level·(n_max+1) + n, i.e.
/// atom-major with the phonon number running fastest.
class HilbertSpace {
 public:
  explicit HilbertSpace(int fock_cutoff) : fock_cutoff_(fock_cutoff) {
    if (fock_cutoff < 1) throw ValidationError("fock_cutoff must be >= 1");
  }

  /// Inverse of dim(); throws if dim is not 3·(n_max+1).
  static HilbertSpace from_dim(Eigen::Index dim) {
    if (dim < 2 * atom_levels || dim % atom_levels != 0)
      throw DimensionError("dimension " + std::to_string(dim) + " is not 3*(n_max+1)");
    return HilbertSpace(static_cast<int>(dim / atom_levels) - 1);
  }

  int fock_cutoff() const noexcept { return fock_cutoff_; }
  int fock_dim() const noexcept { return fock_cutoff_ + 1; }
  int dim() const noexcept { return atom_levels * fock_dim(); }

  int index(Level atom, int n) const noexcept { return static_cast<int>(atom) * fock_dim() + n; }

  bool operator==(const HilbertSpace&) const = default;

 private:
  int fock_cutoff_;
};

/// σ_ij ⊗ I_Fock with σ_ij = |i⟩⟨j|.
inline OperatorMatrix atomic_op(const HilbertSpace& space, Level i, Level j) {
  OperatorMatrix op(space.dim(), space.dim());
  op.reserve(Eigen::VectorXi::Constant(space.dim(), 1));
  for (int n = 0; n < space.fock_dim(); ++n) op.insert(space.index(i, n), space.index(j, n)) = 1.0;
  op.makeCompressed();
  return op;
}

inline OperatorMatrix atomic_op(const HilbertSpace& space, std::string_view i, std::string_view j) {
  return atomic_op(space, parse_level(i), parse_level(j));
}

/// I_atom ⊗ b with b|n⟩ = √n |n−1⟩.
///
/// On the truncated space [b, b†] = I − (n_max+1)|n_max⟩⟨n_max|.
inline OperatorMatrix mode_op(const HilbertSpace& space) {
  std::vector<Eigen::Triplet<Complex>> t;
  t.reserve(static_cast<std::size_t>(atom_levels * space.fock_cutoff()));
  for (int a = 0; a < atom_levels; ++a) {
    const auto level = static_cast<Level>(a);
    for (int n = 1; n <= space.fock_cutoff(); ++n)
      t.emplace_back(space.index(level, n - 1), space.index(level, n), std::sqrt(static_cast<double>(n)));
  }
  OperatorMatrix b(space.dim(), space.dim());
  b.setFromTriplets(t.begin(), t.end());
  return b;
}

inline OperatorMatrix identity_op(const HilbertSpace& space) {
  OperatorMatrix id(space.dim(), space.dim());
  id.setIdentity();
  return id;
}

/// b†b, diagonal.
inline OperatorMatrix number_op(const HilbertSpace& space) {
  OperatorMatrix num(space.dim(), space.dim());
  num.reserve(Eigen::VectorXi::Constant(space.dim(), 1));
  for (int a = 0; a < atom_levels; ++a)
    for (int n = 0; n < space.fock_dim(); ++n) {
      const int k = space.index(static_cast<Level>(a), n);
      num.insert(k, k) = static_cast<double>(n);
    }
  num.makeCompressed();
  return num;
}

}  // namespace saser
