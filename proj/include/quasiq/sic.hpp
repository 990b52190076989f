#pragma once
//
// The single-qubit SIC-POVM, its dual operator basis, and tensor products.
//
// Effects: F_a = |psi_a><psi_a| / 2 with psi_0 = |0> and
//   psi_k = (1/sqrt(3)) |0> + e^{2 pi i (k-1)/3} sqrt(2/3) |1>,  k = 1,2,3.
// The four fiducials are pairwise |<psi_a|psi_b>|^2 = 1/3, the effects sum to
// the identity, and the dual basis D_a = 6 F_a - I satisfies
// Tr(F_a D_b) = delta_ab, so every Hermitian one-qubit operator X expands as
// X = sum_a Tr(F_a X) D_a.  Multi-site operators use tensor products indexed
// by assignments over {0,1,2,3}.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "quasiq/assignment.hpp"
#include "quasiq/matrix.hpp"

namespace quasiq {

/// Selects between the effect family F and the dual family D when forming
/// tensor products over an assignment.
enum class BasisKind { kEffect, kDual };

struct SicBasis {
  std::array<std::array<cdouble, 2>, 4> psi;  // fiducial vectors
  std::array<CMatrix, 4> f;                   // effects F_a (2x2, PSD, sum = I)
  std::array<CMatrix, 4> d;                   // duals D_a = 6 F_a - I
};

inline SicBasis build_sic_basis() {
  SicBasis b;
  b.psi[0] = {cdouble(1.0, 0.0), cdouble(0.0, 0.0)};
  const double c0 = 1.0 / std::sqrt(3.0);
  const double c1 = std::sqrt(2.0 / 3.0);
  for (int k = 1; k <= 3; ++k) {
    const double phi = 2.0 * std::numbers::pi * double(k - 1) / 3.0;
    b.psi[k] = {cdouble(c0, 0.0), c1 * cdouble(std::cos(phi), std::sin(phi))};
  }
  for (int a = 0; a < 4; ++a) {
    CMatrix f(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) f(i, j) = 0.5 * b.psi[a][i] * std::conj(b.psi[a][j]);
    b.f[a] = f;
    CMatrix d = f;
    d *= 6.0;
    d -= CMatrix::identity(2);
    b.d[a] = d;
  }
  return b;
}

/// F_pattern or D_pattern: the tensor product of one family member per site.
/// Guard: at most 12 sites (dimension 4096).
inline CMatrix tensor_basis_element(const SicBasis& b, const Assignment& pattern,
                                    BasisKind kind) {
  if (pattern.size() > 12)
    throw std::invalid_argument("tensor_basis_element: more than 12 sites");
  if (!assignment_ok(pattern))
    throw std::invalid_argument("tensor_basis_element: bad pattern");
  const auto& fam = (kind == BasisKind::kEffect) ? b.f : b.d;
  CMatrix out = CMatrix::identity(1);
  for (char c : pattern) out = kron(out, fam[c - '0']);
  return out;
}

/// The two distinguished pair operators:
///   s = (1/4)  sum_a      D_a (x) D_a   (eigenvalues {-2, 1, 1, 1})
///   a = (1/12) sum_{a!=b} D_a (x) D_b   (the singlet projector)
/// They satisfy s + 3 a = I.
struct PairOperators {
  CMatrix s;
  CMatrix a;
};

inline PairOperators pair_operators(const SicBasis& b) {
  PairOperators p{CMatrix(4, 4), CMatrix(4, 4)};
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y) {
      const CMatrix t = kron(b.d[x], b.d[y]);
      if (x == y)
        p.s += 0.25 * t;
      else
        p.a += (1.0 / 12.0) * t;
    }
  return p;
}

}  // namespace quasiq
