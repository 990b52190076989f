#pragma once

// k-local Hamiltonians: data model, energy evaluation through marginal
// operators, the coloring-edge and diagonal-CSP builders, the NP witness
// verifier, the dense assembly / exact quantum ground energy oracle, and the
// Hamiltonian text format.

#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "quasiq/distribution.hpp"
#include "quasiq/graph.hpp"
#include "quasiq/matrix.hpp"
#include "quasiq/sic.hpp"

namespace quasiq {

/// One Hermitian term acting on a small sorted set of qubits.
struct LocalTerm {
  std::vector<std::size_t> support;
  CMatrix matrix;
};

struct LocalHamiltonian {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<LocalTerm> terms;
};

inline void validate_hamiltonian(const LocalHamiltonian& h) {
  for (const auto& t : h.terms) {
    if (t.support.empty() || t.support.size() > h.k)
      throw std::invalid_argument("LocalHamiltonian: term support size outside [1,k]");
    for (std::size_t i = 0; i < t.support.size(); ++i) {
      if (t.support[i] >= h.n)
        throw std::invalid_argument("LocalHamiltonian: support index out of range");
      if (i > 0 && t.support[i - 1] >= t.support[i])
        throw std::invalid_argument("LocalHamiltonian: support not sorted distinct");
    }
    const std::size_t dim = std::size_t(1) << t.support.size();
    if (t.matrix.rows() != dim || t.matrix.cols() != dim)
      throw std::invalid_argument("LocalHamiltonian: term dimension mismatch");
    if (!t.matrix.is_hermitian(1e-8 * std::max(1.0, t.matrix.max_abs())))
      throw std::invalid_argument("LocalHamiltonian: term not Hermitian");
  }
}

/// Approximation scale L_H = sum of spectral norms of the terms.
inline double scale(const LocalHamiltonian& h) {
  double s = 0.0;
  for (const auto& t : h.terms) s += operator_norm(t.matrix);
  return s;
}

/// energy = Σ_i Tr(h_i X^{(i)}) and its per-term breakdown.  The bound
/// |energy| <= scale holds whenever the marginals are PSD (valid qq input);
/// it is not enforced here because the evaluator is also used on invalid
/// candidates (e.g. inside the witness verifier).
struct EnergyReport {
  double energy = 0.0;
  double scale = 0.0;
  std::vector<double> per_term;
};

inline EnergyReport energy(const LocalHamiltonian& h, const MarginalSource& src,
                           const SicBasis& basis) {
  if (src.sites() != h.n) throw std::invalid_argument("energy: size mismatch");
  EnergyReport rep;
  rep.scale = scale(h);
  rep.per_term.reserve(h.terms.size());
  for (const auto& t : h.terms) {
    const auto table = src.table(t.support);
    const CMatrix x = dual_operator_of_table(table, t.support.size(), basis);
    const double e = real_trace_product(t.matrix, x);
    rep.per_term.push_back(e);
    rep.energy += e;
  }
  return rep;
}

inline EnergyReport energy(const LocalHamiltonian& h, const SparseDistribution& mu,
                           const SicBasis& basis) {
  return energy(h, ExplicitSource(mu), basis);
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

/// Edge term h_e = Σ_α F_α ⊗ F_α = (1/3)(𝟙 − singlet projector); one term per
/// edge, k = 2.  Against dual assignments it counts coloring violations:
/// Tr(h_e D_α⊗D_β) = δ_αβ.
inline LocalHamiltonian coloring_hamiltonian(const Graph& g, const SicBasis& basis) {
  CMatrix he(4, 4);
  for (std::size_t a = 0; a < 4; ++a) he += kron(basis.f[a], basis.f[a]);
  LocalHamiltonian h;
  h.n = g.n;
  h.k = 2;
  for (const auto& [u, v] : g.edges) h.terms.push_back({{u, v}, he});
  return h;
}

/// Diagonal projector terms: for each (support, patterns) item, the term is
/// Σ_p |p><p| over the listed computational-basis bitstrings.
inline LocalHamiltonian diagonal_csp_hamiltonian(
    std::size_t n,
    const std::vector<std::pair<std::vector<std::size_t>, std::vector<std::string>>>&
        forbidden) {
  LocalHamiltonian h;
  h.n = n;
  h.k = 1;
  for (const auto& [support, patterns] : forbidden) {
    h.k = std::max(h.k, support.size());
    const std::size_t dim = std::size_t(1) << support.size();
    CMatrix m(dim, dim);
    for (const auto& p : patterns) {
      if (p.size() != support.size())
        throw std::invalid_argument("diagonal_csp_hamiltonian: pattern length mismatch");
      std::size_t idx = 0;
      for (char c : p) {
        if (c != '0' && c != '1')
          throw std::invalid_argument("diagonal_csp_hamiltonian: pattern not binary");
        idx = idx * 2 + std::size_t(c - '0');
      }
      m(idx, idx) += 1.0;
    }
    h.terms.push_back({support, std::move(m)});
  }
  validate_hamiltonian(h);
  return h;
}

/// The unsatisfiable-triangle example: Π_ij = |00><00| + |11><11| on all
/// three edges of a triangle.
inline LocalHamiltonian triangle_comp_hamiltonian() {
  const std::vector<std::string> pats{"00", "11"};
  return diagonal_csp_hamiltonian(
      3, {{{0, 1}, pats}, {{0, 2}, pats}, {{1, 2}, pats}});
}

// ---------------------------------------------------------------------------
// Witness verification
// ---------------------------------------------------------------------------

struct WitnessResult {
  bool accept = false;
  std::string reason;  // empty on accept; "not-qq" or "energy" on reject
  QqCertificate certificate;
  EnergyReport report;
};

/// NP witness check: accept iff mu is a valid k-local qq state (k = H.k) and
/// energy(H, mu) <= a + tol.
inline WitnessResult verify_witness(const LocalHamiltonian& h, double a,
                                    const SparseDistribution& mu, const SicBasis& basis,
                                    double tol = 1e-9) {
  if (mu.n != h.n) throw std::invalid_argument("verify_witness: size mismatch");
  WitnessResult r;
  r.certificate = is_k_local_qq(mu, h.k, tol);
  r.report = energy(h, mu, basis);
  if (!r.certificate.valid) {
    r.reason = "not-qq";
    return r;
  }
  if (r.report.energy > a + tol) {
    r.reason = "energy";
    return r;
  }
  r.accept = true;
  return r;
}

// ---------------------------------------------------------------------------
// Dense assembly and the quantum oracle
// ---------------------------------------------------------------------------

/// Dense 2^n x 2^n matrix of H (n <= 10 guard).
inline CMatrix assemble_dense_hamiltonian(const LocalHamiltonian& h) {
  if (h.n > 10) throw std::invalid_argument("assemble_dense_hamiltonian: n > 10");
  const std::size_t dim = std::size_t(1) << h.n;
  CMatrix out(dim, dim);
  for (const auto& t : h.terms) {
    const std::size_t s = t.support.size();
    const std::size_t sdim = std::size_t(1) << s;
    // Bit masks of the support sites (site 0 = most significant bit).
    std::vector<std::size_t> bit(s);
    for (std::size_t i = 0; i < s; ++i) bit[i] = std::size_t(1) << (h.n - 1 - t.support[i]);
    std::size_t rest_mask = dim - 1;
    for (std::size_t b : bit) rest_mask &= ~b;
    // Enumerate the complement by iterating sub-masks of rest_mask.
    std::size_t rest = 0;
    while (true) {
      for (std::size_t a = 0; a < sdim; ++a)
        for (std::size_t b = 0; b < sdim; ++b) {
          const cdouble v = t.matrix(a, b);
          if (v == cdouble(0.0)) continue;
          std::size_t i = rest, j = rest;
          for (std::size_t q = 0; q < s; ++q) {
            if (a >> (s - 1 - q) & 1) i |= bit[q];
            if (b >> (s - 1 - q) & 1) j |= bit[q];
          }
          out(i, j) += v;
        }
      if (rest == rest_mask) break;
      rest = (rest - rest_mask) & rest_mask;  // next sub-mask
    }
  }
  return out;
}

/// Minimal eigenvalue of the dense assembly (the true quantum ground energy).
inline double quantum_ground_energy(const LocalHamiltonian& h) {
  return min_eigenvalue(assemble_dense_hamiltonian(h));
}

// ---------------------------------------------------------------------------
// Text format: "n <n> k <k>"; per term "support <i...>" then 4^|s| lines
// "re im" row-major.
// ---------------------------------------------------------------------------

inline void write_hamiltonian(std::ostream& os, const LocalHamiltonian& h) {
  os << "n " << h.n << " k " << h.k << "\n" << std::setprecision(17);
  for (const auto& t : h.terms) {
    os << "support";
    for (std::size_t i : t.support) os << " " << i;
    os << "\n";
    for (std::size_t r = 0; r < t.matrix.rows(); ++r)
      for (std::size_t c = 0; c < t.matrix.cols(); ++c)
        os << t.matrix(r, c).real() << " " << t.matrix(r, c).imag() << "\n";
  }
}

inline LocalHamiltonian read_hamiltonian(std::istream& is) {
  std::string tag;
  LocalHamiltonian h;
  if (!(is >> tag) || tag != "n" || !(is >> h.n) || !(is >> tag) || tag != "k" ||
      !(is >> h.k))
    throw std::runtime_error("read_hamiltonian: bad header, expected 'n <n> k <k>'");
  std::string word;
  while (is >> word) {
    if (word != "support") throw std::runtime_error("read_hamiltonian: expected 'support'");
    LocalTerm t;
    // Support indices up to the next non-numeric token boundary: read the
    // rest of the line.
    std::string line;
    std::getline(is, line);
    std::istringstream ls(line);
    std::size_t idx;
    while (ls >> idx) t.support.push_back(idx);
    if (t.support.empty()) throw std::runtime_error("read_hamiltonian: empty support");
    const std::size_t dim = std::size_t(1) << t.support.size();
    t.matrix = CMatrix(dim, dim);
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t c = 0; c < dim; ++c) {
        double re, im;
        if (!(is >> re >> im)) throw std::runtime_error("read_hamiltonian: truncated matrix");
        t.matrix(r, c) = cdouble(re, im);
      }
    h.terms.push_back(std::move(t));
  }
  validate_hamiltonian(h);
  return h;
}

}  // namespace quasiq
