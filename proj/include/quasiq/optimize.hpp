#pragma once
// Energy minimization over the k-local quasi-quantum set.
//
// The feasible region -- distributions mu over a fixed assignment support
// whose every k-site marginal operator is positive semidefinite -- is a
// spectrahedron, but the PSD blocks are tiny (dimension 2^k <= 64), so a
// cutting-plane outer loop over a plain LP suffices: solve the LP under the
// accumulated linear cuts, scan all k-site marginals of the iterate, and for
// every negative eigenpair (lambda, v) of a marginal operator X_I add the cut
// v^dag X_I v >= 0, which is linear in mu.  Termination with zero violated
// cuts certifies optimality over the true constraint set within tol.
//
// On top of the fixed-support solver sit two entry points: an exact
// ground-energy oracle that enumerates the full 4^n support (guarded to
// small n), and a randomized heuristic that alternates solving, support
// reduction to the sister-state bound via caratheodory_reduce, and fresh
// random enlargement -- the energy is non-increasing across rounds because
// each round's support contains a reduction of the previous optimum.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quasiq/assignment.hpp"
#include "quasiq/distribution.hpp"
#include "quasiq/hamiltonian.hpp"
#include "quasiq/lp.hpp"
#include "quasiq/matrix.hpp"
#include "quasiq/rng.hpp"
#include "quasiq/sic.hpp"

namespace quasiq {

enum class SolveStatus { optimal, infeasible, iteration_limit };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal:
      return "optimal";
    case SolveStatus::infeasible:
      return "infeasible";
    default:
      return "iteration-limit";
  }
}

struct SolveResult {
  SparseDistribution mu;
  double energy = 0.0;
  SolveStatus status = SolveStatus::iteration_limit;
  std::size_t cuts_used = 0;
};

namespace detail {

/// Base-4 pattern index of an assignment restricted to a site subset,
/// without materializing the restricted string.
inline std::size_t pattern_on_subset(const Assignment& a,
                                     const std::vector<std::size_t>& sites) {
  std::size_t p = 0;
  for (std::size_t s : sites) p = 4 * p + std::size_t(a[s] - '0');
  return p;
}

/// Re(v^dag M v) for a square matrix and a complex vector.
inline double real_quad_form(const CMatrix& m, const std::vector<cdouble>& v) {
  cdouble acc = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    cdouble row = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) row += m(r, c) * v[c];
    acc += std::conj(v[r]) * row;
  }
  return acc.real();
}

}  // namespace detail

/// Minimize the energy of h over distributions supported on the given
/// assignments, subject to positive semidefiniteness of every k-site
/// marginal operator.  On status optimal the returned mu passes
/// is_k_local_qq at tol and its energy matches energy(h, mu) to roundoff;
/// status infeasible means no distribution on this support satisfies the
/// accumulated spectral cuts (so none satisfies the PSD constraints).
inline SolveResult fixed_support_minimize(const LocalHamiltonian& h,
                                          const std::vector<Assignment>& support,
                                          std::size_t k, double tol = 1e-9,
                                          const SicBasis& basis = build_sic_basis()) {
  validate_hamiltonian(h);
  if (support.empty())
    throw std::invalid_argument("fixed_support_minimize: empty support");
  if (k == 0 || k > h.n || k > 6)
    throw std::invalid_argument("fixed_support_minimize: need 1 <= k <= min(n, 6)");
  if (!(tol > 0.0)) throw std::invalid_argument("fixed_support_minimize: tol <= 0");

  std::vector<Assignment> keys(support);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  for (const auto& key : keys) require_assignment(key, h.n);
  // Nominal limit is 10^4 distinct assignments; the guard sits at 2*10^4 so
  // the exhaustive oracle can enumerate n = 7 (4^7 = 16384) through this path.
  if (keys.size() > 20000)
    throw std::invalid_argument("fixed_support_minimize: support larger than 2*10^4");
  const std::size_t nkeys = keys.size();

  // Objective: c_i = sum over terms of Tr(term * D-tensor at the restricted
  // pattern of assignment i), the point-mass energy decomposition.
  std::vector<double> cost(nkeys, 0.0);
  for (const auto& t : h.terms) {
    const std::size_t sk = t.support.size();
    std::vector<double> etab(pow4(sk));
    for (std::size_t p = 0; p < etab.size(); ++p)
      etab[p] = real_trace_product(
          t.matrix, tensor_basis_element(basis, pattern_of_index(p, sk), BasisKind::kDual));
    for (std::size_t i = 0; i < nkeys; ++i)
      cost[i] += etab[detail::pattern_on_subset(keys[i], t.support)];
  }

  const auto subsets = k_subsets(h.n, k);
  std::vector<CMatrix> dual_ops;
  dual_ops.reserve(pow4(k));
  for (std::size_t p = 0; p < pow4(k); ++p)
    dual_ops.push_back(tensor_basis_element(basis, pattern_of_index(p, k), BasisKind::kDual));

  struct Cut {
    std::vector<std::size_t> sites;
    std::vector<double> g;     // coefficient per support assignment
    std::size_t stale = 0;     // consecutive rounds with positive slack
  };
  std::vector<Cut> cuts;
  std::size_t cuts_generated = 0;
  constexpr std::size_t kMaxRounds = 400;
  constexpr std::size_t kMaxCuts = 4000;
  // Cuts v^dag X v >= 0 hold for any vector, so besides the violated
  // eigenpairs we also add the ones barely above zero: near a boundary
  // optimum they pin the binding face instead of letting the iterate creep
  // toward it one shaved eigenvalue at a time.
  const double anticipate = std::max(1e-4, 10.0 * tol);

  SolveResult out;
  std::vector<double> x;
  bool have_x = false;

  for (std::size_t round = 0; round < kMaxRounds; ++round) {
    // LP over (mu_1..mu_N, one slack per cut): normalization row plus, per
    // cut, sum_i g_i mu_i - slack = 0 with slack >= 0.
    const std::size_t ncols = nkeys + cuts.size();
    const std::size_t nrows = 1 + cuts.size();
    std::vector<std::vector<double>> a(nrows, std::vector<double>(ncols, 0.0));
    std::vector<double> b(nrows, 0.0);
    std::vector<double> c(ncols, 0.0);
    for (std::size_t i = 0; i < nkeys; ++i) {
      a[0][i] = 1.0;
      c[i] = cost[i];
    }
    b[0] = 1.0;
    for (std::size_t j = 0; j < cuts.size(); ++j) {
      auto& row = a[1 + j];
      for (std::size_t i = 0; i < nkeys; ++i) row[i] = cuts[j].g[i];
      row[nkeys + j] = -1.0;
    }

    const LpResult lp = solve_lp(a, b, c);
    if (lp.status == LpStatus::infeasible) {
      // Every cut is a valid inequality for the PSD constraint set, so an
      // empty cut polytope proves the true feasible set empty as well.
      out.status = SolveStatus::infeasible;
      out.cuts_used = cuts_generated;
      return out;
    }
    if (lp.status == LpStatus::unbounded)
      throw std::runtime_error("fixed_support_minimize: LP unbounded on a bounded polytope");
    if (lp.status != LpStatus::optimal) break;  // simplex iteration limit
    x.assign(lp.x.begin(), lp.x.begin() + std::ptrdiff_t(nkeys));
    have_x = true;

    // Age the cut pool: a cut loose at the current iterate for three rounds
    // in a row is retired, keeping the LP near the active set's size.
    for (auto& cut : cuts) {
      double slack = 0.0;
      for (std::size_t i = 0; i < nkeys; ++i) slack += cut.g[i] * x[i];
      if (slack > 1e-7)
        ++cut.stale;
      else
        cut.stale = 0;
    }

    // Separation: scan every k-subset's marginal operator.  Eigenvalues
    // below -tol/2 are violations (tol/2 so the certified iterate clears a
    // PSD check at the caller's tol even after the final pruning).
    std::size_t violated = 0;
    std::vector<double> tbl(pow4(k));
    std::vector<double> q(pow4(k));
    for (const auto& sites : subsets) {
      std::fill(tbl.begin(), tbl.end(), 0.0);
      for (std::size_t i = 0; i < nkeys; ++i)
        tbl[detail::pattern_on_subset(keys[i], sites)] += x[i];
      const std::size_t dim = std::size_t(1) << k;
      CMatrix xi(dim, dim);
      for (std::size_t p = 0; p < tbl.size(); ++p)
        if (tbl[p] != 0.0) xi += tbl[p] * dual_ops[p];
      const EigenSystem es = eigh(xi);
      for (std::size_t t = 0; t < es.values.size() && es.values[t] < anticipate; ++t) {
        if (es.values[t] < -0.5 * tol) ++violated;
        for (std::size_t p = 0; p < q.size(); ++p)
          q[p] = detail::real_quad_form(dual_ops[p], es.vectors[t]);
        Cut cut;
        cut.sites = sites;
        cut.g.resize(nkeys);
        for (std::size_t i = 0; i < nkeys; ++i)
          cut.g[i] = q[detail::pattern_on_subset(keys[i], sites)];
        bool dup = false;
        for (const auto& old : cuts) {
          if (old.sites != sites) continue;
          double d = 0.0;
          for (std::size_t i = 0; i < nkeys; ++i)
            d = std::max(d, std::abs(old.g[i] - cut.g[i]));
          if (d < 1e-10) {
            dup = true;
            break;
          }
        }
        if (!dup && cuts.size() < kMaxCuts) {
          cuts.push_back(std::move(cut));
          ++cuts_generated;
        }
      }
    }
    if (violated == 0) {
      out.status = SolveStatus::optimal;
      break;
    }
    if (cuts.size() >= kMaxCuts) break;
    cuts.erase(std::remove_if(cuts.begin(), cuts.end(),
                              [](const Cut& cut) { return cut.stale >= 3; }),
               cuts.end());
  }

  out.cuts_used = cuts_generated;
  if (have_x) {
    SparseDistribution mu;
    mu.n = h.n;
    for (std::size_t i = 0; i < nkeys; ++i)
      if (x[i] > 1e-15) mu.weights[keys[i]] = x[i];
    out.mu = normalized(mu, 1e-15);
    out.energy = energy(h, out.mu, basis).energy;
  }
  return out;
}

/// Exact qq ground energy by enumerating the full 4^n support.
inline double exact_qq_ground_energy(const LocalHamiltonian& h, std::size_t k,
                                     const SicBasis& basis = build_sic_basis()) {
  if (h.n > 7 || pow4(h.n) > 20000)
    throw std::invalid_argument("exact_qq_ground_energy: 4^n exceeds 2*10^4 guard");
  std::vector<Assignment> support;
  support.reserve(pow4(h.n));
  for (std::size_t i = 0; i < pow4(h.n); ++i)
    support.push_back(pattern_of_index(i, h.n));
  const SolveResult res = fixed_support_minimize(h, support, k, 1e-9, basis);
  if (res.status != SolveStatus::optimal)
    throw std::runtime_error(std::string("exact_qq_ground_energy: solver ended ") +
                             to_string(res.status));
  return res.energy;
}

/// Randomized ground-energy search: solve on a random support of size
/// M + delta_support (M = C(n,k) 4^k + 1), reduce the optimum's support back
/// to at most M points with caratheodory_reduce, refill with delta_support
/// fresh distinct assignments, and repeat.  Energies are non-increasing
/// across rounds within 1e-9; stops early after 3 consecutive rounds whose
/// improvement is below 1e-9 * max(1, scale(h)).  Rounds whose support
/// admits no feasible distribution are restarted from a fresh sample; if
/// every round is infeasible the search throws.  Per-round energies are
/// appended to *round_energies when given.
inline SolveResult heuristic_ground_energy(const LocalHamiltonian& h, std::size_t k,
                                           std::size_t delta_support, std::size_t rounds,
                                           std::uint64_t seed,
                                           std::vector<double>* round_energies = nullptr,
                                           const SicBasis& basis = build_sic_basis()) {
  validate_hamiltonian(h);
  if (delta_support == 0 || rounds == 0)
    throw std::invalid_argument("heuristic_ground_energy: parameters must be positive");
  if (k == 0 || k > h.n || k > 6)
    throw std::invalid_argument("heuristic_ground_energy: need 1 <= k <= min(n, 6)");

  const std::size_t m_bound = binomial(h.n, k) * pow4(k) + 1;
  // Total assignment count, saturating when 4^n overflows the word size.
  const std::size_t total =
      (2 * h.n >= 64) ? SIZE_MAX : (std::size_t(1) << (2 * h.n));
  const std::size_t target = std::min(m_bound + delta_support, total);

  Rng rng(seed);
  const auto sample_one = [&]() {
    Assignment a(h.n, '0');
    for (auto& ch : a) ch = char('0' + rng.below(4));
    return a;
  };

  std::set<Assignment> pool;
  const auto fill_fresh = [&](std::set<Assignment>& s, std::size_t want) {
    if (want >= total) {
      for (std::size_t i = 0; i < total; ++i) s.insert(pattern_of_index(i, h.n));
      return;
    }
    while (s.size() < want) s.insert(sample_one());
  };
  fill_fresh(pool, target);

  SolveResult best;
  bool have_best = false;
  double prev_energy = 0.0;
  bool have_prev = false;
  std::size_t stagnant = 0;
  const double stall_tol = 1e-9 * std::max(1.0, scale(h));

  for (std::size_t round = 0; round < rounds; ++round) {
    const std::vector<Assignment> support(pool.begin(), pool.end());
    SolveResult res = fixed_support_minimize(h, support, k, 1e-9, basis);
    if (res.status == SolveStatus::infeasible) {
      pool.clear();
      fill_fresh(pool, target);
      have_prev = false;
      continue;
    }
    if (round_energies) round_energies->push_back(res.energy);
    if (!have_best || res.energy < best.energy) {
      best = res;
      have_best = true;
    }
    if (have_prev && prev_energy - res.energy < stall_tol) {
      if (++stagnant >= 3) break;
    } else {
      stagnant = 0;
    }
    prev_energy = res.energy;
    have_prev = true;

    if (round + 1 < rounds) {
      const SparseDistribution reduced = caratheodory_reduce(res.mu, k);
      pool.clear();
      for (const auto& [key, w] : reduced.weights) pool.insert(key);
      fill_fresh(pool, std::min(pool.size() + delta_support, total));
    }
  }
  if (!have_best)
    throw std::runtime_error("heuristic_ground_energy: every round was infeasible");
  return best;
}

}  // namespace quasiq
