#pragma once
//
// Sparse distributions over POVM outcome strings: the concrete representation
// of quasi-quantum states.  A distribution mu over {0,1,2,3}^n encodes the
// operator X(mu) = sum_a mu(a) D_a; nonnegativity of the weights makes
// global positivity structural, and the state is a k-local qq state when
// every k-site marginal operator X_I(mu) is PSD.
//
// This header holds the distribution type, marginal computation, qq-validity
// certification, color symmetrization, collision probabilities, the
// constructive Caratheodory support reduction ("sister states"), and the
// dense <-> sparse conversions that witness informational completeness.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quasiq/assignment.hpp"
#include "quasiq/matrix.hpp"
#include "quasiq/sic.hpp"

namespace quasiq {

struct SparseDistribution {
  std::size_t n = 0;
  std::map<Assignment, double> weights;  // ordered keys keep output deterministic

  std::size_t support_size() const { return weights.size(); }
};

/// Throws unless mu satisfies the representation invariants: key length and
/// alphabet, strictly positive weights, total mass 1 within tol.
inline void validate_distribution(const SparseDistribution& mu, double tol = 1e-9) {
  double sum = 0.0;
  for (const auto& [key, w] : mu.weights) {
    if (key.size() != mu.n || !assignment_ok(key))
      throw std::invalid_argument("distribution key '" + key + "' invalid for n=" +
                                  std::to_string(mu.n));
    if (!(w > 0.0)) throw std::invalid_argument("non-positive weight on '" + key + "'");
    sum += w;
  }
  if (std::abs(sum - 1.0) > tol)
    throw std::invalid_argument("distribution mass " + std::to_string(sum) +
                                " differs from 1");
}

/// Removes weights below the pruning threshold and rescales to total mass 1.
inline SparseDistribution normalized(SparseDistribution mu, double prune = 1e-12) {
  double sum = 0.0;
  for (auto it = mu.weights.begin(); it != mu.weights.end();) {
    if (it->second <= prune)
      it = mu.weights.erase(it);
    else {
      sum += it->second;
      ++it;
    }
  }
  if (sum <= 0.0) throw std::invalid_argument("distribution has no mass after pruning");
  for (auto& [key, w] : mu.weights) w /= sum;
  return mu;
}

inline SparseDistribution point_mass(const Assignment& a) {
  require_assignment(a, a.size());
  SparseDistribution mu;
  mu.n = a.size();
  mu.weights[a] = 1.0;
  return mu;
}

/// The uniform distribution materialized explicitly; guarded to small n.
inline SparseDistribution uniform_distribution(std::size_t n) {
  if (n > 9) throw std::invalid_argument("uniform_distribution: n > 9");
  SparseDistribution mu;
  mu.n = n;
  const std::size_t total = pow4(n);
  const double w = 1.0 / double(total);
  for (std::size_t i = 0; i < total; ++i) mu.weights[pattern_of_index(i, n)] = w;
  return mu;
}

/// Convex mixture; all parts must share the site count and the weights must
/// sum to 1 within 1e-9.
inline SparseDistribution mix(
    const std::vector<std::pair<double, const SparseDistribution*>>& parts) {
  if (parts.empty()) throw std::invalid_argument("mix: empty");
  SparseDistribution out;
  out.n = parts.front().second->n;
  double total = 0.0;
  for (const auto& [t, mu] : parts) {
    if (mu->n != out.n) throw std::invalid_argument("mix: site count mismatch");
    if (t < -1e-12) throw std::invalid_argument("mix: negative weight");
    total += t;
    for (const auto& [key, w] : mu->weights) out.weights[key] += t * w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("mix: weights not 1");
  return normalized(std::move(out));
}

/// Product distribution on the concatenation of the two site sets.
inline SparseDistribution product(const SparseDistribution& a,
                                  const SparseDistribution& b) {
  SparseDistribution out;
  out.n = a.n + b.n;
  for (const auto& [ka, wa] : a.weights)
    for (const auto& [kb, wb] : b.weights) out.weights[ka + kb] = wa * wb;
  return out;
}

// ---------------------------------------------------------------------------
// Marginals
// ---------------------------------------------------------------------------

inline void require_index_set(const std::vector<std::size_t>& sites, std::size_t n,
                              std::size_t max_size = 12) {
  if (sites.size() > max_size)
    throw std::invalid_argument("index set larger than guard " +
                                std::to_string(max_size));
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i] >= n) throw std::invalid_argument("index out of range");
    if (i > 0 && sites[i] <= sites[i - 1])
      throw std::invalid_argument("indices must be strictly increasing");
  }
}

/// Dense marginal table over {0,1,2,3}^|I|, indexed base-4 with sites[0] most
/// significant.  Sites must be strictly increasing and in range; |I| <= 12.
inline std::vector<double> marginal_distribution(const SparseDistribution& mu,
                                                 const std::vector<std::size_t>& sites) {
  require_index_set(sites, mu.n);
  std::vector<double> table(pow4(sites.size()), 0.0);
  for (const auto& [key, w] : mu.weights)
    table[pattern_index(restrict_to(key, sites))] += w;
  return table;
}

/// X_I = sum_p table(p) D_{p_1} (x) ... (x) D_{p_k} from a marginal table.
inline CMatrix dual_operator_of_table(const std::vector<double>& table,
                                      std::size_t k, const SicBasis& basis) {
  if (table.size() != pow4(k)) throw std::invalid_argument("bad table size");
  const std::size_t dim = std::size_t(1) << k;
  CMatrix x(dim, dim);
  for (std::size_t p = 0; p < table.size(); ++p) {
    if (table[p] == 0.0) continue;
    x += table[p] * tensor_basis_element(basis, pattern_of_index(p, k), BasisKind::kDual);
  }
  return x;
}

/// The marginal operator X_I(mu); Hermitian with trace 1.
inline CMatrix marginal_operator(const SparseDistribution& mu,
                                 const std::vector<std::size_t>& sites,
                                 const SicBasis& basis) {
  return dual_operator_of_table(marginal_distribution(mu, sites), sites.size(), basis);
}

// ---------------------------------------------------------------------------
// Marginal sources: anything that can answer joint outcome-table queries.
// Lets mixtures of product processes (e.g. the completeness witness of the
// scapegoat construction) be certified without materializing their support.
// ---------------------------------------------------------------------------

class MarginalSource {
 public:
  virtual ~MarginalSource() = default;
  virtual std::size_t sites() const = 0;
  /// Joint outcome table over the strictly increasing site list I, indexed
  /// base-4 with I[0] most significant; entries sum to 1.
  virtual std::vector<double> table(const std::vector<std::size_t>& sites) const = 0;
};

class ExplicitSource final : public MarginalSource {
 public:
  explicit ExplicitSource(SparseDistribution mu) : mu_(std::move(mu)) {}
  std::size_t sites() const override { return mu_.n; }
  std::vector<double> table(const std::vector<std::size_t>& s) const override {
    return marginal_distribution(mu_, s);
  }
  const SparseDistribution& distribution() const { return mu_; }

 private:
  SparseDistribution mu_;
};

class UniformSource final : public MarginalSource {
 public:
  explicit UniformSource(std::size_t n) : n_(n) {}
  std::size_t sites() const override { return n_; }
  std::vector<double> table(const std::vector<std::size_t>& s) const override {
    require_index_set(s, n_);
    return std::vector<double>(pow4(s.size()), 1.0 / double(pow4(s.size())));
  }

 private:
  std::size_t n_;
};

/// Product of independent blocks.  Each block owns an arbitrary subset of the
/// global sites (given as a global->local site list); blocks must partition
/// the full site range.
class ProductSource final : public MarginalSource {
 public:
  struct Block {
    std::vector<std::size_t> global_sites;  // strictly increasing
    std::shared_ptr<const MarginalSource> source;
  };

  ProductSource(std::size_t n, std::vector<Block> blocks)
      : n_(n), blocks_(std::move(blocks)) {
    std::vector<char> seen(n_, 0);
    for (const auto& b : blocks_) {
      if (!b.source || b.source->sites() != b.global_sites.size())
        throw std::invalid_argument("ProductSource: block size mismatch");
      for (std::size_t i = 0; i < b.global_sites.size(); ++i) {
        const std::size_t g = b.global_sites[i];
        if (g >= n_ || seen[g]) throw std::invalid_argument("ProductSource: bad cover");
        if (i > 0 && b.global_sites[i] <= b.global_sites[i - 1])
          throw std::invalid_argument("ProductSource: sites not increasing");
        seen[g] = 1;
      }
    }
    for (char c : seen)
      if (!c) throw std::invalid_argument("ProductSource: sites not covered");
  }

  std::size_t sites() const override { return n_; }

  std::vector<double> table(const std::vector<std::size_t>& s) const override {
    require_index_set(s, n_);
    const std::size_t k = s.size();
    // For each queried site, find its block and local index.
    struct Hit {
      std::size_t block;
      std::size_t local;
    };
    std::vector<Hit> hits(k);
    std::vector<std::vector<std::size_t>> block_query(blocks_.size());
    std::vector<std::vector<std::size_t>> block_pos(blocks_.size());
    for (std::size_t qi = 0; qi < k; ++qi) {
      bool found = false;
      for (std::size_t bi = 0; bi < blocks_.size() && !found; ++bi) {
        const auto& gs = blocks_[bi].global_sites;
        const auto it = std::lower_bound(gs.begin(), gs.end(), s[qi]);
        if (it != gs.end() && *it == s[qi]) {
          hits[qi] = {bi, std::size_t(it - gs.begin())};
          block_query[bi].push_back(hits[qi].local);
          block_pos[bi].push_back(qi);
          found = true;
        }
      }
      if (!found) throw std::logic_error("ProductSource: uncovered site");
    }
    // Query each touched block once, then assemble the product table.
    std::vector<std::vector<double>> sub(blocks_.size());
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi)
      if (!block_query[bi].empty()) sub[bi] = blocks_[bi].source->table(block_query[bi]);

    std::vector<double> out(pow4(k), 0.0);
    std::vector<int> digits(k);
    for (std::size_t p = 0; p < out.size(); ++p) {
      std::size_t tmp = p;
      for (std::size_t i = k; i-- > 0;) {
        digits[i] = int(tmp & 3);
        tmp >>= 2;
      }
      double v = 1.0;
      for (std::size_t bi = 0; bi < blocks_.size() && v != 0.0; ++bi) {
        if (block_query[bi].empty()) continue;
        std::size_t idx = 0;
        for (std::size_t j = 0; j < block_pos[bi].size(); ++j)
          idx = 4 * idx + std::size_t(digits[block_pos[bi][j]]);
        v *= sub[bi][idx];
      }
      out[p] = v;
    }
    return out;
  }

 private:
  std::size_t n_;
  std::vector<Block> blocks_;
};

class MixtureSource final : public MarginalSource {
 public:
  MixtureSource(std::vector<std::pair<double, std::shared_ptr<const MarginalSource>>> parts)
      : parts_(std::move(parts)) {
    if (parts_.empty()) throw std::invalid_argument("MixtureSource: empty");
    double total = 0.0;
    for (const auto& [t, src] : parts_) {
      if (!src || src->sites() != parts_.front().second->sites())
        throw std::invalid_argument("MixtureSource: site mismatch");
      if (t < -1e-12) throw std::invalid_argument("MixtureSource: negative weight");
      total += t;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("MixtureSource: weights not 1");
  }

  std::size_t sites() const override { return parts_.front().second->sites(); }

  std::vector<double> table(const std::vector<std::size_t>& s) const override {
    std::vector<double> out(pow4(s.size()), 0.0);
    for (const auto& [t, src] : parts_) {
      const auto sub = src->table(s);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += t * sub[i];
    }
    return out;
  }

 private:
  std::vector<std::pair<double, std::shared_ptr<const MarginalSource>>> parts_;
};

// ---------------------------------------------------------------------------
// qq-validity certification
// ---------------------------------------------------------------------------

struct QqCertificate {
  bool valid = false;
  /// Every k-subset whose marginal operator has an eigenvalue below -tol,
  /// with that minimum eigenvalue; empty iff valid.
  std::vector<std::pair<std::vector<std::size_t>, double>> violations;
};

namespace detail {

template <class TableFn>
QqCertificate check_k_local(std::size_t n, std::size_t k, double tol,
                            const SicBasis& basis, TableFn&& table_of) {
  if (k > n) throw std::invalid_argument("is_k_local_qq: k > n");
  if (k > 6) throw std::invalid_argument("is_k_local_qq: k > 6 guard");
  if (k == 0) throw std::invalid_argument("is_k_local_qq: k must be >= 1");
  QqCertificate cert;
  for (const auto& subset : k_subsets(n, k)) {
    const CMatrix x = dual_operator_of_table(table_of(subset), k, basis);
    const double lo = min_eigenvalue(x);
    if (lo < -tol) cert.violations.emplace_back(subset, lo);
  }
  cert.valid = cert.violations.empty();
  return cert;
}

}  // namespace detail

/// Certifies the k-local qq conditions: every k-site marginal operator PSD
/// up to tol.  Lists all violating subsets in lexicographic order.
inline QqCertificate is_k_local_qq(const SparseDistribution& mu, std::size_t k,
                                   double tol = 1e-9) {
  validate_distribution(mu);
  const SicBasis basis = build_sic_basis();
  return detail::check_k_local(mu.n, k, tol, basis, [&](const auto& subset) {
    return marginal_distribution(mu, subset);
  });
}

/// Same certification for implicit states given by a marginal source.
inline QqCertificate is_k_local_qq(const MarginalSource& src, std::size_t k,
                                   double tol = 1e-9) {
  const SicBasis basis = build_sic_basis();
  return detail::check_k_local(src.sites(), k, tol, basis, [&](const auto& subset) {
    return src.table(subset);
  });
}

// ---------------------------------------------------------------------------
// Dense assembly and extraction (informational completeness)
// ---------------------------------------------------------------------------

namespace detail {

using WeightedKey = std::pair<Assignment, double>;

/// Recursive assembly of sum_a w_a D_a over a lexicographically sorted range,
/// splitting on the symbol at `depth`.  Linear passes per level keep the cost
/// at O(n 4^n) instead of support * 4^n.
inline CMatrix assemble_range(const std::vector<WeightedKey>& items, std::size_t lo,
                              std::size_t hi, std::size_t depth, std::size_t n,
                              const SicBasis& basis) {
  const std::size_t dim = std::size_t(1) << (n - depth);
  if (lo >= hi) return CMatrix(dim, dim);
  if (depth == n) {
    CMatrix one(1, 1);
    for (std::size_t i = lo; i < hi; ++i) one(0, 0) += items[i].second;
    return one;
  }
  CMatrix out(dim, dim);
  std::size_t cursor = lo;
  for (char sym = '0'; sym <= '3'; ++sym) {
    std::size_t end = cursor;
    while (end < hi && items[end].first[depth] == sym) ++end;
    if (end > cursor)
      out += kron(basis.d[sym - '0'],
                  assemble_range(items, cursor, end, depth + 1, n, basis));
    cursor = end;
  }
  return out;
}

}  // namespace detail

/// X(mu) = sum_a mu(a) D_a as a dense 2^n-dimensional operator; n <= 10.
inline CMatrix assemble_dense(const SparseDistribution& mu, const SicBasis& basis) {
  if (mu.n > 10) throw std::invalid_argument("assemble_dense: n > 10");
  validate_distribution(mu);
  std::vector<detail::WeightedKey> items(mu.weights.begin(), mu.weights.end());
  return detail::assemble_range(items, 0, items.size(), 0, mu.n, basis);
}

/// mu(a) = Tr(rho F_a) for every outcome string; errors if any probability is
/// below -1e-9 (the operator is not globally positive for the POVM).  rho may
/// be any Hermitian trace-1 operator, in particular a qq state.
inline SparseDistribution distribution_of_state(const CMatrix& rho,
                                                const SicBasis& basis) {
  if (!rho.square()) throw std::invalid_argument("distribution_of_state: non-square");
  std::size_t n = 0;
  while ((std::size_t(1) << n) < rho.rows()) ++n;
  if ((std::size_t(1) << n) != rho.rows() || n > 10)
    throw std::invalid_argument("distribution_of_state: dimension not 2^n, n <= 10");
  if (!rho.is_hermitian(1e-8 * std::max(1.0, rho.max_abs())))
    throw std::invalid_argument("distribution_of_state: not Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > 1e-9)
    throw std::invalid_argument("distribution_of_state: trace != 1");

  SparseDistribution mu;
  mu.n = n;
  // Contract one site at a time: M -> Tr_site0((F_a (x) I) M), producing the
  // quarter-size operator for each outcome a; weights appear at the leaves.
  struct Frame {
    CMatrix m;
    std::size_t depth;
    Assignment prefix;
  };
  std::vector<Frame> stack;
  stack.push_back({rho, 0, ""});
  while (!stack.empty()) {
    Frame fr = std::move(stack.back());
    stack.pop_back();
    if (fr.depth == n) {
      const double w = fr.m(0, 0).real();
      if (w < -1e-9)
        throw std::invalid_argument(
            "distribution_of_state: negative SIC probability at '" + fr.prefix + "'");
      if (w > 1e-12) mu.weights[fr.prefix] = w;
      continue;
    }
    const std::size_t half = fr.m.rows() / 2;
    for (int a = 3; a >= 0; --a) {
      CMatrix sub(half, half);
      const CMatrix& f = basis.f[a];
      for (std::size_t i = 0; i < half; ++i)
        for (std::size_t j = 0; j < half; ++j) {
          cdouble v = 0.0;
          for (int s = 0; s < 2; ++s)
            for (int t = 0; t < 2; ++t)
              v += f(t, s) * fr.m(s * half + i, t * half + j);
          sub(i, j) = v;
        }
      stack.push_back({std::move(sub), fr.depth + 1, fr.prefix + char('0' + a)});
    }
  }
  return normalized(std::move(mu));
}

// ---------------------------------------------------------------------------
// Color symmetrization and collision probabilities
// ---------------------------------------------------------------------------

/// All 24 permutations of the symbols {0,1,2,3}, each as a map old->new.
inline const std::vector<std::array<char, 4>>& color_permutations() {
  static const std::vector<std::array<char, 4>> perms = [] {
    std::vector<std::array<char, 4>> out;
    std::array<char, 4> p = {'0', '1', '2', '3'};
    do {
      out.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
  }();
  return perms;
}

/// Uniform average of mu over all 24 color permutations.
inline SparseDistribution symmetrize_colors(const SparseDistribution& mu) {
  SparseDistribution out;
  out.n = mu.n;
  const auto& perms = color_permutations();
  Assignment image;
  for (const auto& [key, w] : mu.weights) {
    const double part = w / double(perms.size());
    for (const auto& p : perms) {
      image = key;
      for (auto& c : image) c = p[c - '0'];
      out.weights[image] += part;
    }
  }
  return out;
}

/// Prob_mu(alpha_i == alpha_j).
inline double collision_probability(const SparseDistribution& mu, std::size_t i,
                                    std::size_t j) {
  if (i == j || i >= mu.n || j >= mu.n)
    throw std::invalid_argument("collision_probability: bad indices");
  double tau = 0.0;
  for (const auto& [key, w] : mu.weights)
    if (key[i] == key[j]) tau += w;
  return tau;
}

/// Minimum eigenvalue of the pair marginal of a color-invariant distribution
/// with collision probability tau: min(tau, 1 - 3 tau).
inline double color_invariant_min_eig(double tau) {
  if (tau < -1e-12 || tau > 1.0 + 1e-12)
    throw std::invalid_argument("color_invariant_min_eig: tau outside [0,1]");
  return std::min(tau, 1.0 - 3.0 * tau);
}

/// det(lambda D_0 + (1-lambda) D_1).  Closed form: -2 (3 lambda^2 - 3 lambda
/// + 1), which is at most -1/2 on [0,1] — a mixture of just two dual matrices
/// is never PSD, the seed of the 3^n support bound.
inline double pair_dual_mixture_det(double lambda) {
  if (lambda < -1e-12 || lambda > 1.0 + 1e-12)
    throw std::invalid_argument("pair_dual_mixture_det: lambda outside [0,1]");
  const SicBasis b = build_sic_basis();
  CMatrix m = lambda * b.d[0];
  m += (1.0 - lambda) * b.d[1];
  const cdouble det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  return det.real();
}

// ---------------------------------------------------------------------------
// Caratheodory sister-state reduction
// ---------------------------------------------------------------------------

/// Reduces the support of mu to at most M+1 = C(n,k) 4^k + 1 points while
/// preserving every k-local marginal table to 1e-9.
///
/// One Gaussian elimination (partial pivoting, pivot tolerance 1e-11) of the
/// (M+1) x |supp| marginal-map matrix yields a full kernel basis; each kernel
/// vector is applied as a line move until the first weight reaches zero, the
/// dropped coordinate is eliminated from the remaining kernel vectors, and an
/// outer loop re-eliminates in the (rare) event that residual kernel remains.
/// This is an efficiency refinement of the one-vector-per-elimination loop:
/// identical moves, one elimination instead of |supp| - M - 1 of them.
inline SparseDistribution caratheodory_reduce(const SparseDistribution& mu,
                                              std::size_t k) {
  validate_distribution(mu);
  if (k > mu.n) throw std::invalid_argument("caratheodory_reduce: k > n");
  const auto subsets = k_subsets(mu.n, k);
  const std::size_t m_rows = subsets.size() * pow4(k);
  if (m_rows > 200000)
    throw std::invalid_argument("caratheodory_reduce: C(n,k) 4^k exceeds 2e5 guard");
  const std::size_t target = m_rows + 1;

  std::vector<Assignment> keys;
  std::vector<double> w;
  keys.reserve(mu.weights.size());
  for (const auto& [key, weight] : mu.weights) {
    keys.push_back(key);
    w.push_back(weight);
  }

  // Frozen input marginals for the final verification.
  std::vector<std::vector<double>> input_tables;
  input_tables.reserve(subsets.size());
  for (const auto& s : subsets) input_tables.push_back(marginal_distribution(mu, s));

  const double kPivotTol = 1e-11;
  std::vector<char> live(keys.size(), 1);

  for (int outer = 0; outer < 12; ++outer) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < keys.size(); ++j)
      if (live[j]) cols.push_back(j);
    if (cols.size() <= target) break;

    const std::size_t rows = m_rows + 1;
    const std::size_t ncol = cols.size();
    if (rows * ncol > 30000000)
      throw std::invalid_argument("caratheodory_reduce: problem too large to factor");

    // Marginal-map matrix: one row per (subset, pattern), plus a ones row.
    std::vector<double> a(rows * ncol, 0.0);
    for (std::size_t j = 0; j < ncol; ++j) {
      const Assignment& key = keys[cols[j]];
      for (std::size_t si = 0; si < subsets.size(); ++si) {
        const std::size_t r = si * pow4(k) + pattern_index(restrict_to(key, subsets[si]));
        a[r * ncol + j] = 1.0;
      }
      a[m_rows * ncol + j] = 1.0;
    }

    // Forward elimination with partial pivoting, tracking pivot columns.
    std::vector<std::size_t> pivot_row_of_col(ncol, SIZE_MAX);
    std::vector<std::size_t> row_order(rows);
    std::iota(row_order.begin(), row_order.end(), 0);
    std::size_t rank = 0;
    std::vector<std::size_t> pivot_cols;
    for (std::size_t c = 0; c < ncol && rank < rows; ++c) {
      std::size_t best = rank;
      double best_abs = 0.0;
      for (std::size_t r = rank; r < rows; ++r) {
        const double v = std::abs(a[row_order[r] * ncol + c]);
        if (v > best_abs) {
          best_abs = v;
          best = r;
        }
      }
      if (best_abs <= kPivotTol) continue;  // free column
      std::swap(row_order[rank], row_order[best]);
      const double* prow = &a[row_order[rank] * ncol];
      const double pv = prow[c];
      for (std::size_t r = rank + 1; r < rows; ++r) {
        double* row = &a[row_order[r] * ncol];
        const double f = row[c] / pv;
        if (f == 0.0) continue;
        row[c] = 0.0;
        for (std::size_t j = c + 1; j < ncol; ++j) row[j] -= f * prow[j];
      }
      pivot_row_of_col[c] = row_order[rank];
      pivot_cols.push_back(c);
      ++rank;
    }

    // Kernel basis by back-substitution, one vector per free column.
    std::vector<std::vector<double>> kernel;
    for (std::size_t f = 0; f < ncol; ++f) {
      if (pivot_row_of_col[f] != SIZE_MAX) continue;
      std::vector<double> z(ncol, 0.0);
      z[f] = 1.0;
      for (std::size_t pi = pivot_cols.size(); pi-- > 0;) {
        const std::size_t c = pivot_cols[pi];
        if (c > f) continue;  // echelon: pivot columns right of f have zero coeff
        const double* row = &a[pivot_row_of_col[c] * ncol];
        double s = 0.0;
        for (std::size_t j = c + 1; j <= f; ++j)
          if (z[j] != 0.0) s += row[j] * z[j];
        z[c] = -s / row[c];
      }
      kernel.push_back(std::move(z));
    }
    if (kernel.empty())
      throw std::runtime_error("caratheodory_reduce: support exceeds target but no kernel found");

    // Apply kernel vectors as line moves.  After each drop, the dropped
    // coordinate is zeroed across the surviving vectors by folding in the
    // vector with the largest entry there (partial pivoting over the whole
    // set, the used vector included) — folding through a near-zero entry
    // would amplify roundoff into visible marginal drift.
    std::vector<char> col_live(ncol, 1);
    std::size_t live_cols = ncol;
    while (live_cols > target && !kernel.empty()) {
      std::vector<double> z = std::move(kernel.back());
      kernel.pop_back();
      double zmax = 0.0;
      for (std::size_t j = 0; j < ncol; ++j)
        if (col_live[j]) zmax = std::max(zmax, std::abs(z[j]));
      if (zmax <= 1e-12) continue;
      bool has_pos = false;
      for (std::size_t j = 0; j < ncol; ++j) {
        if (!col_live[j]) {
          z[j] = 0.0;
          continue;
        }
        z[j] /= zmax;
        if (z[j] > 1e-14) has_pos = true;
      }
      if (!has_pos)
        for (auto& v : z) v = -v;

      double t = 0.0;
      std::size_t drop = SIZE_MAX;
      for (std::size_t j = 0; j < ncol; ++j) {
        if (!col_live[j] || z[j] <= 1e-14) continue;
        const double ratio = w[cols[j]] / z[j];
        if (drop == SIZE_MAX || ratio < t) {
          t = ratio;
          drop = j;
        }
      }
      if (drop == SIZE_MAX) continue;
      for (std::size_t j = 0; j < ncol; ++j) {
        if (!col_live[j] || z[j] == 0.0) continue;
        // Exact arithmetic keeps every weight nonnegative (t is the minimum
        // ratio); clamp the rounding dust.
        w[cols[j]] = std::max(0.0, w[cols[j]] - t * z[j]);
      }
      w[cols[drop]] = 0.0;
      col_live[drop] = 0;
      live[cols[drop]] = 0;
      --live_cols;

      std::size_t piv = kernel.size();  // == size means "use z itself"
      double piv_abs = std::abs(z[drop]);
      for (std::size_t i = 0; i < kernel.size(); ++i)
        if (std::abs(kernel[i][drop]) > piv_abs) {
          piv_abs = std::abs(kernel[i][drop]);
          piv = i;
        }
      if (piv_abs > 0.0) {
        std::vector<double> e;
        if (piv == kernel.size()) {
          e = std::move(z);
        } else {
          // Swap: the stored vector becomes the eliminator, z stays in the
          // set (it still spans a fresh kernel direction).
          e = std::move(kernel[piv]);
          kernel[piv] = std::move(z);
        }
        const double ed = e[drop];
        for (auto& y : kernel) {
          if (y[drop] == 0.0) continue;
          const double f = y[drop] / ed;
          for (std::size_t j = 0; j < ncol; ++j) y[j] -= f * e[j];
          y[drop] = 0.0;
        }
      }
    }

    // Drop zero-weight points (harmless: they carry no mass).
    for (std::size_t j = 0; j < keys.size(); ++j)
      if (live[j] && w[j] <= 1e-12) live[j] = 0;
  }

  SparseDistribution out;
  out.n = mu.n;
  for (std::size_t j = 0; j < keys.size(); ++j)
    if (live[j] && w[j] > 1e-12) out.weights[keys[j]] = w[j];
  out = normalized(std::move(out));

  if (out.support_size() > target)
    throw std::runtime_error("caratheodory_reduce: failed to reach target support " +
                             std::to_string(target));
  for (std::size_t si = 0; si < subsets.size(); ++si) {
    const auto got = marginal_distribution(out, subsets[si]);
    for (std::size_t p = 0; p < got.size(); ++p)
      if (std::abs(got[p] - input_tables[si][p]) > 1e-9)
        throw std::runtime_error("caratheodory_reduce: marginal drift exceeds 1e-9");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

inline void write_distribution(std::ostream& os, const SparseDistribution& mu) {
  os << "n " << mu.n << "\n";
  os << std::setprecision(17);
  for (const auto& [key, w] : mu.weights) os << key << " " << w << "\n";
}

inline SparseDistribution read_distribution(std::istream& is) {
  std::string tag;
  std::size_t n = 0;
  if (!(is >> tag) || tag != "n" || !(is >> n))
    throw std::invalid_argument("distribution file: expected header 'n <n>'");
  SparseDistribution mu;
  mu.n = n;
  Assignment key;
  double w;
  while (is >> key >> w) {
    if (key.size() != n || !assignment_ok(key))
      throw std::invalid_argument("distribution file: bad assignment '" + key + "'");
    if (!(w > 0.0))
      throw std::invalid_argument("distribution file: non-positive weight on '" + key + "'");
    if (mu.weights.count(key))
      throw std::invalid_argument("distribution file: duplicate assignment '" + key + "'");
    mu.weights[key] = w;
  }
  if (!is.eof()) throw std::invalid_argument("distribution file: trailing garbage");
  validate_distribution(mu);
  return mu;
}

inline SparseDistribution read_distribution_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open distribution file: " + path);
  return read_distribution(in);
}

inline void write_distribution_file(const std::string& path,
                                    const SparseDistribution& mu) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write distribution file: " + path);
  write_distribution(out, mu);
}

}  // namespace quasiq
