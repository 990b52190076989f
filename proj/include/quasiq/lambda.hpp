#pragma once

// Lambda-solutions: color-invariant distributions over legal colorings whose
// pair marginals on non-edges stay uniformly away from the PSD boundary
// (min eigenvalue >= lambda > 0).  Constructed for cycles, graphs of the
// third kind, isolated vertices, and products over connected components;
// these are exactly the building blocks the graph decomposition emits.
//
// Two representations coexist.  Every solution carries a marginal oracle
// (answers any small joint-outcome table by enumerating the ancestor closure
// of the queried sites under the generating process); when the predicted
// support is at most 10^5 assignments an explicit sparse distribution is
// materialized as well, so the two paths can be cross-checked.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "quasiq/distribution.hpp"
#include "quasiq/graph.hpp"
#include "quasiq/vizing.hpp"

namespace quasiq {

// ---------------------------------------------------------------------------
// Domain type
// ---------------------------------------------------------------------------

/// A lambda-solution for `graph`.  `source` is always usable; `explicit_dist`
/// is present when the support was small enough to enumerate.  `tau_min`
/// and `tau_max` bracket the collision probability over non-edges (tau_min >
/// tau_max signals a graph with no non-edges, where the pair condition is
/// vacuous and lambda_achieved is capped at the theoretical maximum 1/4).
struct LambdaSolution {
  Graph graph;
  std::shared_ptr<const MarginalSource> source;
  std::optional<SparseDistribution> explicit_dist;
  double lambda_achieved = 0.0;
  double tau_min = 1.0;
  double tau_max = 0.0;
};

namespace detail {

/// Collision probability of a 2-site table: total mass on equal outcomes.
inline double table_collision(const std::vector<double>& t) {
  if (t.size() != 16) throw std::invalid_argument("table_collision: not a pair table");
  return t[0] + t[5] + t[10] + t[15];
}

/// Fill tau range and achieved lambda by querying every non-edge pair
/// marginal of the (color-invariant) source.
inline void finalize_lambda(LambdaSolution& sol) {
  const std::size_t n = sol.graph.n;
  sol.tau_min = 1.0;
  sol.tau_max = 0.0;
  double lam = 0.25;  // vacuous cap when there are no non-edges
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (sol.graph.has_edge(i, j)) continue;
      const double tau = table_collision(sol.source->table({i, j}));
      sol.tau_min = std::min(sol.tau_min, tau);
      sol.tau_max = std::max(sol.tau_max, tau);
      lam = std::min(lam, color_invariant_min_eig(tau));
    }
  sol.lambda_achieved = lam;
}

// ---------------------------------------------------------------------------
// Cycle process (n >= 6)
// ---------------------------------------------------------------------------

/// The parent process mu' on the n-cycle, 0-based: odd sites ("parents") are
/// colored iid uniform over the 4 colors; even sites ("children") uniform
/// over the colors their two parent neighbors avoid.  For odd n the two
/// adjacent even sites 0 and n-1 form a coupled pair, colored jointly
/// uniform over the legal pairs given their parents 1 and n-2 (7 pairs when
/// the parents differ, 6 when they collide).
class CycleMuPrime {
 public:
  explicit CycleMuPrime(std::size_t n) : n_(n), odd_(n % 2 == 1) {
    if (n < 6) throw std::invalid_argument("CycleMuPrime: need n >= 6");
  }

  std::size_t n() const { return n_; }
  bool is_parent(std::size_t i) const { return i % 2 == 1; }
  bool is_pair_member(std::size_t i) const { return odd_ && (i == 0 || i == n_ - 1); }

  /// Probability of a full coloring (0 when the process cannot emit it).
  double weight(const Assignment& a) const {
    if (a.size() != n_) throw std::invalid_argument("CycleMuPrime: length mismatch");
    double w = 1.0;
    for (std::size_t i = 1; i < n_; i += 2) w *= 0.25;  // one factor per parent
    for (std::size_t c = 0; c < n_; c += 2) {
      if (is_pair_member(c)) continue;
      const char l = a[(c + n_ - 1) % n_], r = a[(c + 1) % n_];
      if (a[c] == l || a[c] == r) return 0.0;
      w /= (l == r) ? 3.0 : 2.0;  // 4 - (#distinct parent colors)
    }
    if (odd_) {
      const char p1 = a[1], p2 = a[n_ - 2];
      const char x = a[0], y = a[n_ - 1];
      if (x == p1 || y == p2 || x == y) return 0.0;
      w /= (p1 == p2) ? 6.0 : 7.0;
    }
    return w;
  }

  /// Joint outcome table over the strictly increasing site list (|I| <= 6),
  /// computed by enumerating the colors of the ancestor closure: the queried
  /// parents plus the parents of every queried child.
  std::vector<double> table(const std::vector<std::size_t>& sites) const {
    require_index_set(sites, n_, 6);
    if (sites.empty()) throw std::invalid_argument("CycleMuPrime: empty query");
    const std::size_t m = sites.size();

    bool pair0 = false, pairn = false;  // queried coupled-pair members
    std::vector<std::size_t> closure;
    for (std::size_t q : sites) {
      if (is_parent(q)) {
        closure.push_back(q);
      } else if (is_pair_member(q)) {
        (q == 0 ? pair0 : pairn) = true;
      } else {
        closure.push_back((q + n_ - 1) % n_);
        closure.push_back((q + 1) % n_);
      }
    }
    if (pair0 || pairn) {
      closure.push_back(1);
      closure.push_back(n_ - 2);
    }
    std::sort(closure.begin(), closure.end());
    closure.erase(std::unique(closure.begin(), closure.end()), closure.end());

    const std::size_t np = closure.size();
    std::vector<double> out(pow4(m), 0.0);
    std::vector<std::size_t> pcol(n_, 0);
    double w0 = 1.0;
    for (std::size_t t = 0; t < np; ++t) w0 *= 0.25;

    // Per-site value options (value, conditional probability); rebuilt for
    // every parent coloring.
    std::vector<std::vector<std::pair<std::size_t, double>>> options(m);

    for (std::size_t mask = 0; mask < pow4(np); ++mask) {
      std::size_t rest = mask;
      for (std::size_t t = 0; t < np; ++t) {
        pcol[closure[t]] = rest & 3;
        rest >>= 2;
      }

      // Legal pairs for the coupled pair given its parents, marginalized to
      // whichever members were queried.
      std::vector<std::tuple<std::size_t, std::size_t, double>> pair_law;
      if (pair0 || pairn) {
        const std::size_t p1 = pcol[1], p2 = pcol[n_ - 2];
        const double inv = (p1 == p2) ? 1.0 / 6.0 : 1.0 / 7.0;
        for (std::size_t x = 0; x < 4; ++x) {
          if (x == p1) continue;
          for (std::size_t y = 0; y < 4; ++y)
            if (y != p2 && y != x) pair_law.push_back({x, y, inv});
        }
      }

      auto fill_options = [&]() {
        for (std::size_t r = 0; r < m; ++r) {
          const std::size_t q = sites[r];
          options[r].clear();
          if (is_parent(q)) {
            options[r].push_back({pcol[q], 1.0});
          } else if (!is_pair_member(q)) {
            const std::size_t l = pcol[(q + n_ - 1) % n_], rr = pcol[(q + 1) % n_];
            const double p = (l == rr) ? 1.0 / 3.0 : 0.5;
            for (std::size_t v = 0; v < 4; ++v)
              if (v != l && v != rr) options[r].push_back({v, p});
          }
          // pair members are filled by the caller below
        }
      };

      auto accumulate = [&]() {
        // Odometer over per-site options; pattern index has sites[0] most
        // significant, matching marginal_distribution.
        std::function<void(std::size_t, std::size_t, double)> rec =
            [&](std::size_t r, std::size_t pat, double prob) {
              if (r == m) {
                out[pat] += prob;
                return;
              }
              for (const auto& [v, p] : options[r]) rec(r + 1, pat * 4 + v, prob * p);
            };
        rec(0, 0, w0);
      };

      if (pair0 && pairn) {
        // Both coupled sites queried: 0 is sites[0], n-1 is sites[m-1].
        for (const auto& [x, y, p] : pair_law) {
          fill_options();
          options[0] = {{x, p}};
          options[m - 1] = {{y, 1.0}};
          accumulate();
        }
      } else if (pair0 || pairn) {
        std::array<double, 4> marg{};
        for (const auto& [x, y, p] : pair_law) marg[pair0 ? x : y] += p;
        fill_options();
        const std::size_t r = pair0 ? 0 : m - 1;
        for (std::size_t v = 0; v < 4; ++v)
          if (marg[v] > 0.0) options[r].push_back({v, marg[v]});
        accumulate();
      } else {
        fill_options();
        accumulate();
      }
    }
    return out;
  }

 private:
  std::size_t n_;
  bool odd_;
};

/// Marginal oracle for the shift-averaged cycle solution: the average of mu'
/// pulled back by cyclic shifts (site i reads the mu'-color of (i-s) mod n).
/// The default shift set 2..n-1 matches the source construction; the
/// all-shift variant (0..n-1, fully rotation invariant) exists for
/// comparison experiments.
class CycleSource final : public MarginalSource {
 public:
  CycleSource(std::size_t n, bool all_shifts) : n_(n), base_(n) {
    for (std::size_t s = all_shifts ? 0 : 2; s < n; ++s) shifts_.push_back(s);
  }

  std::size_t sites() const override { return n_; }

  std::vector<double> table(const std::vector<std::size_t>& sites) const override {
    require_index_set(sites, n_, 6);
    if (auto it = cache_.find(sites); it != cache_.end()) return it->second;
    const std::size_t m = sites.size();
    std::vector<double> out(pow4(m), 0.0);
    for (std::size_t s : shifts_) {
      std::vector<std::pair<std::size_t, std::size_t>> shifted(m);  // (mu' site, rank)
      for (std::size_t r = 0; r < m; ++r) shifted[r] = {(sites[r] + n_ - s) % n_, r};
      std::sort(shifted.begin(), shifted.end());
      std::vector<std::size_t> query(m), pos(m);
      for (std::size_t t = 0; t < m; ++t) {
        query[t] = shifted[t].first;
        pos[shifted[t].second] = t;
      }
      const std::vector<double> sub = base_.table(query);
      for (std::size_t p = 0; p < out.size(); ++p) {
        std::size_t q = 0;
        for (std::size_t r = 0; r < m; ++r) {
          const std::size_t digit = (p >> (2 * (m - 1 - r))) & 3;
          q += digit << (2 * (m - 1 - pos[r]));
        }
        out[p] += sub[q] / double(shifts_.size());
      }
    }
    cache_[sites] = out;
    return out;
  }

  const CycleMuPrime& process() const { return base_; }

 private:
  std::size_t n_;
  CycleMuPrime base_;
  std::vector<std::size_t> shifts_;
  mutable std::map<std::vector<std::size_t>, std::vector<double>> cache_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Third-kind layout
// ---------------------------------------------------------------------------

/// Realization of a graph of the third kind.  Vertices: the vertices of J
/// keep their ids 0..J.n-1, the mid vertex of J-edge e is J.n + e, and the
/// optional vertices (one per flagged edge) follow in edge order.  Every
/// J-edge (u,v) is replaced by the path u - mid - v, plus the pendant edge
/// mid - optional when flagged; no edge joins two J-vertices.
struct ThirdKindLayout {
  Graph j;
  std::vector<char> has_optional;   // per J-edge
  std::vector<std::size_t> mid;     // global id of the mid vertex of J-edge e
  std::vector<std::size_t> opt;     // global id of the optional vertex, or SIZE_MAX
  Graph g;                          // the realized graph
};

inline ThirdKindLayout build_third_kind(const Graph& j,
                                        const std::vector<char>& optional_flags) {
  for (std::size_t d : degrees(j))
    if (d > 4) throw std::invalid_argument("build_third_kind: J max degree > 4");
  if (optional_flags.size() != j.edges.size())
    throw std::invalid_argument("build_third_kind: one flag per J-edge required");

  ThirdKindLayout lay;
  lay.j = j;
  lay.has_optional = optional_flags;
  const std::size_t ne = j.edges.size();
  std::size_t next = j.n + ne;
  lay.mid.resize(ne);
  lay.opt.assign(ne, SIZE_MAX);
  for (std::size_t e = 0; e < ne; ++e) {
    lay.mid[e] = j.n + e;
    if (optional_flags[e]) lay.opt[e] = next++;
  }
  lay.g = Graph{next, {}};
  for (std::size_t e = 0; e < ne; ++e) {
    lay.g.add_edge(j.edges[e].first, lay.mid[e]);
    lay.g.add_edge(j.edges[e].second, lay.mid[e]);
    if (lay.opt[e] != SIZE_MAX) lay.g.add_edge(lay.mid[e], lay.opt[e]);
  }
  return lay;
}

namespace detail {

/// Per-vertex roles of a third-kind layout, for the marginal oracles.
struct ThirdKindRoles {
  // kind: 0 = J-vertex, 1 = mid, 2 = optional
  std::vector<std::uint8_t> kind;
  std::vector<std::size_t> edge_of;  // J-edge index for mids/optionals
  explicit ThirdKindRoles(const ThirdKindLayout& lay)
      : kind(lay.g.n, 0), edge_of(lay.g.n, SIZE_MAX) {
    for (std::size_t e = 0; e < lay.mid.size(); ++e) {
      kind[lay.mid[e]] = 1;
      edge_of[lay.mid[e]] = e;
      if (lay.opt[e] != SIZE_MAX) {
        kind[lay.opt[e]] = 2;
        edge_of[lay.opt[e]] = e;
      }
    }
  }
};

/// mu_I of the third-kind construction: J-vertices iid uniform, each mid
/// uniform over the colors its two J-endpoints avoid, each optional uniform
/// over the three colors differing from its mid.
class ThirdKindMuI final : public MarginalSource {
 public:
  explicit ThirdKindMuI(ThirdKindLayout lay) : lay_(std::move(lay)), roles_(lay_) {}

  std::size_t sites() const override { return lay_.g.n; }

  std::vector<double> table(const std::vector<std::size_t>& sites) const override {
    require_index_set(sites, lay_.g.n, 6);
    if (auto it = cache_.find(sites); it != cache_.end()) return it->second;
    const std::size_t m = sites.size();

    // Ancestor closure: J-vertices queried or feeding a queried mid/optional,
    // and mids queried or feeding a queried optional.
    std::vector<std::size_t> roots, mids;
    for (std::size_t q : sites) {
      std::size_t e = SIZE_MAX;
      if (roles_.kind[q] == 0) {
        roots.push_back(q);
      } else {
        e = roles_.edge_of[q];
        roots.push_back(lay_.j.edges[e].first);
        roots.push_back(lay_.j.edges[e].second);
        mids.push_back(lay_.mid[e]);
      }
    }
    auto dedupe = [](std::vector<std::size_t>& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    dedupe(roots);
    dedupe(mids);

    std::vector<double> out(pow4(m), 0.0);
    std::vector<std::size_t> col(lay_.g.n, 0);
    double w0 = 1.0;
    for (std::size_t t = 0; t < roots.size(); ++t) w0 *= 0.25;

    // Recurse over closure mids, then odometer over the queried sites.
    std::function<void(std::size_t, double)> rec_mid = [&](std::size_t mi, double prob) {
      if (mi == mids.size()) {
        std::function<void(std::size_t, std::size_t, double)> rec =
            [&](std::size_t r, std::size_t pat, double p) {
              if (r == m) {
                out[pat] += p;
                return;
              }
              const std::size_t q = sites[r];
              if (roles_.kind[q] != 2) {
                rec(r + 1, pat * 4 + col[q], p);
              } else {
                const std::size_t mv = col[lay_.mid[roles_.edge_of[q]]];
                for (std::size_t v = 0; v < 4; ++v)
                  if (v != mv) rec(r + 1, pat * 4 + v, p / 3.0);
              }
            };
        rec(0, 0, prob);
        return;
      }
      const std::size_t e = roles_.edge_of[mids[mi]];
      const std::size_t a = col[lay_.j.edges[e].first], b = col[lay_.j.edges[e].second];
      const double p = (a == b) ? 1.0 / 3.0 : 0.5;
      for (std::size_t v = 0; v < 4; ++v) {
        if (v == a || v == b) continue;
        col[mids[mi]] = v;
        rec_mid(mi + 1, prob * p);
      }
    };

    for (std::size_t mask = 0; mask < pow4(roots.size()); ++mask) {
      std::size_t rest = mask;
      for (std::size_t t = 0; t < roots.size(); ++t) {
        col[roots[t]] = rest & 3;
        rest >>= 2;
      }
      rec_mid(0, w0);
    }
    cache_[sites] = out;
    return out;
  }

 private:
  ThirdKindLayout lay_;
  ThirdKindRoles roles_;
  mutable std::map<std::vector<std::size_t>, std::vector<double>> cache_;
};

/// The 90 surjective maps {5 edge-color labels} -> {0,1,2} with preimage
/// sizes (2,2,1), enumerated deterministically.
inline std::vector<std::array<std::uint8_t, 5>> mu2_label_maps() {
  std::vector<std::array<std::uint8_t, 5>> maps;
  for (std::uint8_t lone_color = 0; lone_color < 3; ++lone_color)
    for (std::size_t lone_label = 0; lone_label < 5; ++lone_label) {
      std::vector<std::uint8_t> rest;
      for (std::uint8_t l = 0; l < 5; ++l)
        if (l != lone_label) rest.push_back(l);
      const std::uint8_t ca = (lone_color == 0) ? 1 : 0;
      const std::uint8_t cb = (lone_color == 2) ? 1 : 2;
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t k = i + 1; k < 4; ++k) {
          std::array<std::uint8_t, 5> m{};
          m[lone_label] = lone_color;
          for (std::size_t t = 0; t < 4; ++t)
            m[rest[t]] = (t == i || t == k) ? ca : cb;
          maps.push_back(m);
        }
    }
  if (maps.size() != 90) throw std::logic_error("mu2_label_maps: expected 90 maps");
  return maps;
}

/// All 24 permutations of the 4 colors, for the final symmetrization of mu_II.
inline std::vector<std::array<std::uint8_t, 4>> color_permutations() {
  std::array<std::uint8_t, 4> p{0, 1, 2, 3};
  std::vector<std::array<std::uint8_t, 4>> perms;
  do {
    perms.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return perms;
}

/// mu_II of the third-kind construction: fix a legal 5-edge-coloring of J;
/// draw a label map m uniformly from the 90 maps above; color every mid with
/// m(label of its J-edge), every J-vertex with color 3, every optional
/// uniformly over the two colors of {0,1,2} its mid avoids; then symmetrize
/// over the 24 color permutations.
class ThirdKindMuII final : public MarginalSource {
 public:
  explicit ThirdKindMuII(ThirdKindLayout lay)
      : lay_(std::move(lay)),
        roles_(lay_),
        labels_(edge_coloring(lay_.j)),
        maps_(mu2_label_maps()),
        perms_(color_permutations()) {
    for (std::size_t l : labels_)
      if (l >= 5) throw std::logic_error("ThirdKindMuII: J needed more than 5 edge colors");
  }

  std::size_t sites() const override { return lay_.g.n; }

  std::vector<double> table(const std::vector<std::size_t>& sites) const override {
    require_index_set(sites, lay_.g.n, 6);
    if (auto it = cache_.find(sites); it != cache_.end()) return it->second;
    const std::size_t m = sites.size();
    std::vector<double> out(pow4(m), 0.0);
    const double w0 = 1.0 / (double(maps_.size()) * double(perms_.size()));
    for (const auto& lm : maps_)
      for (const auto& perm : perms_) {
        std::function<void(std::size_t, std::size_t, double)> rec =
            [&](std::size_t r, std::size_t pat, double p) {
              if (r == m) {
                out[pat] += p;
                return;
              }
              const std::size_t q = sites[r];
              if (roles_.kind[q] == 0) {
                rec(r + 1, pat * 4 + perm[3], p);
              } else if (roles_.kind[q] == 1) {
                rec(r + 1, pat * 4 + perm[lm[labels_[roles_.edge_of[q]]]], p);
              } else {
                const std::uint8_t mv = lm[labels_[roles_.edge_of[q]]];
                for (std::uint8_t v = 0; v < 3; ++v)
                  if (v != mv) rec(r + 1, pat * 4 + perm[v], p * 0.5);
              }
            };
        rec(0, 0, w0);
      }
    cache_[sites] = out;
    return out;
  }

  const std::vector<std::size_t>& labels() const { return labels_; }

 private:
  ThirdKindLayout lay_;
  ThirdKindRoles roles_;
  std::vector<std::size_t> labels_;
  std::vector<std::array<std::uint8_t, 5>> maps_;
  std::vector<std::array<std::uint8_t, 4>> perms_;
  mutable std::map<std::vector<std::size_t>, std::vector<double>> cache_;
};

/// Number of legal colorings of the third-kind graph (the support of mu_I),
/// or an over-threshold sentinel when J is too large to enumerate.
inline double third_kind_support_size(const ThirdKindLayout& lay) {
  const std::size_t nj = lay.j.n;
  if (nj > 9) return 1e18;  // certainly above any enumeration threshold
  std::size_t nops = 0;
  for (char f : lay.has_optional) nops += (f != 0);
  double total = 0.0;
  for (std::size_t mask = 0; mask < pow4(nj); ++mask) {
    std::size_t rest = mask;
    std::vector<std::size_t> col(nj);
    for (std::size_t t = 0; t < nj; ++t) {
      col[t] = rest & 3;
      rest >>= 2;
    }
    double prod = 1.0;
    for (const auto& [u, v] : lay.j.edges) prod *= (col[u] == col[v]) ? 3.0 : 2.0;
    total += prod;
  }
  return total * std::pow(3.0, double(nops));
}

/// Explicit mu_I by direct enumeration of the generating process.
inline SparseDistribution third_kind_mu1_explicit(const ThirdKindLayout& lay) {
  const std::size_t nj = lay.j.n, ne = lay.j.edges.size(), n = lay.g.n;
  SparseDistribution mu;
  mu.n = n;
  std::string a(n, '0');
  double w0 = 1.0;
  for (std::size_t t = 0; t < nj; ++t) w0 *= 0.25;

  std::function<void(std::size_t, double)> rec_edge = [&](std::size_t e, double w) {
    if (e == ne) {
      mu.weights[a] += w;
      return;
    }
    const char cu = a[lay.j.edges[e].first], cv = a[lay.j.edges[e].second];
    const double pm = (cu == cv) ? 1.0 / 3.0 : 0.5;
    for (char mv = '0'; mv <= '3'; ++mv) {
      if (mv == cu || mv == cv) continue;
      a[lay.mid[e]] = mv;
      if (lay.opt[e] == SIZE_MAX) {
        rec_edge(e + 1, w * pm);
      } else {
        for (char ov = '0'; ov <= '3'; ++ov) {
          if (ov == mv) continue;
          a[lay.opt[e]] = ov;
          rec_edge(e + 1, w * pm / 3.0);
        }
      }
    }
  };

  for (std::size_t mask = 0; mask < pow4(nj); ++mask) {
    std::size_t rest = mask;
    for (std::size_t t = 0; t < nj; ++t) {
      a[t] = char('0' + (rest & 3));
      rest >>= 2;
    }
    rec_edge(0, w0);
  }
  validate_distribution(mu);
  return mu;
}

/// Explicit mu_II by forward enumeration of (label map, optional choices,
/// color permutation).
inline SparseDistribution third_kind_mu2_explicit(const ThirdKindLayout& lay) {
  const auto labels = edge_coloring(lay.j);
  const auto maps = mu2_label_maps();
  const auto perms = color_permutations();
  std::vector<std::size_t> ops;
  for (std::size_t e = 0; e < lay.opt.size(); ++e)
    if (lay.opt[e] != SIZE_MAX) ops.push_back(e);
  if (ops.size() > 12)
    throw std::invalid_argument("third_kind_mu2_explicit: too many optional vertices");

  SparseDistribution mu;
  mu.n = lay.g.n;
  const double w = 1.0 / (double(maps.size()) * double(perms.size()) *
                          double(std::size_t(1) << ops.size()));
  std::string a(lay.g.n, '0');
  for (const auto& lm : maps) {
    std::vector<std::uint8_t> base(lay.g.n, 3);  // J-vertices: color 3
    for (std::size_t e = 0; e < lay.mid.size(); ++e) base[lay.mid[e]] = lm[labels[e]];
    for (std::size_t combo = 0; combo < (std::size_t(1) << ops.size()); ++combo) {
      for (std::size_t t = 0; t < ops.size(); ++t) {
        const std::size_t e = ops[t];
        const std::uint8_t mv = lm[labels[e]];
        // the two colors of {0,1,2} differing from the mid, picked by bit t
        std::uint8_t choice[2], c = 0;
        for (std::uint8_t v = 0; v < 3; ++v)
          if (v != mv) choice[c++] = v;
        base[lay.opt[e]] = choice[(combo >> t) & 1];
      }
      for (const auto& perm : perms) {
        for (std::size_t i = 0; i < lay.g.n; ++i) a[i] = char('0' + perm[base[i]]);
        mu.weights[a] += w;
      }
    }
  }
  validate_distribution(mu);
  return mu;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

/// Lambda-solution for the n-cycle (n >= 3).  Small cycles use the pinned
/// explicit mixtures; n >= 6 uses the shift-averaged parent process, with an
/// explicit copy of the distribution whenever the number of legal colorings
/// 3^n + 3(-1)^n stays at most 10^5 (n <= 10).  `average_all_shifts` switches
/// the averaging set from the construction's 2..n-1 to all n cyclic shifts.
inline LambdaSolution cycle_solution(std::size_t n, bool average_all_shifts = false) {
  if (n < 3) throw std::invalid_argument("cycle_solution: need n >= 3");
  LambdaSolution sol;
  sol.graph = cycle_graph(n);

  if (n == 3) {
    sol.explicit_dist = symmetrize_colors(point_mass("012"));
  } else if (n == 4) {
    const SparseDistribution a = symmetrize_colors(point_mass("0123"));
    const SparseDistribution b = symmetrize_colors(point_mass("0101"));
    sol.explicit_dist = mix({{0.75, &a}, {0.25, &b}});
  } else if (n == 5) {
    // For each of the five non-edges, pin that pair to a common color and
    // give the remaining three vertices the three remaining colors.
    std::vector<SparseDistribution> parts;
    for (std::size_t t = 0; t < 5; ++t) {
      std::string c(5, '0');
      c[t] = c[(t + 2) % 5] = '0';
      c[(t + 1) % 5] = '1';
      c[(t + 3) % 5] = '2';
      c[(t + 4) % 5] = '3';
      parts.push_back(symmetrize_colors(point_mass(c)));
    }
    std::vector<std::pair<double, const SparseDistribution*>> weighted;
    for (const auto& p : parts) weighted.push_back({0.2, &p});
    sol.explicit_dist = mix(weighted);
  }

  if (n <= 5) {
    sol.source = std::make_shared<ExplicitSource>(*sol.explicit_dist);
    detail::finalize_lambda(sol);
    return sol;
  }

  auto src = std::make_shared<detail::CycleSource>(n, average_all_shifts);
  sol.source = src;

  const double legal = std::pow(3.0, double(n)) + 3.0 * ((n % 2 == 0) ? 1.0 : -1.0);
  if (legal <= 1e5) {
    // Enumerate legal colorings and average the process weight over shifts.
    std::vector<std::size_t> shifts;
    for (std::size_t s = average_all_shifts ? 0 : 2; s < n; ++s) shifts.push_back(s);
    SparseDistribution mu;
    mu.n = n;
    std::string a(n, '0');
    std::string rotated(n, '0');
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == n) {
        if (a[n - 1] == a[0]) return;
        double w = 0.0;
        for (std::size_t s : shifts) {
          for (std::size_t jj = 0; jj < n; ++jj) rotated[jj] = a[(jj + s) % n];
          w += src->process().weight(rotated);
        }
        w /= double(shifts.size());
        if (w > 0.0) mu.weights[a] += w;
        return;
      }
      for (char v = '0'; v <= '3'; ++v) {
        if (i > 0 && v == a[i - 1]) continue;
        a[i] = v;
        rec(i + 1);
      }
    };
    rec(0);
    validate_distribution(mu);
    sol.explicit_dist = std::move(mu);
  }

  detail::finalize_lambda(sol);
  return sol;
}

/// Lambda-solution for the third-kind graph realized from J (max degree <=
/// 4) with the given per-edge optional flags: the mixture (1 - 1/20) mu_I +
/// (1/20) mu_II.  An explicit copy is kept when the legal-coloring count is
/// at most 10^5.
inline LambdaSolution third_kind_solution(const Graph& j,
                                          const std::vector<char>& optional_flags) {
  ThirdKindLayout lay = build_third_kind(j, optional_flags);
  constexpr double kEps = 1.0 / 20.0;

  LambdaSolution sol;
  sol.graph = lay.g;
  auto mu1 = std::make_shared<detail::ThirdKindMuI>(lay);
  auto mu2 = std::make_shared<detail::ThirdKindMuII>(lay);
  sol.source = std::make_shared<MixtureSource>(
      std::vector<std::pair<double, std::shared_ptr<const MarginalSource>>>{
          {1.0 - kEps, mu1}, {kEps, mu2}});

  if (detail::third_kind_support_size(lay) <= 1e5) {
    const SparseDistribution m1 = detail::third_kind_mu1_explicit(lay);
    const SparseDistribution m2 = detail::third_kind_mu2_explicit(lay);
    sol.explicit_dist = mix({{1.0 - kEps, &m1}, {kEps, &m2}});
  }

  detail::finalize_lambda(sol);
  return sol;
}

/// Lambda-solution for a single isolated vertex: the uniform distribution,
/// whose one-site marginal operator is (1/2) * identity.
inline LambdaSolution single_site_solution() {
  LambdaSolution sol;
  sol.graph = Graph{1, {}};
  sol.explicit_dist = uniform_distribution(1);
  sol.source = std::make_shared<ExplicitSource>(*sol.explicit_dist);
  detail::finalize_lambda(sol);
  return sol;
}

/// One factor of a product solution: a solution on local ids 0..m-1 placed
/// at the strictly increasing global sites.
struct ProductPart {
  std::vector<std::size_t> sites;
  LambdaSolution solution;
};

/// Product of lambda-solutions over disjoint vertex sets covering 0..n-1
/// (the connected components of a disconnected graph).  Cross-component pair
/// marginals are (1/4) * identity, i.e. tau = 1/4.
inline LambdaSolution product_solution(std::size_t n, const std::vector<ProductPart>& parts) {
  if (parts.empty()) throw std::invalid_argument("product_solution: no parts");

  LambdaSolution sol;
  sol.graph = Graph{n, {}};
  std::vector<ProductSource::Block> blocks;
  for (const auto& part : parts) {
    if (!part.solution.source)
      throw std::invalid_argument("product_solution: part without source");
    if (part.sites.size() != part.solution.graph.n)
      throw std::invalid_argument("product_solution: site/graph size mismatch");
    for (const auto& [u, v] : part.solution.graph.edges)
      sol.graph.add_edge(part.sites[u], part.sites[v]);
    blocks.push_back({part.sites, part.solution.source});
  }
  // ProductSource validates disjointness, coverage, and ordering.
  sol.source = std::make_shared<ProductSource>(n, std::move(blocks));

  bool all_explicit = true;
  double support = 1.0;
  for (const auto& part : parts) {
    if (!part.solution.explicit_dist) {
      all_explicit = false;
      break;
    }
    support *= double(part.solution.explicit_dist->weights.size());
  }
  if (all_explicit && support <= 1e5) {
    SparseDistribution mu;
    mu.n = n;
    std::string key(n, '0');
    std::function<void(std::size_t, double)> rec = [&](std::size_t pi, double w) {
      if (pi == parts.size()) {
        mu.weights[key] += w;
        return;
      }
      for (const auto& [k, pw] : parts[pi].solution.explicit_dist->weights) {
        for (std::size_t t = 0; t < k.size(); ++t) key[parts[pi].sites[t]] = k[t];
        rec(pi + 1, w * pw);
      }
    };
    rec(0, 1.0);
    validate_distribution(mu);
    sol.explicit_dist = std::move(mu);
  }

  detail::finalize_lambda(sol);
  return sol;
}

namespace detail {

/// Marginal source seen through a vertex relabeling: new id i plays the role
/// of inner id new_to_old[i].  Queries are forwarded with sites mapped and
/// re-sorted, and the table digits are permuted back to the caller's order.
class RelabeledSource final : public MarginalSource {
 public:
  RelabeledSource(std::shared_ptr<const MarginalSource> inner,
                  std::vector<std::size_t> new_to_old)
      : inner_(std::move(inner)), map_(std::move(new_to_old)) {
    if (!inner_ || inner_->sites() != map_.size())
      throw std::invalid_argument("RelabeledSource: size mismatch");
    std::vector<char> hit(map_.size(), 0);
    for (std::size_t o : map_) {
      if (o >= map_.size() || hit[o])
        throw std::invalid_argument("RelabeledSource: not a permutation");
      hit[o] = 1;
    }
  }

  std::size_t sites() const override { return map_.size(); }

  std::vector<double> table(const std::vector<std::size_t>& sites) const override {
    require_index_set(sites, map_.size());
    const std::size_t m = sites.size();
    std::vector<std::pair<std::size_t, std::size_t>> mapped(m);  // (inner site, rank)
    for (std::size_t r = 0; r < m; ++r) mapped[r] = {map_[sites[r]], r};
    std::sort(mapped.begin(), mapped.end());
    std::vector<std::size_t> query(m), pos(m);
    for (std::size_t t = 0; t < m; ++t) {
      query[t] = mapped[t].first;
      pos[mapped[t].second] = t;
    }
    const std::vector<double> sub = inner_->table(query);
    std::vector<double> out(sub.size(), 0.0);
    for (std::size_t p = 0; p < out.size(); ++p) {
      std::size_t q = 0;
      for (std::size_t r = 0; r < m; ++r) {
        const std::size_t digit = (p >> (2 * (m - 1 - r))) & 3;
        q += digit << (2 * (m - 1 - pos[r]));
      }
      out[p] = sub[q];
    }
    return out;
  }

 private:
  std::shared_ptr<const MarginalSource> inner_;
  std::vector<std::size_t> map_;
};

}  // namespace detail

/// The same lambda-solution with vertices renamed: new id i corresponds to
/// old id new_to_old[i] (a permutation).  Graph, source, and explicit
/// distribution are all relabeled; the certified numbers carry over.
inline LambdaSolution relabel_solution(const LambdaSolution& sol,
                                       const std::vector<std::size_t>& new_to_old) {
  if (!sol.source || new_to_old.size() != sol.graph.n)
    throw std::invalid_argument("relabel_solution: size mismatch");
  std::vector<std::size_t> old_to_new(new_to_old.size());
  for (std::size_t i = 0; i < new_to_old.size(); ++i) old_to_new[new_to_old[i]] = i;

  LambdaSolution out;
  out.graph = Graph{sol.graph.n, {}};
  for (const auto& [u, v] : sol.graph.edges) out.graph.add_edge(old_to_new[u], old_to_new[v]);
  out.source = std::make_shared<detail::RelabeledSource>(sol.source, new_to_old);
  if (sol.explicit_dist) {
    SparseDistribution mu;
    mu.n = sol.explicit_dist->n;
    for (const auto& [key, w] : sol.explicit_dist->weights) {
      std::string nk(key.size(), '0');
      for (std::size_t i = 0; i < key.size(); ++i) nk[i] = key[new_to_old[i]];
      mu.weights[nk] += w;
    }
    out.explicit_dist = std::move(mu);
  }
  out.lambda_achieved = sol.lambda_achieved;
  out.tau_min = sol.tau_min;
  out.tau_max = sol.tau_max;
  return out;
}

// ---------------------------------------------------------------------------
// Verification and marginal access
// ---------------------------------------------------------------------------

/// Result of verify_lambda_solution.  On failure, `failure` names the first
/// violated property and `worst_pair` the offending (or minimizing) pair.
struct LambdaVerification {
  bool pass = false;
  std::string failure;  // "", "size-mismatch", "bad-distribution",
                        // "illegal-support", "not-color-invariant", "not-qq", "lambda"
  std::pair<std::size_t, std::size_t> worst_pair{0, 0};
  double worst_min_eig = 0.0;  // min over non-edge pairs of the marginal's min eig
  double tau_min = 1.0;
  double tau_max = 0.0;
};

/// Check that sol is a lambda-solution of g at level `lambda`: support
/// legality (exhaustive when explicit, exact per-edge collision mass via the
/// oracle otherwise), color invariance, 2-local quasi-quantum validity, and
/// min eigenvalue >= lambda on every non-edge pair marginal.  Failures are
/// reported, never thrown.
inline LambdaVerification verify_lambda_solution(const LambdaSolution& sol, const Graph& g,
                                                 double lambda,
                                                 const SicBasis& basis = build_sic_basis()) {
  LambdaVerification out;
  auto fail = [&](const std::string& why, std::size_t i, std::size_t j) {
    if (out.failure.empty()) {
      out.failure = why;
      out.worst_pair = {i, j};
    }
  };

  if (!sol.source || sol.source->sites() != g.n) {
    out.failure = "size-mismatch";
    return out;
  }

  if (sol.explicit_dist) {
    const SparseDistribution& mu = *sol.explicit_dist;
    if (mu.n != g.n) {
      out.failure = "size-mismatch";
      return out;
    }
    try {
      validate_distribution(mu);
    } catch (const std::exception&) {
      out.failure = "bad-distribution";
      return out;
    }
    for (const auto& [key, w] : mu.weights) {
      (void)w;
      for (const auto& [u, v] : g.edges)
        if (key[u] == key[v]) fail("illegal-support", u, v);
    }
    // Color invariance: each key's weight equals every color-permuted
    // sibling's weight.
    for (const auto& perm : detail::color_permutations()) {
      for (const auto& [key, w] : mu.weights) {
        std::string pk(key);
        for (std::size_t i = 0; i < pk.size(); ++i) pk[i] = char('0' + perm[key[i] - '0']);
        const auto it = mu.weights.find(pk);
        const double pw = (it == mu.weights.end()) ? 0.0 : it->second;
        if (std::abs(pw - w) > 1e-12) fail("not-color-invariant", 0, 0);
      }
      if (!out.failure.empty()) break;
    }
  }

  double lam_seen = 0.25;
  bool any_nonedge = false;
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = i + 1; j < g.n; ++j) {
      const std::vector<double> t = sol.source->table({i, j});
      // Pair-level color invariance: all diagonal entries agree and all
      // off-diagonal entries agree.
      double dmin = 1.0, dmax = 0.0, omin = 1.0, omax = 0.0;
      for (std::size_t p = 0; p < 16; ++p) {
        const bool diag = (p / 4 == p % 4);
        (diag ? dmin : omin) = std::min(diag ? dmin : omin, t[p]);
        (diag ? dmax : omax) = std::max(diag ? dmax : omax, t[p]);
      }
      if (dmax - dmin > 1e-12 || omax - omin > 1e-12) fail("not-color-invariant", i, j);

      const double tau = detail::table_collision(t);
      const CMatrix x = dual_operator_of_table(t, 2, basis);
      const double me = min_eigenvalue(x);
      if (me < -1e-9) fail("not-qq", i, j);
      if (g.has_edge(i, j)) {
        if (tau > 1e-12) fail("illegal-support", i, j);
      } else {
        out.tau_min = std::min(out.tau_min, tau);
        out.tau_max = std::max(out.tau_max, tau);
        if (!any_nonedge || me < lam_seen) {
          out.worst_min_eig = me;
          if (out.failure.empty()) out.worst_pair = {i, j};
          lam_seen = std::min(lam_seen, me);
        }
        any_nonedge = true;
      }
    }

  if (any_nonedge) {
    out.worst_min_eig = lam_seen;
    if (lam_seen < lambda - 1e-12) fail("lambda", out.worst_pair.first, out.worst_pair.second);
  } else {
    out.worst_min_eig = 0.25;  // vacuous: no non-edges
    if (lambda > 0.25 + 1e-12) fail("lambda", 0, 0);
  }

  out.pass = out.failure.empty();
  return out;
}

/// A 2- or 3-site marginal of a lambda-solution: the outcome table and the
/// corresponding dual-basis operator X_I.
struct LocalMarginal {
  std::vector<double> table;
  CMatrix op;
};

inline LocalMarginal local_marginal(const LambdaSolution& sol,
                                    const std::vector<std::size_t>& sites,
                                    const SicBasis& basis = build_sic_basis()) {
  if (sites.size() != 2 && sites.size() != 3)
    throw std::invalid_argument("local_marginal: need 2 or 3 sites");
  if (!sol.source) throw std::invalid_argument("local_marginal: no source");
  require_index_set(sites, sol.source->sites());
  LocalMarginal out;
  out.table = sol.source->table(sites);
  out.op = dual_operator_of_table(out.table, sites.size(), basis);
  return out;
}

}  // namespace quasiq
