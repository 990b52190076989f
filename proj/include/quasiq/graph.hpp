#pragma once

// Simple undirected graphs, constraint-tagged graphs, brute-force coloring
// oracles, random regular expanders, and the graph text format.

#include <algorithm>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quasiq/assignment.hpp"
#include "quasiq/matrix.hpp"
#include "quasiq/rng.hpp"

namespace quasiq {

using Edge = std::pair<std::size_t, std::size_t>;  // normalized u < v

/// Simple undirected graph; edges kept sorted and duplicate-free so that all
/// downstream constructions are deterministic.
struct Graph {
  std::size_t n = 0;
  std::vector<Edge> edges;

  void add_edge(std::size_t u, std::size_t v) {
    if (u == v) throw std::invalid_argument("Graph: self-loop");
    if (u >= n || v >= n) throw std::invalid_argument("Graph: vertex out of range");
    if (u > v) std::swap(u, v);
    const Edge e{u, v};
    const auto it = std::lower_bound(edges.begin(), edges.end(), e);
    if (it != edges.end() && *it == e) throw std::invalid_argument("Graph: duplicate edge");
    edges.insert(it, e);
  }

  bool has_edge(std::size_t u, std::size_t v) const {
    if (u > v) std::swap(u, v);
    return std::binary_search(edges.begin(), edges.end(), Edge{u, v});
  }
};

inline std::vector<std::size_t> degrees(const Graph& g) {
  std::vector<std::size_t> d(g.n, 0);
  for (const auto& [u, v] : g.edges) {
    ++d[u];
    ++d[v];
  }
  return d;
}

inline std::vector<std::vector<std::size_t>> adjacency_lists(const Graph& g) {
  std::vector<std::vector<std::size_t>> adj(g.n);
  for (const auto& [u, v] : g.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return adj;
}

/// Connected components as sorted vertex lists (sorted by smallest member).
inline std::vector<std::vector<std::size_t>> connected_components(const Graph& g) {
  const auto adj = adjacency_lists(g);
  std::vector<char> seen(g.n, 0);
  std::vector<std::vector<std::size_t>> comps;
  for (std::size_t s = 0; s < g.n; ++s) {
    if (seen[s]) continue;
    std::vector<std::size_t> comp, stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      comp.push_back(u);
      for (std::size_t v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

inline bool is_connected(const Graph& g) {
  return g.n <= 1 || connected_components(g).size() == 1;
}

/// Subgraph induced on `verts` (sorted); vertex i of the result corresponds to
/// verts[i].
inline Graph induced_subgraph(const Graph& g, const std::vector<std::size_t>& verts) {
  std::vector<std::size_t> local(g.n, SIZE_MAX);
  for (std::size_t i = 0; i < verts.size(); ++i) local[verts[i]] = i;
  Graph sub;
  sub.n = verts.size();
  for (const auto& [u, v] : g.edges)
    if (local[u] != SIZE_MAX && local[v] != SIZE_MAX) sub.add_edge(local[u], local[v]);
  return sub;
}

enum class EdgeTag { kInequality, kEquality };

/// Graph whose edges carry a constraint kind: "endpoints differ" (ordinary
/// coloring edge) or "endpoints equal" (to be compiled away by a gadget).
struct ConstraintGraph {
  Graph g;
  std::vector<EdgeTag> tags;  // aligned with g.edges

  void add_edge(std::size_t u, std::size_t v, EdgeTag tag) {
    if (u > v) std::swap(u, v);
    g.add_edge(u, v);
    const auto it = std::lower_bound(g.edges.begin(), g.edges.end(), Edge{u, v});
    tags.insert(tags.begin() + (it - g.edges.begin()), tag);
  }
};

// ---------------------------------------------------------------------------
// Coloring oracles
// ---------------------------------------------------------------------------

/// Number of monochromatic edges of `coloring` (symbols '0'..'0'+colors-1).
inline std::size_t violations(const Graph& g, const Assignment& coloring,
                              std::size_t colors) {
  if (coloring.size() != g.n) throw std::invalid_argument("violations: length mismatch");
  for (char c : coloring)
    if (c < '0' || c >= char('0' + colors))
      throw std::invalid_argument("violations: symbol out of range");
  std::size_t count = 0;
  for (const auto& [u, v] : g.edges)
    if (coloring[u] == coloring[v]) ++count;
  return count;
}

inline bool is_proper_coloring(const Graph& g, const Assignment& coloring,
                               std::size_t colors) {
  return violations(g, coloring, colors) == 0;
}

/// Exact minimum-violation coloring by enumeration; ties resolved toward the
/// lexicographically first coloring.  Guard: colors^n <= 1e7.
inline std::pair<Assignment, std::size_t> best_coloring(const Graph& g,
                                                        std::size_t colors) {
  double total = 1.0;
  for (std::size_t i = 0; i < g.n; ++i) total *= double(colors);
  if (total > 1e7) throw std::invalid_argument("best_coloring: colors^n exceeds 1e7 guard");
  Assignment cur(g.n, '0');
  Assignment best = cur;
  std::size_t best_viol = violations(g, cur, colors);
  while (best_viol > 0) {
    // Odometer increment.
    std::size_t pos = g.n;
    while (pos > 0) {
      --pos;
      if (cur[pos] < char('0' + colors - 1)) {
        ++cur[pos];
        std::fill(cur.begin() + pos + 1, cur.end(), '0');
        break;
      }
      if (pos == 0) return {best, best_viol};
    }
    if (g.n == 0) break;
    const std::size_t v = violations(g, cur, colors);
    if (v < best_viol) {
      best_viol = v;
      best = cur;
    }
  }
  return {best, best_viol};
}

// ---------------------------------------------------------------------------
// Random regular expanders
// ---------------------------------------------------------------------------

namespace detail {

/// Configuration-model sample with the given degree sequence; rejects
/// self-loops and multi-edges.  Returns nullopt on a rejected sample.
inline std::optional<Graph> configuration_sample(const std::vector<std::size_t>& degs,
                                                 Rng& rng) {
  std::vector<std::size_t> stubs;
  for (std::size_t v = 0; v < degs.size(); ++v)
    for (std::size_t i = 0; i < degs[v]; ++i) stubs.push_back(v);
  rng.shuffle(stubs);
  Graph g;
  g.n = degs.size();
  std::set<Edge> seen;
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    std::size_t u = stubs[i], v = stubs[i + 1];
    if (u == v) return std::nullopt;
    if (u > v) std::swap(u, v);
    if (!seen.insert({u, v}).second) return std::nullopt;
  }
  for (const auto& e : seen) g.add_edge(e.first, e.second);
  return g;
}

/// Second-largest adjacency eigenvalue (screening statistic for expanders).
inline double second_adjacency_eigenvalue(const Graph& g) {
  const std::size_t n = g.n;
  std::vector<double> a(n * n, 0.0);
  for (const auto& [u, v] : g.edges) {
    a[u * n + v] = 1.0;
    a[v * n + u] = 1.0;
  }
  const auto w = symmetric_eigenvalues(a, n);
  return n >= 2 ? w[n - 2] : -2.0;
}

/// Connected graph with the given degree sequence whose second adjacency
/// eigenvalue is <= lambda2_max; up to `retries` configuration samples.
inline Graph screened_random_graph(const std::vector<std::size_t>& degs,
                                   std::uint64_t seed, double lambda2_max,
                                   int retries = 100) {
  std::size_t total = 0;
  for (std::size_t d : degs) total += d;
  if (total % 2 != 0)
    throw std::invalid_argument("screened_random_graph: odd degree sum");
  for (int attempt = 0; attempt < retries; ++attempt) {
    Rng rng(splitmix64(seed + 0x9e3779b97f4a7c15ull * std::uint64_t(attempt + 1)));
    auto g = configuration_sample(degs, rng);
    if (!g || !is_connected(*g)) continue;
    if (second_adjacency_eigenvalue(*g) > lambda2_max) continue;
    return *g;
  }
  throw std::runtime_error("screened_random_graph: no admissible sample in retries");
}

}  // namespace detail

/// Connected random `degree`-regular graph on m vertices with second
/// adjacency eigenvalue <= 2.9 (for degree 3); deterministic per seed.
inline Graph random_regular_expander(std::size_t m, std::size_t degree,
                                     std::uint64_t seed) {
  if (m < 4) throw std::invalid_argument("random_regular_expander: m >= 4 required");
  if ((m * degree) % 2 != 0)
    throw std::invalid_argument("random_regular_expander: m*degree odd");
  return detail::screened_random_graph(std::vector<std::size_t>(m, degree), seed, 2.9);
}

// ---------------------------------------------------------------------------
// Text format: "p <n> <m>" header then one "u v" line per edge (0-based).
// ---------------------------------------------------------------------------

inline void write_graph(std::ostream& os, const Graph& g) {
  os << "p " << g.n << " " << g.edges.size() << "\n";
  for (const auto& [u, v] : g.edges) os << u << " " << v << "\n";
}

inline Graph read_graph(std::istream& is) {
  std::string tag;
  std::size_t n = 0, m = 0;
  if (!(is >> tag) || tag != "p" || !(is >> n >> m))
    throw std::runtime_error("read_graph: bad header, expected 'p <n> <m>'");
  Graph g;
  g.n = n;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t u, v;
    if (!(is >> u >> v)) throw std::runtime_error("read_graph: truncated edge list");
    g.add_edge(u, v);  // validates range / loops / duplicates
  }
  std::string rest;
  if (is >> rest) throw std::runtime_error("read_graph: trailing garbage");
  return g;
}

inline std::string graph_to_string(const Graph& g) {
  std::ostringstream os;
  write_graph(os, g);
  return os.str();
}

/// Convenience builders used across tests and the pipeline.
inline Graph cycle_graph(std::size_t n) {
  Graph g;
  g.n = n;
  if (n == 2) {
    g.add_edge(0, 1);
    return g;
  }
  for (std::size_t i = 0; i < n; ++i) g.add_edge(i, (i + 1) % n);
  return g;
}

inline Graph complete_graph(std::size_t n) {
  Graph g;
  g.n = n;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) g.add_edge(i, j);
  return g;
}

inline Graph path_graph(std::size_t n) {
  Graph g;
  g.n = n;
  for (std::size_t i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1);
  return g;
}

}  // namespace quasiq
