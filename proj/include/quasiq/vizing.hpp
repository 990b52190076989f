#pragma once

// Edge coloring with maxdegree+1 colors by the Misra–Gries fan-rotation
// procedure.  Used to 5-edge-color the underlying graph J of a third-kind
// component; any legal coloring works downstream, so the result is verified
// before it is returned.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "quasiq/graph.hpp"

namespace quasiq {

/// Legal edge coloring of g with at most maxdeg(g)+1 colors; entry i colors
/// g.edges[i].  Deterministic (no randomness involved).
inline std::vector<std::size_t> edge_coloring(const Graph& g) {
  const std::size_t n = g.n;
  std::size_t maxdeg = 0;
  for (std::size_t d : degrees(g)) maxdeg = std::max(maxdeg, d);
  const std::size_t colors = maxdeg + 1;

  // color[u][v] = color of edge (u,v) or SIZE_MAX.
  std::vector<std::vector<std::size_t>> color(n, std::vector<std::size_t>(n, SIZE_MAX));
  const auto adj = adjacency_lists(g);

  auto is_free = [&](std::size_t v, std::size_t c) {
    for (std::size_t w : adj[v])
      if (color[v][w] == c) return false;
    return true;
  };
  auto free_color = [&](std::size_t v) {
    for (std::size_t c = 0; c < colors; ++c)
      if (is_free(v, c)) return c;
    throw std::logic_error("edge_coloring: no free color");  // degree <= maxdeg
  };
  auto set_color = [&](std::size_t u, std::size_t v, std::size_t c) {
    color[u][v] = c;
    color[v][u] = c;
  };

  for (const auto& [eu, ev] : g.edges) {
    const std::size_t u = eu, v = ev;
    // Maximal fan of u starting at v: distinct neighbors f_0 = v, f_1, ...
    // where (u, f_{i+1}) is colored with a color free at f_i.
    std::vector<std::size_t> fan{v};
    std::vector<char> in_fan(n, 0);
    in_fan[v] = 1;
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::size_t w : adj[u]) {
        if (in_fan[w] || color[u][w] == SIZE_MAX) continue;
        if (is_free(fan.back(), color[u][w])) {
          fan.push_back(w);
          in_fan[w] = 1;
          grew = true;
          break;
        }
      }
    }

    const std::size_t c = free_color(u);
    const std::size_t d = free_color(fan.back());

    // Invert the maximal cd-path starting at u (edges alternating d, c).
    if (c != d) {
      std::size_t prev = u;
      std::size_t want = d;
      std::vector<std::pair<std::size_t, std::size_t>> path;
      while (true) {
        std::size_t next = SIZE_MAX;
        for (std::size_t w : adj[prev])
          if (color[prev][w] == want && (path.empty() || w != path.back().first)) {
            next = w;
            break;
          }
        if (next == SIZE_MAX) break;
        path.push_back({prev, next});
        prev = next;
        want = (want == d) ? c : d;
      }
      for (const auto& [a, b] : path)
        set_color(a, b, color[a][b] == d ? c : d);
    }

    // Find w in the fan with d free such that the prefix is still a fan.
    std::size_t wi = SIZE_MAX;
    for (std::size_t i = 0; i < fan.size(); ++i) {
      if (!is_free(fan[i], d)) continue;
      bool prefix_ok = true;
      for (std::size_t j = 1; j <= i; ++j)
        if (color[u][fan[j]] == SIZE_MAX || !is_free(fan[j - 1], color[u][fan[j]])) {
          prefix_ok = false;
          break;
        }
      if (prefix_ok) {
        wi = i;
        break;
      }
    }
    if (wi == SIZE_MAX) throw std::logic_error("edge_coloring: fan rotation failed");

    // Rotate the fan prefix and color (u, w) with d.
    for (std::size_t i = 0; i < wi; ++i) set_color(u, fan[i], color[u][fan[i + 1]]);
    set_color(u, fan[wi], d);
  }

  // Verify before returning (the procedure is fiddly; fail loudly, never
  // hand back an illegal coloring).
  std::vector<std::size_t> out;
  out.reserve(g.edges.size());
  for (const auto& [a, b] : g.edges) {
    if (color[a][b] == SIZE_MAX || color[a][b] >= colors)
      throw std::logic_error("edge_coloring: uncolored or out-of-range edge");
    out.push_back(color[a][b]);
  }
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<char> seen(colors, 0);
    for (std::size_t w : adj[v]) {
      if (seen[color[v][w]]) throw std::logic_error("edge_coloring: adjacent collision");
      seen[color[v][w]] = 1;
    }
  }
  return out;
}

}  // namespace quasiq
