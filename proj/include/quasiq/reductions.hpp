#pragma once
// Gap-preserving reduction chain from 3-coloring instances to 4-coloring
// instances that split into three "lambda-solvable" edge sets.
//
// The chain has two halves:
//
//   1. Degree reduction for 3-coloring: vertices of degree > 4 become clouds
//      on degree-3 expanders whose edges are *equality* constraints; those
//      constraints are compiled away with a diamond gadget (K4 minus an
//      edge), and any residual degree-5..7 vertices are split with a "book"
//      gadget until the maximum degree is 4.
//
//   2. The apex/cloud/gadget construction: add an apex vertex adjacent to
//      everything (turning 3-colorability into 4-colorability), replace the
//      apex by a cloud W on an equality expander, and compile the equality
//      edges with a K5-minus-an-edge gadget (which forces equality under
//      4 colors).  The resulting graph decomposes into three edge sets whose
//      connected components are isolated vertices, cycles, or graphs of the
//      third kind - exactly the shapes with known lambda-solutions.
//
// decompose3 performs that split and attaches a certified LambdaSolution to
// each part; a structure classifier machine-checks every component before
// anything is handed back.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "quasiq/graph.hpp"
#include "quasiq/lambda.hpp"
#include "quasiq/rng.hpp"

namespace quasiq {

// ---------------------------------------------------------------------------
// Gadget builders (exposed so tests can enumerate their coloring spaces)
// ---------------------------------------------------------------------------

/// Diamond (K4 minus an edge) between existing vertices i and j: appends the
/// two mid vertices and five edges.  In every proper 3-coloring the mids take
/// two distinct colors and i, j are both forced to the remaining one, so
/// c(i) = c(j); under 4 colors the tips are NOT forced equal.
inline void append_diamond(Graph& g, std::size_t i, std::size_t j) {
  const std::size_t m1 = g.n, m2 = g.n + 1;
  g.n += 2;
  g.add_edge(m1, m2);
  g.add_edge(i, m1);
  g.add_edge(i, m2);
  g.add_edge(j, m1);
  g.add_edge(j, m2);
}

/// Book gadget B3 over existing "page" vertices x1, x2, x3: appends two
/// adjacent anchor vertices, each joined to all three pages.  Every proper
/// 3-coloring gives the anchors two distinct colors and forces all pages to
/// the third one, so c(x1) = c(x2) = c(x3).  Each page gains degree 2.
inline void append_book3(Graph& g, std::size_t x1, std::size_t x2, std::size_t x3) {
  const std::size_t p = g.n, q = g.n + 1;
  g.n += 2;
  g.add_edge(p, q);
  for (std::size_t x : {x1, x2, x3}) {
    g.add_edge(x, p);
    g.add_edge(x, q);
  }
}

/// K5-minus-an-edge between existing vertices i and j: appends a triangle
/// t1,t2,t3 fully joined to both i and j (9 edges, the pair (i,j) itself is
/// NOT an edge).  In every proper 4-coloring the triangle uses three
/// distinct colors and i, j are both forced to the fourth, so c(i) = c(j).
inline std::array<std::size_t, 3> append_k5_gadget(Graph& g, std::size_t i,
                                                   std::size_t j) {
  const std::array<std::size_t, 3> t{g.n, g.n + 1, g.n + 2};
  g.n += 3;
  g.add_edge(t[0], t[1]);
  g.add_edge(t[1], t[2]);
  g.add_edge(t[0], t[2]);
  for (std::size_t k = 0; k < 3; ++k) {
    g.add_edge(i, t[k]);
    g.add_edge(j, t[k]);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Coloring lifts
//
// Every reduction stage can report how a proper coloring of its input extends
// to a proper coloring of its output: each new vertex either copies an input
// vertex, takes a fixed color, or takes the smallest color not used by some
// already-lifted vertices.  Chaining the stage lifts turns a 3-coloring of
// the original instance into a certified 4-coloring witness of the final one.
// ---------------------------------------------------------------------------

/// One vertex rule of a stage lift.  Exactly one of the three modes applies:
/// copy_of (an id of the stage INPUT), fixed, or avoid (ids of the stage
/// OUTPUT that earlier ops have already colored).
struct LiftOp {
  std::size_t vertex = 0;
  std::size_t copy_of = SIZE_MAX;
  int fixed = -1;
  std::vector<std::size_t> avoid;
};

/// A full stage lift: output size plus one op per output vertex, in
/// application order.
struct LiftStage {
  std::size_t n_new = 0;
  std::vector<LiftOp> ops;
};

/// Extend a coloring across one stage.  Throws if the ops leave a vertex
/// uncolored or an avoid list blocks all four colors.
inline Assignment lift_coloring(const Assignment& prev, const LiftStage& stage) {
  Assignment out(stage.n_new, '?');
  for (const auto& op : stage.ops) {
    char c = 0;
    if (op.copy_of != SIZE_MAX) {
      c = prev.at(op.copy_of);
    } else if (op.fixed >= 0) {
      c = char('0' + op.fixed);
    } else {
      bool taken[4] = {false, false, false, false};
      for (std::size_t w : op.avoid) {
        const char cw = out.at(w);
        if (cw < '0' || cw > '3')
          throw std::logic_error("lift_coloring: avoid vertex not yet colored");
        taken[cw - '0'] = true;
      }
      int pick = 0;
      while (pick < 4 && taken[pick]) ++pick;
      if (pick == 4) throw std::logic_error("lift_coloring: no free color");
      c = char('0' + pick);
    }
    out.at(op.vertex) = c;
  }
  for (char c : out)
    if (c == '?') throw std::logic_error("lift_coloring: uncolored vertex");
  return out;
}

/// Chain stage lifts in order.
inline Assignment apply_lifts(Assignment c, const std::vector<LiftStage>& stages) {
  for (const auto& st : stages) c = lift_coloring(c, st);
  return c;
}

namespace detail {

/// Equality backbone for a cloud of m vertices: a complete graph for m <= 4
/// (K4 is the unique 3-regular choice), a screened random 3-regular expander
/// for even m >= 6, and a near-regular (3,...,3,2) screened expander for odd
/// m >= 5 where 3-regularity is impossible by parity.
inline Graph cloud_expander(std::size_t m, std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("cloud_expander: empty cloud");
  if (m <= 4) return complete_graph(m);
  if (m % 2 == 0) return random_regular_expander(m, 3, seed);
  std::vector<std::size_t> degs(m, 3);
  degs.back() = 2;
  return detail::screened_random_graph(degs, seed, 2.9);
}

/// For each vertex, the indices of its incident edges in g.edges order.
inline std::vector<std::vector<std::size_t>> incidence_slots(const Graph& g) {
  std::vector<std::vector<std::size_t>> inc(g.n);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    inc[g.edges[e].first].push_back(e);
    inc[g.edges[e].second].push_back(e);
  }
  return inc;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Degree reduction for 3-coloring (clouds + diamond + book)
// ---------------------------------------------------------------------------

/// Replace every vertex of degree D > 4 by a cloud of D vertices on a
/// degree-<=3 expander whose edges carry equality tags; the k-th incident
/// edge of the old vertex reattaches to the k-th cloud vertex.  Ordinary
/// edges keep inequality tags.  Every vertex of the result has degree <= 4.
/// The optional lift copies each cloud vertex from its original.
inline ConstraintGraph cloud_reduce(const Graph& g, std::uint64_t seed,
                                    LiftStage* lift = nullptr) {
  const auto deg = degrees(g);
  const auto inc = detail::incidence_slots(g);

  // New ids: small vertices first (in original order), then clouds.
  std::vector<std::size_t> base(g.n, SIZE_MAX);  // small -> new id, big -> cloud start
  std::vector<char> big(g.n, 0);
  std::size_t next = 0;
  for (std::size_t v = 0; v < g.n; ++v)
    if (deg[v] <= 4) base[v] = next++;
  std::vector<std::pair<std::size_t, std::size_t>> clouds;  // (vertex, start)
  for (std::size_t v = 0; v < g.n; ++v)
    if (deg[v] > 4) {
      big[v] = 1;
      base[v] = next;
      clouds.push_back({v, next});
      next += deg[v];
    }

  ConstraintGraph out;
  out.g.n = next;
  // Endpoint of edge e at old vertex v, honoring the slot assignment.
  const auto port = [&](std::size_t v, std::size_t e) {
    if (!big[v]) return base[v];
    const auto& slots = inc[v];
    const std::size_t k = std::lower_bound(slots.begin(), slots.end(), e) - slots.begin();
    return base[v] + k;
  };
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    out.add_edge(port(g.edges[e].first, e), port(g.edges[e].second, e),
                 EdgeTag::kInequality);
  for (std::size_t c = 0; c < clouds.size(); ++c) {
    const auto [v, start] = clouds[c];
    const Graph ex = detail::cloud_expander(deg[v], seed + 0x51ull * (c + 1));
    for (const auto& [a, b] : ex.edges)
      out.add_edge(start + a, start + b, EdgeTag::kEquality);
  }
  if (lift) {
    lift->n_new = out.g.n;
    lift->ops.clear();
    for (std::size_t v = 0; v < g.n; ++v) {
      const std::size_t copies = big[v] ? deg[v] : 1;
      for (std::size_t k = 0; k < copies; ++k)
        lift->ops.push_back({base[v] + k, v, -1, {}});
    }
  }
  return out;
}

/// Compile every equality edge into a diamond (tips forced equal under 3
/// colors); inequality edges pass through.  No equality edges -> the plain
/// graph unchanged.  The lift colors each diamond's mids with the two colors
/// the (equal) tips do not use.
inline Graph equality_gadget_3color(const ConstraintGraph& cg,
                                    LiftStage* lift = nullptr) {
  Graph out;
  out.n = cg.g.n;
  std::vector<Edge> eq;
  for (std::size_t e = 0; e < cg.g.edges.size(); ++e) {
    if (cg.tags[e] == EdgeTag::kEquality)
      eq.push_back(cg.g.edges[e]);
    else
      out.add_edge(cg.g.edges[e].first, cg.g.edges[e].second);
  }
  if (lift) {
    lift->ops.clear();
    for (std::size_t v = 0; v < cg.g.n; ++v) lift->ops.push_back({v, v, -1, {}});
  }
  for (const auto& [i, j] : eq) {
    const std::size_t m1 = out.n;
    append_diamond(out, i, j);
    if (lift) {
      lift->ops.push_back({m1, SIZE_MAX, -1, {i}});
      lift->ops.push_back({m1 + 1, SIZE_MAX, -1, {i, m1}});
    }
  }
  if (lift) lift->n_new = out.n;
  return out;
}

/// Split every vertex of degree D > 4 into k = ceil(D/2) copies carrying at
/// most two external edges each, forced to share a color by a chain of book
/// gadgets (k = 3 needs one book; each further book shares one connector
/// copy with its predecessor).  All new vertices have degree <= 4, so the
/// result is 3-colorable iff the input is, with colorings in natural
/// correspondence.  The lift copies every copy/connector from its original
/// and colors each book's anchors with the two colors the pages avoid.
inline Graph garey_reduce4(const Graph& g, LiftStage* lift = nullptr) {
  const auto deg = degrees(g);
  const auto inc = detail::incidence_slots(g);

  std::vector<std::size_t> base(g.n, SIZE_MAX);
  std::vector<char> big(g.n, 0);
  std::size_t next = 0;
  for (std::size_t v = 0; v < g.n; ++v)
    if (deg[v] <= 4) base[v] = next++;
  std::vector<std::pair<std::size_t, std::size_t>> splits;  // (vertex, copy start)
  for (std::size_t v = 0; v < g.n; ++v)
    if (deg[v] > 4) {
      big[v] = 1;
      base[v] = next;
      splits.push_back({v, next});
      next += (deg[v] + 1) / 2;
    }

  Graph out;
  out.n = next;
  const auto port = [&](std::size_t v, std::size_t e) {
    if (!big[v]) return base[v];
    const auto& slots = inc[v];
    const std::size_t k = std::lower_bound(slots.begin(), slots.end(), e) - slots.begin();
    return base[v] + k / 2;  // two external edges per copy
  };
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    out.add_edge(port(g.edges[e].first, e), port(g.edges[e].second, e));

  if (lift) {
    lift->ops.clear();
    for (std::size_t v = 0; v < g.n; ++v) {
      const std::size_t copies = big[v] ? (deg[v] + 1) / 2 : 1;
      for (std::size_t t = 0; t < copies; ++t)
        lift->ops.push_back({base[v] + t, v, -1, {}});
    }
  }
  const auto lift_book = [&](std::size_t s1, std::size_t s2, std::size_t s3) {
    if (!lift) return;
    const std::size_t p = out.n, q = out.n + 1;
    lift->ops.push_back({p, SIZE_MAX, -1, {s1}});
    lift->ops.push_back({q, SIZE_MAX, -1, {s1, p}});
    (void)s2;
    (void)s3;
  };
  for (const auto& [v, start] : splits) {
    const std::size_t k = (deg[v] + 1) / 2;  // number of copies, k >= 3
    // Book chain: (x1,x2,c1), (c1,x3,c2), ..., (c_{g-1},x_{k-1},x_k) with
    // g = k - 2 books; connectors are fresh vertices with no external edges.
    std::vector<std::size_t> copies(k);
    for (std::size_t t = 0; t < k; ++t) copies[t] = start + t;
    const std::size_t books = k - 2;
    if (books == 1) {
      lift_book(copies[0], copies[1], copies[2]);
      append_book3(out, copies[0], copies[1], copies[2]);
    } else {
      std::vector<std::size_t> conn(books - 1);
      for (auto& c : conn) {
        c = out.n;
        out.n += 1;
        if (lift) lift->ops.push_back({c, v, -1, {}});
      }
      std::size_t xi = 0;  // next external-carrying copy to weave in
      for (std::size_t b = 0; b < books; ++b) {
        const std::size_t s1 = (b == 0) ? copies[xi++] : conn[b - 1];
        const std::size_t s2 = copies[xi++];
        const std::size_t s3 = (b + 1 == books) ? copies[xi++] : conn[b];
        lift_book(s1, s2, s3);
        append_book3(out, s1, s2, s3);
      }
    }
  }
  if (lift) lift->n_new = out.n;
  return out;
}

/// Stage selector for the degree-reduction half of the chain: target 7 stops
/// after clouds + diamond compilation (maximum degree 7), target 4 also
/// applies the book-gadget split.  The result carries all-inequality tags.
/// When `lifts` is given, one LiftStage per internal stage is appended.
inline ConstraintGraph degree_reduce(const Graph& g, std::size_t target,
                                     std::uint64_t seed,
                                     std::vector<LiftStage>* lifts = nullptr) {
  if (target != 4 && target != 7)
    throw std::invalid_argument("degree_reduce: target must be 4 or 7");
  std::array<LiftStage, 3> st;
  Graph h = equality_gadget_3color(cloud_reduce(g, seed, lifts ? &st[0] : nullptr),
                                   lifts ? &st[1] : nullptr);
  if (target == 4) h = garey_reduce4(h, lifts ? &st[2] : nullptr);
  if (lifts) {
    lifts->push_back(std::move(st[0]));
    lifts->push_back(std::move(st[1]));
    if (target == 4) lifts->push_back(std::move(st[2]));
  }
  ConstraintGraph out;
  out.g.n = h.n;
  for (const auto& [u, v] : h.edges) out.add_edge(u, v, EdgeTag::kInequality);
  return out;
}

// ---------------------------------------------------------------------------
// Apex / cloud / K5-gadget steps
// ---------------------------------------------------------------------------

/// Step I: drop isolated vertices (they carry no constraints) and append an
/// apex adjacent to every remaining vertex, so the result is 4-colorable iff
/// the input is 3-colorable.  `ratio_ok` records the |V| <= |E| normalization
/// the gap bookkeeping assumes; callers may proceed regardless.
struct ApexResult {
  Graph g;                       // cleaned input + apex (last vertex id)
  std::size_t apex = 0;
  std::size_t removed_isolated = 0;
  bool ratio_ok = true;
  LiftStage lift;                // 3-coloring of input -> 4-coloring (apex = 3)
};

inline ApexResult step1_add_apex(const Graph& g3) {
  const auto deg = degrees(g3);
  std::vector<std::size_t> keep;
  for (std::size_t v = 0; v < g3.n; ++v)
    if (deg[v] > 0) keep.push_back(v);

  ApexResult out;
  out.removed_isolated = g3.n - keep.size();
  Graph core = induced_subgraph(g3, keep);
  out.ratio_ok = core.n <= core.edges.size();
  out.apex = core.n;
  out.g = core;
  out.g.n += 1;
  for (std::size_t v = 0; v < core.n; ++v) out.g.add_edge(v, out.apex);
  out.lift.n_new = out.g.n;
  for (std::size_t v = 0; v < core.n; ++v) out.lift.ops.push_back({v, keep[v], -1, {}});
  out.lift.ops.push_back({out.apex, SIZE_MAX, 3, {}});
  return out;
}

/// Step II: replace the apex by a cloud W with |W| = |V'|, one cross edge
/// (v_i, w_i) per original vertex, and an equality expander on W.  The cloud
/// simulates the apex: equality forces all of W to one color, and the cross
/// matching pins every original vertex away from it.
struct CloudResult {
  ConstraintGraph cg;              // inequality: G' + cross; equality: expander
  std::size_t n_prime = 0;         // |V'|; W occupies ids n_prime..2*n_prime-1
  std::vector<Edge> cross;         // (i, n_prime + i)
  LiftStage lift;                  // whole cloud inherits the apex color 3
};

inline CloudResult step2_cloud(const ApexResult& a, std::uint64_t seed) {
  if (a.apex + 1 != a.g.n)
    throw std::invalid_argument("step2_cloud: apex must be the last vertex");
  const std::size_t np = a.apex;
  CloudResult out;
  out.n_prime = np;
  out.cg.g.n = 2 * np;
  for (const auto& [u, v] : a.g.edges)
    if (v != a.apex) out.cg.add_edge(u, v, EdgeTag::kInequality);
  for (std::size_t i = 0; i < np; ++i) {
    out.cg.add_edge(i, np + i, EdgeTag::kInequality);
    out.cross.push_back({i, np + i});
  }
  if (np > 0) {
    const Graph ex = detail::cloud_expander(np, seed);
    for (const auto& [a2, b2] : ex.edges)
      out.cg.add_edge(np + a2, np + b2, EdgeTag::kEquality);
  }
  out.lift.n_new = 2 * np;
  for (std::size_t v = 0; v < np; ++v) out.lift.ops.push_back({v, v, -1, {}});
  for (std::size_t v = 0; v < np; ++v) out.lift.ops.push_back({np + v, SIZE_MAX, 3, {}});
  return out;
}

/// Step III: compile every equality edge (inside W) into a K5-minus-an-edge
/// gadget, appending its triangle as three T-class vertices.  The output
/// records the vertex classes and the edge groups decompose3 works with.
struct EqualityGadget {
  std::size_t i = 0, j = 0;        // the W endpoints
  std::array<std::size_t, 3> t{};  // the appended triangle
};

struct Step3Result {
  Graph g;
  std::vector<char> vertex_class;  // 'V' originals, 'W' cloud, 'T' gadget
  std::vector<Edge> gprime_edges;  // edges inside V'
  std::vector<Edge> cross_edges;   // the V'-W matching
  std::vector<EqualityGadget> gadgets;
  LiftStage lift;                  // triangles take the colors their tips free up
};

inline Step3Result step3_equality_gadget_4color(const CloudResult& c) {
  Step3Result out;
  out.g.n = c.cg.g.n;
  for (std::size_t e = 0; e < c.cg.g.edges.size(); ++e)
    if (c.cg.tags[e] == EdgeTag::kInequality)
      out.g.add_edge(c.cg.g.edges[e].first, c.cg.g.edges[e].second);
  std::vector<Edge> eq;
  for (std::size_t e = 0; e < c.cg.g.edges.size(); ++e)
    if (c.cg.tags[e] == EdgeTag::kEquality) eq.push_back(c.cg.g.edges[e]);
  for (std::size_t v = 0; v < c.cg.g.n; ++v) out.lift.ops.push_back({v, v, -1, {}});
  for (const auto& [i, j] : eq) {
    const auto t = append_k5_gadget(out.g, i, j);
    out.gadgets.push_back({i, j, t});
    out.lift.ops.push_back({t[0], SIZE_MAX, -1, {i, j}});
    out.lift.ops.push_back({t[1], SIZE_MAX, -1, {i, j, t[0]}});
    out.lift.ops.push_back({t[2], SIZE_MAX, -1, {i, j, t[0], t[1]}});
  }
  out.lift.n_new = out.g.n;

  out.vertex_class.assign(out.g.n, 'T');
  for (std::size_t v = 0; v < c.n_prime; ++v) out.vertex_class[v] = 'V';
  for (std::size_t v = c.n_prime; v < 2 * c.n_prime; ++v) out.vertex_class[v] = 'W';
  for (const auto& [u, v] : out.g.edges)
    if (out.vertex_class[u] == 'V' && out.vertex_class[v] == 'V')
      out.gprime_edges.push_back({u, v});
  out.cross_edges = c.cross;
  return out;
}

// ---------------------------------------------------------------------------
// Component classifier
// ---------------------------------------------------------------------------

/// A successful third-kind classification: the skeleton J, its per-edge
/// pendant flags, and the map from third-kind layout ids (J vertices, then
/// mids in J-edge order, then pendants in flagged-edge order) to the
/// vertices of the classified component.
struct ThirdKindClassification {
  Graph j;
  std::vector<char> flags;
  std::vector<std::size_t> layout_to_comp;
};

/// Try to recognize `comp` (connected, local ids) as a graph of the third
/// kind.  The component is 2-colored; each side in turn is tried as the mid
/// side (mids have degree 2 or 3; a degree-3 mid sheds its largest-id
/// degree-1 neighbor as the pendant).  The derived skeleton is rebuilt and
/// compared edge-for-edge against the component - only an exact match is
/// accepted.
inline std::optional<ThirdKindClassification> classify_third_kind(const Graph& comp) {
  const std::size_t m = comp.n;
  if (m < 3 || comp.edges.empty()) return std::nullopt;
  const auto adj = adjacency_lists(comp);
  const auto deg = degrees(comp);

  // Bipartition (components reaching here are connected).
  std::vector<int> color(m, -1);
  std::vector<std::size_t> stack{0};
  color[0] = 0;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v : adj[u]) {
      if (color[v] == -1) {
        color[v] = 1 - color[u];
        stack.push_back(v);
      } else if (color[v] == color[u]) {
        return std::nullopt;  // odd cycle
      }
    }
  }

  for (int mid_side : {1, 0}) {
    std::vector<char> role(m, 'J');  // 'J', 'M' (mid), 'P' (pendant)
    std::vector<std::array<std::size_t, 2>> ends;  // J-neighbors per mid
    std::vector<std::size_t> mids;
    bool ok = true;
    for (std::size_t v = 0; v < m && ok; ++v) {
      if (color[v] != mid_side) continue;
      if (deg[v] != 2 && deg[v] != 3) {
        ok = false;
        break;
      }
      std::vector<std::size_t> nb = adj[v];
      std::sort(nb.begin(), nb.end());
      if (deg[v] == 3) {
        std::size_t pend = SIZE_MAX;
        for (std::size_t w : nb)
          if (deg[w] == 1) pend = w;  // largest id wins (nb sorted)
        if (pend == SIZE_MAX) {
          ok = false;
          break;
        }
        role[pend] = 'P';
        nb.erase(std::find(nb.begin(), nb.end(), pend));
      }
      role[v] = 'M';
      mids.push_back(v);
      ends.push_back({nb[0], nb[1]});
    }
    if (!ok) continue;

    // Skeleton vertices and simple-graph check.
    std::vector<std::size_t> jvert;
    for (std::size_t v = 0; v < m; ++v)
      if (role[v] == 'J') jvert.push_back(v);
    std::vector<std::size_t> jrank(m, SIZE_MAX);
    for (std::size_t r = 0; r < jvert.size(); ++r) jrank[jvert[r]] = r;
    Graph j;
    j.n = jvert.size();
    std::map<Edge, std::size_t> mid_of;  // skeleton edge -> component mid
    for (std::size_t t = 0; t < mids.size() && ok; ++t) {
      std::size_t a = jrank[ends[t][0]], b = jrank[ends[t][1]];
      if (a == SIZE_MAX || b == SIZE_MAX) {  // a mid's neighbor got pendant role
        ok = false;
        break;
      }
      if (a > b) std::swap(a, b);
      if (!mid_of.insert({{a, b}, mids[t]}).second) {
        ok = false;  // two mids over the same pair: J would be a multigraph
        break;
      }
      j.add_edge(a, b);
    }
    if (!ok) continue;
    bool deg_ok = true;
    for (std::size_t d : degrees(j))
      if (d > 4) deg_ok = false;
    if (!deg_ok) continue;

    std::vector<char> flags(j.edges.size(), 0);
    std::vector<std::size_t> layout_to_comp = jvert;
    for (const auto& e : j.edges) layout_to_comp.push_back(mid_of.at(e));
    for (std::size_t e = 0; e < j.edges.size(); ++e) {
      const std::size_t mv = mid_of.at(j.edges[e]);
      for (std::size_t w : adj[mv])
        if (role[w] == 'P') {
          flags[e] = 1;
          layout_to_comp.push_back(w);
        }
    }

    // Machine check: rebuild from (J, flags) and compare edge sets.
    if (j.edges.empty()) continue;
    const ThirdKindLayout lay = build_third_kind(j, flags);
    if (lay.g.n != m) continue;
    Graph mapped;
    mapped.n = m;
    bool match = true;
    for (const auto& [u, v] : lay.g.edges) {
      const std::size_t a = layout_to_comp[u], b = layout_to_comp[v];
      if (mapped.has_edge(a, b)) {
        match = false;
        break;
      }
      mapped.add_edge(a, b);
    }
    if (match && mapped.edges == comp.edges) {
      ThirdKindClassification res;
      res.j = std::move(j);
      res.flags = std::move(flags);
      res.layout_to_comp = std::move(layout_to_comp);
      return res;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Plain degree-2 edge split (Euler walk)
// ---------------------------------------------------------------------------

/// Split the edges of a maximum-degree-4 graph into three sets, each of
/// maximum degree 2 (the third set always comes back empty; it exists so the
/// result plugs into the same three-part interfaces).  Odd-degree vertices
/// are paired up with dummy edges, every component of the augmented
/// multigraph is traversed by one closed Euler walk, and the walk's edges
/// are colored alternately.  Each vertex sees its walk edges in consecutive
/// pairs, so each color takes at most half of them - except across the
/// walk's wrap-around when its length is odd, which is rotated onto a dummy
/// edge or a degree-2 vertex (one of the two always exists).
inline std::array<std::vector<Edge>, 3> edge_3split(const Graph& g) {
  const auto deg0 = degrees(g);
  for (std::size_t d : deg0)
    if (d > 4) throw std::invalid_argument("edge_3split: maximum degree exceeds 4");

  const std::size_t mr = g.edges.size();  // ids >= mr are dummies
  std::vector<Edge> ext(g.edges);
  std::vector<std::size_t> odd;
  for (std::size_t v = 0; v < g.n; ++v)
    if (deg0[v] % 2 == 1) odd.push_back(v);
  for (std::size_t k = 0; k + 1 < odd.size(); k += 2)
    ext.push_back({odd[k], odd[k + 1]});  // may parallel a real edge

  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(g.n);
  for (std::size_t e = 0; e < ext.size(); ++e) {
    adj[ext[e].first].push_back({ext[e].second, e});
    adj[ext[e].second].push_back({ext[e].first, e});
  }

  std::array<std::vector<Edge>, 3> parts;
  std::vector<char> used(ext.size(), 0);
  std::vector<std::size_t> ptr(g.n, 0);
  for (std::size_t s = 0; s < g.n; ++s) {
    bool fresh = false;
    for (const auto& [w, e] : adj[s])
      if (!used[e]) fresh = true;
    if (!fresh) continue;

    // Hierholzer with an explicit stack; the closed walk comes out as an
    // edge sequence (reversed, which leaves cyclic adjacency intact).
    std::vector<std::pair<std::size_t, std::size_t>> st{{s, SIZE_MAX}};
    std::vector<std::size_t> walk;
    while (!st.empty()) {
      const std::size_t v = st.back().first;
      while (ptr[v] < adj[v].size() && used[adj[v][ptr[v]].second]) ++ptr[v];
      if (ptr[v] == adj[v].size()) {
        if (st.back().second != SIZE_MAX) walk.push_back(st.back().second);
        st.pop_back();
      } else {
        const auto [w, e] = adj[v][ptr[v]];
        used[e] = 1;
        st.push_back({w, e});
      }
    }

    const std::size_t len = walk.size();
    std::size_t rot = 0;
    if (len % 2 == 1) {
      rot = SIZE_MAX;
      for (std::size_t i = 0; i < len && rot == SIZE_MAX; ++i)
        if (walk[i] >= mr) rot = i;  // doubled color lands on a dummy
      for (std::size_t i = 0; i < len && rot == SIZE_MAX; ++i) {
        const Edge& a = ext[walk[(i + len - 1) % len]];
        const Edge& b = ext[walk[i]];
        const std::size_t x =
            (a.first == b.first || a.first == b.second) ? a.first : a.second;
        if (adj[x].size() == 2) rot = i;  // ...or on a degree-2 vertex
      }
      if (rot == SIZE_MAX)
        throw std::logic_error("edge_3split: no rotation anchor");  // unreachable
    }
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t e = walk[(rot + i) % len];
      if (e < mr) parts[i % 2].push_back(ext[e]);
    }
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return parts;
}

// ---------------------------------------------------------------------------
// The 3-split of G' with cross-edge service slots
// ---------------------------------------------------------------------------

namespace detail {

/// A 3-split of the G' edges plus, for every original vertex, the part its
/// cross edge joins (where the vertex is the served leaf of an odd-edge
/// path, so the cross edge extends the part's third-kind component).
struct GpSplit {
  std::array<std::vector<Edge>, 3> parts;
  std::vector<std::size_t> serve_part;  // indexed by V' vertex id
};

/// Check a candidate edge->part assignment: every part must have maximum
/// degree 2, and there must be a perfect matching between the V' vertices
/// and the odd-edge paths of the parts (vertex = a leaf of its matched
/// path).  Bare odd-edge paths and doubly-crossed paths both break the
/// third-kind shape, hence "exactly one served leaf per odd path".
inline std::optional<GpSplit> check_split(std::size_t n_prime,
                                          const std::vector<Edge>& edges,
                                          const std::vector<std::size_t>& part_of) {
  GpSplit out;
  struct Slot {
    std::size_t part;
    std::vector<std::size_t> leaves;
  };
  std::vector<Slot> slots;
  for (std::size_t ell = 0; ell < 3; ++ell) {
    Graph pg{n_prime, {}};
    for (std::size_t e = 0; e < edges.size(); ++e)
      if (part_of[e] == ell) {
        pg.add_edge(edges[e].first, edges[e].second);
        out.parts[ell].push_back(edges[e]);
      }
    const auto deg = degrees(pg);
    for (std::size_t d : deg)
      if (d > 2) return std::nullopt;
    for (const auto& comp : connected_components(pg)) {
      if (comp.size() < 2) continue;
      std::size_t ce = 0;
      std::vector<std::size_t> leaves;
      for (std::size_t v : comp) {
        ce += deg[v];
        if (deg[v] == 1) leaves.push_back(v);
      }
      ce /= 2;
      if (leaves.empty()) continue;           // cycle: fine bare
      if (ce % 2 == 0) continue;              // even path: fine bare
      slots.push_back({ell, leaves});         // odd path: needs one served leaf
    }
  }
  if (slots.size() != n_prime) return std::nullopt;

  // Kuhn matching: vertex v -> slot where v is a leaf.
  std::vector<std::vector<std::size_t>> cand(n_prime);
  for (std::size_t s = 0; s < slots.size(); ++s)
    for (std::size_t v : slots[s].leaves) cand[v].push_back(s);
  std::vector<std::size_t> slot_of(n_prime, SIZE_MAX), vert_of(slots.size(), SIZE_MAX);
  std::vector<char> used;
  std::function<bool(std::size_t)> augment = [&](std::size_t v) {
    for (std::size_t s : cand[v]) {
      if (used[s]) continue;
      used[s] = 1;
      if (vert_of[s] == SIZE_MAX || augment(vert_of[s])) {
        vert_of[s] = v;
        slot_of[v] = s;
        return true;
      }
    }
    return false;
  };
  for (std::size_t v = 0; v < n_prime; ++v) {
    used.assign(slots.size(), 0);
    if (!augment(v)) return std::nullopt;
  }
  out.serve_part.resize(n_prime);
  for (std::size_t v = 0; v < n_prime; ++v) out.serve_part[v] = slots[slot_of[v]].part;
  return out;
}

/// Find an admissible 3-split: exhaustive search with degree pruning for up
/// to 13 edges, then seeded randomized restarts.  Returns nullopt when no
/// admissible split was found (e.g. tree components, where the odd-path
/// count can never reach |V'|).
inline std::optional<GpSplit> split_gprime(std::size_t n_prime,
                                           const std::vector<Edge>& edges,
                                           std::uint64_t seed) {
  if (n_prime == 0) return GpSplit{};
  if (edges.size() < n_prime) return std::nullopt;  // fewer slots than vertices

  std::vector<std::size_t> part_of(edges.size(), 0);
  if (edges.size() <= 13) {
    std::array<std::vector<std::size_t>, 3> pdeg;
    for (auto& d : pdeg) d.assign(n_prime, 0);
    std::function<std::optional<GpSplit>(std::size_t)> rec =
        [&](std::size_t e) -> std::optional<GpSplit> {
      if (e == edges.size()) return check_split(n_prime, edges, part_of);
      for (std::size_t ell = 0; ell < 3; ++ell) {
        const auto [u, v] = edges[e];
        if (pdeg[ell][u] >= 2 || pdeg[ell][v] >= 2) continue;
        pdeg[ell][u] += 1;
        pdeg[ell][v] += 1;
        part_of[e] = ell;
        if (auto res = rec(e + 1)) return res;
        pdeg[ell][u] -= 1;
        pdeg[ell][v] -= 1;
      }
      return std::nullopt;
    };
    return rec(0);
  }

  for (int attempt = 0; attempt < 400; ++attempt) {
    Rng rng(splitmix64(seed + 0x9e3779b97f4a7c15ull * std::uint64_t(attempt + 1)));
    std::array<std::vector<std::size_t>, 3> pdeg;
    for (auto& d : pdeg) d.assign(n_prime, 0);
    bool feasible = true;
    for (std::size_t e = 0; e < edges.size() && feasible; ++e) {
      const auto [u, v] = edges[e];
      std::array<std::size_t, 3> order{0, 1, 2};
      for (std::size_t k = 2; k > 0; --k)
        std::swap(order[k], order[std::size_t(rng.below(k + 1))]);
      feasible = false;
      for (std::size_t ell : order) {
        if (pdeg[ell][u] >= 2 || pdeg[ell][v] >= 2) continue;
        pdeg[ell][u] += 1;
        pdeg[ell][v] += 1;
        part_of[e] = ell;
        feasible = true;
        break;
      }
    }
    if (!feasible) continue;
    if (auto res = check_split(n_prime, edges, part_of)) return res;
  }
  return std::nullopt;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// decompose3
// ---------------------------------------------------------------------------

/// A graph together with a 3-way edge split and one certified
/// lambda-solution per part (each defined on all vertices; vertices a part
/// does not touch enter as independent single-site factors).
struct DecomposedGraph {
  Graph graph;
  std::vector<char> vertex_class;
  std::array<std::vector<Edge>, 3> parts;
  std::array<LambdaSolution, 3> solutions;
};

namespace detail {

/// Lambda-solution for one connected component of a part, relabeled so its
/// local ids follow the component's sorted global order.
inline ProductPart component_solution(const Graph& part_graph,
                                      const std::vector<std::size_t>& comp) {
  if (comp.size() == 1) return {comp, single_site_solution()};
  const Graph local = induced_subgraph(part_graph, comp);
  const auto deg = degrees(local);

  bool is_cycle = local.edges.size() == comp.size();
  for (std::size_t d : deg)
    if (d != 2) is_cycle = false;
  if (is_cycle) {
    const auto adj = adjacency_lists(local);
    std::vector<std::size_t> walk{0};
    std::size_t prev = SIZE_MAX, cur = 0;
    while (walk.size() < comp.size()) {
      const std::size_t nxt = (adj[cur][0] == prev) ? adj[cur][1] : adj[cur][0];
      walk.push_back(nxt);
      prev = cur;
      cur = nxt;
    }
    std::vector<std::size_t> new_to_old(comp.size());  // rank -> cycle position
    for (std::size_t t = 0; t < walk.size(); ++t) new_to_old[walk[t]] = t;
    return {comp, relabel_solution(cycle_solution(comp.size()), new_to_old)};
  }

  const auto cls = classify_third_kind(local);
  if (!cls)
    throw std::runtime_error("decompose3: unclassifiable component at vertex " +
                             std::to_string(comp[0]));
  std::vector<std::size_t> new_to_old(comp.size());  // rank -> layout id
  for (std::size_t l = 0; l < cls->layout_to_comp.size(); ++l)
    new_to_old[cls->layout_to_comp[l]] = l;
  return {comp, relabel_solution(third_kind_solution(cls->j, cls->flags), new_to_old)};
}

}  // namespace detail

/// Split the step-III graph into three edge sets whose components are
/// isolated vertices, cycles, or graphs of the third kind, and attach a
/// certified lambda-solution to each part.  Gadget edges follow the fixed
/// per-gadget pattern (part l gets i-t_l, t_l-j, t_l-t_{l+1}); G' edges are
/// split by a parity-matched search; each cross edge lands where its V'
/// vertex is the served leaf of an odd path.  Every part is re-verified
/// against its own edge set before returning.
inline DecomposedGraph decompose3(const Step3Result& s,
                                  std::uint64_t seed = 0,
                                  const SicBasis& basis = build_sic_basis()) {
  const std::size_t n = s.g.n;
  if (n == 0) {
    // Degenerate instance (empty input graph): the decomposition is three
    // empty parts, each carrying the vacuous zero-site lambda-solution.
    DecomposedGraph out;
    out.graph = s.g;
    LambdaSolution trivial;
    trivial.graph = Graph{0, {}};
    trivial.source = std::make_shared<ExplicitSource>(point_mass(Assignment{}));
    trivial.explicit_dist = point_mass(Assignment{});
    trivial.lambda_achieved = 0.25;
    for (auto& sol : out.solutions) sol = trivial;
    return out;
  }
  std::size_t n_prime = 0;
  for (char c : s.vertex_class)
    if (c == 'V') ++n_prime;

  // Cross edges must form the (i, mate) matching over all of V'.
  std::vector<std::size_t> mate(n_prime, SIZE_MAX);
  for (const auto& [u, v] : s.cross_edges) {
    const std::size_t vv = std::min(u, v), ww = std::max(u, v);
    if (vv >= n_prime || s.vertex_class[ww] != 'W' || mate[vv] != SIZE_MAX)
      throw std::runtime_error("decompose3: cross edges are not a V'-W matching at vertex " +
                               std::to_string(vv));
    mate[vv] = ww;
  }
  for (std::size_t v = 0; v < n_prime; ++v)
    if (mate[v] == SIZE_MAX)
      throw std::runtime_error("decompose3: vertex " + std::to_string(v) +
                               " has no cross edge");

  const auto split = detail::split_gprime(n_prime, s.gprime_edges, seed);
  if (!split) {
    // Name a culprit: a vertex that cannot be a served leaf (no incident
    // G' edge), else the first vertex.
    std::vector<std::size_t> gdeg(n_prime, 0);
    for (const auto& [u, v] : s.gprime_edges) {
      gdeg[u] += 1;
      gdeg[v] += 1;
    }
    std::size_t culprit = 0;
    for (std::size_t v = 0; v < n_prime; ++v)
      if (gdeg[v] == 0) culprit = v;
    throw std::runtime_error("decompose3: no admissible 3-split of G' (vertex " +
                             std::to_string(culprit) + ")");
  }

  DecomposedGraph out;
  out.graph = s.g;
  out.vertex_class = s.vertex_class;
  for (std::size_t ell = 0; ell < 3; ++ell) out.parts[ell] = split->parts[ell];
  for (const auto& gad : s.gadgets)
    for (std::size_t ell = 0; ell < 3; ++ell) {
      out.parts[ell].push_back({std::min(gad.i, gad.t[ell]), std::max(gad.i, gad.t[ell])});
      out.parts[ell].push_back({std::min(gad.j, gad.t[ell]), std::max(gad.j, gad.t[ell])});
      const std::size_t p = gad.t[ell], q = gad.t[(ell + 1) % 3];
      out.parts[ell].push_back({std::min(p, q), std::max(p, q)});
    }
  for (std::size_t v = 0; v < n_prime; ++v)
    out.parts[split->serve_part[v]].push_back({v, mate[v]});

  for (std::size_t ell = 0; ell < 3; ++ell) {
    std::sort(out.parts[ell].begin(), out.parts[ell].end());
    Graph pg{n, {}};
    for (const auto& [u, v] : out.parts[ell]) pg.add_edge(u, v);
    std::vector<ProductPart> factors;
    for (const auto& comp : connected_components(pg))
      factors.push_back(detail::component_solution(pg, comp));
    out.solutions[ell] = product_solution(n, factors);

    const auto check = verify_lambda_solution(out.solutions[ell], pg,
                                              out.solutions[ell].lambda_achieved, basis);
    if (!check.pass || out.solutions[ell].lambda_achieved <= 0.0)
      throw std::logic_error("decompose3: part " + std::to_string(ell) +
                             " failed verification: " + check.failure);
  }
  return out;
}

}  // namespace quasiq
