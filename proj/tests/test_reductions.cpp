// Tests for the reduction chain: gadget forcing by exhaustive coloring
// enumeration, degree reduction on stars and wheels, the apex/cloud/gadget
// steps with their size bookkeeping, the third-kind classifier, the Euler
// edge split, coloring lifts, and decompose3 end to end on small instances.
//
// Oracles: every gadget claim ("forces equality", "compilation preserves
// colorability") is checked against a full enumeration of the coloring
// space; stage outputs are compared against hand-computed vertex/edge
// counts; decompose3's parts are audited for disjoint cover, per-part
// degrees and the served-leaf rule independently of the library's own
// internal verification.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "quasiq/graph.hpp"
#include "quasiq/reductions.hpp"
#include "quasiq/rng.hpp"
#include "quasiq/scapegoat.hpp"
#include "test_util.hpp"

using quasiq::Assignment;
using quasiq::ConstraintGraph;
using quasiq::Edge;
using quasiq::EdgeTag;
using quasiq::Graph;
using quasiq::LiftStage;

namespace {

/// Visit every coloring of n vertices over the given number of colors.
void for_each_coloring(std::size_t n, std::size_t colors,
                       const std::function<void(const Assignment&)>& fn) {
  Assignment a(n, '0');
  while (true) {
    fn(a);
    std::size_t i = 0;
    while (i < n && a[i] == char('0' + colors - 1)) a[i++] = '0';
    if (i == n) break;
    a[i] += 1;
  }
}

/// Properness under constraint tags: inequality edges must differ, equality
/// edges must agree.
bool cg_proper(const ConstraintGraph& cg, const Assignment& a) {
  for (std::size_t e = 0; e < cg.g.edges.size(); ++e) {
    const auto& [u, v] = cg.g.edges[e];
    const bool eq = a[u] == a[v];
    if (cg.tags[e] == EdgeTag::kEquality ? !eq : eq) return false;
  }
  return true;
}

std::size_t max_degree(const Graph& g) {
  std::size_t d = 0;
  for (std::size_t x : quasiq::degrees(g)) d = std::max(d, x);
  return d;
}

std::size_t count_tag(const ConstraintGraph& cg, EdgeTag t) {
  std::size_t c = 0;
  for (EdgeTag x : cg.tags) c += (x == t);
  return c;
}

/// Star K_{1,m}: center 0 joined to m leaves.
Graph star_graph(std::size_t m) {
  Graph g;
  g.n = m + 1;
  for (std::size_t k = 1; k <= m; ++k) g.add_edge(0, k);
  return g;
}

/// The full apex/cloud/gadget chain for a degree-<=4 input.
quasiq::Step3Result chain_of(const Graph& g3, std::uint64_t seed) {
  const auto a = quasiq::step1_add_apex(g3);
  const auto c = quasiq::step2_cloud(a, seed);
  return quasiq::step3_equality_gadget_4color(c);
}

/// Shared structural audit for a decomposition: parts disjointly cover the
/// edge set, G'-restricted part degrees stay <= 2, and every part-path of
/// G' edges is served by at most one cross edge, at a leaf, following the
/// odd-edge-count rule.
void audit_decomposition(const quasiq::Step3Result& s,
                         const quasiq::DecomposedGraph& d) {
  std::vector<Edge> all;
  for (const auto& p : d.parts) all.insert(all.end(), p.begin(), p.end());
  std::sort(all.begin(), all.end());
  REQUIRE(all == s.g.edges);  // disjoint cover (edges are unique, so sorted match)

  std::size_t n_prime = 0;
  for (char c : s.vertex_class)
    if (c == 'V') ++n_prime;

  const std::set<Edge> cross(s.cross_edges.begin(), s.cross_edges.end());
  for (const auto& part : d.parts) {
    // G'-restricted degree <= 2.
    Graph pg;
    pg.n = n_prime;
    for (const auto& [u, v] : part)
      if (u < n_prime && v < n_prime) pg.add_edge(u, v);
    REQUIRE(max_degree(pg) <= 2);

    // Serving rule per G'-component: odd-edge paths get exactly one cross
    // edge in this part, at a leaf; even paths and cycles get none.
    std::vector<std::size_t> served;  // V' vertices with a cross edge here
    for (const auto& e : part)
      if (cross.count(e)) served.push_back(e.first);
    const auto deg = quasiq::degrees(pg);
    for (std::size_t v : served) REQUIRE(deg[v] == 1);  // leaf of its path

    for (const auto& comp : quasiq::connected_components(pg)) {
      if (comp.size() < 2) continue;
      std::size_t edges_in = 0, hits = 0;
      bool has_leaf = false;
      for (std::size_t v : comp) {
        edges_in += deg[v];
        if (deg[v] == 1) has_leaf = true;
        hits += std::count(served.begin(), served.end(), v);
      }
      edges_in /= 2;
      const std::size_t expect = (has_leaf && edges_in % 2 == 1) ? 1 : 0;
      REQUIRE(hits == expect);
    }
  }

  for (const auto& sol : d.solutions) REQUIRE(sol.lambda_achieved > 0.0);
}

}  // namespace

TEST_CASE("diamond forces equality under 3 colors but not under 4") {
  Graph g;
  g.n = 2;
  quasiq::append_diamond(g, 0, 1);
  REQUIRE(g.n == 4);
  REQUIRE(g.edges.size() == 5);

  std::size_t proper3 = 0;
  std::set<char> tip_colors;
  for_each_coloring(g.n, 3, [&](const Assignment& a) {
    if (!quasiq::is_proper_coloring(g, a, 3)) return;
    ++proper3;
    REQUIRE(a[0] == a[1]);
    tip_colors.insert(a[0]);
  });
  REQUIRE(proper3 == 6);  // 3 tip colors x 2 mid arrangements
  REQUIRE(tip_colors.size() == 3);

  bool unequal_tips = false;
  for_each_coloring(g.n, 4, [&](const Assignment& a) {
    if (quasiq::is_proper_coloring(g, a, 4) && a[0] != a[1]) unequal_tips = true;
  });
  REQUIRE(unequal_tips);  // under 4 colors the diamond no longer forces
}

TEST_CASE("book gadget forces its three pages to one color") {
  Graph g;
  g.n = 3;
  quasiq::append_book3(g, 0, 1, 2);
  REQUIRE(g.n == 5);
  REQUIRE(g.edges.size() == 7);

  std::size_t proper3 = 0;
  std::set<char> page_colors;
  for_each_coloring(g.n, 3, [&](const Assignment& a) {
    if (!quasiq::is_proper_coloring(g, a, 3)) return;
    ++proper3;
    REQUIRE(a[0] == a[1]);
    REQUIRE(a[1] == a[2]);
    page_colors.insert(a[0]);
  });
  REQUIRE(proper3 == 6);  // 3 page colors x 2 anchor arrangements
  REQUIRE(page_colors.size() == 3);
}

TEST_CASE("K5-minus-an-edge forces equality under 4 colors") {
  Graph g;
  g.n = 2;
  const auto t = quasiq::append_k5_gadget(g, 0, 1);
  REQUIRE(g.n == 5);
  REQUIRE(g.edges.size() == 9);
  REQUIRE_FALSE(g.has_edge(0, 1));
  REQUIRE(t == std::array<std::size_t, 3>{2, 3, 4});

  std::size_t proper4 = 0;
  std::set<char> tip_colors;
  for_each_coloring(g.n, 4, [&](const Assignment& a) {
    if (!quasiq::is_proper_coloring(g, a, 4)) return;
    ++proper4;
    REQUIRE(a[0] == a[1]);
    tip_colors.insert(a[0]);
  });
  REQUIRE(proper4 == 24);  // 4 tip colors x 3! triangle arrangements
  REQUIRE(tip_colors.size() == 4);
}

TEST_CASE("equality chains compile into diamonds that propagate the color") {
  ConstraintGraph cg;
  cg.g.n = 3;
  cg.add_edge(0, 1, EdgeTag::kEquality);
  cg.add_edge(1, 2, EdgeTag::kEquality);
  const Graph h = quasiq::equality_gadget_3color(cg);
  REQUIRE(h.n == 7);
  REQUIRE(h.edges.size() == 10);

  std::size_t proper = 0;
  std::set<char> colors_seen;
  for_each_coloring(h.n, 3, [&](const Assignment& a) {
    if (!quasiq::is_proper_coloring(h, a, 3)) return;
    ++proper;
    REQUIRE(a[0] == a[1]);
    REQUIRE(a[1] == a[2]);
    colors_seen.insert(a[0]);
  });
  REQUIRE(proper == 3 * 2 * 2);  // chain color x mid arrangements per diamond
  REQUIRE(colors_seen.size() == 3);
}

TEST_CASE("diamond compilation preserves colorability in both directions") {
  // One equality edge, one inequality edge: project every proper coloring of
  // the compiled graph back to the tagged base and compare against a direct
  // enumeration of the tagged colorings.
  ConstraintGraph cg;
  cg.g.n = 3;
  cg.add_edge(0, 1, EdgeTag::kEquality);
  cg.add_edge(1, 2, EdgeTag::kInequality);

  LiftStage lift;
  const Graph h = quasiq::equality_gadget_3color(cg, &lift);
  REQUIRE(h.n == 5);

  std::set<Assignment> projected;
  std::size_t compiled = 0;
  for_each_coloring(h.n, 3, [&](const Assignment& a) {
    if (!quasiq::is_proper_coloring(h, a, 3)) return;
    ++compiled;
    projected.insert(a.substr(0, 3));
  });

  std::set<Assignment> tagged;
  for_each_coloring(3, 3, [&](const Assignment& a) {
    if (cg_proper(cg, a)) tagged.insert(a);
  });
  REQUIRE(projected == tagged);
  REQUIRE(tagged.size() == 6);       // 3 shared colors x 2 for the free endpoint
  REQUIRE(compiled == 6 * 2);        // x 2 mid arrangements

  // Every tagged coloring lifts to a proper coloring of the compiled graph.
  for (const Assignment& base : tagged) {
    const Assignment w = quasiq::lift_coloring(base, lift);
    REQUIRE(quasiq::violations(h, w, 3) == 0);
  }
}

TEST_CASE("cloud_reduce replaces a degree-8 center by an expander cloud") {
  const Graph g = star_graph(8);
  const ConstraintGraph cg = quasiq::cloud_reduce(g, 7);
  REQUIRE(cg.g.n == 16);  // 8 leaves + cloud of 8
  REQUIRE(count_tag(cg, EdgeTag::kInequality) == 8);
  REQUIRE(count_tag(cg, EdgeTag::kEquality) == 12);  // 3-regular on 8
  REQUIRE(max_degree(cg.g) <= 4);
}

TEST_CASE("cloud_reduce: coloring spaces of the star and its cloud agree") {
  const Graph g = star_graph(5);
  LiftStage lift;
  const ConstraintGraph cg = quasiq::cloud_reduce(g, 3, &lift);
  REQUIRE(cg.g.n == 10);  // 5 leaves (ids 0..4) + cloud of 5 (ids 5..9)

  // Equality forces the whole cloud to one color, so tagged colorings of the
  // cloud graph correspond one-to-one to colorings of the star.
  std::size_t tagged = 0;
  for_each_coloring(cg.g.n, 3, [&](const Assignment& a) {
    if (!cg_proper(cg, a)) return;
    ++tagged;
    Assignment orig(g.n, '?');
    orig[0] = a[5];
    for (std::size_t k = 1; k <= 5; ++k) orig[k] = a[k - 1];
    REQUIRE(quasiq::violations(g, orig, 3) == 0);
  });
  REQUIRE(tagged == 3 * 32);  // center color x 2^5 leaf choices

  // Lift check: any proper star coloring extends to a tagged cloud coloring.
  const Assignment base = "011111";
  REQUIRE(quasiq::violations(g, base, 3) == 0);
  const Assignment w = quasiq::lift_coloring(base, lift);
  REQUIRE(cg_proper(cg, w));
}

TEST_CASE("cloud_reduce and degree_reduce leave small-degree graphs alone") {
  for (const Graph& g : {quasiq::complete_graph(4), quasiq::cycle_graph(5)}) {
    const ConstraintGraph cg = quasiq::cloud_reduce(g, 0);
    REQUIRE(cg.g.n == g.n);
    REQUIRE(cg.g.edges == g.edges);
    REQUIRE(count_tag(cg, EdgeTag::kEquality) == 0);

    const ConstraintGraph dr = quasiq::degree_reduce(g, 4, 0);
    REQUIRE(dr.g.n == g.n);
    REQUIRE(dr.g.edges == g.edges);
  }
}

TEST_CASE("garey split: degree-5 center becomes three equal copies") {
  const Graph g = star_graph(5);
  LiftStage lift;
  const Graph h = quasiq::garey_reduce4(g, &lift);
  REQUIRE(h.n == 10);  // 5 leaves + 3 copies + 2 anchors
  REQUIRE(h.edges.size() == 5 + 7);
  REQUIRE(max_degree(h) <= 4);

  // Copies occupy ids 5,6,7 (leaves keep order as 0..4).  Every proper
  // 3-coloring forces them equal and projects to a proper star coloring.
  std::size_t proper = 0;
  for_each_coloring(h.n, 3, [&](const Assignment& a) {
    if (!quasiq::is_proper_coloring(h, a, 3)) return;
    ++proper;
    REQUIRE(a[5] == a[6]);
    REQUIRE(a[6] == a[7]);
    Assignment orig(g.n, '?');
    orig[0] = a[5];
    for (std::size_t k = 1; k <= 5; ++k) orig[k] = a[k - 1];
    REQUIRE(quasiq::violations(g, orig, 3) == 0);
  });
  REQUIRE(proper == 96 * 2);  // 96 star colorings x 2 anchor arrangements

  const Assignment w = quasiq::lift_coloring("011111", lift);
  REQUIRE(quasiq::violations(h, w, 3) == 0);
}

TEST_CASE("garey split: degree-6 center still needs only one book") {
  const Graph g = star_graph(6);
  const Graph h = quasiq::garey_reduce4(g);
  REQUIRE(h.n == 11);  // 6 leaves + ceil(6/2)=3 copies + 2 anchors
  REQUIRE(max_degree(h) <= 4);

  std::size_t proper = 0;
  for_each_coloring(h.n, 3, [&](const Assignment& a) {
    if (!quasiq::is_proper_coloring(h, a, 3)) return;
    ++proper;
    REQUIRE(a[6] == a[7]);
    REQUIRE(a[7] == a[8]);
  });
  REQUIRE(proper == (3 * 64) * 2);
}

TEST_CASE("garey split: degree-7 center chains two books through a connector") {
  const Graph g = star_graph(7);
  LiftStage lift;
  const Graph h = quasiq::garey_reduce4(g, &lift);
  REQUIRE(h.n == 16);  // 7 leaves + 4 copies + 1 connector + 4 anchors
  REQUIRE(max_degree(h) <= 4);

  const Assignment w = quasiq::lift_coloring("01111111", lift);
  REQUIRE(quasiq::violations(h, w, 3) == 0);
}

TEST_CASE("degree_reduce: target 7 stops before the book stage") {
  // Wheel hub has degree 5; its cloud vertices touch up to three diamonds,
  // so the intermediate maximum degree is 1 + 2*3 = 7.
  Graph w5 = quasiq::cycle_graph(5);
  w5.n = 6;
  for (std::size_t v = 0; v < 5; ++v) w5.add_edge(v, 5);

  const ConstraintGraph d7 = quasiq::degree_reduce(w5, 7, 1);
  REQUIRE(max_degree(d7.g) == 7);
  const ConstraintGraph d4 = quasiq::degree_reduce(w5, 4, 1);
  REQUIRE(max_degree(d4.g) <= 4);
  REQUIRE(count_tag(d4, EdgeTag::kEquality) == 0);

  REQUIRE_THROWS_AS(quasiq::degree_reduce(w5, 5, 1), std::invalid_argument);

  std::vector<LiftStage> lifts;
  (void)quasiq::degree_reduce(w5, 7, 1, &lifts);
  REQUIRE(lifts.size() == 2);
  lifts.clear();
  (void)quasiq::degree_reduce(w5, 4, 1, &lifts);
  REQUIRE(lifts.size() == 3);
}

TEST_CASE("degree_reduce lift carries a 3-coloring through all stages") {
  // K_{2,6}: both centers have degree 6, so clouds, diamonds and books all
  // fire; the bipartition 2-coloring must survive to the final graph.
  Graph g;
  g.n = 8;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t l = 2; l < 8; ++l) g.add_edge(c, l);

  std::vector<LiftStage> lifts;
  const ConstraintGraph dr = quasiq::degree_reduce(g, 4, 5, &lifts);
  REQUIRE(max_degree(dr.g) <= 4);

  const Assignment base = "00111111";
  REQUIRE(quasiq::violations(g, base, 3) == 0);
  const Assignment w = quasiq::apply_lifts(base, lifts);
  REQUIRE(w.size() == dr.g.n);
  REQUIRE(quasiq::violations(dr.g, w, 3) == 0);
}

TEST_CASE("step1: cycle gains an apex and becomes the wheel") {
  const auto a = quasiq::step1_add_apex(quasiq::cycle_graph(5));
  REQUIRE(a.g.n == 6);
  REQUIRE(a.apex == 5);
  REQUIRE(a.removed_isolated == 0);
  REQUIRE(a.ratio_ok);
  Graph w5 = quasiq::cycle_graph(5);
  w5.n = 6;
  for (std::size_t v = 0; v < 5; ++v) w5.add_edge(v, 5);
  REQUIRE(a.g.edges == w5.edges);

  const Assignment w = quasiq::lift_coloring("01012", a.lift);
  REQUIRE(w == "010123");
  REQUIRE(quasiq::violations(a.g, w, 4) == 0);
}

TEST_CASE("step1: K4 to K5 preserves the minimum violation count") {
  const Graph k4 = quasiq::complete_graph(4);
  REQUIRE(quasiq::best_coloring(k4, 3).second == 1);
  const auto a = quasiq::step1_add_apex(k4);
  REQUIRE(a.g.edges == quasiq::complete_graph(5).edges);
  REQUIRE(quasiq::best_coloring(a.g, 4).second == 1);
}

TEST_CASE("step1 drops isolated vertices and reports the ratio flag") {
  Graph g = quasiq::cycle_graph(5);
  g.n = 7;  // two isolated vertices
  const auto a = quasiq::step1_add_apex(g);
  REQUIRE(a.removed_isolated == 2);
  REQUIRE(a.g.n == 6);
  REQUIRE(a.ratio_ok);

  const auto t = quasiq::step1_add_apex(quasiq::path_graph(3));
  REQUIRE_FALSE(t.ratio_ok);  // 3 vertices, 2 edges
}

TEST_CASE("step2: the wheel's apex becomes a five-vertex cloud") {
  const auto a = quasiq::step1_add_apex(quasiq::cycle_graph(5));
  const auto c = quasiq::step2_cloud(a, 11);
  REQUIRE(c.n_prime == 5);
  REQUIRE(c.cg.g.n == 10);
  // |E''| = |E'| + |V'| inequality edges plus the equality expander.
  REQUIRE(count_tag(c.cg, EdgeTag::kInequality) == 5 + 5);
  REQUIRE(count_tag(c.cg, EdgeTag::kEquality) == 7);  // (3,3,3,3,2)/2
  REQUIRE(c.cross.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) REQUIRE(c.cross[i] == Edge{i, 5 + i});

  const auto deg = quasiq::degrees(c.cg.g);
  for (std::size_t wv = 5; wv < 10; ++wv) REQUIRE(deg[wv] <= 4);  // <= 3 + cross

  // Tagged colorings of the cloud graph biject with wheel colorings.
  std::size_t tagged = 0;
  for_each_coloring(c.cg.g.n, 4, [&](const Assignment& x) {
    if (cg_proper(c.cg, x)) ++tagged;
  });
  std::size_t wheel = 0;
  for_each_coloring(a.g.n, 4, [&](const Assignment& x) {
    if (quasiq::is_proper_coloring(a.g, x, 4)) ++wheel;
  });
  REQUIRE(tagged == wheel);
  REQUIRE(wheel == 120);  // 4 hub colors x 30 rim 3-colorings
}

TEST_CASE("step3: gadget counts and the lifted witness for the cycle chain") {
  const Graph g3 = quasiq::cycle_graph(5);
  const auto a = quasiq::step1_add_apex(g3);
  const auto c = quasiq::step2_cloud(a, 11);
  const auto s = quasiq::step3_equality_gadget_4color(c);

  REQUIRE(s.gadgets.size() == 7);
  std::size_t nv = 0, nw = 0, nt = 0;
  for (char cl : s.vertex_class) {
    nv += (cl == 'V');
    nw += (cl == 'W');
    nt += (cl == 'T');
  }
  REQUIRE(nv == 5);
  REQUIRE(nw == 5);
  REQUIRE(nt == 21);
  REQUIRE(2 * nt <= 9 * nv);  // |T| <= 9|V'|/2
  REQUIRE(s.g.n == 31);
  REQUIRE(s.g.edges.size() == 73);
  REQUIRE(s.g.edges.size() <= 9 * (5 + 5 + 7));  // |E| <= 9 |E'''|
  REQUIRE(s.gprime_edges == quasiq::cycle_graph(5).edges);
  REQUIRE(s.cross_edges == c.cross);
  REQUIRE(max_degree(s.g) == 10);  // W: 1 cross + 3 per incident gadget

  // 3-coloring of the cycle -> 4-coloring witness of the final graph.
  Assignment w = quasiq::lift_coloring("01012", a.lift);
  w = quasiq::lift_coloring(w, c.lift);
  w = quasiq::lift_coloring(w, s.lift);
  REQUIRE(w.size() == s.g.n);
  for (std::size_t wv = 5; wv < 10; ++wv) REQUIRE(w[wv] == '3');
  REQUIRE(quasiq::violations(s.g, w, 4) == 0);
}

TEST_CASE("full chain witness for a bipartite instance with big degrees") {
  Graph g;
  g.n = 8;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t l = 2; l < 8; ++l) g.add_edge(c, l);

  std::vector<LiftStage> lifts;
  const ConstraintGraph dr = quasiq::degree_reduce(g, 4, 5, &lifts);
  const auto a = quasiq::step1_add_apex(dr.g);
  const auto c = quasiq::step2_cloud(a, 9);
  const auto s = quasiq::step3_equality_gadget_4color(c);

  lifts.push_back(a.lift);
  lifts.push_back(c.lift);
  lifts.push_back(s.lift);
  const Assignment w = quasiq::apply_lifts("00111111", lifts);
  REQUIRE(w.size() == s.g.n);
  REQUIRE(quasiq::violations(s.g, w, 4) == 0);
}

TEST_CASE("third-kind classifier accepts subdivided shapes") {
  // Path on 3 vertices: a subdivided single edge.
  auto cls = quasiq::classify_third_kind(quasiq::path_graph(3));
  REQUIRE(cls.has_value());
  REQUIRE(cls->j.n == 2);
  REQUIRE(cls->j.edges.size() == 1);
  REQUIRE(cls->flags == std::vector<char>{0});

  // Claw: a subdivided edge whose mid carries a pendant.
  Graph claw;
  claw.n = 4;
  claw.add_edge(0, 1);
  claw.add_edge(1, 2);
  claw.add_edge(1, 3);
  cls = quasiq::classify_third_kind(claw);
  REQUIRE(cls.has_value());
  REQUIRE(cls->j.edges.size() == 1);
  REQUIRE(cls->flags == std::vector<char>{1});
  REQUIRE(cls->layout_to_comp == std::vector<std::size_t>{0, 2, 1, 3});

  // Path on 5 vertices: a subdivided 2-edge path.
  cls = quasiq::classify_third_kind(quasiq::path_graph(5));
  REQUIRE(cls.has_value());
  REQUIRE(cls->j.n == 3);
  REQUIRE(cls->j.edges.size() == 2);

  // C6: a subdivided triangle.
  cls = quasiq::classify_third_kind(quasiq::cycle_graph(6));
  REQUIRE(cls.has_value());
  REQUIRE(cls->j.edges == quasiq::complete_graph(3).edges);
  REQUIRE(cls->flags == std::vector<char>(3, 0));
}

TEST_CASE("third-kind classifier rejects non-subdivided shapes") {
  // Single edge and 3-edge path: odd edge counts cannot alternate mid/end.
  REQUIRE_FALSE(quasiq::classify_third_kind(quasiq::path_graph(2)).has_value());
  REQUIRE_FALSE(quasiq::classify_third_kind(quasiq::path_graph(4)).has_value());

  // C4 would need two mids over the same skeleton pair (a multi-edge).
  REQUIRE_FALSE(quasiq::classify_third_kind(quasiq::cycle_graph(4)).has_value());

  // Odd cycles are not bipartite.
  REQUIRE_FALSE(quasiq::classify_third_kind(quasiq::cycle_graph(5)).has_value());

  // Spider: a 3-edge path with an extra pendant at an inner vertex.
  Graph spider = quasiq::path_graph(4);
  spider.n = 5;
  spider.add_edge(1, 4);
  REQUIRE_FALSE(quasiq::classify_third_kind(spider).has_value());
}

TEST_CASE("edge_3split: K5 and C6 audited exhaustively") {
  for (const Graph& g : {quasiq::complete_graph(5), quasiq::cycle_graph(6)}) {
    const auto parts = quasiq::edge_3split(g);
    std::vector<Edge> all;
    for (const auto& p : parts) {
      all.insert(all.end(), p.begin(), p.end());
      Graph pg;
      pg.n = g.n;
      for (const auto& [u, v] : p) pg.add_edge(u, v);
      REQUIRE(max_degree(pg) <= 2);
    }
    std::sort(all.begin(), all.end());
    REQUIRE(all == g.edges);
    REQUIRE(parts[2].empty());  // the Euler walk only ever uses two colors
  }
  REQUIRE_THROWS_AS(quasiq::edge_3split(star_graph(5)), std::invalid_argument);
}

TEST_CASE("edge_3split: random degree-<=4 graphs keep the degree bound") {
  quasiq::Rng rng(414);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 4 + rng.below(8);
    Graph g;
    g.n = n;
    std::vector<std::size_t> deg(n, 0);
    for (int tries = 0; tries < 60; ++tries) {
      const std::size_t u = rng.below(n), v = rng.below(n);
      if (u == v || deg[u] >= 4 || deg[v] >= 4) continue;
      if (g.has_edge(u, v)) continue;
      g.add_edge(u, v);
      ++deg[u];
      ++deg[v];
    }
    const auto parts = quasiq::edge_3split(g);
    std::vector<Edge> all;
    for (const auto& p : parts) {
      all.insert(all.end(), p.begin(), p.end());
      Graph pg;
      pg.n = n;
      for (const auto& [u, v] : p) pg.add_edge(u, v);
      REQUIRE(max_degree(pg) <= 2);
    }
    std::sort(all.begin(), all.end());
    REQUIRE(all == g.edges);
  }
}

TEST_CASE("decompose3 on the cycle chain returns three certified parts") {
  const auto s = chain_of(quasiq::cycle_graph(5), 11);
  const auto d = quasiq::decompose3(s, 0);
  REQUIRE(d.graph.edges == s.g.edges);
  audit_decomposition(s, d);
  for (const auto& sol : d.solutions) REQUIRE(sol.graph.n == s.g.n);
}

TEST_CASE("decompose3 handles the even-cycle chain (3-regular cloud)") {
  const auto s = chain_of(quasiq::cycle_graph(6), 4);
  const auto d = quasiq::decompose3(s, 1);
  audit_decomposition(s, d);
}

TEST_CASE("decompose3 handles the K4 chain (complete-graph cloud)") {
  const auto s = chain_of(quasiq::complete_graph(4), 2);
  const auto d = quasiq::decompose3(s, 0);
  audit_decomposition(s, d);
}

TEST_CASE("decompose3 handles a unicyclic instance") {
  Graph g;  // triangle with a tail
  g.n = 4;
  g.add_edge(0, 1);
  g.add_edge(0, 2);
  g.add_edge(1, 2);
  g.add_edge(0, 3);
  const auto s = chain_of(g, 6);
  const auto d = quasiq::decompose3(s, 0);
  audit_decomposition(s, d);
}

TEST_CASE("decompose3 reports honestly when G' is a tree") {
  // A tree has |V'| - 1 edges: the odd-path count can never reach |V'|, so
  // no admissible split exists and the failure names the obstruction.
  const auto s = chain_of(quasiq::path_graph(4), 3);
  REQUIRE_THROWS_WITH(quasiq::decompose3(s, 0),
                      Catch::Matchers::ContainsSubstring("no admissible 3-split"));
}

// ---------------------------------------------------------------------------
// Full pipeline: 3-coloring instance -> scapegoat Hamiltonian + witness.
// ---------------------------------------------------------------------------

TEST_CASE("full_pipeline on the 5-cycle yields an accepted low-energy witness") {
  const double xi = 0.2;
  const auto r = quasiq::full_pipeline(quasiq::cycle_graph(5), xi, 0);

  // Size bookkeeping (G' = C_5: 5 originals + 5 cloud + 21 gadget vertices).
  REQUIRE(r.decomposition.graph.n == 31);
  REQUIRE(r.decomposition.graph.edges.size() == 73);
  REQUIRE(r.hamiltonian.n == 34);
  REQUIRE(r.hamiltonian.k == 3);
  REQUIRE(r.hamiltonian.terms.size() == 74);
  CHECK(r.report.lh_scale == Catch::Approx(73.0 * (xi + 1.0 / 6.0)).margin(1e-9));
  CHECK(r.report.soundness_floor == Catch::Approx(xi * 73.0).margin(1e-12));
  CHECK(r.report.lambda_min > 0.0);
  CHECK(r.report.removed_isolated == 0);
  CHECK(r.report.ratio_ok);

  // Stage audits: input and small intermediate stages enumerable and
  // 3-/4-colorable; the final 31-vertex graph is beyond the 1e7 guard.
  REQUIRE(r.report.stages.size() == 4);
  CHECK(r.report.stages[0].stage == "input");
  CHECK(r.report.stages[0].enumerable);
  CHECK(r.report.stages[0].min_violations == 0);
  CHECK(r.report.stages[1].enumerable);       // degree-reduced C_5 = C_5
  CHECK(r.report.stages[1].min_violations == 0);
  CHECK(r.report.stages[2].enumerable);       // apex graph: wheel W_5, 4 colors
  CHECK(r.report.stages[2].min_violations == 0);
  CHECK(r.report.stages[3].stage == "final");
  CHECK_FALSE(r.report.stages[3].enumerable);

  // The lifted witness is a machine-checked proper 4-coloring.
  REQUIRE(r.report.has_witness);
  REQUIRE(r.report.witness4.size() == 31);
  CHECK(quasiq::violations(r.decomposition.graph, r.report.witness4, 4) == 0);

  // X_low built from the witness sits exactly at xi|E|(1 - eps*delta).
  const double eps = 1.0 / 40.0;
  const double delta = r.report.lambda_min / 10.0;
  const auto xlow = quasiq::build_xlow_source(r.decomposition, r.report.witness4, eps, delta);
  REQUIRE(xlow->sites() == 34);
  const double e = quasiq::energy(r.hamiltonian, *xlow, quasiq::build_sic_basis()).energy;
  CHECK(e == Catch::Approx(xi * 73.0 * (1.0 - eps * delta)).margin(1e-8));
  CHECK(e < r.report.soundness_floor);  // strictly below the soundness floor

  // Spot-check quasi-quantum validity on random 3-site marginals (the full
  // C(34,3) sweep runs in the acceptance binary).  Every subset is PSD
  // except the scapegoat triple itself, which carries the construction's
  // intrinsic -4*eps*delta defect (see the X_low tests for the derivation).
  const auto sic = quasiq::build_sic_basis();
  quasiq::Rng rng(2026);
  for (int trial = 0; trial < 40; ++trial) {
    std::set<std::size_t> pick;
    while (pick.size() < 3) pick.insert(rng.below(34));
    const std::vector<std::size_t> sites(pick.begin(), pick.end());
    if (sites == std::vector<std::size_t>{31, 32, 33}) continue;
    const auto x = quasiq::dual_operator_of_table(xlow->table(sites), 3, sic);
    CHECK(quasiq::min_eigenvalue(x) >= -1e-9);
  }
  const auto triple =
      quasiq::dual_operator_of_table(xlow->table({31, 32, 33}), 3, sic);
  CHECK(quasiq::min_eigenvalue(triple) ==
        Catch::Approx(-4.0 * eps * delta).margin(1e-12));

  // The explicit form is rightly refused at this size.
  CHECK_THROWS_AS(quasiq::build_xlow(r.decomposition, r.report.witness4, eps, delta),
                  std::invalid_argument);
}

TEST_CASE("full_pipeline on K_4 records the violation at every enumerable stage") {
  const auto r = quasiq::full_pipeline(quasiq::complete_graph(4), 0.2, 3);

  REQUIRE(r.report.stages.size() == 4);
  CHECK(r.report.stages[0].enumerable);
  CHECK(r.report.stages[0].min_violations == 1);  // K_4 is not 3-colorable
  CHECK(r.report.stages[1].enumerable);
  CHECK(r.report.stages[1].min_violations == 1);  // degrees <= 4: unchanged
  CHECK(r.report.stages[2].enumerable);
  CHECK(r.report.stages[2].min_violations == 1);  // apex graph K_5, 4 colors
  CHECK_FALSE(r.report.stages[3].enumerable);     // 26 vertices
  CHECK_FALSE(r.report.has_witness);

  REQUIRE(r.decomposition.graph.n == 26);
  REQUIRE(r.decomposition.graph.edges.size() == 64);
  REQUIRE(r.hamiltonian.n == 29);
  CHECK(r.report.lambda_min > 0.0);
  CHECK(quasiq::scale(r.hamiltonian) ==
        Catch::Approx(64.0 * (0.2 + 1.0 / 6.0)).margin(1e-9));
}

TEST_CASE("full_pipeline on the empty graph is the trivial instance") {
  const auto r = quasiq::full_pipeline(Graph{}, 0.5, 0);

  REQUIRE(r.decomposition.graph.n == 0);
  REQUIRE(r.decomposition.graph.edges.empty());
  for (const auto& part : r.decomposition.parts) CHECK(part.empty());
  for (const auto& sol : r.decomposition.solutions) {
    REQUIRE(sol.source);
    CHECK(sol.lambda_achieved == Catch::Approx(0.25));
  }

  REQUIRE(r.hamiltonian.n == 3);
  REQUIRE(r.hamiltonian.terms.size() == 1);  // zero-weight scapegoat term
  CHECK(quasiq::scale(r.hamiltonian) == Catch::Approx(0.0).margin(1e-15));
  CHECK(r.report.soundness_floor == 0.0);

  REQUIRE(r.report.has_witness);
  CHECK(r.report.witness4.empty());

  // The energy-zero witness: X_low degenerates to scapegoat tails only, and
  // the tail mixture alone exhibits the -4*eps*delta scapegoat-triple defect.
  const auto xlow = quasiq::build_xlow(r.decomposition, "", 1.0 / 40.0, 0.025);
  REQUIRE(xlow.n == 3);
  CHECK(quasiq::energy(r.hamiltonian, xlow, quasiq::build_sic_basis()).energy ==
        Catch::Approx(0.0).margin(1e-12));
  const auto cert = quasiq::is_k_local_qq(xlow, 3, 1e-9);
  CHECK_FALSE(cert.valid);
  REQUIRE(cert.violations.size() == 1);
  CHECK(cert.violations[0].first == std::vector<std::size_t>{0, 1, 2});
  CHECK(cert.violations[0].second ==
        Catch::Approx(-4.0 * (1.0 / 40.0) * 0.025).margin(1e-12));

  const auto src = quasiq::build_xlow_source(r.decomposition, "", 1.0 / 40.0, 0.025);
  CHECK(quasiq::energy(r.hamiltonian, *src, quasiq::build_sic_basis()).energy ==
        Catch::Approx(0.0).margin(1e-12));
}
