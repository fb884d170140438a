#include <random>

#include "doctest.h"
#include "stcar/error.hpp"
#include "stcar/graph.hpp"
#include "test_support.hpp"

using namespace stcar;

TEST_CASE("path graph construction and degrees") {
  const AreaGraph g = build_area_graph({{0, 1}, {1, 2}}, 3);
  CHECK(g.n_areas == 3);
  CHECK(g.degree(0) == 1);
  CHECK(g.degree(1) == 2);
  CHECK(g.degree(2) == 1);
  CHECK(g.adjacent(0, 1));
  CHECK(g.adjacent(1, 0));
  CHECK_FALSE(g.adjacent(0, 2));
}

TEST_CASE("duplicate and reversed pairs deduplicate") {
  const AreaGraph g = build_area_graph({{0, 1}, {1, 0}}, 2);
  CHECK(g.degree(0) == 1);
  CHECK(build_edge_set(g).count() == 1);
}

TEST_CASE("2x2 rook lattice") {
  const AreaGraph g = build_lattice(2, 2);
  for (int i = 0; i < 4; ++i) CHECK(g.degree(i) == 2);
  CHECK(build_edge_set(g).count() == 4);
}

TEST_CASE("construction errors") {
  CHECK_THROWS_AS(build_area_graph({{0, 3}}, 3), Error);
  CHECK_THROWS_AS(build_area_graph({{1, 1}}, 3), Error);
  // node 2 isolated
  CHECK_THROWS_AS(build_area_graph({{0, 1}}, 3), Error);
  CHECK_THROWS_AS(build_lattice(1, 1), Error);
  CHECK_THROWS_AS(build_lattice(0, 5), Error);
}

TEST_CASE("edge set canonical order and counts") {
  const AreaGraph path = build_area_graph({{0, 1}, {1, 2}}, 3);
  const EdgeSet es = build_edge_set(path);
  REQUIRE(es.count() == 2);
  CHECK(es.edges[0] == std::pair<int, int>{0, 1});
  CHECK(es.edges[1] == std::pair<int, int>{1, 2});
  CHECK(es.find(2, 1) == 1);
  CHECK(es.find(0, 2) == -1);

  const AreaGraph k4 = build_area_graph(
      {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}, 4);
  CHECK(build_edge_set(k4).count() == 6);
}

TEST_CASE("lattice edge count matches enumeration oracle") {
  // oracle: count horizontal + vertical adjacencies directly
  auto enumerate = [](int nr, int nc) {
    int c = 0;
    for (int r = 0; r < nr; ++r)
      for (int k = 0; k < nc; ++k) {
        if (k + 1 < nc) ++c;
        if (r + 1 < nr) ++c;
      }
    return c;
  };
  for (auto [nr, nc] : {std::pair{1, 2}, {2, 2}, {10, 10}, {4, 7}}) {
    const AreaGraph g = build_lattice(nr, nc);
    CHECK(build_edge_set(g).count() == enumerate(nr, nc));
  }
  CHECK(build_edge_set(build_lattice(10, 10)).count() == 180);
}

TEST_CASE("edge set re-expansion reproduces adjacency") {
  std::mt19937_64 gen(991);
  for (int rep = 0; rep < 20; ++rep) {
    const AreaGraph g = oracle::random_graph(2 + rep, 0.8, gen);
    const EdgeSet es = build_edge_set(g);
    CHECK(2 * es.count() == g.total_adjacency());
    const AreaGraph back = build_area_graph(es.edges, g.n_areas);
    CHECK(back.neighbors == g.neighbors);
  }
}

TEST_CASE("edge graph shared-endpoint rule") {
  const AreaGraph path = build_area_graph({{0, 1}, {1, 2}}, 3);
  const EdgeGraph eg = build_edge_graph(build_edge_set(path));
  REQUIRE(eg.n_edges == 2);
  CHECK(eg.neighbors[0] == std::vector<int>{1});

  // star: all leaf edges pairwise adjacent through the hub
  const AreaGraph star = build_area_graph({{0, 1}, {0, 2}, {0, 3}}, 4);
  const EdgeGraph st = build_edge_graph(build_edge_set(star));
  for (int e = 0; e < 3; ++e) CHECK(st.degree(e) == 2);

  // disjoint edges are not adjacent
  const AreaGraph two = build_area_graph({{0, 1}, {2, 3}}, 4);
  const EdgeGraph tg = build_edge_graph(build_edge_set(two));
  CHECK(tg.degree(0) == 0);
  CHECK(tg.degree(1) == 0);
}

TEST_CASE("edge graph degree identity (deg(i)-1)+(deg(k)-1)") {
  std::mt19937_64 gen(2024);
  for (int rep = 0; rep < 15; ++rep) {
    const AreaGraph g = oracle::random_graph(4 + rep, 0.7, gen);
    const EdgeSet es = build_edge_set(g);
    const EdgeGraph eg = build_edge_graph(es);
    for (int e = 0; e < es.count(); ++e) {
      const auto [i, k] = es.edges[e];
      CHECK(eg.degree(e) == g.degree(i) - 1 + g.degree(k) - 1);
    }
  }
}

TEST_CASE("explicit edge adjacency ingestion") {
  const EdgeGraph eg = build_edge_graph_from_pairs({{0, 2}, {2, 1}}, 3);
  CHECK(eg.degree(2) == 2);
  CHECK(eg.degree(0) == 1);
  CHECK_THROWS_AS(build_edge_graph_from_pairs({{0, 3}}, 3), Error);
  CHECK_THROWS_AS(build_edge_graph_from_pairs({{1, 1}}, 3), Error);
}
