#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace stcar {

// Areal adjacency graph with binary symmetric structure, zero diagonal and
// no isolated areas. Immutable after construction; safe to share across
// chains.
struct AreaGraph {
  int n_areas = 0;
  // sorted neighbour lists; symmetric by construction
  std::vector<std::vector<int>> neighbors;
  bool connected = true;

  int degree(int i) const { return static_cast<int>(neighbors[i].size()); }
  bool adjacent(int i, int k) const;
  long long total_adjacency() const;  // 1'W1 = sum of all w_ik
};

AreaGraph build_area_graph(const std::vector<std::pair<int, int>>& pairs,
                           int n_areas);

// Rook-adjacency grid graph used as the simulation substrate.
AreaGraph build_lattice(int nrow, int ncol);

// Enumerated borders in canonical lexicographic order (i < k). All edge
// weight vectors are indexed against this order.
struct EdgeSet {
  std::vector<std::pair<int, int>> edges;

  int count() const { return static_cast<int>(edges.size()); }
  // index of edge {i,k}, or -1 when not present
  int find(int i, int k) const;
};

EdgeSet build_edge_set(const AreaGraph& g);

// Border-to-border adjacency: two borders are adjacent when they share an
// endpoint area. Backs the clustered prior on the boundary weights.
struct EdgeGraph {
  int n_edges = 0;
  std::vector<std::vector<int>> neighbors;  // sorted, symmetric

  int degree(int e) const { return static_cast<int>(neighbors[e].size()); }
  // view as an area graph over edges, so precision builders apply directly
  AreaGraph as_area_graph() const;
};

EdgeGraph build_edge_graph(const EdgeSet& es);

// Geometric edge adjacency supplied as explicit pairs of canonical edge
// indices, for study regions where the shared-endpoint rule is not wanted.
EdgeGraph build_edge_graph_from_pairs(
    const std::vector<std::pair<int, int>>& pairs, int n_edges);

}  // namespace stcar
