#include "stcar/graph.hpp"

#include <algorithm>
#include <string>

#include "stcar/error.hpp"

namespace stcar {

bool AreaGraph::adjacent(int i, int k) const {
  const auto& nb = neighbors[i];
  return std::binary_search(nb.begin(), nb.end(), k);
}

long long AreaGraph::total_adjacency() const {
  long long s = 0;
  for (const auto& nb : neighbors) s += static_cast<long long>(nb.size());
  return s;
}

namespace {

bool graph_is_connected(const std::vector<std::vector<int>>& nb, int n) {
  if (n == 0) return true;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : nb[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

}  // namespace

AreaGraph build_area_graph(const std::vector<std::pair<int, int>>& pairs,
                           int n_areas) {
  if (n_areas < 1) throw_value("build_area_graph: n_areas must be >= 1");
  std::vector<std::vector<int>> nb(n_areas);
  for (const auto& [a, b] : pairs) {
    if (a < 0 || a >= n_areas || b < 0 || b >= n_areas)
      throw_value("build_area_graph: area index out of range: (" +
                  std::to_string(a) + "," + std::to_string(b) + ")");
    if (a == b)
      throw_value("build_area_graph: self-loop at area " + std::to_string(a));
    nb[a].push_back(b);
    nb[b].push_back(a);
  }
  for (int i = 0; i < n_areas; ++i) {
    auto& v = nb[i];
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    if (v.empty())
      throw_value("build_area_graph: isolated area " + std::to_string(i));
  }
  AreaGraph g;
  g.n_areas = n_areas;
  g.connected = graph_is_connected(nb, n_areas);
  g.neighbors = std::move(nb);
  return g;
}

AreaGraph build_lattice(int nrow, int ncol) {
  if (nrow < 1 || ncol < 1 || static_cast<long long>(nrow) * ncol < 2)
    throw_value("build_lattice: need nrow,ncol >= 1 and at least 2 cells");
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(2) * nrow * ncol);
  auto id = [ncol](int r, int c) { return r * ncol + c; };
  for (int r = 0; r < nrow; ++r)
    for (int c = 0; c < ncol; ++c) {
      if (c + 1 < ncol) pairs.emplace_back(id(r, c), id(r, c + 1));
      if (r + 1 < nrow) pairs.emplace_back(id(r, c), id(r + 1, c));
    }
  return build_area_graph(pairs, nrow * ncol);
}

int EdgeSet::find(int i, int k) const {
  if (i > k) std::swap(i, k);
  const auto it = std::lower_bound(edges.begin(), edges.end(),
                                   std::make_pair(i, k));
  if (it == edges.end() || *it != std::make_pair(i, k)) return -1;
  return static_cast<int>(it - edges.begin());
}

EdgeSet build_edge_set(const AreaGraph& g) {
  EdgeSet es;
  for (int i = 0; i < g.n_areas; ++i)
    for (int k : g.neighbors[i])
      if (i < k) es.edges.emplace_back(i, k);
  // lexicographic already, by construction of the loops
  return es;
}

AreaGraph EdgeGraph::as_area_graph() const {
  AreaGraph g;
  g.n_areas = n_edges;
  g.neighbors = neighbors;
  g.connected = true;  // not tracked for the edge graph
  return g;
}

EdgeGraph build_edge_graph(const EdgeSet& es) {
  const int ne = es.count();
  // group edges by endpoint; all pairs incident to a common area are adjacent
  int max_area = 0;
  for (const auto& [i, k] : es.edges) max_area = std::max(max_area, k);
  std::vector<std::vector<int>> by_area(max_area + 1);
  for (int e = 0; e < ne; ++e) {
    by_area[es.edges[e].first].push_back(e);
    by_area[es.edges[e].second].push_back(e);
  }
  std::vector<std::vector<int>> nb(ne);
  for (const auto& inc : by_area)
    for (std::size_t a = 0; a < inc.size(); ++a)
      for (std::size_t b = a + 1; b < inc.size(); ++b) {
        nb[inc[a]].push_back(inc[b]);
        nb[inc[b]].push_back(inc[a]);
      }
  for (auto& v : nb) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  EdgeGraph eg;
  eg.n_edges = ne;
  eg.neighbors = std::move(nb);
  return eg;
}

EdgeGraph build_edge_graph_from_pairs(
    const std::vector<std::pair<int, int>>& pairs, int n_edges) {
  if (n_edges < 1) throw_value("build_edge_graph_from_pairs: empty edge set");
  std::vector<std::vector<int>> nb(n_edges);
  for (const auto& [a, b] : pairs) {
    if (a < 0 || a >= n_edges || b < 0 || b >= n_edges)
      throw_value("edge-adjacency index out of range: (" + std::to_string(a) +
                  "," + std::to_string(b) + ")");
    if (a == b)
      throw_value("edge-adjacency self-pair at edge " + std::to_string(a));
    nb[a].push_back(b);
    nb[b].push_back(a);
  }
  for (auto& v : nb) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  EdgeGraph eg;
  eg.n_edges = n_edges;
  eg.neighbors = std::move(nb);
  return eg;
}

}  // namespace stcar
