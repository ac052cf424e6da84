#pragma once

#include <vector>

#include "hyperwalk/hypergraph.hpp"
#include "hyperwalk/rng.hpp"

namespace hyperwalk::test {

/// Random hypergraph with n <= max_n vertices and m <= max_m hyperedges.
/// With `cover`, every vertex lands in at least one hyperedge.
inline Hypergraph random_hypergraph(Rng& rng, std::size_t max_n, std::size_t max_m, bool cover) {
  const std::size_t n = 1 + rng.index(max_n);
  const std::size_t m = 1 + rng.index(max_m);
  std::vector<std::vector<VertexId>> edges(m);
  for (auto& e : edges) {
    const std::size_t card = 1 + rng.index(std::min<std::size_t>(n, 8));
    std::vector<bool> used(n, false);
    while (e.size() < card) {
      auto v = static_cast<VertexId>(rng.index(n));
      if (!used[v]) {
        used[v] = true;
        e.push_back(v);
      }
    }
  }
  if (cover) {
    for (std::size_t v = 0; v < n; ++v) {
      bool seen = false;
      for (const auto& e : edges) seen = seen || std::find(e.begin(), e.end(), v) != e.end();
      if (!seen) edges[rng.index(m)].push_back(static_cast<VertexId>(v));
    }
  }
  return Hypergraph::build(edges, n);
}

}  // namespace hyperwalk::test
