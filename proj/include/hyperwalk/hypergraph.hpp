#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hyperwalk/error.hpp"

namespace hyperwalk {

using VertexId = std::uint32_t;
using HyperedgeId = std::uint32_t;

/// Immutable hypergraph in compressed incidence form.
///
/// Hyperedge members and per-vertex incidence lists are both stored as
/// sorted id arrays, so iteration order is deterministic.
class Hypergraph {
 public:
  Hypergraph() = default;

  /// Validates and indexes `hyperedges` over vertices 0..n_vertices-1.
  /// Member order inside a hyperedge is not significant.
  static Hypergraph build(const std::vector<std::vector<VertexId>>& hyperedges,
                          std::size_t n_vertices) {
    if (n_vertices == 0) fail(ErrorCategory::invalid_argument, "hypergraph needs at least one vertex");
    Hypergraph h;
    h.n_vertices_ = n_vertices;
    h.edge_offsets_.reserve(hyperedges.size() + 1);
    h.edge_offsets_.push_back(0);
    std::vector<VertexId> scratch;
    for (std::size_t e = 0; e < hyperedges.size(); ++e) {
      scratch = hyperedges[e];
      if (scratch.empty()) {
        fail(ErrorCategory::invalid_argument, "hyperedge " + std::to_string(e) + " is empty");
      }
      std::sort(scratch.begin(), scratch.end());
      if (scratch.back() >= n_vertices) {
        fail(ErrorCategory::invalid_argument,
             "hyperedge " + std::to_string(e) + " references vertex " +
                 std::to_string(scratch.back()) + " but n_vertices is " + std::to_string(n_vertices));
      }
      if (std::adjacent_find(scratch.begin(), scratch.end()) != scratch.end()) {
        fail(ErrorCategory::invalid_argument, "hyperedge " + std::to_string(e) + " has duplicate members");
      }
      h.edge_members_.insert(h.edge_members_.end(), scratch.begin(), scratch.end());
      h.edge_offsets_.push_back(h.edge_members_.size());
    }
    h.build_incidence();
    return h;
  }

  std::size_t num_vertices() const noexcept { return n_vertices_; }
  std::size_t num_hyperedges() const noexcept { return edge_offsets_.empty() ? 0 : edge_offsets_.size() - 1; }
  std::size_t num_incidences() const noexcept { return edge_members_.size(); }

  std::span<const VertexId> members(HyperedgeId e) const {
    return {edge_members_.data() + edge_offsets_[e], edge_members_.data() + edge_offsets_[e + 1]};
  }
  std::size_t cardinality(HyperedgeId e) const { return edge_offsets_[e + 1] - edge_offsets_[e]; }

  std::span<const HyperedgeId> incident(VertexId v) const {
    return {vertex_edges_.data() + vertex_offsets_[v], vertex_edges_.data() + vertex_offsets_[v + 1]};
  }
  std::size_t degree(VertexId v) const { return vertex_offsets_[v + 1] - vertex_offsets_[v]; }

  bool contains(HyperedgeId e, VertexId v) const {
    auto m = members(e);
    return std::binary_search(m.begin(), m.end(), v);
  }

  std::vector<VertexId> isolated_vertices() const {
    std::vector<VertexId> out;
    for (std::size_t v = 0; v < n_vertices_; ++v) {
      if (degree(static_cast<VertexId>(v)) == 0) out.push_back(static_cast<VertexId>(v));
    }
    return out;
  }

  std::vector<std::vector<VertexId>> hyperedge_lists() const {
    std::vector<std::vector<VertexId>> out(num_hyperedges());
    for (std::size_t e = 0; e < out.size(); ++e) {
      auto m = members(static_cast<HyperedgeId>(e));
      out[e].assign(m.begin(), m.end());
    }
    return out;
  }

  /// Transposed hypergraph: input hyperedge k becomes dual vertex k and input
  /// vertex k becomes dual hyperedge k.
  Hypergraph dual() const {
    if (auto isolated = isolated_vertices(); !isolated.empty()) {
      fail(ErrorCategory::invalid_argument,
           "cannot build dual: vertex " + std::to_string(isolated.front()) +
               " belongs to no hyperedge (" + std::to_string(isolated.size()) + " isolated in total)");
    }
    if (num_hyperedges() == 0) fail(ErrorCategory::invalid_argument, "cannot build dual of a hypergraph without hyperedges");
    // Incidence lists are already sorted, so the transpose is a relabelling.
    Hypergraph d;
    d.n_vertices_ = num_hyperedges();
    d.edge_offsets_ = vertex_offsets_;
    d.edge_members_ = vertex_edges_;
    d.vertex_offsets_ = edge_offsets_;
    d.vertex_edges_ = edge_members_;
    return d;
  }

  /// True iff the bipartite vertex/hyperedge incidence graph is connected.
  bool is_connected() const {
    const std::size_t n = n_vertices_, m = num_hyperedges();
    if (n + m == 0) return true;
    std::vector<char> seen_v(n, 0), seen_e(m, 0);
    std::vector<std::size_t> stack{0};  // bipartite node ids: vertices first, then hyperedges
    seen_v[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      if (node < n) {
        for (HyperedgeId e : incident(static_cast<VertexId>(node))) {
          if (!seen_e[e]) { seen_e[e] = 1; ++reached; stack.push_back(n + e); }
        }
      } else {
        for (VertexId v : members(static_cast<HyperedgeId>(node - n))) {
          if (!seen_v[v]) { seen_v[v] = 1; ++reached; stack.push_back(v); }
        }
      }
    }
    return reached == n + m;
  }

  friend bool operator==(const Hypergraph& a, const Hypergraph& b) {
    return a.n_vertices_ == b.n_vertices_ && a.edge_offsets_ == b.edge_offsets_ &&
           a.edge_members_ == b.edge_members_;
  }

 private:
  void build_incidence() {
    vertex_offsets_.assign(n_vertices_ + 1, 0);
    for (VertexId v : edge_members_) ++vertex_offsets_[v + 1];
    for (std::size_t v = 0; v < n_vertices_; ++v) vertex_offsets_[v + 1] += vertex_offsets_[v];
    vertex_edges_.resize(edge_members_.size());
    std::vector<std::size_t> cursor(vertex_offsets_.begin(), vertex_offsets_.end() - 1);
    // Hyperedges visited in increasing order, so each incidence list comes out sorted.
    for (std::size_t e = 0; e + 1 < edge_offsets_.size(); ++e) {
      for (std::size_t i = edge_offsets_[e]; i < edge_offsets_[e + 1]; ++i) {
        vertex_edges_[cursor[edge_members_[i]]++] = static_cast<HyperedgeId>(e);
      }
    }
  }

  std::size_t n_vertices_ = 0;
  std::vector<std::size_t> edge_offsets_;
  std::vector<VertexId> edge_members_;
  std::vector<std::size_t> vertex_offsets_;
  std::vector<HyperedgeId> vertex_edges_;
};

// Canonical file: one hyperedge per line, space separated vertex ids; line
// number is the hyperedge id.

inline void write_hypergraph(std::ostream& out, const Hypergraph& h) {
  for (std::size_t e = 0; e < h.num_hyperedges(); ++e) {
    bool first = true;
    for (VertexId v : h.members(static_cast<HyperedgeId>(e))) {
      if (!first) out << ' ';
      out << v;
      first = false;
    }
    out << '\n';
  }
}

/// Reads the canonical format. Without `n_vertices` the universe is
/// max id + 1.
inline Hypergraph read_hypergraph(std::istream& in, std::optional<std::size_t> n_vertices = std::nullopt) {
  std::vector<std::vector<VertexId>> edges;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_id = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<VertexId> members;
    long long id = 0;
    while (fields >> id) {
      if (id < 0 || id > static_cast<long long>(UINT32_MAX)) {
        fail(ErrorCategory::data_format, "hypergraph line " + std::to_string(line_no) + ": vertex id out of range");
      }
      members.push_back(static_cast<VertexId>(id));
      max_id = std::max<std::size_t>(max_id, static_cast<std::size_t>(id));
    }
    if (!fields.eof()) {
      fail(ErrorCategory::data_format, "hypergraph line " + std::to_string(line_no) + ": malformed vertex id");
    }
    if (members.empty()) {
      fail(ErrorCategory::data_format, "hypergraph line " + std::to_string(line_no) + ": empty hyperedge");
    }
    edges.push_back(std::move(members));
  }
  return Hypergraph::build(edges, n_vertices.value_or(edges.empty() ? 1 : max_id + 1));
}

}  // namespace hyperwalk
