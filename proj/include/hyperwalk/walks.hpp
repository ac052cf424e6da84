#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hyperwalk/error.hpp"
#include "hyperwalk/hypergraph.hpp"
#include "hyperwalk/rng.hpp"

namespace hyperwalk {

using Token = std::uint32_t;

struct WalkConfig {
  double alpha = 1.0;
  double beta = 0.1;
  std::size_t walks_per_start = 25;
  std::size_t walk_length = 25;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;

  void validate() const {
    require(alpha >= 0.0, "walk alpha must be >= 0");
    require(beta >= 0.0, "walk beta must be >= 0");
    require(walks_per_start >= 1, "walks_per_start must be >= 1");
    require(walk_length >= 1, "walk_length must be >= 1");
  }
};

enum class TokenSpace { vertex, hyperedge };

inline const char* token_space_name(TokenSpace s) { return s == TokenSpace::vertex ? "vertex" : "hyperedge"; }

/// Fixed-length walks stored row-major.
struct WalkCorpus {
  TokenSpace space = TokenSpace::vertex;
  std::size_t token_count = 0;  // size of the token space
  std::size_t walk_length = 0;
  std::vector<Token> tokens;

  std::size_t size() const { return walk_length == 0 ? 0 : tokens.size() / walk_length; }
  std::span<const Token> walk(std::size_t i) const { return {tokens.data() + i * walk_length, walk_length}; }

  friend bool operator==(const WalkCorpus&, const WalkCorpus&) = default;
};

/// Probability of leaving the current hyperedge: min(alpha/|e| + beta, 1).
inline double traverse_probability(std::size_t cardinality, const WalkConfig& cfg) {
  require(cardinality >= 1, "traverse_probability: hyperedge cardinality must be >= 1");
  return std::min(cfg.alpha / static_cast<double>(cardinality) + cfg.beta, 1.0);
}

/// Stepwise Subsample-and-Traverse walker over the vertices of `h`.
///
/// Each step draws u ~ U(0,1). If u < p(|current hyperedge|) the walker moves
/// to a uniformly chosen other hyperedge incident to the current vertex (or
/// stays in the current one if there is none) and then draws the next vertex
/// from it; otherwise it draws the next vertex from the current hyperedge.
class SatWalker {
 public:
  SatWalker(const Hypergraph& h, VertexId start, const WalkConfig& cfg, Rng& rng)
      : h_(&h), cfg_(&cfg), rng_(&rng), vertex_(start) {
    if (start >= h.num_vertices()) {
      fail(ErrorCategory::invalid_argument, "walk start vertex " + std::to_string(start) + " out of range");
    }
    auto inc = h.incident(start);
    if (inc.empty()) {
      fail(ErrorCategory::invalid_argument, "walk start vertex " + std::to_string(start) + " belongs to no hyperedge");
    }
    edge_ = inc[rng.index(inc.size())];
  }

  VertexId vertex() const { return vertex_; }
  HyperedgeId hyperedge() const { return edge_; }

  /// Moves to the next vertex; returns true when the step traversed.
  bool advance() {
    const bool traverse = rng_->uniform() < traverse_probability(h_->cardinality(edge_), *cfg_);
    if (traverse) {
      auto inc = h_->incident(vertex_);
      if (inc.size() > 1) {
        // Uniform over incident hyperedges other than the current one.
        std::size_t pick = rng_->index(inc.size() - 1);
        if (inc[pick] >= edge_) ++pick;
        edge_ = inc[pick];
      }
    }
    auto m = h_->members(edge_);
    vertex_ = m[rng_->index(m.size())];
    return traverse;
  }

 private:
  const Hypergraph* h_;
  const WalkConfig* cfg_;
  Rng* rng_;
  VertexId vertex_;
  HyperedgeId edge_;
};

inline void sat_walk_into(const Hypergraph& h, VertexId start, const WalkConfig& cfg, Rng& rng,
                          std::span<Token> out) {
  SatWalker walker(h, start, cfg, rng);
  out[0] = start;
  for (std::size_t i = 1; i < out.size(); ++i) {
    walker.advance();
    out[i] = walker.vertex();
  }
}

inline std::vector<Token> sat_walk(const Hypergraph& h, VertexId start, const WalkConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<Token> out(cfg.walk_length);
  sat_walk_into(h, start, cfg, rng, out);
  return out;
}

/// Rng stream for walk `walk_index` from `start`; independent of scheduling.
inline Rng walk_stream(std::uint64_t seed, std::size_t start, std::size_t walk_index) {
  return Rng(derive_seed(seed, start, walk_index));
}

/// `walks_per_start` SaT walks from every vertex, ordered by start vertex and
/// then walk index. Output is identical for any `cfg.jobs`.
inline WalkCorpus generate_vertex_corpus(const Hypergraph& h, const WalkConfig& cfg) {
  cfg.validate();
  WalkCorpus corpus;
  corpus.space = TokenSpace::vertex;
  corpus.token_count = h.num_vertices();
  corpus.walk_length = cfg.walk_length;
  const std::size_t n = h.num_vertices();
  corpus.tokens.resize(n * cfg.walks_per_start * cfg.walk_length);

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      for (std::size_t w = 0; w < cfg.walks_per_start; ++w) {
        Rng rng = walk_stream(cfg.seed, v, w);
        std::span<Token> slot(corpus.tokens.data() + (v * cfg.walks_per_start + w) * cfg.walk_length,
                              cfg.walk_length);
        sat_walk_into(h, static_cast<VertexId>(v), cfg, rng, slot);
      }
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, n));
  if (jobs == 1) {
    run_range(0, n);
  } else {
    // Check failures up front so worker threads never throw.
    if (auto isolated = h.isolated_vertices(); !isolated.empty()) {
      fail(ErrorCategory::invalid_argument,
           "walk start vertex " + std::to_string(isolated.front()) + " belongs to no hyperedge");
    }
    std::vector<std::jthread> workers;
    const std::size_t chunk = (n + jobs - 1) / jobs;
    for (std::size_t j = 0; j < jobs; ++j) {
      const std::size_t b = j * chunk, e = std::min(n, b + chunk);
      if (b < e) workers.emplace_back(run_range, b, e);
    }
  }
  return corpus;
}

/// Traverse-and-Select walks: SaT walks on the dual, tokens are hyperedge ids.
inline WalkCorpus generate_hyperedge_corpus(const Hypergraph& h, const WalkConfig& cfg) {
  WalkCorpus corpus = generate_vertex_corpus(h.dual(), cfg);
  corpus.space = TokenSpace::hyperedge;
  return corpus;
}

// Corpus file: header `#space=<vertex|hyperedge> length=L count=N`, then one
// walk per line as space-separated decimal ids. The token-space size is not
// part of the format; readers take it from the hypergraph.

inline void write_corpus(std::ostream& out, const WalkCorpus& c) {
  out << "#space=" << token_space_name(c.space) << " length=" << c.walk_length << " count=" << c.size() << '\n';
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto w = c.walk(i);
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (j) out << ' ';
      out << w[j];
    }
    out << '\n';
  }
}

inline WalkCorpus read_corpus(std::istream& in, std::size_t token_count) {
  std::string header;
  if (!std::getline(in, header)) fail(ErrorCategory::data_format, "corpus file is empty");
  WalkCorpus c;
  c.token_count = token_count;
  char space[16] = {};
  std::size_t count = 0;
  if (std::sscanf(header.c_str(), "#space=%15s length=%zu count=%zu", space, &c.walk_length, &count) != 3) {
    fail(ErrorCategory::data_format, "corpus header malformed: '" + header + "'");
  }
  const std::string s(space);
  if (s == "vertex") c.space = TokenSpace::vertex;
  else if (s == "hyperedge") c.space = TokenSpace::hyperedge;
  else fail(ErrorCategory::data_format, "corpus header has unknown space '" + s + "'");
  if (c.walk_length == 0) fail(ErrorCategory::data_format, "corpus header declares zero walk length");

  c.tokens.reserve(count * c.walk_length);
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::size_t n = 0;
    unsigned long long t = 0;
    while (fields >> t) {
      if (t >= token_count) {
        fail(ErrorCategory::data_format, "corpus line " + std::to_string(line_no) + ": token " +
                                             std::to_string(t) + " outside token space");
      }
      c.tokens.push_back(static_cast<Token>(t));
      ++n;
    }
    if (!fields.eof() || n != c.walk_length) {
      fail(ErrorCategory::data_format, "corpus line " + std::to_string(line_no) + ": expected " +
                                           std::to_string(c.walk_length) + " tokens");
    }
  }
  if (c.size() != count) {
    fail(ErrorCategory::data_format, "corpus declares " + std::to_string(count) + " walks but has " +
                                         std::to_string(c.size()));
  }
  return c;
}

}  // namespace hyperwalk
