#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "hyperwalk/error.hpp"
#include "hyperwalk/rng.hpp"
#include "hyperwalk/walks.hpp"

namespace hyperwalk {

struct SgnsConfig {
  std::size_t dim = 16;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  double min_learning_rate = 1e-4;
  double noise_exponent = 0.75;
  std::uint64_t seed = 1;
  std::size_t workers = 1;  // 1 = sequential, bit-reproducible

  void validate() const {
    require(dim >= 1, "sgns dim must be >= 1");
    require(window >= 1, "sgns window must be >= 1");
    require(negatives >= 1, "sgns negatives must be >= 1");
    require(epochs >= 1, "sgns epochs must be >= 1");
    require(learning_rate > 0.0, "sgns learning_rate must be > 0");
    require(min_learning_rate >= 0.0 && min_learning_rate <= learning_rate,
            "sgns min_learning_rate must lie in [0, learning_rate]");
    require(std::isfinite(noise_exponent), "sgns noise_exponent must be finite");
    require(workers >= 1, "sgns workers must be >= 1");
  }
};

/// Input (Φ) and output (context) vectors, one row per token.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t tokens, std::size_t dim)
      : tokens_(tokens), dim_(dim), input_(tokens * dim, 0.0), output_(tokens * dim, 0.0) {}

  std::size_t tokens() const { return tokens_; }
  std::size_t dim() const { return dim_; }

  std::span<double> input(Token t) { return {input_.data() + t * dim_, dim_}; }
  std::span<const double> input(Token t) const { return {input_.data() + t * dim_, dim_}; }
  std::span<double> output(Token t) { return {output_.data() + t * dim_, dim_}; }
  std::span<const double> output(Token t) const { return {output_.data() + t * dim_, dim_}; }

  std::vector<double>& input_data() { return input_; }
  const std::vector<double>& input_data() const { return input_; }
  std::vector<double>& output_data() { return output_; }
  const std::vector<double>& output_data() const { return output_; }

  bool all_finite() const {
    auto finite = [](double x) { return std::isfinite(x); };
    return std::all_of(input_.begin(), input_.end(), finite) && std::all_of(output_.begin(), output_.end(), finite);
  }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t tokens_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> input_;
  std::vector<double> output_;
};

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

using ConstRow = Eigen::Map<const Eigen::VectorXd>;
using Row = Eigen::Map<Eigen::VectorXd>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  return ConstRow(a.data(), static_cast<Eigen::Index>(a.size())).dot(ConstRow(b.data(), static_cast<Eigen::Index>(b.size())));
}

}  // namespace detail

/// Gradients of one (center, context, negatives) term. `outputs[0]` is the
/// gradient for the context's output vector, `outputs[1 + k]` for negative k.
struct PairGradients {
  double loss = 0.0;
  std::vector<double> center;
  std::vector<std::vector<double>> outputs;
};

/// Negative log-likelihood of one skip-gram pair with negative samples:
///   -log σ(in_c·out_o) - Σ_k log σ(-in_c·out_{n_k})
/// and its gradient with respect to every vector involved.
inline PairGradients pair_loss_and_grads(const EmbeddingTable& table, Token center, Token context,
                                         std::span<const Token> negatives) {
  auto check = [&](Token t) {
    if (t >= table.tokens()) fail(ErrorCategory::invalid_argument, "sgns token " + std::to_string(t) + " out of range");
  };
  check(center);
  check(context);
  for (Token n : negatives) check(n);

  const std::size_t d = table.dim();
  PairGradients g;
  g.center.assign(d, 0.0);
  g.outputs.reserve(1 + negatives.size());
  auto in = table.input(center);

  auto term = [&](Token target, double label) {
    auto out = table.output(target);
    const double s = detail::dot(in, out);
    g.loss += label > 0 ? detail::softplus(-s) : detail::softplus(s);
    const double coeff = detail::sigmoid(s) - label;
    std::vector<double> grad_out(d);
    for (std::size_t i = 0; i < d; ++i) {
      g.center[i] += coeff * out[i];
      grad_out[i] = coeff * in[i];
    }
    g.outputs.push_back(std::move(grad_out));
  };
  term(context, 1.0);
  for (Token n : negatives) term(n, 0.0);
  return g;
}

/// Sampler for the unigram^exponent noise distribution.
class NoiseDistribution {
 public:
  NoiseDistribution(std::span<const std::uint64_t> counts, double exponent) {
    cumulative_.resize(counts.size());
    double total = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] > 0) total += std::pow(static_cast<double>(counts[i]), exponent);
      cumulative_[i] = total;
    }
    if (total <= 0.0) fail(ErrorCategory::invalid_argument, "noise distribution has no mass");
    for (double& c : cumulative_) c /= total;
    cumulative_.back() = 1.0;
  }

  Token sample(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return static_cast<Token>(std::min<std::size_t>(it - cumulative_.begin(), cumulative_.size() - 1));
  }

  double probability(Token t) const { return cumulative_[t] - (t == 0 ? 0.0 : cumulative_[t - 1]); }

 private:
  std::vector<double> cumulative_;
};

namespace detail {

template <bool Concurrent>
inline double load(const double& x) {
  if constexpr (Concurrent) return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed);
  else return x;
}

template <bool Concurrent>
inline void add(double& x, double delta) {
  if constexpr (Concurrent) {
    std::atomic_ref<double> r(x);
    r.store(r.load(std::memory_order_relaxed) + delta, std::memory_order_relaxed);
  } else {
    x += delta;
  }
}

/// One SGD step on a pair term. Output rows are updated as soon as their
/// gradient is known; the center row last. Without repeated targets this is
/// exactly p -= lr * pair_loss_and_grads(...). Returns the pre-step loss.
template <bool Concurrent>
inline double sgd_pair_update(EmbeddingTable& table, Token center, Token context, std::span<const Token> negatives,
                              double lr, std::span<double> center_grad) {
  const std::size_t d = table.dim();
  std::fill(center_grad.begin(), center_grad.end(), 0.0);
  auto in = table.input(center);
  double loss = 0.0;
  auto term = [&](Token target, double label) {
    auto out = table.output(target);
    if constexpr (!Concurrent) {
      const auto n = static_cast<Eigen::Index>(d);
      Row o(out.data(), n);
      const ConstRow x(in.data(), n);
      const double s = x.dot(o);
      loss += label > 0 ? softplus(-s) : softplus(s);
      const double coeff = sigmoid(s) - label;
      Row(center_grad.data(), n).noalias() += coeff * o;
      o.noalias() -= (lr * coeff) * x;
    } else {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += load<true>(in[i]) * load<true>(out[i]);
      loss += label > 0 ? softplus(-s) : softplus(s);
      const double coeff = sigmoid(s) - label;
      for (std::size_t i = 0; i < d; ++i) {
        center_grad[i] += coeff * load<true>(out[i]);
        add<true>(out[i], -lr * coeff * load<true>(in[i]));
      }
    }
  };
  term(context, 1.0);
  for (Token n : negatives) term(n, 0.0);
  if constexpr (!Concurrent) {
    Row(in.data(), static_cast<Eigen::Index>(d)).noalias() -= lr * ConstRow(center_grad.data(), static_cast<Eigen::Index>(d));
  } else {
    for (std::size_t i = 0; i < d; ++i) add<true>(in[i], -lr * center_grad[i]);
  }
  return loss;
}

}  // namespace detail

inline std::vector<std::uint64_t> token_frequencies(const WalkCorpus& corpus) {
  std::vector<std::uint64_t> counts(corpus.token_count, 0);
  for (Token t : corpus.tokens) ++counts[t];
  return counts;
}

inline EmbeddingTable initial_embeddings(std::size_t tokens, const SgnsConfig& cfg) {
  EmbeddingTable table(tokens, cfg.dim);
  Rng rng(derive_seed(cfg.seed, 0x1a17));
  const double bound = 0.5 / static_cast<double>(cfg.dim);
  for (double& x : table.input_data()) x = rng.uniform(-bound, bound);
  return table;
}

struct SgnsStats {
  std::vector<double> epoch_mean_loss;
};

/// Trains skip-gram with negative sampling over every (center, context) pair
/// within `window` positions of each other in each walk. The learning rate
/// decays linearly from `learning_rate` to `min_learning_rate` over training.
/// Negatives equal to the context token are redrawn.
inline EmbeddingTable train_sgns(const WalkCorpus& corpus, const SgnsConfig& cfg, SgnsStats* stats = nullptr) {
  cfg.validate();
  if (corpus.size() == 0) fail(ErrorCategory::invalid_argument, "sgns: corpus is empty");
  if (corpus.token_count < 2) fail(ErrorCategory::invalid_argument, "sgns: token space needs at least 2 tokens");

  EmbeddingTable table = initial_embeddings(corpus.token_count, cfg);
  const auto counts = token_frequencies(corpus);
  const NoiseDistribution noise(counts, cfg.noise_exponent);
  const std::size_t n_walks = corpus.size();
  const double total_positions = static_cast<double>(cfg.epochs) * static_cast<double>(corpus.tokens.size());

  auto run_shard = [&]<bool Concurrent>(std::size_t epoch, std::size_t worker, std::size_t begin, std::size_t end,
                                        double progress_base, double progress_scale, double& loss_sum,
                                        std::size_t& pair_count) {
    Rng rng(derive_seed(cfg.seed, epoch, worker));
    std::vector<double> center_grad(cfg.dim);
    std::vector<Token> negatives(cfg.negatives);
    std::size_t done = 0;
    for (std::size_t w = begin; w < end; ++w) {
      auto walk = corpus.walk(w);
      for (std::size_t i = 0; i < walk.size(); ++i, ++done) {
        const double progress = progress_base + progress_scale * static_cast<double>(done);
        const double lr = std::max(cfg.min_learning_rate,
                                   cfg.learning_rate - (cfg.learning_rate - cfg.min_learning_rate) *
                                                           (progress / total_positions));
        const std::size_t lo = i >= cfg.window ? i - cfg.window : 0;
        const std::size_t hi = std::min(walk.size() - 1, i + cfg.window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const Token context = walk[j];
          for (Token& n : negatives) {
            n = noise.sample(rng);
            for (int retry = 0; n == context && retry < 16; ++retry) n = noise.sample(rng);
          }
          loss_sum += detail::sgd_pair_update<Concurrent>(table, walk[i], context, negatives, lr, center_grad);
          ++pair_count;
        }
      }
    }
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double epoch_base = static_cast<double>(epoch) * static_cast<double>(corpus.tokens.size());
    double loss_sum = 0.0;
    std::size_t pairs = 0;
    const std::size_t workers = std::min(cfg.workers, n_walks);
    if (workers <= 1) {
      run_shard.template operator()<false>(epoch, 0, 0, n_walks, epoch_base, 1.0, loss_sum, pairs);
    } else {
      // Hogwild: unsynchronized relaxed updates over disjoint walk shards.
      std::vector<double> losses(workers, 0.0);
      std::vector<std::size_t> shard_pairs(workers, 0);
      {
        std::vector<std::jthread> threads;
        const std::size_t chunk = (n_walks + workers - 1) / workers;
        for (std::size_t k = 0; k < workers; ++k) {
          const std::size_t b = k * chunk, e = std::min(n_walks, b + chunk);
          if (b >= e) continue;
          threads.emplace_back([&, k, b, e] {
            run_shard.template operator()<true>(epoch, k, b, e, epoch_base, static_cast<double>(workers), losses[k],
                                                shard_pairs[k]);
          });
        }
      }
      for (std::size_t k = 0; k < workers; ++k) {
        loss_sum += losses[k];
        pairs += shard_pairs[k];
      }
    }
    if (stats) stats->epoch_mean_loss.push_back(pairs ? loss_sum / static_cast<double>(pairs) : 0.0);
  }
  if (!table.all_finite()) fail(ErrorCategory::numeric, "sgns produced non-finite embeddings");
  return table;
}

// Embedding file: `<token_count> <dim>` then `<token_id> <f1> ... <fdim>` per
// line with 6-decimal fixed-point values. Only the input vectors (Φ) are
// exported.

inline void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out << table.tokens() << ' ' << table.dim() << '\n';
  char buf[64];
  for (std::size_t t = 0; t < table.tokens(); ++t) {
    out << t;
    for (double x : table.input(static_cast<Token>(t))) {
      auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, 6);
      out << ' ';
      out.write(buf, r.ptr - buf);
    }
    out << '\n';
  }
}

/// Reads an embedding file into the input side of a table; output vectors
/// stay zero.
inline EmbeddingTable read_embeddings(std::istream& in) {
  std::size_t tokens = 0, dim = 0;
  std::string line;
  if (!std::getline(in, line) || std::sscanf(line.c_str(), "%zu %zu", &tokens, &dim) != 2 || dim == 0) {
    fail(ErrorCategory::data_format, "embedding header malformed");
  }
  EmbeddingTable table(tokens, dim);
  std::vector<char> seen(tokens, 0);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    auto skip_ws = [&] { while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p; };
    std::size_t id = 0;
    skip_ws();
    auto r = std::from_chars(p, end, id);
    if (r.ec != std::errc() || id >= tokens) {
      fail(ErrorCategory::data_format, "embedding line " + std::to_string(line_no) + ": bad token id");
    }
    p = r.ptr;
    auto row = table.input(static_cast<Token>(id));
    for (std::size_t k = 0; k < dim; ++k) {
      skip_ws();
      auto rv = std::from_chars(p, end, row[k]);
      if (rv.ec != std::errc()) {
        fail(ErrorCategory::data_format, "embedding line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(dim) + " values");
      }
      p = rv.ptr;
    }
    skip_ws();
    if (p != end) fail(ErrorCategory::data_format, "embedding line " + std::to_string(line_no) + ": trailing data");
    seen[id] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    fail(ErrorCategory::data_format, "embedding file is missing token rows");
  }
  return table;
}

/// CSV for external plotting: `token_id,x1,...,xd`.
inline void write_embeddings_csv(std::ostream& out, const EmbeddingTable& table) {
  out << "token_id";
  for (std::size_t k = 1; k <= table.dim(); ++k) out << ",x" << k;
  out << '\n';
  char buf[64];
  for (std::size_t t = 0; t < table.tokens(); ++t) {
    out << t;
    for (double x : table.input(static_cast<Token>(t))) {
      auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, 6);
      out << ',';
      out.write(buf, r.ptr - buf);
    }
    out << '\n';
  }
}

}  // namespace hyperwalk
