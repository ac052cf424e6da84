#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "json.hpp"

#include "hyperwalk/error.hpp"
#include "hyperwalk/hypergraph.hpp"
#include "hyperwalk/neural.hpp"
#include "hyperwalk/rng.hpp"
#include "hyperwalk/sgns.hpp"
#include "hyperwalk/split.hpp"

namespace hyperwalk {

/// Which branches feed the fusion head.
enum class ModelVariant {
  full,             // context + membership
  membership_only,  // DeepSets over member vertex embeddings
  context_only,     // MLP over the hyperedge embedding
};

inline const char* variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::full: return "full";
    case ModelVariant::membership_only: return "membership_only";
    case ModelVariant::context_only: return "context_only";
  }
  return "?";
}

inline ModelVariant parse_variant(const std::string& s) {
  if (s == "full") return ModelVariant::full;
  if (s == "membership_only") return ModelVariant::membership_only;
  if (s == "context_only") return ModelVariant::context_only;
  fail(ErrorCategory::config, "unknown model variant '" + s + "'");
}

struct DheConfig {
  std::size_t context_layers = 2;  // hidden layers before the c-network output
  std::size_t rho_layers = 2;
  std::size_t fusion_layers = 2;
  std::size_t feature_layers = 1;
  std::size_t phi_layers = 2;
  std::size_t hidden_width = 100;
  std::size_t context_out_width = 30;
  std::size_t classes = 2;
  bool use_features = false;
  ModelVariant variant = ModelVariant::full;
  double dropout_rate = 0.5;
  double learning_rate = 0.05;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::size_t patience = 20;  // early stopping, only with a validation split
  std::uint64_t seed = 1;

  // Input widths, fixed by the embedding tables and feature matrix.
  std::size_t context_width = 128;
  std::size_t vertex_width = 16;
  std::size_t feature_width = 0;

  bool uses_context() const { return variant != ModelVariant::membership_only; }
  bool uses_membership() const { return variant != ModelVariant::context_only; }

  void validate() const {
    require(hidden_width >= 1, "hidden_width must be >= 1");
    require(context_out_width >= 1, "context_out_width must be >= 1");
    require(classes >= 2, "classes must be >= 2");
    require(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout_rate must lie in [0, 1)");
    require(learning_rate > 0.0, "learning_rate must be > 0");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(context_width >= 1 && vertex_width >= 1, "embedding widths must be >= 1");
    require(!use_features || feature_width >= 1, "use_features requires feature_width >= 1");
  }
};

inline void to_json(nlohmann::json& j, const DheConfig& c) {
  j = nlohmann::json{{"context_layers", c.context_layers},
                     {"rho_layers", c.rho_layers},
                     {"fusion_layers", c.fusion_layers},
                     {"feature_layers", c.feature_layers},
                     {"phi_layers", c.phi_layers},
                     {"hidden_width", c.hidden_width},
                     {"context_out_width", c.context_out_width},
                     {"classes", c.classes},
                     {"use_features", c.use_features},
                     {"variant", variant_name(c.variant)},
                     {"dropout_rate", c.dropout_rate},
                     {"learning_rate", c.learning_rate},
                     {"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"patience", c.patience},
                     {"seed", c.seed},
                     {"context_width", c.context_width},
                     {"vertex_width", c.vertex_width},
                     {"feature_width", c.feature_width}};
}

inline void from_json(const nlohmann::json& j, DheConfig& c) {
  j.at("context_layers").get_to(c.context_layers);
  j.at("rho_layers").get_to(c.rho_layers);
  j.at("fusion_layers").get_to(c.fusion_layers);
  j.at("feature_layers").get_to(c.feature_layers);
  j.at("phi_layers").get_to(c.phi_layers);
  j.at("hidden_width").get_to(c.hidden_width);
  j.at("context_out_width").get_to(c.context_out_width);
  j.at("classes").get_to(c.classes);
  j.at("use_features").get_to(c.use_features);
  c.variant = parse_variant(j.at("variant").get<std::string>());
  j.at("dropout_rate").get_to(c.dropout_rate);
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("epochs").get_to(c.epochs);
  j.at("batch_size").get_to(c.batch_size);
  j.at("patience").get_to(c.patience);
  j.at("seed").get_to(c.seed);
  j.at("context_width").get_to(c.context_width);
  j.at("vertex_width").get_to(c.vertex_width);
  j.at("feature_width").get_to(c.feature_width);
}

/// One hyperedge with everything the classifier reads.
struct HyperedgeExample {
  HyperedgeId id = 0;
  std::vector<VertexId> members;
  nn::Vector context;            // Φ(e)
  nn::Matrix member_embeddings;  // Φ(v) for each member, one column each
  nn::Vector features;           // f(e); empty when unused
  std::size_t label = 0;
};

/// Assembles examples for every hyperedge of `h` from the two embedding
/// tables. `features`, when given, has one row per hyperedge.
inline std::vector<HyperedgeExample> make_examples(const Hypergraph& h, std::span<const std::size_t> labels,
                                                   const EmbeddingTable& vertex_table,
                                                   const EmbeddingTable& hyperedge_table,
                                                   const nn::Matrix* features = nullptr) {
  if (labels.size() != h.num_hyperedges()) fail(ErrorCategory::invalid_argument, "one label per hyperedge required");
  if (vertex_table.tokens() != h.num_vertices()) {
    fail(ErrorCategory::invalid_argument, "vertex embedding table does not match the hypergraph's vertex count");
  }
  if (hyperedge_table.tokens() != h.num_hyperedges()) {
    fail(ErrorCategory::invalid_argument, "hyperedge embedding table does not match the hypergraph's hyperedge count");
  }
  if (features && static_cast<std::size_t>(features->rows()) != h.num_hyperedges()) {
    fail(ErrorCategory::invalid_argument, "feature matrix needs one row per hyperedge");
  }
  std::vector<HyperedgeExample> out(h.num_hyperedges());
  const auto vd = static_cast<Eigen::Index>(vertex_table.dim());
  const auto ed = static_cast<Eigen::Index>(hyperedge_table.dim());
  for (std::size_t e = 0; e < out.size(); ++e) {
    auto& ex = out[e];
    ex.id = static_cast<HyperedgeId>(e);
    auto m = h.members(ex.id);
    ex.members.assign(m.begin(), m.end());
    ex.context = Eigen::Map<const nn::Vector>(hyperedge_table.input(ex.id).data(), ed);
    ex.member_embeddings.resize(vd, static_cast<Eigen::Index>(m.size()));
    for (std::size_t k = 0; k < m.size(); ++k) {
      ex.member_embeddings.col(static_cast<Eigen::Index>(k)) =
          Eigen::Map<const nn::Vector>(vertex_table.input(m[k]).data(), vd);
    }
    if (features) ex.features = features->row(static_cast<Eigen::Index>(e)).transpose();
    ex.label = labels[e];
  }
  return out;
}

/// Flat gradient container matching DheModel's networks.
struct DheGradients {
  nn::MlpGradients context, phi, rho, feature, fusion;

  void scale(double s) {
    for (auto* g : {&context, &phi, &rho, &feature, &fusion}) g->scale(s);
  }
};

/// Hyperedge classifier:
///   softmax(fusion(c(e) ‖ ρ(Σ_v φ(Φ(v))) ‖ h_f(f(e))))
/// with c(e) = context network over Φ(e). The variant drops branches.
class DheModel {
 public:
  DheModel() = default;

  static DheModel build(const DheConfig& cfg) {
    cfg.validate();
    DheModel m;
    m.cfg_ = cfg;
    Rng rng(derive_seed(cfg.seed, 0xde11));
    const std::size_t h = cfg.hidden_width;
    using nn::Activation;

    std::vector<nn::LayerSpec> ctx;
    for (std::size_t i = 0; i < cfg.context_layers; ++i) ctx.push_back({h, Activation::relu, true});
    ctx.push_back({cfg.context_out_width, Activation::relu, false});
    m.context_net_ = cfg.uses_context() ? nn::Mlp::build(cfg.context_width, ctx, rng) : nn::Mlp(cfg.context_width);

    std::vector<nn::LayerSpec> phi(cfg.phi_layers, nn::LayerSpec{h, Activation::tanh, false});
    std::vector<nn::LayerSpec> rho(cfg.rho_layers, nn::LayerSpec{h, Activation::relu, false});
    if (cfg.uses_membership()) {
      m.phi_net_ = nn::Mlp::build(cfg.vertex_width, phi, rng);
      m.rho_net_ = nn::Mlp::build(m.phi_net_.output_width(), rho, rng);
    } else {
      m.phi_net_ = nn::Mlp(cfg.vertex_width);
      m.rho_net_ = nn::Mlp(cfg.vertex_width);
    }

    std::vector<nn::LayerSpec> feat(cfg.feature_layers, nn::LayerSpec{h, Activation::relu, true});
    const std::size_t fw = cfg.use_features ? cfg.feature_width : 0;
    m.feature_net_ = cfg.use_features ? nn::Mlp::build(fw, feat, rng) : nn::Mlp(0);
    m.feature_mean_ = nn::Vector::Zero(static_cast<Eigen::Index>(fw));
    m.feature_scale_ = nn::Vector::Ones(static_cast<Eigen::Index>(fw));

    std::vector<nn::LayerSpec> fusion(cfg.fusion_layers, nn::LayerSpec{h, Activation::relu, true});
    fusion.push_back({cfg.classes, Activation::identity, false});
    if (m.fusion_input_width() == 0) fail(ErrorCategory::invalid_argument, "model has no input branch");
    m.fusion_net_ = nn::Mlp::build(m.fusion_input_width(), fusion, rng);
    return m;
  }

  const DheConfig& config() const { return cfg_; }

  std::size_t context_out_width() const { return cfg_.uses_context() ? context_net_.output_width() : 0; }
  std::size_t membership_out_width() const { return cfg_.uses_membership() ? rho_net_.output_width() : 0; }
  std::size_t feature_out_width() const { return cfg_.use_features ? feature_net_.output_width() : 0; }
  std::size_t fusion_input_width() const { return context_out_width() + membership_out_width() + feature_out_width(); }

  const nn::Mlp& context_net() const { return context_net_; }
  const nn::Mlp& phi_net() const { return phi_net_; }
  const nn::Mlp& rho_net() const { return rho_net_; }
  const nn::Mlp& feature_net() const { return feature_net_; }
  const nn::Mlp& fusion_net() const { return fusion_net_; }

  /// Per-dimension standardization applied to f(e) before the feature branch.
  void set_feature_standardizer(nn::Vector mean, nn::Vector scale) {
    if (mean.size() != feature_mean_.size() || scale.size() != feature_scale_.size()) {
      fail(ErrorCategory::invalid_argument, "standardizer width does not match feature width");
    }
    feature_mean_ = std::move(mean);
    feature_scale_ = std::move(scale);
  }
  const nn::Vector& feature_mean() const { return feature_mean_; }
  const nn::Vector& feature_scale() const { return feature_scale_; }

  /// c(e), eval mode.
  nn::Vector context_repr(const HyperedgeExample& e) const {
    require(cfg_.uses_context(), "model has no context branch");
    check_context(e);
    return context_net_.forward(e.context, nn::Mode::eval);
  }

  /// m(e) = ρ(Σ_{v∈e} φ(Φ(v))), eval mode.
  nn::Vector membership_repr(const HyperedgeExample& e) const {
    require(cfg_.uses_membership(), "model has no membership branch");
    check_members(e);
    nn::Vector pooled = phi_net_.forward(e.member_embeddings, nn::Mode::eval).rowwise().sum();
    return rho_net_.forward(pooled, nn::Mode::eval);
  }

  /// Class probabilities, eval mode.
  nn::Vector forward(const HyperedgeExample& e) const {
    const HyperedgeExample* batch[] = {&e};
    return nn::softmax(logits(batch, nn::Mode::eval, nullptr, nullptr).col(0));
  }

  /// Argmax of forward(); ties go to the lowest class index.
  std::size_t predict(const HyperedgeExample& e) const { return argmax(forward(e)); }

  static std::size_t argmax(const nn::Vector& p) {
    std::size_t best = 0;
    for (Eigen::Index i = 1; i < p.size(); ++i) {
      if (p(i) > p(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
    }
    return best;
  }

  struct BatchResult {
    double loss = 0.0;  // mean cross-entropy
    std::size_t correct = 0;
  };

  /// Mean cross-entropy over `batch`; when `grads` is non-null, fills it with
  /// the gradient of that mean. `dropout_rng` is required in train mode.
  BatchResult loss_and_grads(std::span<const HyperedgeExample* const> batch, nn::Mode mode, Rng* dropout_rng,
                             DheGradients* grads) const {
    Caches caches;
    const nn::Matrix z = logits(batch, mode, dropout_rng, grads ? &caches : nullptr);
    BatchResult r;
    nn::Matrix grad_logits(z.rows(), z.cols());
    for (Eigen::Index b = 0; b < z.cols(); ++b) {
      const auto ce = nn::softmax_cross_entropy(z.col(b), batch[static_cast<std::size_t>(b)]->label);
      r.loss += ce.loss;
      grad_logits.col(b) = ce.grad;
      if (argmax(z.col(b)) == batch[static_cast<std::size_t>(b)]->label) ++r.correct;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    r.loss *= inv;
    if (grads) {
      *grads = zero_gradients();
      backward(batch, caches, grad_logits * inv, *grads);
    }
    return r;
  }

  DheGradients zero_gradients() const {
    return {context_net_.zero_gradients(), phi_net_.zero_gradients(), rho_net_.zero_gradients(),
            feature_net_.zero_gradients(), fusion_net_.zero_gradients()};
  }

  void sgd_step(const DheGradients& g, double lr) {
    nn::sgd_step(context_net_, g.context, lr);
    nn::sgd_step(phi_net_, g.phi, lr);
    nn::sgd_step(rho_net_, g.rho, lr);
    nn::sgd_step(feature_net_, g.feature, lr);
    nn::sgd_step(fusion_net_, g.fusion, lr);
  }

  /// Visits every trainable parameter in a fixed order (gradient checks,
  /// serialization tests).
  template <typename Fn>
  void for_each_parameter(Fn&& fn) {
    for (auto* net : {&context_net_, &phi_net_, &rho_net_, &feature_net_, &fusion_net_}) {
      for (auto& l : net->layers()) {
        for (Eigen::Index i = 0; i < l.weights.size(); ++i) fn(l.weights.data()[i]);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) fn(l.bias.data()[i]);
      }
      net->bump_version();
    }
  }

  static std::vector<double> flatten(const DheGradients& g) {
    std::vector<double> out;
    for (const auto* ng : {&g.context, &g.phi, &g.rho, &g.feature, &g.fusion}) {
      for (const auto& l : ng->layers) {
        out.insert(out.end(), l.weights.data(), l.weights.data() + l.weights.size());
        out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
      }
    }
    return out;
  }

  void save(std::ostream& out) const;
  static DheModel load(std::istream& in);

 private:
  struct Caches {
    nn::ForwardCache context, rho, feature, fusion;
    std::vector<nn::ForwardCache> phi;  // one per example
  };

  void check_context(const HyperedgeExample& e) const {
    if (static_cast<std::size_t>(e.context.size()) != cfg_.context_width) {
      fail(ErrorCategory::invalid_argument, "hyperedge " + std::to_string(e.id) + ": context embedding width " +
                                                std::to_string(e.context.size()) + " != model width " +
                                                std::to_string(cfg_.context_width));
    }
  }

  void check_members(const HyperedgeExample& e) const {
    if (e.member_embeddings.cols() == 0) {
      fail(ErrorCategory::invalid_argument, "hyperedge " + std::to_string(e.id) + " has no member embeddings");
    }
    if (static_cast<std::size_t>(e.member_embeddings.rows()) != cfg_.vertex_width) {
      fail(ErrorCategory::invalid_argument, "hyperedge " + std::to_string(e.id) + ": vertex embedding width mismatch");
    }
  }

  void check_features(const HyperedgeExample& e) const {
    if (static_cast<std::size_t>(e.features.size()) != cfg_.feature_width) {
      fail(ErrorCategory::invalid_argument, "hyperedge " + std::to_string(e.id) + ": model uses features but " +
                                                (e.features.size() == 0 ? std::string("none were supplied")
                                                                        : "width does not match"));
    }
  }

  nn::Matrix logits(std::span<const HyperedgeExample* const> batch, nn::Mode mode, Rng* rng, Caches* caches) const {
    if (batch.empty()) fail(ErrorCategory::invalid_argument, "empty batch");
    const auto B = static_cast<Eigen::Index>(batch.size());
    const nn::Dropout dropout{cfg_.dropout_rate, rng};
    nn::Matrix fused(static_cast<Eigen::Index>(fusion_input_width()), B);
    Eigen::Index row = 0;

    if (cfg_.uses_context()) {
      nn::Matrix x(static_cast<Eigen::Index>(cfg_.context_width), B);
      for (Eigen::Index b = 0; b < B; ++b) {
        check_context(*batch[static_cast<std::size_t>(b)]);
        x.col(b) = batch[static_cast<std::size_t>(b)]->context;
      }
      const nn::Matrix c = context_net_.forward(x, mode, dropout, caches ? &caches->context : nullptr);
      fused.middleRows(row, c.rows()) = c;
      row += c.rows();
    }
    if (cfg_.uses_membership()) {
      nn::Matrix pooled(static_cast<Eigen::Index>(phi_net_.output_width()), B);
      if (caches) caches->phi.resize(batch.size());
      for (Eigen::Index b = 0; b < B; ++b) {
        const auto& e = *batch[static_cast<std::size_t>(b)];
        check_members(e);
        pooled.col(b) = phi_net_.forward(e.member_embeddings, mode, dropout,
                                         caches ? &caches->phi[static_cast<std::size_t>(b)] : nullptr)
                            .rowwise()
                            .sum();
      }
      const nn::Matrix m = rho_net_.forward(pooled, mode, dropout, caches ? &caches->rho : nullptr);
      fused.middleRows(row, m.rows()) = m;
      row += m.rows();
    }
    if (cfg_.use_features) {
      nn::Matrix x(static_cast<Eigen::Index>(cfg_.feature_width), B);
      for (Eigen::Index b = 0; b < B; ++b) {
        check_features(*batch[static_cast<std::size_t>(b)]);
        x.col(b) = (batch[static_cast<std::size_t>(b)]->features - feature_mean_).cwiseQuotient(feature_scale_);
      }
      const nn::Matrix f = feature_net_.forward(x, mode, dropout, caches ? &caches->feature : nullptr);
      fused.middleRows(row, f.rows()) = f;
    }
    return fusion_net_.forward(fused, mode, dropout, caches ? &caches->fusion : nullptr);
  }

  void backward(std::span<const HyperedgeExample* const> batch, const Caches& caches, const nn::Matrix& grad_logits,
                DheGradients& g) const {
    const nn::Matrix grad_fused = fusion_net_.backward(caches.fusion, grad_logits, g.fusion);
    Eigen::Index row = 0;
    if (cfg_.uses_context()) {
      const auto w = static_cast<Eigen::Index>(context_out_width());
      context_net_.backward(caches.context, grad_fused.middleRows(row, w), g.context);
      row += w;
    }
    if (cfg_.uses_membership()) {
      const auto w = static_cast<Eigen::Index>(membership_out_width());
      const nn::Matrix grad_pooled = rho_net_.backward(caches.rho, grad_fused.middleRows(row, w), g.rho);
      for (std::size_t b = 0; b < batch.size(); ++b) {
        // The sum hands the same gradient to every member.
        const auto n = batch[b]->member_embeddings.cols();
        phi_net_.backward(caches.phi[b], grad_pooled.col(static_cast<Eigen::Index>(b)).replicate(1, n), g.phi);
      }
      row += w;
    }
    if (cfg_.use_features) {
      const auto w = static_cast<Eigen::Index>(feature_out_width());
      feature_net_.backward(caches.feature, grad_fused.middleRows(row, w), g.feature);
    }
  }

  DheConfig cfg_;
  nn::Mlp context_net_, phi_net_, rho_net_, feature_net_, fusion_net_;
  nn::Vector feature_mean_, feature_scale_;
};

// Checkpoint: "dhe 1", a one-line JSON config, the feature standardizer, then
// the five networks in neural checkpoint format.

inline void DheModel::save(std::ostream& out) const {
  out << "dhe 1\n" << nlohmann::json(cfg_).dump() << '\n';
  out << "standardizer " << feature_mean_.size() << '\n';
  for (Eigen::Index i = 0; i < feature_mean_.size(); ++i) {
    nn::detail::write_hex(out, feature_mean_(i));
    out << ' ';
    nn::detail::write_hex(out, feature_scale_(i));
    out << '\n';
  }
  for (const auto* net : {&context_net_, &phi_net_, &rho_net_, &feature_net_, &fusion_net_}) nn::write_mlp(out, *net);
}

inline DheModel DheModel::load(std::istream& in) {
  std::string tag, line;
  int version = 0;
  if (!(in >> tag >> version) || tag != "dhe") fail(ErrorCategory::data_format, "not a DHE checkpoint");
  if (version != 1) fail(ErrorCategory::data_format, "unsupported DHE checkpoint version " + std::to_string(version));
  std::getline(in, line);
  if (!std::getline(in, line)) fail(ErrorCategory::data_format, "DHE checkpoint truncated");
  DheModel m;
  try {
    m.cfg_ = nlohmann::json::parse(line).get<DheConfig>();
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCategory::data_format, std::string("DHE checkpoint config: ") + ex.what());
  }
  m.cfg_.validate();
  std::size_t fw = 0;
  if (!(in >> tag >> fw) || tag != "standardizer") fail(ErrorCategory::data_format, "DHE checkpoint: no standardizer");
  m.feature_mean_.resize(static_cast<Eigen::Index>(fw));
  m.feature_scale_.resize(static_cast<Eigen::Index>(fw));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(fw); ++i) {
    m.feature_mean_(i) = nn::detail::read_hex(in);
    m.feature_scale_(i) = nn::detail::read_hex(in);
  }
  m.context_net_ = nn::read_mlp(in);
  m.phi_net_ = nn::read_mlp(in);
  m.rho_net_ = nn::read_mlp(in);
  m.feature_net_ = nn::read_mlp(in);
  m.fusion_net_ = nn::read_mlp(in);
  if (m.fusion_net_.input_width() != m.fusion_input_width() || m.fusion_net_.output_width() != m.cfg_.classes) {
    fail(ErrorCategory::data_format, "DHE checkpoint: network shapes disagree with config");
  }
  return m;
}

/// Standardizes each feature dimension using the rows in `ids` only. Zero
/// variance dimensions keep scale 1.
inline std::pair<nn::Vector, nn::Vector> fit_standardizer(const std::vector<HyperedgeExample>& examples,
                                                          std::span<const std::size_t> ids) {
  require(!ids.empty(), "standardizer needs at least one example");
  const auto w = examples[ids.front()].features.size();
  nn::Vector mean = nn::Vector::Zero(w), sq = nn::Vector::Zero(w);
  for (std::size_t id : ids) mean += examples[id].features;
  mean /= static_cast<double>(ids.size());
  for (std::size_t id : ids) sq += (examples[id].features - mean).cwiseAbs2();
  nn::Vector scale = (sq / static_cast<double>(ids.size())).cwiseSqrt();
  for (Eigen::Index i = 0; i < w; ++i) {
    if (!(scale(i) > 1e-12)) scale(i) = 1.0;
  }
  return {mean, scale};
}

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> validation_loss;
  std::optional<double> validation_accuracy;
  double seconds = 0.0;
};

struct TrainResult {
  DheModel model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<std::size_t> predictions;
};

/// Eval-mode loss, accuracy and predictions over `ids`.
inline EvalResult evaluate(const DheModel& model, const std::vector<HyperedgeExample>& examples,
                           std::span<const std::size_t> ids, std::size_t chunk = 256) {
  EvalResult r;
  if (ids.empty()) return r;
  std::vector<const HyperedgeExample*> batch;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < ids.size(); start += chunk) {
    batch.clear();
    for (std::size_t i = start; i < std::min(ids.size(), start + chunk); ++i) batch.push_back(&examples[ids[i]]);
    const auto br = model.loss_and_grads(batch, nn::Mode::eval, nullptr, nullptr);
    r.loss += br.loss * static_cast<double>(batch.size());
    correct += br.correct;
  }
  r.loss /= static_cast<double>(ids.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(ids.size());
  r.predictions.reserve(ids.size());
  for (std::size_t id : ids) r.predictions.push_back(model.predict(examples[id]));
  return r;
}

/// Mini-batch SGD on mean categorical cross-entropy. With a validation split,
/// training stops after `patience` epochs without a validation-loss
/// improvement and the best-epoch parameters are returned.
inline TrainResult train_dhe(const std::vector<HyperedgeExample>& examples, const LabeledSplit& split, DheConfig cfg) {
  cfg.validate();
  if (split.train.empty()) fail(ErrorCategory::invalid_argument, "training split is empty");
  std::vector<std::size_t> class_counts(cfg.classes, 0);
  for (std::size_t id : split.train) {
    if (id >= examples.size()) fail(ErrorCategory::invalid_argument, "split id out of range");
    if (examples[id].label >= cfg.classes) {
      fail(ErrorCategory::invalid_argument, "label " + std::to_string(examples[id].label) + " >= classes");
    }
    ++class_counts[examples[id].label];
  }
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    if (class_counts[c] == 0) spdlog::warn("class {} has no training examples", c);
  }

  TrainResult result;
  result.model = DheModel::build(cfg);
  if (cfg.use_features) {
    auto [mean, scale] = fit_standardizer(examples, split.train);
    result.model.set_feature_standardizer(std::move(mean), std::move(scale));
  }
  const bool early_stopping = split.has_validation();
  std::optional<DheModel> best;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  Rng dropout_rng(derive_seed(cfg.seed, 0xd209));
  std::vector<std::size_t> order = split.train;
  std::vector<const HyperedgeExample*> batch;
  DheGradients grads;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng shuffle_rng(derive_seed(cfg.seed, 0x5af1e, epoch));
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) {
        batch.push_back(&examples[order[i]]);
      }
      const auto br = result.model.loss_and_grads(batch, nn::Mode::train, &dropout_rng, &grads);
      if (!std::isfinite(br.loss)) fail(ErrorCategory::numeric, "training loss became non-finite");
      result.model.sgd_step(grads, cfg.learning_rate);
      loss_sum += br.loss * static_cast<double>(batch.size());
      correct += br.correct;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (early_stopping) {
      const auto ev = evaluate(result.model, examples, split.validation);
      rec.validation_loss = ev.loss;
      rec.validation_accuracy = ev.accuracy;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(rec);
    spdlog::debug("epoch {} loss {:.4f} acc {:.4f}", epoch, rec.train_loss, rec.train_accuracy);

    if (early_stopping) {
      if (*rec.validation_loss < best_val) {
        best_val = *rec.validation_loss;
        best = result.model;
        result.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= cfg.patience && cfg.patience > 0) {
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
  }
  if (best) result.model = std::move(*best);
  return result;
}

}  // namespace hyperwalk
