#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "json.hpp"

#include "hyperwalk/datasets.hpp"
#include "hyperwalk/dhe_model.hpp"
#include "hyperwalk/error.hpp"
#include "hyperwalk/hypergraph.hpp"
#include "hyperwalk/metrics.hpp"
#include "hyperwalk/sgns.hpp"
#include "hyperwalk/split.hpp"
#include "hyperwalk/walks.hpp"

namespace hyperwalk {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kConfigVersion = 1;

struct NegativeSpec {
  std::optional<NegativeScheme> scheme;  // none when unset
  double ratio = 1.0;
};

struct DatasetSpec {
  std::string type = "citation";  // citation | pubmed | sets | planted_sets
  // citation / pubmed
  std::string content;  // citation content file
  std::string nodes;    // pubmed node file
  std::string cites;
  CitesOrder cites_order = CitesOrder::citing_cited;
  std::optional<std::size_t> feature_width;
  NeighborhoodMode hyperedges = NeighborhoodMode::undirected;
  double subsample = 1.0;
  // sets / planted_sets
  std::string path;
  std::map<std::string, std::string> relabel;
  NegativeSpec negatives;
  PlantedSetConfig planted;
};

struct PipelineConfig {
  std::string name = "dataset";
  std::uint64_t seed = 1;
  std::size_t runs = 1;
  std::size_t jobs = 1;
  std::string output = "out";
  DatasetSpec dataset;
  WalkConfig walks;
  SgnsConfig vertex_embedding;
  SgnsConfig hyperedge_embedding;
  DheConfig model;
  std::vector<std::vector<double>> splits{{0.5, 0.5}};

  PipelineConfig() {
    hyperedge_embedding.dim = 128;
    vertex_embedding.dim = 16;
  }
};

// ---------------------------------------------------------------------------
// Config schema. Unknown keys and wrong types are config errors.

namespace detail {

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorCategory::config, "config: '" + path_ + "' must be an object");
  }

  template <typename T>
  bool get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return false;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorCategory::config, "config: '" + where(key) + "' has the wrong type");
    }
    return true;
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(ErrorCategory::config, "config: unknown key '" + where(it.key()) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void parse_sgns(const json& j, const std::string& path, SgnsConfig& c) {
  Section s(j, path);
  s.get("dim", c.dim);
  s.get("window", c.window);
  s.get("negatives", c.negatives);
  s.get("epochs", c.epochs);
  s.get("learning_rate", c.learning_rate);
  s.get("min_learning_rate", c.min_learning_rate);
  s.get("noise_exponent", c.noise_exponent);
  s.get("workers", c.workers);
  s.finish();
}

inline json sgns_json(const SgnsConfig& c) {
  return {{"dim", c.dim},
          {"window", c.window},
          {"negatives", c.negatives},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"min_learning_rate", c.min_learning_rate},
          {"noise_exponent", c.noise_exponent},
          {"workers", c.workers}};
}

inline std::optional<NegativeScheme> parse_scheme(const std::string& s) {
  if (s == "none") return std::nullopt;
  if (s == "uniform") return NegativeScheme::uniform_cardinality;
  if (s == "empirical") return NegativeScheme::empirical_cardinality;
  fail(ErrorCategory::config, "config: negatives.scheme must be none|uniform|empirical");
}

inline std::string scheme_name(const std::optional<NegativeScheme>& s) {
  if (!s) return "none";
  return *s == NegativeScheme::uniform_cardinality ? "uniform" : "empirical";
}

}  // namespace detail

inline PipelineConfig parse_config(const json& j) {
  PipelineConfig c;
  detail::Section root(j, "");
  int version = 0;
  if (!root.get("version", version)) fail(ErrorCategory::config, "config: missing 'version'");
  if (version != kConfigVersion) {
    fail(ErrorCategory::config, "config: unsupported version " + std::to_string(version) + " (expected " +
                                    std::to_string(kConfigVersion) + ")");
  }
  root.get("name", c.name);
  root.get("seed", c.seed);
  root.get("runs", c.runs);
  root.get("jobs", c.jobs);
  root.get("output", c.output);
  root.get("splits", c.splits);

  const json* dj = root.child("dataset");
  if (!dj) fail(ErrorCategory::config, "config: missing 'dataset'");
  {
    auto& d = c.dataset;
    detail::Section s(*dj, "dataset");
    s.get("type", d.type);
    s.get("content", d.content);
    s.get("nodes", d.nodes);
    s.get("cites", d.cites);
    std::string order;
    if (s.get("cites_order", order)) {
      if (order == "citing_cited") d.cites_order = CitesOrder::citing_cited;
      else if (order == "cited_citing") d.cites_order = CitesOrder::cited_citing;
      else fail(ErrorCategory::config, "config: dataset.cites_order must be citing_cited|cited_citing");
    }
    std::size_t fw = 0;
    if (s.get("feature_width", fw)) d.feature_width = fw;
    std::string mode;
    if (s.get("hyperedges", mode)) {
      if (mode == "undirected") d.hyperedges = NeighborhoodMode::undirected;
      else if (mode == "cited_only") d.hyperedges = NeighborhoodMode::cited_only;
      else fail(ErrorCategory::config, "config: dataset.hyperedges must be undirected|cited_only");
    }
    s.get("subsample", d.subsample);
    s.get("path", d.path);
    s.get("relabel", d.relabel);
    if (const json* nj = s.child("negatives")) {
      detail::Section ns(*nj, "dataset.negatives");
      std::string scheme = "none";
      ns.get("scheme", scheme);
      d.negatives.scheme = detail::parse_scheme(scheme);
      ns.get("ratio", d.negatives.ratio);
      ns.finish();
    }
    if (const json* pj = s.child("planted")) {
      detail::Section ps(*pj, "dataset.planted");
      auto& p = d.planted;
      ps.get("vertices", p.vertices);
      ps.get("communities", p.communities);
      ps.get("sets", p.sets);
      ps.get("min_cardinality", p.min_cardinality);
      ps.get("max_cardinality", p.max_cardinality);
      ps.get("cardinality_decay", p.cardinality_decay);
      ps.get("noise", p.noise);
      ps.finish();
    }
    s.finish();
    static const std::set<std::string> types{"citation", "pubmed", "sets", "planted_sets"};
    if (!types.count(d.type)) fail(ErrorCategory::config, "config: dataset.type must be citation|pubmed|sets|planted_sets");
    if (d.subsample <= 0.0 || d.subsample > 1.0) fail(ErrorCategory::config, "config: dataset.subsample must lie in (0, 1]");
  }
  if (const json* wj = root.child("walks")) {
    detail::Section s(*wj, "walks");
    s.get("alpha", c.walks.alpha);
    s.get("beta", c.walks.beta);
    s.get("walks_per_start", c.walks.walks_per_start);
    s.get("walk_length", c.walks.walk_length);
    s.finish();
  }
  if (const json* vj = root.child("vertex_embedding")) detail::parse_sgns(*vj, "vertex_embedding", c.vertex_embedding);
  if (const json* hj = root.child("hyperedge_embedding")) detail::parse_sgns(*hj, "hyperedge_embedding", c.hyperedge_embedding);
  if (const json* mj = root.child("model")) {
    detail::Section s(*mj, "model");
    auto& m = c.model;
    s.get("context_layers", m.context_layers);
    s.get("rho_layers", m.rho_layers);
    s.get("fusion_layers", m.fusion_layers);
    s.get("feature_layers", m.feature_layers);
    s.get("phi_layers", m.phi_layers);
    s.get("hidden_width", m.hidden_width);
    s.get("context_out_width", m.context_out_width);
    s.get("use_features", m.use_features);
    std::string variant;
    if (s.get("variant", variant)) m.variant = parse_variant(variant);
    s.get("dropout_rate", m.dropout_rate);
    s.get("learning_rate", m.learning_rate);
    s.get("epochs", m.epochs);
    s.get("batch_size", m.batch_size);
    s.get("patience", m.patience);
    s.finish();
  }
  root.finish();

  if (c.runs < 1) fail(ErrorCategory::config, "config: runs must be >= 1");
  if (c.jobs < 1) fail(ErrorCategory::config, "config: jobs must be >= 1");
  if (c.splits.empty()) fail(ErrorCategory::config, "config: splits must not be empty");
  try {
    c.walks.validate();
    c.vertex_embedding.validate();
    c.hyperedge_embedding.validate();
    for (const auto& f : c.splits) split_ids(10, f, 0);
  } catch (const Error& e) {
    fail(ErrorCategory::config, std::string("config: ") + e.what());
  }
  return c;
}

inline json config_json(const PipelineConfig& c) {
  const auto& d = c.dataset;
  json dj{{"type", d.type},
          {"content", d.content},
          {"nodes", d.nodes},
          {"cites", d.cites},
          {"cites_order", d.cites_order == CitesOrder::citing_cited ? "citing_cited" : "cited_citing"},
          {"hyperedges", d.hyperedges == NeighborhoodMode::undirected ? "undirected" : "cited_only"},
          {"subsample", d.subsample},
          {"path", d.path},
          {"relabel", d.relabel},
          {"negatives", {{"scheme", detail::scheme_name(d.negatives.scheme)}, {"ratio", d.negatives.ratio}}},
          {"planted",
           {{"vertices", d.planted.vertices},
            {"communities", d.planted.communities},
            {"sets", d.planted.sets},
            {"min_cardinality", d.planted.min_cardinality},
            {"max_cardinality", d.planted.max_cardinality},
            {"cardinality_decay", d.planted.cardinality_decay},
            {"noise", d.planted.noise}}}};
  if (d.feature_width) dj["feature_width"] = *d.feature_width;
  const auto& m = c.model;
  json mj{{"context_layers", m.context_layers}, {"rho_layers", m.rho_layers},
          {"fusion_layers", m.fusion_layers},   {"feature_layers", m.feature_layers},
          {"phi_layers", m.phi_layers},         {"hidden_width", m.hidden_width},
          {"context_out_width", m.context_out_width}, {"use_features", m.use_features},
          {"variant", variant_name(m.variant)}, {"dropout_rate", m.dropout_rate},
          {"learning_rate", m.learning_rate},   {"epochs", m.epochs},
          {"batch_size", m.batch_size},         {"patience", m.patience}};
  return {{"version", kConfigVersion},
          {"name", c.name},
          {"seed", c.seed},
          {"runs", c.runs},
          {"jobs", c.jobs},
          {"output", c.output},
          {"splits", c.splits},
          {"dataset", dj},
          {"walks",
           {{"alpha", c.walks.alpha},
            {"beta", c.walks.beta},
            {"walks_per_start", c.walks.walks_per_start},
            {"walk_length", c.walks.walk_length}}},
          {"vertex_embedding", detail::sgns_json(c.vertex_embedding)},
          {"hyperedge_embedding", detail::sgns_json(c.hyperedge_embedding)},
          {"model", mj}};
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::missing_artifact, "cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& ex) {
    fail(ErrorCategory::config, "config '" + path + "' is not valid JSON: " + ex.what());
  }
  return parse_config(j);
}

/// "50:50", "80:10:10".
inline std::string split_tag(const std::vector<double>& fractions) {
  std::string tag;
  for (double f : fractions) {
    if (!tag.empty()) tag += ':';
    tag += std::to_string(static_cast<long long>(std::llround(f * 100.0)));
  }
  return tag;
}

// ---------------------------------------------------------------------------
// Files and manifests.

inline std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::missing_artifact, "missing artifact '" + path.string() + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

inline std::ofstream open_output(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::internal, "cannot write '" + path.string() + "'");
  return out;
}

inline std::ifstream open_artifact(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::missing_artifact, "missing artifact '" + path.string() + "'");
  return in;
}

/// Output locations under the pipeline's root directory.
struct Layout {
  fs::path root;

  fs::path ingest() const { return root / "ingest"; }
  fs::path hypergraph() const { return ingest() / "hypergraph.txt"; }
  fs::path labels() const { return ingest() / "labels.tsv"; }
  fs::path classes() const { return ingest() / "classes.txt"; }
  fs::path features() const { return ingest() / "features.txt"; }
  fs::path walks() const { return root / "walks"; }
  fs::path vertex_corpus() const { return walks() / "vertex_corpus.txt"; }
  fs::path hyperedge_corpus() const { return walks() / "hyperedge_corpus.txt"; }
  fs::path embed() const { return root / "embed"; }
  fs::path vertex_embeddings() const { return embed() / "vertex_embeddings.txt"; }
  fs::path hyperedge_embeddings() const { return embed() / "hyperedge_embeddings.txt"; }
  fs::path vertex_embeddings_csv() const { return embed() / "vertex_embeddings.csv"; }
  fs::path hyperedge_embeddings_csv() const { return embed() / "hyperedge_embeddings.csv"; }
  fs::path train() const { return root / "train"; }
  fs::path run_dir(const std::vector<double>& fractions, std::size_t run) const {
    std::string tag = split_tag(fractions);
    std::replace(tag.begin(), tag.end(), ':', '-');
    return train() / tag / ("run" + std::to_string(run));
  }
  fs::path eval() const { return root / "eval"; }
  fs::path metrics() const { return root / "metrics.csv"; }
  fs::path summary() const { return root / "summary.csv"; }
};

/// Manifest writer: records config, seeds and content hashes of the files a
/// stage read and wrote.
class Manifest {
 public:
  Manifest(std::string stage, const Layout& layout, const PipelineConfig& cfg)
      : layout_(&layout), j_{{"stage", std::move(stage)}, {"schema", 1}, {"config", config_json(cfg)},
                             {"seeds", json::object()}, {"inputs", json::object()}, {"outputs", json::object()}} {}

  void seed(const std::string& name, std::uint64_t value) { j_["seeds"][name] = value; }
  void input(const fs::path& p) { j_["inputs"][relative(p)] = sha256_file(p); }
  void output(const fs::path& p) { j_["outputs"][relative(p)] = sha256_file(p); }
  json& extra() { return j_; }

  void write(const fs::path& dir) const {
    auto out = open_output(dir / "manifest.json");
    out << j_.dump(2) << '\n';
  }

 private:
  std::string relative(const fs::path& p) const { return fs::relative(p, layout_->root).generic_string(); }

  const Layout* layout_;
  json j_;
};

inline json read_manifest(const fs::path& dir) {
  const fs::path p = dir / "manifest.json";
  std::ifstream in(p);
  if (!in) fail(ErrorCategory::missing_artifact, "missing upstream manifest '" + p.string() + "' (run the earlier stage first)");
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    fail(ErrorCategory::data_format, "manifest '" + p.string() + "' is not valid JSON: " + ex.what());
  }
}

/// Checks that `file` exists and still matches the hash recorded by the stage
/// that produced it.
inline void verify_artifact(const Layout& layout, const fs::path& stage_dir, const fs::path& file) {
  const json m = read_manifest(stage_dir);
  const std::string key = fs::relative(file, layout.root).generic_string();
  if (!fs::exists(file)) fail(ErrorCategory::missing_artifact, "missing upstream artifact '" + file.string() + "'");
  if (!m.contains("outputs") || !m["outputs"].contains(key)) {
    fail(ErrorCategory::missing_artifact, "manifest in '" + stage_dir.string() + "' does not list '" + key + "'");
  }
  const std::string actual = sha256_file(file);
  if (m["outputs"][key].get<std::string>() != actual) {
    fail(ErrorCategory::hash_mismatch, "'" + file.string() + "' does not match the hash in its manifest");
  }
}

// ---------------------------------------------------------------------------
// Stages.

struct RunRecord {
  ResultRow row;
  std::vector<double> fractions;
  fs::path dir;
};

inline std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

/// Stage runner. Every stage reads its inputs from files written by the
/// previous stage and verifies them against that stage's manifest.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)), layout_{fs::path(cfg_.output)} {}

  const PipelineConfig& config() const { return cfg_; }
  const Layout& layout() const { return layout_; }

  std::uint64_t stage_seed(std::uint64_t stage) const { return derive_seed(cfg_.seed, stage); }
  std::uint64_t run_seed(std::size_t split_index, std::size_t run) const {
    return derive_seed(cfg_.seed, 0x70, split_index, run);
  }

  void ingest() {
    Manifest man("ingest", layout_, cfg_);
    const auto& d = cfg_.dataset;
    Hypergraph h;
    std::vector<std::size_t> labels;
    std::vector<std::string> classes;
    std::optional<nn::Matrix> features;

    if (d.type == "citation" || d.type == "pubmed") {
      CitationDataset cd;
      if (d.type == "citation") {
        auto content = detail::open_input(d.content);
        auto cites = detail::open_input(d.cites);
        cd = ingest_citation(content, cites, d.cites_order, d.feature_width);
        man.input(d.content);
      } else {
        auto nodes = detail::open_input(d.nodes);
        auto cites = detail::open_input(d.cites);
        cd = ingest_pubmed(nodes, cites, d.feature_width);
        man.input(d.nodes);
      }
      man.input(d.cites);
      if (d.subsample < 1.0) {
        man.seed("subsample", stage_seed(5));
        cd = subsample_papers(cd, d.subsample, stage_seed(5));
      }
      auto nh = neighborhood_hypergraph(cd, d.hyperedges);
      h = std::move(nh.hypergraph);
      labels = cd.labels;
      classes = cd.class_names;
      features = std::move(cd.features);
      spdlog::info("ingested {} papers, {} citations ({} skipped), {} classes", cd.size(), cd.citations.size(),
                   cd.skipped_citations, classes.size());
    } else {
      SetDataset sd;
      if (d.type == "sets") {
        auto in = detail::open_input(d.path);
        sd = read_set_jsonl(in, {d.relabel, stage_seed(6)});
        man.input(d.path);
        man.seed("label_pick", stage_seed(6));
      } else {
        PlantedSetConfig p = d.planted;
        p.seed = stage_seed(9);
        man.seed("planted", p.seed);
        sd = generate_planted_sets(p);
      }
      if (d.negatives.scheme) {
        man.seed("negatives", stage_seed(4));
        sd = synthesize_negatives(sd, *d.negatives.scheme, d.negatives.ratio, stage_seed(4));
      }
      sd = compact_vertices(sd);
      h = set_hypergraph(sd);
      labels = set_labels(sd);
      classes = sd.class_names;
      spdlog::info("ingested {} sets over {} vertices, {} classes", sd.size(), sd.num_vertices(), classes.size());
    }

    {
      auto out = open_output(layout_.hypergraph());
      write_hypergraph(out, h);
    }
    {
      auto out = open_output(layout_.labels());
      write_labels(out, labels, classes);
    }
    {
      auto out = open_output(layout_.classes());
      for (const auto& c : classes) out << c << '\n';
    }
    man.output(layout_.hypergraph());
    man.output(layout_.labels());
    man.output(layout_.classes());
    if (features) {
      auto out = open_output(layout_.features());
      write_features(out, *features);
      out.close();
      man.output(layout_.features());
    } else if (fs::exists(layout_.features())) {
      fs::remove(layout_.features());
    }
    man.extra()["counts"] = {{"vertices", h.num_vertices()}, {"hyperedges", h.num_hyperedges()}, {"classes", classes.size()}};
    man.write(layout_.ingest());
  }

  Hypergraph load_hypergraph() const {
    verify_artifact(layout_, layout_.ingest(), layout_.hypergraph());
    auto in = open_artifact(layout_.hypergraph());
    return read_hypergraph(in);
  }

  void walks() {
    Manifest man("walks", layout_, cfg_);
    Hypergraph h = load_hypergraph();
    man.input(layout_.hypergraph());
    if (!h.is_connected()) spdlog::warn("hypergraph is not connected; walks stay within components");
    WalkConfig wc = cfg_.walks;
    wc.jobs = cfg_.jobs;
    wc.seed = stage_seed(1);
    man.seed("vertex_walks", wc.seed);
    const WalkCorpus vc = generate_vertex_corpus(h, wc);
    wc.seed = stage_seed(2);
    man.seed("hyperedge_walks", wc.seed);
    const WalkCorpus ec = generate_hyperedge_corpus(h, wc);
    {
      auto out = open_output(layout_.vertex_corpus());
      write_corpus(out, vc);
    }
    {
      auto out = open_output(layout_.hyperedge_corpus());
      write_corpus(out, ec);
    }
    man.output(layout_.vertex_corpus());
    man.output(layout_.hyperedge_corpus());
    man.write(layout_.walks());
  }

  void embed() {
    Manifest man("embed", layout_, cfg_);
    Hypergraph h = load_hypergraph();
    verify_artifact(layout_, layout_.walks(), layout_.vertex_corpus());
    verify_artifact(layout_, layout_.walks(), layout_.hyperedge_corpus());
    man.input(layout_.vertex_corpus());
    man.input(layout_.hyperedge_corpus());
    auto embed_one = [&](const fs::path& corpus_path, std::size_t tokens, SgnsConfig sc, std::uint64_t stage,
                         const fs::path& table_path, const fs::path& csv_path, const char* seed_name) {
      auto in = open_artifact(corpus_path);
      const WalkCorpus corpus = read_corpus(in, tokens);
      sc.seed = stage_seed(stage);
      sc.workers = std::min(sc.workers, cfg_.jobs);
      man.seed(seed_name, sc.seed);
      const EmbeddingTable table = train_sgns(corpus, sc);
      {
        auto out = open_output(table_path);
        write_embeddings(out, table);
      }
      {
        auto out = open_output(csv_path);
        write_embeddings_csv(out, table);
      }
      man.output(table_path);
      man.output(csv_path);
    };
    embed_one(layout_.vertex_corpus(), h.num_vertices(), cfg_.vertex_embedding, 3, layout_.vertex_embeddings(),
              layout_.vertex_embeddings_csv(), "vertex_sgns");
    embed_one(layout_.hyperedge_corpus(), h.num_hyperedges(), cfg_.hyperedge_embedding, 4,
              layout_.hyperedge_embeddings(), layout_.hyperedge_embeddings_csv(), "hyperedge_sgns");
    man.write(layout_.embed());
  }

  /// Examples assembled from verified ingest and embed artifacts.
  struct LoadedData {
    Hypergraph hypergraph;
    std::vector<std::size_t> labels;
    std::vector<std::string> classes;
    std::vector<HyperedgeExample> examples;
    std::size_t feature_width = 0;
  };

  LoadedData load_examples() const {
    LoadedData d;
    d.hypergraph = load_hypergraph();
    verify_artifact(layout_, layout_.ingest(), layout_.classes());
    verify_artifact(layout_, layout_.ingest(), layout_.labels());
    {
      auto in = open_artifact(layout_.classes());
      d.classes = read_lines(in);
    }
    {
      auto in = open_artifact(layout_.labels());
      d.labels = read_labels(in, d.classes);
    }
    verify_artifact(layout_, layout_.embed(), layout_.vertex_embeddings());
    verify_artifact(layout_, layout_.embed(), layout_.hyperedge_embeddings());
    EmbeddingTable vt, et;
    {
      auto in = open_artifact(layout_.vertex_embeddings());
      vt = read_embeddings(in);
    }
    {
      auto in = open_artifact(layout_.hyperedge_embeddings());
      et = read_embeddings(in);
    }
    std::optional<nn::Matrix> features;
    if (cfg_.model.use_features) {
      if (!fs::exists(layout_.features())) {
        fail(ErrorCategory::config, "model.use_features is set but the dataset has no features");
      }
      verify_artifact(layout_, layout_.ingest(), layout_.features());
      auto in = open_artifact(layout_.features());
      features = read_features(in);
      d.feature_width = static_cast<std::size_t>(features->cols());
    }
    d.examples = make_examples(d.hypergraph, d.labels, vt, et, features ? &*features : nullptr);
    return d;
  }

  DheConfig model_config(const LoadedData& d, std::uint64_t seed) const {
    DheConfig mc = cfg_.model;
    mc.classes = std::max<std::size_t>(2, d.classes.size());
    mc.context_width = d.examples.empty() ? mc.context_width : static_cast<std::size_t>(d.examples[0].context.size());
    mc.vertex_width = d.examples.empty() ? mc.vertex_width : static_cast<std::size_t>(d.examples[0].member_embeddings.rows());
    mc.feature_width = d.feature_width;
    mc.seed = seed;
    return mc;
  }

  std::vector<RunRecord> train() {
    const LoadedData data = load_examples();
    if (!data.hypergraph.is_connected()) spdlog::warn("hypergraph is not connected");
    std::vector<RunRecord> records;
    for (std::size_t si = 0; si < cfg_.splits.size(); ++si) {
      const auto& fractions = cfg_.splits[si];
      for (std::size_t r = 0; r < cfg_.runs; ++r) {
        const std::uint64_t seed = run_seed(si, r);
        const fs::path dir = layout_.run_dir(fractions, r);
        Manifest man("train", layout_, cfg_);
        man.input(layout_.hypergraph());
        man.input(layout_.labels());
        man.input(layout_.vertex_embeddings());
        man.input(layout_.hyperedge_embeddings());
        if (cfg_.model.use_features) man.input(layout_.features());
        man.seed("run", seed);

        const LabeledSplit split = split_ids(data.examples.size(), fractions, derive_seed(seed, 1));
        const DheConfig mc = model_config(data, derive_seed(seed, 2));
        man.seed("split", split.seed);
        man.seed("model", mc.seed);
        const TrainResult tr = train_dhe(data.examples, split, mc);
        const auto ev = evaluate(tr.model, data.examples, split.test);
        RunRecord rec{score(data, split.test, ev.predictions, split_tag(fractions), r, seed), fractions, dir};
        spdlog::info("{} split {} run {}: micro {:.4f} macro {:.4f} acc {:.4f} ({} epochs)", cfg_.name,
                     rec.row.split, r, rec.row.micro_f1, rec.row.macro_f1, rec.row.accuracy, tr.history.size());

        {
          auto out = open_output(dir / "model.ckpt");
          tr.model.save(out);
        }
        {
          auto out = open_output(dir / "split.json");
          out << json{{"fractions", split.fractions}, {"seed", split.seed}, {"train", split.train},
                      {"validation", split.validation}, {"test", split.test}}
                     .dump()
              << '\n';
        }
        {
          auto out = open_output(dir / "history.csv");
          out << "epoch,train_loss,train_accuracy,validation_loss,validation_accuracy\n";
          char buf[200];
          for (const auto& h : tr.history) {
            std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g\n", h.epoch, h.train_loss, h.train_accuracy,
                          h.validation_loss.value_or(NAN), h.validation_accuracy.value_or(NAN));
            out << buf;
          }
        }
        man.output(dir / "model.ckpt");
        man.output(dir / "split.json");
        man.output(dir / "history.csv");
        man.extra()["best_epoch"] = tr.best_epoch;
        man.extra()["test_metrics"] = {{"micro_f1", rec.row.micro_f1},
                                       {"macro_f1", rec.row.macro_f1},
                                       {"accuracy", rec.row.accuracy}};
        man.write(dir);
        records.push_back(std::move(rec));
      }
    }
    write_metrics(layout_.train() / "metrics.csv", records);
    return records;
  }

  /// Re-scores every trained checkpoint on its test split and checks the
  /// result against the score recorded at training time.
  std::vector<RunRecord> eval() {
    const LoadedData data = load_examples();
    std::vector<RunRecord> records;
    for (std::size_t si = 0; si < cfg_.splits.size(); ++si) {
      for (std::size_t r = 0; r < cfg_.runs; ++r) {
        const fs::path dir = layout_.run_dir(cfg_.splits[si], r);
        verify_artifact(layout_, dir, dir / "model.ckpt");
        verify_artifact(layout_, dir, dir / "split.json");
        const json man = read_manifest(dir);
        DheModel model;
        {
          auto in = open_artifact(dir / "model.ckpt");
          model = DheModel::load(in);
        }
        json sj;
        {
          auto in = open_artifact(dir / "split.json");
          sj = json::parse(in);
        }
        const auto test = sj.at("test").get<std::vector<std::size_t>>();
        for (std::size_t id : test) {
          if (id >= data.examples.size()) fail(ErrorCategory::data_format, "split.json names an unknown hyperedge");
        }
        const auto predictions = evaluate(model, data.examples, test).predictions;
        const std::uint64_t seed = man.at("seeds").at("run").get<std::uint64_t>();
        RunRecord rec{score(data, test, predictions, split_tag(cfg_.splits[si]), r, seed), cfg_.splits[si], dir};
        const auto& recorded = man.at("test_metrics");
        if (recorded.at("micro_f1").get<double>() != rec.row.micro_f1 ||
            recorded.at("macro_f1").get<double>() != rec.row.macro_f1 ||
            recorded.at("accuracy").get<double>() != rec.row.accuracy) {
          fail(ErrorCategory::reproducibility, "evaluation of '" + dir.string() + "' does not reproduce the recorded test score");
        }
        records.push_back(std::move(rec));
      }
    }
    write_metrics(layout_.eval() / "metrics.csv", records);
    return records;
  }

  /// All stages in order; writes metrics.csv and summary.csv at the root.
  std::vector<RunRecord> run_all() {
    ingest();
    walks();
    embed();
    auto records = train();
    eval();
    write_metrics(layout_.metrics(), records);
    write_summary(layout_.summary(), records);
    return records;
  }

  static void write_metrics(const fs::path& path, const std::vector<RunRecord>& records) {
    auto out = open_output(path);
    write_results_header(out);
    for (const auto& r : records) write_result_row(out, r.row);
  }

  static void write_summary(const fs::path& path, const std::vector<RunRecord>& records) {
    std::map<std::string, std::vector<const RunRecord*>> by_split;
    std::vector<std::string> order;
    for (const auto& r : records) {
      if (!by_split.count(r.row.split)) order.push_back(r.row.split);
      by_split[r.row.split].push_back(&r);
    }
    auto out = open_output(path);
    out << "dataset,split,runs,micro_f1_mean,micro_f1_std,macro_f1_mean,macro_f1_std,accuracy_mean,accuracy_std\n";
    for (const auto& s : order) {
      std::vector<double> mi, ma, ac;
      for (const auto* r : by_split[s]) {
        mi.push_back(r->row.micro_f1);
        ma.push_back(r->row.macro_f1);
        ac.push_back(r->row.accuracy);
      }
      const auto a = aggregate_runs(mi), b = aggregate_runs(ma), c = aggregate_runs(ac);
      char buf[256];
      std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", a.runs, a.mean, a.stddev, b.mean, b.stddev,
                    c.mean, c.stddev);
      out << by_split[s].front()->row.dataset << ',' << s << ',' << buf << '\n';
    }
  }

 private:
  ResultRow score(const LoadedData& d, std::span<const std::size_t> ids, std::span<const std::size_t> predictions,
                  std::string tag, std::size_t run, std::uint64_t seed) const {
    std::vector<std::size_t> truth;
    truth.reserve(ids.size());
    for (std::size_t id : ids) truth.push_back(d.labels[id]);
    const auto cm = ConfusionMatrix::from_predictions(std::max<std::size_t>(2, d.classes.size()), truth, predictions);
    return {cfg_.name, std::move(tag), run, seed, micro_f1(cm), macro_f1(cm), accuracy(cm)};
  }

  PipelineConfig cfg_;
  Layout layout_;
};

}  // namespace hyperwalk
