#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "json.hpp"

#include "hyperwalk/error.hpp"
#include "hyperwalk/hypergraph.hpp"
#include "hyperwalk/neural.hpp"
#include "hyperwalk/rng.hpp"
#include "hyperwalk/split.hpp"

namespace hyperwalk {

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    std::string_view f = line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start);
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.remove_suffix(1);
    while (!f.empty() && f.front() == ' ') f.remove_prefix(1);
    out.push_back(f);
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

inline double parse_real(std::string_view s, const std::string& where) {
  double x = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    fail(ErrorCategory::data_format, where + ": expected a number, got '" + std::string(s) + "'");
  }
  return x;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::missing_artifact, "cannot open '" + path + "'");
  return in;
}

// Dense class ids in sorted name order.
inline std::vector<std::size_t> index_labels(const std::vector<std::string>& raw, std::vector<std::string>& names) {
  std::set<std::string> distinct(raw.begin(), raw.end());
  names.assign(distinct.begin(), distinct.end());
  std::vector<std::size_t> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(static_cast<std::size_t>(std::lower_bound(names.begin(), names.end(), r) - names.begin()));
  return out;
}

}  // namespace detail

/// Papers with features, class labels and directed citations.
struct CitationDataset {
  std::vector<std::string> paper_ids;
  nn::Matrix features;  // one row per paper
  std::vector<std::size_t> labels;
  std::vector<std::string> class_names;
  std::vector<std::pair<std::size_t, std::size_t>> citations;  // (citing, cited)
  std::size_t skipped_citations = 0;

  std::size_t size() const { return paper_ids.size(); }
};

enum class CitesOrder { citing_cited, cited_citing };

namespace detail {

inline void index_papers(CitationDataset& d, std::unordered_map<std::string, std::size_t>& index) {
  index.reserve(d.paper_ids.size());
  for (std::size_t i = 0; i < d.paper_ids.size(); ++i) {
    if (!index.emplace(d.paper_ids[i], i).second) {
      fail(ErrorCategory::data_format, "duplicate paper id '" + d.paper_ids[i] + "'");
    }
  }
}

inline void add_citation(CitationDataset& d, const std::unordered_map<std::string, std::size_t>& index,
                         std::string_view citing, std::string_view cited) {
  auto a = index.find(std::string(citing));
  auto b = index.find(std::string(cited));
  if (a == index.end() || b == index.end()) {
    ++d.skipped_citations;
    return;
  }
  d.citations.emplace_back(a->second, b->second);
}

}  // namespace detail

/// Cora-style files. Content: `id f1 .. fk label` (tab separated); cites: two
/// paper ids per line. Citations naming unknown papers are skipped and
/// counted. `declared_width`, when set, is checked against k.
inline CitationDataset ingest_citation(std::istream& content, std::istream& cites,
                                       CitesOrder order = CitesOrder::citing_cited,
                                       std::optional<std::size_t> declared_width = std::nullopt) {
  CitationDataset d;
  std::vector<std::string> raw_labels;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0, width = 0;
  while (std::getline(content, line)) {
    ++line_no;
    auto f = detail::split_fields(line);
    if (f.empty()) continue;
    const std::string where = "content line " + std::to_string(line_no);
    if (f.size() < 2) fail(ErrorCategory::data_format, where + ": expected `id features... label`");
    const std::size_t k = f.size() - 2;
    if (rows.empty()) width = k;
    else if (k != width) {
      fail(ErrorCategory::data_format, where + ": " + std::to_string(k) + " features, expected " + std::to_string(width));
    }
    std::vector<double> row(k);
    for (std::size_t i = 0; i < k; ++i) row[i] = detail::parse_real(f[i + 1], where);
    d.paper_ids.emplace_back(f.front());
    raw_labels.emplace_back(f.back());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCategory::data_format, "content file has no papers");
  if (declared_width && *declared_width != width) {
    fail(ErrorCategory::data_format, "feature width " + std::to_string(width) + " != declared " +
                                         std::to_string(*declared_width));
  }
  d.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) d.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  d.labels = detail::index_labels(raw_labels, d.class_names);

  std::unordered_map<std::string, std::size_t> index;
  detail::index_papers(d, index);
  line_no = 0;
  while (std::getline(cites, line)) {
    ++line_no;
    auto f = detail::split_fields(line);
    if (f.empty()) continue;
    if (f.size() != 2) fail(ErrorCategory::data_format, "cites line " + std::to_string(line_no) + ": expected two ids");
    if (order == CitesOrder::citing_cited) detail::add_citation(d, index, f[0], f[1]);
    else detail::add_citation(d, index, f[1], f[0]);
  }
  if (d.skipped_citations) spdlog::warn("skipped {} citations naming unknown papers", d.skipped_citations);
  return d;
}

/// PubMed-Diabetes native TSV files (`*.NODE.paper.tab`,
/// `*.DIRECTED.cites.tab`). Features are the TF-IDF word weights declared in
/// the node file's second header line; absent words are 0.
inline CitationDataset ingest_pubmed(std::istream& nodes, std::istream& cites,
                                     std::optional<std::size_t> declared_width = std::nullopt) {
  CitationDataset d;
  std::string line;
  if (!std::getline(nodes, line)) fail(ErrorCategory::data_format, "pubmed node file is empty");
  if (!std::getline(nodes, line)) fail(ErrorCategory::data_format, "pubmed node file lacks the feature header");
  std::unordered_map<std::string, std::size_t> vocab;
  for (auto f : detail::split_tabs(line)) {
    // numeric:<word>:0.0
    if (f.rfind("numeric:", 0) != 0) continue;
    auto rest = f.substr(8);
    auto colon = rest.rfind(':');
    std::string word(rest.substr(0, colon));
    vocab.emplace(word, vocab.size());
  }
  if (vocab.empty()) fail(ErrorCategory::data_format, "pubmed node header declares no numeric features");
  if (declared_width && *declared_width != vocab.size()) {
    fail(ErrorCategory::data_format, "pubmed feature width " + std::to_string(vocab.size()) + " != declared " +
                                         std::to_string(*declared_width));
  }
  std::vector<std::string> raw_labels;
  std::vector<std::vector<std::pair<std::size_t, double>>> sparse;
  std::size_t line_no = 2;
  while (std::getline(nodes, line)) {
    ++line_no;
    auto f = detail::split_tabs(line);
    if (f.size() == 1 && f[0].empty()) continue;
    const std::string where = "pubmed node line " + std::to_string(line_no);
    if (f.size() < 2) fail(ErrorCategory::data_format, where + ": expected `id label=k ...`");
    std::optional<std::string> label;
    std::vector<std::pair<std::size_t, double>> entries;
    for (std::size_t i = 1; i < f.size(); ++i) {
      auto eq = f[i].find('=');
      if (eq == std::string_view::npos) fail(ErrorCategory::data_format, where + ": malformed field");
      auto key = f[i].substr(0, eq), value = f[i].substr(eq + 1);
      if (key == "label") label = std::string(value);
      else if (key == "summary") continue;
      else if (auto it = vocab.find(std::string(key)); it != vocab.end()) {
        entries.emplace_back(it->second, detail::parse_real(value, where));
      } else {
        fail(ErrorCategory::data_format, where + ": unknown feature '" + std::string(key) + "'");
      }
    }
    if (!label) fail(ErrorCategory::data_format, where + ": missing label");
    d.paper_ids.emplace_back(f[0]);
    raw_labels.push_back(*label);
    sparse.push_back(std::move(entries));
  }
  if (sparse.empty()) fail(ErrorCategory::data_format, "pubmed node file has no papers");
  d.features = nn::Matrix::Zero(static_cast<Eigen::Index>(sparse.size()), static_cast<Eigen::Index>(vocab.size()));
  for (std::size_t r = 0; r < sparse.size(); ++r) {
    for (auto [c, v] : sparse[r]) d.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
  }
  d.labels = detail::index_labels(raw_labels, d.class_names);

  std::unordered_map<std::string, std::size_t> index;
  detail::index_papers(d, index);
  line_no = 0;
  auto strip = [](std::string_view s) {
    if (s.rfind("paper:", 0) == 0) s.remove_prefix(6);
    return s;
  };
  while (std::getline(cites, line)) {
    ++line_no;
    auto f = detail::split_fields(line);
    if (f.empty() || line_no <= 2) continue;  // DIRECTED / NO_FEATURES header
    // <edge id> paper:<citing> | paper:<cited>
    if (f.size() != 4 || f[2] != "|") {
      fail(ErrorCategory::data_format, "pubmed cites line " + std::to_string(line_no) + ": malformed");
    }
    detail::add_citation(d, index, strip(f[1]), strip(f[3]));
  }
  if (d.skipped_citations) spdlog::warn("skipped {} citations naming unknown papers", d.skipped_citations);
  return d;
}

/// Keeps a seeded uniform `fraction` of the papers and the citations among
/// them. Paper order is preserved.
inline CitationDataset subsample_papers(const CitationDataset& d, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction <= 1.0, "subsample fraction must lie in (0, 1]");
  if (fraction == 1.0) return d;
  const auto keep_count = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(d.size()))));
  std::vector<std::size_t> order(d.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, 0x5ab5));
  rng.shuffle(std::span<std::size_t>(order));
  order.resize(std::min(keep_count, order.size()));
  std::sort(order.begin(), order.end());
  std::vector<std::ptrdiff_t> remap(d.size(), -1);
  CitationDataset out;
  out.class_names = d.class_names;
  out.features.resize(static_cast<Eigen::Index>(order.size()), d.features.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    remap[order[k]] = static_cast<std::ptrdiff_t>(k);
    out.paper_ids.push_back(d.paper_ids[order[k]]);
    out.labels.push_back(d.labels[order[k]]);
    out.features.row(static_cast<Eigen::Index>(k)) = d.features.row(static_cast<Eigen::Index>(order[k]));
  }
  for (auto [a, b] : d.citations) {
    if (remap[a] >= 0 && remap[b] >= 0) out.citations.emplace_back(remap[a], remap[b]);
  }
  return out;
}

enum class NeighborhoodMode {
  undirected,  // centroid ∪ citing ∪ cited
  cited_only,  // centroid ∪ works it cites
};

struct NeighborhoodHypergraph {
  Hypergraph hypergraph;
  std::vector<std::size_t> centroid;  // hyperedge -> paper (identity)
};

/// One hyperedge per paper: the paper together with its citation
/// neighbourhood. Vertices are papers; hyperedge i is centred on paper i.
inline NeighborhoodHypergraph neighborhood_hypergraph(const CitationDataset& d,
                                                      NeighborhoodMode mode = NeighborhoodMode::undirected) {
  std::vector<std::vector<VertexId>> edges(d.size());
  for (std::size_t p = 0; p < d.size(); ++p) edges[p].push_back(static_cast<VertexId>(p));
  for (auto [citing, cited] : d.citations) {
    edges[citing].push_back(static_cast<VertexId>(cited));
    if (mode == NeighborhoodMode::undirected) edges[cited].push_back(static_cast<VertexId>(citing));
  }
  for (auto& e : edges) {
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
  }
  NeighborhoodHypergraph out;
  out.hypergraph = Hypergraph::build(edges, d.size());
  out.centroid.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out.centroid[i] = i;
  return out;
}

/// Records of (id, member vertices, class).
struct SetRecord {
  std::string id;
  std::vector<VertexId> members;
  std::size_t label = 0;
};

struct SetDataset {
  std::vector<SetRecord> records;
  std::vector<std::string> class_names;
  std::vector<std::string> vertex_names;

  std::size_t num_vertices() const { return vertex_names.size(); }
  std::size_t size() const { return records.size(); }
};

struct SetReadOptions {
  /// Label renaming applied before indexing; key "*" catches every label
  /// without its own entry.
  std::map<std::string, std::string> relabel;
  std::uint64_t seed = 0;  // picks among multiple labels
};

/// JSON lines: {"id": ..., "members": [...], "label": "name" | ["a", "b"]}.
/// Member ids may be strings or integers; they are indexed densely in order
/// of first appearance. With several labels one is picked uniformly.
inline SetDataset read_set_jsonl(std::istream& in, const SetReadOptions& opts = {}) {
  SetDataset d;
  std::unordered_map<std::string, VertexId> vertex_index;
  std::vector<std::string> raw_labels;
  std::string line;
  std::size_t line_no = 0;
  auto member_key = [](const nlohmann::json& m) -> std::string {
    if (m.is_string()) return m.get<std::string>();
    if (m.is_number_integer()) return std::to_string(m.get<long long>());
    fail(ErrorCategory::data_format, "member ids must be strings or integers");
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "set line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorCategory::data_format, where + ": " + ex.what());
    }
    if (!j.is_object() || !j.contains("members") || !j.contains("label")) {
      fail(ErrorCategory::data_format, where + ": expected an object with members and label");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() != "id" && it.key() != "members" && it.key() != "label") {
        fail(ErrorCategory::data_format, where + ": unknown key '" + it.key() + "'");
      }
    }
    SetRecord rec;
    rec.id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump())
                              : std::to_string(d.records.size());
    if (!j["members"].is_array() || j["members"].empty()) fail(ErrorCategory::data_format, where + ": members must be a nonempty array");
    for (const auto& m : j["members"]) {
      auto key = member_key(m);
      auto [it, fresh] = vertex_index.emplace(key, static_cast<VertexId>(d.vertex_names.size()));
      if (fresh) d.vertex_names.push_back(key);
      rec.members.push_back(it->second);
    }
    std::sort(rec.members.begin(), rec.members.end());
    rec.members.erase(std::unique(rec.members.begin(), rec.members.end()), rec.members.end());

    std::string label;
    const auto& l = j["label"];
    if (l.is_string()) {
      label = l.get<std::string>();
    } else if (l.is_array() && !l.empty() && std::all_of(l.begin(), l.end(), [](const auto& x) { return x.is_string(); })) {
      Rng rng(derive_seed(opts.seed, 0x1abe1, d.records.size()));
      label = l[rng.index(l.size())].get<std::string>();
    } else {
      fail(ErrorCategory::data_format, where + ": label must be a string or nonempty array of strings");
    }
    if (auto it = opts.relabel.find(label); it != opts.relabel.end()) label = it->second;
    else if (auto star = opts.relabel.find("*"); star != opts.relabel.end()) label = star->second;
    raw_labels.push_back(label);
    d.records.push_back(std::move(rec));
  }
  if (d.records.empty()) fail(ErrorCategory::data_format, "set dataset has no records");
  auto idx = detail::index_labels(raw_labels, d.class_names);
  for (std::size_t i = 0; i < idx.size(); ++i) d.records[i].label = idx[i];
  return d;
}

inline void write_set_jsonl(std::ostream& out, const SetDataset& d) {
  for (const auto& r : d.records) {
    nlohmann::json members = nlohmann::json::array();
    for (VertexId v : r.members) members.push_back(d.vertex_names[v]);
    out << nlohmann::json{{"id", r.id}, {"members", members}, {"label", d.class_names[r.label]}}.dump() << '\n';
  }
}

enum class NegativeScheme {
  uniform_cardinality,    // n ~ U{min positive card .. max positive card}
  empirical_cardinality,  // n drawn from the positive cardinalities
};

inline constexpr const char* kNegativeClass = "negative";

/// Appends round(ratio * positives) random sets labelled with a new
/// `negative` class. Members are distinct vertices drawn uniformly; a set
/// equal to an existing positive is redrawn.
inline SetDataset synthesize_negatives(const SetDataset& d, NegativeScheme scheme, double ratio, std::uint64_t seed) {
  if (d.records.empty()) fail(ErrorCategory::invalid_argument, "negative synthesis needs positive records");
  require(ratio >= 0.0, "negative ratio must be >= 0");
  if (std::find(d.class_names.begin(), d.class_names.end(), kNegativeClass) != d.class_names.end()) {
    fail(ErrorCategory::invalid_argument, "dataset already has a 'negative' class");
  }
  std::vector<std::size_t> cards;
  cards.reserve(d.records.size());
  std::set<std::vector<VertexId>> positives;
  for (const auto& r : d.records) {
    cards.push_back(r.members.size());
    positives.insert(r.members);
  }
  const auto [lo, hi] = std::minmax_element(cards.begin(), cards.end());
  const std::size_t universe = d.num_vertices();
  const std::size_t max_needed = scheme == NegativeScheme::uniform_cardinality ? *hi : *std::max_element(cards.begin(), cards.end());
  if (universe < max_needed) {
    fail(ErrorCategory::invalid_argument, "vertex universe (" + std::to_string(universe) +
                                              ") smaller than requested negative cardinality " + std::to_string(max_needed));
  }

  SetDataset out = d;
  const std::size_t negative_label = out.class_names.size();
  out.class_names.push_back(kNegativeClass);
  const auto count = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(d.records.size())));
  Rng rng(derive_seed(seed, 0x4e6a));
  std::vector<VertexId> members;
  std::unordered_set<VertexId> chosen;
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t attempt = 0;; ++attempt) {
      if (attempt > 1000) fail(ErrorCategory::invalid_argument, "could not synthesize a negative distinct from all positives");
      const std::size_t n = scheme == NegativeScheme::uniform_cardinality ? *lo + rng.index(*hi - *lo + 1)
                                                                          : cards[rng.index(cards.size())];
      // Floyd's algorithm: n distinct ids from [0, universe).
      chosen.clear();
      members.clear();
      for (std::size_t j = universe - n; j < universe; ++j) {
        auto t = static_cast<VertexId>(rng.index(j + 1));
        if (!chosen.insert(t).second) {
          t = static_cast<VertexId>(j);
          chosen.insert(t);
        }
        members.push_back(t);
      }
      std::sort(members.begin(), members.end());
      if (!positives.count(members)) break;
    }
    out.records.push_back({"neg" + std::to_string(k), members, negative_label});
  }
  return out;
}

/// Drops vertices that no record uses and re-indexes the rest in order.
inline SetDataset compact_vertices(const SetDataset& d) {
  std::vector<char> used(d.num_vertices(), 0);
  for (const auto& r : d.records) for (VertexId v : r.members) used[v] = 1;
  std::vector<VertexId> remap(d.num_vertices(), 0);
  SetDataset out;
  out.class_names = d.class_names;
  for (std::size_t v = 0; v < d.num_vertices(); ++v) {
    if (!used[v]) continue;
    remap[v] = static_cast<VertexId>(out.vertex_names.size());
    out.vertex_names.push_back(d.vertex_names[v]);
  }
  out.records = d.records;
  for (auto& r : out.records) for (VertexId& v : r.members) v = remap[v];
  return out;
}

/// Hypergraph over the dataset's vertex universe; hyperedge i is record i.
inline Hypergraph set_hypergraph(const SetDataset& d) {
  std::vector<std::vector<VertexId>> edges;
  edges.reserve(d.records.size());
  for (const auto& r : d.records) edges.push_back(r.members);
  return Hypergraph::build(edges, std::max<std::size_t>(1, d.num_vertices()));
}

inline std::vector<std::size_t> set_labels(const SetDataset& d) {
  std::vector<std::size_t> out;
  out.reserve(d.records.size());
  for (const auto& r : d.records) out.push_back(r.label);
  return out;
}

/// Parameters of the planted community set generator.
struct PlantedSetConfig {
  std::size_t vertices = 2000;
  std::size_t communities = 40;
  std::size_t sets = 1200;
  std::size_t min_cardinality = 2;
  std::size_t max_cardinality = 40;
  double cardinality_decay = 1.6;  // P(n) ∝ n^-decay on [min, max]
  double noise = 0.1;              // chance a member comes from outside the community
  std::uint64_t seed = 7;
};

/// Positive sets drawn from planted vertex communities, in the spirit of
/// protein-complex data: small sets dominate and members mostly share a
/// community. All records carry the class "positive".
inline SetDataset generate_planted_sets(const PlantedSetConfig& cfg) {
  require(cfg.communities >= 1 && cfg.vertices >= cfg.communities, "planted sets: need vertices >= communities >= 1");
  require(cfg.min_cardinality >= 1 && cfg.min_cardinality <= cfg.max_cardinality, "planted sets: bad cardinality range");
  const std::size_t community_size = cfg.vertices / cfg.communities;
  require(community_size >= cfg.max_cardinality, "planted sets: communities smaller than max cardinality");
  Rng rng(derive_seed(cfg.seed, 0x91a7));
  std::vector<double> cdf;
  double total = 0.0;
  for (std::size_t n = cfg.min_cardinality; n <= cfg.max_cardinality; ++n) {
    total += std::pow(static_cast<double>(n), -cfg.cardinality_decay);
    cdf.push_back(total);
  }
  SetDataset d;
  d.class_names = {"positive"};
  for (std::size_t v = 0; v < cfg.vertices; ++v) d.vertex_names.push_back("v" + std::to_string(v));
  std::set<std::vector<VertexId>> seen;
  std::unordered_set<VertexId> chosen;
  while (d.records.size() < cfg.sets) {
    const double u = rng.uniform() * total;
    const std::size_t n = cfg.min_cardinality + static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    const std::size_t c = rng.index(cfg.communities);
    chosen.clear();
    std::vector<VertexId> members;
    while (members.size() < std::min(n, cfg.max_cardinality)) {
      VertexId v = rng.bernoulli(cfg.noise) ? static_cast<VertexId>(rng.index(cfg.vertices))
                                            : static_cast<VertexId>(c * community_size + rng.index(community_size));
      if (chosen.insert(v).second) members.push_back(v);
    }
    std::sort(members.begin(), members.end());
    if (!seen.insert(members).second) continue;
    d.records.push_back({"p" + std::to_string(d.records.size()), std::move(members), 0});
  }
  return d;
}

// Labels file: `hyperedge_id<TAB>label` per line, label as class name.

inline void write_labels(std::ostream& out, std::span<const std::size_t> labels, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << '\t' << names.at(labels[i]) << '\n';
}

/// Reads a labels file; class names are indexed in sorted order unless
/// `names` is already populated.
inline std::vector<std::size_t> read_labels(std::istream& in, std::vector<std::string>& names) {
  std::vector<std::pair<std::size_t, std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = detail::split_tabs(line);
    std::size_t id = 0;
    if (f.size() != 2 || std::from_chars(f[0].data(), f[0].data() + f[0].size(), id).ec != std::errc()) {
      fail(ErrorCategory::data_format, "labels line " + std::to_string(line_no) + ": expected `id<TAB>label`");
    }
    if (id != rows.size()) fail(ErrorCategory::data_format, "labels line " + std::to_string(line_no) + ": ids must be 0..n-1 in order");
    rows.emplace_back(id, std::string(f[1]));
  }
  std::vector<std::string> raw;
  for (auto& [id, l] : rows) raw.push_back(l);
  if (names.empty()) return detail::index_labels(raw, names);
  std::vector<std::size_t> out;
  for (const auto& l : raw) {
    auto it = std::find(names.begin(), names.end(), l);
    if (it == names.end()) fail(ErrorCategory::data_format, "labels file names unknown class '" + l + "'");
    out.push_back(static_cast<std::size_t>(it - names.begin()));
  }
  return out;
}

// Feature file: `<rows> <cols>` then one row per line; shortest round-trip
// decimal representation.

inline void write_features(std::ostream& out, const nn::Matrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  char buf[64];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      auto res = std::to_chars(buf, buf + sizeof buf, m(r, c));
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

inline nn::Matrix read_features(std::istream& in) {
  std::size_t rows = 0, cols = 0;
  std::string line;
  if (!std::getline(in, line) || std::sscanf(line.c_str(), "%zu %zu", &rows, &cols) != 2) {
    fail(ErrorCategory::data_format, "feature header malformed");
  }
  nn::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) fail(ErrorCategory::data_format, "feature file truncated");
    auto f = detail::split_fields(line);
    if (f.size() != cols) fail(ErrorCategory::data_format, "feature row " + std::to_string(r) + " has wrong width");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = detail::parse_real(f[c], "feature row " + std::to_string(r));
    }
  }
  return m;
}

}  // namespace hyperwalk
