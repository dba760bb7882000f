#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgrag/concept_extract.hpp"
#include "pgrag/error.hpp"
#include "pgrag/text.hpp"

namespace pgrag {

struct InteractionNode {
  std::string id;
  std::string user_id;
  std::string title;
  std::string text;
  std::string category;
  std::int64_t timestamp = 0;

  bool operator==(const InteractionNode&) const = default;
};

struct ConceptNode {
  std::string id;
  std::string surface;
  std::int64_t doc_count = 0;

  bool operator==(const ConceptNode&) const = default;
};

struct CategoryNode {
  std::string id;
  std::string name;

  bool operator==(const CategoryNode&) const = default;
};

enum class EdgeKind { InteractionCategory = 0, InteractionConcept = 1, ConceptConcept = 2 };

inline constexpr std::size_t kEdgeKindCount = 3;

inline constexpr std::string_view to_string(EdgeKind kind) noexcept {
  switch (kind) {
    case EdgeKind::InteractionCategory: return "interaction_category";
    case EdgeKind::InteractionConcept: return "interaction_concept";
    case EdgeKind::ConceptConcept: return "concept_concept";
  }
  return "";
}

inline std::optional<EdgeKind> edge_kind_from_string(std::string_view s) {
  for (auto kind : {EdgeKind::InteractionCategory, EdgeKind::InteractionConcept, EdgeKind::ConceptConcept}) {
    if (to_string(kind) == s) return kind;
  }
  return std::nullopt;
}

struct Edge {
  EdgeKind kind = EdgeKind::InteractionCategory;
  std::string src;
  std::string dst;
  double weight = 1.0;

  bool operator==(const Edge&) const = default;
};

/// Input to `KnowledgeGraph::add_interaction`.
struct InteractionRecord {
  std::string user_id;
  std::string title;
  std::string text;
  std::string category;
  std::int64_t timestamp = 0;
};

using Neighbor = std::pair<std::string, double>;

/// Concepts of an interaction: title concepts first, then text concepts,
/// deduplicated case-insensitively.
inline std::vector<std::string> interaction_concepts(std::string_view title, std::string_view text,
                                                     const Lexicon& lexicon = {}) {
  auto concepts = extract_concepts(title, lexicon);
  std::set<std::string> seen;
  for (const auto& c : concepts) seen.insert(to_lower(c));
  for (auto& c : extract_concepts(text, lexicon)) {
    if (seen.insert(to_lower(c)).second) concepts.push_back(std::move(c));
  }
  return concepts;
}

inline std::string concept_id_for(std::string_view surface) { return "c:" + std::string(surface); }
inline std::string category_id_for(std::string_view name) { return "k:" + std::string(name); }

/// Heterogeneous graph of interactions, concepts and categories.
///
/// Ingestion is single-writer. Once ingestion is done the graph is only used
/// through const references and may be shared by any number of readers.
class KnowledgeGraph {
 public:
  /// Adds one user event, links its category and extracted concepts, and
  /// returns the new id "i:<user>:<seq>". Category labels are lowercased.
  std::string add_interaction(const InteractionRecord& record, const Lexicon& lexicon = {}) {
    if (record.user_id.empty()) throw Error(ErrorCode::EmptyUserId, "interaction has no user_id");
    const auto category = to_lower(trim(record.category));
    if (category.empty()) throw Error(ErrorCode::EmptyCategory, "interaction has no category");
    if (record.timestamp < 0) throw Error(ErrorCode::InvalidArgument, "negative timestamp");

    const auto seq = ++user_seq_[record.user_id];
    InteractionNode node{"i:" + record.user_id + ":" + std::to_string(seq), record.user_id, record.title,
                         record.text, category, record.timestamp};
    const auto id = node.id;
    interactions_.emplace(id, std::move(node));
    insert_history(id);

    const auto category_id = category_id_for(category);
    categories_.try_emplace(category_id, CategoryNode{category_id, category});
    insert_edge({EdgeKind::InteractionCategory, id, category_id, 1.0});

    for (const auto& surface : interaction_concepts(record.title, record.text, lexicon)) {
      const auto concept_id = concept_id_for(surface);
      auto [it, inserted] = concepts_.try_emplace(concept_id, ConceptNode{concept_id, surface, 0});
      if (insert_edge({EdgeKind::InteractionConcept, id, concept_id, 1.0})) ++it->second.doc_count;
    }
    return id;
  }

  /// Replaces the derived concept-concept layer. Edges must be canonical (src < dst).
  void set_concept_edges(const std::vector<Edge>& concept_edges) {
    std::vector<Edge> kept;
    for (auto& e : edges_) {
      if (e.kind != EdgeKind::ConceptConcept) kept.push_back(std::move(e));
    }
    edges_ = std::move(kept);
    edge_keys_.clear();
    for (const auto& e : edges_) edge_keys_.insert(edge_key(e));
    for (const auto& e : concept_edges) {
      if (e.kind != EdgeKind::ConceptConcept || !(e.src < e.dst) || !concepts_.count(e.src) ||
          !concepts_.count(e.dst) || e.weight < 0) {
        throw Error(ErrorCode::InvalidArgument, "invalid concept edge " + e.src + " -> " + e.dst);
      }
      insert_edge(e);
    }
    rebuild_adjacency();
  }

  /// Interactions of `user_id` ordered by (timestamp, id).
  std::vector<InteractionNode> get_user_history(const std::string& user_id) const {
    std::vector<InteractionNode> out;
    if (auto it = history_.find(user_id); it != history_.end()) {
      for (const auto& id : it->second) out.push_back(interactions_.at(id));
    }
    return out;
  }

  const std::vector<std::string>& user_history_ids(const std::string& user_id) const {
    static const std::vector<std::string> kEmpty;
    auto it = history_.find(user_id);
    return it == history_.end() ? kEmpty : it->second;
  }

  std::vector<std::string> all_interaction_ids() const {
    std::vector<std::string> ids;
    ids.reserve(interactions_.size());
    for (const auto& [id, node] : interactions_) ids.push_back(id);
    return ids;
  }

  std::vector<std::string> user_ids() const {
    std::vector<std::string> users;
    for (const auto& [user, ids] : history_) users.push_back(user);
    return users;
  }

  /// Neighbors over edges of `kind`, ordered by (weight desc, id asc).
  std::vector<Neighbor> neighbors(const std::string& node_id, EdgeKind kind) const {
    if (!has_node(node_id)) throw Error(ErrorCode::UnknownNode, node_id);
    auto it = adjacency_.find(node_id);
    if (it == adjacency_.end()) return {};
    return it->second[static_cast<std::size_t>(kind)];
  }

  bool has_node(const std::string& id) const {
    return interactions_.count(id) || concepts_.count(id) || categories_.count(id);
  }

  const InteractionNode& interaction(const std::string& id) const {
    auto it = interactions_.find(id);
    if (it == interactions_.end()) throw Error(ErrorCode::UnknownNode, id);
    return it->second;
  }

  const ConceptNode& concept_node(const std::string& id) const {
    auto it = concepts_.find(id);
    if (it == concepts_.end()) throw Error(ErrorCode::UnknownNode, id);
    return it->second;
  }

  const std::map<std::string, InteractionNode>& interactions() const { return interactions_; }
  const std::map<std::string, ConceptNode>& concepts() const { return concepts_; }
  const std::map<std::string, CategoryNode>& categories() const { return categories_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::map<std::string, std::int64_t>& user_seq() const { return user_seq_; }

  /// Value equality over nodes, edges (as a set) and per-user counters.
  bool operator==(const KnowledgeGraph& other) const {
    return interactions_ == other.interactions_ && concepts_ == other.concepts_ &&
           categories_ == other.categories_ && user_seq_ == other.user_seq_ &&
           sorted_edges() == other.sorted_edges();
  }

  std::vector<Edge> sorted_edges() const {
    auto out = edges_;
    std::sort(out.begin(), out.end(), [](const Edge& a, const Edge& b) {
      return std::tie(a.kind, a.src, a.dst) < std::tie(b.kind, b.src, b.dst);
    });
    return out;
  }

  nlohmann::json to_json() const;
  static KnowledgeGraph from_json(const nlohmann::json& doc);

  void save_snapshot(const std::string& path) const;
  static KnowledgeGraph load_snapshot(const std::string& path);

 private:
  static std::string edge_key(const Edge& e) {
    std::string key(to_string(e.kind));
    key.push_back('\x1f');
    key += e.src;
    key.push_back('\x1f');
    key += e.dst;
    return key;
  }

  bool insert_edge(const Edge& e) {
    if (!edge_keys_.insert(edge_key(e)).second) return false;
    edges_.push_back(e);
    add_adjacency(e);
    return true;
  }

  void add_adjacency(const Edge& e) {
    const auto slot = static_cast<std::size_t>(e.kind);
    auto insert_sorted = [](std::vector<Neighbor>& list, Neighbor n) {
      auto pos = std::lower_bound(list.begin(), list.end(), n, [](const Neighbor& a, const Neighbor& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
      });
      list.insert(pos, std::move(n));
    };
    insert_sorted(adjacency_[e.src][slot], {e.dst, e.weight});
    insert_sorted(adjacency_[e.dst][slot], {e.src, e.weight});
  }

  void rebuild_adjacency() {
    adjacency_.clear();
    for (const auto& e : edges_) add_adjacency(e);
  }

  void insert_history(const std::string& id) {
    auto& ids = history_[interactions_.at(id).user_id];
    auto pos = std::lower_bound(ids.begin(), ids.end(), id, [this](const std::string& a, const std::string& b) {
      const auto ta = interactions_.at(a).timestamp;
      const auto tb = interactions_.at(b).timestamp;
      return ta != tb ? ta < tb : a < b;
    });
    ids.insert(pos, id);
  }

  std::map<std::string, InteractionNode> interactions_;
  std::map<std::string, ConceptNode> concepts_;
  std::map<std::string, CategoryNode> categories_;
  std::vector<Edge> edges_;
  std::set<std::string> edge_keys_;
  std::map<std::string, std::array<std::vector<Neighbor>, kEdgeKindCount>> adjacency_;
  std::map<std::string, std::vector<std::string>> history_;
  std::map<std::string, std::int64_t> user_seq_;
};

// ---------------------------------------------------------------------------
// Snapshot format (version 1):
//   {"categories":[{"id","name"}], "concepts":[{"doc_count","id","surface"}],
//    "edges":[[kind, src, dst, weight]], "interactions":[{...}],
//    "user_seq":{user: n}, "version":1}

inline constexpr int kSnapshotVersion = 1;

inline nlohmann::json KnowledgeGraph::to_json() const {
  using nlohmann::json;
  json doc = json::object();
  doc["version"] = kSnapshotVersion;

  json interactions = json::array();
  for (const auto& [id, n] : interactions_) {
    interactions.push_back({{"id", n.id},
                            {"user_id", n.user_id},
                            {"title", n.title},
                            {"text", n.text},
                            {"category", n.category},
                            {"timestamp", n.timestamp}});
  }
  doc["interactions"] = std::move(interactions);

  json concepts = json::array();
  for (const auto& [id, c] : concepts_) {
    concepts.push_back({{"id", c.id}, {"surface", c.surface}, {"doc_count", c.doc_count}});
  }
  doc["concepts"] = std::move(concepts);

  json categories = json::array();
  for (const auto& [id, c] : categories_) categories.push_back({{"id", c.id}, {"name", c.name}});
  doc["categories"] = std::move(categories);

  json edges = json::array();
  for (const auto& e : sorted_edges()) edges.push_back(json::array({to_string(e.kind), e.src, e.dst, e.weight}));
  doc["edges"] = std::move(edges);

  json seq = json::object();
  for (const auto& [user, n] : user_seq_) seq[user] = n;
  doc["user_seq"] = std::move(seq);
  return doc;
}

namespace detail {

[[noreturn]] inline void corrupt(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::CorruptSnapshot, path + ": " + what);
}

inline const nlohmann::json& require(const nlohmann::json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) corrupt(path + "/" + key, "missing");
  return obj.at(key);
}

inline std::string require_string(const nlohmann::json& obj, const std::string& key, const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_string()) corrupt(path + "/" + key, "expected string");
  return v.get<std::string>();
}

inline std::int64_t require_count(const nlohmann::json& obj, const std::string& key, const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) corrupt(path + "/" + key, "expected non-negative integer");
  return v.get<std::int64_t>();
}

inline const nlohmann::json& require_array(const nlohmann::json& obj, const std::string& key, const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_array()) corrupt(path + "/" + key, "expected array");
  return v;
}

}  // namespace detail

inline KnowledgeGraph KnowledgeGraph::from_json(const nlohmann::json& doc) {
  using detail::corrupt;
  if (!doc.is_object()) corrupt("", "expected object");
  const auto& version = detail::require(doc, "version", "");
  if (!version.is_number_integer() || version.get<int>() != kSnapshotVersion) {
    corrupt("/version", "unsupported snapshot version");
  }

  KnowledgeGraph g;
  const auto& interactions = detail::require_array(doc, "interactions", "");
  for (std::size_t i = 0; i < interactions.size(); ++i) {
    const auto path = "/interactions/" + std::to_string(i);
    const auto& item = interactions[i];
    InteractionNode n{detail::require_string(item, "id", path),       detail::require_string(item, "user_id", path),
                      detail::require_string(item, "title", path),    detail::require_string(item, "text", path),
                      detail::require_string(item, "category", path), detail::require_count(item, "timestamp", path)};
    if (n.user_id.empty()) corrupt(path + "/user_id", "empty");
    if (n.category.empty()) corrupt(path + "/category", "empty");
    if (!g.interactions_.emplace(n.id, n).second) corrupt(path + "/id", "duplicate id");
    g.insert_history(n.id);
  }

  const auto& concepts = detail::require_array(doc, "concepts", "");
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    const auto path = "/concepts/" + std::to_string(i);
    ConceptNode c{detail::require_string(concepts[i], "id", path), detail::require_string(concepts[i], "surface", path),
                  detail::require_count(concepts[i], "doc_count", path)};
    if (c.surface.empty()) corrupt(path + "/surface", "empty");
    if (!g.concepts_.emplace(c.id, c).second) corrupt(path + "/id", "duplicate id");
  }

  const auto& categories = detail::require_array(doc, "categories", "");
  for (std::size_t i = 0; i < categories.size(); ++i) {
    const auto path = "/categories/" + std::to_string(i);
    CategoryNode c{detail::require_string(categories[i], "id", path),
                   detail::require_string(categories[i], "name", path)};
    if (c.name.empty()) corrupt(path + "/name", "empty");
    if (!g.categories_.emplace(c.id, c).second) corrupt(path + "/id", "duplicate id");
  }

  const auto& edges = detail::require_array(doc, "edges", "");
  std::map<std::string, std::int64_t> category_edges;
  std::map<std::string, std::int64_t> concept_degree;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto path = "/edges/" + std::to_string(i);
    const auto& t = edges[i];
    if (!t.is_array() || t.size() != 4 || !t[0].is_string() || !t[1].is_string() || !t[2].is_string() ||
        !t[3].is_number()) {
      corrupt(path, "expected [kind, src, dst, weight]");
    }
    const auto kind = edge_kind_from_string(t[0].get<std::string>());
    if (!kind) corrupt(path + "/0", "unknown edge kind");
    Edge e{*kind, t[1].get<std::string>(), t[2].get<std::string>(), t[3].get<double>()};
    if (e.weight < 0) corrupt(path + "/3", "negative weight");
    switch (e.kind) {
      case EdgeKind::InteractionCategory:
        if (!g.interactions_.count(e.src)) corrupt(path + "/1", "unknown interaction");
        if (!g.categories_.count(e.dst)) corrupt(path + "/2", "unknown category");
        ++category_edges[e.src];
        break;
      case EdgeKind::InteractionConcept:
        if (!g.interactions_.count(e.src)) corrupt(path + "/1", "unknown interaction");
        if (!g.concepts_.count(e.dst)) corrupt(path + "/2", "unknown concept");
        ++concept_degree[e.dst];
        break;
      case EdgeKind::ConceptConcept:
        if (!g.concepts_.count(e.src)) corrupt(path + "/1", "unknown concept");
        if (!g.concepts_.count(e.dst)) corrupt(path + "/2", "unknown concept");
        if (!(e.src < e.dst)) corrupt(path, "concept edge not canonical");
        break;
    }
    if (!g.insert_edge(e)) corrupt(path, "duplicate edge");
  }
  for (const auto& [id, n] : g.interactions_) {
    if (category_edges[id] != 1) corrupt("/edges", "interaction " + id + " needs exactly one category edge");
  }
  for (const auto& [id, c] : g.concepts_) {
    if (concept_degree[id] != c.doc_count) corrupt("/concepts", "doc_count mismatch for " + id);
  }

  const auto& seq = detail::require(doc, "user_seq", "");
  if (!seq.is_object()) corrupt("/user_seq", "expected object");
  for (const auto& [user, n] : seq.items()) {
    if (!n.is_number_integer() || n.get<std::int64_t>() < 0) corrupt("/user_seq/" + user, "expected count");
    g.user_seq_[user] = n.get<std::int64_t>();
  }
  return g;
}

inline void KnowledgeGraph::save_snapshot(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write snapshot " + path);
  out << to_json().dump(1) << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path);
}

inline KnowledgeGraph KnowledgeGraph::load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read snapshot " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::CorruptSnapshot, std::string("malformed JSON: ") + e.what());
  }
  return from_json(doc);
}

}  // namespace pgrag
