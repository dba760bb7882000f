#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgrag/error.hpp"
#include "pgrag/graph_store.hpp"
#include "pgrag/text.hpp"
#include "pgrag/tfidf_index.hpp"

namespace pgrag {

enum class TaskKind { Classification, Rating };

struct Query {
  std::string user_id;
  std::string text;
  TaskKind task = TaskKind::Classification;
  std::vector<std::string> candidate_labels;
};

/// Retrieval sizes. Zero disables a source (used for ablations).
struct RetrievalConfig {
  std::size_t k_user = 5;
  std::size_t k_global = 5;
  std::size_t m_concepts = 10;
};

/// Normalized category frequencies, ordered by (probability desc, label asc).
struct CategoryPreference {
  std::vector<std::pair<std::string, double>> distribution;

  bool operator==(const CategoryPreference&) const = default;
};

struct ScoredConcept {
  std::string surface;
  std::int64_t score = 0;

  bool operator==(const ScoredConcept&) const = default;
};

struct SemanticContext {
  std::vector<ScoredInteraction> user_hits;
  std::vector<ScoredInteraction> global_hits;
  std::optional<CategoryPreference> category_prefs;  // nullopt for users without history
  std::vector<std::string> concepts;

  bool operator==(const SemanticContext&) const = default;

  nlohmann::json to_json() const {
    using nlohmann::json;
    auto hits = [](const std::vector<ScoredInteraction>& list) {
      json out = json::array();
      for (const auto& h : list) out.push_back({{"id", h.interaction_id}, {"score", h.score}, {"timestamp", h.timestamp}});
      return out;
    };
    json doc = json::object();
    doc["user_hits"] = hits(user_hits);
    doc["global_hits"] = hits(global_hits);
    if (category_prefs) {
      json prefs = json::array();
      for (const auto& [label, p] : category_prefs->distribution) prefs.push_back(json::array({label, p}));
      doc["category_prefs"] = std::move(prefs);
    } else {
      doc["category_prefs"] = nullptr;
    }
    doc["concepts"] = concepts;
    return doc;
  }
};

/// Document text indexed for an interaction.
inline std::string interaction_document(const InteractionNode& node) { return node.title + "\n" + node.text; }

/// Dual-source retrieval over a frozen graph. The graph must outlive the engine.
class ContextEngine {
 public:
  explicit ContextEngine(const KnowledgeGraph& graph) : graph_(graph) {
    std::vector<Document> docs;
    docs.reserve(graph.interactions().size());
    for (const auto& [id, node] : graph.interactions()) docs.push_back({id, interaction_document(node)});
    index_ = TfIdfIndex::build(docs);
  }

  const KnowledgeGraph& graph() const { return graph_; }
  const TfIdfIndex& index() const { return index_; }

  /// Top `k_user` interactions from the user's own history.
  std::vector<ScoredInteraction> retrieve_user(const std::string& user_id, const Query& q,
                                               const RetrievalConfig& cfg) const {
    std::vector<Candidate> pool;
    for (const auto& id : graph_.user_history_ids(user_id)) pool.push_back(candidate(id));
    return top_k(index_.vectorize(q.text), pool, cfg.k_user);
  }

  /// Top `k_global` interactions from every other user's history.
  std::vector<ScoredInteraction> retrieve_global(const std::string& user_id, const Query& q,
                                                 const RetrievalConfig& cfg) const {
    std::vector<Candidate> pool;
    for (const auto& [id, node] : graph_.interactions()) {
      if (node.user_id != user_id) pool.push_back(candidate(id));
    }
    return top_k(index_.vectorize(q.text), pool, cfg.k_global);
  }

  CategoryPreference category_preferences(const std::string& user_id) const {
    const auto& ids = graph_.user_history_ids(user_id);
    if (ids.empty()) throw Error(ErrorCode::EmptyHistory, "no interactions for user " + user_id);
    std::map<std::string, std::size_t> counts;
    for (const auto& id : ids) ++counts[graph_.interaction(id).category];
    CategoryPreference prefs;
    for (const auto& [label, n] : counts) {
      prefs.distribution.emplace_back(label, static_cast<double>(n) / static_cast<double>(ids.size()));
    }
    std::stable_sort(prefs.distribution.begin(), prefs.distribution.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return prefs;
  }

  /// Concepts linked to the hit interactions. Score = number of distinct hits
  /// linked, plus one when a concept token also occurs in the query.
  std::vector<ScoredConcept> score_concepts(const Query& q, const std::vector<ScoredInteraction>& hits,
                                            const RetrievalConfig& cfg) const {
    std::map<std::string, std::set<std::string>> linked_hits;
    for (const auto& hit : hits) {
      for (const auto& [concept_id, w] : graph_.neighbors(hit.interaction_id, EdgeKind::InteractionConcept)) {
        linked_hits[concept_id].insert(hit.interaction_id);
      }
    }
    const auto query_tokens = tokenize(q.text);
    const std::set<std::string> query_terms(query_tokens.begin(), query_tokens.end());

    std::vector<ScoredConcept> scored;
    for (const auto& [concept_id, interactions] : linked_hits) {
      const auto& surface = graph_.concept_node(concept_id).surface;
      auto score = static_cast<std::int64_t>(interactions.size());
      const auto tokens = tokenize(surface);
      if (std::any_of(tokens.begin(), tokens.end(), [&](const auto& t) { return query_terms.count(t) > 0; })) {
        ++score;
      }
      scored.push_back({surface, score});
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      return a.score != b.score ? a.score > b.score : a.surface < b.surface;
    });
    if (scored.size() > cfg.m_concepts) scored.resize(cfg.m_concepts);
    return scored;
  }

  std::vector<std::string> relevant_concepts(const Query& q, const std::vector<ScoredInteraction>& hits,
                                             const RetrievalConfig& cfg) const {
    std::vector<std::string> out;
    for (auto& c : score_concepts(q, hits, cfg)) out.push_back(std::move(c.surface));
    return out;
  }

  /// The four-part context: personal hits, community hits, category
  /// preferences and relevant concepts.
  SemanticContext get_semantic_context(const std::string& user_id, const Query& q,
                                       const RetrievalConfig& cfg) const {
    SemanticContext ctx;
    ctx.user_hits = retrieve_user(user_id, q, cfg);
    ctx.global_hits = retrieve_global(user_id, q, cfg);
    if (!graph_.user_history_ids(user_id).empty()) ctx.category_prefs = category_preferences(user_id);
    auto hits = ctx.user_hits;
    hits.insert(hits.end(), ctx.global_hits.begin(), ctx.global_hits.end());
    ctx.concepts = relevant_concepts(q, hits, cfg);
    return ctx;
  }

 private:
  Candidate candidate(const std::string& id) const {
    return {id, &index_.vector(id), graph_.interaction(id).timestamp};
  }

  const KnowledgeGraph& graph_;
  TfIdfIndex index_;
};

}  // namespace pgrag
