#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgrag/error.hpp"
#include "pgrag/graph_store.hpp"

namespace pgrag {

inline constexpr std::int64_t kDefaultMinCooccurrence = 2;
inline constexpr int kMaxPropagationSweeps = 20;

/// Most frequent category among the interactions linked to `concept_id`;
/// ties go to the smallest label.
inline std::string dominant_category(const KnowledgeGraph& graph, const std::string& concept_id) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& [interaction_id, w] : graph.neighbors(concept_id, EdgeKind::InteractionConcept)) {
    ++counts[graph.interaction(interaction_id).category];
  }
  std::string best;
  std::int64_t best_count = 0;
  for (const auto& [label, n] : counts) {
    if (n > best_count) {
      best = label;
      best_count = n;
    }
  }
  return best;
}

/// Derives concept-concept edges from co-occurrence within interactions.
///
/// A pair is linked when it co-occurs in at least `min_count` interactions, or
/// in at least one interaction while both concepts share a dominant category.
/// Output is canonical (src < dst) and ordered by (weight desc, src, dst).
inline std::vector<Edge> build_cooccurrence_edges(const KnowledgeGraph& graph,
                                                  std::int64_t min_count = kDefaultMinCooccurrence) {
  if (min_count < 1) throw Error(ErrorCode::InvalidArgument, "min_count must be positive");

  std::map<std::pair<std::string, std::string>, std::int64_t> pair_counts;
  for (const auto& [interaction_id, node] : graph.interactions()) {
    std::vector<std::string> linked;
    for (const auto& [concept_id, w] : graph.neighbors(interaction_id, EdgeKind::InteractionConcept)) {
      linked.push_back(concept_id);
    }
    std::sort(linked.begin(), linked.end());
    for (std::size_t a = 0; a < linked.size(); ++a) {
      for (std::size_t b = a + 1; b < linked.size(); ++b) ++pair_counts[{linked[a], linked[b]}];
    }
  }

  std::map<std::string, std::string> dominant;
  auto dominant_of = [&](const std::string& id) -> const std::string& {
    auto it = dominant.find(id);
    if (it == dominant.end()) it = dominant.emplace(id, dominant_category(graph, id)).first;
    return it->second;
  };

  std::vector<Edge> edges;
  for (const auto& [pair, count] : pair_counts) {
    const bool frequent = count >= min_count;
    if (frequent || dominant_of(pair.first) == dominant_of(pair.second)) {
      edges.push_back({EdgeKind::ConceptConcept, pair.first, pair.second, static_cast<double>(count)});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  return edges;
}

struct ConceptPartition {
  std::vector<std::vector<std::string>> communities;
  std::map<std::string, std::size_t> assignment;

  bool operator==(const ConceptPartition&) const = default;

  nlohmann::json to_json() const {
    nlohmann::json doc = nlohmann::json::object();
    doc["communities"] = communities;
    nlohmann::json assign = nlohmann::json::object();
    for (const auto& [id, index] : assignment) assign[id] = index;
    doc["assignment"] = std::move(assign);
    return doc;
  }
};

/// Deterministic label propagation.
///
/// Every node starts with its own id as label. Nodes are swept in id order and
/// updated in place to the most frequent neighbor label (ties: smallest label)
/// until a sweep changes nothing or the sweep cap is hit. Communities are
/// numbered by their smallest member id.
inline ConceptPartition detect_communities(const std::vector<Edge>& concept_edges,
                                           const std::set<std::string>& concept_ids) {
  std::map<std::string, std::vector<std::string>> adjacency;
  for (const auto& id : concept_ids) adjacency[id];
  for (const auto& e : concept_edges) {
    if (!concept_ids.count(e.src) || !concept_ids.count(e.dst)) {
      throw Error(ErrorCode::DanglingEdge, e.src + " -> " + e.dst);
    }
    if (e.src == e.dst) continue;
    adjacency[e.src].push_back(e.dst);
    adjacency[e.dst].push_back(e.src);
  }

  std::map<std::string, std::string> label;
  for (const auto& id : concept_ids) label[id] = id;

  for (int sweep = 0; sweep < kMaxPropagationSweeps; ++sweep) {
    bool changed = false;
    for (const auto& [id, nbrs] : adjacency) {
      if (nbrs.empty()) continue;
      std::map<std::string, std::size_t> freq;
      for (const auto& n : nbrs) ++freq[label[n]];
      auto best = freq.begin();
      for (auto it = freq.begin(); it != freq.end(); ++it) {
        if (it->second > best->second) best = it;
      }
      if (best->first != label[id]) {
        label[id] = best->first;
        changed = true;
      }
    }
    if (!changed) break;
  }

  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& [id, l] : label) groups[l].push_back(id);

  ConceptPartition partition;
  for (auto& [l, members] : groups) partition.communities.push_back(std::move(members));
  std::sort(partition.communities.begin(), partition.communities.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  for (std::size_t i = 0; i < partition.communities.size(); ++i) {
    for (const auto& id : partition.communities[i]) partition.assignment[id] = i;
  }
  return partition;
}

/// Partition over every concept node of `graph`, using its concept-concept edges.
inline ConceptPartition detect_communities(const KnowledgeGraph& graph) {
  std::set<std::string> ids;
  for (const auto& [id, c] : graph.concepts()) ids.insert(id);
  std::vector<Edge> concept_edges;
  for (const auto& e : graph.edges()) {
    if (e.kind == EdgeKind::ConceptConcept) concept_edges.push_back(e);
  }
  return detect_communities(concept_edges, ids);
}

}  // namespace pgrag
