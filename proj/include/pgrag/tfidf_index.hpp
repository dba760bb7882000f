#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pgrag/error.hpp"
#include "pgrag/text.hpp"

namespace pgrag {

/// Sparse, L2-normalized term weights sorted by term.
struct TfIdfVector {
  std::vector<std::pair<std::string, double>> weights;

  bool empty() const { return weights.empty(); }

  double weight(std::string_view term) const {
    auto it = std::lower_bound(weights.begin(), weights.end(), term,
                               [](const auto& entry, std::string_view t) { return entry.first < t; });
    return it != weights.end() && it->first == term ? it->second : 0.0;
  }

  bool operator==(const TfIdfVector&) const = default;
};

struct CorpusStats {
  std::size_t doc_total = 0;
  std::map<std::string, std::size_t> doc_freq;
  std::vector<std::string> vocab;

  /// Smoothed idf: ln((1 + N) / (1 + df)) + 1. Unknown terms have df = 0.
  double idf(std::string_view term) const {
    auto it = doc_freq.find(std::string(term));
    const double df = it == doc_freq.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((1.0 + static_cast<double>(doc_total)) / (1.0 + df)) + 1.0;
  }
};

inline TfIdfVector vectorize(std::string_view text, const CorpusStats& stats) {
  std::map<std::string, std::size_t> tf;
  for (auto& token : tokenize(text)) ++tf[std::move(token)];

  TfIdfVector v;
  v.weights.reserve(tf.size());
  double norm_sq = 0.0;
  for (const auto& [term, count] : tf) {
    const double w = static_cast<double>(count) * stats.idf(term);
    v.weights.emplace_back(term, w);
    norm_sq += w * w;
  }
  if (norm_sq > 0.0) {
    const double norm = std::sqrt(norm_sq);
    for (auto& [term, w] : v.weights) w /= norm;
  }
  return v;
}

/// Dot product of two normalized vectors, clamped to [0, 1]. Empty → 0.
inline double cosine(const TfIdfVector& a, const TfIdfVector& b) {
  if (a.empty() || b.empty()) return 0.0;
  double dot = 0.0;
  auto ia = a.weights.begin();
  auto ib = b.weights.begin();
  while (ia != a.weights.end() && ib != b.weights.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return std::clamp(dot, 0.0, 1.0);
}

struct Document {
  std::string id;
  std::string text;
};

/// Corpus statistics plus one stored vector per document. Immutable after `build`.
class TfIdfIndex {
 public:
  static TfIdfIndex build(std::span<const Document> documents) {
    TfIdfIndex index;
    index.stats_.doc_total = documents.size();
    for (const auto& doc : documents) {
      if (index.vectors_.count(doc.id)) throw Error(ErrorCode::DuplicateDocId, doc.id);
      index.vectors_[doc.id];
      auto tokens = tokenize(doc.text);
      std::sort(tokens.begin(), tokens.end());
      tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
      for (auto& t : tokens) ++index.stats_.doc_freq[std::move(t)];
    }
    for (const auto& [term, df] : index.stats_.doc_freq) index.stats_.vocab.push_back(term);
    for (const auto& doc : documents) index.vectors_[doc.id] = pgrag::vectorize(doc.text, index.stats_);
    return index;
  }

  const CorpusStats& stats() const { return stats_; }

  TfIdfVector vectorize(std::string_view text) const { return pgrag::vectorize(text, stats_); }

  const TfIdfVector& vector(const std::string& id) const {
    auto it = vectors_.find(id);
    if (it == vectors_.end()) throw Error(ErrorCode::UnknownNode, "no indexed document " + id);
    return it->second;
  }

  bool contains(const std::string& id) const { return vectors_.count(id) != 0; }
  std::size_t size() const { return vectors_.size(); }

 private:
  CorpusStats stats_;
  std::map<std::string, TfIdfVector> vectors_;
};

struct ScoredInteraction {
  std::string interaction_id;
  double score = 0.0;
  std::int64_t timestamp = 0;

  bool operator==(const ScoredInteraction&) const = default;
};

/// Ranking order: score desc, then newer first, then id asc.
inline bool ranks_before(const ScoredInteraction& a, const ScoredInteraction& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.timestamp != b.timestamp) return a.timestamp > b.timestamp;
  return a.interaction_id < b.interaction_id;
}

struct Candidate {
  std::string id;
  const TfIdfVector* vector = nullptr;
  std::int64_t timestamp = 0;
};

/// Best `k` candidates by cosine similarity to `query`. Zero-score candidates
/// stay eligible, so the result has min(k, candidates) entries.
inline std::vector<ScoredInteraction> top_k(const TfIdfVector& query, std::span<const Candidate> candidates,
                                            std::size_t k) {
  if (k == 0 || candidates.empty()) return {};
  std::vector<ScoredInteraction> scored;
  scored.reserve(candidates.size());
  for (const auto& c : candidates) {
    scored.push_back({c.id, c.vector ? cosine(query, *c.vector) : 0.0, c.timestamp});
  }
  const auto keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), ranks_before);
  scored.resize(keep);
  return scored;
}

}  // namespace pgrag
