#pragma once

#include <algorithm>
#include <concepts>
#include <cstdio>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pgrag/context_engine.hpp"
#include "pgrag/error.hpp"
#include "pgrag/graph_store.hpp"
#include "pgrag/text.hpp"

namespace pgrag {

inline constexpr std::size_t kMaxInteractionChars = 200;
inline constexpr std::string_view kContentMarker = "article: ";

inline constexpr std::string_view kBaseSection = "base";
inline constexpr std::string_view kUserSection = "user_interactions";
inline constexpr std::string_view kCommunitySection = "community_interactions";
inline constexpr std::string_view kPreferencesSection = "preferences_and_concepts";
inline constexpr std::string_view kAnswerSection = "answer_instruction";

inline constexpr std::string_view kUserHeader = "## Your past interactions (most relevant first):";
inline constexpr std::string_view kCommunityHeader = "## Similar interactions from the community:";
inline constexpr std::string_view kPreferencesHeader = "## Your category preferences:";
inline constexpr std::string_view kConceptsHeader = "## Related concepts:";
inline constexpr std::string_view kEmptyMarker = "(none)";
inline constexpr std::string_view kClassificationAnswer = "Answer with a single category name.";
inline constexpr std::string_view kRatingAnswer = "Answer with a single integer rating 1-5.";

struct Prompt {
  std::string text;
  std::vector<std::pair<std::string, std::string>> sections;
};

/// Text after the first "article: " marker (case-insensitive), trimmed; the
/// whole query trimmed when there is no marker.
inline std::string extract_task_content(const Query& q) {
  const auto at = ifind(q.text, kContentMarker);
  if (at == std::string_view::npos) return std::string(trim(q.text));
  return std::string(trim(std::string_view(q.text).substr(at + kContentMarker.size())));
}

template <class Lookup>
concept InteractionLookup = requires(const Lookup& lookup, const std::string& id) {
  { lookup(id) } -> std::convertible_to<const InteractionNode&>;
};

namespace detail {

inline std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

inline std::string single_line(std::string_view s) {
  std::string out(s);
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '\n' || c == '\r' || c == '\t'; }, ' ');
  return out;
}

inline std::string task_instruction(TaskKind task) {
  return task == TaskKind::Classification
             ? "Assign the content to the category this user would choose."
             : "Predict the rating from 1 to 5 this user would give the content.";
}

template <InteractionLookup Lookup>
std::string render_hits(std::string_view header, const std::vector<ScoredInteraction>& hits, TaskKind task,
                        const Lookup& lookup) {
  std::string out(header);
  out += '\n';
  if (hits.empty()) {
    out += kEmptyMarker;
    out += '\n';
    return out;
  }
  const std::string tag = task == TaskKind::Classification ? "category" : "rating";
  for (const auto& hit : hits) {
    const InteractionNode& node = lookup(hit.interaction_id);
    out += "- [score=" + fixed(hit.score, 3) + "] (" + tag + ": " + node.category + ") " +
           single_line(node.title) + ": " + utf8_truncate(single_line(node.text), kMaxInteractionChars) + "\n";
  }
  return out;
}

}  // namespace detail

/// Renders the personalized prompt in five fixed sections: base, personal
/// interactions, community interactions, preferences and concepts, answer
/// instruction. Joining the section bodies in order reproduces `text`.
template <InteractionLookup Lookup>
Prompt build_prompt(const Query& q, const SemanticContext& ctx, std::vector<std::string> categories,
                    const Lookup& lookup) {
  if (q.task == TaskKind::Classification && categories.empty()) {
    throw Error(ErrorCode::MissingLabels, "classification prompt needs at least one category");
  }
  std::sort(categories.begin(), categories.end());
  categories.erase(std::unique(categories.begin(), categories.end()), categories.end());

  Prompt prompt;
  auto add = [&](std::string_view name, std::string body) {
    prompt.text += body;
    prompt.sections.emplace_back(std::string(name), std::move(body));
  };

  std::string base = "Task: " + detail::task_instruction(q.task) + "\n";
  if (q.task == TaskKind::Classification) {
    base += "Available categories: ";
    for (std::size_t i = 0; i < categories.size(); ++i) base += (i ? ", " : "") + categories[i];
    base += "\n";
  }
  base += "\nContent:\n" + extract_task_content(q) + "\n\n";
  add(kBaseSection, std::move(base));

  add(kUserSection, detail::render_hits(kUserHeader, ctx.user_hits, q.task, lookup));
  add(kCommunitySection, detail::render_hits(kCommunityHeader, ctx.global_hits, q.task, lookup));

  std::string prefs(kPreferencesHeader);
  prefs += '\n';
  if (!ctx.category_prefs || ctx.category_prefs->distribution.empty()) {
    prefs += std::string(kEmptyMarker) + "\n";
  } else {
    for (const auto& [label, p] : ctx.category_prefs->distribution) prefs += "- " + label + ": " + detail::fixed(p, 2) + "\n";
  }
  prefs += std::string(kConceptsHeader) + "\n";
  if (ctx.concepts.empty()) {
    prefs += std::string(kEmptyMarker) + "\n";
  } else {
    prefs += "- ";
    for (std::size_t i = 0; i < ctx.concepts.size(); ++i) prefs += (i ? ", " : "") + ctx.concepts[i];
    prefs += "\n";
  }
  add(kPreferencesSection, std::move(prefs));

  add(kAnswerSection,
      std::string(q.task == TaskKind::Classification ? kClassificationAnswer : kRatingAnswer) + "\n");
  return prompt;
}

inline Prompt build_prompt(const Query& q, const SemanticContext& ctx, std::vector<std::string> categories,
                           const KnowledgeGraph& graph) {
  return build_prompt(q, ctx, std::move(categories),
                      [&graph](const std::string& id) -> const InteractionNode& { return graph.interaction(id); });
}

}  // namespace pgrag
