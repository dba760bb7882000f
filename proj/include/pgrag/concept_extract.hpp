#pragma once

#include <algorithm>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pgrag/error.hpp"
#include "pgrag/text.hpp"

namespace pgrag {

/// Domain keyword list; entries keep the casing they were written with.
using Lexicon = std::vector<std::string>;

/// Reads one keyword per line. Blank lines and lines starting with '#' are skipped.
inline Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open lexicon " + path);
  Lexicon lexicon;
  std::string line;
  while (std::getline(in, line)) {
    const auto entry = trim(line);
    if (entry.empty() || entry.front() == '#') continue;
    lexicon.emplace_back(entry);
  }
  return lexicon;
}

namespace detail {

inline constexpr std::size_t kMaxConceptTokens = 4;

struct ConceptHit {
  std::size_t offset;
  int source;  // 0 = lexicon, 1 = pattern; lexicon wins at equal offsets
  std::string surface;
};

inline bool ends_sentence(std::string_view trailing) {
  return trailing.find_first_of(".!?") != std::string_view::npos;
}

inline void collect_capitalized_runs(std::string_view text, std::vector<ConceptHit>& hits) {
  struct Token {
    std::string_view core;
    std::size_t offset;
  };
  std::vector<Token> run;
  auto flush = [&] {
    if (run.empty()) return;
    std::string surface;
    for (const auto& tok : run) {
      if (!surface.empty()) surface.push_back(' ');
      surface.append(tok.core);
    }
    if (utf8_length(surface) >= 2) hits.push_back({run.front().offset, 1, std::move(surface)});
    run.clear();
  };

  bool first_word = true;
  bool prev_ended_sentence = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto start = text.find_first_not_of(" \t\r\n\f\v", pos);
    if (start == std::string_view::npos) break;
    auto end = text.find_first_of(" \t\r\n\f\v", start);
    if (end == std::string_view::npos) end = text.size();
    pos = end;

    const auto raw = text.substr(start, end - start);
    std::size_t lead = 0;
    while (lead < raw.size() && !is_ascii_alnum(raw[lead]) &&
           static_cast<unsigned char>(raw[lead]) < 0x80) {
      ++lead;
    }
    std::size_t tail = raw.size();
    while (tail > lead && !is_ascii_alnum(raw[tail - 1]) &&
           static_cast<unsigned char>(raw[tail - 1]) < 0x80) {
      --tail;
    }
    const auto core = raw.substr(lead, tail - lead);
    const auto trailing = raw.substr(tail);
    const bool sentence_initial = first_word || prev_ended_sentence;
    first_word = false;
    prev_ended_sentence = ends_sentence(trailing);

    if (core.empty()) {
      flush();
      continue;
    }
    if (lead > 0) flush();

    const bool capitalized = std::isupper(static_cast<unsigned char>(core.front())) != 0;
    if (!capitalized) {
      flush();
    } else if (run.empty() && sentence_initial && is_stopword(to_lower(core))) {
      // A capitalized stopword opening a sentence is not part of a name.
    } else {
      run.push_back({core, start + lead});
      if (run.size() == kMaxConceptTokens) flush();
    }
    if (!trailing.empty()) flush();
  }
  flush();
}

inline bool word_boundary_at(std::string_view text, std::size_t begin, std::size_t end) {
  const bool left = begin == 0 || !is_ascii_alnum(text[begin - 1]);
  const bool right = end >= text.size() || !is_ascii_alnum(text[end]);
  return left && right;
}

inline void collect_lexicon_hits(std::string_view text, const Lexicon& lexicon,
                                 std::vector<ConceptHit>& hits) {
  for (const auto& raw_entry : lexicon) {
    const auto entry = trim(raw_entry);
    if (entry.empty()) continue;
    for (auto at = ifind(text, entry); at != std::string_view::npos; at = ifind(text, entry, at + 1)) {
      if (word_boundary_at(text, at, at + entry.size())) {
        hits.push_back({at, 0, std::string(entry)});
        break;
      }
    }
  }
}

}  // namespace detail

/// Extracts concept surfaces from free text.
///
/// Pattern rule: a concept is a run of up to four consecutive capitalized
/// words. Punctuation attached to a word ends the run; a sentence-initial
/// capitalized stopword never opens a run; surfaces shorter than two
/// characters are dropped. Every lexicon entry found case-insensitively on
/// word boundaries is emitted in lexicon casing. The result is ordered by
/// first occurrence and deduplicated case-insensitively.
inline std::vector<std::string> extract_concepts(std::string_view text, const Lexicon& lexicon = {}) {
  std::vector<detail::ConceptHit> hits;
  detail::collect_capitalized_runs(text, hits);
  detail::collect_lexicon_hits(text, lexicon, hits);
  std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    return a.offset != b.offset ? a.offset < b.offset : a.source < b.source;
  });

  std::vector<std::string> concepts;
  std::set<std::string> seen;
  for (auto& hit : hits) {
    if (seen.insert(to_lower(hit.surface)).second) concepts.push_back(std::move(hit.surface));
  }
  return concepts;
}

}  // namespace pgrag
