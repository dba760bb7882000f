#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace pgrag {

// Shared by the tokenizer and the concept extractor. Exactly 50 entries:
// articles, conjunctions, prepositions and pronouns. Sorted for binary search.
inline constexpr std::array<std::string_view, 50> kStopwords = {
    "a",     "about",   "after", "an",      "and",  "as",    "at",    "before", "between", "but",
    "by",    "during",  "for",   "from",    "he",   "her",   "him",   "his",    "i",       "in",
    "into",  "it",      "its",   "me",      "my",   "of",    "on",    "or",     "our",     "over",
    "she",   "so",      "that",  "the",     "their", "them", "these", "they",   "this",    "those",
    "through", "to",    "under", "we",      "with", "without", "yet", "you",    "your",    "nor",
};

namespace detail {

inline constexpr auto sorted_stopwords() {
  auto words = kStopwords;
  std::sort(words.begin(), words.end());
  return words;
}

inline constexpr auto kSortedStopwords = sorted_stopwords();

}  // namespace detail

/// `word` must already be lowercase.
inline bool is_stopword(std::string_view word) {
  return std::binary_search(detail::kSortedStopwords.begin(), detail::kSortedStopwords.end(), word);
}

inline bool is_ascii_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

inline char ascii_lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
  return out;
}

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto first = s.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kSpace);
  return s.substr(first, last - first + 1);
}

/// Lowercases, splits on every non-alphanumeric ASCII byte, drops tokens
/// shorter than two characters and stopwords. Order is preserved.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2 && !is_stopword(current)) tokens.push_back(current);
    current.clear();
  };
  for (char c : text) {
    if (is_ascii_alnum(c)) {
      current.push_back(ascii_lower(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

/// Case-insensitive (ASCII) search for `needle` in `haystack`.
inline std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0) {
  if (needle.empty()) return from <= haystack.size() ? from : std::string_view::npos;
  if (haystack.size() < needle.size()) return std::string_view::npos;
  for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < needle.size(); ++j) {
      if (ascii_lower(haystack[i + j]) != ascii_lower(needle[j])) {
        match = false;
        break;
      }
    }
    if (match) return i;
  }
  return std::string_view::npos;
}

/// Number of UTF-8 code points in `s` (continuation bytes are not counted).
inline std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

/// Keeps the first `max_chars` code points; appends "…" when anything was cut.
inline std::string utf8_truncate(std::string_view s, std::size_t max_chars) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
      if (seen == max_chars) return std::string(s.substr(0, i)) + "\xE2\x80\xA6";
      ++seen;
    }
  }
  return std::string(s);
}

}  // namespace pgrag
