#include <gtest/gtest.h>

#include <set>

#include "pgrag/text.hpp"

using pgrag::tokenize;
using Tokens = std::vector<std::string>;

TEST(Tokenize, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(tokenize("Teen Vogue Essay!"), (Tokens{"teen", "vogue", "essay"}));
}

TEST(Tokenize, DropsShortTokensAndStopwords) {
  EXPECT_EQ(tokenize("a I x"), Tokens{});
  EXPECT_EQ(tokenize("The law of the land"), (Tokens{"law", "land"}));
}

TEST(Tokenize, EmptyText) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenize, KeepsDigitsAndOrder) {
  EXPECT_EQ(tokenize("covid-19 in 2020, x86"), (Tokens{"covid", "19", "2020", "x86"}));
}

TEST(Stopwords, FiftyDistinctLowercaseEntries) {
  std::set<std::string_view> unique(pgrag::kStopwords.begin(), pgrag::kStopwords.end());
  EXPECT_EQ(unique.size(), 50u);
  for (auto w : pgrag::kStopwords) {
    EXPECT_EQ(pgrag::to_lower(w), w);
    EXPECT_TRUE(pgrag::is_stopword(w)) << w;
  }
  EXPECT_FALSE(pgrag::is_stopword("women"));
}

TEST(Utf8Truncate, CountsCodePointsAndAppendsEllipsis) {
  EXPECT_EQ(pgrag::utf8_truncate("abcdef", 6), "abcdef");
  EXPECT_EQ(pgrag::utf8_truncate("abcdef", 3), "abc\xE2\x80\xA6");
  // "é" is two bytes but one character
  EXPECT_EQ(pgrag::utf8_truncate("\xC3\xA9\xC3\xA9\xC3\xA9", 2), "\xC3\xA9\xC3\xA9\xE2\x80\xA6");
  EXPECT_EQ(pgrag::utf8_length("\xC3\xA9x"), 2u);
}

TEST(Ifind, CaseInsensitive) {
  EXPECT_EQ(pgrag::ifind("Which Category ARTICLE: x", "article: "), 15u);
  EXPECT_EQ(pgrag::ifind("abc", "zz"), std::string_view::npos);
}
