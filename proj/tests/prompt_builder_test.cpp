#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pgrag/llm_gateway.hpp"
#include "pgrag/prompt_builder.hpp"
#include "golden_cases.hpp"

using pgrag::KnowledgeGraph;
using pgrag::Query;
using pgrag::SemanticContext;
using pgrag::TaskKind;
using golden::kNewsLabels;
using golden::news_context;
using golden::news_graph;

namespace {

const std::string kGoldenDir = std::string(PGRAG_FIXTURE_DIR) + "/golden/";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Set PGRAG_UPDATE_GOLDEN=1 to rewrite the golden files; review the diff before committing.
void expect_golden(const std::string& name, const std::string& actual) {
  const auto path = kGoldenDir + name;
  if (const char* update = std::getenv("PGRAG_UPDATE_GOLDEN"); update && std::string(update) == "1") {
    std::ofstream(path, std::ios::binary) << actual;
  }
  EXPECT_EQ(actual, read_file(path)) << "golden mismatch: " << path;
}


}  // namespace

TEST(ExtractTaskContent, MarkerRules) {
  EXPECT_EQ(pgrag::extract_task_content({"u", "Which category does this belong to? article: Senators vote today",
                                         TaskKind::Classification, {}}),
            "Senators vote today");
  EXPECT_EQ(pgrag::extract_task_content({"u", "Plain text query", TaskKind::Classification, {}}), "Plain text query");
  EXPECT_EQ(pgrag::extract_task_content({"u", "article:   padded  ", TaskKind::Classification, {}}), "padded");
  EXPECT_EQ(pgrag::extract_task_content({"u", "ARTICLE: first article: second", TaskKind::Classification, {}}),
            "first article: second");
}

TEST(BuildPrompt, MissingLabelsForClassification) {
  const KnowledgeGraph g;
  try {
    pgrag::build_prompt(Query{"u", "x", TaskKind::Classification, {}}, SemanticContext{}, {}, g);
    FAIL();
  } catch (const pgrag::Error& e) {
    EXPECT_EQ(e.code(), pgrag::ErrorCode::MissingLabels);
  }
  EXPECT_NO_THROW(pgrag::build_prompt(Query{"u", "x", TaskKind::Rating, {}}, SemanticContext{}, {}, g));
}

TEST(BuildPrompt, SingleHitLineFormat) {
  KnowledgeGraph g;
  g.add_interaction({"u", "Budget vote", "Senate passes the bill", "politics", 1});
  SemanticContext ctx;
  ctx.user_hits = {{"i:u:1", 0.742, 1}};
  const auto p = pgrag::build_prompt(Query{"u", "x", TaskKind::Classification, {}}, ctx, {"politics"}, g);
  EXPECT_NE(p.text.find("\n- [score=0.742] (category: politics) Budget vote: Senate passes the bill\n"),
            std::string::npos);
}

TEST(BuildPrompt, SectionsJoinToText) {
  const auto g = news_graph();
  const auto p = pgrag::build_prompt(Query{"u1", "article: Parkland survivor wrote for Teen Vogue",
                                           TaskKind::Classification, {}},
                                     news_context(), kNewsLabels, g);
  std::string joined;
  std::vector<std::string> names;
  for (const auto& [name, body] : p.sections) {
    names.push_back(name);
    joined += body;
  }
  EXPECT_EQ(joined, p.text);
  EXPECT_EQ(names, (std::vector<std::string>{"base", "user_interactions", "community_interactions",
                                             "preferences_and_concepts", "answer_instruction"}));
}

TEST(BuildPrompt, LongTextTruncatedAndNewlinesFlattened) {
  KnowledgeGraph g;
  g.add_interaction({"u", "Long", std::string(250, 'x') + "\nsecond line", "politics", 1});
  g.add_interaction({"u", "Exact", std::string(200, 'y'), "politics", 2});
  SemanticContext ctx;
  ctx.user_hits = {{"i:u:1", 1.0, 1}, {"i:u:2", 0.5, 2}};
  const auto p = pgrag::build_prompt(Query{"u", "x", TaskKind::Classification, {}}, ctx, {"politics"}, g);
  EXPECT_NE(p.text.find(": " + std::string(200, 'x') + "\xE2\x80\xA6\n"), std::string::npos);
  EXPECT_NE(p.text.find(": " + std::string(200, 'y') + "\n"), std::string::npos);
}

TEST(BuildPrompt, EveryHitAppearsOnceInOrder) {
  const auto g = news_graph();
  const auto ctx = news_context();
  const auto p = pgrag::build_prompt(Query{"u1", "x", TaskKind::Classification, {}}, ctx, kNewsLabels, g);
  std::size_t cursor = 0;
  auto all = ctx.user_hits;
  all.insert(all.end(), ctx.global_hits.begin(), ctx.global_hits.end());
  for (const auto& h : all) {
    const auto line = g.interaction(h.interaction_id).title + ": ";
    const auto at = p.text.find(line, cursor);
    ASSERT_NE(at, std::string::npos) << line;
    EXPECT_EQ(p.text.find(line, at + 1), std::string::npos);
    cursor = at;
  }
}

TEST(BuildPrompt, MockRecoversScoreCategoryPairs) {
  const auto g = news_graph();
  const auto p = pgrag::build_prompt(Query{"u1", "x", TaskKind::Classification, {}}, news_context(), kNewsLabels, g);
  const auto parsed = pgrag::detail::parse_prompt_hits(p.text);
  ASSERT_EQ(parsed.size(), 4u);
  EXPECT_EQ(parsed[0].score_milli, 412);
  EXPECT_EQ(parsed[0].label, "women");
  EXPECT_EQ(parsed[2].score_milli, 742);
  EXPECT_EQ(parsed[2].label, "politics");
  EXPECT_EQ(parsed[3].score_milli, 334);  // displayed with three decimals
}

TEST(BuildPrompt, Deterministic) {
  const auto g = news_graph();
  const Query q{"u1", "article: Parkland", TaskKind::Classification, {}};
  const auto a = pgrag::build_prompt(q, news_context(), kNewsLabels, g);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(pgrag::build_prompt(q, news_context(), kNewsLabels, g).text, a.text);
}

TEST(GoldenPrompt, MatchesFiles) {
  const auto cases = golden::cases();
  ASSERT_EQ(cases.size(), 3u);
  for (const auto& c : cases) expect_golden(c.file, c.text);
}
