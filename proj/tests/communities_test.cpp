#include <gtest/gtest.h>

#include <functional>
#include <random>
#include <set>

#include "pgrag/communities.hpp"

using pgrag::Edge;
using pgrag::EdgeKind;

namespace {

Edge cc(const std::string& a, const std::string& b, double w = 1.0) { return {EdgeKind::ConceptConcept, a, b, w}; }

pgrag::KnowledgeGraph cooccurrence_fixture() {
  pgrag::KnowledgeGraph g;
  // Alpha/Bravo co-occur twice, Alpha/Charlie once across different dominant
  // categories, Charlie/Delta once inside the same category.
  g.add_interaction({"u1", "", "Alpha met Bravo", "politics", 1});
  g.add_interaction({"u1", "", "Alpha met Bravo", "politics", 2});
  g.add_interaction({"u2", "", "Alpha met Charlie", "sports", 3});
  g.add_interaction({"u2", "", "Charlie met Delta", "sports", 4});
  return g;
}

}  // namespace

TEST(Cooccurrence, ThresholdAndSharedCategoryRules) {
  const auto g = cooccurrence_fixture();
  const auto edges = pgrag::build_cooccurrence_edges(g, 2);
  const std::vector<Edge> expected = {cc("c:Alpha", "c:Bravo", 2.0), cc("c:Charlie", "c:Delta", 1.0)};
  EXPECT_EQ(edges, expected);
}

TEST(Cooccurrence, MinCountOneKeepsEveryPair) {
  const auto edges = pgrag::build_cooccurrence_edges(cooccurrence_fixture(), 1);
  ASSERT_EQ(edges.size(), 3u);
  EXPECT_EQ(edges[0], cc("c:Alpha", "c:Bravo", 2.0));
  EXPECT_EQ(edges[1], cc("c:Alpha", "c:Charlie", 1.0));
  EXPECT_EQ(edges[2], cc("c:Charlie", "c:Delta", 1.0));
}

TEST(Cooccurrence, RejectsNonPositiveMinCount) {
  EXPECT_THROW(pgrag::build_cooccurrence_edges(cooccurrence_fixture(), 0), pgrag::Error);
}

TEST(Cooccurrence, CanonicalAndSymmetricFree) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> names = {"Alpha", "Bravo", "Charlie", "Delta", "Echo", "Foxtrot"};
  const std::vector<std::string> cats = {"politics", "sports", "travel"};
  for (int trial = 0; trial < 50; ++trial) {
    pgrag::KnowledgeGraph g;
    for (int i = 0; i < 12; ++i) {
      std::string text;
      for (int j = 0; j < 3; ++j) text += names[rng() % names.size()] + " and ";
      g.add_interaction({"u" + std::to_string(rng() % 3), "", text, cats[rng() % cats.size()], i});
    }
    const auto edges = pgrag::build_cooccurrence_edges(g, 2);
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& e : edges) {
      EXPECT_LT(e.src, e.dst);
      EXPECT_EQ(seen.count({e.dst, e.src}), 0u);
      EXPECT_TRUE(seen.insert({e.src, e.dst}).second);
    }
    EXPECT_TRUE(std::is_sorted(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
      if (a.weight != b.weight) return a.weight > b.weight;
      return a.src != b.src ? a.src < b.src : a.dst < b.dst;
    }));
  }
}

TEST(Communities, TwoDisjointTriangles) {
  const std::vector<Edge> edges = {cc("A", "B"), cc("B", "C"), cc("A", "C"), cc("D", "E"), cc("E", "F"), cc("D", "F")};
  const auto p = pgrag::detect_communities(edges, {"A", "B", "C", "D", "E", "F"});
  const std::vector<std::vector<std::string>> expected = {{"A", "B", "C"}, {"D", "E", "F"}};
  EXPECT_EQ(p.communities, expected);
  EXPECT_EQ(p.assignment.at("B"), 0u);
  EXPECT_EQ(p.assignment.at("F"), 1u);
}

TEST(Communities, SingletonWithoutEdges) {
  const auto p = pgrag::detect_communities({}, {"X"});
  EXPECT_EQ(p.communities, (std::vector<std::vector<std::string>>{{"X"}}));
}

// Hand-run of the sweep schedule: sweep 1 gives A<-B, B keeps B (tie B/C),
// C<-B (tie B/D), D<-B (tie B/E), E<-B; sweep 2 changes nothing.
TEST(Communities, PathCollapsesToOneCommunity) {
  const std::vector<Edge> edges = {cc("A", "B"), cc("B", "C"), cc("C", "D"), cc("D", "E")};
  const auto p = pgrag::detect_communities(edges, {"A", "B", "C", "D", "E"});
  EXPECT_EQ(p.communities, (std::vector<std::vector<std::string>>{{"A", "B", "C", "D", "E"}}));
}

TEST(Communities, DanglingEdge) {
  EXPECT_THROW(
      {
        try {
          pgrag::detect_communities({cc("A", "Z")}, {"A"});
        } catch (const pgrag::Error& e) {
          EXPECT_EQ(e.code(), pgrag::ErrorCode::DanglingEdge);
          throw;
        }
      },
      pgrag::Error);
}

namespace {

std::map<std::string, int> components(const std::vector<Edge>& edges, const std::set<std::string>& ids) {
  std::map<std::string, std::string> parent;
  for (const auto& id : ids) parent[id] = id;
  std::function<std::string(const std::string&)> find = [&](const std::string& x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (const auto& e : edges) parent[find(e.src)] = find(e.dst);
  std::map<std::string, int> index;
  std::map<std::string, int> out;
  for (const auto& id : ids) {
    const auto root = find(id);
    if (!index.count(root)) index[root] = static_cast<int>(index.size());
    out[id] = index[root];
  }
  return out;
}

}  // namespace

TEST(CommunitiesProperty, CoverDisjointDeterministicWithinComponents) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 15);
    std::set<std::string> ids;
    for (int i = 0; i < n; ++i) ids.insert("n" + std::to_string(i));
    std::vector<std::string> list(ids.begin(), ids.end());
    std::vector<Edge> edges;
    const int m = static_cast<int>(rng() % (2 * n + 1));
    for (int i = 0; i < m; ++i) {
      auto a = list[rng() % list.size()];
      auto b = list[rng() % list.size()];
      if (a == b) continue;
      if (b < a) std::swap(a, b);
      edges.push_back(cc(a, b));
    }
    const auto p = pgrag::detect_communities(edges, ids);
    std::set<std::string> covered;
    for (std::size_t c = 0; c < p.communities.size(); ++c) {
      for (const auto& id : p.communities[c]) {
        EXPECT_TRUE(covered.insert(id).second) << "node in two communities";
        EXPECT_EQ(p.assignment.at(id), c);
      }
    }
    EXPECT_EQ(covered, ids);
    const auto comp = components(edges, ids);
    for (const auto& community : p.communities) {
      for (const auto& id : community) EXPECT_EQ(comp.at(id), comp.at(community.front()));
    }
    for (int rep = 0; rep < 10; ++rep) EXPECT_EQ(pgrag::detect_communities(edges, ids).to_json().dump(), p.to_json().dump());
  }
}

TEST(Communities, FromGraphCoversAllConcepts) {
  auto g = cooccurrence_fixture();
  g.set_concept_edges(pgrag::build_cooccurrence_edges(g, 2));
  const auto p = pgrag::detect_communities(g);
  EXPECT_EQ(p.assignment.size(), g.concepts().size());
  EXPECT_EQ(p.communities, (std::vector<std::vector<std::string>>{{"c:Alpha", "c:Bravo"}, {"c:Charlie", "c:Delta"}}));
}
