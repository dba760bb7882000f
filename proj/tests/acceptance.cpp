// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "golden_cases.hpp"
#include "oracle.hpp"
#include "pgrag/pgrag.hpp"

namespace {

const std::string kFixtures = PGRAG_FIXTURE_DIR;
const std::string kNews = kFixtures + "/news.jsonl";

// Pinned end-to-end results on fixtures/news.jsonl with the mock backend.
constexpr double kContextAccuracy = 1.0;
constexpr double kBaselineAccuracy = 0.25;  // share of "business" golds, the fallback label

struct Failure {
  std::string why;
};

void require(bool ok, const std::string& why) {
  if (!ok) throw Failure{why};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string run_cli(const std::string& args) {
  const auto cmd = "'" + std::string(PGRAG_CLI_PATH) + "' " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  require(pipe != nullptr, "popen failed");
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = ::pclose(pipe);
  require(WIFEXITED(status) && WEXITSTATUS(status) == 0, "cli failed: " + args);
  return out;
}

std::string predict(const pgrag::KnowledgeGraph& graph, const pgrag::ContextEngine& engine, const pgrag::Query& q,
                    const pgrag::RetrievalConfig& cfg, const std::vector<std::string>& labels) {
  const auto ctx = engine.get_semantic_context(q.user_id, q, cfg);
  const auto prompt = pgrag::build_prompt(q, ctx, labels, graph);
  return pgrag::parse_label(pgrag::LlmGateway(pgrag::MockBackend{}).complete({prompt.text}), labels);
}

// ---------------------------------------------------------------------------

void retrieval_matches_brute_force() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(7);
  int checked = 0;
  for (int trial = 0; trial < 250; ++trial) {
    pgrag::KnowledgeGraph graph;
    const int n_users = 1 + static_cast<int>(rng() % 5);
    const int n_docs = 1 + static_cast<int>(rng() % 50);
    for (int d = 0; d < n_docs; ++d) {
      graph.add_interaction({"u" + std::to_string(rng() % n_users), "", oracle::random_doc(rng, 30), "c",
                             static_cast<std::int64_t>(rng() % 10)});
    }
    const pgrag::ContextEngine engine(graph);
    for (int qi = 0; qi < 4; ++qi) {
      const auto user = "u" + std::to_string(rng() % n_users);
      const pgrag::Query q{user, oracle::random_doc(rng, 30), pgrag::TaskKind::Classification, {}};
      const pgrag::RetrievalConfig cfg{rng() % 11, rng() % 11, 0};

      std::map<std::string, double> qv;
      for (const auto& [t, w] : engine.index().vectorize(q.text).weights) qv[t] = w;
      std::vector<oracle::Ranked> own, others;
      for (const auto& [id, node] : graph.interactions()) {
        std::map<std::string, double> dv;
        for (const auto& [t, w] : engine.index().vector(id).weights) dv[t] = w;
        (node.user_id == user ? own : others).push_back({id, oracle::cosine(qv, dv), node.timestamp});
      }
      auto ids = [](const std::vector<pgrag::ScoredInteraction>& hits) {
        std::vector<std::string> out;
        for (const auto& h : hits) out.push_back(h.interaction_id);
        return out;
      };
      require(ids(engine.retrieve_user(user, q, cfg)) == oracle::rank(own, cfg.k_user),
              "retrieve_user differs in trial " + std::to_string(trial));
      require(ids(engine.retrieve_global(user, q, cfg)) == oracle::rank(others, cfg.k_global),
              "retrieve_global differs in trial " + std::to_string(trial));
      ++checked;
    }
  }
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  require(elapsed < 10.0, "took " + std::to_string(elapsed) + " s");
  require(checked >= 200, "too few corpora");
}

void tfidf_matches_reference() {
  const std::vector<pgrag::Document> docs = {{"d1", "apple banana"}, {"d2", "apple apple cherry"}, {"d3", "banana"}};
  const auto index = pgrag::TfIdfIndex::build(docs);
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
  require(near(index.vector("d1").weight("apple"), 0.7071067811865476), "d1 apple");
  require(near(index.vector("d2").weight("apple"), 0.8355915419449176), "d2 apple");
  require(near(index.vector("d2").weight("cherry"), 0.5493512310263033), "d2 cherry");
  require(near(pgrag::cosine(index.vectorize("apple cherry"), index.vector("d2")), 0.9430859966614262), "cos(q, d2)");

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> texts;
    std::vector<pgrag::Document> corpus;
    const int n = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) {
      texts.push_back(oracle::random_doc(rng, 30));
      corpus.push_back({"d" + std::to_string(i), texts.back()});
    }
    const oracle::Corpus ref(texts);
    const auto idx = pgrag::TfIdfIndex::build(corpus);
    for (int i = 0; i < n; ++i) {
      const auto expected = ref.vector(texts[i]);
      const auto& actual = idx.vector("d" + std::to_string(i));
      require(actual.weights.size() == expected.size(), "term count differs");
      for (const auto& [t, w] : expected) require(near(actual.weight(t), w), "weight of " + t);
    }
    const auto query = oracle::random_doc(rng, 35);
    const auto qv = idx.vectorize(query);
    for (int i = 0; i < n; ++i) {
      require(near(pgrag::cosine(qv, idx.vector("d" + std::to_string(i))),
                   oracle::cosine(ref.vector(query), ref.vector(texts[i]))),
              "cosine with d" + std::to_string(i));
    }
  }
}

void metrics_match_reference() {
  using P = std::vector<std::pair<std::string, std::optional<std::string>>>;
  const auto cls = pgrag::classification_metrics(P{{"A", "A"}, {"A", "B"}, {"B", "B"}});
  require(std::abs(cls.accuracy - 0.6667) < 1e-4 && std::abs(cls.macro_f1 - 0.6667) < 1e-4, "classification");
  const auto reg = pgrag::regression_metrics({{3, 3}, {5, 4}});
  require(std::abs(reg.mae - 0.5) < 1e-12 && std::abs(reg.rmse - 0.7071067811865476) < 1e-12, "regression");
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::pair<int, int>> pairs;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) pairs.emplace_back(1 + rng() % 5, 1 + rng() % 5);
    const auto s = pgrag::regression_metrics(pairs);
    require(s.mae <= s.rmse + 1e-12, "MAE > RMSE");
  }
}

void community_signal_corrects_history() {
  pgrag::KnowledgeGraph graph;
  graph.add_interaction({"me", "Equal pay rally", "Women's March returns to the capital", "women", 1});
  graph.add_interaction({"me", "Title IX at fifty", "A landmark law for girls in sport", "women", 2});
  graph.add_interaction({"me", "Moms demand gun safety", "Mothers organize across the country", "women", 3});
  const char* politics[] = {"Senate gun bill vote stalls", "Gun bill vote delayed in Senate",
                            "Senate leaders schedule gun vote", "House passes gun bill", "Senate vote on gun bill"};
  for (int i = 0; i < 5; ++i) {
    graph.add_interaction({"p" + std::to_string(i), politics[i], "Lawmakers debate the measure", "politics", 10 + i});
  }
  graph.set_concept_edges(pgrag::build_cooccurrence_edges(graph));
  const pgrag::ContextEngine engine(graph);
  const std::vector<std::string> labels = {"politics", "women"};
  const pgrag::Query q{"me", "article: Senate gun bill vote", pgrag::TaskKind::Classification, labels};

  const auto personal_only = predict(graph, engine, q, {5, 0, 10}, labels);
  require(personal_only == "women", "k_global=0 predicted " + personal_only);
  const auto with_community = predict(graph, engine, q, {5, 5, 10}, labels);
  require(with_community == "politics", "k_global=5 predicted " + with_community);
}

void context_beats_baseline_end_to_end() {
  const auto records = pgrag::load_dataset(kNews);
  const auto task = pgrag::default_task(pgrag::TaskId::News);
  const pgrag::LlmGateway gateway(pgrag::MockBackend{});
  pgrag::RunOptions full;
  pgrag::RunOptions bare;
  bare.use_context = false;
  const auto with_ctx = pgrag::run_task(task, records, {}, gateway, full);
  const auto without = pgrag::run_task(task, records, {}, gateway, bare);
  char msg[128];
  std::snprintf(msg, sizeof msg, "context %.4f vs baseline %.4f", *with_ctx.accuracy, *without.accuracy);
  require(*with_ctx.accuracy > *without.accuracy, msg);
  require(std::abs(*with_ctx.accuracy - kContextAccuracy) < 1e-12, std::string("pinned value changed: ") + msg);
  require(std::abs(*without.accuracy - kBaselineAccuracy) < 1e-12, std::string("pinned value changed: ") + msg);
}

void deterministic_and_persistent() {
  const auto records = pgrag::load_dataset(kNews);
  const auto graph = pgrag::build_history_graph(records);
  const auto snapshot = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") + "/pgrag_accept.json";
  graph.save_snapshot(snapshot);
  const auto restored = pgrag::KnowledgeGraph::load_snapshot(snapshot);
  require(restored == graph, "snapshot round trip changed the graph");

  const auto task = pgrag::default_task(pgrag::TaskId::News);
  const std::string query = "Senate vote on the gun bill";
  auto render = [&](const pgrag::KnowledgeGraph& g) {
    const pgrag::ContextEngine engine(g);
    const pgrag::Query q{"u03", query, task.kind(), task.labels};
    const auto ctx = engine.get_semantic_context("u03", q, {});
    return std::make_pair(ctx.to_json().dump(2) + "\n", pgrag::build_prompt(q, ctx, task.labels, g).text);
  };
  const auto first = render(graph);
  require(render(restored) == first, "restored graph renders differently");
  const pgrag::LlmGateway gateway(pgrag::MockBackend{});
  const auto report = pgrag::run_task(task, records, {}, gateway).to_json_text();
  for (int i = 0; i < 10; ++i) {
    require(render(graph) == first, "context or prompt changed on run " + std::to_string(i));
    require(pgrag::run_task(task, records, {}, gateway).to_json_text() == report, "report changed");
  }

  const auto args = " --user u03 --query '" + query + "' --graph '" + snapshot + "'";
  require(run_cli("context" + args) == first.first, "CLI context differs from library");
  require(run_cli("prompt --task lamp2n" + args) == first.second, "CLI prompt differs from library");
  require(run_cli("eval --task lamp2n --data '" + kNews + "'") == report, "CLI report differs from library");
  require(run_cli("eval --task lamp2n --data '" + kNews + "'") == report, "CLI report differs across processes");
}

void communities_partition_concepts() {
  const auto graph = pgrag::build_history_graph(pgrag::load_dataset(kNews));
  const auto partition = pgrag::detect_communities(graph);
  std::set<std::string> seen;
  std::size_t total = 0;
  for (const auto& community : partition.communities) {
    total += community.size();
    seen.insert(community.begin(), community.end());
  }
  require(total == seen.size(), "communities overlap");
  require(seen.size() == graph.concepts().size(), "not every concept is assigned");
  for (const auto& [id, c] : graph.concepts()) require(partition.assignment.count(id) == 1, "unassigned " + id);
  for (int i = 0; i < 10; ++i) require(pgrag::detect_communities(graph) == partition, "partition changed");

  using pgrag::EdgeKind;
  std::vector<pgrag::Edge> edges;
  for (const auto& clique : {std::vector<std::string>{"c:a", "c:b", "c:c"}, {"c:x", "c:y", "c:z"}}) {
    for (std::size_t i = 0; i < clique.size(); ++i) {
      for (std::size_t j = i + 1; j < clique.size(); ++j) edges.push_back({EdgeKind::ConceptConcept, clique[i], clique[j], 1.0});
    }
  }
  const auto two = pgrag::detect_communities(edges, {"c:a", "c:b", "c:c", "c:x", "c:y", "c:z"});
  require(two.communities.size() == 2, "two cliques gave " + std::to_string(two.communities.size()) + " communities");
}

void golden_prompts_unchanged() {
  for (const auto& c : golden::cases()) {
    require(c.text == slurp(kFixtures + "/golden/" + c.file), c.file + " differs");
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void()>>> criteria = {
      {"retrieval matches brute-force top-k on 1000 queries over 250 random corpora", retrieval_matches_brute_force},
      {"tf-idf weights and cosines match the reference within 1e-9", tfidf_matches_reference},
      {"accuracy, macro-F1, MAE and RMSE match reference values", metrics_match_reference},
      {"community hits override a one-sided personal history", community_signal_corrects_history},
      {"full context beats the no-context baseline on the news fixture", context_beats_baseline_end_to_end},
      {"snapshots round-trip and outputs are byte-identical across runs", deterministic_and_persistent},
      {"concept communities cover every concept exactly once", communities_partition_concepts},
      {"rendered prompts match the golden files", golden_prompts_unchanged},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    try {
      check();
      std::cout << "PASS " << name << "\n";
    } catch (const Failure& f) {
      ++failed;
      std::cout << "FAIL " << name << ": " << f.why << "\n";
    } catch (const std::exception& e) {
      ++failed;
      std::cout << "FAIL " << name << ": " << e.what() << "\n";
    }
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed ? 1 : 0;
}
