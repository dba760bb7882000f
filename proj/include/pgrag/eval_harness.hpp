#pragma once

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgrag/communities.hpp"
#include "pgrag/concept_extract.hpp"
#include "pgrag/context_engine.hpp"
#include "pgrag/error.hpp"
#include "pgrag/graph_store.hpp"
#include "pgrag/llm_gateway.hpp"
#include "pgrag/prompt_builder.hpp"

namespace pgrag {

enum class TaskId { News, MovieTag, Rating };

inline constexpr int kRatingLo = 1;
inline constexpr int kRatingHi = 5;

struct TaskSpec {
  TaskId id = TaskId::News;
  std::vector<std::string> labels;  // empty for rating

  TaskKind kind() const { return id == TaskId::Rating ? TaskKind::Rating : TaskKind::Classification; }
};

inline std::string task_name(TaskId id) {
  switch (id) {
    case TaskId::News: return "lamp2n";
    case TaskId::MovieTag: return "lamp2m";
    case TaskId::Rating: return "lamp3";
  }
  return "";
}

/// Standard label sets: 15 news categories and 15 movie tags.
inline TaskSpec default_task(TaskId id) {
  switch (id) {
    case TaskId::News:
      return {id,
              {"business", "crime", "culture & arts", "education", "entertainment", "food & drink", "healthy living",
               "parents", "politics", "religion", "science & technology", "sports", "style & beauty", "travel",
               "women"}};
    case TaskId::MovieTag:
      return {id,
              {"action", "based on a book", "classic", "comedy", "dark comedy", "dystopia", "fantasy", "psychology",
               "romance", "sci-fi", "social commentary", "thought-provoking", "true story", "twist ending",
               "violence"}};
    case TaskId::Rating:
      return {id, {}};
  }
  return {id, {}};
}

inline std::optional<TaskId> task_from_name(std::string_view name) {
  for (auto id : {TaskId::News, TaskId::MovieTag, TaskId::Rating}) {
    if (task_name(id) == name) return id;
  }
  return std::nullopt;
}

enum class Split { History, Test };

using Gold = std::variant<std::string, int>;

struct DatasetRecord {
  std::string user_id;
  std::string title;
  std::string text;
  Gold gold;
  std::int64_t timestamp = 0;
  Split split = Split::History;
};

/// Parses one JSONL record; throws ParseError mentioning `line`.
inline DatasetRecord parse_dataset_record(const std::string& json_line, std::size_t line) {
  auto fail = [line](const std::string& what) -> Error {
    return Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
  };
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(json_line);
  } catch (const nlohmann::json::parse_error&) {
    throw fail("invalid JSON");
  }
  if (!obj.is_object()) throw fail("expected object");
  auto string_field = [&](const char* key, bool required) -> std::string {
    if (!obj.contains(key)) {
      if (required) throw fail(std::string("missing \"") + key + "\"");
      return {};
    }
    if (!obj[key].is_string()) throw fail(std::string("\"") + key + "\" must be a string");
    return obj[key].get<std::string>();
  };

  DatasetRecord r;
  r.user_id = string_field("user_id", true);
  if (r.user_id.empty()) throw fail("empty \"user_id\"");
  r.title = string_field("title", false);
  r.text = string_field("text", true);
  if (!obj.contains("gold")) throw fail("missing \"gold\"");
  if (obj["gold"].is_string()) {
    r.gold = obj["gold"].get<std::string>();
  } else if (obj["gold"].is_number_integer()) {
    r.gold = obj["gold"].get<int>();
  } else {
    throw fail("\"gold\" must be a string or an integer");
  }
  if (!obj.contains("timestamp") || !obj["timestamp"].is_number_integer() || obj["timestamp"].get<std::int64_t>() < 0) {
    throw fail("\"timestamp\" must be a non-negative integer");
  }
  r.timestamp = obj["timestamp"].get<std::int64_t>();
  const auto split = string_field("split", true);
  if (split == "history") {
    r.split = Split::History;
  } else if (split == "test") {
    r.split = Split::Test;
  } else {
    throw fail("\"split\" must be \"history\" or \"test\"");
  }
  return r;
}

/// One record per non-blank JSONL line, in file order.
inline std::vector<DatasetRecord> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read dataset " + path);
  std::vector<DatasetRecord> records;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (trim(line).empty()) continue;
    records.push_back(parse_dataset_record(line, n));
  }
  return records;
}

/// The `n` users with the most history records (ties by user id).
inline std::vector<std::string> select_eval_users(const std::vector<DatasetRecord>& records, std::size_t n) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) {
    auto& c = counts[r.user_id];
    if (r.split == Split::History) ++c;
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> users;
  for (std::size_t i = 0; i < ranked.size() && i < n; ++i) users.push_back(ranked[i].first);
  return users;
}

// ---------------------------------------------------------------------------
// Metrics

struct ClassificationScores {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

struct RegressionScores {
  double mae = 0.0;
  double rmse = 0.0;
};

/// `pairs` holds (gold, prediction); a missing prediction counts as wrong and
/// contributes no label. Macro-F1 averages over labels seen in gold or predictions.
inline ClassificationScores classification_metrics(
    const std::vector<std::pair<std::string, std::optional<std::string>>>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "classification_metrics");
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, Counts> per_label;
  std::size_t correct = 0;
  for (const auto& [gold, pred] : pairs) {
    if (pred && *pred == gold) {
      ++correct;
      ++per_label[gold].tp;
      continue;
    }
    ++per_label[gold].fn;
    if (pred) ++per_label[*pred].fp;
  }
  double f1_sum = 0.0;
  for (const auto& [label, c] : per_label) {
    const double p = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    const double r = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    f1_sum += p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
  return {static_cast<double>(correct) / static_cast<double>(pairs.size()),
          f1_sum / static_cast<double>(per_label.size())};
}

inline RegressionScores regression_metrics(const std::vector<std::pair<int, int>>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "regression_metrics");
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (const auto& [gold, pred] : pairs) {
    const double d = static_cast<double>(pred) - static_cast<double>(gold);
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  const auto n = static_cast<double>(pairs.size());
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

// ---------------------------------------------------------------------------
// Report

struct QueryOutcome {
  std::string query_id;
  std::string user_id;
  Gold gold;
  std::optional<Gold> prediction;  // nullopt on parse failure
};

struct MetricsReport {
  TaskId task = TaskId::News;
  std::optional<double> accuracy;
  std::optional<double> macro_f1;
  std::optional<double> mae;
  std::optional<double> rmse;
  std::size_t n_queries = 0;
  std::size_t n_parse_failures = 0;
  std::vector<QueryOutcome> records;

  /// JSON with sorted keys, metric values fixed to 10 decimals, trailing newline.
  std::string to_json_text() const {
    auto metric = [](double v) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.10f", v);
      return std::string(buf);
    };
    auto gold_json = [](const Gold& g) -> nlohmann::json {
      return std::visit([](const auto& v) { return nlohmann::json(v); }, g);
    };
    std::string out = "{\n";
    if (accuracy) out += "  \"accuracy\": " + metric(*accuracy) + ",\n";
    if (mae) out += "  \"mae\": " + metric(*mae) + ",\n";
    if (macro_f1) out += "  \"macro_f1\": " + metric(*macro_f1) + ",\n";
    out += "  \"n_parse_failures\": " + std::to_string(n_parse_failures) + ",\n";
    out += "  \"n_queries\": " + std::to_string(n_queries) + ",\n";
    out += "  \"predictions\": [";
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      nlohmann::json entry = {{"gold", gold_json(r.gold)},
                              {"prediction", r.prediction ? gold_json(*r.prediction) : nlohmann::json(nullptr)},
                              {"query_id", r.query_id},
                              {"user_id", r.user_id}};
      out += (i ? ",\n    " : "\n    ") + entry.dump();
    }
    out += records.empty() ? "],\n" : "\n  ],\n";
    if (rmse) out += "  \"rmse\": " + metric(*rmse) + ",\n";
    out += "  \"task\": " + nlohmann::json(task_name(task)).dump() + "\n}\n";
    return out;
  }
};

struct RunOptions {
  std::size_t n_users = 100;
  bool use_context = true;
  std::int64_t min_cooccurrence = kDefaultMinCooccurrence;
  Lexicon lexicon;
  std::string model = "mock";
  std::size_t workers = 0;  // 0: gateway in-flight bound for remote, hardware threads for mock
};

/// Graph built from history records only, so test text is never retrievable.
inline KnowledgeGraph build_history_graph(const std::vector<DatasetRecord>& records, const Lexicon& lexicon = {},
                                          std::int64_t min_cooccurrence = kDefaultMinCooccurrence) {
  KnowledgeGraph graph;
  for (const auto& r : records) {
    if (r.split != Split::History) continue;
    const auto category = std::visit(
        [](const auto& v) -> std::string {
          if constexpr (std::is_same_v<std::decay_t<decltype(v)>, int>) {
            return std::to_string(v);
          } else {
            return v;
          }
        },
        r.gold);
    graph.add_interaction({r.user_id, r.title, r.text, category, r.timestamp}, lexicon);
  }
  graph.set_concept_edges(build_cooccurrence_edges(graph, min_cooccurrence));
  return graph;
}

inline std::string query_text(const DatasetRecord& r) {
  return r.title.empty() ? r.text : r.title + "\n" + r.text;
}

namespace detail {

inline void validate_gold(const TaskSpec& task, const DatasetRecord& r, std::size_t index) {
  const auto where = "record " + std::to_string(index + 1) + ": ";
  if (task.kind() == TaskKind::Rating) {
    const auto* g = std::get_if<int>(&r.gold);
    if (!g || *g < kRatingLo || *g > kRatingHi) throw Error(ErrorCode::InvalidArgument, where + "rating gold must be 1-5");
    return;
  }
  const auto* g = std::get_if<std::string>(&r.gold);
  if (!g) throw Error(ErrorCode::InvalidArgument, where + "classification gold must be a label");
  if (std::find(task.labels.begin(), task.labels.end(), to_lower(*g)) == task.labels.end()) {
    throw Error(ErrorCode::InvalidArgument, where + "gold label \"" + *g + "\" not in task label set");
  }
}

inline std::string format_query_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "q%06zu", index + 1);
  return buf;
}

}  // namespace detail

/// End-to-end evaluation: ingest history, then for every test record of the
/// selected users retrieve context, render the prompt, query the backend and
/// parse the answer. Parse failures count as wrong (classification) or as the
/// largest possible error (rating).
inline MetricsReport run_task(const TaskSpec& task, const std::vector<DatasetRecord>& records,
                              const RetrievalConfig& cfg, const LlmGateway& gateway, const RunOptions& options = {}) {
  if (task.kind() == TaskKind::Classification && task.labels.empty()) {
    throw Error(ErrorCode::MissingLabels, "classification task without labels");
  }
  for (std::size_t i = 0; i < records.size(); ++i) detail::validate_gold(task, records[i], i);

  const auto graph = build_history_graph(records, options.lexicon, options.min_cooccurrence);
  const ContextEngine engine(graph);

  const auto users = select_eval_users(records, options.n_users);
  const std::set<std::string> selected(users.begin(), users.end());
  std::vector<std::size_t> test_indices;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].split == Split::Test && selected.count(records[i].user_id)) test_indices.push_back(i);
  }
  if (test_indices.empty()) throw Error(ErrorCode::EmptyTestSet, "no test records for the selected users");

  std::vector<QueryOutcome> outcomes(test_indices.size());
  auto evaluate = [&](std::size_t slot) {
    const auto index = test_indices[slot];
    const auto& r = records[index];
    Query q{r.user_id, query_text(r), task.kind(), task.labels};
    const auto ctx = options.use_context ? engine.get_semantic_context(r.user_id, q, cfg) : SemanticContext{};
    const auto prompt = build_prompt(q, ctx, task.labels, graph);
    const auto raw = gateway.complete({prompt.text, 0.0, 64, options.model});

    QueryOutcome outcome{detail::format_query_id(index), r.user_id, r.gold, std::nullopt};
    try {
      if (task.kind() == TaskKind::Rating) {
        outcome.prediction = parse_rating(raw, kRatingLo, kRatingHi);
      } else {
        outcome.prediction = parse_label(raw, task.labels);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ParseFailure) throw;
    }
    outcomes[slot] = std::move(outcome);
  };

  std::size_t workers = options.workers;
  if (workers == 0) {
    workers = gateway.is_mock() ? std::max(1u, std::thread::hardware_concurrency()) : gateway.max_in_flight();
  }
  workers = std::clamp<std::size_t>(workers, 1, test_indices.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t slot = next++; slot < test_indices.size(); slot = next++) {
          try {
            evaluate(slot);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = test_indices.size();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::sort(outcomes.begin(), outcomes.end(), [](const auto& a, const auto& b) { return a.query_id < b.query_id; });

  MetricsReport report;
  report.task = task.id;
  report.n_queries = outcomes.size();
  for (const auto& o : outcomes) report.n_parse_failures += o.prediction ? 0 : 1;

  if (task.kind() == TaskKind::Rating) {
    std::vector<std::pair<int, int>> pairs;
    for (const auto& o : outcomes) {
      const int gold = std::get<int>(o.gold);
      // A non-answer is scored as the in-range value farthest from gold.
      const int worst = gold - kRatingLo >= kRatingHi - gold ? kRatingLo : kRatingHi;
      pairs.emplace_back(gold, o.prediction ? std::get<int>(*o.prediction) : worst);
    }
    const auto scores = regression_metrics(pairs);
    assert(scores.mae <= scores.rmse + 1e-12);
    report.mae = scores.mae;
    report.rmse = scores.rmse;
  } else {
    std::vector<std::pair<std::string, std::optional<std::string>>> pairs;
    for (const auto& o : outcomes) {
      std::optional<std::string> pred;
      if (o.prediction) pred = std::get<std::string>(*o.prediction);
      pairs.emplace_back(to_lower(std::get<std::string>(o.gold)), std::move(pred));
    }
    const auto scores = classification_metrics(pairs);
    report.accuracy = scores.accuracy;
    report.macro_f1 = scores.macro_f1;
  }
  report.records = std::move(outcomes);
  return report;
}

}  // namespace pgrag
