// pgrag: command-line front end for the persona GraphRAG engine.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pgrag/pgrag.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

constexpr const char* kEndpointEnv = "PGRAG_ENDPOINT";
constexpr const char* kModelEnv = "PGRAG_MODEL";
constexpr const char* kDefaultCredentialEnv = "PGRAG_API_KEY";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Values from the JSON config file (--config). Lowest precedence.
struct FileConfig {
  nlohmann::json doc = nlohmann::json::object();

  template <class T>
  std::optional<T> get(const char* key) const {
    if (!doc.contains(key)) return std::nullopt;
    try {
      return doc.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw UsageError(std::string("config key \"") + key + "\" has the wrong type");
    }
  }
};

FileConfig load_config(const std::string& path) {
  FileConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  try {
    cfg.doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config file " + path + " is not valid JSON");
  }
  if (!cfg.doc.is_object()) throw UsageError("config file must hold a JSON object");
  return cfg;
}

// flag > environment > config file > built-in default
template <class T>
T resolve(const CLI::Option* flag, const T& flag_value, const char* env, const FileConfig& cfg, const char* key,
          const T& fallback) {
  if (flag && flag->count() > 0) return flag_value;
  if (env) {
    if (const char* v = std::getenv(env); v && *v) {
      if constexpr (std::is_same_v<T, std::string>) {
        return std::string(v);
      } else {
        std::istringstream in(v);
        T parsed{};
        if (!(in >> parsed)) throw UsageError(std::string("environment variable ") + env + " is not a number");
        return parsed;
      }
    }
  }
  if (auto v = cfg.get<T>(key)) return *v;
  return fallback;
}

struct SourceFlags {
  std::string graph_path;
  std::string data_path;
  std::string lexicon_path;
  std::int64_t min_count = pgrag::kDefaultMinCooccurrence;
  CLI::Option* lexicon_opt = nullptr;
  CLI::Option* min_count_opt = nullptr;
};

struct RetrievalFlags {
  std::size_t k_user = 5;
  std::size_t k_global = 5;
  std::size_t m_concepts = 10;
  CLI::Option* k_user_opt = nullptr;
  CLI::Option* k_global_opt = nullptr;
  CLI::Option* m_concepts_opt = nullptr;
};

void add_source_flags(CLI::App* cmd, SourceFlags& f, bool allow_graph) {
  if (allow_graph) cmd->add_option("--graph", f.graph_path, "Graph snapshot written by `ingest`");
  cmd->add_option("--data", f.data_path, "JSONL dataset; history records are ingested");
  f.lexicon_opt = cmd->add_option("--lexicon", f.lexicon_path, "Domain keyword file, one per line");
  f.min_count_opt = cmd->add_option("--min-count", f.min_count, "Co-occurrence threshold for concept edges")
                        ->check(CLI::PositiveNumber);
}

void add_retrieval_flags(CLI::App* cmd, RetrievalFlags& f) {
  f.k_user_opt = cmd->add_option("--k-user", f.k_user, "Personal hits to retrieve (default 5)");
  f.k_global_opt = cmd->add_option("--k-global", f.k_global, "Community hits to retrieve (default 5)");
  f.m_concepts_opt = cmd->add_option("--m-concepts", f.m_concepts, "Concepts to include (default 10)");
}

pgrag::RetrievalConfig retrieval_config(const RetrievalFlags& f, const FileConfig& cfg) {
  return {resolve<std::size_t>(f.k_user_opt, f.k_user, nullptr, cfg, "k_user", 5),
          resolve<std::size_t>(f.k_global_opt, f.k_global, nullptr, cfg, "k_global", 5),
          resolve<std::size_t>(f.m_concepts_opt, f.m_concepts, nullptr, cfg, "m_concepts", 10)};
}

pgrag::Lexicon lexicon_for(const SourceFlags& f, const FileConfig& cfg) {
  const auto path = resolve<std::string>(f.lexicon_opt, f.lexicon_path, nullptr, cfg, "lexicon", "");
  return path.empty() ? pgrag::Lexicon{} : pgrag::load_lexicon(path);
}

std::int64_t min_count_for(const SourceFlags& f, const FileConfig& cfg) {
  return resolve<std::int64_t>(f.min_count_opt, f.min_count, nullptr, cfg, "min_count",
                               pgrag::kDefaultMinCooccurrence);
}

pgrag::KnowledgeGraph load_graph(const SourceFlags& f, const FileConfig& cfg) {
  if (f.graph_path.empty() == f.data_path.empty()) throw UsageError("exactly one of --graph or --data is required");
  if (!f.graph_path.empty()) return pgrag::KnowledgeGraph::load_snapshot(f.graph_path);
  return pgrag::build_history_graph(pgrag::load_dataset(f.data_path), lexicon_for(f, cfg), min_count_for(f, cfg));
}

pgrag::TaskSpec task_for(const std::string& name) {
  const auto id = pgrag::task_from_name(name);
  if (!id) throw UsageError("unknown task \"" + name + "\" (expected lamp2n, lamp2m or lamp3)");
  return pgrag::default_task(*id);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persona-driven GraphRAG: ingest interaction logs, inspect retrieval context, "
               "render prompts and evaluate personalization tasks."};
  app.footer(
      "Settings precedence: command-line flags > environment (PGRAG_ENDPOINT, PGRAG_MODEL) > "
      "--config JSON file > defaults.\nThe remote API key is read from the environment variable named by "
      "--credential-env (default PGRAG_API_KEY).");
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (keys: endpoint, model, credential_env, k_user, "
                                          "k_global, m_concepts, lexicon, min_count, max_in_flight)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Build the knowledge graph from a dataset and save a snapshot");
  SourceFlags ingest_src;
  std::string ingest_out;
  add_source_flags(ingest, ingest_src, false);
  ingest->get_option("--data")->required();
  ingest->add_option("--out", ingest_out, "Snapshot path")->required();

  // context
  auto* context = app.add_subcommand("context", "Print the retrieval context for a user and query as JSON");
  SourceFlags context_src;
  RetrievalFlags context_ret;
  std::string context_user, context_query;
  add_source_flags(context, context_src, true);
  add_retrieval_flags(context, context_ret);
  context->add_option("--user", context_user, "User id")->required();
  context->add_option("--query", context_query, "Query text")->required();

  // prompt
  auto* prompt = app.add_subcommand("prompt", "Print the personalized prompt for a user and query");
  SourceFlags prompt_src;
  RetrievalFlags prompt_ret;
  std::string prompt_user, prompt_query, prompt_task;
  add_source_flags(prompt, prompt_src, true);
  add_retrieval_flags(prompt, prompt_ret);
  prompt->add_option("--user", prompt_user, "User id")->required();
  prompt->add_option("--query", prompt_query, "Query text")->required();
  prompt->add_option("--task", prompt_task, "lamp2n | lamp2m | lamp3")->required();

  // communities
  auto* communities = app.add_subcommand("communities", "Print concept communities as JSON");
  SourceFlags communities_src;
  add_source_flags(communities, communities_src, true);

  // eval
  auto* eval = app.add_subcommand("eval", "Run a task end to end and print the metrics report as JSON");
  SourceFlags eval_src;
  RetrievalFlags eval_ret;
  std::string eval_task, eval_llm = "mock", eval_endpoint, eval_model, eval_credential_env;
  std::size_t eval_users = 100, eval_in_flight = 4;
  bool eval_no_context = false;
  add_source_flags(eval, eval_src, false);
  eval->get_option("--data")->required();
  add_retrieval_flags(eval, eval_ret);
  eval->add_option("--task", eval_task, "lamp2n | lamp2m | lamp3")->required();
  eval->add_option("--llm", eval_llm, "Backend: mock or remote")->check(CLI::IsMember({"mock", "remote"}));
  auto* endpoint_opt = eval->add_option("--endpoint", eval_endpoint, "Chat-completions URL for --llm remote");
  auto* model_opt = eval->add_option("--model", eval_model, "Model name sent to the remote backend");
  auto* credential_opt =
      eval->add_option("--credential-env", eval_credential_env, "Environment variable holding the API key");
  auto* in_flight_opt =
      eval->add_option("--max-in-flight", eval_in_flight, "Concurrent remote requests (default 4)")
          ->check(CLI::PositiveNumber);
  eval->add_option("--users", eval_users, "Number of most active users to evaluate (default 100)")
      ->check(CLI::PositiveNumber);
  eval->add_flag("--no-context", eval_no_context, "Ablation: render prompts without any retrieved context");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    const auto cfg = load_config(config_path);

    if (*ingest) {
      const auto graph = pgrag::build_history_graph(pgrag::load_dataset(ingest_src.data_path),
                                                    lexicon_for(ingest_src, cfg), min_count_for(ingest_src, cfg));
      graph.save_snapshot(ingest_out);
      std::cerr << "ingested " << graph.interactions().size() << " interactions, " << graph.concepts().size()
                << " concepts into " << ingest_out << "\n";
    } else if (*context) {
      const auto graph = load_graph(context_src, cfg);
      const pgrag::ContextEngine engine(graph);
      const pgrag::Query q{context_user, context_query, pgrag::TaskKind::Classification, {}};
      std::cout << engine.get_semantic_context(context_user, q, retrieval_config(context_ret, cfg)).to_json().dump(2)
                << "\n";
    } else if (*prompt) {
      const auto task = task_for(prompt_task);
      const auto graph = load_graph(prompt_src, cfg);
      const pgrag::ContextEngine engine(graph);
      const pgrag::Query q{prompt_user, prompt_query, task.kind(), task.labels};
      const auto ctx = engine.get_semantic_context(prompt_user, q, retrieval_config(prompt_ret, cfg));
      std::cout << pgrag::build_prompt(q, ctx, task.labels, graph).text;
    } else if (*communities) {
      const auto graph = load_graph(communities_src, cfg);
      std::cout << pgrag::detect_communities(graph).to_json().dump(2) << "\n";
    } else if (*eval) {
      const auto task = task_for(eval_task);
      pgrag::BackendKind backend = pgrag::MockBackend{};
      std::string model = "mock";
      std::size_t in_flight = 4;
      if (eval_llm == "remote") {
        const auto endpoint = resolve<std::string>(endpoint_opt, eval_endpoint, kEndpointEnv, cfg, "endpoint", "");
        if (endpoint.empty()) throw UsageError("--llm remote needs --endpoint, PGRAG_ENDPOINT or config \"endpoint\"");
        model = resolve<std::string>(model_opt, eval_model, kModelEnv, cfg, "model", "");
        if (model.empty()) throw UsageError("--llm remote needs --model, PGRAG_MODEL or config \"model\"");
        const auto credential = resolve<std::string>(credential_opt, eval_credential_env, nullptr, cfg,
                                                     "credential_env", kDefaultCredentialEnv);
        in_flight = resolve<std::size_t>(in_flight_opt, eval_in_flight, nullptr, cfg, "max_in_flight", 4);
        backend = pgrag::RemoteBackend{endpoint, credential};
      }
      pgrag::GatewayOptions gateway_options;
      gateway_options.max_in_flight = in_flight;
      const pgrag::LlmGateway gateway(backend, gateway_options);

      pgrag::RunOptions run;
      run.n_users = eval_users;
      run.use_context = !eval_no_context;
      run.lexicon = lexicon_for(eval_src, cfg);
      run.min_cooccurrence = min_count_for(eval_src, cfg);
      run.model = model;
      const auto report =
          pgrag::run_task(task, pgrag::load_dataset(eval_src.data_path), retrieval_config(eval_ret, cfg), gateway, run);
      std::cout << report.to_json_text();
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
