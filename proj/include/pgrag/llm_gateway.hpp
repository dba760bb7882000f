#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pgrag/error.hpp"
#include "pgrag/prompt_builder.hpp"
#include "pgrag/text.hpp"

namespace pgrag {

struct CompletionRequest {
  std::string prompt;
  double temperature = 0.0;
  int max_output_tokens = 64;
  std::string model;
};

struct MockBackend {};

struct RemoteBackend {
  std::string endpoint;        // e.g. http://localhost:8080/v1/chat/completions
  std::string credential_env;  // name of the environment variable holding the API key; may be empty
};

using BackendKind = std::variant<MockBackend, RemoteBackend>;

// ---------------------------------------------------------------------------
// Output parsing

/// First label found as a case-insensitive substring of `raw`, checking
/// longer labels first (ties by label order).
inline std::string parse_label(std::string_view raw, const std::vector<std::string>& labels) {
  if (labels.empty()) throw Error(ErrorCode::InvalidArgument, "parse_label needs at least one label");
  std::vector<std::string> order(labels.begin(), labels.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  for (const auto& label : order) {
    if (!label.empty() && ifind(raw, label) != std::string_view::npos) return label;
  }
  throw Error(ErrorCode::ParseFailure, "no label in model output: " + std::string(raw.substr(0, 80)));
}

/// First whole integer token in `raw` that lies within [lo, hi].
inline int parse_rating(std::string_view raw, int lo = 1, int hi = 5) {
  if (lo > hi) throw Error(ErrorCode::InvalidArgument, "parse_rating needs lo <= hi");
  std::size_t i = 0;
  while (i < raw.size()) {
    if (std::isdigit(static_cast<unsigned char>(raw[i]))) {
      std::size_t j = i;
      while (j < raw.size() && std::isdigit(static_cast<unsigned char>(raw[j]))) ++j;
      const auto digits = raw.substr(i, j - i);
      if (digits.size() <= 9) {
        const int value = std::stoi(std::string(digits));
        if (value >= lo && value <= hi) return value;
      }
      i = j;
    } else {
      ++i;
    }
  }
  throw Error(ErrorCode::ParseFailure, "no rating in model output: " + std::string(raw.substr(0, 80)));
}

// ---------------------------------------------------------------------------
// Deterministic mock

namespace detail {

struct ParsedHit {
  std::int64_t score_milli = 0;
  std::string label;
};

/// Parses "0.742" into 742 without going through floating point.
inline std::optional<std::int64_t> parse_milli(std::string_view s) {
  const auto dot = s.find('.');
  if (dot == std::string_view::npos || dot == 0 || s.size() - dot - 1 != 3) return std::nullopt;
  std::int64_t value = 0;
  for (char c : s) {
    if (c == '.') continue;
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    value = value * 10 + (c - '0');
  }
  return value;
}

/// Recovers (score, category-or-rating) pairs from the interaction sections of a prompt.
inline std::vector<ParsedHit> parse_prompt_hits(std::string_view prompt) {
  std::vector<ParsedHit> hits;
  bool in_hits = false;
  std::istringstream lines{std::string(prompt)};
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind("## ", 0) == 0) {
      in_hits = line == kUserHeader || line == kCommunityHeader;
      continue;
    }
    if (!in_hits || line.rfind("- [score=", 0) != 0) continue;
    const auto close = line.find("] (", 9);
    if (close == std::string::npos) continue;
    const auto score = parse_milli(std::string_view(line).substr(9, close - 9));
    auto rest = std::string_view(line).substr(close + 3);
    std::string_view tag;
    if (rest.rfind("category: ", 0) == 0) {
      tag = "category: ";
    } else if (rest.rfind("rating: ", 0) == 0) {
      tag = "rating: ";
    } else {
      continue;
    }
    rest.remove_prefix(tag.size());
    const auto end = rest.find(") ");
    if (!score || end == std::string_view::npos) continue;
    hits.push_back({*score, std::string(rest.substr(0, end))});
  }
  return hits;
}

inline std::vector<std::string> parse_available_categories(std::string_view prompt) {
  constexpr std::string_view kPrefix = "Available categories: ";
  std::istringstream lines{std::string(prompt)};
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind(kPrefix, 0) != 0) continue;
    std::vector<std::string> labels;
    std::string_view rest = std::string_view(line).substr(kPrefix.size());
    while (!rest.empty()) {
      const auto comma = rest.find(", ");
      labels.emplace_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 2);
    }
    return labels;
  }
  return {};
}

}  // namespace detail

inline constexpr int kMockRatingFallback = 3;

/// Answers from the prompt text alone.
///
/// Classification: similarity-weighted vote over the (score, category) lines,
/// ties to the smallest label; with no lines, the first available category.
/// Rating: similarity-weighted mean of the parsed ratings rounded half-up
/// (unweighted when every score is zero); with no lines, 3.
inline std::string mock_complete(std::string_view prompt) {
  const auto hits = detail::parse_prompt_hits(prompt);
  const bool rating_task = prompt.find(kRatingAnswer) != std::string_view::npos;

  if (rating_task) {
    std::int64_t num = 0;
    std::int64_t den = 0;
    for (const auto& h : hits) {
      try {
        const auto r = std::stoll(h.label);
        num += h.score_milli * r;
        den += h.score_milli;
      } catch (const std::exception&) {
      }
    }
    if (den == 0) {
      for (const auto& h : hits) {
        try {
          num += std::stoll(h.label);
          ++den;
        } catch (const std::exception&) {
        }
      }
    }
    if (den == 0) return std::to_string(kMockRatingFallback);
    // floor(num/den + 1/2) for non-negative values
    const auto rounded = (2 * num + den) / (2 * den);
    return std::to_string(std::clamp<std::int64_t>(rounded, 1, 5));
  }

  std::map<std::string, std::int64_t> votes;
  for (const auto& h : hits) votes[h.label] += h.score_milli;
  if (votes.empty()) {
    const auto labels = detail::parse_available_categories(prompt);
    return labels.empty() ? std::string() : labels.front();
  }
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

// ---------------------------------------------------------------------------
// Remote HTTP backend

struct GatewayOptions {
  std::size_t max_in_flight = 4;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds connect_timeout{10};
  std::chrono::seconds read_timeout{120};
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
};

struct Endpoint {
  std::string scheme_host_port;
  std::string path;
};

inline Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidArgument, "endpoint needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string chat_request_body(const CompletionRequest& req) {
  nlohmann::json body = {{"model", req.model},
                         {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.prompt}}})},
                         {"temperature", req.temperature},
                         {"max_tokens", req.max_output_tokens}};
  return body.dump();
}

/// Text of the first choice's message in a chat-completion response body.
inline std::string read_chat_response(const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw Error(ErrorCode::MalformedResponse, "response is not JSON");
  }
  const auto ptr = nlohmann::json::json_pointer("/choices/0/message/content");
  if (!doc.is_object() || !doc.contains(ptr) || !doc.at(ptr).is_string()) {
    throw Error(ErrorCode::MalformedResponse, "missing choices[0].message.content");
  }
  return doc.at(ptr).get<std::string>();
}

/// Dispatches completion requests to the configured backend. Remote calls are
/// bounded by `max_in_flight` and retried on transport errors, 429 and 5xx.
class LlmGateway {
 public:
  explicit LlmGateway(BackendKind backend, GatewayOptions options = {})
      : backend_(std::move(backend)),
        options_(std::move(options)),
        slots_(std::make_unique<std::counting_semaphore<kMaxSlots>>(
            static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options_.max_in_flight, 1, kMaxSlots)))) {
    if (auto* remote = std::get_if<RemoteBackend>(&backend_); remote && remote->endpoint.empty()) {
      throw Error(ErrorCode::InvalidArgument, "remote backend requires an endpoint");
    }
  }

  const BackendKind& backend() const { return backend_; }
  bool is_mock() const { return std::holds_alternative<MockBackend>(backend_); }
  std::size_t max_in_flight() const { return options_.max_in_flight; }

  std::string complete(const CompletionRequest& req) const {
    if (req.temperature < 0) throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
    if (is_mock()) return mock_complete(req.prompt);

    slots_->acquire();
    struct Release {
      std::counting_semaphore<kMaxSlots>* s;
      ~Release() { s->release(); }
    } release{slots_.get()};
    return remote_complete(req, std::get<RemoteBackend>(backend_));
  }

 private:
  static constexpr std::ptrdiff_t kMaxSlots = 1024;

  std::string remote_complete(const CompletionRequest& req, const RemoteBackend& remote) const {
    const auto endpoint = split_endpoint(remote.endpoint);
    httplib::Client client(endpoint.scheme_host_port);
    if (!client.is_valid()) {
      throw Error(ErrorCode::BackendUnreachable, "unsupported endpoint " + remote.endpoint);
    }
    client.set_connection_timeout(options_.connect_timeout);
    client.set_read_timeout(options_.read_timeout);

    httplib::Headers headers;
    if (!remote.credential_env.empty()) {
      if (const char* key = std::getenv(remote.credential_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }
    }
    const auto body = chat_request_body(req);

    std::string last_error;
    auto backoff = options_.initial_backoff;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
      if (attempt > 0) {
        options_.sleep(backoff);
        backoff *= 2;
      }
      auto res = client.Post(endpoint.path, headers, body, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw Error(ErrorCode::BackendUnreachable, "HTTP " + std::to_string(res->status) + " from " + remote.endpoint);
      }
      return read_chat_response(res->body);
    }
    throw Error(ErrorCode::BackendUnreachable,
                remote.endpoint + " after " + std::to_string(options_.max_retries) + " retries (" + last_error + ")");
  }

  BackendKind backend_;
  GatewayOptions options_;
  std::unique_ptr<std::counting_semaphore<kMaxSlots>> slots_;
};

inline std::string complete(const CompletionRequest& req, const BackendKind& backend) {
  return LlmGateway(backend).complete(req);
}

}  // namespace pgrag
