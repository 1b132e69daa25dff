#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "constory/domain.hpp"
#include "constory/trace.hpp"

namespace constory {

struct ChatRequest {
  std::string model;  // empty: use the backend's configured model
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.7;
  double top_p = 0.95;
  std::optional<int> top_k = 20;  // nullopt: unlimited
  int max_tokens = 16384;
  bool want_logprobs = false;
  int logprob_top_k = 20;
  // Routing metadata for scripted backends (stage, story_id, category, ...).
  // Never sent over the wire.
  std::map<std::string, std::string> tags;

  // Throws InvalidArgument when a field is out of range.
  void validate() const;

  // Story generation: temperature 0.7, top-p 0.95, top-k 20.
  static ChatRequest generation_defaults();
  // Judge calls: temperature 0, top-p 1, no top-k, no logprobs.
  static ChatRequest judge_defaults();
};

struct Usage {
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  std::optional<TokenTrace> token_trace;
  Usage usage;
  std::string backend_id;
  std::string finish_reason;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Implementations must be safe to call concurrently.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
  virtual bool supports_logprobs() const { return false; }
};

ChatResponse chat_complete(const ChatRequest& request, Backend& backend);

// ---------------------------------------------------------------------------
// HTTP transport. Connection failures and timeouts surface as TransportError.

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Implementations must allow concurrent post() calls.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& path, const std::string& body,
                            const std::vector<std::pair<std::string, std::string>>& headers) = 0;
};

// base_url is scheme://host[:port][/prefix]. Returns the transport and the
// path prefix to prepend to endpoint paths.
std::pair<std::unique_ptr<HttpTransport>, std::string> make_http_transport(
    const std::string& base_url, std::chrono::seconds timeout);

struct RetryPolicy {
  int max_attempts = 4;  // total sends, including the first
  std::chrono::milliseconds base_delay{1000};
  std::chrono::milliseconds max_delay{30000};
};

// Transient failures: transport errors, 408, 425, 429 and 5xx.
bool is_transient_status(int status) noexcept;

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// OpenAI-compatible chat-completions client, including logprobs/top_logprobs.
class OpenAICompatibleBackend final : public Backend {
 public:
  struct Options {
    std::string name;
    std::string model;
    std::string api_key_env;  // empty: no Authorization header
    std::string path_prefix;  // e.g. "/v1"
    RetryPolicy retry;
    bool send_top_k = true;
    bool logprobs_capable = true;
  };

  OpenAICompatibleBackend(Options options, std::unique_ptr<HttpTransport> transport,
                          Sleeper sleeper = {});

  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override { return options_.name; }
  bool supports_logprobs() const override { return options_.logprobs_capable; }

  std::size_t attempts_made() const noexcept { return attempts_.load(); }

  // Request body for the wire; exposed for tests.
  std::string build_body(const ChatRequest& request) const;
  // Parses a 200 response body. Throws ContentRefused on a content-filter
  // stop and BackendError on a malformed body.
  ChatResponse parse_body(const std::string& body, const ChatRequest& request) const;

 private:
  Options options_;
  std::unique_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
  std::atomic<std::size_t> attempts_{0};
};

// Bounds the number of in-flight calls to the wrapped backend.
class ConcurrencyLimitedBackend final : public Backend {
 public:
  ConcurrencyLimitedBackend(std::shared_ptr<Backend> inner, std::size_t max_parallel);

  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override { return inner_->id(); }
  bool supports_logprobs() const override { return inner_->supports_logprobs(); }

  std::size_t peak_in_flight() const;

 private:
  std::shared_ptr<Backend> inner_;
  std::size_t max_parallel_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::size_t in_flight_ = 0;
  std::size_t peak_ = 0;
};

// ---------------------------------------------------------------------------
// Scripted backend for offline runs and tests.

struct GenerationScript {
  std::string text;
  bool refuse = false;
  // Probabilities of the top-K candidates reported for every token; the
  // chosen token is the first. Empty: a seeded pseudo-random distribution.
  std::vector<double> candidate_probs;
};

struct MockScript {
  // (story_id, category) -> raw judge reply for the extraction prompt.
  std::map<std::pair<std::string, ErrorCategory>, std::string> extraction;
  // (story_id, fact_quote) -> raw judge reply for the pair verification.
  std::map<std::pair<std::string, std::string>, std::string> verification;
  // prompt_id -> generated story.
  std::map<std::string, GenerationScript> generation;
  // (story_id, subtype schema key) -> raw reply for an injection request.
  std::map<std::pair<std::string, std::string>, std::string> injection;
  std::uint64_t seed = 0;

  static MockScript from_json(const std::string& json_text);
};

// A reply listing every array of the category, all empty.
std::string empty_findings_json(ErrorCategory category);

// Backend whose replies are a pure lookup on request tags. Unscripted
// extraction keys yield empty_findings_json; unscripted verifications answer
// Contradictory; unscripted generation prompts raise BackendError.
std::shared_ptr<Backend> mock_judge(MockScript script, std::string name = "mock");

// Request tag keys understood by the mock backend.
namespace tags {
inline constexpr const char* kStage = "stage";
inline constexpr const char* kStoryId = "story_id";
inline constexpr const char* kCategory = "category";
inline constexpr const char* kFactQuote = "fact_quote";
inline constexpr const char* kPromptId = "prompt_id";
inline constexpr const char* kSubtype = "subtype";
inline constexpr const char* kStageExtraction = "extraction";
inline constexpr const char* kStageVerification = "verification";
inline constexpr const char* kStageGeneration = "generation";
inline constexpr const char* kStageInjection = "injection";
}  // namespace tags

// ---------------------------------------------------------------------------
// Backend configuration file (JSON).
//
// {
//   "backends": [
//     {"name": "judge", "type": "openai", "base_url": "https://api.openai.com/v1",
//      "model": "o4-mini", "api_key_env": "OPENAI_API_KEY",
//      "max_parallel": 8, "max_retries": 3},
//     {"name": "offline", "type": "mock", "script": "mock_script.json"}
//   ],
//   "judge": "judge",
//   "generation": ["offline"]
// }

struct BackendConfig {
  std::string name;
  std::string type = "openai";  // "openai" | "mock"
  std::string base_url;
  std::string model;
  std::string api_key_env;
  std::size_t max_parallel = 8;
  int max_retries = 3;
  int timeout_seconds = 600;
  int backoff_ms = 1000;
  bool send_top_k = true;
  bool logprobs = true;
  std::filesystem::path script;  // mock only, relative to the config file
};

struct HarnessConfig {
  std::vector<BackendConfig> backends;
  std::string judge;
  std::vector<std::string> generation;
  std::filesystem::path base_dir;

  const BackendConfig& backend(const std::string& name) const;  // throws ConfigError
};

HarnessConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
HarnessConfig load_config(const std::filesystem::path& path);

std::shared_ptr<Backend> make_backend(const BackendConfig& config,
                                      const std::filesystem::path& base_dir);

}  // namespace constory
