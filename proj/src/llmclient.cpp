#include "constory/llmclient.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "constory/errors.hpp"
#include "constory/utf8.hpp"

namespace constory {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Token traces

TokenTrace make_trace(std::vector<TraceToken> tokens, std::size_t k) {
  std::size_t offset = 0;
  for (auto& t : tokens) {
    const auto len = utf8::length(t.token_text);
    t.char_start = offset;
    t.char_end = offset + len;
    offset += len;
    std::stable_sort(t.top_candidates.begin(), t.top_candidates.end(),
                     [](const TokenCandidate& a, const TokenCandidate& b) { return a.logprob > b.logprob; });
    if (k > 0 && t.top_candidates.size() > k) t.top_candidates.resize(k);
  }
  return TokenTrace{std::move(tokens), k};
}

std::string reconstruct_text(const TokenTrace& trace) {
  std::string out;
  for (const auto& t : trace.tokens) out += t.token_text;
  return out;
}

bool is_well_formed(const TokenTrace& trace) {
  std::size_t expected_start = 0;
  for (const auto& t : trace.tokens) {
    if (t.char_start != expected_start || t.char_end < t.char_start) return false;
    if (t.char_end - t.char_start != utf8::length(t.token_text)) return false;
    if (t.chosen_logprob > 0.0) return false;
    if (trace.k > 0 && t.top_candidates.size() > trace.k) return false;
    for (std::size_t i = 0; i < t.top_candidates.size(); ++i) {
      if (t.top_candidates[i].logprob > 0.0) return false;
      if (i > 0 && t.top_candidates[i].logprob > t.top_candidates[i - 1].logprob) return false;
    }
    expected_start = t.char_end;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Requests

void ChatRequest::validate() const {
  if (temperature < 0.0) throw InvalidArgument("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw InvalidArgument("top_p must be in (0, 1]");
  if (top_k && *top_k < 1) throw InvalidArgument("top_k must be positive");
  if (max_tokens < 1) throw InvalidArgument("max_tokens must be positive");
  if (want_logprobs && logprob_top_k < 1) {
    throw InvalidArgument("logprob_top_k must be >= 1 when logprobs are requested");
  }
}

ChatRequest ChatRequest::generation_defaults() { return ChatRequest{}; }

ChatRequest ChatRequest::judge_defaults() {
  ChatRequest r;
  r.temperature = 0.0;
  r.top_p = 1.0;
  r.top_k = std::nullopt;
  r.want_logprobs = false;
  return r;
}

ChatResponse chat_complete(const ChatRequest& request, Backend& backend) {
  request.validate();
  return backend.complete(request);
}

bool is_transient_status(int status) noexcept {
  return status == 408 || status == 425 || status == 429 || (status >= 500 && status <= 599);
}

// ---------------------------------------------------------------------------
// OpenAI-compatible backend

OpenAICompatibleBackend::OpenAICompatibleBackend(Options options,
                                                 std::unique_ptr<HttpTransport> transport,
                                                 Sleeper sleeper)
    : options_(std::move(options)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (options_.retry.max_attempts < 1) options_.retry.max_attempts = 1;
}

std::string OpenAICompatibleBackend::build_body(const ChatRequest& request) const {
  json body;
  body["model"] = request.model.empty() ? options_.model : request.model;
  json messages = json::array();
  if (!request.system_prompt.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user_prompt}});
  body["messages"] = std::move(messages);
  body["temperature"] = request.temperature;
  body["top_p"] = request.top_p;
  if (request.top_k && options_.send_top_k) body["top_k"] = *request.top_k;
  body["max_tokens"] = request.max_tokens;
  if (request.want_logprobs && options_.logprobs_capable) {
    body["logprobs"] = true;
    body["top_logprobs"] = request.logprob_top_k;
  }
  return body.dump();
}

ChatResponse OpenAICompatibleBackend::parse_body(const std::string& body,
                                                 const ChatRequest& request) const {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendError(options_.name + ": response is not JSON: " + e.what());
  }
  try {
    const auto& choices = j.at("choices");
    if (!choices.is_array() || choices.empty()) {
      throw BackendError(options_.name + ": response has no choices");
    }
    const auto& choice = choices.at(0);
    ChatResponse resp;
    resp.backend_id = options_.name;
    resp.finish_reason = choice.value("finish_reason", std::string{});
    const auto& message = choice.at("message");
    if (auto r = message.find("refusal"); r != message.end() && r->is_string() && !r->empty()) {
      throw ContentRefused(options_.name + ": " + r->get<std::string>());
    }
    if (resp.finish_reason == "content_filter") {
      throw ContentRefused(options_.name + ": response stopped by content filter");
    }
    if (auto c = message.find("content"); c != message.end() && c->is_string()) {
      resp.text = c->get<std::string>();
    }
    if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
      resp.usage.prompt_tokens = u->value("prompt_tokens", std::size_t{0});
      resp.usage.completion_tokens = u->value("completion_tokens", std::size_t{0});
    }
    if (request.want_logprobs && options_.logprobs_capable) {
      auto lp = choice.find("logprobs");
      if (lp != choice.end() && lp->is_object() && lp->contains("content") &&
          (*lp)["content"].is_array()) {
        std::vector<TraceToken> tokens;
        for (const auto& tj : (*lp)["content"]) {
          TraceToken t;
          t.token_text = tj.at("token").get<std::string>();
          t.chosen_logprob = std::min(0.0, tj.at("logprob").get<double>());
          if (auto top = tj.find("top_logprobs"); top != tj.end() && top->is_array()) {
            for (const auto& cj : *top) {
              t.top_candidates.push_back(
                  {cj.at("token").get<std::string>(), std::min(0.0, cj.at("logprob").get<double>())});
            }
          }
          tokens.push_back(std::move(t));
        }
        auto trace = make_trace(std::move(tokens), static_cast<std::size_t>(request.logprob_top_k));
        if (reconstruct_text(trace) == resp.text) {
          resp.token_trace = std::move(trace);
        } else {
          spdlog::warn("{}: logprob tokens do not reconstruct the content; trace dropped",
                       options_.name);
        }
      } else {
        spdlog::warn("{}: logprobs requested but not returned", options_.name);
      }
    }
    return resp;
  } catch (const json::exception& e) {
    throw BackendError(options_.name + ": malformed response: " + e.what());
  }
}

namespace {

bool mentions_content_filter(const std::string& body) {
  return body.find("content_filter") != std::string::npos ||
         body.find("content_policy_violation") != std::string::npos;
}

}  // namespace

ChatResponse OpenAICompatibleBackend::complete(const ChatRequest& request) {
  request.validate();
  const auto body = build_body(request);
  std::vector<std::pair<std::string, std::string>> headers = {{"Content-Type", "application/json"}};
  if (!options_.api_key_env.empty()) {
    const char* key = std::getenv(options_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw AuthError(options_.name + ": environment variable " + options_.api_key_env +
                      " is not set");
    }
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  const std::string path = options_.path_prefix + "/chat/completions";

  std::string last_error;
  const auto& retry = options_.retry;
  for (int attempt = 1; attempt <= retry.max_attempts; ++attempt) {
    ++attempts_;
    try {
      const auto resp = transport_->post(path, body, headers);
      if (resp.status == 200) return parse_body(resp.body, request);
      if (resp.status == 401 || resp.status == 403) {
        throw AuthError(options_.name + ": HTTP " + std::to_string(resp.status));
      }
      if (!is_transient_status(resp.status)) {
        if (mentions_content_filter(resp.body)) {
          throw ContentRefused(options_.name + ": request refused by content filter");
        }
        throw BackendError(options_.name + ": HTTP " + std::to_string(resp.status) + ": " +
                           preview(resp.body, 300));
      }
      last_error = "HTTP " + std::to_string(resp.status);
    } catch (const TransportError& e) {
      last_error = e.what();
    }
    if (attempt < retry.max_attempts) {
      auto delay = retry.base_delay * (1LL << std::min(attempt - 1, 20));
      delay = std::min<std::chrono::milliseconds>(delay, retry.max_delay);
      spdlog::debug("{}: transient failure ({}), retry {} in {} ms", options_.name, last_error,
                    attempt, delay.count());
      sleeper_(delay);
    }
  }
  throw BackendUnavailable(options_.name + ": giving up after " +
                           std::to_string(retry.max_attempts) + " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Concurrency limiter

ConcurrencyLimitedBackend::ConcurrencyLimitedBackend(std::shared_ptr<Backend> inner,
                                                     std::size_t max_parallel)
    : inner_(std::move(inner)), max_parallel_(std::max<std::size_t>(1, max_parallel)) {}

ChatResponse ConcurrencyLimitedBackend::complete(const ChatRequest& request) {
  {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return in_flight_ < max_parallel_; });
    ++in_flight_;
    peak_ = std::max(peak_, in_flight_);
  }
  struct Release {
    ConcurrencyLimitedBackend* self;
    ~Release() {
      {
        std::lock_guard lock(self->mutex_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};
  return inner_->complete(request);
}

std::size_t ConcurrencyLimitedBackend::peak_in_flight() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

}  // namespace constory
