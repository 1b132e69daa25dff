#include <gtest/gtest.h>

#include <cstdlib>
#include <deque>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "constory/errors.hpp"
#include "constory/llmclient.hpp"
#include "constory/textio.hpp"
#include "support.hpp"

using namespace constory;
using json = nlohmann::ordered_json;

namespace {

struct Sent {
  std::string path;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

class ScriptedTransport : public HttpTransport {
 public:
  explicit ScriptedTransport(std::deque<HttpResponse> replies, std::vector<Sent>* log)
      : replies_(std::move(replies)), log_(log) {}
  HttpResponse post(const std::string& path, const std::string& body,
                    const std::vector<std::pair<std::string, std::string>>& headers) override {
    std::lock_guard lock(mutex_);
    if (log_) log_->push_back({path, body, headers});
    if (replies_.empty()) throw TransportError("connection refused");
    auto r = replies_.front();
    replies_.pop_front();
    if (r.status == 0) throw TransportError("timeout");
    return r;
  }

 private:
  std::mutex mutex_;
  std::deque<HttpResponse> replies_;
  std::vector<Sent>* log_;
};

std::string ok_body(const std::string& content, const std::string& finish = "stop") {
  return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}},
                                        {"finish_reason", finish}}})},
              {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 3}}}}
      .dump();
}

struct Harness {
  std::vector<Sent> sent;
  std::vector<std::chrono::milliseconds> sleeps;
  std::unique_ptr<OpenAICompatibleBackend> backend;

  explicit Harness(std::deque<HttpResponse> replies, std::string key_env = {}) {
    OpenAICompatibleBackend::Options o;
    o.name = "test";
    o.model = "m-1";
    o.path_prefix = "/v1";
    o.api_key_env = std::move(key_env);
    o.retry = {4, std::chrono::milliseconds(100), std::chrono::milliseconds(250)};
    backend = std::make_unique<OpenAICompatibleBackend>(
        o, std::make_unique<ScriptedTransport>(std::move(replies), &sent),
        [this](std::chrono::milliseconds d) { sleeps.push_back(d); });
  }
};

ChatRequest judge_request() {
  auto r = ChatRequest::judge_defaults();
  r.user_prompt = "hello";
  return r;
}

}  // namespace

TEST(ChatRequest, DefaultsAndValidation) {
  const auto g = ChatRequest::generation_defaults();
  EXPECT_DOUBLE_EQ(g.temperature, 0.7);
  EXPECT_DOUBLE_EQ(g.top_p, 0.95);
  EXPECT_EQ(g.top_k, 20);
  const auto j = ChatRequest::judge_defaults();
  EXPECT_DOUBLE_EQ(j.temperature, 0.0);
  EXPECT_FALSE(j.top_k.has_value());
  auto bad = g;
  bad.top_p = 0.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(OpenAIBackend, BodyCarriesSamplingAndLogprobFields) {
  Harness h({});
  auto r = ChatRequest::generation_defaults();
  r.system_prompt = "sys";
  r.user_prompt = "write";
  r.want_logprobs = true;
  const auto body = json::parse(h.backend->build_body(r));
  EXPECT_EQ(body["model"], "m-1");
  EXPECT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["top_k"], 20);
  EXPECT_EQ(body["logprobs"], true);
  EXPECT_EQ(body["top_logprobs"], 20);
  EXPECT_FALSE(json::parse(h.backend->build_body(judge_request())).contains("top_k"));
}

TEST(OpenAIBackend, RetriesTransientFailuresWithCappedBackoff) {
  Harness h({{429, "slow down"}, {0, ""}, {503, "busy"}, {200, ok_body("done")}});
  const auto resp = chat_complete(judge_request(), *h.backend);
  EXPECT_EQ(resp.text, "done");
  EXPECT_EQ(resp.usage.prompt_tokens, 12u);
  EXPECT_EQ(h.backend->attempts_made(), 4u);
  ASSERT_EQ(h.sleeps.size(), 3u);
  EXPECT_EQ(h.sleeps[0].count(), 100);
  EXPECT_EQ(h.sleeps[1].count(), 200);
  EXPECT_EQ(h.sleeps[2].count(), 250);
  EXPECT_EQ(h.sent.front().path, "/v1/chat/completions");
}

TEST(OpenAIBackend, GivesUpAfterMaxAttempts) {
  Harness h({{500, ""}, {500, ""}, {500, ""}, {500, ""}, {200, ok_body("late")}});
  EXPECT_THROW(h.backend->complete(judge_request()), BackendUnavailable);
  EXPECT_EQ(h.backend->attempts_made(), 4u);
}

TEST(OpenAIBackend, AuthAndClientErrorsAreNotRetried) {
  Harness auth({{401, "bad key"}});
  EXPECT_THROW(auth.backend->complete(judge_request()), AuthError);
  EXPECT_EQ(auth.backend->attempts_made(), 1u);

  Harness bad({{400, R"({"error":"bad request"})"}});
  try {
    bad.backend->complete(judge_request());
    FAIL() << "expected BackendError";
  } catch (const BackendUnavailable&) {
    FAIL() << "400 must not be treated as exhaustion";
  } catch (const BackendError&) {
  }
  EXPECT_EQ(bad.backend->attempts_made(), 1u);
}

TEST(OpenAIBackend, ContentFilterBecomesRefusal) {
  Harness pre({{400, R"({"error":{"code":"content_filter"}})"}});
  EXPECT_THROW(pre.backend->complete(judge_request()), ContentRefused);
  Harness post({{200, ok_body("", "content_filter")}});
  EXPECT_THROW(post.backend->complete(judge_request()), ContentRefused);
}

TEST(OpenAIBackend, ApiKeyComesFromEnvironment) {
  ::unsetenv("CONSTORY_TEST_KEY");
  Harness missing({{200, ok_body("x")}}, "CONSTORY_TEST_KEY");
  EXPECT_THROW(missing.backend->complete(judge_request()), AuthError);
  EXPECT_TRUE(missing.sent.empty());

  ::setenv("CONSTORY_TEST_KEY", "sk-test", 1);
  Harness present({{200, ok_body("x")}}, "CONSTORY_TEST_KEY");
  present.backend->complete(judge_request());
  const auto& headers = present.sent.at(0).headers;
  EXPECT_NE(std::find(headers.begin(), headers.end(),
                      std::pair<std::string, std::string>{"Authorization", "Bearer sk-test"}),
            headers.end());
  ::unsetenv("CONSTORY_TEST_KEY");
}

TEST(OpenAIBackend, ParsesLogprobsIntoTrace) {
  const json body = {
      {"choices",
       json::array({{{"message", {{"content", "Hi there"}}},
                     {"finish_reason", "stop"},
                     {"logprobs",
                      {{"content",
                        json::array({{{"token", "Hi"},
                                      {"logprob", -0.1},
                                      {"top_logprobs", json::array({{{"token", "Hello"}, {"logprob", -2.0}},
                                                                    {{"token", "Hi"}, {"logprob", -0.1}}})}},
                                     {{"token", " there"}, {"logprob", -0.5}, {"top_logprobs", json::array()}}})}}}}})}};
  Harness h({{200, body.dump()}});
  auto r = judge_request();
  r.want_logprobs = true;
  r.logprob_top_k = 2;
  const auto resp = h.backend->complete(r);
  ASSERT_TRUE(resp.token_trace.has_value());
  const auto& t = *resp.token_trace;
  ASSERT_EQ(t.tokens.size(), 2u);
  EXPECT_EQ(t.tokens[1].char_start, 2u);
  EXPECT_EQ(t.tokens[1].char_end, 8u);
  EXPECT_EQ(t.tokens[0].top_candidates[0].token_text, "Hi");
  EXPECT_TRUE(is_well_formed(t));
}

TEST(OpenAIBackend, MalformedBodyIsBackendError) {
  Harness h({{200, "not json"}});
  EXPECT_THROW(h.backend->complete(judge_request()), BackendError);
}

TEST(HttpTransport, TalksToLocalServer) {
  httplib::Server server;
  std::string seen_auth;
  server.Post("/api/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    const auto body = json::parse(req.body);
    res.set_content(ok_body("echo:" + body["messages"][0]["content"].get<std::string>()),
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto [transport, prefix] =
      make_http_transport("http://127.0.0.1:" + std::to_string(port) + "/api/v1", std::chrono::seconds(5));
  EXPECT_EQ(prefix, "/api/v1");
  OpenAICompatibleBackend::Options o;
  o.name = "local";
  o.model = "m";
  o.path_prefix = prefix;
  ::setenv("CONSTORY_LOCAL_KEY", "abc", 1);
  o.api_key_env = "CONSTORY_LOCAL_KEY";
  OpenAICompatibleBackend backend(o, std::move(transport));
  const auto resp = backend.complete(judge_request());
  server.stop();
  th.join();
  ::unsetenv("CONSTORY_LOCAL_KEY");
  EXPECT_EQ(resp.text, "echo:hello");
  EXPECT_EQ(seen_auth, "Bearer abc");
}

TEST(ConcurrencyLimit, NeverExceedsBound) {
  class Slow : public Backend {
   public:
    ChatResponse complete(const ChatRequest&) override {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      return {};
    }
    std::string id() const override { return "slow"; }
  };
  ConcurrencyLimitedBackend limited(std::make_shared<Slow>(), 2);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&] { limited.complete(judge_request()); });
  for (auto& t : threads) t.join();
  EXPECT_LE(limited.peak_in_flight(), 2u);
  EXPECT_GE(limited.peak_in_flight(), 1u);
}

TEST(MockBackend, RoutesOnTags) {
  MockScript script;
  script.extraction[{"s1", ErrorCategory::Characterization}] = R"({"memory_contradictions": []})";
  script.generation["p1"] = {"Once upon a time.", false, {0.6, 0.3}};
  script.generation["p2"] = {"", true, {}};
  auto judge = mock_judge(script);

  auto r = judge_request();
  r.tags[tags::kStage] = tags::kStageExtraction;
  r.tags[tags::kStoryId] = "s1";
  r.tags[tags::kCategory] = "characterization";
  EXPECT_EQ(judge->complete(r).text, R"({"memory_contradictions": []})");
  r.tags[tags::kCategory] = "narrative_style";
  EXPECT_EQ(judge->complete(r).text, empty_findings_json(ErrorCategory::NarrativeStyle));

  auto g = ChatRequest::generation_defaults();
  g.want_logprobs = true;
  g.logprob_top_k = 2;
  g.tags[tags::kStage] = tags::kStageGeneration;
  g.tags[tags::kPromptId] = "p1";
  const auto resp = judge->complete(g);
  EXPECT_EQ(resp.text, "Once upon a time.");
  ASSERT_TRUE(resp.token_trace.has_value());
  EXPECT_EQ(reconstruct_text(*resp.token_trace), resp.text);
  EXPECT_NEAR(std::exp(resp.token_trace->tokens[0].chosen_logprob), 0.6, 1e-12);
  g.tags[tags::kPromptId] = "p2";
  EXPECT_THROW(judge->complete(g), ContentRefused);
  g.tags[tags::kPromptId] = "p3";
  EXPECT_THROW(judge->complete(g), BackendError);
}

TEST(Config, ParsesBackendsAndRejectsInlineKeys) {
  const auto c = parse_config(R"({
    "backends": [
      {"name": "j", "type": "openai", "base_url": "https://example.invalid/v1", "model": "x",
       "api_key_env": "X_KEY", "max_parallel": 3},
      {"name": "offline", "type": "mock", "script": "s.json"}
    ],
    "judge": "j", "generation": ["offline"]})",
                              "/tmp");
  EXPECT_EQ(c.backend("j").max_parallel, 3u);
  EXPECT_EQ(c.backend("offline").type, "mock");
  EXPECT_EQ(c.generation, std::vector<std::string>{"offline"});
  EXPECT_THROW(c.backend("missing"), ConfigError);

  EXPECT_THROW(parse_config(R"({"backends": [{"name": "j", "type": "openai", "base_url": "https://x",
                                 "api_key": "sk-123"}]})",
                            "/tmp"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"backends": [{"name": "j", "type": "grpc"}]})", "/tmp"), ConfigError);
  EXPECT_THROW(parse_config("{", "/tmp"), ConfigError);
}

TEST(Config, MockScriptPathIsRelativeToConfig) {
  TempDir dir;
  textio::write_file(dir / "script.json",
                     R"({"extraction": [{"story_id": "s", "category": "characterization",
                         "reply": {"memory_contradictions": []}}]})");
  textio::write_file(dir / "config.json",
                     R"({"backends": [{"name": "m", "type": "mock", "script": "script.json"}], "judge": "m"})");
  const auto c = load_config(dir / "config.json");
  auto backend = make_backend(c.backend("m"), c.base_dir);
  auto r = judge_request();
  r.tags[tags::kStage] = tags::kStageExtraction;
  r.tags[tags::kStoryId] = "s";
  r.tags[tags::kCategory] = "characterization";
  EXPECT_NE(backend->complete(r).text.find("memory_contradictions"), std::string::npos);
}
