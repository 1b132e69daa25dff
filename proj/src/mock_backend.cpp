#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <json.hpp>

#include "constory/errors.hpp"
#include "constory/llmclient.hpp"
#include "constory/utf8.hpp"

namespace constory {

using json = nlohmann::ordered_json;

namespace {

std::string reply_text(const json& j) {
  const auto& r = j.at("reply");
  return r.is_string() ? r.get<std::string>() : r.dump(2);
}

std::string tag(const ChatRequest& req, const char* key) {
  auto it = req.tags.find(key);
  return it == req.tags.end() ? std::string{} : it->second;
}

// Splits text so that every token is a run of non-space code points followed
// by its trailing whitespace; the concatenation is the original text.
std::vector<std::string> split_tokens(const std::string& text) {
  const auto cps = utf8::decode(text);
  std::vector<std::string> out;
  std::u32string cur;
  bool in_space = false;
  for (char32_t c : cps) {
    const bool space = utf8::is_space(c);
    if (!space && in_space && !cur.empty()) {
      out.push_back(utf8::encode(cur));
      cur.clear();
    }
    in_space = space;
    cur.push_back(c);
  }
  if (!cur.empty()) out.push_back(utf8::encode(cur));
  return out;
}

TokenTrace synthetic_trace(const std::string& text, const GenerationScript& script,
                           std::uint64_t seed, const std::string& prompt_id, std::size_t k) {
  std::mt19937_64 rng(seed ^ std::hash<std::string>{}(prompt_id));
  std::vector<TraceToken> tokens;
  for (auto& piece : split_tokens(text)) {
    std::vector<double> probs = script.candidate_probs;
    if (probs.empty()) {
      std::uniform_real_distribution<double> u(0.05, 1.0);
      probs.resize(std::min<std::size_t>(k, 4));
      double total = 0.0;
      for (auto& p : probs) total += (p = u(rng));
      for (auto& p : probs) p /= total;
      std::sort(probs.begin(), probs.end(), std::greater<>());
    }
    TraceToken t;
    t.token_text = piece;
    t.chosen_logprob = std::log(probs.front());
    for (std::size_t i = 0; i < probs.size(); ++i) {
      t.top_candidates.push_back(
          {i == 0 ? piece : "<alt" + std::to_string(i) + ">", std::log(probs[i])});
    }
    tokens.push_back(std::move(t));
  }
  return make_trace(std::move(tokens), k);
}

class MockBackend final : public Backend {
 public:
  MockBackend(MockScript script, std::string name)
      : script_(std::move(script)), name_(std::move(name)) {}

  ChatResponse complete(const ChatRequest& request) override {
    request.validate();
    ChatResponse resp;
    resp.backend_id = name_;
    resp.finish_reason = "stop";
    const auto stage = tag(request, tags::kStage);
    const auto story_id = tag(request, tags::kStoryId);
    if (stage == tags::kStageExtraction) {
      const auto category = category_from_key(tag(request, tags::kCategory));
      auto it = script_.extraction.find({story_id, category});
      resp.text = it == script_.extraction.end() ? empty_findings_json(category) : it->second;
    } else if (stage == tags::kStageVerification) {
      auto it = script_.verification.find({story_id, tag(request, tags::kFactQuote)});
      resp.text = it == script_.verification.end()
                      ? R"({"verdict": "Contradictory", "rationale": "unscripted"})"
                      : it->second;
    } else if (stage == tags::kStageGeneration) {
      const auto prompt_id = tag(request, tags::kPromptId);
      auto it = script_.generation.find(prompt_id);
      if (it == script_.generation.end()) {
        throw BackendError(name_ + ": no scripted generation for prompt '" + prompt_id + "'");
      }
      if (it->second.refuse) throw ContentRefused(name_ + ": scripted refusal");
      resp.text = it->second.text;
      if (request.want_logprobs) {
        resp.token_trace = synthetic_trace(resp.text, it->second, script_.seed, prompt_id,
                                           static_cast<std::size_t>(request.logprob_top_k));
      }
    } else if (stage == tags::kStageInjection) {
      auto it = script_.injection.find({story_id, tag(request, tags::kSubtype)});
      if (it == script_.injection.end()) {
        throw BackendError(name_ + ": no scripted injection for story '" + story_id + "'");
      }
      resp.text = it->second;
    } else {
      throw BackendError(name_ + ": request carries no recognised stage tag");
    }
    resp.usage.prompt_tokens = utf8::length(request.user_prompt) / 4;
    resp.usage.completion_tokens = utf8::length(resp.text) / 4;
    return resp;
  }

  std::string id() const override { return name_; }
  bool supports_logprobs() const override { return true; }

 private:
  const MockScript script_;
  const std::string name_;
};

}  // namespace

std::string empty_findings_json(ErrorCategory category) {
  json j = json::object();
  for (auto s : subtypes_of(category)) j[std::string(array_key(s))] = json::array();
  return j.dump(2);
}

std::shared_ptr<Backend> mock_judge(MockScript script, std::string name) {
  return std::make_shared<MockBackend>(std::move(script), std::move(name));
}

MockScript MockScript::from_json(const std::string& json_text) {
  MockScript script;
  try {
    const auto j = json::parse(json_text);
    script.seed = j.value("seed", std::uint64_t{0});
    for (const auto& e : j.value("extraction", json::array())) {
      script.extraction[{e.at("story_id").get<std::string>(),
                         category_from_key(e.at("category").get<std::string>())}] = reply_text(e);
    }
    for (const auto& e : j.value("verification", json::array())) {
      script.verification[{e.at("story_id").get<std::string>(),
                           e.at("fact_quote").get<std::string>()}] = reply_text(e);
    }
    for (const auto& e : j.value("generation", json::array())) {
      GenerationScript g;
      g.text = e.value("text", std::string{});
      g.refuse = e.value("refuse", false);
      g.candidate_probs = e.value("candidate_probs", std::vector<double>{});
      script.generation[e.at("prompt_id").get<std::string>()] = std::move(g);
    }
    for (const auto& e : j.value("injection", json::array())) {
      const auto subtype = subtype_from_key(e.at("subtype").get<std::string>());
      script.injection[{e.at("story_id").get<std::string>(), std::string(schema_key(subtype))}] =
          reply_text(e);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid mock script: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("invalid mock script: ") + e.what());
  } catch (const UnknownSubtype& e) {
    throw ConfigError(std::string("invalid mock script: ") + e.what());
  }
  return script;
}

}  // namespace constory
