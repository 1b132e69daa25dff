#include <fstream>
#include <sstream>

#include <json.hpp>

#include "constory/errors.hpp"
#include "constory/llmclient.hpp"

namespace constory {

using json = nlohmann::json;

const BackendConfig& HarnessConfig::backend(const std::string& name) const {
  for (const auto& b : backends) {
    if (b.name == name) return b;
  }
  throw ConfigError("backend '" + name + "' is not defined in the config");
}

HarnessConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  HarnessConfig config;
  config.base_dir = base_dir;
  try {
    const auto j = json::parse(json_text);
    for (const auto& b : j.at("backends")) {
      BackendConfig c;
      c.name = b.at("name").get<std::string>();
      c.type = b.value("type", std::string("openai"));
      c.base_url = b.value("base_url", std::string{});
      c.model = b.value("model", std::string{});
      c.api_key_env = b.value("api_key_env", std::string{});
      c.max_parallel = b.value("max_parallel", c.max_parallel);
      c.max_retries = b.value("max_retries", c.max_retries);
      c.timeout_seconds = b.value("timeout_seconds", c.timeout_seconds);
      c.backoff_ms = b.value("backoff_ms", c.backoff_ms);
      c.send_top_k = b.value("send_top_k", c.send_top_k);
      c.logprobs = b.value("logprobs", c.logprobs);
      c.script = b.value("script", std::string{});
      if (b.contains("api_key")) {
        throw ConfigError("backend '" + c.name +
                          "': put credentials in an environment variable named by api_key_env");
      }
      if (c.name.empty()) throw ConfigError("backend with empty name");
      if (c.type != "openai" && c.type != "mock") {
        throw ConfigError("backend '" + c.name + "': unknown type '" + c.type + "'");
      }
      if (c.type == "openai" && c.base_url.empty()) {
        throw ConfigError("backend '" + c.name + "': base_url is required");
      }
      if (c.max_parallel == 0) throw ConfigError("backend '" + c.name + "': max_parallel must be >= 1");
      if (c.max_retries < 0) throw ConfigError("backend '" + c.name + "': max_retries must be >= 0");
      for (const auto& prev : config.backends) {
        if (prev.name == c.name) throw ConfigError("duplicate backend name '" + c.name + "'");
      }
      config.backends.push_back(std::move(c));
    }
    config.judge = j.value("judge", std::string{});
    config.generation = j.value("generation", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  if (!config.judge.empty()) config.backend(config.judge);
  for (const auto& g : config.generation) config.backend(g);
  return config;
}

HarnessConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::shared_ptr<Backend> make_backend(const BackendConfig& config,
                                      const std::filesystem::path& base_dir) {
  std::shared_ptr<Backend> inner;
  if (config.type == "mock") {
    MockScript script;
    if (!config.script.empty()) {
      const auto path = config.script.is_absolute() ? config.script : base_dir / config.script;
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot read mock script " + path.string());
      std::ostringstream ss;
      ss << in.rdbuf();
      script = MockScript::from_json(ss.str());
    }
    inner = mock_judge(std::move(script), config.name);
  } else {
    auto [transport, prefix] =
        make_http_transport(config.base_url, std::chrono::seconds(config.timeout_seconds));
    OpenAICompatibleBackend::Options opts;
    opts.name = config.name;
    opts.model = config.model;
    opts.api_key_env = config.api_key_env;
    opts.path_prefix = prefix;
    opts.retry.max_attempts = config.max_retries + 1;
    opts.retry.base_delay = std::chrono::milliseconds(config.backoff_ms);
    opts.send_top_k = config.send_top_k;
    opts.logprobs_capable = config.logprobs;
    inner = std::make_shared<OpenAICompatibleBackend>(std::move(opts), std::move(transport));
  }
  return std::make_shared<ConcurrencyLimitedBackend>(std::move(inner), config.max_parallel);
}

}  // namespace constory
