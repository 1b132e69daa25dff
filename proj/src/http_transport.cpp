#include <regex>

#include <httplib.h>

#include "constory/errors.hpp"
#include "constory/llmclient.hpp"

namespace constory {

namespace {

// httplib::Client is not safe for concurrent requests, so each post() opens
// its own client. Keep-alive is lost; judge calls are long enough for that
// not to matter.
class HttplibTransport final : public HttpTransport {
 public:
  HttplibTransport(std::string origin, std::chrono::seconds timeout)
      : origin_(std::move(origin)), timeout_(timeout) {}

  HttpResponse post(const std::string& path, const std::string& body,
                    const std::vector<std::pair<std::string, std::string>>& headers) override {
    httplib::Client client(origin_);
    client.set_connection_timeout(std::chrono::seconds(30));
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers h;
    std::string content_type = "application/json";
    for (const auto& [k, v] : headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        h.emplace(k, v);
      }
    }
    auto result = client.Post(path, h, body, content_type);
    if (!result) {
      throw TransportError(origin_ + path + ": " + httplib::to_string(result.error()));
    }
    return HttpResponse{result->status, result->body};
  }

 private:
  std::string origin_;
  std::chrono::seconds timeout_;
};

}  // namespace

std::pair<std::unique_ptr<HttpTransport>, std::string> make_http_transport(
    const std::string& base_url, std::chrono::seconds timeout) {
  static const std::regex kUrl(R"(^(https?)://([^/:]+)(:\d+)?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(base_url, m, kUrl)) {
    throw ConfigError("invalid base_url: '" + base_url + "'");
  }
  std::string origin = m[1].str() + "://" + m[2].str() + m[3].str();
  std::string prefix = m[4].str();
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {std::make_unique<HttplibTransport>(std::move(origin), timeout), std::move(prefix)};
}

}  // namespace constory
