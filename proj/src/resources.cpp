#include "constory/resources.hpp"

#include <map>

#include "constory/errors.hpp"

namespace constory::resources {

namespace detail {
const std::map<std::string, std::string_view>& table();
}

std::string_view get(const std::string& path) {
  const auto& t = detail::table();
  auto it = t.find(path);
  if (it == t.end()) throw Error("missing embedded resource: " + path);
  return it->second;
}

bool exists(const std::string& path) { return detail::table().count(path) > 0; }

std::vector<std::string> list(std::string_view prefix) {
  std::vector<std::string> out;
  for (const auto& [k, v] : detail::table()) {
    if (k.compare(0, prefix.size(), prefix) == 0) out.push_back(k);
  }
  return out;
}

}  // namespace constory::resources
