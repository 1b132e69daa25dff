#pragma once

#include <string>
#include <string_view>
#include <vector>

// Files under resources/ compiled into the library.
namespace constory::resources {

// Path relative to resources/, e.g. "prompts/characterization.txt".
// Throws Error when the resource does not exist.
std::string_view get(const std::string& path);
bool exists(const std::string& path);

// Resource paths under a directory prefix such as "fixtures/", sorted.
std::vector<std::string> list(std::string_view prefix);

}  // namespace constory::resources
