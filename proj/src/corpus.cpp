#include "constory/corpus.hpp"

#include <set>
#include <sstream>

#include <json.hpp>

#include "constory/errors.hpp"
#include "constory/report_json.hpp"
#include "constory/textio.hpp"
#include "constory/utf8.hpp"

namespace constory {

using json = nlohmann::ordered_json;

std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char32_t c : utf8::decode(text)) {
    const bool space = utf8::is_space(c);
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

PromptRecord prompt_from_json_line(std::string_view line) {
  const auto j = json::parse(line);
  PromptRecord r;
  r.id = j.at("id").get<std::string>();
  r.task_type = task_type_from_string(j.value("task_type", std::string("generation")));
  r.prompt_text = j.at("prompt_text").get<std::string>();
  if (auto t = j.find("target_length"); t != j.end()) {
    r.target_length.min = t->value("min", r.target_length.min);
    r.target_length.max = t->value("max", r.target_length.max);
  }
  r.source = j.value("source", std::string{});
  if (r.id.empty()) throw InvalidArgument("prompt id is empty");
  if (r.prompt_text.empty()) throw InvalidArgument("prompt '" + r.id + "' has empty prompt_text");
  if (r.target_length.min > r.target_length.max) {
    throw InvalidArgument("prompt '" + r.id + "' has target_length min > max");
  }
  return r;
}

std::string prompt_to_json_line(const PromptRecord& r) {
  json j;
  j["id"] = r.id;
  j["task_type"] = std::string(to_string(r.task_type));
  j["prompt_text"] = r.prompt_text;
  j["target_length"] = {{"min", r.target_length.min}, {"max", r.target_length.max}};
  j["source"] = r.source;
  return j.dump();
}

namespace {

template <typename F>
void for_each_line(const std::filesystem::path& path, F&& f) {
  std::istringstream in(textio::read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      f(line);
    } catch (const std::exception& e) {
      throw ParseFailure(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<PromptRecord> read_prompts(const std::filesystem::path& path) {
  std::vector<PromptRecord> out;
  std::set<std::string> ids;
  for_each_line(path, [&](const std::string& line) {
    auto r = prompt_from_json_line(line);
    if (!ids.insert(r.id).second) throw InvalidArgument("duplicate prompt id '" + r.id + "'");
    out.push_back(std::move(r));
  });
  return out;
}

void write_prompts(const std::filesystem::path& path, const std::vector<PromptRecord>& records) {
  std::string out;
  for (const auto& r : records) out += prompt_to_json_line(r) + "\n";
  textio::write_file(path, out);
}

std::vector<Story> read_stories(const std::filesystem::path& path) {
  std::vector<Story> out;
  std::set<std::string> ids;
  for_each_line(path, [&](const std::string& line) {
    auto s = story_from_json(json::parse(line));
    if (s.id.empty()) throw InvalidArgument("story id is empty");
    if (!ids.insert(s.id).second) throw InvalidArgument("duplicate story id '" + s.id + "'");
    out.push_back(std::move(s));
  });
  return out;
}

void write_stories(const std::filesystem::path& path, const std::vector<Story>& stories) {
  std::string out;
  for (const auto& s : stories) out += to_json(s).dump() + "\n";
  textio::write_file(path, out);
}

}  // namespace constory
