#include "constory/fixtures.hpp"

#include <map>
#include <mutex>

#include <json.hpp>

#include "constory/errors.hpp"
#include "constory/report_json.hpp"
#include "constory/resources.hpp"

namespace constory {

namespace {

using json = nlohmann::ordered_json;

constexpr std::string_view kPrefix = "fixtures/";
constexpr std::string_view kSuffix = ".json";

FixtureCase parse_fixture(const std::string& name, std::string_view text) {
  try {
    const auto j = json::parse(text);
    FixtureCase f;
    f.name = j.at("name").get<std::string>();
    if (f.name != name) throw SchemaError("fixture file " + name + " declares name " + f.name);
    f.description = j.value("description", std::string{});
    f.source_text = j.value("source_text", std::string{});
    f.story = story_from_json(j.at("story"));
    for (const auto& e : j.at("truth")) f.truth.push_back(injected_error_from_json(e));
    f.judge_script_json = j.at("judge_script").dump(2);
    f.judge_script = MockScript::from_json(f.judge_script_json);
    f.expected_report = report_from_json(j.at("expected_report"));
    f.expected_report_text = j.at("expected_report").dump(2) + "\n";
    return f;
  } catch (const json::exception& e) {
    throw SchemaError("fixture " + name + ": " + e.what());
  }
}

struct NumericStory {
  const char* model;
  const char* prompt;
  std::size_t words;
  std::array<std::size_t, kCategoryCount> errors;  // per category, taxonomy order
};

// Category order: Time, Char, World, Fact, Narr. The five-story example
// splits its six errors 2 Time, 1 Char, 1 World, 1 Fact, 1 Narr.
const std::map<std::string, std::vector<NumericStory>>& numeric_table() {
  static const std::map<std::string, std::vector<NumericStory>> table = {
      {"ced_example",
       {{"model", "story-1", 8000, {1, 1, 0, 0, 0}},
        {"model", "story-2", 10000, {1, 0, 0, 1, 1}},
        {"model", "story-3", 6000, {0, 0, 1, 0, 0}},
        {"model", "story-4", 8000, {0, 0, 0, 0, 0}},
        {"model", "story-5", 800, {0, 0, 0, 0, 0}}}},
      {"grr_example",
       {{"model-a", "story", 8000, {0, 0, 0, 0, 0}},
        {"model-b", "story", 800, {0, 0, 0, 0, 0}}}},
  };
  return table;
}

const std::vector<NumericStory>& numeric_stories(const std::string& name) {
  const auto& table = numeric_table();
  auto it = table.find(name);
  if (it == table.end()) throw UnknownFixture(name);
  return it->second;
}

std::string story_id_of(const NumericStory& s) {
  return std::string(s.model) + "/" + s.prompt;
}

}  // namespace

std::vector<std::string> list_fixtures() {
  std::vector<std::string> names;
  for (const auto& path : resources::list(kPrefix)) {
    if (path.size() <= kPrefix.size() + kSuffix.size()) continue;
    if (path.compare(path.size() - kSuffix.size(), kSuffix.size(), kSuffix) != 0) continue;
    names.push_back(path.substr(kPrefix.size(), path.size() - kPrefix.size() - kSuffix.size()));
  }
  return names;
}

const FixtureCase& load_fixture(const std::string& name) {
  static std::mutex mutex;
  static std::map<std::string, FixtureCase> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(name); it != cache.end()) return it->second;
  const auto path = std::string(kPrefix) + name + std::string(kSuffix);
  if (!resources::exists(path)) throw UnknownFixture(name);
  return cache.emplace(name, parse_fixture(name, resources::get(path))).first->second;
}

std::vector<std::string> list_numeric_fixtures() {
  std::vector<std::string> names;
  for (const auto& [name, stories] : numeric_table()) names.push_back(name);
  return names;
}

std::vector<StoryResult> numeric_fixture(const std::string& name) {
  std::vector<StoryResult> out;
  for (const auto& s : numeric_stories(name)) {
    StoryResult r;
    r.story_id = story_id_of(s);
    r.prompt_id = s.prompt;
    r.model = s.model;
    r.words = s.words;
    r.per_category_errors = s.errors;
    for (auto n : s.errors) r.errors += n;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::pair<Story, ConsistencyReport>> materialize_numeric_fixture(
    const std::string& name) {
  std::vector<std::pair<Story, ConsistencyReport>> out;
  for (const auto& s : numeric_stories(name)) {
    // Tokens "w0 w1 ..." are unique, so every quote anchors exactly.
    std::string text;
    std::vector<std::size_t> token_start;
    token_start.reserve(s.words);
    for (std::size_t i = 0; i < s.words; ++i) {
      if (i > 0) text += ' ';
      token_start.push_back(text.size());
      text += "w" + std::to_string(i);
    }
    Story story = make_story(story_id_of(s), text, s.model, TaskType::Generation, s.prompt);

    ConsistencyReport report;
    report.story_id = story.id;
    report.judge_model = kFixtureJudge;
    report.created_at = kFixtureCreatedAt;
    report.pipeline_version = std::string(kPipelineVersion);
    std::size_t token = 0;
    for (auto category : kAllCategories) {
      for (std::size_t k = 0; k < s.errors[index_of(category)]; ++k) {
        token += s.words / 8;
        ErrorInstance e;
        e.fact_quote = "w" + std::to_string(token);
        e.fact_anchor = {token_start[token], token_start[token] + e.fact_quote.size(), 1.0};
        e.subtype = subtypes_of(category).front();
        e.error_element = "synthetic";
        e.verification = is_pair_free(e.subtype) ? Verification::NotRequired
                                                 : Verification::Unverified;
        if (e.verification == Verification::Unverified) e.flags.emplace_back(flags::kUnverified);
        EvidenceChain chain;
        chain.conclusion = e.subtype;
        chain.evidence.push_back({e.fact_quote, e.fact_anchor});
        report.errors.push_back(std::move(e));
        report.chains.push_back(std::move(chain));
      }
    }
    out.emplace_back(std::move(story), std::move(report));
  }
  return out;
}

}  // namespace constory
