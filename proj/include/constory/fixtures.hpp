#pragma once

#include <string>
#include <utility>
#include <vector>

#include "constory/domain.hpp"
#include "constory/llmclient.hpp"
#include "constory/metrics.hpp"
#include "constory/validation.hpp"

// Bundled offline corpus. Story fixtures carry a story with planted errors,
// the ground truth for those errors, the judge replies that report them and
// the report the checker must produce from those replies.
namespace constory {

struct FixtureCase {
  std::string name;
  std::string description;
  std::string source_text;  // the story before the planted edits
  Story story;
  std::vector<InjectedError> truth;
  MockScript judge_script;
  std::string judge_script_json;
  ConsistencyReport expected_report;
  std::string expected_report_text;  // serialize_report form
};

// Judge id and timestamp the expected reports were produced with.
inline constexpr const char* kFixtureJudge = "mock";
inline constexpr const char* kFixtureCreatedAt = "2026-01-01T00:00:00Z";

std::vector<std::string> list_fixtures();
const FixtureCase& load_fixture(const std::string& name);  // throws UnknownFixture

// Numeric fixtures for the metric examples: "ced_example" (one model, five
// stories) and "grr_example" (two models on one prompt).
std::vector<std::string> list_numeric_fixtures();
std::vector<StoryResult> numeric_fixture(const std::string& name);  // throws UnknownFixture

// Stories and reports whose story_result() equals numeric_fixture(name):
// story text is `words` synthetic tokens and each error is anchored on one
// token.
std::vector<std::pair<Story, ConsistencyReport>> materialize_numeric_fixture(
    const std::string& name);

}  // namespace constory
