#include <gtest/gtest.h>

#include <set>

#include "constory/errors.hpp"
#include "constory/fixtures.hpp"
#include "constory/report_json.hpp"
#include "constory/utf8.hpp"

using namespace constory;

TEST(Utf8, RoundTripAndLength) {
  const std::string s = "caf\xC3\xA9 \xE2\x80\x94 \xF0\x9F\x93\x96";
  EXPECT_EQ(utf8::length(s), 8u);
  EXPECT_EQ(utf8::encode(utf8::decode(s)), s);
  EXPECT_EQ(utf8::substr(s, 3, 4), "\xC3\xA9");
}

TEST(Utf8, PreviewStopsAtCharacterBoundary) {
  const std::string s = "ab\xC3\xA9z";
  EXPECT_EQ(preview(s, 3), "ab");
  EXPECT_EQ(preview(s, 4), "ab\xC3\xA9");
  EXPECT_EQ(preview(s, 10), s);
}

TEST(Taxonomy, NineteenSubtypesInFiveCategories) {
  EXPECT_EQ(kAllSubtypes.size(), 19u);
  const std::size_t expected[] = {6, 4, 3, 3, 3};
  std::size_t total = 0;
  for (auto c : kAllCategories) {
    EXPECT_EQ(subtypes_of(c).size(), expected[index_of(c)]) << category_key(c);
    for (auto s : subtypes_of(c)) EXPECT_EQ(category_of(s), c);
    total += subtypes_of(c).size();
  }
  EXPECT_EQ(total, kSubtypeCount);
}

TEST(Taxonomy, KeysAreUniqueAndRoundTrip) {
  std::set<std::string> schema;
  std::set<std::string> arrays;
  for (auto s : kAllSubtypes) {
    EXPECT_TRUE(schema.insert(std::string(schema_key(s))).second);
    EXPECT_TRUE(arrays.insert(std::string(array_key(s))).second);
    EXPECT_EQ(subtype_from_key(schema_key(s)), s);
    EXPECT_EQ(subtype_from_key(array_key(s)), s);
    EXPECT_EQ(subtype_from_key(display_name(s)), s);
    EXPECT_EQ(subtype_from_array_key(array_key(s)), s);
  }
  EXPECT_EQ(subtype_from_key("Absolute-Time Error"), ErrorSubtype::AbsoluteTimeContradiction);
  EXPECT_EQ(schema_key(ErrorSubtype::MemoryContradiction), "memory_contradiction");
  EXPECT_EQ(array_key(ErrorSubtype::SkillFluctuation), "skill_power_fluctuations");
  EXPECT_THROW(subtype_from_key("plot_hole"), UnknownSubtype);
  EXPECT_FALSE(try_subtype_from_key("").has_value());
}

TEST(Taxonomy, PairFreeSubtypes) {
  std::set<ErrorSubtype> pair_free;
  for (auto s : kAllSubtypes) {
    if (is_pair_free(s)) pair_free.insert(s);
  }
  EXPECT_EQ(pair_free, (std::set<ErrorSubtype>{ErrorSubtype::CauselessEffect,
                                               ErrorSubtype::AbandonedPlotElement,
                                               ErrorSubtype::ForgottenAbility}));
}

TEST(Taxonomy, TaskTypes) {
  for (auto t : kAllTaskTypes) EXPECT_EQ(task_type_from_string(to_string(t)), t);
  EXPECT_THROW(task_type_from_string("rewrite"), InvalidArgument);
}

TEST(Time, Rfc3339) {
  EXPECT_EQ(format_rfc3339(0), "1970-01-01T00:00:00Z");
  EXPECT_EQ(format_rfc3339(1767225600), "2026-01-01T00:00:00Z");
  EXPECT_EQ(format_rfc3339(951782400), "2000-02-29T00:00:00Z");
}

TEST(Story, MakeStoryCountsWords) {
  const auto s = make_story("id", "  one two\tthree\n");
  EXPECT_EQ(s.word_count, 3u);
  EXPECT_EQ(s.prompt_id, "id");
}

TEST(ReportJson, RoundTripsEveryFixtureReport) {
  for (const auto& name : list_fixtures()) {
    const auto& f = load_fixture(name);
    const auto text = serialize_report(f.expected_report);
    EXPECT_EQ(text, f.expected_report_text) << name;
    EXPECT_EQ(parse_report(text), f.expected_report) << name;
    EXPECT_FALSE(validate_report(f.expected_report, utf8::length(f.story.text)).has_value()) << name;
  }
}

TEST(ReportJson, StoryRoundTripWithTrace) {
  Story s = make_story("m/p", "ab cd", "m", TaskType::Continuation, "p");
  s.token_trace = make_trace({{"ab", 0, 0, -0.1, {{"ab", -0.1}, {"xy", -2.5}}},
                              {" cd", 0, 0, -0.3, {}}},
                             2);
  EXPECT_EQ(story_from_json(to_json(s)), s);
  EXPECT_EQ(reconstruct_text(*s.token_trace), "ab cd");
  EXPECT_TRUE(is_well_formed(*s.token_trace));
}

TEST(ReportJson, RejectsMalformedReports) {
  EXPECT_THROW(parse_report("{}"), Error);
  EXPECT_THROW(parse_report("not json"), Error);
}

TEST(ReportValidation, DetectsOutOfRangeAnchor) {
  auto r = load_fixture("appearance_eyes").expected_report;
  ASSERT_FALSE(r.errors.empty());
  r.errors[0].fact_anchor.end = 1000000;
  EXPECT_TRUE(validate_report(r, 100).has_value());
  r = load_fixture("appearance_eyes").expected_report;
  r.chains.pop_back();
  EXPECT_TRUE(validate_report(r, 100000).has_value());
}
