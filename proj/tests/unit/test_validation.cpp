#include <gtest/gtest.h>

#include <json.hpp>

#include "constory/anchor.hpp"
#include "constory/checker.hpp"
#include "constory/corpus.hpp"
#include "constory/errors.hpp"
#include "constory/fixtures.hpp"
#include "constory/utf8.hpp"
#include "constory/validation.hpp"

using namespace constory;

namespace {

// Text with at least one hook for every template injector.
const char* kClean =
    "In March the caravan reached Oldport after a long crossing. Captain Reyes counted twelve horses in "
    "the yard and ordered them watered. The inn stood north of the river, its shutters painted red. "
    "Anna had visited Bellhaven as a girl, long before the war. She was tired after the ride. "
    "Her green eyes were sore from the dust of the road. The journey had taken three days. "
    "At supper the innkeeper spoke of floods and failed harvests. Nobody at the table answered him. "
    "In March the rains always came early to the coast. Captain Reyes checked that the twelve horses "
    "were fed. The stable lay north of the river as well. She was glad to rest at last. "
    "Her grey eyes, the innkeeper's wife said, were the colour of the sea. The road back took three "
    "days, and Anna slept for most of it.";

Story clean_story() { return make_story("caravan", kClean, "fixture"); }

ConsistencyReport prediction(std::vector<std::pair<ErrorSubtype, SpanAnchor>> items) {
  ConsistencyReport r;
  r.story_id = "s";
  for (auto& [subtype, span] : items) {
    ErrorInstance e;
    e.subtype = subtype;
    e.fact_quote = "q";
    e.fact_anchor = span;
    r.errors.push_back(e);
    r.chains.push_back({});
  }
  return r;
}

InjectedError planted(ErrorSubtype subtype, SpanAnchor span) {
  InjectedError t;
  t.subtype = subtype;
  t.corrupted_span = span;
  t.corrupted_sentence = "unrelated sentence text that matches nothing";
  return t;
}

}  // namespace

TEST(Score, TotalsAndEdgeCases) {
  const auto t = score(1000, 622, 550);
  EXPECT_NEAR(t.precision, 0.884, 0.001);
  EXPECT_NEAR(t.recall, 0.550, 0.001);
  EXPECT_NEAR(t.f1, 0.678, 0.001);
  const auto zero = score(5, 0, 0);
  EXPECT_DOUBLE_EQ(zero.precision, 0.0);
  EXPECT_DOUBLE_EQ(zero.f1, 0.0);
  EXPECT_DOUBLE_EQ(score(0, 0, 0).recall, 0.0);
  EXPECT_THROW(score(1, 5, 2), InvalidArgument);
}

TEST(Score, TallySumsCountsBeforeRatios) {
  ValidationTally tally;
  tally.add_counts(ErrorCategory::Characterization, 200, 126, 121);
  tally.add_counts(ErrorCategory::FactualDetailConsistency, 200, 148, 125);
  tally.add_counts(ErrorCategory::NarrativeStyle, 200, 76, 70);
  tally.add_counts(ErrorCategory::TimelinePlotLogic, 200, 147, 120);
  tally.add_counts(ErrorCategory::WorldBuildingSetting, 200, 125, 114);
  const auto r = tally.result();
  EXPECT_EQ(r.total.gt, 1000u);
  EXPECT_EQ(r.total.pred, 622u);
  EXPECT_EQ(r.total.tp, 550u);
  EXPECT_NEAR(r.per_category[index_of(ErrorCategory::Characterization)].f1, 0.742, 0.001);
  EXPECT_NEAR(r.per_category[index_of(ErrorCategory::NarrativeStyle)].recall, 0.350, 0.001);
  const auto csv = validation_csv(r);
  EXPECT_NE(csv.find("Total,1000,622,550,0.550,0.884,0.678"), std::string::npos);
  EXPECT_NE(validation_markdown(r).find("| **Total** |"), std::string::npos);
}

TEST(Match, GreedyOneToOneBySpanOverlap) {
  const auto t1 = planted(ErrorSubtype::MemoryContradiction, {100, 120, 1});
  const auto t2 = planted(ErrorSubtype::KnowledgeContradiction, {300, 320, 1});
  const std::vector<InjectedError> truth = {t1, t2};
  // Two predictions over the first planted span: only one may take it.
  const auto p = prediction({{ErrorSubtype::MemoryContradiction, {105, 110, 1}},
                             {ErrorSubtype::MemoryContradiction, {110, 115, 1}},
                             {ErrorSubtype::MemoryContradiction, {310, 330, 1}},
                             {ErrorSubtype::AppearanceMismatch, {100, 120, 1}}});
  const auto m = match_detections(p, truth);
  EXPECT_EQ(m.tp, 2u);
  EXPECT_EQ(m.tp_by_category[index_of(ErrorCategory::Characterization)], 2u);
  EXPECT_EQ(m.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {2, 1}}));

  MatchOptions strict;
  strict.strict_subtype = true;
  EXPECT_EQ(match_detections(p, truth, strict).tp, 1u);
}

TEST(Match, QuoteSimilarityWithoutOverlap) {
  auto t = planted(ErrorSubtype::AppearanceMismatch, {900, 910, 1});
  t.corrupted_sentence = "Her grey eyes, the innkeeper's wife said, were the colour of the sea.";
  auto p = prediction({{ErrorSubtype::AppearanceMismatch, {0, 5, 1}}});
  p.errors[0].contradiction_quote = "Her grey eyes, the innkeepers wife said, were the colour of the sea";
  EXPECT_EQ(match_detections(p, {t}).tp, 1u);
  p.errors[0].contradiction_quote = "Something else entirely.";
  EXPECT_EQ(match_detections(p, {t}).tp, 0u);
}

TEST(Injection, EveryTemplateEditsOnlyItsSpan) {
  const auto story = clean_story();
  for (auto subtype : kAllSubtypes) {
    if (!has_template_injector(subtype)) continue;
    SCOPED_TRACE(std::string(schema_key(subtype)));
    const auto r = inject_one(story, subtype, 42);
    ASSERT_EQ(r.injected.size(), 1u);
    const auto& e = r.injected[0];
    EXPECT_EQ(e.subtype, subtype);
    const auto before = utf8::decode(story.text);
    const auto after = utf8::decode(r.story.text);
    EXPECT_NE(before, after);
    // Same prefix and suffix around the edit; insertions may add leading space.
    EXPECT_EQ(before.substr(0, e.original_span.start), after.substr(0, e.original_span.start));
    for (auto i = e.original_span.start; i < e.corrupted_span.start; ++i) EXPECT_TRUE(utf8::is_space(after[i]));
    EXPECT_EQ(before.substr(e.original_span.end), after.substr(e.corrupted_span.end));
    const AnchoredDocument doc(r.story.text);
    EXPECT_NE(e.corrupted_sentence.find(doc.slice(e.corrupted_span)), std::string::npos);
    ASSERT_TRUE(e.reference_span.has_value());
    ASSERT_TRUE(e.reference_sentence.has_value());
    EXPECT_EQ(doc.slice(*e.reference_span), *e.reference_sentence);
    EXPECT_LT(e.reference_span->start, e.corrupted_span.start);
    EXPECT_EQ(r.story.word_count, word_count(r.story.text));
  }
}

TEST(Injection, SeededAndDeterministic) {
  const auto story = clean_story();
  InjectionPlan plan;
  for (auto s : kAllSubtypes) {
    if (has_template_injector(s)) plan.emplace_back(s, 1);
  }
  const auto a = inject_errors(story, plan, 7);
  const auto b = inject_errors(story, plan, 7);
  EXPECT_EQ(a.story, b.story);
  EXPECT_EQ(a.injected, b.injected);
  EXPECT_GE(a.injected.size(), 6u);
  for (std::size_t i = 1; i < a.injected.size(); ++i) {
    EXPECT_LE(a.injected[i - 1].corrupted_span.end, a.injected[i].corrupted_span.start);
  }
  bool differs = false;
  for (std::uint64_t seed = 8; seed < 20 && !differs; ++seed) {
    differs = inject_errors(story, plan, seed).story.text != a.story.text;
  }
  EXPECT_TRUE(differs);
}

TEST(Injection, SkipsWhenNoHookOrTemplate) {
  const auto story = make_story("plain", "Nothing here repeats. A quiet morning passed.");
  const auto r = inject_errors(story, {{ErrorSubtype::QuantitativeMismatch, 1}, {ErrorSubtype::ToneInconsistency, 1}}, 1);
  EXPECT_TRUE(r.injected.empty());
  EXPECT_EQ(r.skipped.size(), 2u);
  EXPECT_EQ(r.story.text, story.text);
  EXPECT_THROW(inject_one(story, ErrorSubtype::CoreRulesViolation, 1), InjectionInfeasible);
}

TEST(Injection, ModelWrittenCorruption) {
  const auto story = clean_story();
  MockScript script;
  script.injection[{"caravan", "core_rules_violation"}] = nlohmann::ordered_json{
      {"original", "Nobody at the table answered him."},
      {"replacement", "The dead innkeeper's ghost answered him, though ghosts cannot speak here."},
      {"reference", "At supper the innkeeper spoke of floods and failed harvests."},
      {"description", "a ghost speaks"}}.dump();
  const auto llm = mock_judge(script);
  const auto r = inject_one(story, ErrorSubtype::CoreRulesViolation, 3, llm.get());
  ASSERT_EQ(r.injected.size(), 1u);
  EXPECT_NE(r.story.text.find("ghost answered"), std::string::npos);
  EXPECT_EQ(r.injected[0].description, "a ghost speaks");
  // Unscripted story: the request fails and the item is skipped.
  const auto other = make_story("other", kClean);
  EXPECT_EQ(inject_errors(other, {{ErrorSubtype::CoreRulesViolation, 1}}, 3, llm.get()).skipped.size(), 1u);
}

TEST(Injection, SidecarRoundTrip) {
  const auto r = inject_errors(clean_story(), {{ErrorSubtype::AppearanceMismatch, 1}, {ErrorSubtype::MemoryContradiction, 1}}, 5);
  const auto text = sidecar_json("caravan", "caravan-clean", 5, r);
  const auto [id, truth] = parse_sidecar(text);
  EXPECT_EQ(id, "caravan");
  EXPECT_EQ(truth, r.injected);
}

TEST(Injection, TruthScriptedCheckerFindsEveryPlantedError) {
  InjectionPlan plan;
  for (auto s : kAllSubtypes) {
    if (has_template_injector(s)) plan.emplace_back(s, 1);
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = inject_errors(clean_story(), plan, seed);
    const Checker checker(mock_judge(truth_script({{r.story.id, r.injected}}), "truth"));
    const auto report = checker.check(r.story);
    ValidationTally tally;
    tally.add(report, r.injected);
    const auto s = tally.result().total;
    EXPECT_EQ(s.gt, r.injected.size());
    EXPECT_DOUBLE_EQ(s.f1, 1.0) << "seed " << seed;
  }
}

TEST(Fixtures, TruthMatchesExpectedReports) {
  ValidationTally tally;
  for (const auto& name : list_fixtures()) {
    const auto& f = load_fixture(name);
    const auto m = match_detections(f.expected_report, f.truth);
    EXPECT_EQ(m.tp, f.truth.size()) << name;
    EXPECT_EQ(f.expected_report.errors.size(), f.truth.size()) << name;
    tally.add(f.expected_report, f.truth);
    // Planted edits reproduce the corrupted story from the source.
    const auto src = utf8::decode(f.source_text);
    const auto out = utf8::decode(f.story.text);
    for (const auto& t : f.truth) {
      EXPECT_LE(t.corrupted_span.end, out.size()) << name;
      EXPECT_LE(t.original_span.end, src.size()) << name;
    }
  }
  EXPECT_DOUBLE_EQ(tally.result().total.f1, 1.0);
  EXPECT_EQ(load_fixture("clean_story").truth.size(), 0u);
  EXPECT_THROW(load_fixture("nope"), UnknownFixture);
}
