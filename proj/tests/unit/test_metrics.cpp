#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "constory/errors.hpp"
#include "constory/fixtures.hpp"
#include "constory/metrics.hpp"

using namespace constory;

namespace {

StoryResult result(std::string model, std::string prompt, std::size_t words, std::size_t errors) {
  StoryResult r;
  r.model = std::move(model);
  r.prompt_id = std::move(prompt);
  r.story_id = r.model + "/" + r.prompt_id;
  r.words = words;
  r.errors = errors;
  r.per_category_errors[0] = errors;
  return r;
}

// Average position of each model over every ordering that sorts the group by
// descending Q. Exponential, for small groups only.
std::map<std::string, double> brute_force_ranks(const StoryGroup& g) {
  std::vector<std::size_t> order(g.entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::map<std::string, double> sum;
  std::size_t orderings = 0;
  do {
    bool sorted = true;
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (g.entries[order[i - 1]].second < g.entries[order[i]].second) sorted = false;
    }
    if (!sorted) continue;
    ++orderings;
    for (std::size_t i = 0; i < order.size(); ++i) sum[g.entries[order[i]].first] += i + 1.0;
  } while (std::next_permutation(order.begin(), order.end()));
  for (auto& [m, s] : sum) s /= static_cast<double>(orderings);
  return sum;
}

}  // namespace

TEST(Metrics, CedAndQuality) {
  EXPECT_DOUBLE_EQ(ced_story(2, 8000), 2.5);
  EXPECT_DOUBLE_EQ(ced_story(0, 800), 0.0);
  EXPECT_THROW(ced_story(1, 0), ZeroLengthStory);
  EXPECT_DOUBLE_EQ(quality_score(8000, 0), 8000.0);
  EXPECT_DOUBLE_EQ(quality_score(800, 0), 800.0);
  EXPECT_DOUBLE_EQ(quality_score(9000, 2), 3000.0);
  const auto cat = ced_category({1, 0, 2, 0, 0}, 5000);
  EXPECT_DOUBLE_EQ(cat[0], 2.0);
  EXPECT_DOUBLE_EQ(cat[2], 4.0);
}

TEST(Metrics, PairwiseSumIsOrderStableAndExact) {
  std::vector<double> v(1000, 0.1);
  EXPECT_NEAR(pairwise_sum(v), 100.0, 1e-12);
  EXPECT_DOUBLE_EQ(pairwise_sum({}), 0.0);
  EXPECT_THROW(mean({}), InvalidArgument);
}

TEST(Metrics, CedExampleFromNumericFixture) {
  const auto rs = numeric_fixture("ced_example");
  const auto s = aggregate_model(rs, {});
  EXPECT_NEAR(s.ced_pooled, 60000.0 / 32800.0, 1e-12);
  // Per-story densities 2.5, 3, 1.667, 0, 0.
  EXPECT_NEAR(s.ced_mean, (2.5 + 3.0 + 10000.0 / 6000.0) / 5.0, 1e-12);
  EXPECT_NEAR(s.per_category_ced[0], 20000.0 / 32800.0, 1e-12);
  EXPECT_NEAR(s.per_category_ced[1], 10000.0 / 32800.0, 1e-12);
  EXPECT_EQ(s.completed, 5u);
  EXPECT_DOUBLE_EQ(s.avg_words, 6560.0);
}

TEST(Metrics, GrrExampleRanksLongerCleanStoryFirst) {
  const auto groups = make_groups(numeric_fixture("grr_example"));
  ASSERT_EQ(groups.size(), 1u);
  const auto g = grr(groups);
  EXPECT_DOUBLE_EQ(g.at("model-a"), 1.0);
  EXPECT_DOUBLE_EQ(g.at("model-b"), 2.0);
}

TEST(Metrics, GrrTiesShareAverageRank) {
  const auto g = grr(make_groups({result("a", "p", 1000, 0), result("b", "p", 2000, 1),
                                  result("c", "p", 500, 0)}));
  EXPECT_DOUBLE_EQ(g.at("a"), 1.5);
  EXPECT_DOUBLE_EQ(g.at("b"), 1.5);
  EXPECT_DOUBLE_EQ(g.at("c"), 3.0);
}

TEST(Metrics, GrrMatchesBruteForceOnRandomGroups) {
  std::mt19937_64 rng(7);
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<StoryResult> rs;
    const std::size_t models = 2 + rng() % 4;
    const std::size_t prompts = 1 + rng() % 4;
    for (std::size_t p = 0; p < prompts; ++p) {
      for (std::size_t m = 0; m < models; ++m) {
        if (rng() % 5 == 0) continue;  // model missing this prompt
        // Small ranges so ties are common.
        rs.push_back(result("m" + std::to_string(m), "p" + std::to_string(p), 1000 * (1 + rng() % 3),
                            rng() % 3));
      }
    }
    const auto groups = make_groups(rs);
    const auto got = grr(groups);
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& g : groups) {
      for (const auto& [m, r] : brute_force_ranks(g)) {
        acc[m].first += r;
        ++acc[m].second;
      }
    }
    ASSERT_EQ(got.size(), acc.size());
    for (const auto& [m, sr] : acc) EXPECT_NEAR(got.at(m), sr.first / sr.second, 1e-12);
  }
}

TEST(Metrics, GroupsSkipIncompleteAndRejectDuplicates) {
  const auto groups = make_groups({result("a", "p", 1000, 0), result("b", "p", 0, 0)});
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_EQ(groups[0].entries.size(), 1u);
  EXPECT_THROW(make_groups({result("a", "p", 1000, 0), result("a", "p", 900, 0)}), InvalidArgument);
}

TEST(Metrics, RefusedStoryIsIncomplete) {
  Story s = make_story("m/p", "some words here", "m");
  s.refused = true;
  s.text.clear();
  ConsistencyReport empty;
  empty.story_id = s.id;
  const auto r = story_result(s, empty);
  EXPECT_EQ(r.words, 0u);
  const auto agg = aggregate_model({r, result("m", "q", 1000, 1)}, {});
  EXPECT_EQ(agg.incomplete, 1u);
  EXPECT_EQ(agg.completed, 1u);
  EXPECT_DOUBLE_EQ(agg.ced_pooled, 10.0);
}

TEST(Metrics, StoryResultCountsReportErrorsByCategory) {
  for (auto& [story, report] : materialize_numeric_fixture("ced_example")) {
    const auto r = story_result(story, report);
    const auto expected = numeric_fixture("ced_example");
    const auto it = std::find_if(expected.begin(), expected.end(),
                                 [&](const StoryResult& e) { return e.story_id == story.id; });
    ASSERT_NE(it, expected.end());
    EXPECT_EQ(r.words, it->words);
    EXPECT_EQ(r.errors, it->errors);
    EXPECT_EQ(r.per_category_errors, it->per_category_errors);
  }
}

TEST(Metrics, LeaderboardOrderAndColumns) {
  const auto board = build_leaderboard({result("worse", "p", 1000, 3), result("better", "p", 1000, 1),
                                        result("tied", "p", 1000, 1), result("empty", "p", 0, 0)});
  ASSERT_EQ(board.rows.size(), 4u);
  EXPECT_EQ(board.rows[0].model, "better");
  EXPECT_EQ(board.rows[1].model, "tied");
  EXPECT_EQ(board.rows[2].model, "worse");
  EXPECT_EQ(board.rows[3].model, "empty");
  EXPECT_FALSE(board.rows[3].grr.has_value());
  const auto csv = leaderboard_csv(board);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "model,ced_overall,ced_mean,ced_timeline_plot_logic,ced_characterization,"
            "ced_world_building_setting,ced_factual_detail_consistency,ced_narrative_style,grr,"
            "avg_words,avg_errors,total,incomplete");
  EXPECT_NE(leaderboard_markdown(board).find("| Model |"), std::string::npos);
  EXPECT_THROW(build_leaderboard({}), EmptyResultSet);
}

TEST(Metrics, TaskBreakdownPoolsPerTaskType) {
  auto a = result("m", "p1", 5000, 1);
  auto b = result("m", "p2", 5000, 3);
  auto c = result("m", "p3", 2000, 1);
  c.task_type = TaskType::Expansion;
  const auto t = task_breakdown({a, b, c});
  EXPECT_DOUBLE_EQ(t.at(TaskType::Generation), 4.0);
  EXPECT_DOUBLE_EQ(t.at(TaskType::Expansion), 5.0);
  EXPECT_EQ(t.count(TaskType::Continuation), 0u);
}
