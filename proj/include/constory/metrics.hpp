#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "constory/domain.hpp"

namespace constory {

// Deterministic pairwise summation; the result depends only on the order of
// the input, never on thread scheduling.
double pairwise_sum(std::span<const double> values);
double mean(std::span<const double> values);  // throws InvalidArgument when empty

struct StoryResult {
  std::string story_id;
  std::string prompt_id;  // GRR group key
  std::string model;
  TaskType task_type = TaskType::Generation;
  std::size_t words = 0;
  std::size_t errors = 0;
  std::array<std::size_t, kCategoryCount> per_category_errors{};
};

StoryResult story_result(const Story& story, const ConsistencyReport& report);

// errors / (words / 10000). Throws ZeroLengthStory when words == 0.
double ced_story(std::size_t errors, std::size_t words);
std::array<double, kCategoryCount> ced_category(
    const std::array<std::size_t, kCategoryCount>& per_category_errors, std::size_t words);

// words / (1 + errors).
double quality_score(std::size_t words, std::size_t errors);

struct MetricRecord {
  double ced = 0.0;
  double quality = 0.0;
};
MetricRecord metric_record(const StoryResult& r);  // throws ZeroLengthStory

struct StoryGroup {
  std::string story_id;
  std::vector<std::pair<std::string, double>> entries;  // (model, Q)
};

// One group per prompt_id over completed stories (words > 0), models in
// order of first appearance. Throws InvalidArgument if a model appears twice
// in a group.
std::vector<StoryGroup> make_groups(const std::vector<StoryResult>& results);

// Within-group ranks by descending Q (ties share the average rank), averaged
// per model over the groups it appears in.
std::map<std::string, double> grr(const std::vector<StoryGroup>& groups);

struct ModelScore {
  std::string model;
  double ced_mean = 0.0;
  double ced_pooled = 0.0;
  std::array<double, kCategoryCount> per_category_ced{};  // pooled
  std::optional<double> grr;
  std::size_t completed = 0;   // stories with words > 0
  std::size_t incomplete = 0;  // refused or empty outputs
  double avg_words = 0.0;
  double avg_errors = 0.0;
};

// results must all belong to one model. Throws EmptyResultSet when empty.
ModelScore aggregate_model(const std::vector<StoryResult>& results,
                           const std::map<std::string, double>& grr_map);

// Pooled CED per task type over completed stories.
std::map<TaskType, double> task_breakdown(const std::vector<StoryResult>& results);

struct Leaderboard {
  std::vector<ModelScore> rows;  // ascending pooled CED, then model name
  std::map<std::string, std::map<TaskType, double>> tasks;
};

// Throws EmptyResultSet when results is empty.
Leaderboard build_leaderboard(const std::vector<StoryResult>& results);

std::string leaderboard_csv(const Leaderboard& board);
std::string leaderboard_markdown(const Leaderboard& board);
std::string task_breakdown_csv(const Leaderboard& board);
std::string task_breakdown_markdown(const Leaderboard& board);

}  // namespace constory
