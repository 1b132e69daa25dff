#include "constory/metrics.hpp"

#include <algorithm>
#include <set>

#include "constory/errors.hpp"
#include "constory/textio.hpp"

namespace constory {

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const auto half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double mean(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("mean of an empty sequence");
  return pairwise_sum(values) / static_cast<double>(values.size());
}

StoryResult story_result(const Story& story, const ConsistencyReport& report) {
  if (report.story_id != story.id) {
    throw InvalidArgument("report " + report.story_id + " does not belong to story " + story.id);
  }
  StoryResult r;
  r.story_id = story.id;
  r.prompt_id = story.prompt_id.empty() ? story.id : story.prompt_id;
  r.model = story.source_model;
  r.task_type = story.task_type;
  r.words = story.refused ? 0 : story.word_count;
  r.errors = report.errors.size();
  r.per_category_errors = report.per_category_counts();
  return r;
}

double ced_story(std::size_t errors, std::size_t words) {
  if (words == 0) throw ZeroLengthStory();
  return static_cast<double>(errors) / (static_cast<double>(words) / 10000.0);
}

std::array<double, kCategoryCount> ced_category(
    const std::array<std::size_t, kCategoryCount>& per_category_errors, std::size_t words) {
  std::array<double, kCategoryCount> out{};
  for (std::size_t i = 0; i < kCategoryCount; ++i) out[i] = ced_story(per_category_errors[i], words);
  return out;
}

double quality_score(std::size_t words, std::size_t errors) {
  return static_cast<double>(words) / (1.0 + static_cast<double>(errors));
}

MetricRecord metric_record(const StoryResult& r) {
  return {ced_story(r.errors, r.words), quality_score(r.words, r.errors)};
}

std::vector<StoryGroup> make_groups(const std::vector<StoryResult>& results) {
  std::vector<StoryGroup> groups;
  std::map<std::string, std::size_t> index;
  for (const auto& r : results) {
    if (r.words == 0) continue;
    auto [it, inserted] = index.emplace(r.prompt_id, groups.size());
    if (inserted) groups.push_back({r.prompt_id, {}});
    auto& g = groups[it->second];
    for (const auto& [m, q] : g.entries) {
      if (m == r.model) {
        throw InvalidArgument("model " + r.model + " has two outputs for prompt " + r.prompt_id);
      }
    }
    g.entries.emplace_back(r.model, quality_score(r.words, r.errors));
  }
  return groups;
}

std::map<std::string, double> grr(const std::vector<StoryGroup>& groups) {
  std::map<std::string, std::vector<double>> ranks;
  for (const auto& g : groups) {
    std::vector<std::size_t> order(g.entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return g.entries[a].second > g.entries[b].second;
    });
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t j = i;
      while (j + 1 < order.size() && g.entries[order[j + 1]].second == g.entries[order[i]].second) ++j;
      // Positions i..j (0-based) share the mean of ranks i+1..j+1.
      const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
      for (std::size_t k = i; k <= j; ++k) ranks[g.entries[order[k]].first].push_back(rank);
      i = j + 1;
    }
  }
  std::map<std::string, double> out;
  for (const auto& [model, rs] : ranks) out[model] = mean(rs);
  return out;
}

ModelScore aggregate_model(const std::vector<StoryResult>& results,
                           const std::map<std::string, double>& grr_map) {
  if (results.empty()) throw EmptyResultSet("no story results to aggregate");
  ModelScore s;
  s.model = results.front().model;
  std::vector<double> ceds, words, errors;
  std::array<std::vector<double>, kCategoryCount> cat_errors;
  for (const auto& r : results) {
    if (r.model != s.model) {
      throw InvalidArgument("aggregate_model got results for " + s.model + " and " + r.model);
    }
    if (r.words == 0) {
      ++s.incomplete;
      continue;
    }
    ++s.completed;
    ceds.push_back(ced_story(r.errors, r.words));
    words.push_back(static_cast<double>(r.words));
    errors.push_back(static_cast<double>(r.errors));
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      cat_errors[c].push_back(static_cast<double>(r.per_category_errors[c]));
    }
  }
  if (s.completed > 0) {
    const double total_words = pairwise_sum(words);
    s.ced_mean = mean(ceds);
    s.ced_pooled = 10000.0 * pairwise_sum(errors) / total_words;
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      s.per_category_ced[c] = 10000.0 * pairwise_sum(cat_errors[c]) / total_words;
    }
    s.avg_words = mean(words);
    s.avg_errors = mean(errors);
  }
  if (auto it = grr_map.find(s.model); it != grr_map.end()) s.grr = it->second;
  return s;
}

std::map<TaskType, double> task_breakdown(const std::vector<StoryResult>& results) {
  std::map<TaskType, std::pair<std::vector<double>, std::vector<double>>> acc;
  for (const auto& r : results) {
    if (r.words == 0) continue;
    auto& [e, w] = acc[r.task_type];
    e.push_back(static_cast<double>(r.errors));
    w.push_back(static_cast<double>(r.words));
  }
  std::map<TaskType, double> out;
  for (const auto& [t, ew] : acc) out[t] = 10000.0 * pairwise_sum(ew.first) / pairwise_sum(ew.second);
  return out;
}

Leaderboard build_leaderboard(const std::vector<StoryResult>& results) {
  if (results.empty()) throw EmptyResultSet("no story results to score");
  const auto grr_map = grr(make_groups(results));
  std::map<std::string, std::vector<StoryResult>> by_model;
  for (const auto& r : results) by_model[r.model].push_back(r);
  Leaderboard board;
  for (const auto& [model, rs] : by_model) {
    board.rows.push_back(aggregate_model(rs, grr_map));
    board.tasks[model] = task_breakdown(rs);
  }
  std::stable_sort(board.rows.begin(), board.rows.end(), [](const ModelScore& a, const ModelScore& b) {
    if (a.completed == 0 || b.completed == 0) return a.completed > b.completed;
    return a.ced_pooled < b.ced_pooled;
  });
  return board;
}

namespace {

std::string grr_text(const ModelScore& s, int decimals) {
  return s.grr ? textio::fixed(*s.grr, decimals) : "";
}

}  // namespace

std::string leaderboard_csv(const Leaderboard& board) {
  std::vector<std::string> header = {"model", "ced_overall", "ced_mean"};
  for (auto c : kAllCategories) header.push_back("ced_" + std::string(category_key(c)));
  for (const char* h : {"grr", "avg_words", "avg_errors", "total", "incomplete"}) header.emplace_back(h);
  std::string out = textio::csv_row(header);
  for (const auto& s : board.rows) {
    std::vector<std::string> row = {s.model, textio::fixed(s.ced_pooled, 4), textio::fixed(s.ced_mean, 4)};
    for (double v : s.per_category_ced) row.push_back(textio::fixed(v, 4));
    row.push_back(grr_text(s, 4));
    row.push_back(textio::fixed(s.avg_words, 1));
    row.push_back(textio::fixed(s.avg_errors, 2));
    row.push_back(std::to_string(s.completed));
    row.push_back(std::to_string(s.incomplete));
    out += textio::csv_row(row);
  }
  return out;
}

std::string leaderboard_markdown(const Leaderboard& board) {
  std::string out = "| Model | Overall CED | Mean CED |";
  for (auto c : kAllCategories) out += " " + std::string(short_label(c)) + " |";
  out += " GRR | Words | Errors | Total |\n|---|";
  for (std::size_t i = 0; i < 2 + kCategoryCount + 4; ++i) out += "---:|";
  out += "\n";
  for (const auto& s : board.rows) {
    out += "| " + s.model + " | " + textio::fixed(s.ced_pooled, 2) + " | " + textio::fixed(s.ced_mean, 2) + " |";
    for (double v : s.per_category_ced) out += " " + textio::fixed(v, 2) + " |";
    out += " " + grr_text(s, 2) + " | " + textio::fixed(s.avg_words, 0) + " | " +
           textio::fixed(s.avg_errors, 2) + " | " + std::to_string(s.completed) + " |\n";
  }
  return out;
}

namespace {

std::vector<TaskType> present_tasks(const Leaderboard& board) {
  std::set<TaskType> seen;
  for (const auto& [m, t] : board.tasks) {
    for (const auto& [k, v] : t) seen.insert(k);
  }
  return {seen.begin(), seen.end()};
}

}  // namespace

std::string task_breakdown_csv(const Leaderboard& board) {
  const auto tasks = present_tasks(board);
  std::vector<std::string> header = {"model"};
  for (auto t : tasks) header.emplace_back(to_string(t));
  std::string out = textio::csv_row(header);
  for (const auto& s : board.rows) {
    std::vector<std::string> row = {s.model};
    const auto& m = board.tasks.at(s.model);
    for (auto t : tasks) {
      auto it = m.find(t);
      row.push_back(it == m.end() ? "" : textio::fixed(it->second, 4));
    }
    out += textio::csv_row(row);
  }
  return out;
}

std::string task_breakdown_markdown(const Leaderboard& board) {
  const auto tasks = present_tasks(board);
  std::string out = "| Model |";
  for (auto t : tasks) out += " " + std::string(to_string(t)) + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < tasks.size(); ++i) out += "---:|";
  out += "\n";
  for (const auto& s : board.rows) {
    out += "| " + s.model + " |";
    const auto& m = board.tasks.at(s.model);
    for (auto t : tasks) {
      auto it = m.find(t);
      out += " " + (it == m.end() ? std::string("-") : textio::fixed(it->second, 2)) + " |";
    }
    out += "\n";
  }
  return out;
}

}  // namespace constory
