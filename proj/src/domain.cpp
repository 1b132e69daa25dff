#include "constory/domain.hpp"

#include <algorithm>
#include <ctime>
#include <cstdio>

#include "constory/corpus.hpp"
#include "constory/errors.hpp"

namespace constory {

namespace {

struct SubtypeInfo {
  ErrorSubtype subtype;
  ErrorCategory category;
  std::string_view schema_key;
  std::string_view array_key;
  std::string_view display;
};

using S = ErrorSubtype;
using C = ErrorCategory;

// Schema keys follow the judge prompt examples; the four subtypes without an
// example use the snake_case of their singular name.
constexpr std::array<SubtypeInfo, kSubtypeCount> kSubtypes = {{
    {S::AbsoluteTimeContradiction, C::TimelinePlotLogic, "absolute_time_error",
     "absolute_time_contradictions", "Absolute Time Contradictions"},
    {S::DurationContradiction, C::TimelinePlotLogic, "duration_error",
     "duration_contradictions", "Duration Contradictions"},
    {S::SimultaneityContradiction, C::TimelinePlotLogic, "simultaneity_paradox",
     "simultaneity_contradictions", "Simultaneity Contradictions"},
    {S::CauselessEffect, C::TimelinePlotLogic, "causeless_effect",
     "causeless_effects", "Causeless Effects"},
    {S::CausalLogicViolation, C::TimelinePlotLogic, "causal_logic_violation",
     "causal_logic_violations", "Causal Logic Violations"},
    {S::AbandonedPlotElement, C::TimelinePlotLogic, "abandoned_plot_element",
     "abandoned_plot_elements", "Abandoned Plot Elements"},
    {S::MemoryContradiction, C::Characterization, "memory_contradiction",
     "memory_contradictions", "Memory Contradictions"},
    {S::KnowledgeContradiction, C::Characterization, "knowledge_contradiction",
     "knowledge_contradictions", "Knowledge Contradictions"},
    {S::SkillFluctuation, C::Characterization, "skill_fluctuation",
     "skill_power_fluctuations", "Skill Fluctuations"},
    {S::ForgottenAbility, C::Characterization, "forgotten_ability",
     "forgotten_abilities", "Forgotten Abilities"},
    {S::CoreRulesViolation, C::WorldBuildingSetting, "core_rules_violation",
     "core_rules_violations", "Core Rules Violations"},
    {S::SocialNormsViolation, C::WorldBuildingSetting, "social_norms_violation",
     "social_norms_violations", "Social Norms Violations"},
    {S::GeographicalContradiction, C::WorldBuildingSetting,
     "geographical_contradiction", "geographical_contradictions",
     "Geographical Contradictions"},
    {S::AppearanceMismatch, C::FactualDetailConsistency, "appearance_mismatch",
     "appearance_mismatches", "Appearance Mismatches"},
    {S::NomenclatureConfusion, C::FactualDetailConsistency,
     "nomenclature_confusion", "nomenclature_confusions",
     "Nomenclature Confusions"},
    {S::QuantitativeMismatch, C::FactualDetailConsistency,
     "quantitative_mismatch", "quantitative_mismatches",
     "Quantitative Mismatches"},
    {S::PerspectiveConfusion, C::NarrativeStyle, "perspective_confusion",
     "perspective_confusions", "Perspective Confusions"},
    {S::ToneInconsistency, C::NarrativeStyle, "tone_inconsistency",
     "tone_inconsistencies", "Tone Inconsistencies"},
    {S::StyleShift, C::NarrativeStyle, "style_shift", "style_shifts",
     "Style Shifts"},
}};

struct CategoryInfo {
  std::string_view key;
  std::string_view display;
  std::string_view short_label;
};

constexpr std::array<CategoryInfo, kCategoryCount> kCategories = {{
    {"timeline_plot_logic", "Timeline & Plot Logic", "Time."},
    {"characterization", "Characterization", "Char."},
    {"world_building_setting", "World-building & Setting", "World"},
    {"factual_detail_consistency", "Factual & Detail Consistency", "Fact."},
    {"narrative_style", "Narrative & Style", "Narr."},
}};

const std::array<std::vector<ErrorSubtype>, kCategoryCount>& subtypes_by_category() {
  static const auto table = [] {
    std::array<std::vector<ErrorSubtype>, kCategoryCount> t;
    for (const auto& info : kSubtypes) t[index_of(info.category)].push_back(info.subtype);
    return t;
  }();
  return table;
}

std::string normalize_key(std::string_view key) {
  std::string out;
  out.reserve(key.size());
  for (char c : key) {
    if (c == '-' || c == ' ' || c == '_') {
      if (!out.empty() && out.back() != '_') out.push_back('_');
    } else if (c == '&') {
      continue;
    } else if (c >= 'A' && c <= 'Z') {
      out.push_back(static_cast<char>(c - 'A' + 'a'));
    } else {
      out.push_back(c);
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  while (!out.empty() && out.front() == '_') out.erase(out.begin());
  return out;
}

}  // namespace

const std::array<ErrorSubtype, kSubtypeCount> kAllSubtypes = [] {
  std::array<ErrorSubtype, kSubtypeCount> all{};
  for (std::size_t i = 0; i < kSubtypeCount; ++i) all[i] = kSubtypes[i].subtype;
  return all;
}();

std::string_view to_string(TaskType t) noexcept {
  switch (t) {
    case TaskType::Generation: return "generation";
    case TaskType::Continuation: return "continuation";
    case TaskType::Expansion: return "expansion";
    case TaskType::Completion: return "completion";
  }
  return "generation";
}

TaskType task_type_from_string(std::string_view s) {
  const auto key = normalize_key(s);
  for (auto t : kAllTaskTypes) {
    if (key == to_string(t)) return t;
  }
  throw InvalidArgument("unknown task type: '" + std::string(s) + "'");
}

std::size_t index_of(ErrorCategory c) noexcept { return static_cast<std::size_t>(c); }
std::size_t index_of(ErrorSubtype s) noexcept { return static_cast<std::size_t>(s); }

ErrorCategory category_of(ErrorSubtype s) noexcept { return kSubtypes[index_of(s)].category; }

std::span<const ErrorSubtype> subtypes_of(ErrorCategory c) noexcept {
  return subtypes_by_category()[index_of(c)];
}

std::string_view schema_key(ErrorSubtype s) noexcept { return kSubtypes[index_of(s)].schema_key; }
std::string_view array_key(ErrorSubtype s) noexcept { return kSubtypes[index_of(s)].array_key; }
std::string_view display_name(ErrorSubtype s) noexcept { return kSubtypes[index_of(s)].display; }

std::string_view category_key(ErrorCategory c) noexcept { return kCategories[index_of(c)].key; }
std::string_view display_name(ErrorCategory c) noexcept { return kCategories[index_of(c)].display; }
std::string_view short_label(ErrorCategory c) noexcept { return kCategories[index_of(c)].short_label; }

std::optional<ErrorSubtype> try_subtype_from_key(std::string_view key) noexcept {
  const auto norm = normalize_key(key);
  if (norm.empty()) return std::nullopt;
  for (const auto& info : kSubtypes) {
    if (norm == info.schema_key || norm == info.array_key ||
        norm == normalize_key(info.display)) {
      return info.subtype;
    }
  }
  return std::nullopt;
}

ErrorSubtype subtype_from_key(std::string_view key) {
  if (auto s = try_subtype_from_key(key)) return *s;
  throw UnknownSubtype(std::string(key));
}

std::optional<ErrorSubtype> subtype_from_array_key(std::string_view key) noexcept {
  for (const auto& info : kSubtypes) {
    if (key == info.array_key) return info.subtype;
  }
  return std::nullopt;
}

ErrorCategory category_from_key(std::string_view key) {
  const auto norm = normalize_key(key);
  for (auto c : kAllCategories) {
    if (norm == category_key(c) || norm == normalize_key(display_name(c))) return c;
  }
  throw InvalidArgument("unknown error category: '" + std::string(key) + "'");
}

bool is_pair_free(ErrorSubtype s) noexcept {
  return s == ErrorSubtype::CauselessEffect || s == ErrorSubtype::AbandonedPlotElement ||
         s == ErrorSubtype::ForgottenAbility;
}

Story make_story(std::string id, std::string text, std::string source_model,
                 TaskType task_type, std::string prompt_id) {
  Story story;
  story.word_count = word_count(text);
  story.prompt_id = prompt_id.empty() ? id : std::move(prompt_id);
  story.id = std::move(id);
  story.text = std::move(text);
  story.source_model = std::move(source_model);
  story.task_type = task_type;
  return story;
}

std::string_view to_string(Verification v) noexcept {
  switch (v) {
    case Verification::Contradictory: return "contradictory";
    case Verification::Unverified: return "unverified";
    case Verification::NotRequired: return "not_required";
  }
  return "unverified";
}

Verification verification_from_string(std::string_view s) {
  const auto key = normalize_key(s);
  for (auto v : {Verification::Contradictory, Verification::Unverified,
                 Verification::NotRequired}) {
    if (key == to_string(v)) return v;
  }
  throw InvalidArgument("unknown verification value: '" + std::string(s) + "'");
}

std::array<std::size_t, kCategoryCount> ConsistencyReport::per_category_counts() const {
  std::array<std::size_t, kCategoryCount> counts{};
  for (const auto& e : errors) ++counts[index_of(category_of(e.subtype))];
  return counts;
}

std::optional<std::string> validate_report(const ConsistencyReport& report,
                                           std::size_t doc_length) {
  if (report.chains.size() != report.errors.size()) {
    return "chains and errors differ in length";
  }
  auto in_range = [doc_length](const SpanAnchor& a) {
    return a.start < a.end && a.end <= doc_length;
  };
  for (std::size_t i = 0; i < report.errors.size(); ++i) {
    const auto& e = report.errors[i];
    if (e.fact_quote.empty()) return "error " + std::to_string(i) + " has an empty fact_quote";
    if (!in_range(e.fact_anchor)) return "error " + std::to_string(i) + " fact anchor out of range";
    if (e.contradiction_anchor && !in_range(*e.contradiction_anchor)) {
      return "error " + std::to_string(i) + " contradiction anchor out of range";
    }
    if (e.contradiction_quote && !e.contradiction_anchor &&
        std::find(e.flags.begin(), e.flags.end(), flags::kContradictionUnanchored) ==
            e.flags.end()) {
      return "error " + std::to_string(i) + " has an unanchored, unflagged contradiction";
    }
    if (report.chains[i].evidence.empty()) {
      return "chain " + std::to_string(i) + " has no evidence";
    }
    if (report.chains[i].conclusion != e.subtype) {
      return "chain " + std::to_string(i) + " conclusion disagrees with its error";
    }
    if (i > 0) {
      const auto& prev = report.errors[i - 1];
      const bool ordered =
          prev.fact_anchor.start < e.fact_anchor.start ||
          (prev.fact_anchor.start == e.fact_anchor.start && index_of(prev.subtype) <= index_of(e.subtype));
      if (!ordered) return "errors are not ordered by fact anchor then subtype";
    }
  }
  return std::nullopt;
}

std::string format_rfc3339(long long unix_seconds) {
  std::time_t t = static_cast<std::time_t>(unix_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace constory
