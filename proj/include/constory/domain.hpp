#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "constory/span.hpp"
#include "constory/trace.hpp"

namespace constory {

enum class TaskType { Generation, Continuation, Expansion, Completion };

std::string_view to_string(TaskType t) noexcept;
TaskType task_type_from_string(std::string_view s);  // throws InvalidArgument
inline constexpr std::array<TaskType, 4> kAllTaskTypes = {
    TaskType::Generation, TaskType::Continuation, TaskType::Expansion,
    TaskType::Completion};

enum class ErrorCategory {
  TimelinePlotLogic,
  Characterization,
  WorldBuildingSetting,
  FactualDetailConsistency,
  NarrativeStyle,
};

inline constexpr std::size_t kCategoryCount = 5;
inline constexpr std::array<ErrorCategory, kCategoryCount> kAllCategories = {
    ErrorCategory::TimelinePlotLogic,        ErrorCategory::Characterization,
    ErrorCategory::WorldBuildingSetting,     ErrorCategory::FactualDetailConsistency,
    ErrorCategory::NarrativeStyle};

enum class ErrorSubtype {
  // Timeline & Plot Logic
  AbsoluteTimeContradiction,
  DurationContradiction,
  SimultaneityContradiction,
  CauselessEffect,
  CausalLogicViolation,
  AbandonedPlotElement,
  // Characterization
  MemoryContradiction,
  KnowledgeContradiction,
  SkillFluctuation,
  ForgottenAbility,
  // World-building & Setting
  CoreRulesViolation,
  SocialNormsViolation,
  GeographicalContradiction,
  // Factual & Detail Consistency
  AppearanceMismatch,
  NomenclatureConfusion,
  QuantitativeMismatch,
  // Narrative & Style
  PerspectiveConfusion,
  ToneInconsistency,
  StyleShift,
};

inline constexpr std::size_t kSubtypeCount = 19;
extern const std::array<ErrorSubtype, kSubtypeCount> kAllSubtypes;

std::size_t index_of(ErrorCategory c) noexcept;
std::size_t index_of(ErrorSubtype s) noexcept;

ErrorCategory category_of(ErrorSubtype s) noexcept;
std::span<const ErrorSubtype> subtypes_of(ErrorCategory c) noexcept;

// Wire key used in the judge's "error_category" field, e.g. "absolute_time_error".
std::string_view schema_key(ErrorSubtype s) noexcept;
// Array key of the judge JSON layout, e.g. "absolute_time_contradictions".
std::string_view array_key(ErrorSubtype s) noexcept;
// Human-readable name, e.g. "Absolute Time Contradictions".
std::string_view display_name(ErrorSubtype s) noexcept;

// Snake-case identifier, e.g. "timeline_plot_logic".
std::string_view category_key(ErrorCategory c) noexcept;
// "Timeline & Plot Logic".
std::string_view display_name(ErrorCategory c) noexcept;
// Leaderboard column label: "Time.", "Char.", "World", "Fact.", "Narr.".
std::string_view short_label(ErrorCategory c) noexcept;

// Case-insensitive, hyphen/space/underscore-normalized lookup. Accepts the
// schema key, the array key and the display name of each subtype.
ErrorSubtype subtype_from_key(std::string_view key);  // throws UnknownSubtype
std::optional<ErrorSubtype> try_subtype_from_key(std::string_view key) noexcept;
std::optional<ErrorSubtype> subtype_from_array_key(std::string_view key) noexcept;
ErrorCategory category_from_key(std::string_view key);  // throws InvalidArgument

// Subtypes whose definitions describe missing rather than conflicting text;
// they carry no contradiction pair and bypass pairwise verification.
bool is_pair_free(ErrorSubtype s) noexcept;

struct Story {
  std::string id;
  std::string prompt_id;  // groups candidate outputs of the same prompt
  std::string text;
  std::string source_model;
  TaskType task_type = TaskType::Generation;
  std::size_t word_count = 0;
  bool refused = false;
  std::optional<TokenTrace> token_trace;

  friend bool operator==(const Story&, const Story&) = default;
};

// Builds a story with word_count derived from text. prompt_id defaults to id.
Story make_story(std::string id, std::string text, std::string source_model = {},
                 TaskType task_type = TaskType::Generation,
                 std::string prompt_id = {});

// Result of the Stage-2 pairwise check for a retained finding.
enum class Verification { Contradictory, Unverified, NotRequired };
std::string_view to_string(Verification v) noexcept;
Verification verification_from_string(std::string_view s);

struct ErrorInstance {
  std::string fact_quote;
  SpanAnchor fact_anchor;
  std::string location;  // judge-supplied, verbatim
  std::optional<std::string> contradiction_quote;
  std::optional<SpanAnchor> contradiction_anchor;  // absent only if flagged
  std::optional<std::string> contradiction_location;
  std::string error_element;
  ErrorSubtype subtype = ErrorSubtype::AbsoluteTimeContradiction;
  std::string context;
  Verification verification = Verification::Contradictory;
  std::vector<std::string> flags;

  friend bool operator==(const ErrorInstance&, const ErrorInstance&) = default;
};

// Flag values attached to ErrorInstance::flags.
namespace flags {
inline constexpr std::string_view kContradictionUnanchored = "contradiction_unanchored";
inline constexpr std::string_view kUnverified = "unverified";
inline constexpr std::string_view kCategoryKeyMismatch = "category_key_mismatch";
}  // namespace flags

struct EvidenceItem {
  std::string quote;
  SpanAnchor anchor;

  friend bool operator==(const EvidenceItem&, const EvidenceItem&) = default;
};

struct EvidenceChain {
  std::string reasoning;
  std::vector<EvidenceItem> evidence;
  ErrorSubtype conclusion = ErrorSubtype::AbsoluteTimeContradiction;

  friend bool operator==(const EvidenceChain&, const EvidenceChain&) = default;
};

struct Diagnostic {
  std::string stage;     // "extraction", "pairing", "anchoring", ...
  std::string category;  // category key, or empty when not category-scoped
  std::string message;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

struct ConsistencyReport {
  std::string story_id;
  std::vector<ErrorInstance> errors;
  std::vector<EvidenceChain> chains;  // parallel to errors
  std::string judge_model;
  std::string created_at;  // RFC 3339 UTC
  std::string pipeline_version;
  std::vector<Diagnostic> diagnostics;

  std::array<std::size_t, kCategoryCount> per_category_counts() const;
  friend bool operator==(const ConsistencyReport&, const ConsistencyReport&) = default;
};

// Checks the structural invariants of a report against the story it covers:
// parallel chains, non-empty fact quotes, anchors within the document.
// Returns a description of the first violation, or nullopt.
std::optional<std::string> validate_report(const ConsistencyReport& report,
                                           std::size_t doc_length);

std::string format_rfc3339(long long unix_seconds);

inline constexpr std::string_view kPipelineVersion = "constory-checker/1.0";

}  // namespace constory
