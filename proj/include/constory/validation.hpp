#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "constory/domain.hpp"
#include "constory/llmclient.hpp"

namespace constory {

struct InjectedError {
  ErrorSubtype subtype = ErrorSubtype::AbsoluteTimeContradiction;
  SpanAnchor original_span;   // in the clean story; empty for insertions
  SpanAnchor corrupted_span;  // the changed text in the corrupted story
  std::string description;
  // Sentence holding the corruption, and the earlier sentence it now
  // conflicts with (when there is one), both in the corrupted story.
  std::string corrupted_sentence;
  std::optional<std::string> reference_sentence;
  std::optional<SpanAnchor> reference_span;

  friend bool operator==(const InjectedError&, const InjectedError&) = default;
};

nlohmann::ordered_json to_json(const InjectedError& e);
InjectedError injected_error_from_json(const nlohmann::ordered_json& j);

// ---------------------------------------------------------------------------
// Injection

using InjectionPlan = std::vector<std::pair<ErrorSubtype, std::size_t>>;

struct SkippedInjection {
  ErrorSubtype subtype = ErrorSubtype::AbsoluteTimeContradiction;
  std::string reason;
};

struct InjectionResult {
  Story story;  // corrupted; same id, word count recomputed
  std::vector<InjectedError> injected;  // ascending corrupted_span.start
  std::vector<SkippedInjection> skipped;
};

// Subtypes with a deterministic template.
bool has_template_injector(ErrorSubtype subtype) noexcept;

// Applies the plan in order. Each item picks one of the story's qualifying
// hooks with a seeded generator, so equal inputs give equal outputs. Items
// without a usable hook are skipped and reported. When `llm` is set, subtypes
// without a template are requested from it instead.
InjectionResult inject_errors(const Story& story, const InjectionPlan& plan, std::uint64_t seed,
                              Backend* llm = nullptr);

// Single-item form that throws InjectionInfeasible instead of skipping.
InjectionResult inject_one(const Story& story, ErrorSubtype subtype, std::uint64_t seed,
                           Backend* llm = nullptr);

// Ground-truth sidecar for a corrupted story.
std::string sidecar_json(const std::string& story_id, const std::string& source_story_id,
                         std::uint64_t seed, const InjectionResult& result);
std::pair<std::string, std::vector<InjectedError>> parse_sidecar(const std::string& text);

// Judge script that reports exactly the planted errors: one finding per
// injected error, with the reference sentence as fact and the corrupted
// sentence as its pair.
MockScript truth_script(const std::vector<std::pair<std::string, std::vector<InjectedError>>>& truth);

// ---------------------------------------------------------------------------
// Scoring

struct ScoreRow {
  std::size_t gt = 0;
  std::size_t pred = 0;
  std::size_t tp = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// precision = tp/pred (0 when pred = 0), recall = tp/gt (0 when gt = 0),
// f1 = harmonic mean (0 when both are 0). Throws InvalidArgument when
// tp > min(gt, pred).
ScoreRow score(std::size_t gt, std::size_t pred, std::size_t tp);

struct MatchOptions {
  bool strict_subtype = false;
  double quote_similarity = 0.80;
};

struct MatchResult {
  std::size_t tp = 0;
  std::array<std::size_t, kCategoryCount> tp_by_category{};  // by truth category
  std::vector<std::pair<std::size_t, std::size_t>> pairs;    // (prediction, truth)
};

// Greedy one-to-one: predictions in fact-anchor order each take the first
// unconsumed truth item of the same category (same subtype when strict)
// whose corrupted span overlaps either prediction anchor, or whose corrupted
// sentence is similar enough to either prediction quote.
MatchResult match_detections(const ConsistencyReport& predicted,
                             const std::vector<InjectedError>& truth,
                             const MatchOptions& options = {});

struct ValidationScore {
  std::array<ScoreRow, kCategoryCount> per_category{};
  ScoreRow total;
};

// Accumulates counts over stories; rows are recomputed from summed counts.
class ValidationTally {
 public:
  void add(const ConsistencyReport& predicted, const std::vector<InjectedError>& truth,
           const MatchOptions& options = {});
  void add_counts(ErrorCategory category, std::size_t gt, std::size_t pred, std::size_t tp);
  ValidationScore result() const;

 private:
  std::array<std::size_t, kCategoryCount> gt_{}, pred_{}, tp_{};
};

// Table layout: Error Category, GT, Pred, TP, Recall, Prec, F1; a Total row
// closes the table.
std::string validation_csv(const ValidationScore& score);
std::string validation_markdown(const ValidationScore& score);

}  // namespace constory
