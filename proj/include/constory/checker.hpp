#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "constory/anchor.hpp"
#include "constory/domain.hpp"
#include "constory/llmclient.hpp"

namespace constory {

// One entry of a category array in the judge's reply.
struct RawFinding {
  ErrorCategory category = ErrorCategory::TimelinePlotLogic;
  nlohmann::ordered_json payload;
  std::string source_array_key;
  // Taken from the array the entry appeared in. When the entry's own
  // error_category is missing, unknown or names another subtype, the array
  // wins and the finding carries flags::kCategoryKeyMismatch.
  ErrorSubtype subtype = ErrorSubtype::AbsoluteTimeContradiction;
  std::vector<std::string> flags;

  std::string fact_quote() const;
  // The conflicting quote, or nullopt when the judge gave none ("", null,
  // "N/A"). An array value yields its first non-empty string.
  std::optional<std::string> contradiction_quote() const;
  std::string field(const char* key) const;  // string field or ""
};

enum class PairOutcome { Contradictory, Consistent, Unverified, NotRequired };

struct PairVerdict {
  PairOutcome verdict = PairOutcome::Contradictory;
  std::string rationale;
};

struct CheckerOptions {
  AnchorPolicy anchor;
  std::size_t context_chars = 500;      // verification context on each side
  std::size_t max_story_chars = 600000; // longer stories are rejected
  std::size_t max_parallel = 8;         // concurrent judge calls per story
  std::string created_at;               // empty: current time
};

// ---------------------------------------------------------------------------
// Stage 1

// Category prompt template, verbatim.
std::string_view category_template(ErrorCategory category);

// Template followed by the story between delimiter lines. Throws
// InvalidArgument for an empty story.
std::string build_category_prompt(ErrorCategory category, const Story& story);

// Recovers the outermost JSON object from a judge reply: as-is, then after
// one repair pass (code fences stripped, surrounding prose cut, trailing
// commas removed). Throws ParseFailure when nothing parses to an object.
nlohmann::ordered_json recover_json_object(std::string_view raw);

// Findings in array-key order of the category. Entries that are not objects
// or have an empty fact_quote are skipped and described in `skipped`.
std::vector<RawFinding> parse_judge_json(std::string_view raw, ErrorCategory category,
                                         std::vector<Diagnostic>* skipped = nullptr);

struct ExtractionResult {
  std::vector<RawFinding> findings;  // category order, then reply order
  std::vector<Diagnostic> diagnostics;
};

// One call per category. Per-category failures become diagnostics; throws
// BackendUnavailable when all five fail and rethrows AuthError.
ExtractionResult run_extraction(const Story& story, Backend& judge,
                                const CheckerOptions& options = {});

// ---------------------------------------------------------------------------
// Stage 2

std::string build_verification_prompt(const RawFinding& finding, const Story& story,
                                      std::size_t context_chars = 500);

// Accepts {"verdict": "Contradictory"|"Consistent", "rationale": ...} with
// the same repair pass as stage 1; anything else is Unverified.
PairVerdict parse_verification_reply(std::string_view raw);

// Findings with a pair are verified; Consistent ones are dropped. Pair-free
// subtypes pass with NotRequired; other findings without a pair are dropped
// with a diagnostic. Backend failures on a single verification leave the
// finding Unverified.
std::vector<std::pair<RawFinding, PairVerdict>> pair_contradictions(
    const std::vector<RawFinding>& findings, const Story& story, Backend& judge,
    const CheckerOptions& options = {}, std::vector<Diagnostic>* diagnostics = nullptr);

// ---------------------------------------------------------------------------
// Stage 3

// Anchors the quotes and builds the instance and its chain. Throws
// AnchorNotFound when the fact quote cannot be anchored; an unanchorable
// contradiction quote is kept and flagged.
std::pair<ErrorInstance, EvidenceChain> build_evidence_chain(
    const RawFinding& finding, const AnchoredDocument& document,
    const PairVerdict& verdict = {}, const AnchorPolicy& policy = {});
std::pair<ErrorInstance, EvidenceChain> build_evidence_chain(const RawFinding& finding,
                                                             const Story& story);

// Drops later results whose fact anchor overlaps an earlier one of the same
// subtype.
std::vector<std::pair<ErrorInstance, EvidenceChain>> dedup_findings(
    std::vector<std::pair<ErrorInstance, EvidenceChain>> results);

// ---------------------------------------------------------------------------
// Stage 4

// Orders results by (fact_anchor.start, subtype) and fills report metadata.
ConsistencyReport assemble_report(const Story& story,
                                  std::vector<std::pair<ErrorInstance, EvidenceChain>> results,
                                  std::vector<Diagnostic> diagnostics,
                                  const std::string& judge_model = {},
                                  const std::string& created_at = {});

// All four stages for one story.
class Checker {
 public:
  Checker(std::shared_ptr<Backend> judge, CheckerOptions options = {});

  // Refused or empty stories yield an empty report with a diagnostic and no
  // judge calls.
  ConsistencyReport check(const Story& story) const;

 private:
  std::shared_ptr<Backend> judge_;
  CheckerOptions options_;
};

}  // namespace constory
