#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "constory/anchor.hpp"
#include "constory/domain.hpp"
#include "constory/metrics.hpp"
#include "constory/trace.hpp"

namespace constory {

// ---------------------------------------------------------------------------
// Length bins: [0,1000), [1000,3000), [3000,5000), [5000,8000), [8000,inf).

enum class LengthBin { B0_1k, B1_3k, B3_5k, B5_8k, B8kPlus };
inline constexpr std::array<LengthBin, 5> kAllLengthBins = {
    LengthBin::B0_1k, LengthBin::B1_3k, LengthBin::B3_5k, LengthBin::B5_8k, LengthBin::B8kPlus};

LengthBin length_bin(std::size_t words) noexcept;
std::string_view to_string(LengthBin bin) noexcept;  // "0-1k", ..., "8k+"

struct CurvePoint {
  LengthBin bin = LengthBin::B0_1k;
  double mean_errors = 0.0;
  std::size_t sample_count = 0;
};

// Non-empty bins in ascending order. Incomplete stories are ignored.
std::vector<CurvePoint> length_error_curve(const std::vector<StoryResult>& results);

struct UniformCurvePoint {
  std::size_t lower = 0;  // inclusive
  std::size_t upper = 0;  // exclusive
  double mean_errors = 0.0;
  std::size_t sample_count = 0;
};

// Same, with equal-width bins of bin_width words.
std::vector<UniformCurvePoint> length_error_curve(const std::vector<StoryResult>& results,
                                                  std::size_t bin_width);

// ---------------------------------------------------------------------------
// Token-level uncertainty

// Entropy in bits of the candidate distribution, renormalized over the
// returned candidates. Throws InvalidArgument when empty.
double shannon_entropy(std::span<const TokenCandidate> candidates);

// Raw probability mass of the candidates before renormalization.
double candidate_coverage(std::span<const TokenCandidate> candidates);

struct SegmentUncertainty {
  double mean_entropy = 0.0;       // bits
  double mean_probability = 0.0;   // mean of exp(chosen logprob)
  double ppl_exp = 1.0;            // exp(-mean chosen logprob)
  double ppl_mean_inverse = 1.0;   // mean of 1 / p
  double mean_coverage = 1.0;      // mean candidate mass before renormalizing
  std::size_t token_count = 0;
};

// Over tokens whose character range intersects span (all tokens when
// nullopt). Tokens without candidates are treated as a single certain
// candidate for entropy. Throws EmptySegment when no token intersects.
SegmentUncertainty segment_uncertainty(const TokenTrace& trace,
                                       const std::optional<SpanAnchor>& span = std::nullopt);

// Token-weighted pooling. ppl_exp pools geometrically, which equals the
// perplexity of the concatenated segments. Throws InvalidArgument when empty.
SegmentUncertainty pool_segments(std::span<const SegmentUncertainty> segments);

// 100 * (value - base) / base. Throws InvalidArgument when base == 0.
double percent_diff(double base, double value);

struct UncertaintyComparison {
  SegmentUncertainty whole;
  SegmentUncertainty error;
  double entropy_diff = 0.0;      // percent
  double probability_diff = 0.0;  // percent
  double ppl_exp_diff = 0.0;      // percent
  double ppl_mean_inverse_diff = 0.0;
};

UncertaintyComparison uncertainty_comparison(const SegmentUncertainty& whole,
                                             std::span<const SegmentUncertainty> error_segments);

// ---------------------------------------------------------------------------
// Error-category correlations

// nullopt when either column is constant.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationMatrix {
  std::array<std::array<std::optional<double>, kCategoryCount>, kCategoryCount> r{};
  std::size_t sample_count = 0;
};

// One row per story. Throws InsufficientData with fewer than two rows.
CorrelationMatrix pearson_matrix(const std::vector<std::array<double, kCategoryCount>>& rows);

// ---------------------------------------------------------------------------
// Positions

struct SubtypedPosition {
  ErrorSubtype subtype = ErrorSubtype::AbsoluteTimeContradiction;
  PositionRecord record;
};

// One record per error of the report; doc_length in code points.
std::vector<SubtypedPosition> positions_from_report(const ConsistencyReport& report,
                                                    std::size_t doc_length);

struct PositionalStats {
  std::size_t count = 0;
  double avg_fact = 0.0;
  std::optional<double> avg_contradiction;
  std::optional<double> avg_gap;
  std::size_t paired_count = 0;
};

// Throws NoRecords when records is empty.
PositionalStats positional_stats(const std::vector<PositionRecord>& records);
// Restricted to one subtype; throws NoRecords when it has none.
PositionalStats positional_stats(const std::vector<SubtypedPosition>& records, ErrorSubtype subtype);

// The seven subtypes of the positional table, in column order.
inline constexpr std::array<ErrorSubtype, 7> kPositionalTableSubtypes = {
    ErrorSubtype::AbsoluteTimeContradiction, ErrorSubtype::CoreRulesViolation,
    ErrorSubtype::QuantitativeMismatch,      ErrorSubtype::GeographicalContradiction,
    ErrorSubtype::NomenclatureConfusion,     ErrorSubtype::MemoryContradiction,
    ErrorSubtype::PerspectiveConfusion};

// ---------------------------------------------------------------------------
// Artifact text

std::string correlation_csv(const CorrelationMatrix& m);
// Rows "Avg Fact", "Avg Contradiction", "Avg Gap"; one column per subtype.
std::string positional_table_csv(const std::vector<SubtypedPosition>& records,
                                 std::span<const ErrorSubtype> subtypes = kPositionalTableSubtypes);
std::string positional_table_markdown(const std::vector<SubtypedPosition>& records,
                                      std::span<const ErrorSubtype> subtypes = kPositionalTableSubtypes);

}  // namespace constory
