#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "constory/span.hpp"

namespace constory {

// Fuzzy-matching policy. A window qualifies when its length is within
// |quote| * (1 +/- window_slack) and 1 - edit_distance / max(|quote|, |window|)
// reaches min_score.
struct AnchorPolicy {
  double min_score = 0.80;
  double window_slack = 0.20;
};

// A document prepared for repeated quote anchoring: whitespace runs are
// collapsed to one space and leading/trailing whitespace is trimmed, with a
// map from every normalized position back to the original code points.
class AnchoredDocument {
 public:
  explicit AnchoredDocument(std::string_view utf8_text);

  // Exact first occurrence (score 1.0), else the best fuzzy window. Throws
  // AnchorNotFound when nothing reaches the policy's min_score and
  // InvalidArgument for an empty document or quote.
  SpanAnchor anchor(std::string_view quote, const AnchorPolicy& policy = {}) const;
  std::optional<SpanAnchor> try_anchor(std::string_view quote,
                                       const AnchorPolicy& policy = {}) const;

  // Length in code points of the original text.
  std::size_t length() const noexcept { return text_.size(); }
  const std::u32string& text() const noexcept { return text_; }
  std::string slice(const SpanAnchor& span) const;
  std::string slice(std::size_t start, std::size_t end) const;

 private:
  std::u32string text_;
  std::u32string normalized_;
  std::vector<std::size_t> orig_start_;
  std::vector<std::size_t> orig_end_;

  SpanAnchor to_original(std::size_t norm_begin, std::size_t norm_end, double score) const;
};

SpanAnchor anchor_quote(std::string_view document, std::string_view quote,
                        const AnchorPolicy& policy = {});

// 100 * anchor.start / doc_length. Throws InvalidArgument if doc_length is 0
// or the anchor lies outside the document.
double normalized_position(const SpanAnchor& anchor, std::size_t doc_length);

// Half-open intersection test.
bool span_overlap(const SpanAnchor& a, const SpanAnchor& b) noexcept;

struct PositionRecord {
  double fact_pos = 0.0;
  std::optional<double> contradiction_pos;
  std::optional<double> gap;

  friend bool operator==(const PositionRecord&, const PositionRecord&) = default;
};

PositionRecord make_position_record(const SpanAnchor& fact,
                                    const std::optional<SpanAnchor>& contradiction,
                                    std::size_t doc_length);

// Levenshtein distance over code points.
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

// 1 - edit_distance / max length, over whitespace-normalized text.
double text_similarity(std::string_view a, std::string_view b);

std::u32string normalize_whitespace(std::u32string_view text);

}  // namespace constory
