#pragma once

#include <cstddef>

namespace constory {

// Half-open code-point range [start, end) into a document. match_score is
// 1.0 for exact (whitespace-normalized) matches and 1 - normalized edit
// distance for fuzzy ones.
struct SpanAnchor {
  std::size_t start = 0;
  std::size_t end = 0;
  double match_score = 1.0;

  std::size_t length() const noexcept { return end - start; }
  friend bool operator==(const SpanAnchor&, const SpanAnchor&) = default;
};

}  // namespace constory
