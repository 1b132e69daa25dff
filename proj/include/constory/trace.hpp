#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace constory {

struct TokenCandidate {
  std::string token_text;
  double logprob = 0.0;

  friend bool operator==(const TokenCandidate&, const TokenCandidate&) = default;
};

// One generated token with its top-K next-token distribution. char_start and
// char_end are code-point offsets into the response text.
struct TraceToken {
  std::string token_text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  double chosen_logprob = 0.0;
  std::vector<TokenCandidate> top_candidates;  // descending logprob, size <= k

  friend bool operator==(const TraceToken&, const TraceToken&) = default;
};

struct TokenTrace {
  std::vector<TraceToken> tokens;
  std::size_t k = 0;

  friend bool operator==(const TokenTrace&, const TokenTrace&) = default;
};

// Builds a trace from (token, logprob, candidates) triples, assigning
// consecutive character ranges and sorting candidates by descending logprob.
TokenTrace make_trace(std::vector<TraceToken> tokens, std::size_t k);

// Concatenation of all token texts.
std::string reconstruct_text(const TokenTrace& trace);

// Ordered, non-overlapping, contiguous ranges; candidate lists sorted and
// bounded by k; logprobs non-positive.
bool is_well_formed(const TokenTrace& trace);

}  // namespace constory
