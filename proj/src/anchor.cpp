#include "constory/anchor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "constory/errors.hpp"
#include "constory/utf8.hpp"

namespace constory {

namespace {

constexpr double kScoreEpsilon = 1e-12;

struct Window {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t distance = 0;
  std::size_t denom = 1;  // max(|quote|, |window|)
};

// True when a is a strictly better match than b: higher score, then earlier
// start, then shorter window. Scores are compared as exact fractions.
bool better(const Window& a, const Window& b) {
  const auto lhs = a.distance * b.denom;
  const auto rhs = b.distance * a.denom;
  if (lhs != rhs) return lhs < rhs;
  if (a.begin != b.begin) return a.begin < b.begin;
  return a.end < b.end;
}

double score_of(const Window& w) {
  return 1.0 - static_cast<double>(w.distance) / static_cast<double>(w.denom);
}

}  // namespace

std::u32string normalize_whitespace(std::u32string_view text) {
  std::u32string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char32_t c : text) {
    if (utf8::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

AnchoredDocument::AnchoredDocument(std::string_view utf8_text) : text_(utf8::decode(utf8_text)) {
  normalized_.reserve(text_.size());
  orig_start_.reserve(text_.size());
  orig_end_.reserve(text_.size());
  std::size_t i = 0;
  const std::size_t n = text_.size();
  while (i < n) {
    if (utf8::is_space(text_[i])) {
      const std::size_t run_start = i;
      while (i < n && utf8::is_space(text_[i])) ++i;
      if (normalized_.empty() || i == n) continue;  // trim
      normalized_.push_back(U' ');
      orig_start_.push_back(run_start);
      orig_end_.push_back(i);
      continue;
    }
    normalized_.push_back(text_[i]);
    orig_start_.push_back(i);
    orig_end_.push_back(i + 1);
    ++i;
  }
}

SpanAnchor AnchoredDocument::to_original(std::size_t norm_begin, std::size_t norm_end,
                                         double score) const {
  return SpanAnchor{orig_start_[norm_begin], orig_end_[norm_end - 1], score};
}

std::string AnchoredDocument::slice(const SpanAnchor& span) const {
  return slice(span.start, span.end);
}

std::string AnchoredDocument::slice(std::size_t start, std::size_t end) const {
  start = std::min(start, text_.size());
  end = std::clamp(end, start, text_.size());
  return utf8::encode(std::u32string_view(text_).substr(start, end - start));
}

std::optional<SpanAnchor> AnchoredDocument::try_anchor(std::string_view quote,
                                                       const AnchorPolicy& policy) const {
  if (normalized_.empty()) throw InvalidArgument("cannot anchor into an empty document");
  const auto q = normalize_whitespace(utf8::decode(quote));
  if (q.empty()) throw InvalidArgument("cannot anchor an empty quote");

  if (auto pos = normalized_.find(q); pos != std::u32string::npos) {
    return to_original(pos, pos + q.size(), 1.0);
  }

  const std::size_t m = q.size();
  const std::size_t n = normalized_.size();
  const auto min_len = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(static_cast<double>(m) * (1.0 - policy.window_slack))));
  const auto max_len = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::ceil(static_cast<double>(m) * (1.0 + policy.window_slack))));
  if (min_len > max_len) return std::nullopt;

  // Any qualifying window has distance <= (1 - min_score) * max(m, max_len).
  const double budget_real =
      (1.0 - policy.min_score) * static_cast<double>(std::max(m, max_len)) + kScoreEpsilon;
  const auto budget = static_cast<std::size_t>(std::floor(budget_real));

  // Approximate substring matching (free start in the document): after
  // processing column j, col[m] is the smallest distance between q and any
  // document substring ending at j. Every qualifying window ends at a column
  // whose value is within budget.
  std::vector<std::size_t> col(m + 1);
  for (std::size_t i = 0; i <= m; ++i) col[i] = i;
  std::vector<std::size_t> candidate_ends;
  for (std::size_t j = 1; j <= n; ++j) {
    std::size_t diag = col[0];
    col[0] = 0;
    for (std::size_t i = 1; i <= m; ++i) {
      const std::size_t up = col[i];
      const std::size_t cost = (q[i - 1] == normalized_[j - 1]) ? 0 : 1;
      col[i] = std::min({col[i - 1] + 1, up + 1, diag + cost});
      diag = up;
    }
    if (col[m] <= budget && j >= min_len) candidate_ends.push_back(j);
  }
  if (candidate_ends.empty()) return std::nullopt;

  // For each candidate end, one DP over the reversed quote and the reversed
  // document prefix yields the exact distance for every window length.
  std::optional<Window> best;
  std::vector<std::size_t> prev(m + 1);
  std::vector<std::size_t> cur(m + 1);
  for (std::size_t end : candidate_ends) {
    const std::size_t longest = std::min(max_len, end);
    for (std::size_t i = 0; i <= m; ++i) prev[i] = i;
    for (std::size_t len = 1; len <= longest; ++len) {
      const char32_t dc = normalized_[end - len];
      cur[0] = len;
      for (std::size_t i = 1; i <= m; ++i) {
        const std::size_t cost = (q[m - i] == dc) ? 0 : 1;
        cur[i] = std::min({prev[i] + 1, cur[i - 1] + 1, prev[i - 1] + cost});
      }
      std::swap(prev, cur);
      if (len < min_len) continue;
      Window w{end - len, end, prev[m], std::max(m, len)};
      if (score_of(w) + kScoreEpsilon < policy.min_score) continue;
      if (!best || better(w, *best)) best = w;
    }
  }
  if (!best) return std::nullopt;
  return to_original(best->begin, best->end, score_of(*best));
}

SpanAnchor AnchoredDocument::anchor(std::string_view quote, const AnchorPolicy& policy) const {
  if (auto a = try_anchor(quote, policy)) return *a;
  // Best achievable score for the error message only.
  const auto q = normalize_whitespace(utf8::decode(quote));
  std::size_t best = q.size();
  std::vector<std::size_t> col(q.size() + 1);
  for (std::size_t i = 0; i <= q.size(); ++i) col[i] = i;
  for (char32_t dc : normalized_) {
    std::size_t diag = col[0];
    col[0] = 0;
    for (std::size_t i = 1; i <= q.size(); ++i) {
      const std::size_t up = col[i];
      col[i] = std::min({col[i - 1] + 1, up + 1, diag + (q[i - 1] == dc ? 0u : 1u)});
      diag = up;
    }
    best = std::min(best, col[q.size()]);
  }
  const double score = q.empty() ? 0.0 : 1.0 - static_cast<double>(best) / static_cast<double>(q.size());
  throw AnchorNotFound(std::string(quote), score);
}

SpanAnchor anchor_quote(std::string_view document, std::string_view quote,
                        const AnchorPolicy& policy) {
  return AnchoredDocument(document).anchor(quote, policy);
}

double normalized_position(const SpanAnchor& anchor, std::size_t doc_length) {
  if (doc_length == 0) throw InvalidArgument("document length must be positive");
  if (anchor.start > doc_length || anchor.end > doc_length) {
    throw InvalidArgument("anchor lies outside the document");
  }
  return 100.0 * static_cast<double>(anchor.start) / static_cast<double>(doc_length);
}

bool span_overlap(const SpanAnchor& a, const SpanAnchor& b) noexcept {
  return std::max(a.start, b.start) < std::min(a.end, b.end);
}

PositionRecord make_position_record(const SpanAnchor& fact,
                                    const std::optional<SpanAnchor>& contradiction,
                                    std::size_t doc_length) {
  PositionRecord r;
  r.fact_pos = normalized_position(fact, doc_length);
  if (contradiction) {
    r.contradiction_pos = normalized_position(*contradiction, doc_length);
    r.gap = std::abs(*r.contradiction_pos - r.fact_pos);
  }
  return r;
}

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j - 1] + 1, up + 1, diag + (a[i - 1] == b[j - 1] ? 0u : 1u)});
      diag = up;
    }
  }
  return row[b.size()];
}

double text_similarity(std::string_view a, std::string_view b) {
  const auto na = normalize_whitespace(utf8::decode(a));
  const auto nb = normalize_whitespace(utf8::decode(b));
  const auto denom = std::max(na.size(), nb.size());
  if (denom == 0) return 1.0;
  return 1.0 - static_cast<double>(edit_distance(na, nb)) / static_cast<double>(denom);
}

}  // namespace constory
