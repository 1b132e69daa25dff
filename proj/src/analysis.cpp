#include "constory/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "constory/errors.hpp"
#include "constory/textio.hpp"

namespace constory {

LengthBin length_bin(std::size_t words) noexcept {
  if (words < 1000) return LengthBin::B0_1k;
  if (words < 3000) return LengthBin::B1_3k;
  if (words < 5000) return LengthBin::B3_5k;
  if (words < 8000) return LengthBin::B5_8k;
  return LengthBin::B8kPlus;
}

std::string_view to_string(LengthBin bin) noexcept {
  switch (bin) {
    case LengthBin::B0_1k: return "0-1k";
    case LengthBin::B1_3k: return "1k-3k";
    case LengthBin::B3_5k: return "3k-5k";
    case LengthBin::B5_8k: return "5k-8k";
    case LengthBin::B8kPlus: return "8k+";
  }
  return "8k+";
}

std::vector<CurvePoint> length_error_curve(const std::vector<StoryResult>& results) {
  std::map<LengthBin, std::vector<double>> bins;
  for (const auto& r : results) {
    if (r.words == 0) continue;
    bins[length_bin(r.words)].push_back(static_cast<double>(r.errors));
  }
  std::vector<CurvePoint> out;
  for (const auto& [bin, errs] : bins) out.push_back({bin, mean(errs), errs.size()});
  return out;
}

std::vector<UniformCurvePoint> length_error_curve(const std::vector<StoryResult>& results,
                                                  std::size_t bin_width) {
  if (bin_width == 0) throw InvalidArgument("bin width must be positive");
  std::map<std::size_t, std::vector<double>> bins;
  for (const auto& r : results) {
    if (r.words == 0) continue;
    bins[r.words / bin_width].push_back(static_cast<double>(r.errors));
  }
  std::vector<UniformCurvePoint> out;
  for (const auto& [i, errs] : bins) {
    out.push_back({i * bin_width, (i + 1) * bin_width, mean(errs), errs.size()});
  }
  return out;
}

double shannon_entropy(std::span<const TokenCandidate> candidates) {
  if (candidates.empty()) throw InvalidArgument("entropy of an empty candidate list");
  double max_lp = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) max_lp = std::max(max_lp, c.logprob);
  std::vector<double> w;
  w.reserve(candidates.size());
  for (const auto& c : candidates) w.push_back(std::exp(c.logprob - max_lp));
  const double z = pairwise_sum(w);
  std::vector<double> terms;
  terms.reserve(w.size());
  for (double wi : w) {
    const double p = wi / z;
    if (p > 0.0) terms.push_back(-p * std::log2(p));
  }
  return std::max(0.0, pairwise_sum(terms));
}

double candidate_coverage(std::span<const TokenCandidate> candidates) {
  std::vector<double> p;
  p.reserve(candidates.size());
  for (const auto& c : candidates) p.push_back(std::exp(c.logprob));
  return pairwise_sum(p);
}

SegmentUncertainty segment_uncertainty(const TokenTrace& trace,
                                       const std::optional<SpanAnchor>& span) {
  std::vector<double> entropies, probs, logprobs, inverses, coverages;
  for (const auto& t : trace.tokens) {
    if (span && !(std::max(t.char_start, span->start) < std::min(t.char_end, span->end))) continue;
    const double lp = std::min(0.0, t.chosen_logprob);
    logprobs.push_back(lp);
    probs.push_back(std::exp(lp));
    inverses.push_back(std::exp(-lp));
    if (t.top_candidates.empty()) {
      entropies.push_back(0.0);
      coverages.push_back(std::exp(lp));
    } else {
      entropies.push_back(shannon_entropy(t.top_candidates));
      coverages.push_back(candidate_coverage(t.top_candidates));
    }
  }
  if (logprobs.empty()) throw EmptySegment();
  SegmentUncertainty s;
  s.token_count = logprobs.size();
  s.mean_entropy = mean(entropies);
  s.mean_probability = mean(probs);
  s.ppl_exp = std::exp(-mean(logprobs));
  s.ppl_mean_inverse = mean(inverses);
  s.mean_coverage = mean(coverages);
  return s;
}

SegmentUncertainty pool_segments(std::span<const SegmentUncertainty> segments) {
  std::vector<double> n, h, p, lnppl, inv, cov;
  for (const auto& s : segments) {
    if (s.token_count == 0) continue;
    const auto w = static_cast<double>(s.token_count);
    n.push_back(w);
    h.push_back(w * s.mean_entropy);
    p.push_back(w * s.mean_probability);
    lnppl.push_back(w * std::log(s.ppl_exp));
    inv.push_back(w * s.ppl_mean_inverse);
    cov.push_back(w * s.mean_coverage);
  }
  if (n.empty()) throw InvalidArgument("no segments to pool");
  const double total = pairwise_sum(n);
  SegmentUncertainty out;
  out.token_count = static_cast<std::size_t>(total);
  out.mean_entropy = pairwise_sum(h) / total;
  out.mean_probability = pairwise_sum(p) / total;
  out.ppl_exp = std::exp(pairwise_sum(lnppl) / total);
  out.ppl_mean_inverse = pairwise_sum(inv) / total;
  out.mean_coverage = pairwise_sum(cov) / total;
  return out;
}

double percent_diff(double base, double value) {
  if (base == 0.0) throw InvalidArgument("percent difference against a zero baseline");
  return 100.0 * (value - base) / base;
}

UncertaintyComparison uncertainty_comparison(const SegmentUncertainty& whole,
                                             std::span<const SegmentUncertainty> error_segments) {
  if (whole.token_count == 0) throw InvalidArgument("whole-text segment has no tokens");
  UncertaintyComparison c;
  c.whole = whole;
  c.error = pool_segments(error_segments);
  c.entropy_diff = percent_diff(whole.mean_entropy, c.error.mean_entropy);
  c.probability_diff = percent_diff(whole.mean_probability, c.error.mean_probability);
  c.ppl_exp_diff = percent_diff(whole.ppl_exp, c.error.ppl_exp);
  c.ppl_mean_inverse_diff = percent_diff(whole.ppl_mean_inverse, c.error.ppl_mean_inverse);
  return c;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("pearson: columns differ in length");
  if (x.size() < 2) throw InsufficientData("pearson needs at least two rows");
  const double mx = mean(x);
  const double my = mean(y);
  std::vector<double> sxy, sxx, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy.push_back(dx * dy);
    sxx.push_back(dx * dx);
    syy.push_back(dy * dy);
  }
  const double vx = pairwise_sum(sxx);
  const double vy = pairwise_sum(syy);
  if (vx == 0.0 || vy == 0.0) return std::nullopt;
  return std::clamp(pairwise_sum(sxy) / std::sqrt(vx * vy), -1.0, 1.0);
}

CorrelationMatrix pearson_matrix(const std::vector<std::array<double, kCategoryCount>>& rows) {
  if (rows.size() < 2) throw InsufficientData("correlation needs at least two stories");
  std::array<std::vector<double>, kCategoryCount> cols;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < kCategoryCount; ++c) cols[c].push_back(r[c]);
  }
  CorrelationMatrix m;
  m.sample_count = rows.size();
  for (std::size_t a = 0; a < kCategoryCount; ++a) {
    for (std::size_t b = a; b < kCategoryCount; ++b) {
      auto r = pearson(cols[a], cols[b]);
      if (a == b && r) r = 1.0;
      m.r[a][b] = r;
      m.r[b][a] = r;
    }
  }
  return m;
}

std::vector<SubtypedPosition> positions_from_report(const ConsistencyReport& report,
                                                    std::size_t doc_length) {
  std::vector<SubtypedPosition> out;
  for (const auto& e : report.errors) {
    out.push_back({e.subtype, make_position_record(e.fact_anchor, e.contradiction_anchor, doc_length)});
  }
  return out;
}

PositionalStats positional_stats(const std::vector<PositionRecord>& records) {
  if (records.empty()) throw NoRecords("no positional records");
  std::vector<double> facts, contras, gaps;
  for (const auto& r : records) {
    facts.push_back(r.fact_pos);
    if (r.contradiction_pos) {
      contras.push_back(*r.contradiction_pos);
      gaps.push_back(std::abs(*r.contradiction_pos - r.fact_pos));
    }
  }
  PositionalStats s;
  s.count = records.size();
  s.avg_fact = mean(facts);
  s.paired_count = contras.size();
  if (!contras.empty()) {
    s.avg_contradiction = mean(contras);
    s.avg_gap = mean(gaps);
  }
  return s;
}

PositionalStats positional_stats(const std::vector<SubtypedPosition>& records, ErrorSubtype subtype) {
  std::vector<PositionRecord> picked;
  for (const auto& r : records) {
    if (r.subtype == subtype) picked.push_back(r.record);
  }
  if (picked.empty()) throw NoRecords("no positional records for " + std::string(display_name(subtype)));
  return positional_stats(picked);
}

std::string correlation_csv(const CorrelationMatrix& m) {
  std::vector<std::string> header = {"category"};
  for (auto c : kAllCategories) header.emplace_back(category_key(c));
  std::string out = textio::csv_row(header);
  for (std::size_t a = 0; a < kCategoryCount; ++a) {
    std::vector<std::string> row = {std::string(category_key(kAllCategories[a]))};
    for (std::size_t b = 0; b < kCategoryCount; ++b) {
      row.push_back(m.r[a][b] ? textio::fixed(*m.r[a][b], 4) : "NA");
    }
    out += textio::csv_row(row);
  }
  return out;
}

namespace {

std::vector<std::array<std::string, 3>> positional_cells(const std::vector<SubtypedPosition>& records,
                                                         std::span<const ErrorSubtype> subtypes,
                                                         int decimals, const char* suffix) {
  std::vector<std::array<std::string, 3>> cells;
  for (auto s : subtypes) {
    std::array<std::string, 3> c;
    try {
      const auto st = positional_stats(records, s);
      c[0] = textio::fixed(st.avg_fact, decimals) + suffix;
      if (st.avg_contradiction) c[1] = textio::fixed(*st.avg_contradiction, decimals) + suffix;
      if (st.avg_gap) c[2] = textio::fixed(*st.avg_gap, decimals) + suffix;
    } catch (const NoRecords&) {
    }
    cells.push_back(c);
  }
  return cells;
}

constexpr std::array<const char*, 3> kPositionalRows = {"Avg Fact", "Avg Contradiction", "Avg Gap"};

}  // namespace

std::string positional_table_csv(const std::vector<SubtypedPosition>& records,
                                 std::span<const ErrorSubtype> subtypes) {
  std::vector<std::string> header = {"metric"};
  for (auto s : subtypes) header.emplace_back(display_name(s));
  std::string out = textio::csv_row(header);
  const auto cells = positional_cells(records, subtypes, 2, "");
  for (std::size_t r = 0; r < 3; ++r) {
    std::vector<std::string> row = {kPositionalRows[r]};
    for (const auto& c : cells) row.push_back(c[r]);
    out += textio::csv_row(row);
  }
  return out;
}

std::string positional_table_markdown(const std::vector<SubtypedPosition>& records,
                                      std::span<const ErrorSubtype> subtypes) {
  std::string out = "| Metric |";
  for (auto s : subtypes) out += " " + std::string(display_name(s)) + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < subtypes.size(); ++i) out += "---:|";
  out += "\n";
  const auto cells = positional_cells(records, subtypes, 1, "%");
  for (std::size_t r = 0; r < 3; ++r) {
    out += std::string("| ") + kPositionalRows[r] + " |";
    for (const auto& c : cells) out += " " + (c[r].empty() ? std::string("-") : c[r]) + " |";
    out += "\n";
  }
  return out;
}

}  // namespace constory
