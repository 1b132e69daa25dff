#include "constory/checker.hpp"

#include <algorithm>
#include <chrono>

#include <spdlog/spdlog.h>

#include "constory/errors.hpp"
#include "constory/parallel.hpp"
#include "constory/resources.hpp"
#include "constory/utf8.hpp"

namespace constory {

using json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kSystemPrompt =
    "You are a meticulous editor auditing a long-form story for internal consistency "
    "errors. Report only errors supported by exact quotations from the story. "
    "Answer with a single JSON object.";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<json> try_parse_object(std::string_view text) {
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

std::string strip_fences(std::string_view raw) {
  const auto open = raw.find("```");
  if (open == std::string_view::npos) return std::string(raw);
  auto body_start = raw.find('\n', open);
  if (body_start == std::string_view::npos) return std::string(raw);
  ++body_start;
  const auto close = raw.find("```", body_start);
  return std::string(raw.substr(body_start, close == std::string_view::npos
                                                ? std::string_view::npos
                                                : close - body_start));
}

// From the first '{' to its matching '}' (string-aware), or to the last '}'
// when the braces never balance.
std::string outermost_object(std::string_view s) {
  const auto open = s.find('{');
  if (open == std::string_view::npos) return {};
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return std::string(s.substr(open, i - open + 1));
    }
  }
  const auto close = s.rfind('}');
  if (close == std::string_view::npos || close < open) return {};
  return std::string(s.substr(open, close - open + 1));
}

std::string remove_trailing_commas(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      out += c;
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      auto j = s.find_first_not_of(" \t\r\n", i + 1);
      if (j != std::string_view::npos && (s[j] == '}' || s[j] == ']')) continue;
    }
    out += c;
  }
  return out;
}

std::string resource_name(ErrorCategory c) {
  return "prompts/" + std::string(category_key(c)) + ".txt";
}

bool is_placeholder(const std::string& s) {
  std::string lower;
  for (char c : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  lower = trim(lower);
  return lower.empty() || lower == "n/a" || lower == "na" || lower == "none" || lower == "null" ||
         lower == "-";
}

// Context window of `chars` code points on each side of the anchored quote.
std::string context_window(const AnchoredDocument& doc, const std::string& quote,
                           std::size_t chars, const AnchorPolicy& policy) {
  std::optional<SpanAnchor> a;
  try {
    a = doc.try_anchor(quote, policy);
  } catch (const InvalidArgument&) {
  }
  if (!a) return "(passage not located in the story)";
  const auto begin = a->start > chars ? a->start - chars : 0;
  const auto end = std::min(doc.length(), a->end + chars);
  return doc.slice(begin, end);
}

std::string now_rfc3339() {
  const auto now = std::chrono::system_clock::now();
  return format_rfc3339(std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
}

}  // namespace

std::string RawFinding::field(const char* key) const {
  auto it = payload.find(key);
  if (it == payload.end() || !it->is_string()) return {};
  return it->get<std::string>();
}

std::string RawFinding::fact_quote() const { return field("fact_quote"); }

std::optional<std::string> RawFinding::contradiction_quote() const {
  auto it = payload.find("contradiction_pair");
  if (it == payload.end()) return std::nullopt;
  if (it->is_string()) {
    auto s = it->get<std::string>();
    if (is_placeholder(s)) return std::nullopt;
    return s;
  }
  if (it->is_array()) {
    for (const auto& e : *it) {
      if (e.is_string() && !is_placeholder(e.get<std::string>())) return e.get<std::string>();
    }
  }
  return std::nullopt;
}

std::string_view category_template(ErrorCategory category) {
  return resources::get(resource_name(category));
}

std::string build_category_prompt(ErrorCategory category, const Story& story) {
  if (story.text.empty()) throw InvalidArgument("story '" + story.id + "' has no text");
  std::string prompt(category_template(category));
  if (!prompt.empty() && prompt.back() != '\n') prompt += '\n';
  prompt += "\nSTORY TEXT\n=== BEGIN STORY ===\n";
  prompt += story.text;
  if (story.text.back() != '\n') prompt += '\n';
  prompt += "=== END STORY ===\n";
  return prompt;
}

json recover_json_object(std::string_view raw) {
  if (auto j = try_parse_object(trim(raw))) return *j;
  const auto unfenced = strip_fences(raw);
  for (const auto& candidate : {trim(unfenced), outermost_object(unfenced)}) {
    if (candidate.empty()) continue;
    if (auto j = try_parse_object(candidate)) return *j;
    if (auto j = try_parse_object(remove_trailing_commas(candidate))) return *j;
  }
  throw ParseFailure("no JSON object could be recovered from the judge reply");
}

std::vector<RawFinding> parse_judge_json(std::string_view raw, ErrorCategory category,
                                         std::vector<Diagnostic>* skipped) {
  const auto root = recover_json_object(raw);
  const std::string cat_key(category_key(category));
  auto note = [&](std::string message) {
    if (skipped) skipped->push_back({"extraction", cat_key, std::move(message)});
  };

  std::vector<RawFinding> out;
  for (auto subtype : subtypes_of(category)) {
    const std::string key(array_key(subtype));
    auto it = root.find(key);
    if (it == root.end() || it->is_null()) continue;
    if (!it->is_array()) {
      note("'" + key + "' is not an array");
      continue;
    }
    std::size_t index = 0;
    for (const auto& entry : *it) {
      const auto where = key + "[" + std::to_string(index++) + "]";
      if (!entry.is_object()) {
        note(where + " is not an object");
        continue;
      }
      RawFinding f;
      f.category = category;
      f.payload = entry;
      f.source_array_key = key;
      f.subtype = subtype;
      if (trim(f.fact_quote()).empty()) {
        note(where + " has no fact_quote");
        continue;
      }
      const auto declared = f.field("error_category");
      const auto resolved = try_subtype_from_key(declared);
      if (!resolved || *resolved != subtype) {
        f.flags.emplace_back(flags::kCategoryKeyMismatch);
      }
      out.push_back(std::move(f));
    }
  }
  for (const auto& [key, value] : root.items()) {
    if (auto s = subtype_from_array_key(key); !s || category_of(*s) != category) {
      note("ignored unexpected key '" + key + "'");
    }
  }
  return out;
}

ExtractionResult run_extraction(const Story& story, Backend& judge, const CheckerOptions& options) {
  std::array<std::vector<RawFinding>, kCategoryCount> per_category;
  std::array<std::vector<Diagnostic>, kCategoryCount> per_diag;
  const auto errors = parallel_for(kCategoryCount, options.max_parallel, [&](std::size_t i) {
    const auto category = kAllCategories[i];
    auto req = ChatRequest::judge_defaults();
    req.system_prompt = std::string(kSystemPrompt);
    req.user_prompt = build_category_prompt(category, story);
    req.tags[tags::kStage] = tags::kStageExtraction;
    req.tags[tags::kStoryId] = story.id;
    req.tags[tags::kCategory] = std::string(category_key(category));
    const auto resp = chat_complete(req, judge);
    per_category[i] = parse_judge_json(resp.text, category, &per_diag[i]);
  });

  ExtractionResult result;
  std::size_t failed = 0;
  std::string last_failure;
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    const std::string cat_key(category_key(kAllCategories[i]));
    if (errors[i]) {
      ++failed;
      try {
        std::rethrow_exception(errors[i]);
      } catch (const AuthError&) {
        throw;
      } catch (const std::exception& e) {
        last_failure = e.what();
        result.diagnostics.push_back({"extraction", cat_key, std::string("failed: ") + e.what()});
        spdlog::warn("story {}: {} extraction failed: {}", story.id, cat_key, e.what());
      }
      continue;
    }
    for (auto& f : per_category[i]) result.findings.push_back(std::move(f));
    for (auto& d : per_diag[i]) result.diagnostics.push_back(std::move(d));
  }
  if (failed == kCategoryCount) {
    throw BackendUnavailable("story " + story.id + ": all category extractions failed: " + last_failure);
  }
  return result;
}

std::string build_verification_prompt(const RawFinding& finding, const Story& story,
                                      std::size_t context_chars) {
  const AnchoredDocument doc(story.text);
  const auto fact = finding.fact_quote();
  const auto contra = finding.contradiction_quote().value_or("");
  std::string p;
  p += "You are checking one suspected consistency error in a story.\n\n";
  p += "Suspected error type: " + std::string(display_name(finding.subtype)) + " (" +
       std::string(schema_key(finding.subtype)) + ")\n";
  p += "Explanation offered: " + finding.field("context") + "\n\n";
  p += "PASSAGE A\n\"" + fact + "\"\nSurrounding text:\n<<<\n" +
       context_window(doc, fact, context_chars, {}) + "\n>>>\n\n";
  p += "PASSAGE B\n\"" + contra + "\"\nSurrounding text:\n<<<\n" +
       context_window(doc, contra, context_chars, {}) + "\n>>>\n\n";
  p += "Do passages A and B contradict each other within the story's own logic? Treat them as "
       "Consistent when both can hold, for example after elapsed time, in a flashback, or when a "
       "character is lying or mistaken.\n\n";
  p += "Reply with one JSON object and nothing else:\n"
       "{\"verdict\": \"Contradictory\" or \"Consistent\", \"rationale\": \"one sentence\"}\n";
  return p;
}

PairVerdict parse_verification_reply(std::string_view raw) {
  PairVerdict v;
  v.verdict = PairOutcome::Unverified;
  try {
    const auto j = recover_json_object(raw);
    auto it = j.find("verdict");
    if (it == j.end() || !it->is_string()) {
      v.rationale = "reply has no verdict";
      return v;
    }
    std::string verdict;
    for (char c : it->get<std::string>()) {
      verdict += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    verdict = trim(verdict);
    if (auto r = j.find("rationale"); r != j.end() && r->is_string()) v.rationale = r->get<std::string>();
    if (verdict == "contradictory") {
      v.verdict = PairOutcome::Contradictory;
    } else if (verdict == "consistent") {
      v.verdict = PairOutcome::Consistent;
    } else {
      v.rationale = "unrecognised verdict '" + it->get<std::string>() + "'";
    }
  } catch (const ParseFailure& e) {
    v.rationale = e.what();
  }
  return v;
}

std::vector<std::pair<RawFinding, PairVerdict>> pair_contradictions(
    const std::vector<RawFinding>& findings, const Story& story, Backend& judge,
    const CheckerOptions& options, std::vector<Diagnostic>* diagnostics) {
  std::vector<std::optional<PairVerdict>> verdicts(findings.size());
  std::vector<std::size_t> to_verify;
  for (std::size_t i = 0; i < findings.size(); ++i) {
    if (findings[i].contradiction_quote()) {
      to_verify.push_back(i);
    } else if (is_pair_free(findings[i].subtype)) {
      verdicts[i] = PairVerdict{PairOutcome::NotRequired, {}};
    }
  }

  const auto errors = parallel_for(to_verify.size(), options.max_parallel, [&](std::size_t k) {
    const auto& f = findings[to_verify[k]];
    auto req = ChatRequest::judge_defaults();
    req.system_prompt = std::string(kSystemPrompt);
    req.user_prompt = build_verification_prompt(f, story, options.context_chars);
    req.tags[tags::kStage] = tags::kStageVerification;
    req.tags[tags::kStoryId] = story.id;
    req.tags[tags::kCategory] = std::string(category_key(f.category));
    req.tags[tags::kFactQuote] = f.fact_quote();
    verdicts[to_verify[k]] = parse_verification_reply(chat_complete(req, judge).text);
  });
  for (std::size_t k = 0; k < to_verify.size(); ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const AuthError&) {
      throw;
    } catch (const std::exception& e) {
      verdicts[to_verify[k]] = PairVerdict{PairOutcome::Unverified, e.what()};
    }
  }

  std::vector<std::pair<RawFinding, PairVerdict>> out;
  for (std::size_t i = 0; i < findings.size(); ++i) {
    const auto& f = findings[i];
    const std::string cat_key(category_key(f.category));
    if (!verdicts[i]) {
      if (diagnostics) {
        diagnostics->push_back({"pairing", cat_key,
                                "dropped " + std::string(schema_key(f.subtype)) +
                                    " finding without a contradiction pair: '" +
                                    preview(f.fact_quote()) + "'"});
      }
      continue;
    }
    if (verdicts[i]->verdict == PairOutcome::Consistent) {
      if (diagnostics) {
        diagnostics->push_back({"pairing", cat_key,
                                "judged consistent: '" + preview(f.fact_quote()) + "'"});
      }
      continue;
    }
    if (verdicts[i]->verdict == PairOutcome::Unverified && diagnostics) {
      diagnostics->push_back({"pairing", cat_key,
                              "verification inconclusive (" + verdicts[i]->rationale +
                                  "), kept: '" + preview(f.fact_quote()) + "'"});
    }
    out.emplace_back(f, *verdicts[i]);
  }
  return out;
}

std::pair<ErrorInstance, EvidenceChain> build_evidence_chain(const RawFinding& finding,
                                                             const AnchoredDocument& document,
                                                             const PairVerdict& verdict,
                                                             const AnchorPolicy& policy) {
  ErrorInstance e;
  e.fact_quote = finding.fact_quote();
  e.fact_anchor = document.anchor(e.fact_quote, policy);
  e.location = finding.field("location");
  e.error_element = finding.field("error_element");
  e.subtype = finding.subtype;
  e.context = finding.field("context");
  e.flags = finding.flags;
  switch (verdict.verdict) {
    case PairOutcome::Contradictory:
    case PairOutcome::Consistent:
      e.verification = Verification::Contradictory;
      break;
    case PairOutcome::Unverified:
      e.verification = Verification::Unverified;
      e.flags.emplace_back(flags::kUnverified);
      break;
    case PairOutcome::NotRequired:
      e.verification = Verification::NotRequired;
      break;
  }

  EvidenceChain chain;
  chain.reasoning = e.context;
  chain.conclusion = e.subtype;
  chain.evidence.push_back({document.slice(e.fact_anchor), e.fact_anchor});

  if (auto contra = finding.contradiction_quote()) {
    e.contradiction_quote = *contra;
    const auto loc = finding.field("contradiction_location");
    if (!loc.empty()) e.contradiction_location = loc;
    e.contradiction_anchor = document.try_anchor(*contra, policy);
    if (e.contradiction_anchor) {
      chain.evidence.push_back({document.slice(*e.contradiction_anchor), *e.contradiction_anchor});
    } else {
      e.flags.emplace_back(flags::kContradictionUnanchored);
    }
  }
  std::sort(e.flags.begin(), e.flags.end());
  e.flags.erase(std::unique(e.flags.begin(), e.flags.end()), e.flags.end());
  return {std::move(e), std::move(chain)};
}

std::pair<ErrorInstance, EvidenceChain> build_evidence_chain(const RawFinding& finding,
                                                             const Story& story) {
  return build_evidence_chain(finding, AnchoredDocument(story.text));
}

std::vector<std::pair<ErrorInstance, EvidenceChain>> dedup_findings(
    std::vector<std::pair<ErrorInstance, EvidenceChain>> results) {
  std::vector<std::pair<ErrorInstance, EvidenceChain>> out;
  for (auto& r : results) {
    const bool dup = std::any_of(out.begin(), out.end(), [&](const auto& kept) {
      return kept.first.subtype == r.first.subtype &&
             span_overlap(kept.first.fact_anchor, r.first.fact_anchor);
    });
    if (!dup) out.push_back(std::move(r));
  }
  return out;
}

ConsistencyReport assemble_report(const Story& story,
                                  std::vector<std::pair<ErrorInstance, EvidenceChain>> results,
                                  std::vector<Diagnostic> diagnostics,
                                  const std::string& judge_model, const std::string& created_at) {
  std::stable_sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
    if (a.first.fact_anchor.start != b.first.fact_anchor.start) {
      return a.first.fact_anchor.start < b.first.fact_anchor.start;
    }
    return index_of(a.first.subtype) < index_of(b.first.subtype);
  });
  ConsistencyReport report;
  report.story_id = story.id;
  report.judge_model = judge_model;
  report.created_at = created_at.empty() ? now_rfc3339() : created_at;
  report.pipeline_version = std::string(kPipelineVersion);
  for (auto& [e, c] : results) {
    report.errors.push_back(std::move(e));
    report.chains.push_back(std::move(c));
  }
  report.diagnostics = std::move(diagnostics);
  return report;
}

Checker::Checker(std::shared_ptr<Backend> judge, CheckerOptions options)
    : judge_(std::move(judge)), options_(std::move(options)) {
  if (!judge_) throw InvalidArgument("checker needs a judge backend");
}

ConsistencyReport Checker::check(const Story& story) const {
  const auto created_at = options_.created_at.empty() ? now_rfc3339() : options_.created_at;
  if (story.refused || story.word_count == 0) {
    return assemble_report(story, {},
                           {{"input", "", story.refused ? "story was refused by the generator"
                                                        : "story is empty"}},
                           judge_->id(), created_at);
  }
  const AnchoredDocument doc(story.text);
  if (options_.max_story_chars > 0 && doc.length() > options_.max_story_chars) {
    throw InvalidArgument("story " + story.id + " has " + std::to_string(doc.length()) +
                          " characters, above the judge limit of " +
                          std::to_string(options_.max_story_chars));
  }

  auto extraction = run_extraction(story, *judge_, options_);
  auto diagnostics = std::move(extraction.diagnostics);
  const auto paired = pair_contradictions(extraction.findings, story, *judge_, options_, &diagnostics);

  std::vector<std::pair<ErrorInstance, EvidenceChain>> results;
  for (const auto& [finding, verdict] : paired) {
    try {
      results.push_back(build_evidence_chain(finding, doc, verdict, options_.anchor));
    } catch (const AnchorNotFound& e) {
      diagnostics.push_back({"anchoring", std::string(category_key(finding.category)),
                             std::string("discarded: ") + e.what()});
      spdlog::info("story {}: {}", story.id, e.what());
    }
  }
  return assemble_report(story, dedup_findings(std::move(results)), std::move(diagnostics),
                         judge_->id(), created_at);
}

}  // namespace constory
