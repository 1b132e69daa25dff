#include "constory/validation.hpp"

#include <algorithm>
#include <map>

#include "constory/anchor.hpp"
#include "constory/errors.hpp"
#include "constory/report_json.hpp"
#include "constory/textio.hpp"

namespace constory {

using json = nlohmann::ordered_json;

json to_json(const InjectedError& e) {
  json j;
  j["subtype"] = std::string(schema_key(e.subtype));
  j["original_span"] = to_json(e.original_span);
  j["corrupted_span"] = to_json(e.corrupted_span);
  j["description"] = e.description;
  j["corrupted_sentence"] = e.corrupted_sentence;
  j["reference_sentence"] = e.reference_sentence ? json(*e.reference_sentence) : json(nullptr);
  j["reference_span"] = e.reference_span ? to_json(*e.reference_span) : json(nullptr);
  return j;
}

InjectedError injected_error_from_json(const json& j) {
  InjectedError e;
  e.subtype = subtype_from_key(j.at("subtype").get<std::string>());
  e.original_span = anchor_from_json(j.at("original_span"));
  e.corrupted_span = anchor_from_json(j.at("corrupted_span"));
  e.description = j.value("description", std::string{});
  e.corrupted_sentence = j.value("corrupted_sentence", std::string{});
  if (auto it = j.find("reference_sentence"); it != j.end() && it->is_string()) {
    e.reference_sentence = it->get<std::string>();
  }
  if (auto it = j.find("reference_span"); it != j.end() && it->is_object()) {
    e.reference_span = anchor_from_json(*it);
  }
  return e;
}

std::string sidecar_json(const std::string& story_id, const std::string& source_story_id,
                         std::uint64_t seed, const InjectionResult& result) {
  json j;
  j["story_id"] = story_id;
  j["source_story_id"] = source_story_id;
  j["seed"] = seed;
  j["injected"] = json::array();
  for (const auto& e : result.injected) j["injected"].push_back(to_json(e));
  j["skipped"] = json::array();
  for (const auto& s : result.skipped) {
    j["skipped"].push_back({{"subtype", std::string(schema_key(s.subtype))}, {"reason", s.reason}});
  }
  return j.dump(2) + "\n";
}

std::pair<std::string, std::vector<InjectedError>> parse_sidecar(const std::string& text) {
  try {
    const auto j = json::parse(text);
    std::vector<InjectedError> truth;
    for (const auto& e : j.at("injected")) truth.push_back(injected_error_from_json(e));
    return {j.at("story_id").get<std::string>(), std::move(truth)};
  } catch (const json::exception& e) {
    throw SchemaError(std::string("invalid sidecar: ") + e.what());
  } catch (const UnknownSubtype& e) {
    throw SchemaError(std::string("invalid sidecar: ") + e.what());
  }
}

MockScript truth_script(const std::vector<std::pair<std::string, std::vector<InjectedError>>>& truth) {
  MockScript script;
  for (const auto& [story_id, errors] : truth) {
    std::array<json, kCategoryCount> replies;
    for (auto c : kAllCategories) replies[index_of(c)] = json::parse(empty_findings_json(c));
    for (const auto& e : errors) {
      json entry;
      entry["fact_quote"] = e.reference_sentence.value_or(e.corrupted_sentence);
      entry["location"] = "";
      entry["contradiction_pair"] =
          e.reference_sentence ? json(e.corrupted_sentence) : json(nullptr);
      entry["contradiction_location"] = "";
      entry["error_element"] = std::string(display_name(e.subtype));
      entry["error_category"] = std::string(schema_key(e.subtype));
      entry["context"] = e.description;
      replies[index_of(category_of(e.subtype))][std::string(array_key(e.subtype))].push_back(entry);
    }
    for (auto c : kAllCategories) script.extraction[{story_id, c}] = replies[index_of(c)].dump(2);
  }
  return script;
}

ScoreRow score(std::size_t gt, std::size_t pred, std::size_t tp) {
  if (tp > std::min(gt, pred)) throw InvalidArgument("tp exceeds min(gt, pred)");
  ScoreRow r{gt, pred, tp, 0.0, 0.0, 0.0};
  if (pred > 0) r.precision = static_cast<double>(tp) / static_cast<double>(pred);
  if (gt > 0) r.recall = static_cast<double>(tp) / static_cast<double>(gt);
  if (r.precision + r.recall > 0.0) r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

MatchResult match_detections(const ConsistencyReport& predicted,
                             const std::vector<InjectedError>& truth,
                             const MatchOptions& options) {
  std::vector<std::size_t> order(predicted.errors.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predicted.errors[a].fact_anchor.start < predicted.errors[b].fact_anchor.start;
  });

  MatchResult result;
  std::vector<bool> consumed(truth.size(), false);
  for (auto pi : order) {
    const auto& p = predicted.errors[pi];
    for (std::size_t ti = 0; ti < truth.size(); ++ti) {
      if (consumed[ti]) continue;
      const auto& t = truth[ti];
      if (options.strict_subtype ? p.subtype != t.subtype
                                 : category_of(p.subtype) != category_of(t.subtype)) {
        continue;
      }
      bool hit = span_overlap(p.fact_anchor, t.corrupted_span) ||
                 (p.contradiction_anchor && span_overlap(*p.contradiction_anchor, t.corrupted_span));
      if (!hit && !t.corrupted_sentence.empty()) {
        hit = text_similarity(p.fact_quote, t.corrupted_sentence) >= options.quote_similarity ||
              (p.contradiction_quote &&
               text_similarity(*p.contradiction_quote, t.corrupted_sentence) >= options.quote_similarity);
      }
      if (!hit) continue;
      consumed[ti] = true;
      ++result.tp;
      ++result.tp_by_category[index_of(category_of(t.subtype))];
      result.pairs.emplace_back(pi, ti);
      break;
    }
  }
  return result;
}

void ValidationTally::add(const ConsistencyReport& predicted, const std::vector<InjectedError>& truth,
                          const MatchOptions& options) {
  const auto m = match_detections(predicted, truth, options);
  for (const auto& t : truth) ++gt_[index_of(category_of(t.subtype))];
  for (const auto& e : predicted.errors) ++pred_[index_of(category_of(e.subtype))];
  for (std::size_t c = 0; c < kCategoryCount; ++c) tp_[c] += m.tp_by_category[c];
}

void ValidationTally::add_counts(ErrorCategory category, std::size_t gt, std::size_t pred,
                                 std::size_t tp) {
  gt_[index_of(category)] += gt;
  pred_[index_of(category)] += pred;
  tp_[index_of(category)] += tp;
}

ValidationScore ValidationTally::result() const {
  ValidationScore s;
  std::size_t gt = 0, pred = 0, tp = 0;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    const auto tpc = tp_[c];
    s.per_category[c] = score(gt_[c], pred_[c], tpc);
    gt += gt_[c];
    pred += pred_[c];
    tp += tpc;
  }
  s.total = score(gt, pred, tp);
  return s;
}

namespace {

// Table order follows the short labels alphabetically, as in the published
// validation table.
constexpr std::array<ErrorCategory, kCategoryCount> kTableOrder = {
    ErrorCategory::Characterization, ErrorCategory::FactualDetailConsistency,
    ErrorCategory::NarrativeStyle, ErrorCategory::TimelinePlotLogic,
    ErrorCategory::WorldBuildingSetting};

std::vector<std::string> row_cells(const std::string& label, const ScoreRow& r) {
  return {label,
          std::to_string(r.gt),
          std::to_string(r.pred),
          std::to_string(r.tp),
          textio::fixed(r.recall, 3),
          textio::fixed(r.precision, 3),
          textio::fixed(r.f1, 3)};
}

}  // namespace

std::string validation_csv(const ValidationScore& score) {
  std::string out = textio::csv_row({"error_category", "gt", "pred", "tp", "recall", "precision", "f1"});
  for (auto c : kTableOrder) {
    out += textio::csv_row(row_cells(std::string(display_name(c)), score.per_category[index_of(c)]));
  }
  out += textio::csv_row(row_cells("Total", score.total));
  return out;
}

std::string validation_markdown(const ValidationScore& score) {
  std::string out = "| Error Category | GT | Pred | TP | Recall | Prec | F1 |\n|---|---:|---:|---:|---:|---:|---:|\n";
  auto line = [](const std::vector<std::string>& cells) {
    std::string s = "|";
    for (const auto& c : cells) s += " " + c + " |";
    return s + "\n";
  };
  for (auto c : kTableOrder) {
    out += line(row_cells(std::string(display_name(c)), score.per_category[index_of(c)]));
  }
  out += line(row_cells("**Total**", score.total));
  return out;
}

}  // namespace constory
