#include "constory/report_json.hpp"

#include <algorithm>

#include "constory/errors.hpp"

namespace constory {

namespace {

template <typename T>
T get_or(const ordered_json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

std::optional<std::string> optional_string(const ordered_json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

const ordered_json& require(const ordered_json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(std::string("missing required field '") + key + "'");
  return *it;
}

}  // namespace

ordered_json to_json(const SpanAnchor& anchor) {
  ordered_json j;
  j["start"] = anchor.start;
  j["end"] = anchor.end;
  j["match_score"] = anchor.match_score;
  return j;
}

SpanAnchor anchor_from_json(const ordered_json& j) {
  SpanAnchor a;
  a.start = require(j, "start").get<std::size_t>();
  a.end = require(j, "end").get<std::size_t>();
  a.match_score = get_or<double>(j, "match_score", 1.0);
  return a;
}

ordered_json to_json(const TokenTrace& trace) {
  ordered_json tokens = ordered_json::array();
  for (const auto& t : trace.tokens) {
    ordered_json tj;
    tj["token"] = t.token_text;
    tj["char_start"] = t.char_start;
    tj["char_end"] = t.char_end;
    tj["logprob"] = t.chosen_logprob;
    ordered_json cands = ordered_json::array();
    for (const auto& c : t.top_candidates) {
      cands.push_back(ordered_json{{"token", c.token_text}, {"logprob", c.logprob}});
    }
    tj["top_logprobs"] = std::move(cands);
    tokens.push_back(std::move(tj));
  }
  ordered_json j;
  j["k"] = trace.k;
  j["tokens"] = std::move(tokens);
  return j;
}

TokenTrace trace_from_json(const ordered_json& j) {
  TokenTrace trace;
  trace.k = get_or<std::size_t>(j, "k", 0);
  for (const auto& tj : require(j, "tokens")) {
    TraceToken t;
    t.token_text = require(tj, "token").get<std::string>();
    t.char_start = require(tj, "char_start").get<std::size_t>();
    t.char_end = require(tj, "char_end").get<std::size_t>();
    t.chosen_logprob = require(tj, "logprob").get<double>();
    if (auto it = tj.find("top_logprobs"); it != tj.end()) {
      for (const auto& cj : *it) {
        t.top_candidates.push_back(
            {require(cj, "token").get<std::string>(), require(cj, "logprob").get<double>()});
      }
    }
    trace.tokens.push_back(std::move(t));
  }
  return trace;
}

ordered_json to_json(const Story& story) {
  ordered_json j;
  j["id"] = story.id;
  j["prompt_id"] = story.prompt_id;
  j["source_model"] = story.source_model;
  j["task_type"] = std::string(to_string(story.task_type));
  j["word_count"] = story.word_count;
  j["refused"] = story.refused;
  j["text"] = story.text;
  if (story.token_trace) j["token_trace"] = to_json(*story.token_trace);
  return j;
}

Story story_from_json(const ordered_json& j) {
  auto story = make_story(require(j, "id").get<std::string>(),
                          get_or<std::string>(j, "text", ""),
                          get_or<std::string>(j, "source_model", ""),
                          task_type_from_string(get_or<std::string>(j, "task_type", "generation")),
                          get_or<std::string>(j, "prompt_id", ""));
  if (story.id.empty()) throw SchemaError("story id must be non-empty");
  story.refused = get_or<bool>(j, "refused", false);
  if (auto it = j.find("token_trace"); it != j.end() && !it->is_null()) {
    story.token_trace = trace_from_json(*it);
  }
  return story;
}

ordered_json to_json(const ConsistencyReport& report) {
  ordered_json j;
  j["story_id"] = report.story_id;
  j["judge_model"] = report.judge_model;
  j["created_at"] = report.created_at;
  j["pipeline_version"] = report.pipeline_version;
  j["error_count"] = report.errors.size();

  for (auto subtype : kAllSubtypes) j[std::string(array_key(subtype))] = ordered_json::array();

  for (std::size_t i = 0; i < report.errors.size(); ++i) {
    const auto& e = report.errors[i];
    ordered_json entry;
    entry["fact_quote"] = e.fact_quote;
    entry["location"] = e.location;
    entry["contradiction_pair"] =
        e.contradiction_quote ? ordered_json(*e.contradiction_quote) : ordered_json(nullptr);
    entry["contradiction_location"] =
        e.contradiction_location ? ordered_json(*e.contradiction_location) : ordered_json(nullptr);
    entry["error_element"] = e.error_element;
    entry["error_category"] = std::string(schema_key(e.subtype));
    entry["context"] = e.context;
    entry["fact_anchor"] = to_json(e.fact_anchor);
    entry["contradiction_anchor"] =
        e.contradiction_anchor ? to_json(*e.contradiction_anchor) : ordered_json(nullptr);
    entry["verification"] = std::string(to_string(e.verification));
    entry["flags"] = e.flags;

    const auto& chain = report.chains.at(i);
    ordered_json evidence = ordered_json::array();
    for (const auto& item : chain.evidence) {
      ordered_json ej;
      ej["quote"] = item.quote;
      ej["anchor"] = to_json(item.anchor);
      evidence.push_back(std::move(ej));
    }
    ordered_json cj;
    cj["reasoning"] = chain.reasoning;
    cj["evidence"] = std::move(evidence);
    cj["conclusion"] = std::string(schema_key(chain.conclusion));
    entry["evidence_chain"] = std::move(cj);

    j[std::string(array_key(e.subtype))].push_back(std::move(entry));
  }

  ordered_json diags = ordered_json::array();
  for (const auto& d : report.diagnostics) {
    diags.push_back(ordered_json{{"stage", d.stage}, {"category", d.category}, {"message", d.message}});
  }
  j["diagnostics"] = std::move(diags);
  return j;
}

ConsistencyReport report_from_json(const ordered_json& j) {
  if (!j.is_object()) throw SchemaError("report must be a JSON object");
  try {
    ConsistencyReport r;
    r.story_id = require(j, "story_id").get<std::string>();
    r.judge_model = get_or<std::string>(j, "judge_model", "");
    r.created_at = get_or<std::string>(j, "created_at", "");
    r.pipeline_version = get_or<std::string>(j, "pipeline_version", "");

    // Arrays are grouped by subtype on the wire; restore the report's
    // canonical order (fact anchor, then subtype) afterwards.
    for (auto subtype : kAllSubtypes) {
      auto it = j.find(std::string(array_key(subtype)));
      if (it == j.end()) continue;
      for (const auto& entry : *it) {
        ErrorInstance e;
        e.fact_quote = require(entry, "fact_quote").get<std::string>();
        e.location = get_or<std::string>(entry, "location", "");
        e.contradiction_quote = optional_string(entry, "contradiction_pair");
        e.contradiction_location = optional_string(entry, "contradiction_location");
        e.error_element = get_or<std::string>(entry, "error_element", "");
        e.subtype = subtype_from_key(require(entry, "error_category").get<std::string>());
        if (e.subtype != subtype) {
          throw SchemaError("entry in '" + std::string(array_key(subtype)) +
                            "' has error_category of another subtype");
        }
        e.context = get_or<std::string>(entry, "context", "");
        e.fact_anchor = anchor_from_json(require(entry, "fact_anchor"));
        if (auto a = entry.find("contradiction_anchor"); a != entry.end() && !a->is_null()) {
          e.contradiction_anchor = anchor_from_json(*a);
        }
        e.verification =
            verification_from_string(get_or<std::string>(entry, "verification", "contradictory"));
        e.flags = get_or<std::vector<std::string>>(entry, "flags", {});

        EvidenceChain chain;
        const auto& cj = require(entry, "evidence_chain");
        chain.reasoning = get_or<std::string>(cj, "reasoning", "");
        for (const auto& ej : require(cj, "evidence")) {
          chain.evidence.push_back(
              {require(ej, "quote").get<std::string>(), anchor_from_json(require(ej, "anchor"))});
        }
        chain.conclusion = subtype_from_key(require(cj, "conclusion").get<std::string>());
        r.errors.push_back(std::move(e));
        r.chains.push_back(std::move(chain));
      }
    }

    std::vector<std::size_t> order(r.errors.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto& ea = r.errors[a];
      const auto& eb = r.errors[b];
      if (ea.fact_anchor.start != eb.fact_anchor.start) {
        return ea.fact_anchor.start < eb.fact_anchor.start;
      }
      return index_of(ea.subtype) < index_of(eb.subtype);
    });
    ConsistencyReport sorted = r;
    for (std::size_t i = 0; i < order.size(); ++i) {
      sorted.errors[i] = r.errors[order[i]];
      sorted.chains[i] = r.chains[order[i]];
    }

    if (auto it = j.find("diagnostics"); it != j.end()) {
      for (const auto& d : *it) {
        sorted.diagnostics.push_back({get_or<std::string>(d, "stage", ""),
                                      get_or<std::string>(d, "category", ""),
                                      get_or<std::string>(d, "message", "")});
      }
    }
    return sorted;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed report: ") + e.what());
  } catch (const UnknownSubtype& e) {
    throw SchemaError(std::string("malformed report: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("malformed report: ") + e.what());
  }
}

std::string serialize_report(const ConsistencyReport& report) {
  return to_json(report).dump(2) + "\n";
}

ConsistencyReport parse_report(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("report is not valid JSON: ") + e.what());
  }
  return report_from_json(j);
}

}  // namespace constory
