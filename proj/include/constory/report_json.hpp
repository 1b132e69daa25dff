#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "constory/domain.hpp"

// JSON wire formats for stories, token traces and consistency reports.
//
// A report is a single object whose keys are, in order: story metadata, the
// nineteen per-subtype arrays of the judge schema (grouped by category, in
// taxonomy order), then "diagnostics". Each array entry carries the judge
// fields (fact_quote, location, contradiction_pair, contradiction_location,
// error_element, error_category, context) followed by the anchors and the
// evidence chain added by the harness.
namespace constory {

using ordered_json = nlohmann::ordered_json;

ordered_json to_json(const SpanAnchor& anchor);
SpanAnchor anchor_from_json(const nlohmann::ordered_json& j);

ordered_json to_json(const TokenTrace& trace);
TokenTrace trace_from_json(const nlohmann::ordered_json& j);

ordered_json to_json(const Story& story);
Story story_from_json(const nlohmann::ordered_json& j);

ordered_json to_json(const ConsistencyReport& report);
ConsistencyReport report_from_json(const nlohmann::ordered_json& j);  // throws SchemaError

// Serialized text form used for report files: two-space indent plus a
// trailing newline. Deterministic for equal reports.
std::string serialize_report(const ConsistencyReport& report);
ConsistencyReport parse_report(std::string_view text);

}  // namespace constory
