#include "commands.hpp"

#include <cstdlib>
#include <ctime>
#include <iostream>
#include <map>
#include <regex>
#include <set>

#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "constory/analysis.hpp"
#include "constory/checker.hpp"
#include "constory/corpus.hpp"
#include "constory/errors.hpp"
#include "constory/fixtures.hpp"
#include "constory/llmclient.hpp"
#include "constory/metrics.hpp"
#include "constory/parallel.hpp"
#include "constory/report_json.hpp"
#include "constory/textio.hpp"
#include "constory/utf8.hpp"
#include "constory/validation.hpp"

namespace constory::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using textio::csv_row;
using textio::fixed;

namespace {

std::string resolve_timestamp(const Options& options) {
  if (!options.timestamp.empty()) {
    static const std::regex rfc3339(R"(^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:\d{2})$)");
    if (!std::regex_match(options.timestamp, rfc3339)) {
      throw ConfigError("--timestamp must be RFC 3339, e.g. 2026-01-01T00:00:00Z");
    }
    return options.timestamp;
  }
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    try {
      return format_rfc3339(std::stoll(epoch));
    } catch (const std::exception&) {
      throw ConfigError("SOURCE_DATE_EPOCH is not an integer");
    }
  }
  return format_rfc3339(static_cast<long long>(std::time(nullptr)));
}

void require_path(const fs::path& p, const char* flag) {
  if (p.empty()) throw ConfigError(std::string(flag) + " is required");
}

HarnessConfig load(const Options& options) {
  require_path(options.config, "--config");
  return load_config(options.config);
}

struct Manifest {
  std::string command;
  std::vector<fs::path> inputs;
  std::vector<std::string> outputs;  // relative to out
  std::vector<std::string> notices;
};

void write_manifest(const Options& options, const Manifest& m, const std::string& timestamp) {
  json j;
  j["command"] = m.command;
  j["pipeline_version"] = std::string(kPipelineVersion);
  j["created_at"] = timestamp;
  j["seed"] = options.seed;
  if (!options.config.empty()) {
    j["config"] = {{"path", options.config.string()},
                   {"sha256", sha256_hex(textio::read_file(options.config))}};
  }
  json inputs = json::array();
  for (const auto& p : m.inputs) {
    inputs.push_back({{"path", p.string()}, {"sha256", sha256_hex(textio::read_file(p))}});
  }
  j["inputs"] = std::move(inputs);
  auto outputs = m.outputs;
  std::sort(outputs.begin(), outputs.end());
  j["outputs"] = outputs;
  j["notices"] = m.notices;
  textio::write_file(options.out / (m.command + ".manifest.json"), j.dump(2) + "\n");
}

std::vector<Story> filter_models(std::vector<Story> stories, const std::vector<std::string>& models) {
  if (models.empty()) return stories;
  const std::set<std::string> wanted(models.begin(), models.end());
  std::erase_if(stories, [&](const Story& s) { return !wanted.count(s.source_model); });
  return stories;
}

// Stories paired with their reports. Refused and empty stories get an empty
// report; stories whose report is missing are skipped with a warning.
struct LoadedRun {
  std::vector<Story> stories;
  std::vector<ConsistencyReport> reports;
  std::vector<StoryResult> results;
  std::size_t missing = 0;
};

LoadedRun load_run(const Options& options) {
  require_path(options.corpus, "--corpus");
  const fs::path dir = options.reports.empty() ? options.out : options.reports;
  LoadedRun run;
  for (auto& story : filter_models(read_stories(options.corpus), options.models)) {
    ConsistencyReport report;
    report.story_id = story.id;
    if (!story.refused && story.word_count > 0) {
      const auto path = dir / "reports" / report_file_name(story.id);
      if (!fs::exists(path)) {
        spdlog::warn("no report for story {} ({})", story.id, path.string());
        ++run.missing;
        continue;
      }
      report = parse_report(textio::read_file(path));
      if (report.story_id != story.id) {
        throw SchemaError(path.string() + " belongs to story " + report.story_id);
      }
    }
    run.results.push_back(story_result(story, report));
    run.stories.push_back(std::move(story));
    run.reports.push_back(std::move(report));
  }
  if (run.results.empty()) throw EmptyResultSet("no scored stories in " + options.corpus.string());
  return run;
}

std::vector<std::string> models_in_order(const std::vector<Story>& stories) {
  std::vector<std::string> models;
  for (const auto& s : stories) {
    if (std::find(models.begin(), models.end(), s.source_model) == models.end()) {
      models.push_back(s.source_model);
    }
  }
  return models;
}

// Runs the checker over stories, writing one report file per story and an
// index in corpus order. Existing reports are reused unless force is set.
struct CheckRun {
  std::vector<ConsistencyReport> reports;  // empty story_id when failed
  std::size_t exhausted = 0;
  std::size_t failed = 0;
  std::size_t limited = 0;
};

CheckRun check_stories(const std::vector<Story>& stories, const Checker& checker, const fs::path& out,
                       bool force, std::optional<std::size_t> limit) {
  CheckRun run;
  json::array_t index;
  std::size_t fresh = 0;
  for (const auto& story : stories) {
    const auto rel = fs::path("reports") / report_file_name(story.id);
    const auto path = out / rel;
    json line;
    line["story_id"] = story.id;
    line["model"] = story.source_model;
    line["report"] = rel.generic_string();

    std::optional<ConsistencyReport> report;
    if (!force && fs::exists(path)) {
      try {
        auto existing = parse_report(textio::read_file(path));
        if (existing.story_id == story.id) report = std::move(existing);
      } catch (const Error& e) {
        spdlog::warn("{}: unreadable report, rechecking ({})", path.string(), e.what());
      }
    }
    std::string failure;
    if (!report) {
      if (limit && fresh >= *limit) {
        ++run.limited;
        run.reports.emplace_back();
        continue;
      }
      ++fresh;
      try {
        report = checker.check(story);
        textio::write_file(path, serialize_report(*report));
      } catch (const AuthError&) {
        throw;
      } catch (const BackendUnavailable& e) {
        ++run.exhausted;
        failure = e.what();
      } catch (const Error& e) {
        failure = e.what();
      }
    }
    if (report) {
      line["status"] = "ok";
      line["error_count"] = report->errors.size();
      line["diagnostic_count"] = report->diagnostics.size();
      run.reports.push_back(*report);
    } else {
      ++run.failed;
      spdlog::error("story {}: {}", story.id, failure);
      line["status"] = "failed";
      line["message"] = failure;
      run.reports.emplace_back();
    }
    index.push_back(std::move(line));
  }
  std::string text;
  for (const auto& line : index) text += line.dump() + "\n";
  textio::write_file(out / "index.jsonl", text);
  return run;
}

std::shared_ptr<Backend> configured_backend(const HarnessConfig& config, const std::string& name) {
  return make_backend(config.backend(name), config.base_dir);
}

std::size_t configured_parallel(const HarnessConfig& config, const std::string& name) {
  return config.backend(name).max_parallel;
}

// "subtype:count,subtype:count"; empty: one of each templated subtype.
InjectionPlan parse_plan(const std::string& text) {
  InjectionPlan plan;
  if (text.empty()) {
    for (auto s : kAllSubtypes) {
      if (has_template_injector(s)) plan.emplace_back(s, 1);
    }
    return plan;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    const auto item = text.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.empty()) continue;
    const auto colon = item.find(':');
    std::size_t count = 1;
    std::string key = item.substr(0, colon);
    if (colon != std::string::npos) {
      try {
        count = std::stoul(item.substr(colon + 1));
      } catch (const std::exception&) {
        throw ConfigError("bad count in --plan item '" + item + "'");
      }
    }
    try {
      plan.emplace_back(subtype_from_key(key), count);
    } catch (const UnknownSubtype& e) {
      throw ConfigError(e.what());
    }
  }
  return plan;
}

std::string merged_fixture_script() {
  json merged = {{"seed", 0}, {"extraction", json::array()}, {"verification", json::array()}};
  for (const auto& name : list_fixtures()) {
    const auto j = json::parse(load_fixture(name).judge_script_json);
    for (const auto& key : {"extraction", "verification"}) {
      for (const auto& e : j.value(key, json::array())) merged[key].push_back(e);
    }
  }
  return merged.dump(2) + "\n";
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string report_file_name(const std::string& story_id) {
  std::string safe;
  for (char c : story_id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    safe += ok ? c : '_';
  }
  if (safe.empty() || safe.front() == '.') safe.insert(safe.begin(), '_');
  if (safe != story_id) {
    // Keep distinct ids distinct after sanitizing.
    std::uint32_t h = 2166136261u;
    for (unsigned char c : story_id) h = (h ^ c) * 16777619u;
    char buf[10];
    std::snprintf(buf, sizeof buf, "-%08x", h);
    safe += buf;
  }
  return safe + ".json";
}

// ---------------------------------------------------------------------------

int cmd_generate(const Options& options) {
  const auto config = load(options);
  require_path(options.corpus, "--corpus");
  require_path(options.out, "--out");
  const auto timestamp = resolve_timestamp(options);
  const auto prompts = read_prompts(options.corpus);
  if (prompts.empty()) {
    spdlog::error("no prompts in {}", options.corpus.string());
    return kEmptyInput;
  }
  const auto models = options.models.empty() ? config.generation : options.models;
  if (models.empty()) throw ConfigError("no generation backend: pass --model or set \"generation\"");

  std::vector<Story> stories;
  std::string failures = csv_row({"model", "prompt_id", "error"});
  std::size_t exhausted = 0;
  for (const auto& model : models) {
    const auto backend = configured_backend(config, model);
    std::vector<std::optional<Story>> out(prompts.size());
    std::vector<std::string> errors(prompts.size());
    const auto thrown = parallel_for(prompts.size(), configured_parallel(config, model), [&](std::size_t i) {
      const auto& p = prompts[i];
      auto req = ChatRequest::generation_defaults();
      req.user_prompt = p.prompt_text;
      req.want_logprobs = options.logprobs && backend->supports_logprobs();
      req.tags[tags::kStage] = tags::kStageGeneration;
      req.tags[tags::kPromptId] = p.id;
      Story story;
      story.id = model + "/" + p.id;
      story.prompt_id = p.id;
      story.source_model = model;
      story.task_type = p.task_type;
      try {
        auto resp = chat_complete(req, *backend);
        story.text = std::move(resp.text);
        story.word_count = word_count(story.text);
        story.token_trace = std::move(resp.token_trace);
      } catch (const ContentRefused&) {
        story.refused = true;
      }
      out[i] = std::move(story);
    });
    for (std::size_t i = 0; i < prompts.size(); ++i) {
      if (thrown[i]) {
        try {
          std::rethrow_exception(thrown[i]);
        } catch (const AuthError&) {
          throw;
        } catch (const BackendUnavailable& e) {
          ++exhausted;
          errors[i] = e.what();
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
        spdlog::error("{} / {}: {}", model, prompts[i].id, errors[i]);
        failures += csv_row({model, prompts[i].id, errors[i]});
        continue;
      }
      stories.push_back(std::move(*out[i]));
    }
  }
  write_stories(options.out / "stories.jsonl", stories);
  textio::write_file(options.out / "generation_failures.csv", failures);
  write_manifest(options, {"generate", {options.corpus}, {"stories.jsonl", "generation_failures.csv"}, {}},
                 timestamp);
  spdlog::info("generated {} stories ({} refused)", stories.size(),
               std::count_if(stories.begin(), stories.end(), [](const Story& s) { return s.refused; }));
  return exhausted > 0 ? kBackendExhausted : kOk;
}

int cmd_check(const Options& options) {
  const auto config = load(options);
  require_path(options.corpus, "--corpus");
  require_path(options.out, "--out");
  const auto timestamp = resolve_timestamp(options);
  const auto judge_name = options.judge.empty() ? config.judge : options.judge;
  if (judge_name.empty()) throw ConfigError("no judge backend: pass --judge or set \"judge\"");
  const auto stories = filter_models(read_stories(options.corpus), options.models);

  CheckerOptions copts;
  copts.created_at = timestamp;
  copts.max_parallel = configured_parallel(config, judge_name);
  const Checker checker(configured_backend(config, judge_name), copts);
  const auto run = check_stories(stories, checker, options.out, options.force, options.limit);

  Manifest m{"check", {options.corpus}, {"index.jsonl"}, {}};
  for (std::size_t i = 0; i < stories.size(); ++i) {
    if (!run.reports[i].story_id.empty()) {
      m.outputs.push_back("reports/" + report_file_name(stories[i].id));
    }
  }
  if (run.limited > 0) m.notices.push_back(std::to_string(run.limited) + " stories left for a later run");
  write_manifest(options, m, timestamp);
  spdlog::info("checked {} stories: {} failed, {} deferred", stories.size(), run.failed, run.limited);
  return run.exhausted > 0 ? kBackendExhausted : kOk;
}

int cmd_score(const Options& options) {
  require_path(options.out, "--out");
  const auto timestamp = resolve_timestamp(options);
  const auto run = load_run(options);
  const auto board = build_leaderboard(run.results);

  std::string metrics = csv_row({"story_id", "model", "prompt_id", "task_type", "words", "errors",
                                 "ced", "quality", "ced_time", "ced_char", "ced_world", "ced_fact",
                                 "ced_narr"});
  for (const auto& r : run.results) {
    std::vector<std::string> row = {r.story_id, r.model, r.prompt_id, std::string(to_string(r.task_type)),
                                    std::to_string(r.words), std::to_string(r.errors)};
    if (r.words == 0) {
      for (int i = 0; i < 7; ++i) row.emplace_back("NA");
    } else {
      const auto rec = metric_record(r);
      row.push_back(fixed(rec.ced, 4));
      row.push_back(fixed(rec.quality, 4));
      for (double c : ced_category(r.per_category_errors, r.words)) row.push_back(fixed(c, 4));
    }
    metrics += csv_row(row);
  }
  textio::write_file(options.out / "leaderboard.csv", leaderboard_csv(board));
  textio::write_file(options.out / "leaderboard.md", leaderboard_markdown(board));
  textio::write_file(options.out / "task_breakdown.csv", task_breakdown_csv(board));
  textio::write_file(options.out / "task_breakdown.md", task_breakdown_markdown(board));
  textio::write_file(options.out / "story_metrics.csv", metrics);
  Manifest m{"score", {options.corpus},
             {"leaderboard.csv", "leaderboard.md", "task_breakdown.csv", "task_breakdown.md",
              "story_metrics.csv"},
             {}};
  if (run.missing > 0) m.notices.push_back(std::to_string(run.missing) + " stories had no report");
  write_manifest(options, m, timestamp);
  return kOk;
}

int cmd_analyze(const Options& options) {
  require_path(options.out, "--out");
  const auto timestamp = resolve_timestamp(options);
  const auto run = load_run(options);
  Manifest m{"analyze", {options.corpus}, {}, {}};
  auto emit = [&](const std::string& name, const std::string& text) {
    textio::write_file(options.out / name, text);
    m.outputs.push_back(name);
  };

  // Category co-occurrence over completed stories.
  std::vector<std::array<double, kCategoryCount>> rows;
  for (const auto& r : run.results) {
    if (r.words == 0) continue;
    std::array<double, kCategoryCount> row{};
    for (std::size_t c = 0; c < kCategoryCount; ++c) row[c] = static_cast<double>(r.per_category_errors[c]);
    rows.push_back(row);
  }
  if (rows.size() >= 2) {
    emit("correlation.csv", correlation_csv(pearson_matrix(rows)));
  } else {
    m.notices.push_back("correlation skipped: fewer than two completed stories");
  }

  // Positions.
  std::vector<SubtypedPosition> positions;
  std::string pos_csv = csv_row({"story_id", "model", "subtype", "fact_pos", "contradiction_pos", "gap"});
  for (std::size_t i = 0; i < run.stories.size(); ++i) {
    const auto& story = run.stories[i];
    if (run.results[i].words == 0) continue;
    for (const auto& p : positions_from_report(run.reports[i], utf8::length(story.text))) {
      pos_csv += csv_row({story.id, story.source_model, std::string(schema_key(p.subtype)),
                          fixed(p.record.fact_pos, 4),
                          p.record.contradiction_pos ? fixed(*p.record.contradiction_pos, 4) : "NA",
                          p.record.gap ? fixed(*p.record.gap, 4) : "NA"});
      positions.push_back(p);
    }
  }
  emit("positions.csv", pos_csv);
  emit("positional_table.csv", positional_table_csv(positions));
  emit("positional_table.md", positional_table_markdown(positions));

  // Error count by length bin, per model and overall.
  std::string curve = csv_row({"model", "bin", "mean_errors", "sample_count"});
  const auto models = models_in_order(run.stories);
  auto add_curve = [&](const std::string& label, const std::vector<StoryResult>& subset) {
    for (const auto& p : length_error_curve(subset)) {
      curve += csv_row({label, std::string(to_string(p.bin)), fixed(p.mean_errors, 4),
                        std::to_string(p.sample_count)});
    }
  };
  for (const auto& model : models) {
    std::vector<StoryResult> subset;
    for (const auto& r : run.results) {
      if (r.model == model) subset.push_back(r);
    }
    add_curve(model, subset);
  }
  add_curve("all", run.results);
  emit("length_curve.csv", curve);

  // Token uncertainty of error spans against whole stories.
  std::string unc = csv_row({"model", "segment", "tokens", "mean_entropy", "mean_probability", "ppl_exp",
                             "ppl_mean_inverse", "mean_coverage"});
  std::string diff = csv_row({"model", "entropy_diff_pct", "probability_diff_pct", "ppl_exp_diff_pct",
                              "ppl_mean_inverse_diff_pct"});
  std::string dumbbell = csv_row({"model", "metric", "whole", "error"});
  std::size_t traced = 0;
  auto seg_row = [&](const std::string& model, const char* segment, const SegmentUncertainty& s) {
    unc += csv_row({model, segment, std::to_string(s.token_count), fixed(s.mean_entropy, 4),
                    fixed(s.mean_probability, 4), fixed(s.ppl_exp, 4), fixed(s.ppl_mean_inverse, 4),
                    fixed(s.mean_coverage, 4)});
  };
  for (const auto& model : models) {
    std::vector<SegmentUncertainty> wholes;
    std::vector<SegmentUncertainty> errors;
    for (std::size_t i = 0; i < run.stories.size(); ++i) {
      const auto& story = run.stories[i];
      if (story.source_model != model || !story.token_trace || story.token_trace->tokens.empty()) continue;
      ++traced;
      wholes.push_back(segment_uncertainty(*story.token_trace));
      for (const auto& e : run.reports[i].errors) {
        const auto& span = e.contradiction_anchor ? *e.contradiction_anchor : e.fact_anchor;
        try {
          errors.push_back(segment_uncertainty(*story.token_trace, span));
        } catch (const EmptySegment&) {
        }
      }
    }
    if (wholes.empty()) continue;
    const auto whole = pool_segments(wholes);
    seg_row(model, "whole", whole);
    if (errors.empty()) continue;
    const auto cmp = uncertainty_comparison(whole, errors);
    seg_row(model, "error", cmp.error);
    diff += csv_row({model, fixed(cmp.entropy_diff, 2), fixed(cmp.probability_diff, 2),
                     fixed(cmp.ppl_exp_diff, 2), fixed(cmp.ppl_mean_inverse_diff, 2)});
    const std::pair<const char*, std::pair<double, double>> metrics[] = {
        {"entropy", {cmp.whole.mean_entropy, cmp.error.mean_entropy}},
        {"probability", {cmp.whole.mean_probability, cmp.error.mean_probability}},
        {"ppl_exp", {cmp.whole.ppl_exp, cmp.error.ppl_exp}},
        {"ppl_mean_inverse", {cmp.whole.ppl_mean_inverse, cmp.error.ppl_mean_inverse}}};
    for (const auto& [name, v] : metrics) {
      dumbbell += csv_row({model, name, fixed(v.first, 4), fixed(v.second, 4)});
    }
  }
  if (traced > 0) {
    emit("uncertainty.csv", unc);
    emit("uncertainty_diff.csv", diff);
    emit("uncertainty_dumbbell.csv", dumbbell);
  } else {
    const std::string notice = "uncertainty skipped: no stories carry token traces";
    spdlog::info("{}", notice);
    m.notices.push_back(notice);
  }
  write_manifest(options, m, timestamp);
  return kOk;
}

int cmd_validate(const Options& options) {
  require_path(options.out, "--out");
  const auto timestamp = resolve_timestamp(options);
  std::optional<HarnessConfig> config;
  if (!options.config.empty()) config = load_config(options.config);
  Manifest m{"validate", {}, {"validation.csv", "validation.md", "matches.csv", "index.jsonl"}, {}};

  std::vector<Story> stories;
  std::vector<std::vector<InjectedError>> truth;
  if (options.fixtures) {
    for (const auto& name : list_fixtures()) {
      const auto& f = load_fixture(name);
      stories.push_back(f.story);
      truth.push_back(f.truth);
    }
  } else {
    require_path(options.corpus, "--corpus (or --fixtures)");
    m.inputs.push_back(options.corpus);
    const auto plan = parse_plan(options.plan);
    std::shared_ptr<Backend> injector;
    if (!options.injector.empty()) {
      if (!config) throw ConfigError("--injector needs --config");
      injector = configured_backend(*config, options.injector);
    }
    const auto clean = read_stories(options.corpus);
    if (clean.empty()) {
      spdlog::error("no stories in {}", options.corpus.string());
      return kEmptyInput;
    }
    for (std::size_t i = 0; i < clean.size(); ++i) {
      const auto seed = options.seed + i;
      auto result = inject_errors(clean[i], plan, seed, injector.get());
      for (const auto& s : result.skipped) {
        spdlog::info("{}: skipped {}: {}", clean[i].id, schema_key(s.subtype), s.reason);
      }
      const auto rel = "injected/truth/" + report_file_name(clean[i].id);
      textio::write_file(options.out / rel, sidecar_json(result.story.id, clean[i].id, seed, result));
      m.outputs.push_back(rel);
      stories.push_back(result.story);
      truth.push_back(std::move(result.injected));
    }
    write_stories(options.out / "injected" / "stories.jsonl", stories);
    m.outputs.push_back("injected/stories.jsonl");
  }

  const std::string judge_name = options.judge.empty() ? "truth" : options.judge;
  std::shared_ptr<Backend> judge;
  std::size_t parallel = 8;
  if (judge_name == "truth") {
    std::vector<std::pair<std::string, std::vector<InjectedError>>> items;
    for (std::size_t i = 0; i < stories.size(); ++i) items.emplace_back(stories[i].id, truth[i]);
    judge = mock_judge(truth_script(items), "truth");
  } else if (judge_name == "empty") {
    judge = mock_judge(MockScript{}, "empty");
  } else if (judge_name == "fixture") {
    if (!options.fixtures) throw ConfigError("--judge fixture needs --fixtures");
    judge = mock_judge(MockScript::from_json(merged_fixture_script()), kFixtureJudge);
  } else {
    if (!config) throw ConfigError("--judge " + judge_name + " needs --config");
    judge = configured_backend(*config, judge_name);
    parallel = configured_parallel(*config, judge_name);
  }

  CheckerOptions copts;
  copts.created_at = timestamp;
  copts.max_parallel = parallel;
  const Checker checker(judge, copts);
  const auto run = check_stories(stories, checker, options.out, options.force, std::nullopt);

  MatchOptions mopts;
  mopts.strict_subtype = options.strict_subtype_match;
  ValidationTally tally;
  std::string matches = csv_row({"story_id", "truth_index", "subtype", "matched"});
  for (std::size_t i = 0; i < stories.size(); ++i) {
    if (run.reports[i].story_id.empty()) continue;  // failed check; reported in the index
    tally.add(run.reports[i], truth[i], mopts);
    const auto mr = match_detections(run.reports[i], truth[i], mopts);
    std::vector<bool> hit(truth[i].size(), false);
    for (const auto& [p, t] : mr.pairs) hit[t] = true;
    for (std::size_t t = 0; t < truth[i].size(); ++t) {
      matches += csv_row({stories[i].id, std::to_string(t), std::string(schema_key(truth[i][t].subtype)),
                          hit[t] ? "1" : "0"});
    }
    m.outputs.push_back("reports/" + report_file_name(stories[i].id));
  }
  const auto result = tally.result();
  textio::write_file(options.out / "validation.csv", validation_csv(result));
  textio::write_file(options.out / "validation.md", validation_markdown(result));
  textio::write_file(options.out / "matches.csv", matches);
  write_manifest(options, m, timestamp);
  spdlog::info("validation: gt {} pred {} tp {} precision {:.3f} recall {:.3f} f1 {:.3f}",
               result.total.gt, result.total.pred, result.total.tp, result.total.precision,
               result.total.recall, result.total.f1);
  return run.exhausted > 0 ? kBackendExhausted : kOk;
}

int cmd_dedup(const Options& options) {
  require_path(options.corpus, "--corpus");
  require_path(options.out, "--out");
  const auto timestamp = resolve_timestamp(options);
  const auto prompts = read_prompts(options.corpus);
  if (prompts.empty()) {
    spdlog::error("no prompts in {}", options.corpus.string());
    return kEmptyInput;
  }
  DedupOptions dopts;
  dopts.threshold = options.threshold;
  dopts.minhash.seed ^= options.seed;
  const auto result = dedup(prompts, dopts);
  write_prompts(options.out / "kept.jsonl", result.kept);
  write_dropped_pairs_csv(options.out / "dropped_pairs.csv", result.dropped);
  write_manifest(options, {"dedup", {options.corpus}, {"kept.jsonl", "dropped_pairs.csv"}, {}}, timestamp);
  spdlog::info("dedup: kept {}, dropped {}", result.kept.size(), result.dropped.size());
  return kOk;
}

int cmd_fixtures_list() {
  for (const auto& name : list_fixtures()) {
    std::cout << name << "\t" << load_fixture(name).description << "\n";
  }
  for (const auto& name : list_numeric_fixtures()) std::cout << name << "\t(numeric)\n";
  return kOk;
}

int cmd_fixtures_export(const Options& options) {
  require_path(options.out, "--out");
  const auto& out = options.out;
  std::vector<Story> stories;
  std::vector<Story> clean;
  for (const auto& name : list_fixtures()) {
    const auto& f = load_fixture(name);
    stories.push_back(f.story);
    auto source = f.story;
    source.text = f.source_text;
    source.word_count = word_count(source.text);
    clean.push_back(std::move(source));
    const InjectionResult truth{f.story, f.truth, {}};
    textio::write_file(out / "truth" / report_file_name(name), sidecar_json(name, name, 0, truth));
    textio::write_file(out / "expected_reports" / report_file_name(name), f.expected_report_text);
  }
  write_stories(out / "stories.jsonl", stories);
  write_stories(out / "clean_stories.jsonl", clean);
  textio::write_file(out / "judge_script.json", merged_fixture_script());
  json config = {{"backends", json::array({{{"name", kFixtureJudge},
                                            {"type", "mock"},
                                            {"script", "judge_script.json"}}})},
                 {"judge", kFixtureJudge},
                 {"generation", json::array()}};
  textio::write_file(out / "config.json", config.dump(2) + "\n");

  for (const auto& name : list_numeric_fixtures()) {
    std::vector<Story> nstories;
    for (auto& [story, report] : materialize_numeric_fixture(name)) {
      textio::write_file(out / "numeric" / name / "reports" / report_file_name(story.id),
                         serialize_report(report));
      nstories.push_back(std::move(story));
    }
    write_stories(out / "numeric" / name / "stories.jsonl", nstories);
  }
  return kOk;
}

int run(int (*command)(const Options&), const Options& options) {
  try {
    return command(options);
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return kConfigError;
  } catch (const AuthError& e) {
    spdlog::error("authentication failed: {}", e.what());
    return kConfigError;
  } catch (const BackendUnavailable& e) {
    spdlog::error("backend unavailable: {}", e.what());
    return kBackendExhausted;
  } catch (const EmptyResultSet& e) {
    spdlog::error("{}", e.what());
    return kEmptyInput;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
}

}  // namespace constory::cli
