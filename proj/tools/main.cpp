#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

namespace cli = constory::cli;

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("constory"));
  spdlog::set_pattern("%^%l%$: %v");

  CLI::App app{"Consistency-error evaluation harness for long-form story generation"};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Errors only");

  cli::Options o;
  int (*command)(const cli::Options&) = nullptr;

  auto add_config = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--config", o.config, "Backend configuration (JSON)");
    if (required) opt->required();
  };
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output directory")->required();
    sub->add_option("--seed", o.seed, "Seed recorded in the manifest and used by seeded steps");
    sub->add_option("--timestamp", o.timestamp, "RFC 3339 time stamped into artifacts");
  };

  auto* gen = app.add_subcommand("generate", "Generate one story per prompt per model");
  add_config(gen, true);
  add_common(gen);
  gen->add_option("--corpus", o.corpus, "Prompts JSONL")->required();
  gen->add_option("--model", o.models, "Generation backend (repeatable)");
  gen->add_flag("--logprobs", o.logprobs, "Request token log-probabilities");
  gen->callback([&] { command = cli::cmd_generate; });

  auto* check = app.add_subcommand("check", "Run the consistency checker over stories");
  add_config(check, true);
  add_common(check);
  check->add_option("--corpus", o.corpus, "Stories JSONL")->required();
  check->add_option("--model", o.models, "Only stories of this model (repeatable)");
  check->add_option("--judge", o.judge, "Judge backend (default: config \"judge\")");
  check->add_flag("--force", o.force, "Recheck stories that already have a report");
  check->add_option("--limit", o.limit, "Stop after this many new reports");
  check->callback([&] { command = cli::cmd_check; });

  auto* score = app.add_subcommand("score", "Leaderboard from stories and reports");
  add_config(score, false);
  add_common(score);
  score->add_option("--corpus", o.corpus, "Stories JSONL")->required();
  score->add_option("--reports", o.reports, "Directory written by check (default: --out)");
  score->add_option("--model", o.models, "Only this model (repeatable)");
  score->callback([&] { command = cli::cmd_score; });

  auto* analyze = app.add_subcommand("analyze", "Correlation, position, length and uncertainty tables");
  add_config(analyze, false);
  add_common(analyze);
  analyze->add_option("--corpus", o.corpus, "Stories JSONL")->required();
  analyze->add_option("--reports", o.reports, "Directory written by check (default: --out)");
  analyze->add_option("--model", o.models, "Only this model (repeatable)");
  analyze->callback([&] { command = cli::cmd_analyze; });

  auto* validate = app.add_subcommand("validate", "Score the checker against planted errors");
  add_config(validate, false);
  add_common(validate);
  validate->add_option("--corpus", o.corpus, "Clean stories JSONL to inject errors into");
  validate->add_flag("--fixtures", o.fixtures, "Use the bundled fixture stories and truth");
  validate->add_option("--judge", o.judge,
                       "Judge: truth, empty, fixture, or a configured backend (default: truth)");
  validate->add_option("--plan", o.plan, "Injection plan, e.g. memory_contradiction:1,duration_error:2");
  validate->add_option("--injector", o.injector, "Backend for subtypes without a template");
  validate->add_flag("--strict-subtype-match", o.strict_subtype_match, "Require the exact subtype");
  validate->add_flag("--force", o.force, "Recheck stories that already have a report");
  validate->callback([&] { command = cli::cmd_validate; });

  auto* dd = app.add_subcommand("dedup", "Drop near-duplicate prompts");
  add_common(dd);
  dd->add_option("--corpus", o.corpus, "Prompts JSONL")->required();
  dd->add_option("--threshold", o.threshold, "Similarity threshold")->check(CLI::Range(0.0, 1.0));
  dd->callback([&] { command = cli::cmd_dedup; });

  auto* fx = app.add_subcommand("fixtures", "List or export the bundled fixtures");
  fx->add_option("--out", o.out, "Export directory; without it the fixtures are listed");
  fx->callback([&] {
    command = o.out.empty() ? [](const cli::Options&) { return cli::cmd_fixtures_list(); }
                            : cli::cmd_fixtures_export;
  });

  CLI11_PARSE(app, argc, argv);
  if (verbose) spdlog::set_level(spdlog::level::debug);
  if (quiet) spdlog::set_level(spdlog::level::err);
  return cli::run(command, o);
}
