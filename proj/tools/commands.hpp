#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace constory::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kBackendExhausted = 3,
  kEmptyInput = 4,
};

struct Options {
  std::filesystem::path config;
  std::filesystem::path corpus;
  std::filesystem::path out;
  std::filesystem::path reports;  // score/analyze: directory written by check (default: out)
  std::vector<std::string> models;
  std::string judge;
  bool force = false;
  std::uint64_t seed = 0;
  bool strict_subtype_match = false;
  std::string timestamp;  // RFC 3339; empty: SOURCE_DATE_EPOCH, else now
  bool logprobs = false;  // generate: request token traces
  std::optional<std::size_t> limit;  // check: stop after this many new reports
  double threshold = 0.8;            // dedup
  bool fixtures = false;             // validate: use the bundled fixtures
  std::string plan;                  // validate: "subtype:count,..."
  std::string injector;              // validate: backend for subtypes without a template
};

// Each command writes its artifacts under options.out and returns an exit
// code. Library exceptions propagate; run() maps them to exit codes.
int cmd_generate(const Options& options);
int cmd_check(const Options& options);
int cmd_score(const Options& options);
int cmd_analyze(const Options& options);
int cmd_validate(const Options& options);
int cmd_dedup(const Options& options);
int cmd_fixtures_list();
int cmd_fixtures_export(const Options& options);

// Calls command(options), logging any exception and mapping it to an exit
// code: ConfigError and AuthError 2, BackendUnavailable 3, EmptyResultSet 4,
// anything else 1.
int run(int (*command)(const Options&), const Options& options);

// File name used for a story's report under <out>/reports/.
std::string report_file_name(const std::string& story_id);

std::string sha256_hex(std::string_view data);

}  // namespace constory::cli
