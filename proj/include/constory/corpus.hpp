#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "constory/domain.hpp"

namespace constory {

// Number of maximal runs of non-whitespace code points (Unicode White_Space).
std::size_t word_count(std::string_view text);

struct WordRange {
  std::size_t min = 8000;
  std::size_t max = 10000;
  friend bool operator==(const WordRange&, const WordRange&) = default;
};

struct PromptRecord {
  std::string id;
  TaskType task_type = TaskType::Generation;
  std::string prompt_text;
  WordRange target_length;
  std::string source;

  friend bool operator==(const PromptRecord&, const PromptRecord&) = default;
};

// JSONL corpus files. Readers skip blank lines and report the 1-based line
// number of malformed records in the thrown ParseFailure.
std::vector<PromptRecord> read_prompts(const std::filesystem::path& path);
void write_prompts(const std::filesystem::path& path, const std::vector<PromptRecord>& records);
std::vector<Story> read_stories(const std::filesystem::path& path);
void write_stories(const std::filesystem::path& path, const std::vector<Story>& stories);

PromptRecord prompt_from_json_line(std::string_view line);
std::string prompt_to_json_line(const PromptRecord& record);

// ---------------------------------------------------------------------------
// MinHash near-duplicate detection over word shingles.

struct MinHashParams {
  std::size_t shingle_k = 5;
  std::size_t num_hashes = 128;
  std::uint64_t seed = 0x5eed;
};

struct MinHashSignature {
  std::vector<std::uint64_t> hashes;
  std::size_t shingle_k = 5;
  std::size_t num_hashes = 128;

  friend bool operator==(const MinHashSignature&, const MinHashSignature&) = default;
};

// Lowercased (ASCII) whitespace-separated tokens joined into k-word shingles.
// Texts shorter than k words produce a single whole-text shingle; empty text
// produces none.
std::vector<std::string> word_shingles(std::string_view text, std::size_t k);

MinHashSignature minhash_signature(std::string_view text, const MinHashParams& params = {});

// Fraction of agreeing signature positions. Throws InvalidArgument when the
// signatures were built with different parameters.
double similarity_estimate(const MinHashSignature& a, const MinHashSignature& b);

struct DedupOptions {
  double threshold = 0.8;
  MinHashParams minhash;
  std::size_t bands = 32;  // LSH bands; num_hashes must be divisible by bands
};

struct DroppedPair {
  std::string kept_id;
  std::string dropped_id;
  double estimate = 0.0;
};

struct DedupResult {
  std::vector<PromptRecord> kept;
  std::vector<DroppedPair> dropped;
};

// Walks records in input order; a record is dropped when its signature
// estimate against an earlier kept record reaches the threshold. Candidates
// come from LSH banding; when banding could miss a qualifying pair at the
// configured threshold, all kept records are compared instead.
DedupResult dedup(const std::vector<PromptRecord>& records, const DedupOptions& options = {});

void write_dropped_pairs_csv(const std::filesystem::path& path,
                             const std::vector<DroppedPair>& pairs);

}  // namespace constory
