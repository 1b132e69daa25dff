#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "constory/corpus.hpp"
#include "constory/errors.hpp"
#include "constory/textio.hpp"
#include "constory/utf8.hpp"

namespace constory {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a; stable across platforms and standard library versions.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t bin_of(std::uint64_t h, std::size_t bins) {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(h) * bins) >> 64);
}

}  // namespace

std::vector<std::string> word_shingles(std::string_view text, std::size_t k) {
  if (k == 0) throw InvalidArgument("shingle width must be positive");
  std::vector<std::string> words;
  std::u32string cur;
  for (char32_t c : utf8::decode(text)) {
    if (utf8::is_space(c)) {
      if (!cur.empty()) words.push_back(utf8::encode(cur));
      cur.clear();
    } else {
      cur.push_back(utf8::fold_ascii(c));
    }
  }
  if (!cur.empty()) words.push_back(utf8::encode(cur));

  std::vector<std::string> out;
  if (words.empty()) return out;
  const std::size_t width = std::min(k, words.size());
  for (std::size_t i = 0; i + width <= words.size(); ++i) {
    std::string s = words[i];
    for (std::size_t j = 1; j < width; ++j) s += ' ' + words[i + j];
    out.push_back(std::move(s));
  }
  return out;
}

// One hash function split into num_hashes equal bins, each keeping its
// minimum. Empty bins copy a non-empty bin picked by a probe sequence that
// depends only on the seed and bin index, so any two texts densify alike.
MinHashSignature minhash_signature(std::string_view text, const MinHashParams& params) {
  if (params.num_hashes == 0) throw InvalidArgument("num_hashes must be positive");
  const auto k = params.num_hashes;
  MinHashSignature sig;
  sig.shingle_k = params.shingle_k;
  sig.num_hashes = k;
  constexpr auto kEmpty = std::numeric_limits<std::uint64_t>::max();
  sig.hashes.assign(k, kEmpty);

  const auto salt = splitmix64(params.seed);
  std::vector<bool> filled(k, false);
  for (const auto& s : word_shingles(text, params.shingle_k)) {
    const auto h = splitmix64(fnv1a(s) ^ salt);
    const auto b = bin_of(h, k);
    sig.hashes[b] = std::min(sig.hashes[b], h);
    filled[b] = true;
  }
  if (std::find(filled.begin(), filled.end(), true) == filled.end()) return sig;

  for (std::size_t j = 0; j < k; ++j) {
    if (filled[j]) continue;
    for (std::uint64_t attempt = 0;; ++attempt) {
      const auto probe = bin_of(splitmix64(salt ^ splitmix64((static_cast<std::uint64_t>(j) << 32) | attempt)), k);
      if (filled[probe]) {
        sig.hashes[j] = sig.hashes[probe];
        break;
      }
    }
  }
  return sig;
}

double similarity_estimate(const MinHashSignature& a, const MinHashSignature& b) {
  if (a.shingle_k != b.shingle_k || a.num_hashes != b.num_hashes ||
      a.hashes.size() != b.hashes.size()) {
    throw InvalidArgument("signatures were built with different parameters");
  }
  if (a.hashes.empty()) return 0.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.hashes.size(); ++i) same += a.hashes[i] == b.hashes[i];
  return static_cast<double>(same) / static_cast<double>(a.hashes.size());
}

DedupResult dedup(const std::vector<PromptRecord>& records, const DedupOptions& options) {
  const auto n_hashes = options.minhash.num_hashes;
  if (options.bands == 0 || n_hashes % options.bands != 0) {
    throw InvalidArgument("num_hashes must be divisible by the number of bands");
  }
  if (options.threshold <= 0.0 || options.threshold > 1.0) {
    throw InvalidArgument("dedup threshold must be in (0, 1]");
  }
  const std::size_t rows = n_hashes / options.bands;
  // A pair at or above the threshold disagrees on at most
  // floor((1 - t) * n) positions; with fewer disagreements than bands, at
  // least one band agrees entirely and banding cannot miss it.
  const auto max_disagree =
      static_cast<std::size_t>(std::floor((1.0 - options.threshold) * static_cast<double>(n_hashes) + 1e-9));
  const bool exhaustive = max_disagree >= options.bands;

  std::vector<MinHashSignature> sigs;
  sigs.reserve(records.size());
  for (const auto& r : records) sigs.push_back(minhash_signature(r.prompt_text, options.minhash));

  DedupResult result;
  std::vector<std::size_t> kept_idx;
  std::vector<std::unordered_map<std::uint64_t, std::vector<std::size_t>>> buckets(options.bands);
  auto band_key = [&](const MinHashSignature& s, std::size_t band) {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (std::size_t r = 0; r < rows; ++r) h = splitmix64(h ^ s.hashes[band * rows + r]);
    return h;
  };

  for (std::size_t i = 0; i < records.size(); ++i) {
    std::vector<std::size_t> candidates;
    if (exhaustive) {
      candidates = kept_idx;
    } else {
      for (std::size_t b = 0; b < options.bands; ++b) {
        auto it = buckets[b].find(band_key(sigs[i], b));
        if (it != buckets[b].end()) candidates.insert(candidates.end(), it->second.begin(), it->second.end());
      }
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    }
    std::optional<std::size_t> best;
    double best_est = 0.0;
    for (auto c : candidates) {
      const double est = similarity_estimate(sigs[c], sigs[i]);
      if (est + 1e-12 >= options.threshold && (!best || est > best_est)) {
        best = c;
        best_est = est;
      }
    }
    if (best) {
      result.dropped.push_back({records[*best].id, records[i].id, best_est});
      continue;
    }
    kept_idx.push_back(i);
    result.kept.push_back(records[i]);
    if (!exhaustive) {
      for (std::size_t b = 0; b < options.bands; ++b) buckets[b][band_key(sigs[i], b)].push_back(i);
    }
  }
  return result;
}

void write_dropped_pairs_csv(const std::filesystem::path& path,
                             const std::vector<DroppedPair>& pairs) {
  std::string out = "kept_id,dropped_id,estimate\n";
  for (const auto& p : pairs) {
    out += textio::csv_row({p.kept_id, p.dropped_id, textio::fixed(p.estimate, 6)});
  }
  textio::write_file(path, out);
}

}  // namespace constory
