// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Everything runs offline against the bundled fixtures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "constory/analysis.hpp"
#include "constory/anchor.hpp"
#include "constory/corpus.hpp"
#include "constory/errors.hpp"
#include "constory/fixtures.hpp"
#include "constory/metrics.hpp"
#include "constory/textio.hpp"
#include "constory/utf8.hpp"
#include "constory/validation.hpp"

using namespace constory;
namespace fs = std::filesystem;

namespace {

// Collects failed checks for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    ++count_;
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s.precision(10);
    s << what << ": got " << got << ", want " << want << " +/- " << tol;
    expect(std::abs(got - want) <= tol, s.str());
  }
  bool ok() const { return failed_ == 0; }
  std::size_t count() const { return count_; }
  std::size_t failed() const { return failed_; }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::size_t count_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
};

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("constory-acceptance-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

// ---------------------------------------------------------------------------

void criterion_ced(Check& c) {
  const auto rs = numeric_fixture("ced_example");
  c.expect(rs.size() == 5, "five stories");
  const std::size_t words[] = {8000, 10000, 6000, 8000, 800};
  const std::size_t errors[] = {2, 3, 1, 0, 0};
  for (std::size_t i = 0; i < rs.size() && i < 5; ++i) {
    c.expect(rs[i].words == words[i] && rs[i].errors == errors[i], "story " + std::to_string(i + 1) + " shape");
  }
  const auto s = aggregate_model(rs, {});
  c.near(s.ced_pooled, 1.83, 0.01, "pooled CED");
  c.near(s.per_category_ced[index_of(ErrorCategory::TimelinePlotLogic)], 0.61, 0.005, "CED Time");
  c.near(s.per_category_ced[index_of(ErrorCategory::Characterization)], 0.30, 0.005, "CED Char");

  // The same numbers through stories and reports.
  std::vector<StoryResult> via_reports;
  for (const auto& [story, report] : materialize_numeric_fixture("ced_example")) {
    via_reports.push_back(story_result(story, report));
  }
  const auto board = build_leaderboard(via_reports);
  c.expect(board.rows.size() == 1, "one leaderboard row");
  if (!board.rows.empty()) c.near(board.rows[0].ced_pooled, s.ced_pooled, 1e-12, "leaderboard pooled CED");
}

// Average position over every ordering of the group consistent with
// descending Q.
std::map<std::string, double> exhaustive_ranks(const std::vector<std::pair<std::string, double>>& group) {
  std::vector<std::size_t> order(group.size());
  std::iota(order.begin(), order.end(), 0);
  std::map<std::string, double> sum;
  double n = 0;
  do {
    bool sorted = true;
    for (std::size_t i = 1; i < order.size(); ++i) sorted &= group[order[i - 1]].second >= group[order[i]].second;
    if (!sorted) continue;
    ++n;
    for (std::size_t i = 0; i < order.size(); ++i) sum[group[order[i]].first] += static_cast<double>(i + 1);
  } while (std::next_permutation(order.begin(), order.end()));
  for (auto& [m, v] : sum) v /= n;
  return sum;
}

void criterion_grr(Check& c) {
  c.near(quality_score(8000, 0), 8000.0, 0.0, "Q(8000,0)");
  c.near(quality_score(800, 0), 800.0, 0.0, "Q(800,0)");
  const auto g = grr(make_groups(numeric_fixture("grr_example")));
  c.near(g.at("model-a"), 1.0, 0.0, "rank of the 8000-word story");
  c.near(g.at("model-b"), 2.0, 0.0, "rank of the 800-word story");

  // Three models on two stories, including a tie.
  struct Row {
    const char* model;
    const char* prompt;
    std::size_t words, errors;
  };
  const Row rows[] = {{"m1", "s1", 8000, 0}, {"m2", "s1", 800, 0}, {"m3", "s1", 9000, 2},
                      {"m1", "s2", 6000, 1}, {"m2", "s2", 9000, 2}, {"m3", "s2", 4000, 0}};
  std::vector<StoryResult> rs;
  std::map<std::string, std::vector<std::pair<std::string, double>>> groups;
  for (const auto& r : rows) {
    StoryResult s;
    s.model = r.model;
    s.prompt_id = r.prompt;
    s.story_id = std::string(r.model) + "/" + r.prompt;
    s.words = r.words;
    s.errors = r.errors;
    rs.push_back(s);
    groups[r.prompt].emplace_back(r.model, static_cast<double>(r.words) / (1.0 + static_cast<double>(r.errors)));
  }
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& [prompt, group] : groups) {
    for (const auto& [m, rank] : exhaustive_ranks(group)) {
      acc[m].first += rank;
      ++acc[m].second;
    }
  }
  const auto got = grr(make_groups(rs));
  for (const auto& [m, v] : acc) c.near(got.at(m), v.first / v.second, 1e-12, "GRR " + m);
}

void criterion_validation(Check& c) {
  const auto t = score(1000, 622, 550);
  c.near(t.precision, 0.884, 0.001, "precision");
  c.near(t.recall, 0.550, 0.001, "recall");
  c.near(t.f1, 0.678, 0.001, "F1");
  struct Row {
    ErrorCategory cat;
    std::size_t gt, pred, tp;
    double r, p, f1;
  };
  const Row rows[] = {{ErrorCategory::Characterization, 200, 126, 121, 0.605, 0.960, 0.742},
                      {ErrorCategory::FactualDetailConsistency, 200, 148, 125, 0.625, 0.845, 0.718},
                      {ErrorCategory::NarrativeStyle, 200, 76, 70, 0.350, 0.921, 0.507},
                      {ErrorCategory::TimelinePlotLogic, 200, 147, 120, 0.600, 0.816, 0.692},
                      {ErrorCategory::WorldBuildingSetting, 200, 125, 114, 0.570, 0.912, 0.702}};
  ValidationTally tally;
  for (const auto& r : rows) tally.add_counts(r.cat, r.gt, r.pred, r.tp);
  const auto v = tally.result();
  for (const auto& r : rows) {
    const auto& s = v.per_category[index_of(r.cat)];
    const std::string name(category_key(r.cat));
    c.near(s.recall, r.r, 0.001, name + " recall");
    c.near(s.precision, r.p, 0.001, name + " precision");
    c.near(s.f1, r.f1, 0.001, name + " F1");
  }
  c.expect(v.total.gt == 1000 && v.total.pred == 622 && v.total.tp == 550, "summed counts");
  c.near(v.total.f1, 0.678, 0.001, "tally F1");
}

void criterion_entropy(Check& c) {
  std::vector<TokenCandidate> uniform(4, {"t", std::log(0.25)});
  c.near(shannon_entropy(uniform), 2.0, 1e-12, "uniform K=4");
  c.near(shannon_entropy(std::vector<TokenCandidate>{{"t", 0.0}}), 0.0, 0.0, "degenerate");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1e-9, 1.0);
  std::size_t violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t k = 1 + rng() % 20;
    std::vector<TokenCandidate> cand;
    for (std::size_t j = 0; j < k; ++j) cand.push_back({"t", std::log(u(rng))});
    if (shannon_entropy(cand) > std::log2(static_cast<double>(k)) + 1e-12) ++violations;
  }
  c.expect(violations == 0, std::to_string(violations) + " distributions exceed log2 K");

  for (int iter = 0; iter < 100; ++iter) {
    std::vector<TraceToken> tokens;
    double log_sum_inverse = 0.0;
    const std::size_t n = 1 + rng() % 50;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = u(rng) * 0.999 + 0.001;
      tokens.push_back({"x", 0, 0, std::log(p), {{"x", std::log(p)}}});
      log_sum_inverse += std::log(1.0 / p);
    }
    const auto seg = segment_uncertainty(make_trace(std::move(tokens), 1));
    const double geometric = std::exp(log_sum_inverse / static_cast<double>(n));
    c.near(seg.ppl_exp, geometric, 1e-9 * geometric, "ppl_exp vs geometric mean");
  }
}

void criterion_uncertainty(Check& c) {
  SegmentUncertainty whole;
  whole.mean_entropy = 1.1438;
  whole.mean_probability = 0.7097;
  whole.token_count = 1000;
  SegmentUncertainty error;
  error.mean_entropy = 1.2814;
  error.mean_probability = 0.6530;
  error.token_count = 40;
  const SegmentUncertainty errors[] = {error};
  const auto cmp = uncertainty_comparison(whole, errors);
  c.near(cmp.entropy_diff, 12.03, 0.01, "entropy diff");
  c.near(cmp.probability_diff, -7.99, 0.01, "probability diff");
}

void criterion_anchoring(Check& c) {
  const std::vector<std::string> vocab = {
      "the", "river", "lantern", "quiet", "harbour", "stone", "winter", "letter", "mother", "road",
      "crowded", "silver", "bridge", "morning", "distant", "garden", "orchard", "captain", "whisper",
      "shadow", "copper", "market", "violin", "meadow", "thunder", "candle", "engine", "sparrow"};
  auto run = [&](std::uint64_t seed) {
    std::vector<std::tuple<std::size_t, std::size_t, double>> out;
    std::mt19937_64 rng(seed);
    std::size_t exact_fail = 0, fuzzy_fail = 0;
    for (int i = 0; i < 1000; ++i) {
      std::string doc;
      for (int w = 0, n = 80 + static_cast<int>(rng() % 120); w < n; ++w) {
        doc += (w ? (rng() % 9 == 0 ? ".  " : " ") : "") + vocab[rng() % vocab.size()];
      }
      const auto d32 = utf8::decode(doc);
      const std::size_t len = 25 + rng() % 60;
      const std::size_t start = rng() % (d32.size() - len);
      const auto source = d32.substr(start, len);
      const AnchoredDocument ad(doc);

      // Exact: the anchored text equals the quote up to whitespace.
      const auto quote = utf8::encode(source);
      const auto q_norm = normalize_whitespace(source);
      if (q_norm.empty()) continue;
      const auto a = ad.try_anchor(quote);
      if (!a || a->match_score != 1.0 || normalize_whitespace(utf8::decode(ad.slice(*a))) != q_norm) {
        ++exact_fail;
      }
      if (a) out.emplace_back(a->start, a->end, a->match_score);

      // Mutated: at most 10% of the characters edited.
      auto mutated = source;
      const std::size_t edits = 1 + rng() % std::max<std::size_t>(1, len / 10);
      for (std::size_t e = 0; e < edits && !mutated.empty(); ++e) {
        const auto pos = rng() % mutated.size();
        const char32_t ch = U"abcdefghijklmnopqrstuvwxyz"[rng() % 26];
        switch (rng() % 3) {
          case 0: mutated[pos] = ch; break;
          case 1: mutated.erase(pos, 1); break;
          default: mutated.insert(pos, 1, ch);
        }
      }
      const auto b = ad.try_anchor(utf8::encode(mutated));
      if (!b || !span_overlap(*b, {start, start + len, 1.0})) ++fuzzy_fail;
      if (b) out.emplace_back(b->start, b->end, b->match_score);
    }
    c.expect(exact_fail == 0, std::to_string(exact_fail) + " exact quotes not anchored exactly");
    c.expect(fuzzy_fail == 0, std::to_string(fuzzy_fail) + " mutated quotes missed their source");
    return out;
  };
  const auto first = run(606);
  const auto second = run(606);
  c.expect(first == second, "anchoring is deterministic across reruns");
}

void criterion_pipeline(Check& c) {
  TempDir dir;
  cli::Options e;
  e.out = dir.path / "fx";
  c.expect(cli::run(cli::cmd_fixtures_export, e) == cli::kOk, "fixtures export");

  cli::Options o;
  o.config = e.out / "config.json";
  o.corpus = e.out / "stories.jsonl";
  o.out = dir.path / "check";
  o.timestamp = kFixtureCreatedAt;
  c.expect(cli::run(cli::cmd_check, o) == cli::kOk, "check exits 0");
  for (const auto& name : list_fixtures()) {
    const auto path = o.out / "reports" / cli::report_file_name(name);
    const bool same = fs::exists(path) && textio::read_file(path) == load_fixture(name).expected_report_text;
    c.expect(same, name + ": report differs from the expected bytes");
  }

  auto total_row = [](const fs::path& out) {
    const auto csv = textio::read_file(out / "validation.csv");
    const auto pos = csv.find("\nTotal,");
    return pos == std::string::npos ? std::string{} : csv.substr(pos + 1, csv.find('\n', pos + 1) - pos - 1);
  };
  for (const char* judge : {"truth", "fixture"}) {
    cli::Options v;
    v.fixtures = true;
    v.judge = judge;
    v.out = dir.path / (std::string("validate-") + judge);
    v.timestamp = kFixtureCreatedAt;
    c.expect(cli::run(cli::cmd_validate, v) == cli::kOk, std::string(judge) + " judge exits 0");
    const auto row = total_row(v.out);
    c.expect(row.size() > 6 && row.substr(row.size() - 6) == ",1.000", std::string(judge) + " judge F1: " + row);
  }
  cli::Options v;
  v.fixtures = true;
  v.judge = "empty";
  v.out = dir.path / "validate-empty";
  v.timestamp = kFixtureCreatedAt;
  c.expect(cli::run(cli::cmd_validate, v) == cli::kOk, "empty judge exits 0");
  const auto row = total_row(v.out);
  // Total,gt,pred,tp,recall,precision,f1
  std::vector<std::string> cells;
  std::stringstream ss(row);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  c.expect(cells.size() == 7 && cells[4] == "0.000", "empty judge recall: " + row);
}

void criterion_positions(Check& c) {
  const std::vector<PositionRecord> recs = {
      make_position_record({100, 110, 1.0}, SpanAnchor{400, 420, 1.0}, 1000),
      make_position_record({300, 310, 1.0}, SpanAnchor{200, 230, 1.0}, 1000)};
  const auto s = positional_stats(recs);
  c.near(s.avg_fact, 20.0, 1e-12, "avg_fact");
  c.near(s.avg_contradiction.value_or(-1), 30.0, 1e-12, "avg_contradiction");
  c.near(s.avg_gap.value_or(-1), 20.0, 1e-12, "avg_gap");

  // Fixture reports against positions computed by hand from their anchors.
  std::vector<SubtypedPosition> all;
  std::map<ErrorSubtype, std::vector<std::array<double, 3>>> by_hand;
  for (const auto& name : list_fixtures()) {
    const auto& f = load_fixture(name);
    const double len = static_cast<double>(utf8::length(f.story.text));
    for (const auto& p : positions_from_report(f.expected_report, utf8::length(f.story.text))) all.push_back(p);
    for (const auto& e : f.expected_report.errors) {
      if (!e.contradiction_anchor) continue;
      const double fact = 100.0 * static_cast<double>(e.fact_anchor.start) / len;
      const double con = 100.0 * static_cast<double>(e.contradiction_anchor->start) / len;
      by_hand[e.subtype].push_back({fact, con, std::abs(fact - con)});
    }
  }
  for (const auto& [subtype, rows] : by_hand) {
    std::array<double, 3> mean{};
    for (const auto& r : rows) {
      for (int k = 0; k < 3; ++k) mean[k] += r[k] / static_cast<double>(rows.size());
    }
    const auto got = positional_stats(all, subtype);
    const std::string name(schema_key(subtype));
    c.near(got.avg_fact, mean[0], 1e-9, name + " avg_fact");
    c.near(got.avg_contradiction.value_or(-1), mean[1], 1e-9, name + " avg_contradiction");
    c.near(got.avg_gap.value_or(-1), mean[2], 1e-9, name + " avg_gap");
  }

  const auto csv = positional_table_csv(all);
  std::vector<std::string> lines;
  std::stringstream ss(csv);
  for (std::string line; std::getline(ss, line);) lines.push_back(line);
  std::string header = "metric";
  for (auto st : kPositionalTableSubtypes) header += "," + std::string(display_name(st));
  c.expect(lines.size() == 4, "table has a header and three rows");
  c.expect(!lines.empty() && lines[0] == header, "table columns follow the seven positional subtypes");
  const char* labels[] = {"Avg Fact,", "Avg Contradiction,", "Avg Gap,"};
  for (std::size_t i = 0; i < 3 && i + 1 < lines.size(); ++i) {
    c.expect(lines[i + 1].rfind(labels[i], 0) == 0, std::string("row ") + labels[i]);
    c.expect(std::count(lines[i + 1].begin(), lines[i + 1].end(), ',') == 7, "row width");
  }
}

void criterion_pearson(Check& c) {
  const double x[] = {0, 1, 2, 3};
  const double y[] = {1, 3, 2, 4};
  const auto r = pearson(x, y);
  c.expect(r.has_value(), "r defined");
  if (r) c.near(*r, 0.8, 1e-9, "closed form r");

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> scale(0.1, 10.0), shift(-50, 50);
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<std::array<double, kCategoryCount>> rows(5 + rng() % 40);
    for (auto& row : rows) {
      for (auto& v : row) v = static_cast<double>(rng() % 7);
    }
    const auto m = pearson_matrix(rows);
    std::array<double, kCategoryCount> a{}, b{};
    for (std::size_t k = 0; k < kCategoryCount; ++k) {
      a[k] = scale(rng) * (rng() % 2 ? 1 : -1);
      b[k] = shift(rng);
    }
    auto affine = rows;
    for (auto& row : affine) {
      for (std::size_t k = 0; k < kCategoryCount; ++k) row[k] = a[k] * row[k] + b[k];
    }
    const auto ma = pearson_matrix(affine);
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
      for (std::size_t j = 0; j < kCategoryCount; ++j) {
        const auto& v = m.r[i][j];
        c.expect(v.has_value() == m.r[j][i].has_value() && (!v || *v == *m.r[j][i]), "symmetry");
        if (i == j && v) c.near(*v, 1.0, 1e-12, "unit diagonal");
        if (v && ma.r[i][j]) {
          const double sign = (a[i] > 0) == (a[j] > 0) ? 1.0 : -1.0;
          c.near(*ma.r[i][j], sign * *v, 1e-9, "affine invariance");
        } else {
          c.expect(v.has_value() == ma.r[i][j].has_value(), "affine keeps constant columns constant");
        }
      }
    }
  }
}

std::set<std::string> shingle_set(const std::string& text, std::size_t k) {
  std::istringstream in(text);
  std::vector<std::string> toks;
  for (std::string t; in >> t;) toks.push_back(t);
  std::set<std::string> out;
  for (std::size_t i = 0; i + k <= toks.size(); ++i) {
    std::string s;
    for (std::size_t j = i; j < i + k; ++j) s += toks[j] + " ";
    out.insert(s);
  }
  return out;
}

void criterion_minhash(Check& c) {
  std::mt19937_64 rng(17);
  auto random_words = [&](std::size_t n) {
    std::vector<std::string> w;
    for (std::size_t i = 0; i < n; ++i) w.push_back("t" + std::to_string(rng() % 4000));
    return w;
  };
  auto join = [](const std::vector<std::string>& w) {
    std::string s;
    for (const auto& x : w) s += (s.empty() ? "" : " ") + x;
    return s;
  };
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    // Shared prefix of varying length, independent tails.
    const auto a = random_words(200);
    auto b = std::vector<std::string>(a.begin(), a.begin() + (200 * i) / 49);
    const auto tail = random_words(200 - b.size());
    b.insert(b.end(), tail.begin(), tail.end());
    const auto sa = shingle_set(join(a), 5);
    const auto sb = shingle_set(join(b), 5);
    std::size_t inter = 0;
    for (const auto& s : sa) inter += sb.count(s);
    const double jac = static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
    const double est = similarity_estimate(minhash_signature(join(a)), minhash_signature(join(b)));
    worst = std::max(worst, std::abs(est - jac));
    c.expect(std::abs(est - jac) <= 0.1, "pair " + std::to_string(i) + ": estimate " + std::to_string(est) +
                                             " vs Jaccard " + std::to_string(jac));
  }

  std::vector<PromptRecord> records;
  for (int i = 0; i < 40; ++i) {
    PromptRecord p;
    p.id = "p" + std::to_string(i);
    p.prompt_text = join(random_words(150));
    records.push_back(p);
  }
  auto dup = records[11];
  dup.id = "p11-near";
  dup.prompt_text += " and then it rained";
  records.push_back(dup);
  const auto r = dedup(records);
  c.expect(r.dropped.size() == 1 && r.dropped[0].kept_id == "p11" && r.dropped[0].dropped_id == "p11-near",
           "planted near-duplicate uniquely detected");
  const auto again = dedup(r.kept);
  c.expect(again.dropped.empty() && again.kept == r.kept, "dedup is idempotent");
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"CED worked example", criterion_ced},
      {"GRR worked example and brute-force ranks", criterion_grr},
      {"validation scorer arithmetic", criterion_validation},
      {"entropy kernel", criterion_entropy},
      {"uncertainty comparison arithmetic", criterion_uncertainty},
      {"anchoring properties", criterion_anchoring},
      {"end-to-end mock pipeline", criterion_pipeline},
      {"positional analytics", criterion_positions},
      {"Pearson matrix", criterion_pearson},
      {"MinHash estimate and dedup", criterion_minhash},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
    std::cout << (c.ok() ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << " ("
              << c.count() - c.failed() << "/" << c.count() << " checks, " << ms.count() << " ms)\n";
    for (const auto& f : c.failures()) std::cout << "     " << f << "\n";
    failed += !c.ok();
  }
  return failed == 0 ? 0 : 1;
}
