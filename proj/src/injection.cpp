#include <algorithm>
#include <cctype>
#include <map>
#include <random>
#include <regex>

#include <json.hpp>

#include "constory/checker.hpp"
#include "constory/corpus.hpp"
#include "constory/errors.hpp"
#include "constory/utf8.hpp"
#include "constory/validation.hpp"

namespace constory {

namespace {

using Range = std::pair<std::size_t, std::size_t>;  // half-open, code points

std::wstring widen(std::string_view utf8_text) {
  const auto u = utf8::decode(utf8_text);
  return std::wstring(u.begin(), u.end());
}

std::string narrow(std::wstring_view w) {
  return utf8::encode(std::u32string(w.begin(), w.end()));
}

bool overlaps(const Range& a, const Range& b) {
  return std::max(a.first, b.first) < std::min(a.second, b.second);
}

bool is_terminal(wchar_t c) { return c == L'.' || c == L'!' || c == L'?'; }
bool is_closer(wchar_t c) {
  return c == L'"' || c == L'\'' || c == L')' || c == 0x201D || c == 0x2019;
}

// Sentence containing pos: bounded by terminal punctuation (plus closing
// quotes) followed by whitespace, or by a line break.
Range sentence_at(const std::wstring& t, std::size_t pos) {
  std::size_t b = pos;
  while (b > 0) {
    const wchar_t c = t[b - 1];
    if (c == L'\n') break;
    if (utf8::is_space(c) && b >= 2) {
      std::size_t k = b - 1;
      while (k > 0 && utf8::is_space(t[k - 1]) && t[k - 1] != L'\n') --k;
      std::size_t q = k;
      while (q > 0 && is_closer(t[q - 1])) --q;
      if (q > 0 && is_terminal(t[q - 1])) {
        b = k + (b - k);
        break;
      }
    }
    --b;
  }
  while (b < t.size() && utf8::is_space(t[b])) ++b;
  std::size_t e = std::max(pos, b);
  while (e < t.size()) {
    const wchar_t c = t[e];
    if (c == L'\n') break;
    if (is_terminal(c)) {
      ++e;
      while (e < t.size() && (is_terminal(t[e]) || is_closer(t[e]))) ++e;
      if (e == t.size() || utf8::is_space(t[e])) break;
      continue;
    }
    ++e;
  }
  while (e > b && utf8::is_space(t[e - 1])) --e;
  return {b, e};
}

std::wstring lower(std::wstring s) {
  for (auto& c : s) c = static_cast<wchar_t>(utf8::fold_ascii(c));
  return s;
}

std::wstring match_case(const std::wstring& like, std::wstring word) {
  if (!like.empty() && !word.empty() && like[0] >= L'A' && like[0] <= L'Z' && word[0] >= L'a' &&
      word[0] <= L'z') {
    word[0] = static_cast<wchar_t>(word[0] - L'a' + L'A');
  }
  return word;
}

struct Hook {
  Range edit;                // replaced range in the current text
  std::wstring replacement;  // new text for that range
  std::optional<Range> reference;  // sentence the edit now conflicts with
  std::string description;
};

struct Occurrence {
  Range whole;
  Range target;  // sub-range that gets replaced
  std::wstring key;
  std::wstring target_text;
};

// Occurrences of pattern; `group` selects the replaced sub-match and
// `key_group` the text that must repeat (0 for the full match).
std::vector<Occurrence> occurrences(const std::wstring& text, const std::wregex& re, int group,
                                    int key_group = 0) {
  std::vector<Occurrence> out;
  for (std::wsregex_iterator it(text.begin(), text.end(), re), end; it != end; ++it) {
    const auto& m = *it;
    Occurrence o;
    o.whole = {static_cast<std::size_t>(m.position(0)),
               static_cast<std::size_t>(m.position(0) + m.length(0))};
    o.target = {static_cast<std::size_t>(m.position(group)),
                static_cast<std::size_t>(m.position(group) + m.length(group))};
    o.key = lower(m.str(key_group));
    o.target_text = m.str(group);
    out.push_back(std::move(o));
  }
  return out;
}

// Every later occurrence of a repeated key, referenced to the first one.
template <typename Replace>
std::vector<Hook> repeated_hooks(const std::wstring& text, const std::vector<Occurrence>& occ,
                                 Replace&& replace, const std::string& what) {
  std::map<std::wstring, std::size_t> first;
  std::vector<Hook> hooks;
  for (std::size_t i = 0; i < occ.size(); ++i) {
    auto [it, inserted] = first.emplace(occ[i].key, i);
    if (inserted) continue;
    const auto& ref = occ[it->second];
    auto replacement = replace(occ[i]);
    if (!replacement || *replacement == occ[i].target_text) continue;
    Hook h;
    h.edit = occ[i].target;
    h.replacement = *replacement;
    h.reference = sentence_at(text, ref.whole.first);
    h.description = what + ": '" + narrow(occ[i].target_text) + "' changed to '" +
                    narrow(*replacement) + "', conflicting with the earlier '" +
                    narrow(text.substr(ref.whole.first, ref.whole.second - ref.whole.first)) + "'";
    hooks.push_back(std::move(h));
  }
  return hooks;
}

const std::vector<std::wstring> kMonths = {L"january", L"february", L"march",     L"april",
                                           L"may",     L"june",     L"july",      L"august",
                                           L"september", L"october", L"november", L"december"};

std::vector<Hook> absolute_time_hooks(const std::wstring& text) {
  static const std::wregex re(
      L"\\b(January|February|March|April|June|July|August|September|October|November|December|"
      L"[Ss]pring|[Ss]ummer|[Aa]utumn|[Ww]inter)\\b");
  const auto occ = occurrences(text, re, 1);
  return repeated_hooks(
      text, occ,
      [](const Occurrence& o) -> std::optional<std::wstring> {
        const auto w = lower(o.target_text);
        static const std::map<std::wstring, std::wstring> seasons = {
            {L"spring", L"autumn"}, {L"autumn", L"spring"}, {L"summer", L"winter"}, {L"winter", L"summer"}};
        if (auto it = seasons.find(w); it != seasons.end()) return match_case(o.target_text, it->second);
        auto m = std::find(kMonths.begin(), kMonths.end(), w);
        if (m == kMonths.end()) return std::nullopt;
        const auto idx = static_cast<std::size_t>(m - kMonths.begin());
        return match_case(o.target_text, kMonths[(idx + 6) % 12]);
      },
      "time of year");
}

const std::vector<std::wstring> kNumberWords = {
    L"zero", L"one", L"two", L"three", L"four", L"five", L"six", L"seven", L"eight", L"nine", L"ten",
    L"eleven", L"twelve", L"thirteen", L"fourteen", L"fifteen", L"sixteen", L"seventeen",
    L"eighteen", L"nineteen", L"twenty"};

std::optional<long long> number_value(const std::wstring& token) {
  const auto w = lower(token);
  auto it = std::find(kNumberWords.begin(), kNumberWords.end(), w);
  if (it != kNumberWords.end()) return it - kNumberWords.begin();
  static const std::map<std::wstring, long long> tens = {
      {L"thirty", 30}, {L"forty", 40}, {L"fifty", 50}, {L"sixty", 60}, {L"seventy", 70},
      {L"eighty", 80}, {L"ninety", 90}, {L"hundred", 100}};
  if (auto t = tens.find(w); t != tens.end()) return t->second;
  std::wstring digits;
  for (wchar_t c : token) {
    if (c == L',') continue;
    if (c < L'0' || c > L'9') return std::nullopt;
    digits += c;
  }
  if (digits.empty() || digits.size() > 12) return std::nullopt;
  return std::stoll(digits);
}

// A different quantity written in the same style as `token`.
std::wstring other_number(const std::wstring& token, long long value) {
  const bool is_digits = !token.empty() && token[0] >= L'0' && token[0] <= L'9';
  if (is_digits) return std::to_wstring(value * 2 + 1);
  long long next = value + 3;
  if (value >= 30) next = value + 20;
  if (next <= 20) return match_case(token, kNumberWords[static_cast<std::size_t>(next)]);
  static const std::map<long long, std::wstring> tens = {
      {30, L"thirty"}, {40, L"forty"}, {50, L"fifty"}, {60, L"sixty"},
      {70, L"seventy"}, {80, L"eighty"}, {90, L"ninety"}};
  auto it = tens.lower_bound(next);
  if (it == tens.end()) return match_case(token, L"a thousand");
  return match_case(token, it->second);
}

const std::wstring kNumberAlternation =
    L"[0-9][0-9,]*|[Oo]ne|[Tt]wo|[Tt]hree|[Ff]our|[Ff]ive|[Ss]ix|[Ss]even|[Ee]ight|[Nn]ine|[Tt]en|"
    L"[Ee]leven|[Tt]welve|[Tt]hirteen|[Ff]ourteen|[Ff]ifteen|[Ss]ixteen|[Ss]eventeen|[Ee]ighteen|"
    L"[Nn]ineteen|[Tt]wenty|[Tt]hirty|[Ff]orty|[Ff]ifty|[Ss]ixty|[Ss]eventy|[Ee]ighty|[Nn]inety";

bool is_time_unit(const std::wstring& w) {
  static const std::vector<std::wstring> units = {L"minute", L"minutes", L"hour", L"hours", L"day",
                                                  L"days",   L"week",    L"weeks", L"month", L"months",
                                                  L"year",   L"years",   L"night", L"nights"};
  return std::find(units.begin(), units.end(), lower(w)) != units.end();
}

std::vector<Hook> duration_hooks(const std::wstring& text) {
  static const std::wregex re(L"\\b(" + kNumberAlternation +
                              L") (minutes?|hours?|days?|weeks?|months?|years?|nights?)\\b");
  auto occ = occurrences(text, re, 0);
  return repeated_hooks(
      text, occ,
      [&](const Occurrence& o) -> std::optional<std::wstring> {
        const auto space = o.target_text.find(L' ');
        const auto num = o.target_text.substr(0, space);
        auto unit = o.target_text.substr(space + 1);
        const auto v = number_value(num);
        if (!v) return std::nullopt;
        if (*v == 1 && unit.back() != L's') unit += L's';
        return other_number(num, *v) + L" " + unit;
      },
      "duration");
}

std::vector<Hook> quantitative_hooks(const std::wstring& text) {
  static const std::wregex re(L"\\b(" + kNumberAlternation + L") ([a-z]+)\\b");
  std::vector<Occurrence> occ;
  for (auto& o : occurrences(text, re, 1)) {
    const auto space = o.key.find(L' ');
    if (is_time_unit(o.key.substr(space + 1))) continue;
    const auto v = number_value(o.target_text);
    if (!v || *v < 2) continue;
    if (o.target_text.size() == 4 && *v >= 1000 && *v <= 2100) continue;  // years
    occ.push_back(std::move(o));
  }
  return repeated_hooks(
      text, occ,
      [](const Occurrence& o) -> std::optional<std::wstring> {
        return other_number(o.target_text, *number_value(o.target_text));
      },
      "quantity");
}

std::vector<Hook> nomenclature_hooks(const std::wstring& text, std::mt19937_64& rng) {
  static const std::wregex re(
      L"\\b(Captain|Doctor|Dr\\.|Mr\\.|Mrs\\.|Ms\\.|Professor|Lady|Lord|Sergeant|Inspector|"
      L"Commander|Colonel|Major|Lieutenant|Detective|Father|Sister|Aunt|Uncle) ([A-Z][a-z]+)\\b");
  static const std::vector<std::wstring> surnames = {
      L"Harrington", L"Whitfield", L"Castellano", L"Okafor", L"Lindqvist",
      L"Moreau",     L"Brennan",   L"Takahashi",  L"Varga",  L"Delacroix"};
  std::vector<std::wstring> unused;
  for (const auto& s : surnames) {
    if (text.find(s) == std::wstring::npos) unused.push_back(s);
  }
  if (unused.empty()) return {};
  const auto pick = unused[rng() % unused.size()];
  const auto occ = occurrences(text, re, 2);
  return repeated_hooks(
      text, occ, [&](const Occurrence&) -> std::optional<std::wstring> { return pick; }, "name");
}

std::vector<Hook> appearance_hooks(const std::wstring& text) {
  static const std::wregex eyes(
      L"\\b(blue|green|brown|grey|gray|hazel|amber|emerald|black|violet) (eyes)\\b");
  static const std::wregex hair(
      L"\\b(blond|blonde|red|black|brown|auburn|silver|grey|gray|golden|copper) (hair)\\b");
  static const std::map<std::wstring, std::wstring> swap = {
      {L"blue", L"brown"},   {L"green", L"brown"},   {L"brown", L"blue"},  {L"grey", L"brown"},
      {L"gray", L"brown"},   {L"hazel", L"blue"},    {L"amber", L"blue"},  {L"emerald", L"brown"},
      {L"black", L"blond"},  {L"violet", L"brown"},  {L"blond", L"black"}, {L"blonde", L"black"},
      {L"red", L"black"},    {L"auburn", L"black"},  {L"silver", L"black"}, {L"golden", L"black"},
      {L"copper", L"black"}};
  std::vector<Hook> hooks;
  for (const auto* re : {&eyes, &hair}) {
    auto occ = occurrences(text, *re, 1, 2);
    auto more = repeated_hooks(
        text, occ,
        [&](const Occurrence& o) -> std::optional<std::wstring> {
          auto it = swap.find(lower(o.target_text));
          if (it == swap.end()) return std::nullopt;
          return match_case(o.target_text, it->second);
        },
        "appearance");
    hooks.insert(hooks.end(), more.begin(), more.end());
  }
  std::sort(hooks.begin(), hooks.end(), [](const Hook& a, const Hook& b) { return a.edit < b.edit; });
  return hooks;
}

std::vector<Hook> geographical_hooks(const std::wstring& text) {
  static const std::wregex re(
      L"\\b([Nn]orth|[Ss]outh|[Ee]ast|[Ww]est)(?:ern)? of (the )?([A-Za-z]+)\\b");
  static const std::map<std::wstring, std::wstring> flip = {
      {L"north", L"south"}, {L"south", L"north"}, {L"east", L"west"}, {L"west", L"east"}};
  auto occ = occurrences(text, re, 1);
  // Key on the landmark so "north of the river" and "south of the river"
  // are recognised as the same relation.
  for (auto& o : occ) {
    const auto of = o.key.find(L" of ");
    o.key = o.key.substr(of);
  }
  std::map<std::wstring, std::wstring> first_dir;
  std::vector<Occurrence> consistent;
  for (auto& o : occ) {
    auto [it, inserted] = first_dir.emplace(o.key, lower(o.target_text));
    if (inserted || it->second == lower(o.target_text)) consistent.push_back(o);
  }
  return repeated_hooks(
      text, consistent,
      [&](const Occurrence& o) -> std::optional<std::wstring> {
        return match_case(o.target_text, flip.at(lower(o.target_text)));
      },
      "direction");
}

std::vector<Hook> memory_hooks(const std::wstring& text) {
  static const std::wregex re(
      L"\\b([A-Z][a-z]+) had (visited|been to|met|seen) ([A-Z][a-z]+(?: [A-Z][a-z]+)?)");
  std::vector<Hook> hooks;
  for (std::wsregex_iterator it(text.begin(), text.end(), re), end; it != end; ++it) {
    const auto& m = *it;
    const auto ref = sentence_at(text, static_cast<std::size_t>(m.position(0)));
    const auto sentence = L" " + m.str(1) + L" had never " + m.str(2) + L" " + m.str(3) + L" before.";
    // Insert after a later sentence end, skipping the sentence right after
    // the reference so the two stay apart.
    std::size_t pos = ref.second;
    int skipped = 0;
    while (pos < text.size()) {
      const auto next = sentence_at(text, std::min(text.size() - 1, pos + 1));
      if (next.second <= pos || next.first >= text.size()) break;
      pos = next.second;
      if (++skipped < 2) continue;
      Hook h;
      h.edit = {pos, pos};
      h.replacement = sentence;
      h.reference = ref;
      h.description = "memory: inserted denial '" + narrow(sentence.substr(1)) +
                      "' after the story states '" + narrow(m.str(0)) + "'";
      hooks.push_back(std::move(h));
    }
  }
  return hooks;
}

std::vector<Hook> perspective_hooks(const std::wstring& text) {
  static const std::wregex re(L"(^|[.!?][\"'”’]?\\s+)(He|She) was\\b");
  std::vector<Hook> hooks;
  for (std::wsregex_iterator it(text.begin(), text.end(), re), end; it != end; ++it) {
    const auto& m = *it;
    const auto start = static_cast<std::size_t>(m.position(2));
    const std::wregex pron(L"\\b" + m.str(2) + L"\\b|\\b" + lower(m.str(2)) + L"\\b");
    const auto cur = sentence_at(text, start);
    std::optional<Range> ref;
    std::size_t probe = cur.first;
    while (probe > 0) {
      while (probe > 0 && utf8::is_space(text[probe - 1])) --probe;
      if (probe == 0) break;
      const auto s = sentence_at(text, probe - 1);
      const auto body = text.substr(s.first, s.second - s.first);
      if (std::regex_search(body, pron)) {
        ref = s;
        break;
      }
      if (s.first >= probe) break;
      probe = s.first;
    }
    if (!ref) continue;
    Hook h;
    h.edit = {start, start + m.str(2).size() + 4};
    h.replacement = L"I was";
    h.reference = ref;
    h.description = "perspective: third-person '" + narrow(m.str(2)) +
                    " was' switched to first-person 'I was'";
    hooks.push_back(std::move(h));
  }
  return hooks;
}

struct Injector {
  std::wstring text;
  std::vector<Range> protected_ranges;
  struct Edit {
    std::size_t pos;  // current coordinates of the edit start
    std::size_t old_len;
    std::size_t new_len;
  };
  std::vector<Edit> edits;
  std::vector<InjectedError> injected;
  std::vector<Range> injected_edit_ranges;
  std::vector<std::optional<Range>> injected_ref_ranges;

  std::size_t to_original(std::size_t pos) const {
    long long shift = 0;
    for (const auto& e : edits) {
      if (e.pos + e.new_len <= pos) shift += static_cast<long long>(e.new_len) - static_cast<long long>(e.old_len);
    }
    return static_cast<std::size_t>(static_cast<long long>(pos) - shift);
  }

  bool usable(const Hook& h) const {
    const auto sentence = sentence_at(text, h.edit.first);
    Range guard = {std::min(sentence.first, h.edit.first), std::max(sentence.second, h.edit.second)};
    if (guard.first == guard.second) guard.second = guard.first + 1;
    for (const auto& p : protected_ranges) {
      if (overlaps(guard, p)) return false;
      if (h.reference && overlaps(*h.reference, p)) return false;
    }
    if (h.reference && overlaps(*h.reference, guard)) return false;
    return true;
  }

  void apply(const Hook& h, ErrorSubtype subtype) {
    const auto old_len = h.edit.second - h.edit.first;
    const auto new_len = h.replacement.size();
    const auto delta = static_cast<long long>(new_len) - static_cast<long long>(old_len);
    const std::size_t orig = to_original(h.edit.first);
    text.replace(h.edit.first, old_len, h.replacement);

    auto shift = [&](std::size_t p) {
      return p >= h.edit.second ? static_cast<std::size_t>(static_cast<long long>(p) + delta) : p;
    };
    auto shift_range = [&](Range& r) {
      r.first = shift(r.first);
      r.second = shift(r.second);
    };
    for (auto& p : protected_ranges) shift_range(p);
    for (auto& e : edits) {
      if (e.pos >= h.edit.second) e.pos = shift(e.pos);
    }
    for (auto& r : injected_edit_ranges) shift_range(r);
    for (auto& r : injected_ref_ranges) {
      if (r) shift_range(*r);
    }
    edits.push_back({h.edit.first, old_len, new_len});

    // Insertions carry a leading space that is not part of the new sentence.
    std::size_t cstart = h.edit.first;
    while (cstart < h.edit.first + new_len && utf8::is_space(text[cstart])) ++cstart;
    const Range changed = {cstart, h.edit.first + new_len};
    const auto sentence = sentence_at(text, changed.first);
    std::optional<Range> ref = h.reference;  // lies before or after; shifted if after
    if (ref && ref->first >= h.edit.second) {
      ref->first = static_cast<std::size_t>(static_cast<long long>(ref->first) + delta);
      ref->second = static_cast<std::size_t>(static_cast<long long>(ref->second) + delta);
    }
    protected_ranges.push_back({std::min(sentence.first, changed.first), std::max(sentence.second, changed.second)});
    if (ref) protected_ranges.push_back(*ref);

    InjectedError e;
    e.subtype = subtype;
    e.original_span = {orig, orig + old_len, 1.0};
    e.description = h.description;
    e.corrupted_sentence = narrow(text.substr(sentence.first, sentence.second - sentence.first));
    injected.push_back(std::move(e));
    injected_edit_ranges.push_back(changed);
    injected_ref_ranges.push_back(ref);
  }

  std::vector<InjectedError> finish() {
    for (std::size_t i = 0; i < injected.size(); ++i) {
      injected[i].corrupted_span = {injected_edit_ranges[i].first, injected_edit_ranges[i].second, 1.0};
      if (const auto& r = injected_ref_ranges[i]) {
        injected[i].reference_span = SpanAnchor{r->first, r->second, 1.0};
        injected[i].reference_sentence = narrow(text.substr(r->first, r->second - r->first));
      }
    }
    std::vector<std::size_t> order(injected.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return injected[a].corrupted_span.start < injected[b].corrupted_span.start;
    });
    std::vector<InjectedError> out;
    for (auto i : order) out.push_back(injected[i]);
    return out;
  }
};

std::vector<Hook> template_hooks(ErrorSubtype subtype, const std::wstring& text,
                                 std::mt19937_64& rng) {
  switch (subtype) {
    case ErrorSubtype::AbsoluteTimeContradiction: return absolute_time_hooks(text);
    case ErrorSubtype::DurationContradiction: return duration_hooks(text);
    case ErrorSubtype::MemoryContradiction: return memory_hooks(text);
    case ErrorSubtype::GeographicalContradiction: return geographical_hooks(text);
    case ErrorSubtype::AppearanceMismatch: return appearance_hooks(text);
    case ErrorSubtype::NomenclatureConfusion: return nomenclature_hooks(text, rng);
    case ErrorSubtype::QuantitativeMismatch: return quantitative_hooks(text);
    case ErrorSubtype::PerspectiveConfusion: return perspective_hooks(text);
    default: return {};
  }
}

std::optional<Hook> llm_hook(ErrorSubtype subtype, const std::string& story_id,
                             const std::wstring& text, Backend& llm) {
  auto req = ChatRequest::judge_defaults();
  req.temperature = 0.0;
  req.user_prompt =
      "Introduce exactly one consistency error of type \"" + std::string(display_name(subtype)) +
      "\" into the story below by rewriting a single sentence so that it conflicts with an "
      "earlier sentence. Reply with one JSON object:\n"
      "{\"original\": \"<the sentence to replace, copied exactly>\", \"replacement\": \"<the "
      "rewritten sentence>\", \"reference\": \"<the earlier sentence it now contradicts, copied "
      "exactly>\", \"description\": \"<one sentence>\"}\n\n=== BEGIN STORY ===\n" +
      narrow(text) + "\n=== END STORY ===\n";
  req.tags[tags::kStage] = tags::kStageInjection;
  req.tags[tags::kStoryId] = story_id;
  req.tags[tags::kSubtype] = std::string(schema_key(subtype));
  const auto j = recover_json_object(chat_complete(req, llm).text);
  const auto original = widen(j.at("original").get<std::string>());
  const auto replacement = widen(j.at("replacement").get<std::string>());
  if (original.empty() || original == replacement) return std::nullopt;
  const auto pos = text.find(original);
  if (pos == std::wstring::npos) return std::nullopt;
  Hook h;
  h.edit = {pos, pos + original.size()};
  h.replacement = replacement;
  h.description = j.value("description", std::string("model-written corruption"));
  const auto reference = widen(j.value("reference", std::string{}));
  if (!reference.empty()) {
    const auto rpos = text.find(reference);
    if (rpos == std::wstring::npos) return std::nullopt;
    h.reference = Range{rpos, rpos + reference.size()};
  }
  return h;
}

}  // namespace

bool has_template_injector(ErrorSubtype subtype) noexcept {
  switch (subtype) {
    case ErrorSubtype::AbsoluteTimeContradiction:
    case ErrorSubtype::DurationContradiction:
    case ErrorSubtype::MemoryContradiction:
    case ErrorSubtype::GeographicalContradiction:
    case ErrorSubtype::AppearanceMismatch:
    case ErrorSubtype::NomenclatureConfusion:
    case ErrorSubtype::QuantitativeMismatch:
    case ErrorSubtype::PerspectiveConfusion:
      return true;
    default:
      return false;
  }
}

InjectionResult inject_errors(const Story& story, const InjectionPlan& plan, std::uint64_t seed,
                              Backend* llm) {
  std::mt19937_64 rng(seed);
  Injector inj;
  inj.text = widen(story.text);
  InjectionResult result;

  for (const auto& [subtype, count] : plan) {
    for (std::size_t k = 0; k < count; ++k) {
      std::vector<Hook> usable;
      std::string reason;
      if (has_template_injector(subtype)) {
        for (auto& h : template_hooks(subtype, inj.text, rng)) {
          if (inj.usable(h)) usable.push_back(std::move(h));
        }
        if (usable.empty()) reason = "no unused hook in the story for this subtype";
      } else if (llm != nullptr) {
        try {
          if (auto h = llm_hook(subtype, story.id, inj.text, *llm); h && inj.usable(*h)) {
            usable.push_back(std::move(*h));
          } else {
            reason = "model-written corruption could not be located or overlaps an earlier one";
          }
        } catch (const std::exception& e) {
          reason = std::string("model-written corruption failed: ") + e.what();
        }
      } else {
        reason = "no template injector for this subtype and no model configured";
      }
      if (usable.empty()) {
        result.skipped.push_back({subtype, reason});
        continue;
      }
      inj.apply(usable[rng() % usable.size()], subtype);
    }
  }
  result.injected = inj.finish();
  result.story = story;
  result.story.text = narrow(inj.text);
  result.story.word_count = word_count(result.story.text);
  result.story.token_trace.reset();
  return result;
}

InjectionResult inject_one(const Story& story, ErrorSubtype subtype, std::uint64_t seed,
                           Backend* llm) {
  auto r = inject_errors(story, {{subtype, 1}}, seed, llm);
  if (!r.skipped.empty()) {
    throw InjectionInfeasible(std::string(display_name(subtype)) + ": " + r.skipped.front().reason);
  }
  return r;
}

}  // namespace constory
