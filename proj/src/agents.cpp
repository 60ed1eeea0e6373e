#include "fairrag/agents.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "fairrag/errors.hpp"
#include "fairrag/tokenizer.hpp"
#include "text_util.hpp"

#ifndef FAIRRAG_PROMPTS_DIR
#define FAIRRAG_PROMPTS_DIR "prompts"
#endif

namespace fairrag {

using json = nlohmann::json;
using detail::iequals_ascii;
using detail::istarts_with;
using detail::strip_decoration;
using detail::trim;

namespace {

bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

// Length of "{name}" starting at body[pos] == '{', or 0 when it is not a slot.
std::size_t slot_length(std::string_view body, std::size_t pos) {
  std::size_t i = pos + 1;
  if (i >= body.size() || !is_ident_start(body[i])) return 0;
  while (i < body.size() && is_ident_char(body[i])) ++i;
  if (i >= body.size() || body[i] != '}') return 0;
  return i - pos + 1;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Value of an ASCII or Arabic-script digit codepoint, or -1.
int digit_value(char32_t cp) {
  if (cp >= '0' && cp <= '9') return static_cast<int>(cp - '0');
  if (cp >= 0x06F0 && cp <= 0x06F9) return static_cast<int>(cp - 0x06F0);
  if (cp >= 0x0660 && cp <= 0x0669) return static_cast<int>(cp - 0x0660);
  return -1;
}

std::optional<long> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty() || s.size() > 40) return std::nullopt;
  long value = 0;
  std::size_t pos = 0;
  while (pos < s.size()) {
    int d = digit_value(unicode::decode(s, pos));
    if (d < 0) return std::nullopt;
    value = value * 10 + d;
  }
  return value;
}

// Text of a list line ("- x", "* x", "• x", "1. x", "۲) x"), or nullopt.
std::optional<std::string> list_item(std::string_view line) {
  std::string_view t = trim(line);
  auto rest_after = [&](std::size_t n) -> std::optional<std::string> {
    if (n >= t.size() || !detail::is_ascii_space(t[n])) return std::nullopt;
    return strip_decoration(t.substr(n));
  };
  if (t.starts_with("- ") || t.starts_with("* ") || t.starts_with("-\t")) return rest_after(1);
  if (t.starts_with("•")) return rest_after(std::string_view("•").size());
  std::size_t pos = 0;
  std::size_t digits = 0;
  while (pos < t.size()) {
    std::size_t next = pos;
    if (digit_value(unicode::decode(t, next)) < 0) break;
    pos = next;
    ++digits;
  }
  if (digits == 0 || pos >= t.size()) return std::nullopt;
  if (t[pos] != '.' && t[pos] != ')') return std::nullopt;
  return rest_after(pos + 1);
}

// Drops a leading bullet marker from a cleaned line.
std::string_view drop_bullet(std::string_view s) {
  s = trim(s);
  if (s.starts_with("- ") || s == "-") s.remove_prefix(1);
  if (s.starts_with("•")) s.remove_prefix(std::string_view("•").size());
  return trim(s);
}

[[noreturn]] void fail(const std::string& what, std::string_view raw) {
  throw ParseError(what, std::string(raw));
}

}  // namespace

// ------------------------------------------------------------- templates

PromptTemplate PromptTemplate::from_text(std::string name, std::string body) {
  PromptTemplate t;
  t.name = std::move(name);
  t.body = std::move(body);
  for (std::size_t i = 0; i < t.body.size(); ++i) {
    if (t.body[i] != '{') continue;
    if (auto len = slot_length(t.body, i)) {
      t.required.insert(t.body.substr(i + 1, len - 2));
      i += len - 1;
    }
  }
  return t;
}

PromptTemplate PromptTemplate::from_file(std::string name, const std::filesystem::path& path) {
  return from_text(std::move(name), read_file(path));
}

std::string render(const PromptTemplate& tpl, const Bindings& bindings) {
  for (const auto& slot : tpl.required) {
    if (!bindings.count(slot)) {
      throw ValidationError("template '" + tpl.name + "' is missing a binding for placeholder '" +
                            slot + "'");
    }
  }
  const std::string& body = tpl.body;
  std::string out;
  out.reserve(body.size());
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '{') {
      if (auto len = slot_length(body, i)) {
        out += bindings.at(body.substr(i + 1, len - 2));
        i += len;
        continue;
      }
    }
    out.push_back(body[i++]);
  }
  return out;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ConfigError("prompts directory not found: " + dir.string());
  PromptLibrary lib;
  for (const char* name : {"validator", "decomposer", "filter", "sea", "refiner", "generator",
                           "direct_answer", "failure_analysis"}) {
    lib.templates_.emplace(name, PromptTemplate::from_file(name, dir / (std::string(name) + ".txt")));
  }
  if (fs::is_directory(dir / "judges")) {
    for (const auto& entry : fs::directory_iterator(dir / "judges")) {
      if (entry.path().extension() != ".txt") continue;
      std::string name = "judges/" + entry.path().stem().string();
      lib.templates_.emplace(name, PromptTemplate::from_file(name, entry.path()));
    }
  }
  return lib;
}

const std::filesystem::path& PromptLibrary::default_dir() {
  static const std::filesystem::path dir = FAIRRAG_PROMPTS_DIR;
  return dir;
}

const PromptTemplate& PromptLibrary::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw ConfigError("no prompt template named '" + name + "'");
  return it->second;
}

std::vector<std::string> PromptLibrary::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : templates_) out.push_back(name);
  return out;
}

// ------------------------------------------------------------- pipeline parsers

QueryClass parse_validation(std::string_view raw) {
  auto lines = detail::split_lines(raw);
  auto label_of = [](std::string_view s) -> std::optional<QueryClass> {
    std::string clean = strip_decoration(s);
    std::string_view v = trim(clean);
    auto sp = v.find_first_of(" \t");
    if (sp != std::string_view::npos) v = v.substr(0, sp);
    while (!v.empty() && (v.back() == '.' || v.back() == ',' || v.back() == ';')) v.remove_suffix(1);
    std::string upper(v);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return try_parse_query_class(upper);
  };

  for (std::size_t i = lines.size(); i-- > 0;) {
    std::string clean = strip_decoration(lines[i]);
    if (!istarts_with(clean, "Selected Label")) continue;
    std::string_view rest = std::string_view(clean).substr(std::string_view("Selected Label").size());
    rest = trim(rest);
    if (rest.starts_with(":")) rest.remove_prefix(1);
    if (!trim(rest).empty()) {
      if (auto cls = label_of(rest)) return *cls;
      fail("unrecognised label after 'Selected Label'", raw);
    }
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      if (trim(lines[j]).empty()) continue;
      if (auto cls = label_of(lines[j])) return *cls;
      break;
    }
    fail("no label after 'Selected Label'", raw);
  }
  // Lenient form: the whole output is the bare label.
  std::string whole = strip_decoration(raw);
  if (auto cls = try_parse_query_class(whole)) return *cls;
  fail("validator output has no recognisable label", raw);
}

std::vector<SubQuery> parse_query_list(std::string_view raw, SubQueryOrigin origin, int iteration,
                                       std::size_t min_items, std::size_t max_items) {
  auto lines = detail::split_lines(raw);
  std::size_t start = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto lower = detail::to_lower_ascii(lines[i]);
    if (lower.find("optimized queries") != std::string::npos ||
        lower.find("improved queries") != std::string::npos) {
      start = i + 1;
    }
  }
  std::vector<SubQuery> out;
  for (std::size_t i = start; i < lines.size() && out.size() < max_items; ++i) {
    auto item = list_item(lines[i]);
    if (!item || trim(*item).empty()) continue;
    out.push_back(make_sub_query(*item, origin, iteration));
  }
  if (out.size() < min_items) {
    fail("expected at least " + std::to_string(min_items) + " queries, found " +
             std::to_string(out.size()),
         raw);
  }
  return out;
}

FilterVerdict parse_filter(std::string_view raw, const std::set<std::string>& batch_ids) {
  static const std::regex id_re(R"(\bdoc_(\d+)\b)");
  FilterVerdict v;
  std::string text(raw);
  bool any = false;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), id_re); it != std::sregex_iterator();
       ++it) {
    any = true;
    std::string id = "doc_" + std::to_string(std::stol((*it)[1].str()));
    if (batch_ids.count(id)) {
      v.unhelpful_ids.insert(id);
    } else {
      v.warnings.push_back("filter named [" + id + "], which is not in the batch; ignored");
    }
  }
  if (any) return v;
  static const std::regex none_re(R"(\bnone\b)", std::regex::icase);
  if (std::regex_search(text, none_re)) return v;
  fail("filter output is neither \"None\" nor a list of [doc_N] ids", raw);
}

SEAReport parse_sea(std::string_view raw) {
  enum Field { main_goal, required, confirmed, gaps, conclusion, sufficient, n_fields };
  static const std::pair<std::string_view, Field> labels[] = {
      {"main goal", main_goal},   {"required findings", required}, {"confirmed findings", confirmed},
      {"remaining gaps", gaps},   {"conclusion", conclusion},      {"sufficient", sufficient},
  };
  std::string inline_value[n_fields];
  std::vector<std::string> extra[n_fields];
  std::vector<std::string> bullets[n_fields];
  bool seen[n_fields] = {};
  int current = -1;

  for (auto line : detail::split_lines(raw)) {
    std::string clean = strip_decoration(line);
    std::string_view body = drop_bullet(clean);
    bool matched = false;
    for (const auto& [label, field] : labels) {
      if (!istarts_with(body, label)) continue;
      std::string_view after = trim(body.substr(label.size()));
      if (!after.starts_with(":")) continue;
      current = field;
      seen[field] = true;
      inline_value[field] = std::string(trim(after.substr(1)));
      extra[field].clear();
      bullets[field].clear();
      matched = true;
      break;
    }
    if (matched) continue;
    auto lower = detail::to_lower_ascii(body);
    if (lower.find("mission deconstruction") != std::string::npos ||
        lower.find("intelligence synthesis") != std::string::npos ||
        lower.find("final assessment") != std::string::npos) {
      current = -1;
      continue;
    }
    if (current < 0 || trim(body).empty()) continue;
    extra[current].emplace_back(trim(body));
    if (auto item = list_item(line)) bullets[current].push_back(*item);
  }

  auto full = [&](Field f) {
    std::string s = inline_value[f];
    for (const auto& e : extra[f]) {
      if (!s.empty()) s += '\n';
      s += e;
    }
    return s;
  };

  if (!seen[sufficient]) fail("SEA output has no 'Sufficient:' field", raw);
  std::string verdict = inline_value[sufficient];
  if (verdict.empty() && !extra[sufficient].empty()) verdict = extra[sufficient].front();
  std::string_view word = trim(verdict);
  if (auto sp = word.find_first_of(" \t"); sp != std::string_view::npos) word = word.substr(0, sp);
  while (!word.empty() && std::string_view(".,;:!\"'[]()").find(word.back()) != std::string_view::npos) {
    word.remove_suffix(1);
  }
  while (!word.empty() && std::string_view("\"'[(").find(word.front()) != std::string_view::npos) {
    word.remove_prefix(1);
  }

  SEAReport r;
  if (iequals_ascii(word, "yes")) {
    r.sufficient = true;
  } else if (iequals_ascii(word, "no")) {
    r.sufficient = false;
  } else {
    fail("SEA 'Sufficient:' must be Yes or No, got '" + std::string(word) + "'", raw);
  }

  r.main_goal = full(main_goal);
  r.confirmed_findings = full(confirmed);
  r.remaining_gaps = full(gaps);
  r.conclusion = full(conclusion);

  auto add_split = [&](std::string_view text) {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto semi = text.find(';', pos);
      auto part = trim(text.substr(pos, semi == std::string_view::npos ? std::string_view::npos : semi - pos));
      if (!part.empty()) r.required_findings.emplace_back(part);
      if (semi == std::string_view::npos) break;
      pos = semi + 1;
    }
  };
  add_split(inline_value[required]);
  if (!bullets[required].empty()) {
    for (const auto& b : bullets[required]) r.required_findings.push_back(b);
  } else {
    for (const auto& e : extra[required]) add_split(e);
  }
  return r;
}

Answer parse_answer(std::string_view raw, std::size_t n_evidence, std::vector<std::string>* warnings) {
  Answer a;
  a.text = std::string(raw);
  std::set<int> cites;
  std::size_t pos = 0;
  while ((pos = raw.find('[', pos)) != std::string_view::npos) {
    auto close = raw.find(']', pos + 1);
    if (close == std::string_view::npos) break;
    auto inner = raw.substr(pos + 1, close - pos - 1);
    // "[1]", "[1, 2]" and "[۱،۲]" all count.
    std::vector<int> found;
    bool ok = !inner.empty();
    std::size_t p = 0;
    while (ok && p <= inner.size()) {
      std::size_t comma = inner.find(',', p);
      std::size_t acomma = inner.find("،", p);
      std::size_t cut = std::min(comma, acomma);
      auto part = inner.substr(p, cut == std::string_view::npos ? std::string_view::npos : cut - p);
      auto n = parse_number(part);
      if (!n || *n <= 0 || *n > 100000) ok = false;
      else found.push_back(static_cast<int>(*n));
      if (cut == std::string_view::npos) break;
      p = cut + (cut == comma ? 1 : std::string_view("،").size());
    }
    if (ok) cites.insert(found.begin(), found.end());
    pos = close + 1;
  }
  a.citations.assign(cites.begin(), cites.end());
  if (warnings) {
    for (int c : a.citations) {
      if (c < 1 || static_cast<std::size_t>(c) > n_evidence) {
        warnings->push_back("citation " + std::to_string(c) + " out of range 1.." +
                            std::to_string(n_evidence));
      }
    }
  }

  auto lower = detail::to_lower_ascii(raw);
  if (raw.find(sentinels::kFatwa) != std::string_view::npos ||
      lower.find("not an authority authorized to issue fatwas") != std::string::npos) {
    a.disclaimers.insert(Disclaimer::fatwa_warning);
  }
  if (raw.find(sentinels::kPartialEvidence) != std::string_view::npos ||
      lower.find("complete information to provide a definitive answer") != std::string::npos) {
    a.disclaimers.insert(Disclaimer::partial_evidence);
  }
  if (raw.find(sentinels::kNoEvidence) != std::string_view::npos ||
      lower.find("did not contain relevant information") != std::string::npos) {
    a.disclaimers.insert(Disclaimer::no_evidence);
  }
  return a;
}

// ------------------------------------------------------------- judges

namespace {

constexpr std::pair<JudgeKind, std::string_view> kJudgeNames[] = {
    {JudgeKind::decomposition_score, "decomposition_score"},
    {JudgeKind::filter_audit, "filter_audit"},
    {JudgeKind::sufficiency, "sufficiency"},
    {JudgeKind::refinement_score, "refinement_score"},
    {JudgeKind::context_relevance, "context_relevance"},
    {JudgeKind::faithfulness, "faithfulness"},
    {JudgeKind::relevance_correctness, "relevance_correctness"},
    {JudgeKind::negative_rejection, "negative_rejection"},
    {JudgeKind::noise_robustness, "noise_robustness"},
    {JudgeKind::iterative_ranking, "iterative_ranking"},
    {JudgeKind::failure_mode, "failure_mode"},
};

constexpr std::pair<Faithfulness, std::string_view> kFaithNames[] = {
    {Faithfulness::fully, "Fully Faithful"},
    {Faithfulness::partially, "Partially Faithful"},
    {Faithfulness::not_faithful, "Not Faithful"},
};

constexpr std::pair<FailureCategory, std::string_view> kFailureNames[] = {
    {FailureCategory::query_decomposition, "Query Decomposition Error"},
    {FailureCategory::retrieval, "Retrieval Failure"},
    {FailureCategory::evidence_filtering, "Evidence Filtering Error"},
    {FailureCategory::sea, "SEA Error"},
    {FailureCategory::query_refinement, "Query Refinement Error"},
    {FailureCategory::generation, "Generation Failure"},
};

json extract_json(std::string_view raw) {
  auto open = raw.find('{');
  auto close = raw.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    fail("judge output contains no JSON object", raw);
  }
  try {
    return json::parse(raw.substr(open, close - open + 1));
  } catch (const json::exception& e) {
    fail(std::string("judge output is not valid JSON: ") + e.what(), raw);
  }
}

const json& key(const json& j, const char* name, std::string_view raw) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) fail(std::string("judge JSON lacks '") + name + "'", raw);
  return *it;
}

std::string opt_string(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || !it->is_string()) return {};
  return it->get<std::string>();
}

double score(const json& j, const char* name, std::string_view raw) {
  const json& v = key(j, name, raw);
  double s = 0.0;
  if (v.is_number()) {
    s = v.get<double>();
  } else if (v.is_string()) {
    try {
      s = std::stod(v.get<std::string>());
    } catch (const std::exception&) {
      fail(std::string("'") + name + "' is not a number", raw);
    }
  } else {
    fail(std::string("'") + name + "' is not a number", raw);
  }
  if (!(s >= 1.0 && s <= 5.0)) fail(std::string("'") + name + "' outside 1..5", raw);
  return s;
}

bool boolean(const json& j, const char* name, std::string_view raw) {
  const json& v = key(j, name, raw);
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    auto s = v.get<std::string>();
    if (iequals_ascii(s, "true")) return true;
    if (iequals_ascii(s, "false")) return false;
  }
  fail(std::string("'") + name + "' is not a boolean", raw);
}

std::string id_text(const json& v) {
  if (v.is_string()) return std::string(trim(v.get<std::string>()));
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return v.dump();
}

std::vector<std::string> id_list(const json& j, const char* name, std::string_view raw) {
  auto it = j.find(name);
  if (it == j.end()) fail(std::string("judge JSON lacks '") + name + "'", raw);
  std::vector<std::string> out;
  if (it->is_null()) return out;
  if (it->is_array()) {
    for (const auto& v : *it) {
      auto s = id_text(v);
      if (!s.empty()) out.push_back(s);
    }
    return out;
  }
  if (it->is_string()) {
    auto s = it->get<std::string>();
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
      auto t = trim(part);
      if (!t.empty() && !iequals_ascii(t, "none")) out.emplace_back(t);
    }
    return out;
  }
  fail(std::string("'") + name + "' is not a list", raw);
}

}  // namespace

std::string_view to_string(JudgeKind kind) {
  for (auto [k, n] : kJudgeNames) {
    if (k == kind) return n;
  }
  return "unknown";
}

JudgeKind parse_judge_kind(std::string_view text) {
  for (auto [k, n] : kJudgeNames) {
    if (n == text) return k;
  }
  throw ValidationError("unknown judge kind '" + std::string(text) + "'");
}

std::string judge_template_name(JudgeKind kind) {
  switch (kind) {
    case JudgeKind::decomposition_score: return "judges/query_decomposition";
    case JudgeKind::filter_audit: return "judges/filter_efficacy";
    case JudgeKind::sufficiency: return "judges/sufficiency_check";
    case JudgeKind::refinement_score: return "judges/query_refinement";
    case JudgeKind::context_relevance: return "judges/final_context_relevance";
    case JudgeKind::faithfulness: return "judges/faithfulness";
    case JudgeKind::relevance_correctness: return "judges/answer_relevance_and_correctness";
    case JudgeKind::negative_rejection: return "judges/negative_rejection";
    case JudgeKind::noise_robustness: return "judges/noise_robustness";
    case JudgeKind::iterative_ranking: return "judges/iterative_improvement";
    case JudgeKind::failure_mode: return "failure_analysis";
  }
  return {};
}

std::string_view to_string(Faithfulness f) {
  for (auto [k, n] : kFaithNames) {
    if (k == f) return n;
  }
  return "unknown";
}

Faithfulness parse_faithfulness(std::string_view text) {
  std::string clean = strip_decoration(text);
  for (auto [k, n] : kFaithNames) {
    if (iequals_ascii(clean, n)) return k;
  }
  throw ValidationError("unknown faithfulness verdict '" + std::string(text) + "'");
}

std::string_view to_string(FailureCategory c) {
  for (auto [k, n] : kFailureNames) {
    if (k == c) return n;
  }
  return "unknown";
}

FailureCategory parse_failure_category(std::string_view text) {
  std::string clean = strip_decoration(text);
  for (auto [k, n] : kFailureNames) {
    if (iequals_ascii(clean, n)) return k;
  }
  throw ValidationError("unknown failure category '" + std::string(text) + "'");
}

double ContextRelevanceVerdict::mean() const {
  if (scores.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : scores) sum += s.score;
  return sum / static_cast<double>(scores.size());
}

JudgeVerdict parse_judge_json(std::string_view raw, JudgeKind kind) {
  json j = extract_json(raw);
  if (!j.is_object()) fail("judge output is not a JSON object", raw);

  switch (kind) {
    case JudgeKind::decomposition_score:
    case JudgeKind::refinement_score:
      return ScoreVerdict{score(j, "score", raw), opt_string(j, "reasoning")};

    case JudgeKind::filter_audit:
      return FilterAuditVerdict{id_list(j, "incorrectly_kept_ids", raw),
                                id_list(j, "incorrectly_discarded_ids", raw)};

    case JudgeKind::sufficiency:
      return SufficiencyVerdict{boolean(j, "is_sufficient", raw), opt_string(j, "reasoning")};

    case JudgeKind::context_relevance: {
      const json& arr = key(j, "relevance_scores", raw);
      if (!arr.is_array()) fail("'relevance_scores' is not a list", raw);
      ContextRelevanceVerdict v;
      for (const auto& item : arr) {
        if (!item.is_object()) fail("relevance_scores entries must be objects", raw);
        v.scores.push_back({id_text(key(item, "doc_id", raw)), score(item, "score", raw)});
      }
      return v;
    }

    case JudgeKind::faithfulness: {
      const json& v = key(j, "faithfulness_verdict", raw);
      if (!v.is_string()) fail("'faithfulness_verdict' is not a string", raw);
      try {
        return FaithfulnessVerdict{parse_faithfulness(v.get<std::string>()), opt_string(j, "reasoning")};
      } catch (const ValidationError& e) {
        fail(e.what(), raw);
      }
    }

    case JudgeKind::relevance_correctness:
      return RelevanceCorrectnessVerdict{score(j, "relevance_score", raw),
                                         score(j, "correctness_score", raw),
                                         opt_string(j, "reasoning")};

    case JudgeKind::negative_rejection:
      return NegativeRejectionVerdict{boolean(j, "correctly_rejected", raw)};

    case JudgeKind::noise_robustness:
      return NoiseRobustnessVerdict{boolean(j, "is_robust", raw), boolean(j, "is_correct", raw),
                                    opt_string(j, "reasoning")};

    case JudgeKind::iterative_ranking: {
      const json& v = key(j, "ranking", raw);
      std::vector<std::string> parts;
      if (v.is_array()) {
        for (const auto& p : v) parts.push_back(id_text(p));
      } else if (v.is_string()) {
        std::stringstream ss(v.get<std::string>());
        std::string part;
        while (std::getline(ss, part, ',')) parts.emplace_back(strip_decoration(part));
      } else {
        fail("'ranking' is neither a string nor a list", raw);
      }
      RankingVerdict r;
      r.reasoning = opt_string(j, "reasoning");
      for (const auto& p : parts) {
        auto t = trim(p);
        if (t.empty()) continue;
        if (!istarts_with(t, "iter_")) fail("ranking entry '" + std::string(t) + "' is not iter_N", raw);
        auto n = parse_number(t.substr(5));
        if (!n || *n < 1 || *n > 4) fail("ranking entry '" + std::string(t) + "' out of range", raw);
        int level = static_cast<int>(*n);
        if (std::find(r.order.begin(), r.order.end(), level) != r.order.end()) {
          fail("ranking lists iter_" + std::to_string(level) + " twice", raw);
        }
        r.order.push_back(level);
      }
      return r;
    }

    case JudgeKind::failure_mode: {
      const json& v = key(j, "failure_category", raw);
      if (!v.is_string()) fail("'failure_category' is not a string", raw);
      FailureModeVerdict f;
      try {
        f.category = parse_failure_category(v.get<std::string>());
      } catch (const ValidationError& e) {
        fail(e.what(), raw);
      }
      f.reasoning = opt_string(j, "reasoning");
      f.root_cause_analysis = opt_string(j, "root_cause_analysis");
      f.suggested_improvement = opt_string(j, "suggested_improvement");
      return f;
    }
  }
  fail("unknown judge kind", raw);
}

}  // namespace fairrag
