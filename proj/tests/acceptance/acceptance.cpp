// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

#include "eval_fixture.hpp"
#include "fairrag/econ.hpp"
#include "fairrag/ingest.hpp"
#include "fairrag/orchestrator.hpp"
#include "fairrag/serialize.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fairrag;
using namespace fairrag::testing;

namespace {

struct Failed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failed(what);
}

bool within(double got, double want, double rel) { return std::abs(got - want) <= rel * std::abs(want); }

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// --------------------------------------------------------------- 1. cost

void cost_model() {
  const double rates[] = {0.033, 0.247, 0.870};
  for (std::size_t i = 0; i < 3; ++i) {
    const double r = blended_rate(kAllTiers[i]);
    expect(std::abs(r - rates[i]) < 1e-9, std::string(to_string(kAllTiers[i])) + " rate " + num(r));
  }
  expect(std::abs(round_sig(dynamic_rate(), 3) - 0.246) < 1e-12, "dynamic rate " + num(dynamic_rate()));
  const double want[] = {5.33e-4, 2.89e-3, 2.96e-2, 2.92e-3};
  const auto rows = reference_cost_rows();
  expect(rows.size() == 4, "expected four cost rows");
  for (std::size_t i = 0; i < 4; ++i) {
    expect(within(rows[i].cost, want[i], 0.005), rows[i].label + " cost " + num(rows[i].cost));
  }
}

// --------------------------------------------------------------- 2. latency

void latency_model() {
  const LatencyModel m;
  const double t = predict_latency(10000, 5, m);
  expect(std::abs(t - (0.001866 * 10000 + 0.5 * 5 + 1.0)) < 1e-12, "prediction " + num(t));
  expect(std::abs(recover_model_time(t, 5, m) - 0.001866 * 10000) < 1e-9, "recovery");
  const auto s = overhead_per_token(10900, 5.64, m);
  expect(within(s.h_per_token_s * 1e3, 0.26, 0.02), "h share " + num(s.h_per_token_s * 1e3));
  expect(within(s.R_per_token_s * 1e3, 0.09, 0.02), "R share " + num(s.R_per_token_s * 1e3));
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> tok(0, 1e5), calls(0, 20), a(0, 3);
  for (int i = 0; i < 1000; ++i) {
    const double n1 = tok(rng), n2 = tok(rng), c1 = calls(rng), c2 = calls(rng), l = a(rng);
    // f(n, c) - R is linear in (n, c).
    const double lhs = predict_latency(n1 + l * n2, c1 + l * c2, m) - m.R;
    const double rhs = (predict_latency(n1, c1, m) - m.R) + l * (predict_latency(n2, c2, m) - m.R);
    expect(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)), "linearity");
  }
}

// --------------------------------------------------------------- 3. f1

void f1_values() {
  const double a = f1(0.717, 0.768) * 100, b = f1(0.740, 0.626) * 100;
  expect(std::abs(a - 74.2) <= 0.1, "f1 " + num(a));
  expect(std::abs(b - 67.9) <= 0.1, "f1 " + num(b));
}

// --------------------------------------------------------------- 4. search oracles

void search_oracles() {
  std::mt19937 rng(4242);
  std::uniform_int_distribution<std::size_t> ndocs(1, 50), nvocab(3, 40), kk(1, 12), qlen(1, 6);
  std::uniform_int_distribution<int> coord(-2, 2);
  for (int round = 0; round < 100; ++round) {
    const auto vocab = nvocab(rng);
    auto docs = random_corpus(rng, ndocs(rng), vocab);
    for (auto& d : docs) {
      d.embedding = std::vector<double>(4);
      for (auto& x : *d.embedding) x = coord(rng);
    }
    const auto index = build_index(docs);
    std::uniform_int_distribution<std::size_t> word(0, vocab + 3);
    for (int q = 0; q < 5; ++q) {
      std::string query;
      for (std::size_t i = qlen(rng); i > 0; --i) query += "w" + std::to_string(word(rng)) + " ";
      const auto k = kk(rng);
      expect(same_ranking(bm25_search(index, query, k), oracle_bm25(docs, query, k)),
             "bm25 round " + std::to_string(round) + " query '" + query + "'");
      std::vector<double> v(4);
      for (auto& x : v) x = coord(rng);
      expect(same_ranking(dense_search(index, v, k), oracle_cosine(docs, v, k)),
             "cosine round " + std::to_string(round));
    }
  }
}

// --------------------------------------------------------------- 5. rrf

void rrf_properties() {
  auto fused = rrf_fuse({{{"a", 9}, {"b", 5}}, {{"a", 1}, {"c", 1}, {"b", 0.5}}}, 60);
  expect(fused.size() == 3 && fused[0].id == "a" && fused[0].score == 2.0 / 61, "a = 2/61");
  expect(fused[1].id == "b" && fused[1].score == 1.0 / 62 + 1.0 / 63, "b = 1/62 + 1/63");
  expect(fused[2].id == "c" && fused[2].score == 1.0 / 62, "c = 1/62");
  auto single = rrf_fuse({{{"x", 3}, {"y", 2}, {"z", 1}}}, 60);
  expect(single[2].score == 1.0 / 63, "third rank = 1/63");

  std::mt19937 rng(5);
  std::uniform_int_distribution<int> nlists(1, 5), len(0, 8), id(0, 11);
  for (int round = 0; round < 200; ++round) {
    std::vector<RankedList> lists;
    for (int l = nlists(rng); l > 0; --l) {
      RankedList list;
      for (int i = len(rng); i > 0; --i) list.push_back({"d" + std::to_string(id(rng)), 1.0});
      lists.push_back(list);
    }
    auto before = rrf_fuse(lists, 60);
    expect(same_ranking(before, oracle_rrf(lists, 60)), "oracle");
    RankedList extra;
    for (int i = len(rng); i > 0; --i) extra.push_back({"d" + std::to_string(id(rng)), 1.0});
    lists.push_back(extra);
    auto after = rrf_fuse(lists, 60);
    for (const auto& s : before) {
      auto it = std::find_if(after.begin(), after.end(), [&](const Scored& x) { return x.id == s.id; });
      expect(it != after.end() && it->score >= s.score, "monotonicity for " + s.id);
    }
  }
}

// --------------------------------------------------------------- 6. parsers

std::string prompt_slice(const std::string& file, const std::string& from, const std::string& to) {
  const std::string text = read_file(PromptLibrary::default_dir() / file);
  auto a = text.find(from);
  expect(a != std::string::npos, "marker '" + from + "' in " + file);
  a += from.size();
  auto b = text.find(to, a);
  expect(b != std::string::npos, "marker '" + to + "' in " + file);
  return text.substr(a, b - a);
}

std::vector<std::string> texts(const std::vector<SubQuery>& qs) {
  std::vector<std::string> out;
  for (const auto& q : qs) out.push_back(q.text);
  return out;
}

template <typename F>
bool rejects(F f) {
  try {
    f();
  } catch (const ParseError&) {
    return true;
  }
  return false;
}

void parser_goldens() {
  const std::pair<const char*, QueryClass> labels[] = {
      {"VALID_OBVIOUS", QueryClass::valid_obvious},   {"VALID_SMALL", QueryClass::valid_small},
      {"VALID_LARGE", QueryClass::valid_large},       {"VALID_REASONER", QueryClass::valid_reasoner},
      {"OUT_OF_SCOPE_ISLAMIC", QueryClass::out_of_scope_islamic}, {"UNETHICAL", QueryClass::unethical}};
  for (auto [text, cls] : labels) expect(parse_validation(label(text)) == cls, std::string("label ") + text);

  auto decomposition = parse_query_list(
      "Optimized Queries:\n" + prompt_slice("decomposer.txt", "Optimized Queries (Output):", "--- END OF EXAMPLE ---"),
      SubQueryOrigin::decomposition, 1);
  expect(texts(decomposition) == std::vector<std::string>{"تفسیر مفهوم عدالت در قرآن توسط متفکران اسلامی",
                                                         "عدالت در حکومت از منظر فقه و فلسفه سیاسی اسلامی",
                                                         "تحلیل تاریخی کاربرد عدالت قرآنی در مدیریت جامعه",
                                                         "اندیشه سیاسی اسلامی و مفهوم عدالت"},
         "decomposition example");

  const std::set<std::string> batch = {"doc_1", "doc_2", "doc_3"};
  expect(parse_filter("Unhelpful Document IDs: [doc_2], [doc_3]", batch).unhelpful_ids ==
             std::set<std::string>{"doc_2", "doc_3"},
         "filter example");
  expect(parse_filter("None", batch).unhelpful_ids.empty(), "filter None");

  auto sea1 = parse_sea(prompt_slice("sea.txt", "Your Output for Example 1:", "Example 2"));
  expect(!sea1.sufficient && !gaps_are_none(sea1.remaining_gaps), "SEA example 1");
  auto sea2 = parse_sea(prompt_slice("sea.txt", "Your Output for Example 2:", "--- END"));
  expect(sea2.sufficient && gaps_are_none(sea2.remaining_gaps), "SEA example 2");

  auto refined = parse_query_list(prompt_slice("refiner.txt", "Your Output for Example:", "--- END OF EXAMPLE ---"),
                                  SubQueryOrigin::refinement, 2);
  expect(texts(refined) == std::vector<std::string>{"Surah Yusuf total verses", "Surah Yusuf verse count",
                                                    "Surah Yusuf chapter length"},
         "refinement example");

  const std::pair<JudgeKind, const char*> examples[] = {
      {JudgeKind::decomposition_score, R"({"score": 4.0, "reasoning": "r"})"},
      {JudgeKind::refinement_score, R"({"score": 3.0, "reasoning": "r"})"},
      {JudgeKind::filter_audit, R"({"incorrectly_kept_ids": ["a"], "incorrectly_discarded_ids": []})"},
      {JudgeKind::sufficiency, R"({"reasoning": "r", "is_sufficient": false})"},
      {JudgeKind::context_relevance, R"({"relevance_scores": [{"doc_id": "a", "score": 4.5}]})"},
      {JudgeKind::faithfulness, R"({"faithfulness_verdict": "Fully Faithful", "reasoning": ""})"},
      {JudgeKind::relevance_correctness, R"({"relevance_score": 5.0, "correctness_score": 5.0, "reasoning": ""})"},
      {JudgeKind::negative_rejection, R"({"correctly_rejected": true})"},
      {JudgeKind::noise_robustness, R"({"is_robust": true, "is_correct": true, "reasoning": ""})"},
      {JudgeKind::iterative_ranking, R"({"ranking": "iter_3,iter_4,iter_2,iter_1", "reasoning": ""})"},
      {JudgeKind::failure_mode, R"({"failure_category": "Retrieval Failure", "reasoning": "", )"
                                R"("root_cause_analysis": "", "suggested_improvement": ""})"},
  };
  for (auto [kind, raw] : examples) parse_judge_json(raw, kind);

  const std::pair<JudgeKind, const char*> violations[] = {
      {JudgeKind::faithfulness, R"({"faithfulness_verdict": "Somewhat Faithful"})"},
      {JudgeKind::iterative_ranking, R"({"ranking": "iter_5,iter_1,iter_2,iter_3"})"},
      {JudgeKind::failure_mode, R"({"failure_category": "Network Error"})"},
      {JudgeKind::decomposition_score, R"({"score": 6})"},
      {JudgeKind::sufficiency, R"({"is_sufficient": "perhaps"})"},
  };
  for (auto [kind, raw] : violations) {
    expect(rejects([&] { parse_judge_json(raw, kind); }), std::string("accepted ") + raw);
  }
}

// --------------------------------------------------------------- 7. case study

QueryTrace case_study_run() {
  const auto dir = fixtures_dir() / "case_study";
  auto loaded = load_corpus(dir / "corpus.jsonl", kDefaultChunkTokens);
  expect(loaded.chunks.size() == 4, "four chunks");
  const auto index = build_index(std::move(loaded.chunks));
  GatewayOptions opts;
  opts.sleep = [](double) {};
  Gateway gateway(std::shared_ptr<ChatBackend>(ScriptedBackend::from_file(dir / "script.jsonl")), opts);
  PipelineConfig config;
  config.filter_memoization = false;
  PipelineContext ctx{index, nullptr, gateway, prompts()};
  auto q = read_file(dir / "question.txt");
  while (!q.empty() && q.back() == '\n') q.pop_back();
  return run_query(q, config, ctx);
}

void case_study() {
  const auto a = case_study_run();
  expect(!a.error, "aborted");
  expect(a.iterations.size() == 2, std::to_string(a.iterations.size()) + " iterations");
  expect(a.iterations.back().sea.sufficient, "final SEA not sufficient");
  expect(a.answer && a.answer->citations == std::vector<int>{1, 2, 3, 4}, "citations");
  expect(a.final_evidence.size() == 4, "evidence size");
  expect(a.violations.empty(), "trace violations");
  expect(nlohmann::json(a).dump() == nlohmann::json(case_study_run()).dump(), "traces differ");
}

// --------------------------------------------------------------- 8. loop contract

void loop_contract() {
  const Index index = build_index(tiny_corpus());
  auto run = [&](std::vector<ScriptRule> rules, int max_iter) {
    auto g = scripted_gateway(std::move(rules));
    PipelineConfig config;
    config.max_iter = max_iter;
    PipelineContext ctx{index, nullptr, *g, prompts()};
    return run_query("alpha beta", config, ctx);
  };
  auto count = [](const QueryTrace& t, AgentRole role) {
    return std::count_if(t.calls.begin(), t.calls.end(), [&](const CallRecord& c) { return c.role == role; });
  };
  for (int max_iter = 1; max_iter <= 4; ++max_iter) {
    auto t = run({rule(AgentRole::validator, "", label("VALID_LARGE")),
                  rule(AgentRole::decomposer, "", queries({"alpha"})), rule(AgentRole::filter, "", "None"),
                  rule(AgentRole::sea, "", sea(false, "C: missing")),
                  rule(AgentRole::refiner, "", queries({"beta"}, "Improved Queries:")),
                  rule(AgentRole::generator, "", "answer [1]")},
                 max_iter);
    const auto tag = "max_iter " + std::to_string(max_iter);
    expect(!t.error, tag + " aborted");
    expect(static_cast<int>(t.iterations.size()) == max_iter, tag + " iterations");
    expect(count(t, AgentRole::generator) == 1, tag + " generations");
  }
  for (const char* cls : {"UNETHICAL", "OUT_OF_SCOPE_ISLAMIC"}) {
    auto t = run({rule(AgentRole::validator, "", label(cls))}, 3);
    expect(!t.error && t.accounting.api_calls == 1 && t.iterations.empty(), std::string(cls) + " calls/retrievals");
  }
  auto t = run({rule(AgentRole::validator, "", label("VALID_OBVIOUS")), rule(AgentRole::direct_answer, "", "ok")}, 3);
  expect(!t.error && t.accounting.api_calls == 2 && t.iterations.empty(), "VALID_OBVIOUS calls");
}

// --------------------------------------------------------------- 9. chunker

void chunker() {
  const auto& tok = default_tokenizer();
  auto tokens = [&](std::string_view text) {
    std::vector<std::string> out;
    for (const auto& t : tok.tokenize(text)) out.emplace_back(t.view(text));
    return out;
  };
  std::mt19937 rng(99);
  const std::vector<std::string> vocab = {"کتاب", "نماز", "قرآن", "علم", "حدیث", "alpha", "روزه", "beta"};
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1), slen(1, 40), nsent(1, 30), npara(1, 5),
      budget(16, 400);
  std::uniform_int_distribution<int> coin(0, 1);
  auto sentence = [&] {
    std::string s;
    for (std::size_t i = slen(rng); i > 0; --i) s += vocab[pick(rng)] + (i > 1 ? " " : ".");
    return s;
  };
  for (int d = 0; d < 20; ++d) {
    SourceDocument doc;
    doc.id = "r" + std::to_string(d);
    for (std::size_t p = npara(rng); p > 0; --p) {
      for (std::size_t s = nsent(rng); s > 0; --s) doc.text += sentence() + " ";
      if (p > 1) doc.text += "\n\n";
    }
    if (coin(rng)) {
      doc.kind = ChunkKind::qa;
      doc.question = sentence();
    }
    const auto max = budget(rng);
    const auto chunks = chunk_document(doc, max);
    std::vector<std::string> joined;
    for (const auto& c : chunks) {
      expect(c.token_count <= max && tok.count(c.text) == c.token_count, doc.id + " over budget");
      if (doc.kind == ChunkKind::qa) {
        expect(c.text.find(kUserQuestionMarker) != std::string::npos &&
                   c.text.find(kExpertAnswerMarker) != std::string::npos,
               doc.id + " markers");
      }
      auto t = tokens(chunk_body(c.text));
      joined.insert(joined.end(), t.begin(), t.end());
    }
    expect(joined == tokens(doc.text), doc.id + " reconstruction");
  }
}

// --------------------------------------------------------------- 10. eval harness

void eval_harness() {
  EvalHarness h;
  const auto m = compute_metrics(h.run());
  expect(m.negative_rejection_acc == 0.5, "rejection accuracy");
  expect(m.filter_precision && std::abs(*m.filter_precision - 4.0 / 6) < 1e-12, "filter precision");
  expect(m.filter_recall && std::abs(*m.filter_recall - 4.0 / 5) < 1e-12, "filter recall");
  expect(m.iterations && m.iterations->improvement_rate[1] == 0.5 && m.iterations->improvement_rate[2] == 0.5 &&
             m.iterations->improvement_rate[3] == 0.5,
         "improvement rate");

  std::vector<std::string> raw;
  const std::pair<FailureCategory, int> counts[] = {
      {FailureCategory::retrieval, 67},          {FailureCategory::generation, 34},
      {FailureCategory::sea, 11},                {FailureCategory::query_decomposition, 7},
      {FailureCategory::evidence_filtering, 3},  {FailureCategory::query_refinement, 0}};
  for (auto [c, n] : counts) {
    for (int i = 0; i < n; ++i) raw.push_back(nlohmann::json{{"failure_category", to_string(c)}}.dump());
  }
  const auto hist = failure_histogram(raw);
  const double want[] = {54.9, 27.9, 9.0, 5.7, 2.5, 0.0};
  for (std::size_t i = 0; i < 6; ++i) {
    const double got = std::round(hist.percent(counts[i].first) * 10) / 10;
    expect(std::abs(got - want[i]) < 1e-9, std::string(to_string(counts[i].first)) + " " + num(got));
  }
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<void()>> criteria[] = {
      {"cost model rates and per-query costs", cost_model},
      {"latency model evaluation, recovery and shares", latency_model},
      {"f1 of the component scores", f1_values},
      {"BM25 and cosine match brute-force oracles", search_oracles},
      {"RRF values and monotonicity", rrf_properties},
      {"parser goldens and judge schemas", parser_goldens},
      {"case-study integration run", case_study},
      {"loop contract", loop_contract},
      {"chunker invariants", chunker},
      {"eval harness metrics and failure breakdown", eval_harness},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, check] : criteria) {
    ++n;
    std::string why;
    try {
      check();
    } catch (const std::exception& e) {
      why = e.what();
    }
    if (why.empty()) {
      std::printf("PASS %2d %s\n", n, name);
    } else {
      ++failed;
      std::printf("FAIL %2d %s: %s\n", n, name, why.c_str());
    }
  }
  return failed;
}
