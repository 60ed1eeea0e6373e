#include "fairrag/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "fairrag/errors.hpp"
#include "fairrag/serialize.hpp"
#include "text_util.hpp"

namespace fairrag {

using nlohmann::json;

namespace {

constexpr std::pair<EvalCategory, std::string_view> kCategoryNames[] = {
    {EvalCategory::multihop, "multihop"},
    {EvalCategory::negative_rejection, "negative_rejection"},
    {EvalCategory::noise, "noise"},
    {EvalCategory::obvious, "obvious"},
};

std::string format_docs(const std::vector<Chunk>& docs) {
  if (docs.empty()) return "None";
  std::string out;
  for (const auto& c : docs) {
    if (!out.empty()) out += "\n\n";
    out += "[" + c.id + "]: " + c.text;
  }
  return out;
}

std::optional<double> mean(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::optional<double> fraction(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

// Chunks of the trace by id: final evidence first, then the index, then injected ones.
class ChunkLookup {
 public:
  ChunkLookup(const QueryTrace& trace, const Index* index, const std::vector<Chunk>* injected)
      : index_(index) {
    for (const auto& c : trace.final_evidence) by_id_.emplace(c.id, c);
    if (injected) {
      for (const auto& c : *injected) by_id_.emplace(c.id, c);
    }
  }

  std::vector<Chunk> get(const std::vector<std::string>& ids) const {
    std::vector<Chunk> out;
    for (const auto& id : ids) {
      if (auto it = by_id_.find(id); it != by_id_.end()) {
        out.push_back(it->second);
      } else if (index_ && index_->find(id)) {
        out.push_back(index_->at(id));
      } else {
        Chunk c;
        c.id = id;
        out.push_back(c);
      }
    }
    return out;
  }

 private:
  const Index* index_;
  std::map<std::string, Chunk> by_id_;
};

class Judge {
 public:
  Judge(JudgeContext& ctx) : ctx_(ctx) {}

  Judgment ask(JudgeKind kind, const Bindings& bindings, json context = json::object()) {
    Judgment j;
    j.kind = kind;
    j.context = std::move(context);
    try {
      ChatRequest req;
      req.role = AgentRole::judge;
      req.tier = ctx_.tier;
      req.prompt = render(ctx_.prompts.get(judge_template_name(kind)), bindings);
      j.raw = ctx_.gateway.complete(req).text;
    } catch (const Error& e) {
      j.error = e.what();
    }
    return j;
  }

 private:
  JudgeContext& ctx_;
};

std::string answer_text(const QueryTrace& t) { return t.answer ? t.answer->text : std::string(); }

std::string iteration_reports(const QueryTrace& t) {
  std::string out;
  for (const auto& it : t.iterations) {
    if (!out.empty()) out += "\n\n";
    out += "Iteration " + std::to_string(it.index) + ":\n";
    out += "Sub-queries:\n" + format_query_lines(it.sub_queries) + "\n";
    out += "Confirmed Findings: " + it.sea.confirmed_findings + "\n";
    out += "Remaining Gaps: " + it.sea.remaining_gaps + "\n";
    out += std::string("Sufficient: ") + (it.sea.sufficient ? "Yes" : "No");
  }
  return out.empty() ? "None" : out;
}

std::vector<std::string> kept_through(const QueryTrace& t, std::size_t last_iteration) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i <= last_iteration && i < t.iterations.size(); ++i) {
    ids.insert(ids.end(), t.iterations[i].kept_ids.begin(), t.iterations[i].kept_ids.end());
  }
  return ids;
}

EvalResult evaluate_one(const EvalRecord& rec, const PipelineConfig& config,
                        const PipelineContext& pipeline, JudgeContext& judge_ctx,
                        const EvalOptions& opts) {
  EvalResult result;
  result.record = rec;

  RunOptions run_opts;
  try {
    for (const auto& id : rec.distractor_ids) run_opts.injected.push_back(pipeline.index.at(id));
  } catch (const Error& e) {
    result.trace.query = rec.question;
    result.trace.max_iter = config.max_iter;
    result.trace.error = StageFailure{"eval", e.what(), ""};
    return result;
  }

  result.trace = run_query(rec.question, config, pipeline, run_opts);
  const QueryTrace& t = result.trace;
  if (t.error) return result;

  Judge judge(judge_ctx);
  ChunkLookup lookup(t, &pipeline.index, &run_opts.injected);
  const std::string evidence = format_evidence(t.final_evidence);
  const std::string answer = answer_text(t);

  switch (rec.category) {
    case EvalCategory::negative_rejection:
      result.judgments.push_back(judge.ask(JudgeKind::negative_rejection,
                                           {{"question", rec.question}, {"final_answer", answer}}));
      break;
    case EvalCategory::noise:
      result.judgments.push_back(judge.ask(JudgeKind::noise_robustness,
                                           {{"question", rec.question},
                                            {"ground_truth_answer", rec.ground_truth},
                                            {"final_answer", answer},
                                            {"final_evidence", evidence}}));
      break;
    case EvalCategory::multihop:
      result.judgments.push_back(judge.ask(JudgeKind::faithfulness, {{"question", rec.question},
                                                                     {"final_answer", answer},
                                                                     {"final_evidence", evidence}}));
      result.judgments.push_back(judge.ask(JudgeKind::context_relevance,
                                           {{"question", rec.question}, {"final_evidence", evidence}}));
      [[fallthrough]];
    case EvalCategory::obvious:
      result.judgments.push_back(judge.ask(JudgeKind::relevance_correctness,
                                           {{"question", rec.question},
                                            {"ground_truth_answer", rec.ground_truth},
                                            {"final_answer", answer}}));
      break;
  }

  if (opts.component_judges && !t.iterations.empty()) {
    result.judgments.push_back(judge.ask(
        JudgeKind::decomposition_score,
        {{"question", rec.question}, {"sub_queries", format_query_lines(t.iterations[0].sub_queries)}}));

    std::vector<std::string> kept;
    std::vector<std::string> discarded;
    for (const auto& it : t.iterations) {
      kept.insert(kept.end(), it.kept_ids.begin(), it.kept_ids.end());
      discarded.insert(discarded.end(), it.discarded_ids.begin(), it.discarded_ids.end());
    }
    if (!kept.empty() || !discarded.empty()) {
      result.judgments.push_back(judge.ask(JudgeKind::filter_audit,
                                           {{"question", rec.question},
                                            {"kept_docs", format_docs(lookup.get(kept))},
                                            {"discarded_docs", format_docs(lookup.get(discarded))}},
                                           {{"kept", kept}, {"discarded", discarded}}));
    }

    for (std::size_t i = 0; i < t.iterations.size(); ++i) {
      const auto kept_now = lookup.get(kept_through(t, i));
      result.judgments.push_back(judge.ask(JudgeKind::sufficiency,
                                           {{"question", rec.question}, {"evidence", format_evidence(kept_now)}},
                                           {{"iteration", i + 1}, {"sea_sufficient", t.iterations[i].sea.sufficient}}));
      if (i + 1 < t.iterations.size()) {
        result.judgments.push_back(
            judge.ask(JudgeKind::refinement_score,
                      {{"question", rec.question},
                       {"evidence", format_evidence(kept_now)},
                       {"new_queries", format_query_lines(t.iterations[i + 1].sub_queries)}},
                      {{"iteration", i + 1}}));
      }
    }
  }

  if (opts.iterative_study && rec.category == EvalCategory::multihop) {
    Bindings b{{"question", rec.question}};
    for (int level = 1; level <= 4; ++level) {
      PipelineConfig c = config;
      c.max_iter = level;
      auto variant = run_query(rec.question, c, pipeline, run_opts);
      result.iteration_answers.push_back(answer_text(variant));
      b["answer_" + std::to_string(level)] = result.iteration_answers.back();
    }
    result.judgments.push_back(judge.ask(JudgeKind::iterative_ranking, b));
  }

  if (opts.classify_failures && rec.category != EvalCategory::negative_rejection) {
    // Only answers the correctness judge scored below threshold count as failures.
    for (const auto& j : result.judgments) {
      if (j.kind != JudgeKind::relevance_correctness || j.error) continue;
      try {
        auto v = std::get<RelevanceCorrectnessVerdict>(parse_judge_json(j.raw, j.kind));
        if (v.correctness_score >= opts.correctness_threshold) break;
      } catch (const ParseError&) {
        break;
      }
      std::vector<std::string> retrieved;
      std::vector<std::string> discarded;
      std::vector<std::string> subs;
      for (const auto& it : t.iterations) {
        for (const auto& ids : it.retrieved_ids) retrieved.insert(retrieved.end(), ids.begin(), ids.end());
        retrieved.insert(retrieved.end(), it.injected_ids.begin(), it.injected_ids.end());
        discarded.insert(discarded.end(), it.discarded_ids.begin(), it.discarded_ids.end());
      }
      std::sort(retrieved.begin(), retrieved.end());
      retrieved.erase(std::unique(retrieved.begin(), retrieved.end()), retrieved.end());
      result.judgments.push_back(judge.ask(
          JudgeKind::failure_mode,
          {{"question", rec.question},
           {"ground_truth_answer", rec.ground_truth},
           {"final_answer", answer},
           {"sub_queries", t.iterations.empty() ? "None" : format_query_lines(t.iterations[0].sub_queries)},
           {"all_retrieved_docs", format_docs(lookup.get(retrieved))},
           {"discarded_docs", format_docs(lookup.get(discarded))},
           {"final_evidence", evidence},
           {"iteration_reports", iteration_reports(t)}}));
      break;
    }
  }
  return result;
}

}  // namespace

std::string_view to_string(EvalCategory c) {
  for (auto [k, n] : kCategoryNames) {
    if (k == c) return n;
  }
  return "unknown";
}

EvalCategory parse_eval_category(std::string_view text) {
  for (auto [k, n] : kCategoryNames) {
    if (n == text) return k;
  }
  throw ValidationError("unknown eval category '" + std::string(text) + "'");
}

void validate(const EvalRecord& r) {
  if (detail::trim(r.id).empty()) throw ValidationError("eval record id is empty");
  if (detail::trim(r.question).empty()) throw ValidationError("eval record '" + r.id + "' has no question");
  if (r.category == EvalCategory::noise && r.distractor_ids.empty()) {
    throw ValidationError("noise record '" + r.id + "' has no distractor_ids");
  }
}

EvalRecord parse_eval_record(std::string_view json_line) {
  EvalRecord r;
  try {
    auto j = json::parse(json_line);
    r.id = j.at("id").get<std::string>();
    r.question = j.at("question").get<std::string>();
    r.ground_truth = j.value("ground_truth", "");
    r.category = parse_eval_category(j.at("category").get<std::string>());
    if (auto it = j.find("distractor_ids"); it != j.end() && !it->is_null()) {
      r.distractor_ids = it->get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad eval record: ") + e.what());
  }
  validate(r);
  return r;
}

std::vector<EvalRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset: " + path.string());
  std::vector<EvalRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (detail::trim(line).empty()) continue;
    try {
      out.push_back(parse_eval_record(line));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

json to_json(const EvalResult& r) {
  json judgments = json::array();
  for (const auto& j : r.judgments) {
    judgments.push_back({{"kind", to_string(j.kind)},
                         {"raw", j.raw},
                         {"context", j.context},
                         {"error", j.error ? json(*j.error) : json(nullptr)}});
  }
  return {{"record",
           {{"id", r.record.id},
            {"question", r.record.question},
            {"ground_truth", r.record.ground_truth},
            {"category", to_string(r.record.category)},
            {"distractor_ids", r.record.distractor_ids}}},
          {"trace", r.trace},
          {"judgments", judgments},
          {"iteration_answers", r.iteration_answers}};
}

EvalResult eval_result_from_json(const json& j) {
  EvalResult r;
  try {
    r.record = parse_eval_record(j.at("record").dump());
    r.trace = j.at("trace").get<QueryTrace>();
    for (const auto& item : j.at("judgments")) {
      Judgment jd;
      jd.kind = parse_judge_kind(item.at("kind").get<std::string>());
      jd.raw = item.value("raw", "");
      jd.context = item.value("context", json::object());
      if (auto it = item.find("error"); it != item.end() && !it->is_null()) jd.error = it->get<std::string>();
      r.judgments.push_back(std::move(jd));
    }
    r.iteration_answers = j.value("iteration_answers", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad eval result: ") + e.what());
  }
  return r;
}

void save_results(const std::vector<EvalResult>& results, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : results) out << to_json(r).dump() << '\n';
}

std::vector<EvalResult> load_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open results: " + path.string());
  std::vector<EvalResult> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (detail::trim(line).empty()) continue;
    try {
      out.push_back(eval_result_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw ValidationError("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<EvalResult> run_eval(const std::vector<EvalRecord>& dataset, const PipelineConfig& config,
                                 const PipelineContext& pipeline, JudgeContext& judge,
                                 const EvalOptions& opts) {
  std::vector<EvalResult> results(dataset.size());
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, dataset.size()));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      results[i] = evaluate_one(dataset[i], config, pipeline, judge, opts);
    }
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  std::exception_ptr failure;
  std::mutex failure_mu;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < dataset.size(); i = next++) {
        try {
          results[i] = evaluate_one(dataset[i], config, pipeline, judge, opts);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

double f1(double precision, double recall) {
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

PrecisionRecall filter_audit_metrics(const FilterCounts& c) {
  return filter_audit_micro({c});
}

PrecisionRecall filter_audit_micro(const std::vector<FilterCounts>& records) {
  std::size_t kept = 0;
  std::size_t correct = 0;
  std::size_t missed = 0;
  for (const auto& r : records) {
    const std::size_t wrong = std::min(r.incorrectly_kept, r.kept);
    kept += r.kept;
    correct += r.kept - wrong;
    missed += r.incorrectly_discarded;
  }
  PrecisionRecall pr;
  pr.precision = fraction(correct, kept);
  pr.recall = fraction(correct, correct + missed);
  if (!pr.recall && kept > 0) pr.recall = 0.0;
  return pr;
}

IterationMetrics iterative_ranking(const std::vector<std::vector<int>>& rankings) {
  IterationMetrics m;
  std::array<double, 4> rank_sum{};
  std::array<std::size_t, 4> wins{};
  for (const auto& r : rankings) {
    std::array<int, 4> pos{};
    bool complete = r.size() == 4;
    for (std::size_t i = 0; complete && i < r.size(); ++i) {
      if (r[i] < 1 || r[i] > 4 || pos[r[i] - 1] != 0) complete = false;
      else pos[r[i] - 1] = static_cast<int>(i + 1);
    }
    if (!complete) {
      ++m.excluded;
      continue;
    }
    ++m.questions;
    for (int level = 0; level < 4; ++level) {
      rank_sum[level] += pos[level];
      if (pos[level] < pos[0]) ++wins[level];
    }
  }
  for (int level = 0; level < 4; ++level) {
    m.avg_rank[level] = m.questions ? rank_sum[level] / static_cast<double>(m.questions) : 0.0;
    m.improvement_rate[level] =
        m.questions ? static_cast<double>(wins[level]) / static_cast<double>(m.questions) : 0.0;
  }
  return m;
}

double FailureHistogram::percent(FailureCategory c) const {
  if (total == 0) return 0.0;
  auto it = counts.find(c);
  return 100.0 * static_cast<double>(it == counts.end() ? 0 : it->second) / static_cast<double>(total);
}

double FailureHistogram::unclassified_percent() const {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(unclassified) / static_cast<double>(total);
}

FailureHistogram failure_histogram(const std::vector<std::string>& raw_verdicts) {
  FailureHistogram h;
  for (auto c : kAllFailureCategories) h.counts[c] = 0;
  for (const auto& raw : raw_verdicts) {
    ++h.total;
    try {
      auto v = std::get<FailureModeVerdict>(parse_judge_json(raw, JudgeKind::failure_mode));
      ++h.counts[v.category];
    } catch (const ParseError&) {
      ++h.unclassified;
    }
  }
  return h;
}

MetricsReport compute_metrics(const std::vector<EvalResult>& results, double threshold) {
  MetricsReport m;
  std::vector<double> relevance, correctness, context, decomposition, refinement;
  std::size_t correct = 0, fully = 0, faith_n = 0, rejected = 0, rejection_n = 0, robust = 0, noise_n = 0;
  std::vector<FilterCounts> filter;
  SeaCounts sea;
  std::vector<std::vector<int>> rankings;
  std::vector<std::string> failure_raw;
  double tokens = 0, calls = 0, cost = 0, latency = 0;

  for (const auto& r : results) {
    ++m.records;
    if (r.trace.error) ++m.aborted;
    tokens += static_cast<double>(r.trace.accounting.total_tokens());
    calls += static_cast<double>(r.trace.accounting.api_calls);
    cost += r.trace.accounting.cost_usd;
    latency += r.trace.accounting.latency_s;

    for (const auto& j : r.judgments) {
      const std::string kind(to_string(j.kind));
      if (j.kind == JudgeKind::failure_mode) {
        failure_raw.push_back(j.error ? std::string() : j.raw);
        continue;
      }
      if (j.error) {
        ++m.exclusions[kind];
        continue;
      }
      JudgeVerdict v;
      try {
        v = parse_judge_json(j.raw, j.kind);
      } catch (const ParseError&) {
        ++m.exclusions[kind];
        continue;
      }
      switch (j.kind) {
        case JudgeKind::relevance_correctness: {
          const auto& rc = std::get<RelevanceCorrectnessVerdict>(v);
          relevance.push_back(rc.relevance_score);
          correctness.push_back(rc.correctness_score);
          if (rc.correctness_score >= threshold) ++correct;
          break;
        }
        case JudgeKind::faithfulness:
          ++faith_n;
          if (std::get<FaithfulnessVerdict>(v).verdict == Faithfulness::fully) ++fully;
          break;
        case JudgeKind::context_relevance: {
          const auto& cr = std::get<ContextRelevanceVerdict>(v);
          if (!cr.scores.empty()) context.push_back(cr.mean());
          break;
        }
        case JudgeKind::negative_rejection:
          ++rejection_n;
          if (std::get<NegativeRejectionVerdict>(v).correctly_rejected) ++rejected;
          break;
        case JudgeKind::noise_robustness: {
          const auto& nr = std::get<NoiseRobustnessVerdict>(v);
          ++noise_n;
          if (nr.is_robust && nr.is_correct) ++robust;
          break;
        }
        case JudgeKind::decomposition_score:
          decomposition.push_back(std::get<ScoreVerdict>(v).score);
          break;
        case JudgeKind::refinement_score:
          refinement.push_back(std::get<ScoreVerdict>(v).score);
          break;
        case JudgeKind::filter_audit: {
          const auto& fa = std::get<FilterAuditVerdict>(v);
          auto kept = j.context.value("kept", std::vector<std::string>{});
          auto discarded = j.context.value("discarded", std::vector<std::string>{});
          std::set<std::string> kept_set(kept.begin(), kept.end());
          std::set<std::string> discarded_set(discarded.begin(), discarded.end());
          FilterCounts fc;
          fc.kept = kept_set.size();
          for (const auto& id : std::set<std::string>(fa.incorrectly_kept_ids.begin(), fa.incorrectly_kept_ids.end())) {
            if (kept_set.count(id)) ++fc.incorrectly_kept;
          }
          for (const auto& id : std::set<std::string>(fa.incorrectly_discarded_ids.begin(),
                                                       fa.incorrectly_discarded_ids.end())) {
            if (discarded_set.count(id)) ++fc.incorrectly_discarded;
          }
          filter.push_back(fc);
          break;
        }
        case JudgeKind::sufficiency: {
          const bool judge_insufficient = !std::get<SufficiencyVerdict>(v).is_sufficient;
          const bool sea_continue = !j.context.value("sea_sufficient", false);
          ++sea.total;
          if (judge_insufficient == sea_continue) ++sea.agree;
          if (sea_continue) ++sea.predicted_pos;
          if (judge_insufficient) ++sea.actual_pos;
          if (sea_continue && judge_insufficient) ++sea.tp;
          break;
        }
        case JudgeKind::iterative_ranking:
          rankings.push_back(std::get<RankingVerdict>(v).order);
          break;
        case JudgeKind::failure_mode:
          break;
      }
    }
  }

  m.answer_relevance_mean = mean(relevance);
  m.correctness_mean = mean(correctness);
  m.correctness_acc = fraction(correct, correctness.size());
  m.faithfulness_fully_pct = fraction(fully, faith_n);
  m.context_relevance_mean = mean(context);
  m.negative_rejection_acc = fraction(rejected, rejection_n);
  m.noise_robustness_acc = fraction(robust, noise_n);
  m.decomposition_mean = mean(decomposition);
  m.refinement_mean = mean(refinement);
  if (!filter.empty()) {
    auto pr = filter_audit_micro(filter);
    m.filter_precision = pr.precision;
    m.filter_recall = pr.recall;
    if (pr.precision && pr.recall) m.filter_f1 = f1(*pr.precision, *pr.recall);
  }
  if (sea.total > 0) {
    m.sea_accuracy = fraction(sea.agree, sea.total);
    m.sea_precision = fraction(sea.tp, sea.predicted_pos);
    m.sea_recall = fraction(sea.tp, sea.actual_pos);
    if (m.sea_precision && m.sea_recall) m.sea_f1 = f1(*m.sea_precision, *m.sea_recall);
  }
  if (!rankings.empty()) {
    m.iterations = iterative_ranking(rankings);
    if (m.iterations->excluded) m.exclusions["iterative_ranking"] += m.iterations->excluded;
  }
  m.failures = failure_histogram(failure_raw);
  if (m.records) {
    const double n = static_cast<double>(m.records);
    m.avg_tokens = tokens / n;
    m.avg_calls = calls / n;
    m.avg_cost_usd = cost / n;
    m.avg_latency_s = latency / n;
  }
  return m;
}

json to_json(const MetricsReport& m) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json failures = json::object();
  for (const auto& [c, n] : m.failures.counts) {
    failures[std::string(to_string(c))] = {{"count", n}, {"percent", m.failures.percent(c)}};
  }
  failures["unclassified"] = {{"count", m.failures.unclassified},
                              {"percent", m.failures.unclassified_percent()}};
  json iterations = nullptr;
  if (m.iterations) {
    iterations = json::object();
    iterations["questions"] = m.iterations->questions;
    for (int level = 1; level <= 4; ++level) {
      iterations["iter_" + std::to_string(level)] = {
          {"avg_rank", m.iterations->avg_rank[level - 1]},
          {"improvement_rate", level == 1 ? json(nullptr) : json(m.iterations->improvement_rate[level - 1])}};
    }
  }
  return {{"records", m.records},
          {"aborted", m.aborted},
          {"answer_relevance_mean", opt(m.answer_relevance_mean)},
          {"correctness_mean", opt(m.correctness_mean)},
          {"correctness_acc", opt(m.correctness_acc)},
          {"faithfulness_fully_pct", opt(m.faithfulness_fully_pct)},
          {"context_relevance_mean", opt(m.context_relevance_mean)},
          {"negative_rejection_acc", opt(m.negative_rejection_acc)},
          {"noise_robustness_acc", opt(m.noise_robustness_acc)},
          {"components",
           {{"decomposition_mean", opt(m.decomposition_mean)},
            {"filter_precision", opt(m.filter_precision)},
            {"filter_recall", opt(m.filter_recall)},
            {"filter_f1", opt(m.filter_f1)},
            {"sea_accuracy", opt(m.sea_accuracy)},
            {"sea_precision", opt(m.sea_precision)},
            {"sea_recall", opt(m.sea_recall)},
            {"sea_f1", opt(m.sea_f1)},
            {"refinement_mean", opt(m.refinement_mean)}}},
          {"iterations", iterations},
          {"failures", failures},
          {"failures_total", m.failures.total},
          {"exclusions", m.exclusions},
          {"efficiency",
           {{"avg_tokens", m.avg_tokens},
            {"avg_calls", m.avg_calls},
            {"avg_cost_usd", m.avg_cost_usd},
            {"avg_latency_s", m.avg_latency_s}}}};
}

std::string format_report(const MetricsReport& m) {
  std::ostringstream out;
  char line[160];
  auto row = [&](const char* label, const std::optional<double>& v, bool pct) {
    if (!v) {
      std::snprintf(line, sizeof line, "  %-28s %10s\n", label, "-");
    } else if (pct) {
      std::snprintf(line, sizeof line, "  %-28s %9.1f%%\n", label, *v * 100.0);
    } else {
      std::snprintf(line, sizeof line, "  %-28s %10.2f\n", label, *v);
    }
    out << line;
  };

  out << "Records: " << m.records << " (aborted: " << m.aborted << ")\n\n";
  out << "Answer quality\n";
  row("Answer relevance (1-5)", m.answer_relevance_mean, false);
  row("Correctness (1-5)", m.correctness_mean, false);
  row("Correctness accuracy", m.correctness_acc, true);
  row("Fully faithful", m.faithfulness_fully_pct, true);
  row("Context relevance (1-5)", m.context_relevance_mean, false);
  row("Negative rejection acc.", m.negative_rejection_acc, true);
  row("Noise robustness acc.", m.noise_robustness_acc, true);

  out << "\nComponents\n";
  row("Decomposition (1-5)", m.decomposition_mean, false);
  row("Filter precision", m.filter_precision, true);
  row("Filter recall", m.filter_recall, true);
  row("Filter F1", m.filter_f1, true);
  row("SEA accuracy", m.sea_accuracy, true);
  row("SEA precision", m.sea_precision, true);
  row("SEA recall", m.sea_recall, true);
  row("SEA F1", m.sea_f1, true);
  row("Refinement (1-5)", m.refinement_mean, false);

  if (m.iterations) {
    out << "\nIterations (" << m.iterations->questions << " questions)\n";
    for (int level = 1; level <= 4; ++level) {
      if (level == 1) {
        std::snprintf(line, sizeof line, "  iter_%d  avg rank %.2f\n", level, m.iterations->avg_rank[0]);
      } else {
        std::snprintf(line, sizeof line, "  iter_%d  avg rank %.2f  improvement %.1f%%\n", level,
                      m.iterations->avg_rank[level - 1], m.iterations->improvement_rate[level - 1] * 100.0);
      }
      out << line;
    }
  }

  out << "\nFailure modes (" << m.failures.total << " cases)\n";
  for (auto c : kAllFailureCategories) {
    auto it = m.failures.counts.find(c);
    std::snprintf(line, sizeof line, "  %-28s %5zu %6.1f%%\n", std::string(to_string(c)).c_str(),
                  it == m.failures.counts.end() ? std::size_t{0} : it->second, m.failures.percent(c));
    out << line;
  }
  std::snprintf(line, sizeof line, "  %-28s %5zu %6.1f%%\n", "Unclassified", m.failures.unclassified,
                m.failures.unclassified_percent());
  out << line;

  out << "\nEfficiency (per query)\n";
  std::snprintf(line, sizeof line, "  tokens %.1f  calls %.2f  cost $%.3e  latency %.2f s\n", m.avg_tokens,
                m.avg_calls, m.avg_cost_usd, m.avg_latency_s);
  out << line;
  if (!m.exclusions.empty()) {
    out << "\nExcluded verdicts\n";
    for (const auto& [k, n] : m.exclusions) out << "  " << k << ": " << n << "\n";
  }
  return out.str();
}

}  // namespace fairrag
