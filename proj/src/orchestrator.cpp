#include "fairrag/orchestrator.hpp"

#include <algorithm>

#include "fairrag/errors.hpp"

namespace fairrag {

void PipelineConfig::validate() const {
  if (max_iter < 1 || max_iter > 4) throw ConfigError("max_iter must lie in [1,4]");
  if (top_k_per_retriever == 0 || top_n == 0) throw ConfigError("retrieval sizes must be positive");
  if (filter_batch_size == 0) throw ConfigError("filter batch size must be positive");
  if (parse_retries < 0) throw ConfigError("parse_retries must be non-negative");
  latency.validate();
}

void EvidencePool::keep(const Chunk& chunk) {
  discarded_.erase(chunk.id);
  if (kept_index_.emplace(chunk.id, kept_.size()).second) kept_.push_back(chunk);
}

void EvidencePool::discard(const std::string& id) {
  if (!is_kept(id)) discarded_.insert(id);
}

void EvidencePool::note_source(const std::string& id, int iteration, const std::string& sub_query) {
  provenance_[id].emplace_back(iteration, sub_query);
}

std::string format_evidence(const std::vector<Chunk>& evidence) {
  if (evidence.empty()) return "No evidence collected.";
  std::string out;
  for (std::size_t i = 0; i < evidence.size(); ++i) {
    if (i) out += "\n\n";
    out += "[" + std::to_string(i + 1) + "] " + evidence[i].text;
    out += "\nSource_URL: " + evidence[i].source_url;
  }
  return out;
}

std::string format_filter_batch(const std::vector<Chunk>& batch) {
  std::string out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (i) out += "\n\n";
    out += "[doc_" + std::to_string(i + 1) + "]: " + batch[i].text;
  }
  return out;
}

std::string format_query_lines(const std::vector<SubQuery>& queries) {
  std::string out;
  for (const auto& q : queries) {
    if (!out.empty()) out += '\n';
    out += "- " + q.text;
  }
  return out;
}

std::string rejection_text(QueryClass cls) {
  if (cls == QueryClass::unethical) {
    return "[هشدار] این پرسش با اصول اخلاقی سامانه سازگار نیست و به آن پاسخ داده نمی‌شود.";
  }
  return "[هشدار] این پرسش خارج از حوزه دانش اسلامی این سامانه است و به آن پاسخ داده نمی‌شود.";
}

namespace {

// One agent call, re-asked once (by default) when the output does not parse.
template <typename Parse>
auto call_agent(RunState& state, AgentRole role, std::optional<QueryClass> cls,
                const std::string& prompt, const char* stage, Parse parse) {
  ChatRequest req;
  req.role = role;
  req.tier = route(role, cls, state.config.routing);
  req.prompt = prompt;
  req.max_output_tokens = state.config.max_output_tokens;
  req.temperature = state.config.temperature;

  for (int attempt = 0;; ++attempt) {
    ChatResponse resp;
    try {
      resp = state.ctx.gateway.complete(req, &state.ledger);
    } catch (const Error& e) {
      throw StageAbort({stage, e.what(), ""});
    }
    try {
      return parse(resp.text);
    } catch (const ParseError& e) {
      if (attempt >= state.config.parse_retries) throw StageAbort({stage, e.what(), e.raw()});
    } catch (const ValidationError& e) {
      if (attempt >= state.config.parse_retries) throw StageAbort({stage, e.what(), resp.text});
    }
  }
}

std::string render_or_abort(const PromptLibrary& lib, const std::string& name, const Bindings& b,
                            const char* stage) {
  try {
    return render(lib.get(name), b);
  } catch (const Error& e) {
    throw StageAbort({stage, e.what(), ""});
  }
}

}  // namespace

FilterOutcome filter_evidence(const std::vector<Chunk>& candidates, std::string_view original_query,
                              EvidencePool& pool, RunState& state) {
  FilterOutcome out;
  std::vector<Chunk> present;
  std::set<std::string> seen;
  for (const auto& c : candidates) {
    if (!seen.insert(c.id).second || pool.is_kept(c.id)) continue;
    if (state.config.filter_memoization && pool.is_discarded(c.id)) continue;
    present.push_back(c);
  }

  const std::size_t size = state.config.filter_batch_size;
  for (std::size_t start = 0; start < present.size(); start += size) {
    std::vector<Chunk> batch(present.begin() + static_cast<std::ptrdiff_t>(start),
                             present.begin() + static_cast<std::ptrdiff_t>(std::min(start + size, present.size())));
    ++out.batches;
    std::set<std::string> batch_ids;
    for (std::size_t i = 0; i < batch.size(); ++i) batch_ids.insert("doc_" + std::to_string(i + 1));

    auto prompt = render_or_abort(state.ctx.prompts, "filter",
                                  {{"original_query", std::string(original_query)},
                                   {"batch_number", std::to_string(out.batches)},
                                   {"numbered_candidates_text_for_prompt", format_filter_batch(batch)}},
                                  "filter");
    auto verdict = call_agent(state, AgentRole::filter, std::nullopt, prompt, "filter",
                              [&](const std::string& raw) { return parse_filter(raw, batch_ids); });
    for (auto& w : verdict.warnings) state.warnings.push_back(std::move(w));

    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& c = batch[i];
      out.presented_ids.push_back(c.id);
      if (verdict.unhelpful_ids.count("doc_" + std::to_string(i + 1))) {
        pool.discard(c.id);
        out.discarded_ids.insert(c.id);
      } else {
        pool.keep(c);
        out.kept_ids.push_back(c.id);
      }
    }
  }
  return out;
}

Assessment assess_and_refine(const EvidencePool& pool, std::string_view original_query,
                             const std::vector<SubQuery>& previous_queries, int iteration,
                             bool allow_refine, RunState& state) {
  Assessment a;
  auto sea_prompt = render_or_abort(state.ctx.prompts, "sea",
                                    {{"original_query", std::string(original_query)},
                                     {"combined_evidence", format_evidence(pool.kept())}},
                                    "sea");
  a.sea = call_agent(state, AgentRole::sea, std::nullopt, sea_prompt, "sea",
                     [](const std::string& raw) { return parse_sea(raw); });
  if (a.sea.sufficient || !allow_refine) return a;

  std::string summary = "Confirmed Findings: " + a.sea.confirmed_findings +
                        "\nRemaining Gaps: " + a.sea.remaining_gaps;
  auto refine_prompt = render_or_abort(state.ctx.prompts, "refiner",
                                       {{"original_query", std::string(original_query)},
                                        {"analysis_summary", summary},
                                        {"combined_previous_queries", format_query_lines(previous_queries)}},
                                       "refiner");
  a.refined = call_agent(state, AgentRole::refiner, std::nullopt, refine_prompt, "refiner",
                         [&](const std::string& raw) {
                           return parse_query_list(raw, SubQueryOrigin::refinement, iteration + 1);
                         });
  return a;
}

QueryTrace run_query(std::string_view query, const PipelineConfig& config,
                     const PipelineContext& ctx, const RunOptions& options) {
  config.validate();
  QueryTrace trace;
  trace.query = std::string(query);
  trace.max_iter = config.max_iter;

  RunState state{config, ctx, {}, {}};
  EvidencePool pool;
  const std::string q(query);

  try {
    // Phase 1: triage.
    auto cls = call_agent(state, AgentRole::validator, std::nullopt,
                          render_or_abort(ctx.prompts, "validator", {{"user_query", q}}, "validator"),
                          "validator", [](const std::string& raw) { return parse_validation(raw); });
    trace.query_class = cls;

    if (is_rejection(cls)) {
      Answer a;
      a.text = rejection_text(cls);
      a.disclaimers.insert(Disclaimer::rejection);
      trace.answer = std::move(a);
    } else if (cls == QueryClass::valid_obvious) {
      trace.answer = call_agent(
          state, AgentRole::direct_answer, cls,
          render_or_abort(ctx.prompts, "direct_answer", {{"user_query", q}}, "direct_answer"),
          "direct_answer", [](const std::string& raw) { return parse_answer(raw, 0); });
    } else {
      auto active = call_agent(
          state, AgentRole::decomposer, cls,
          render_or_abort(ctx.prompts, "decomposer", {{"user_query", q}}, "decomposer"), "decomposer",
          [](const std::string& raw) {
            return parse_query_list(raw, SubQueryOrigin::decomposition, 1);
          });
      std::vector<SubQuery> all_queries = active;

      HybridOptions hopts;
      hopts.top_k_per_retriever = config.top_k_per_retriever;
      hopts.top_n = config.top_n;
      hopts.sparse_only_fallback = config.sparse_only_fallback;

      // Phases 2 and 3: retrieve, filter, assess, refine.
      for (int i = 1; i <= config.max_iter; ++i) {
        IterationRecord rec;
        rec.index = i;
        rec.sub_queries = active;

        std::vector<Chunk> candidates;
        for (const auto& sq : active) {
          HybridResult hr;
          try {
            hr = hybrid_retrieve(ctx.index, sq.text, ctx.embedder, hopts);
          } catch (const Error& e) {
            throw StageAbort({"retrieval", e.what(), sq.text});
          }
          if (hr.used_fallback) {
            state.warnings.push_back("dense retrieval failed for '" + sq.text + "'; used BM25 only");
          }
          std::vector<std::string> ids;
          for (auto& c : hr.chunks) {
            ids.push_back(c.id);
            pool.note_source(c.id, i, sq.text);
            candidates.push_back(std::move(c));
          }
          rec.retrieved_ids.push_back(std::move(ids));
        }
        if (i == 1) {
          for (const auto& c : options.injected) {
            rec.injected_ids.push_back(c.id);
            candidates.push_back(c);
          }
        }

        auto filtered = filter_evidence(candidates, q, pool, state);
        rec.presented_ids = std::move(filtered.presented_ids);
        rec.kept_ids = std::move(filtered.kept_ids);
        rec.discarded_ids = std::move(filtered.discarded_ids);
        rec.filter_batches = filtered.batches;

        const bool last = i == config.max_iter;
        auto assessment = assess_and_refine(pool, q, all_queries, i, !last, state);
        rec.sea = assessment.sea;
        trace.iterations.push_back(std::move(rec));
        if (assessment.sea.sufficient || last) break;

        active = std::move(*assessment.refined);
        all_queries.insert(all_queries.end(), active.begin(), active.end());
      }

      // Phase 4: grounded generation over everything kept.
      trace.final_evidence = pool.kept();
      auto gen_prompt = render_or_abort(ctx.prompts, "generator",
                                        {{"original_query", q},
                                         {"combined_evidence", format_evidence(pool.kept())}},
                                        "generator");
      const std::size_t n = pool.kept().size();
      trace.answer = call_agent(state, AgentRole::generator, cls, gen_prompt, "generator",
                                [n](const std::string& raw) { return parse_answer(raw, n); });
    }
  } catch (const StageAbort& abort) {
    trace.error = abort.failure();
    if (trace.final_evidence.empty()) trace.final_evidence = pool.kept();
  }

  trace.calls = state.ledger.calls();
  trace.accounting = state.ledger.totals();
  trace.accounting.latency_s = predict_latency(static_cast<double>(trace.accounting.total_tokens()),
                                               static_cast<double>(trace.accounting.api_calls),
                                               config.latency);
  trace.warnings = std::move(state.warnings);
  trace.violations = validate_trace(trace, config.chunk_token_limit);
  return trace;
}

}  // namespace fairrag
