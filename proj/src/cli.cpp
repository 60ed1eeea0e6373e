#include "fairrag/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "fairrag/errors.hpp"
#include "fairrag/evalharness.hpp"
#include "fairrag/ingest.hpp"
#include "fairrag/serialize.hpp"

namespace fairrag {

using nlohmann::json;

namespace {

PromptLibrary prompts_for(const Config& c) {
  return PromptLibrary::load(c.prompts_dir.empty() ? PromptLibrary::default_dir() : c.prompts_dir);
}

// The embedder only matters when the index carries vectors.
std::unique_ptr<EmbeddingProvider> embedder_for(const Config& c, const Index& index) {
  if (!index.has_dense()) return nullptr;
  auto e = make_embedder(c.embedding);
  if (e && e->dimension() != index.dimension()) {
    throw ConfigError("embedding dimension " + std::to_string(e->dimension()) + " does not match index dimension " +
                      std::to_string(index.dimension()));
  }
  return e;
}

void print_summary(const QueryTrace& t, std::ostream& out) {
  out << "Class: " << (t.query_class ? std::string(to_string(*t.query_class)) : "-") << "\n";
  for (const auto& it : t.iterations) {
    out << "Iteration " << it.index << "\n";
    for (const auto& q : it.sub_queries) out << "  - " << q.text << "\n";
    out << "  kept " << it.kept_ids.size() << ", discarded " << it.discarded_ids.size()
        << ", sufficient: " << (it.sea.sufficient ? "Yes" : "No") << "\n";
  }
  if (t.answer) {
    out << "\nAnswer:\n" << t.answer->text << "\n\n";
    out << "Citations: " << t.answer->citations.size() << " (evidence items " << t.final_evidence.size() << ")\n";
  }
  const auto& a = t.accounting;
  char line[200];
  std::snprintf(line, sizeof line, "Calls: %lld  Tokens: %lld (prompt %lld, completion %lld)  Cost: $%s  Latency: %.2f s\n",
                static_cast<long long>(a.api_calls), static_cast<long long>(a.total_tokens()),
                static_cast<long long>(a.prompt_tokens), static_cast<long long>(a.completion_tokens),
                format_sig(a.cost_usd).c_str(), a.latency_s);
  out << line;
  for (const auto& w : t.warnings) out << "warning: " << w << "\n";
  for (const auto& v : t.violations) out << "violation: " << v << "\n";
}

json cost_rows_json(const std::vector<CostRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"label", r.label}, {"avg_tokens", r.avg_tokens}, {"rate_per_mtok", r.rate},
                   {"cost_usd", r.cost}, {"cost_display", format_sig(r.cost)}});
  }
  return arr;
}

json latency_rows_json(const std::vector<LatencyRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"label", r.label},
                   {"avg_tokens", r.avg_tokens},
                   {"avg_calls", r.avg_calls},
                   {"predicted_s", r.predicted_s},
                   {"model_time_s", r.model_time_s},
                   {"h_ms_per_token", r.h_ms_per_token},
                   {"R_ms_per_token", r.R_ms_per_token}});
  }
  return arr;
}

}  // namespace

int cmd_ingest(const Config& config, const IngestArgs& args, std::ostream& out, std::ostream& err) {
  auto loaded = load_corpus(args.corpus, config.chunk_tokens, default_tokenizer(),
                            args.lenient ? LoadMode::lenient : LoadMode::strict);
  for (const auto& e : loaded.errors) err << "skipped " << e << "\n";

  IndexParams params;
  params.bm25 = config.bm25;
  params.rrf_k = config.rrf_k;
  if (auto embedder = make_embedder(config.embedding)) {
    embed_chunks(loaded.chunks, *embedder);
    params.dimension = embedder->dimension();
    params.embedding_provider = embedder->name();
  }
  const std::size_t chunks = loaded.chunks.size();
  auto index = build_index(std::move(loaded.chunks), params);
  save_index(index, args.out_dir);

  if (args.json) {
    out << json{{"documents", loaded.documents}, {"chunks", chunks}, {"skipped", loaded.errors.size()},
                {"index", args.out_dir.string()}}
               .dump()
        << "\n";
  } else {
    out << "Indexed " << loaded.documents << " documents as " << chunks << " chunks into " << args.out_dir.string()
        << "\n";
  }
  return 0;
}

int cmd_ask(const Config& config, const AskArgs& args, std::ostream& out, std::ostream& err) {
  PipelineConfig pc = config.pipeline;
  if (args.max_iter) pc.max_iter = *args.max_iter;
  pc.validate();

  BackendConfig bc = config.gateway;
  if (args.backend) bc.mode = *args.backend;
  if (args.script) bc.script = *args.script;

  const Index index = load_index(config.index_dir);
  const auto embedder = embedder_for(config, index);
  const auto prompts = prompts_for(config);
  Gateway gateway(make_backend(bc), gateway_options(bc, config.cost));
  PipelineContext ctx{index, embedder.get(), gateway, prompts};

  const QueryTrace trace = run_query(args.question, pc, ctx);

  if (!args.trace_out.empty()) {
    std::ofstream f(args.trace_out, std::ios::app);
    if (!f) throw Error("cannot write " + args.trace_out.string());
    f << json(trace).dump() << "\n";
  }
  if (args.json) {
    out << json(trace).dump(2) << "\n";
  } else {
    print_summary(trace, out);
  }
  if (trace.error) {
    err << "aborted in stage " << trace.error->stage << ": " << trace.error->message << "\n";
    return 1;
  }
  return 0;
}

int cmd_eval(const Config& config, const EvalArgs& args, std::ostream& out, std::ostream& err) {
  const auto dataset = load_dataset(args.dataset);
  const Index index = load_index(config.index_dir);
  const auto embedder = embedder_for(config, index);
  const auto prompts = prompts_for(config);

  Gateway pipeline_gateway(make_backend(config.gateway), gateway_options(config.gateway, config.cost));
  Gateway judge_gateway(make_backend(config.judge), gateway_options(config.judge, config.cost));
  PipelineContext ctx{index, embedder.get(), pipeline_gateway, prompts};
  JudgeContext judge{judge_gateway, prompts, config.judge_tier};

  EvalOptions opts;
  opts.correctness_threshold = config.correctness_threshold;
  opts.iterative_study = args.iterative;
  opts.jobs = std::max<std::size_t>(1, args.jobs);

  const auto results = run_eval(dataset, config.pipeline, ctx, judge, opts);
  if (!args.out.empty()) save_results(results, args.out);

  const auto report = compute_metrics(results, config.correctness_threshold);
  if (args.json) {
    out << to_json(report).dump(2) << "\n";
  } else {
    out << format_report(report);
  }
  for (const auto& r : results) {
    if (r.trace.error) {
      err << "record " << r.record.id << " aborted in stage " << r.trace.error->stage << ": "
          << r.trace.error->message << "\n";
    }
  }
  return report.aborted == 0 ? 0 : 1;
}

int cmd_report(const Config& config, const ReportArgs& args, std::ostream& out, std::ostream&) {
  std::optional<MetricsReport> report;
  if (args.results) report = compute_metrics(load_results(*args.results), config.correctness_threshold);

  auto cost_rows = reference_cost_rows(config.cost);
  // Reference workload: 5.64 calls per 10.9k tokens.
  std::vector<LatencyRow> latency_rows = {latency_row("Reference", 10900, 5.64, config.pipeline.latency)};
  if (report && report->records > 0) {
    const double rate = report->avg_tokens > 0 ? report->avg_cost_usd / report->avg_tokens * 1e6 : 0.0;
    cost_rows.push_back({"This run", report->avg_tokens, rate, report->avg_cost_usd});
    if (report->avg_tokens > 0) {
      latency_rows.push_back(latency_row("This run", report->avg_tokens, report->avg_calls, config.pipeline.latency));
    }
  }

  if (args.json) {
    out << json{{"metrics", report ? to_json(*report) : json(nullptr)},
                {"cost", cost_rows_json(cost_rows)},
                {"latency", latency_rows_json(latency_rows)}}
               .dump(2)
        << "\n";
  } else {
    if (report) out << format_report(*report) << "\n";
    out << "Cost per query\n" << format_cost_table(cost_rows) << "\n";
    out << "Latency decomposition\n" << format_latency_table(latency_rows);
  }
  return 0;
}

int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Iterative evidence-filtering RAG engine", "fairrag"};
  app.require_subcommand(1);

  std::string config_path;
  bool json_out = false;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_flag("--json", json_out, "Machine-readable output");
  app.add_option("--jobs", jobs, "Parallel evaluation workers")->check(CLI::PositiveNumber);

  IngestArgs ingest;
  std::string out_dir;
  auto* ingest_cmd = app.add_subcommand("ingest", "Chunk a JSONL corpus and build the index");
  ingest_cmd->add_option("corpus", ingest.corpus, "Corpus JSONL")->required();
  ingest_cmd->add_option("--out", out_dir, "Index directory (default: paths.index)");
  ingest_cmd->add_flag("--lenient", ingest.lenient, "Skip bad records instead of failing");

  AskArgs ask;
  std::string trace_out;
  auto* ask_cmd = app.add_subcommand("ask", "Answer one question and show its trace");
  ask_cmd->add_option("question", ask.question)->required();
  ask_cmd->add_option("--max-iter", ask.max_iter, "Iteration cap (1-4)")->check(CLI::Range(1, 4));
  ask_cmd->add_option("--trace-out", trace_out, "Append the full trace as JSONL");
  ask_cmd->add_option("--backend", ask.backend, "http or scripted")->check(CLI::IsMember({"http", "scripted"}));
  ask_cmd->add_option("--script", ask.script, "Scripted backend rule file");

  EvalArgs eval;
  std::string eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Run the pipeline and judges over a dataset");
  eval_cmd->add_option("dataset", eval.dataset, "Dataset JSONL")->required();
  eval_cmd->add_option("--out", eval_out, "Write traces and raw verdicts as JSONL");
  eval_cmd->add_flag("--iterative", eval.iterative, "Also run the max_iter 1-4 ranking study");

  ReportArgs report;
  std::string results_path;
  auto* report_cmd = app.add_subcommand("report", "Metric, cost and latency tables");
  report_cmd->add_option("results", results_path, "Results JSONL from eval --out");

  try {
    std::vector<std::string> reversed(argv.rbegin(), argv.rend() - (argv.empty() ? 0 : 1));
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    Config config = config_path.empty() ? Config{} : load_config(config_path);
    if (*ingest_cmd) {
      ingest.out_dir = out_dir.empty() ? config.index_dir : std::filesystem::path(out_dir);
      ingest.json = json_out;
      return cmd_ingest(config, ingest, out, err);
    }
    if (*ask_cmd) {
      ask.trace_out = trace_out;
      ask.json = json_out;
      return cmd_ask(config, ask, out, err);
    }
    if (*eval_cmd) {
      eval.out = eval_out;
      eval.jobs = jobs;
      eval.json = json_out;
      return cmd_eval(config, eval, out, err);
    }
    if (!results_path.empty()) report.results = results_path;
    report.json = json_out;
    return cmd_report(config, report, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace fairrag
