#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fairrag/agents.hpp"
#include "fairrag/domain.hpp"
#include "fairrag/gateway.hpp"
#include "fairrag/orchestrator.hpp"

namespace fairrag {

enum class EvalCategory { multihop, negative_rejection, noise, obvious };

std::string_view to_string(EvalCategory c);
EvalCategory parse_eval_category(std::string_view text);

struct EvalRecord {
  std::string id;
  std::string question;
  std::string ground_truth;
  EvalCategory category = EvalCategory::multihop;
  std::vector<std::string> distractor_ids;

  bool operator==(const EvalRecord&) const = default;
};

/// Non-empty id and question; noise records need distractors.
void validate(const EvalRecord& r);
EvalRecord parse_eval_record(std::string_view json_line);
/// JSONL dataset; throws ValidationError naming the 1-based line on a bad record.
std::vector<EvalRecord> load_dataset(const std::filesystem::path& path);

/// One judge invocation as persisted: the raw output plus whatever context the
/// metric needs, so reports can be recomputed from the file alone.
struct Judgment {
  JudgeKind kind = JudgeKind::relevance_correctness;
  std::string raw;
  nlohmann::json context = nlohmann::json::object();
  std::optional<std::string> error;  // gateway failure; raw is then empty

  bool operator==(const Judgment&) const = default;
};

struct EvalResult {
  EvalRecord record;
  QueryTrace trace;
  std::vector<Judgment> judgments;
  // Answers for max_iter = 1..4 when the iterative study ran.
  std::vector<std::string> iteration_answers;

  bool operator==(const EvalResult&) const = default;
};

nlohmann::json to_json(const EvalResult& r);
EvalResult eval_result_from_json(const nlohmann::json& j);
void save_results(const std::vector<EvalResult>& results, const std::filesystem::path& path);
std::vector<EvalResult> load_results(const std::filesystem::path& path);

struct EvalOptions {
  double correctness_threshold = 4.0;
  bool component_judges = true;   // decomposition, filter, sufficiency, refinement
  bool iterative_study = false;   // re-run multihop records with max_iter 1..4
  bool classify_failures = true;  // failure-mode judge on answers below threshold
  std::size_t jobs = 1;
};

/// Judge-side dependencies; independent of the pipeline gateway.
struct JudgeContext {
  Gateway& gateway;
  const PromptLibrary& prompts;
  Tier tier = Tier::large;
};

/// Runs the pipeline over every record, then the judges appropriate to its
/// category. Noise distractors are injected into iteration-1 candidates.
std::vector<EvalResult> run_eval(const std::vector<EvalRecord>& dataset, const PipelineConfig& config,
                                 const PipelineContext& pipeline, JudgeContext& judge,
                                 const EvalOptions& opts = {});

/// 2pr/(p+r), 0 when both are 0.
double f1(double precision, double recall);

struct FilterCounts {
  std::size_t kept = 0;
  std::size_t incorrectly_kept = 0;
  std::size_t incorrectly_discarded = 0;
};

/// Per-record precision/recall; precision is nullopt for an empty kept set.
struct PrecisionRecall {
  std::optional<double> precision;
  std::optional<double> recall;
};
PrecisionRecall filter_audit_metrics(const FilterCounts& c);
/// Micro-average over records.
PrecisionRecall filter_audit_micro(const std::vector<FilterCounts>& records);

struct IterationMetrics {
  std::array<double, 4> avg_rank{};           // index = level - 1
  std::array<double, 4> improvement_rate{};   // share of questions where level k beats level 1
  std::size_t questions = 0;
  std::size_t excluded = 0;
};

/// From best-to-worst rankings of levels 1..4; incomplete rankings are excluded.
IterationMetrics iterative_ranking(const std::vector<std::vector<int>>& rankings);

struct FailureHistogram {
  std::map<FailureCategory, std::size_t> counts;
  std::size_t unclassified = 0;
  std::size_t total = 0;

  double percent(FailureCategory c) const;
  double unclassified_percent() const;
};

/// Histogram over raw failure-mode judge outputs. Unparseable outputs and
/// category strings outside the six land in "unclassified".
FailureHistogram failure_histogram(const std::vector<std::string>& raw_verdicts);

struct SeaCounts {
  std::size_t total = 0;
  std::size_t agree = 0;
  std::size_t tp = 0;              // SEA "continue" and judge "insufficient"
  std::size_t predicted_pos = 0;   // SEA "continue"
  std::size_t actual_pos = 0;      // judge "insufficient"
};

struct MetricsReport {
  std::size_t records = 0;
  std::size_t aborted = 0;
  std::optional<double> answer_relevance_mean;
  std::optional<double> correctness_mean;
  std::optional<double> correctness_acc;
  std::optional<double> faithfulness_fully_pct;
  std::optional<double> context_relevance_mean;
  std::optional<double> negative_rejection_acc;
  std::optional<double> noise_robustness_acc;
  std::optional<double> decomposition_mean;
  std::optional<double> filter_precision;
  std::optional<double> filter_recall;
  std::optional<double> filter_f1;
  std::optional<double> sea_accuracy;
  std::optional<double> sea_precision;
  std::optional<double> sea_recall;
  std::optional<double> sea_f1;
  std::optional<double> refinement_mean;
  std::optional<IterationMetrics> iterations;
  FailureHistogram failures;
  std::map<std::string, std::size_t> exclusions;  // judge kind → unparseable verdicts
  double avg_tokens = 0.0;
  double avg_calls = 0.0;
  double avg_cost_usd = 0.0;
  double avg_latency_s = 0.0;
};

/// Pure reduction over persisted results; identical input gives identical output.
MetricsReport compute_metrics(const std::vector<EvalResult>& results, double correctness_threshold = 4.0);

nlohmann::json to_json(const MetricsReport& m);
/// Plain-text tables shaped like the quality, component and iteration tables.
std::string format_report(const MetricsReport& m);

}  // namespace fairrag
