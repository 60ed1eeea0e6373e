#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fairrag/domain.hpp"

namespace fairrag {

// ------------------------------------------------------------- templates

/// A prompt with single-brace {name} slots. Every slot found in the body is
/// required; brace pairs that are not identifiers (e.g. "{}") are literal text.
struct PromptTemplate {
  std::string name;
  std::string body;
  std::set<std::string> required;

  static PromptTemplate from_text(std::string name, std::string body);
  static PromptTemplate from_file(std::string name, const std::filesystem::path& path);
};

using Bindings = std::map<std::string, std::string>;

/// Exact single-pass substitution; bound values are not re-scanned. Throws
/// ValidationError naming the first unbound placeholder.
std::string render(const PromptTemplate& tpl, const Bindings& bindings);

/// Templates loaded from a prompts/ directory: validator, decomposer, filter,
/// sea, refiner, generator, direct_answer, failure_analysis and judges/<name>.
class PromptLibrary {
 public:
  static PromptLibrary load(const std::filesystem::path& dir);
  /// The directory baked in at build time.
  static const std::filesystem::path& default_dir();

  const PromptTemplate& get(const std::string& name) const;
  bool contains(const std::string& name) const { return templates_.count(name) > 0; }
  std::vector<std::string> names() const;

 private:
  std::map<std::string, PromptTemplate> templates_;
};

// ------------------------------------------------------------- pipeline parsers

QueryClass parse_validation(std::string_view raw);

/// Lines after the last "Optimized Queries"/"Improved Queries" header (or the
/// whole text when there is none) that start with -, *, • or a number.
/// At most `max_items` are kept; fewer than `min_items` throws ParseError.
std::vector<SubQuery> parse_query_list(std::string_view raw, SubQueryOrigin origin, int iteration,
                                       std::size_t min_items = 1, std::size_t max_items = 4);

struct FilterVerdict {
  std::set<std::string> unhelpful_ids;
  std::vector<std::string> warnings;  // ids outside the batch, dropped
};

FilterVerdict parse_filter(std::string_view raw, const std::set<std::string>& batch_ids);

/// Throws ParseError unless a "Sufficient:" field holds Yes or No.
SEAReport parse_sea(std::string_view raw);

/// Fixed Persian sentences the generator is told to emit verbatim.
namespace sentinels {
inline constexpr std::string_view kFatwa = "من مرجع صدور فتوا نیستم";
inline constexpr std::string_view kPartialEvidence = "اطلاعات کاملی برای پاسخ قطعی";
inline constexpr std::string_view kNoEvidence = "حاوی اطلاعات مرتبطی برای پاسخ به این پرسش نبودند";
}  // namespace sentinels

/// Citations are every [k] in the text (ASCII or Persian digits), sorted and
/// unique. Out-of-range ones are kept, and reported in `warnings` when given.
Answer parse_answer(std::string_view raw, std::size_t n_evidence,
                    std::vector<std::string>* warnings = nullptr);

// ------------------------------------------------------------- judges

enum class JudgeKind {
  decomposition_score,
  filter_audit,
  sufficiency,
  refinement_score,
  context_relevance,
  faithfulness,
  relevance_correctness,
  negative_rejection,
  noise_robustness,
  iterative_ranking,
  failure_mode,
};

std::string_view to_string(JudgeKind kind);
JudgeKind parse_judge_kind(std::string_view text);
/// Library key of the prompt used for a judge kind, e.g. "judges/faithfulness".
std::string judge_template_name(JudgeKind kind);

enum class Faithfulness { fully, partially, not_faithful };
std::string_view to_string(Faithfulness f);  // "Fully Faithful", ...
Faithfulness parse_faithfulness(std::string_view text);

enum class FailureCategory {
  query_decomposition,
  retrieval,
  evidence_filtering,
  sea,
  query_refinement,
  generation,
};
inline constexpr FailureCategory kAllFailureCategories[] = {
    FailureCategory::query_decomposition, FailureCategory::retrieval,
    FailureCategory::evidence_filtering,  FailureCategory::sea,
    FailureCategory::query_refinement,    FailureCategory::generation,
};
std::string_view to_string(FailureCategory c);  // "Retrieval Failure", ...
FailureCategory parse_failure_category(std::string_view text);

struct ScoreVerdict {
  double score = 0.0;
  std::string reasoning;
  bool operator==(const ScoreVerdict&) const = default;
};

struct FilterAuditVerdict {
  std::vector<std::string> incorrectly_kept_ids;
  std::vector<std::string> incorrectly_discarded_ids;
  bool operator==(const FilterAuditVerdict&) const = default;
};

struct SufficiencyVerdict {
  bool is_sufficient = false;
  std::string reasoning;
  bool operator==(const SufficiencyVerdict&) const = default;
};

struct DocScore {
  std::string doc_id;
  double score = 0.0;
  bool operator==(const DocScore&) const = default;
};

struct ContextRelevanceVerdict {
  std::vector<DocScore> scores;
  double mean() const;
  bool operator==(const ContextRelevanceVerdict&) const = default;
};

struct FaithfulnessVerdict {
  Faithfulness verdict = Faithfulness::fully;
  std::string reasoning;
  bool operator==(const FaithfulnessVerdict&) const = default;
};

struct RelevanceCorrectnessVerdict {
  double relevance_score = 0.0;
  double correctness_score = 0.0;
  std::string reasoning;
  bool operator==(const RelevanceCorrectnessVerdict&) const = default;
};

struct NegativeRejectionVerdict {
  bool correctly_rejected = false;
  bool operator==(const NegativeRejectionVerdict&) const = default;
};

struct NoiseRobustnessVerdict {
  bool is_robust = false;
  bool is_correct = false;
  std::string reasoning;
  bool operator==(const NoiseRobustnessVerdict&) const = default;
};

/// Levels (1..4) from best to worst, as given in "iter_3,iter_4,iter_2,iter_1".
struct RankingVerdict {
  std::vector<int> order;
  std::string reasoning;
  bool operator==(const RankingVerdict&) const = default;
};

struct FailureModeVerdict {
  FailureCategory category = FailureCategory::generation;
  std::string reasoning;
  std::string root_cause_analysis;
  std::string suggested_improvement;
  bool operator==(const FailureModeVerdict&) const = default;
};

using JudgeVerdict =
    std::variant<ScoreVerdict, FilterAuditVerdict, SufficiencyVerdict, ContextRelevanceVerdict,
                 FaithfulnessVerdict, RelevanceCorrectnessVerdict, NegativeRejectionVerdict,
                 NoiseRobustnessVerdict, RankingVerdict, FailureModeVerdict>;

/// Strips code fences, parses the outermost {...} and validates the keys of
/// the given schema. Throws ParseError (carrying the raw text) on malformed
/// JSON, a missing key, an out-of-range score or an enum violation.
JudgeVerdict parse_judge_json(std::string_view raw, JudgeKind kind);

}  // namespace fairrag
