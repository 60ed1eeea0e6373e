#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace fairrag {

inline constexpr std::size_t kDefaultChunkTokens = 378;

enum class ChunkKind { encyclopedia, qa };

std::string_view to_string(ChunkKind kind);
ChunkKind parse_chunk_kind(std::string_view text);

/// One searchable unit of the knowledge base.
struct Chunk {
  std::string id;
  std::string text;
  std::string source_url;
  std::size_t token_count = 0;
  ChunkKind kind = ChunkKind::encyclopedia;
  std::optional<std::vector<double>> embedding;

  bool operator==(const Chunk&) const = default;
};

/// Triage label emitted by the validator agent.
enum class QueryClass {
  valid_obvious,
  valid_small,
  valid_large,
  valid_reasoner,
  out_of_scope_islamic,
  unethical,
};

inline constexpr QueryClass kAllQueryClasses[] = {
    QueryClass::valid_obvious,  QueryClass::valid_small,
    QueryClass::valid_large,    QueryClass::valid_reasoner,
    QueryClass::out_of_scope_islamic, QueryClass::unethical,
};

/// Wire label, e.g. "VALID_LARGE".
std::string_view to_string(QueryClass cls);
/// Exact match against the six labels; throws ValidationError otherwise.
QueryClass parse_query_class(std::string_view label);
std::optional<QueryClass> try_parse_query_class(std::string_view label);

inline bool is_rejection(QueryClass cls) {
  return cls == QueryClass::out_of_scope_islamic || cls == QueryClass::unethical;
}

enum class Tier { small, large, reasoner };

inline constexpr Tier kAllTiers[] = {Tier::small, Tier::large, Tier::reasoner};

std::string_view to_string(Tier tier);
Tier parse_tier(std::string_view text);

/// Model identity and pay-as-you-go prices for one tier, in USD per million tokens.
struct TierSpec {
  std::string model;
  double input_price = 0.0;
  double output_price = 0.0;

  bool operator==(const TierSpec&) const = default;
};

void validate(const TierSpec& spec);

enum class AgentRole { validator, decomposer, filter, sea, refiner, generator, direct_answer, judge };

std::string_view to_string(AgentRole role);
AgentRole parse_agent_role(std::string_view text);

enum class SubQueryOrigin { decomposition, refinement };

std::string_view to_string(SubQueryOrigin origin);
SubQueryOrigin parse_sub_query_origin(std::string_view text);

struct SubQuery {
  std::string text;
  SubQueryOrigin origin = SubQueryOrigin::decomposition;
  int iteration = 1;

  bool operator==(const SubQuery&) const = default;
};

/// Trims the text and checks invariants; throws ValidationError on empty text
/// or a non-positive iteration.
SubQuery make_sub_query(std::string_view text, SubQueryOrigin origin, int iteration);

/// Parsed output of the Structured Evidence Assessment agent.
struct SEAReport {
  std::string main_goal;
  std::vector<std::string> required_findings;
  std::string confirmed_findings;
  std::string remaining_gaps;
  std::string conclusion;
  bool sufficient = false;

  bool operator==(const SEAReport&) const = default;
};

/// True when a "Remaining Gaps" field says there is nothing left ("None", empty).
bool gaps_are_none(std::string_view gaps);

struct IterationRecord {
  int index = 1;
  std::vector<SubQuery> sub_queries;
  // One list per sub-query, in fused rank order.
  std::vector<std::vector<std::string>> retrieved_ids;
  // Distractors placed into the candidate set (noise evaluation only).
  std::vector<std::string> injected_ids;
  // Candidates shown to the filter, in presentation order.
  std::vector<std::string> presented_ids;
  std::vector<std::string> kept_ids;
  std::set<std::string> discarded_ids;
  int filter_batches = 0;
  SEAReport sea;

  bool operator==(const IterationRecord&) const = default;
};

enum class Disclaimer { fatwa_warning, partial_evidence, no_evidence, rejection };

std::string_view to_string(Disclaimer d);
Disclaimer parse_disclaimer(std::string_view text);

struct Answer {
  std::string text;
  std::vector<int> citations;
  std::set<Disclaimer> disclaimers;

  bool operator==(const Answer&) const = default;
};

/// One gateway invocation as seen by the trace.
struct CallRecord {
  AgentRole role = AgentRole::validator;
  Tier tier = Tier::large;
  std::string model;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  double cost_usd = 0.0;

  bool operator==(const CallRecord&) const = default;
};

struct Accounting {
  std::int64_t api_calls = 0;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  double cost_usd = 0.0;
  double latency_s = 0.0;

  std::int64_t total_tokens() const { return prompt_tokens + completion_tokens; }

  bool operator==(const Accounting&) const = default;
};

/// Where and why a query aborted.
struct StageFailure {
  std::string stage;
  std::string message;
  std::string raw;

  bool operator==(const StageFailure&) const = default;
};

struct QueryTrace {
  std::string query;
  std::optional<QueryClass> query_class;
  int max_iter = 3;
  std::vector<IterationRecord> iterations;
  std::vector<Chunk> final_evidence;
  std::optional<Answer> answer;
  Accounting accounting;
  std::vector<CallRecord> calls;
  std::optional<StageFailure> error;
  std::vector<std::string> violations;
  // Non-fatal oddities: dropped filter ids, retrieval fallbacks.
  std::vector<std::string> warnings;

  bool operator==(const QueryTrace&) const = default;
};

/// Checks every domain invariant on a finished trace. Returns one description
/// per violation, empty when the trace is well formed.
std::vector<std::string> validate_trace(const QueryTrace& trace,
                                        std::optional<std::size_t> chunk_token_limit = std::nullopt);

}  // namespace fairrag
