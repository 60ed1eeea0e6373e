#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairrag/agents.hpp"
#include "fairrag/domain.hpp"
#include "fairrag/econ.hpp"
#include "fairrag/errors.hpp"
#include "fairrag/gateway.hpp"
#include "fairrag/retrieval.hpp"

namespace fairrag {

struct PipelineConfig {
  int max_iter = 3;
  std::size_t top_k_per_retriever = 3;
  std::size_t top_n = 3;
  std::size_t filter_batch_size = 10;
  RoutingTable routing = RoutingTable::dynamic_default();
  bool sparse_only_fallback = true;
  bool filter_memoization = true;
  // Extra attempts after an agent output fails to parse.
  int parse_retries = 1;
  int max_output_tokens = 2048;
  double temperature = 0.0;
  std::size_t chunk_token_limit = kDefaultChunkTokens;
  LatencyModel latency;

  /// max_iter in [1,4], positive sizes.
  void validate() const;
};

/// Evidence gathered across iterations. Kept chunks keep first-kept order.
class EvidencePool {
 public:
  bool is_kept(const std::string& id) const { return kept_index_.count(id) > 0; }
  bool is_discarded(const std::string& id) const { return discarded_.count(id) > 0; }

  void keep(const Chunk& chunk);
  void discard(const std::string& id);
  void note_source(const std::string& id, int iteration, const std::string& sub_query);

  const std::vector<Chunk>& kept() const { return kept_; }
  const std::set<std::string>& discarded() const { return discarded_; }
  const std::map<std::string, std::vector<std::pair<int, std::string>>>& provenance() const {
    return provenance_;
  }

 private:
  std::vector<Chunk> kept_;
  std::map<std::string, std::size_t> kept_index_;
  std::set<std::string> discarded_;
  std::map<std::string, std::vector<std::pair<int, std::string>>> provenance_;
};

/// Shared, read-only dependencies of a query run.
struct PipelineContext {
  const Index& index;
  const EmbeddingProvider* embedder;  // may be null: sparse-only retrieval
  Gateway& gateway;
  const PromptLibrary& prompts;
};

/// Extra chunks placed among the iteration-1 candidates (noise evaluation).
struct RunOptions {
  std::vector<Chunk> injected;
};

/// Thrown inside a run when a stage cannot continue; run_query turns it into
/// trace.error.
class StageAbort : public Error {
 public:
  explicit StageAbort(StageFailure failure)
      : Error(failure.stage + ": " + failure.message), failure_(std::move(failure)) {}
  const StageFailure& failure() const { return failure_; }

 private:
  StageFailure failure_;
};

/// Per-run state threaded through the stage functions.
struct RunState {
  const PipelineConfig& config;
  const PipelineContext& ctx;
  CallLedger ledger;
  std::vector<std::string> warnings;
};

/// "[k] text\nSource_URL: url" blocks numbered from 1, or "No evidence collected.".
std::string format_evidence(const std::vector<Chunk>& evidence);
/// "[doc_k]: text" blocks for one filter batch.
std::string format_filter_batch(const std::vector<Chunk>& batch);
std::string format_query_lines(const std::vector<SubQuery>& queries);

struct FilterOutcome {
  std::vector<std::string> presented_ids;
  std::vector<std::string> kept_ids;
  std::set<std::string> discarded_ids;
  int batches = 0;
};

/// Presents candidates in batches with per-batch [doc_k] ids and applies the
/// verdicts to the pool. Memoised discards are never re-presented.
FilterOutcome filter_evidence(const std::vector<Chunk>& candidates, std::string_view original_query,
                              EvidencePool& pool, RunState& state);

struct Assessment {
  SEAReport sea;
  std::optional<std::vector<SubQuery>> refined;
};

/// SEA over the kept evidence, then (when insufficient and `allow_refine`)
/// the refiner for iteration `iteration + 1`.
Assessment assess_and_refine(const EvidencePool& pool, std::string_view original_query,
                             const std::vector<SubQuery>& previous_queries, int iteration,
                             bool allow_refine, RunState& state);

QueryTrace run_query(std::string_view query, const PipelineConfig& config,
                     const PipelineContext& ctx, const RunOptions& options = {});

/// Persian answer returned for rejected queries.
std::string rejection_text(QueryClass cls);

}  // namespace fairrag
