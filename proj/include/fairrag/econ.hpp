#pragma once

#include <map>
#include <string>
#include <vector>

#include "fairrag/domain.hpp"

namespace fairrag {

/// End-to-end latency as m·N + h·C + R.
struct LatencyModel {
  double m = 0.001866;  // seconds per token
  double h = 0.50;      // seconds per call
  double R = 1.0;       // seconds per run

  void validate() const;
};

struct CostModel {
  std::map<Tier, TierSpec> tiers = {
      {Tier::small, {"small", 0.03, 0.06}},
      {Tier::large, {"large", 0.23, 0.40}},
      {Tier::reasoner, {"reasoner", 0.70, 2.40}},
  };
  double input_share = 0.90;
  std::map<Tier, double> mix = {{Tier::large, 0.80}, {Tier::small, 0.15}, {Tier::reasoner, 0.05}};

  /// α ∈ [0,1], non-negative prices, mix weights non-negative and summing to 1.
  void validate() const;
};

double predict_latency(double tokens, double calls, const LatencyModel& model = {});

/// t − h·C − R. Throws ValidationError when t < h·C + R.
double recover_model_time(double t_measured, double calls, const LatencyModel& model = {});

/// Per-token share of the call and run overheads at a given call density.
struct OverheadShares {
  double h_per_token_s = 0.0;
  double R_per_token_s = 0.0;
};
OverheadShares overhead_per_token(double tokens, double calls, const LatencyModel& model = {});

/// α·input + (1 − α)·output, $/Mtok.
double blended_rate(Tier tier, const CostModel& model = {});
/// Σ w_t · blended_rate(t), $/Mtok.
double dynamic_rate(const CostModel& model = {});
/// N · rate / 1e6, dollars.
double cost_per_query(double tokens, double rate_per_mtok);

/// Exact per-call cost from real prompt/completion splits.
double call_cost(Tier tier, double prompt_tokens, double completion_tokens, const CostModel& model);

double round_sig(double value, int digits = 3);
/// "2.89e-03" style, `digits` significant figures.
std::string format_sig(double value, int digits = 3);

struct CostRow {
  std::string label;
  double avg_tokens = 0.0;
  double rate = 0.0;
  double cost = 0.0;
};

/// Average tokens per query of the reported configurations, used for the
/// cost table when no traces are supplied.
std::vector<CostRow> reference_cost_rows(const CostModel& model = {});

/// Plain-text cost table, one row per configuration.
std::string format_cost_table(const std::vector<CostRow>& rows);

struct LatencyRow {
  std::string label;
  double avg_tokens = 0.0;
  double avg_calls = 0.0;
  double predicted_s = 0.0;
  double model_time_s = 0.0;
  double h_ms_per_token = 0.0;
  double R_ms_per_token = 0.0;
};

LatencyRow latency_row(std::string label, double avg_tokens, double avg_calls,
                       const LatencyModel& model = {});
std::string format_latency_table(const std::vector<LatencyRow>& rows);

}  // namespace fairrag
