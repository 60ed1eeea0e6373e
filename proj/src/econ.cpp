#include "fairrag/econ.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "fairrag/errors.hpp"

namespace fairrag {

void LatencyModel::validate() const {
  if (!(m >= 0 && h >= 0 && R >= 0)) throw ValidationError("latency parameters must be non-negative");
}

void CostModel::validate() const {
  if (!(input_share >= 0.0 && input_share <= 1.0)) {
    throw ValidationError("input share must lie in [0,1]");
  }
  for (auto t : kAllTiers) {
    auto it = tiers.find(t);
    if (it == tiers.end()) throw ValidationError("no pricing for tier " + std::string(to_string(t)));
    fairrag::validate(it->second);
  }
  double sum = 0.0;
  for (const auto& [tier, w] : mix) {
    if (w < 0.0) throw ValidationError("mix weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("mix weights must sum to 1");
}

double predict_latency(double tokens, double calls, const LatencyModel& model) {
  if (tokens < 0 || calls < 0) throw ValidationError("tokens and calls must be non-negative");
  return model.m * tokens + model.h * calls + model.R;
}

double recover_model_time(double t_measured, double calls, const LatencyModel& model) {
  const double overhead = model.h * calls + model.R;
  // Tolerate floating residue when t was itself produced by predict_latency.
  if (t_measured < overhead - 1e-12) {
    throw ValidationError("measured latency is below the fixed overhead h*C + R");
  }
  return t_measured - overhead;
}

OverheadShares overhead_per_token(double tokens, double calls, const LatencyModel& model) {
  if (tokens <= 0) throw ValidationError("tokens must be positive");
  return {model.h * calls / tokens, model.R / tokens};
}

double blended_rate(Tier tier, const CostModel& model) {
  const auto& spec = model.tiers.at(tier);
  return model.input_share * spec.input_price + (1.0 - model.input_share) * spec.output_price;
}

double dynamic_rate(const CostModel& model) {
  double rate = 0.0;
  for (const auto& [tier, w] : model.mix) rate += w * blended_rate(tier, model);
  return rate;
}

double cost_per_query(double tokens, double rate_per_mtok) {
  if (tokens < 0) throw ValidationError("tokens must be non-negative");
  return tokens * rate_per_mtok / 1e6;
}

double call_cost(Tier tier, double prompt_tokens, double completion_tokens, const CostModel& model) {
  const auto& spec = model.tiers.at(tier);
  return (prompt_tokens * spec.input_price + completion_tokens * spec.output_price) / 1e6;
}

double round_sig(double value, int digits) {
  if (value == 0.0 || !std::isfinite(value)) return value;
  const double magnitude = std::floor(std::log10(std::abs(value)));
  const double scale = std::pow(10.0, digits - 1 - magnitude);
  return std::round(value * scale) / scale;
}

std::string format_sig(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, value);
  return buf;
}

std::vector<CostRow> reference_cost_rows(const CostModel& model) {
  std::vector<CostRow> rows = {
      {"Static Small", 16145, blended_rate(Tier::small, model), 0},
      {"Static Large", 11681, blended_rate(Tier::large, model), 0},
      {"Static Reasoner", 33934, blended_rate(Tier::reasoner, model), 0},
      {"Dynamic", 11863, dynamic_rate(model), 0},
  };
  for (auto& r : rows) r.cost = cost_per_query(r.avg_tokens, r.rate);
  return rows;
}

std::string format_cost_table(const std::vector<CostRow>& rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-20s %12s %14s %12s\n", "Configuration", "Avg. Tokens",
                "Rate ($/Mtok)", "Avg. Cost ($)");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-20s %12.0f %14.3f %12s\n", r.label.c_str(), r.avg_tokens,
                  r.rate, format_sig(r.cost).c_str());
    out << line;
  }
  return out.str();
}

LatencyRow latency_row(std::string label, double avg_tokens, double avg_calls,
                       const LatencyModel& model) {
  LatencyRow row;
  row.label = std::move(label);
  row.avg_tokens = avg_tokens;
  row.avg_calls = avg_calls;
  row.predicted_s = predict_latency(avg_tokens, avg_calls, model);
  row.model_time_s = model.m * avg_tokens;
  if (avg_tokens > 0) {
    auto shares = overhead_per_token(avg_tokens, avg_calls, model);
    row.h_ms_per_token = shares.h_per_token_s * 1e3;
    row.R_ms_per_token = shares.R_per_token_s * 1e3;
  }
  return row;
}

std::string format_latency_table(const std::vector<LatencyRow>& rows) {
  std::ostringstream out;
  char line[200];
  std::snprintf(line, sizeof line, "%-20s %10s %8s %12s %12s %10s %10s\n", "Configuration",
                "Tokens", "Calls", "Predicted(s)", "Model(s)", "h ms/tok", "R ms/tok");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-20s %10.0f %8.2f %12.2f %12.2f %10.2f %10.2f\n",
                  r.label.c_str(), r.avg_tokens, r.avg_calls, r.predicted_s, r.model_time_s,
                  r.h_ms_per_token, r.R_ms_per_token);
    out << line;
  }
  return out.str();
}

}  // namespace fairrag
