#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "fairrag/domain.hpp"
#include "fairrag/econ.hpp"
#include "fairrag/tokenizer.hpp"

namespace fairrag {

struct ChatRequest {
  AgentRole role = AgentRole::validator;
  Tier tier = Tier::large;
  std::string prompt;
  int max_output_tokens = 2048;
  double temperature = 0.0;
};

/// Non-empty prompt, positive output budget, temperature in [0, 2].
void validate(const ChatRequest& req);

struct ChatResponse {
  std::string text;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;

  bool operator==(const ChatResponse&) const = default;
};

/// What a backend returns; usage may be missing.
struct BackendReply {
  std::string text;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// Throws GatewayError; retryable() marks transport and 5xx failures.
  virtual BackendReply send(const ChatRequest& req, const std::string& model) = 0;
};

struct ScriptRule {
  std::string match;                // substring of the prompt
  std::string response;
  std::optional<AgentRole> role;    // optional extra constraint

  bool operator==(const ScriptRule&) const = default;
};

/// Deterministic backend driven by an ordered rule list. A request consumes the
/// first unconsumed rule that matches; when every matching rule is consumed the
/// most recently consumed match answers again. A request nothing matches fails.
class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<ScriptRule> rules);
  /// JSONL of {"match", "response", "role"?}.
  static std::vector<ScriptRule> parse_rules(std::string_view jsonl);
  static std::unique_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

  BackendReply send(const ChatRequest& req, const std::string& model) override;

  /// Forgets consumption so the script can be replayed.
  void reset();
  std::size_t consumed() const;
  const std::vector<ScriptRule>& rules() const { return rules_; }

 private:
  std::vector<ScriptRule> rules_;
  std::vector<bool> used_;
  std::vector<std::size_t> order_;  // consumption order
  mutable std::mutex mu_;
};

struct HttpBackendConfig {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string api_key;
  int connect_timeout_s = 10;
  int read_timeout_s = 300;
};

/// Chat-completion endpoint: POST {base}/chat/completions with
/// {model, messages:[{role:"user", content}], temperature, max_tokens}.
class HttpBackend final : public ChatBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  BackendReply send(const ChatRequest& req, const std::string& model) override;

 private:
  HttpBackendConfig config_;
};

/// Per-query accounting context. Thread safe.
class CallLedger {
 public:
  void record(CallRecord rec);
  std::vector<CallRecord> calls() const;
  /// Sums over the recorded calls; latency is left at zero.
  Accounting totals() const;
  std::int64_t count() const;

 private:
  mutable std::mutex mu_;
  std::vector<CallRecord> calls_;
};

struct GatewayOptions {
  CostModel pricing;                       // tier model names and prices
  int max_retries = 3;
  std::vector<double> backoff_s = {1.0, 2.0, 4.0};
  std::size_t max_in_flight = 8;
  std::function<void(double)> sleep;      // defaults to a real sleep
};

/// Uniform completion interface over the tiers: retries, in-flight cap and
/// token accounting.
class Gateway {
 public:
  Gateway(std::shared_ptr<ChatBackend> backend, GatewayOptions opts = {},
          const Tokenizer& tok = default_tokenizer());

  ChatResponse complete(const ChatRequest& req, CallLedger* ledger = nullptr);

  const GatewayOptions& options() const { return opts_; }
  ChatBackend& backend() { return *backend_; }

 private:
  std::shared_ptr<ChatBackend> backend_;
  GatewayOptions opts_;
  const Tokenizer& tok_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
};

/// Role → tier, with a per-class override for the generator.
struct RoutingTable {
  std::map<AgentRole, Tier> roles;
  std::map<QueryClass, Tier> generator_by_class;

  static RoutingTable dynamic_default();
  /// Every role (and every generator class) on one tier.
  static RoutingTable uniform(Tier tier);

  bool operator==(const RoutingTable&) const = default;
};

/// Throws ConfigError when the table has no entry for the role.
Tier route(AgentRole role, std::optional<QueryClass> cls, const RoutingTable& table);

}  // namespace fairrag
