#include "fairrag/gateway.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fairrag/errors.hpp"
#include "http_util.hpp"
#include "text_util.hpp"

namespace fairrag {

using json = nlohmann::json;

void validate(const ChatRequest& req) {
  if (detail::trim(req.prompt).empty()) throw ValidationError("chat prompt is empty");
  if (req.max_output_tokens <= 0) throw ValidationError("max_output_tokens must be positive");
  if (!(req.temperature >= 0.0 && req.temperature <= 2.0)) {
    throw ValidationError("temperature must lie in [0, 2]");
  }
}

// ---------------------------------------------------------------- scripted

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules)
    : rules_(std::move(rules)), used_(rules_.size(), false) {}

std::vector<ScriptRule> ScriptedBackend::parse_rules(std::string_view jsonl) {
  std::vector<ScriptRule> rules;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(jsonl)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      ScriptRule r;
      r.match = j.at("match").get<std::string>();
      r.response = j.at("response").get<std::string>();
      if (auto it = j.find("role"); it != j.end() && !it->is_null()) {
        r.role = parse_agent_role(it->get<std::string>());
      }
      rules.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ValidationError("script line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rules;
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open script file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return std::make_unique<ScriptedBackend>(parse_rules(ss.str()));
}

BackendReply ScriptedBackend::send(const ChatRequest& req, const std::string&) {
  auto matches = [&](const ScriptRule& r) {
    return (!r.role || *r.role == req.role) && req.prompt.find(r.match) != std::string::npos;
  };
  std::lock_guard lock(mu_);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (!used_[i] && matches(rules_[i])) {
      used_[i] = true;
      order_.push_back(i);
      return {rules_[i].response, std::nullopt, std::nullopt};
    }
  }
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    if (matches(rules_[*it])) return {rules_[*it].response, std::nullopt, std::nullopt};
  }
  throw GatewayError("no scripted rule matches prompt: \"" + detail::head(req.prompt, 80) + "\"");
}

void ScriptedBackend::reset() {
  std::lock_guard lock(mu_);
  used_.assign(rules_.size(), false);
  order_.clear();
}

std::size_t ScriptedBackend::consumed() const {
  std::lock_guard lock(mu_);
  return order_.size();
}

// ---------------------------------------------------------------- http

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  detail::split_url(config_.base_url);  // fail fast on a bad URL
}

BackendReply HttpBackend::send(const ChatRequest& req, const std::string& model) {
  auto url = detail::split_url(config_.base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(config_.connect_timeout_s);
  client.set_read_timeout(config_.read_timeout_s);

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  json body = {{"model", model},
               {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})},
               {"temperature", req.temperature},
               {"max_tokens", req.max_output_tokens}};

  auto res = client.Post(url.path_prefix + "/chat/completions", headers, body.dump(),
                         "application/json");
  if (!res) {
    throw GatewayError("transport error: " + httplib::to_string(res.error()), true);
  }
  if (res->status >= 500) {
    throw GatewayError("server error HTTP " + std::to_string(res->status), true);
  }
  if (res->status != 200) {
    throw GatewayError("HTTP " + std::to_string(res->status) + ": " + detail::head(res->body, 200));
  }

  BackendReply reply;
  try {
    auto j = json::parse(res->body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    reply.text = content.is_null() ? std::string() : content.get<std::string>();
    if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
      if (u->contains("prompt_tokens")) reply.prompt_tokens = u->at("prompt_tokens").get<std::int64_t>();
      if (u->contains("completion_tokens")) {
        reply.completion_tokens = u->at("completion_tokens").get<std::int64_t>();
      }
    }
  } catch (const json::exception& e) {
    throw GatewayError(std::string("malformed completion response: ") + e.what());
  }
  return reply;
}

// ---------------------------------------------------------------- ledger

void CallLedger::record(CallRecord rec) {
  std::lock_guard lock(mu_);
  calls_.push_back(std::move(rec));
}

std::vector<CallRecord> CallLedger::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::int64_t CallLedger::count() const {
  std::lock_guard lock(mu_);
  return static_cast<std::int64_t>(calls_.size());
}

Accounting CallLedger::totals() const {
  std::lock_guard lock(mu_);
  Accounting a;
  for (const auto& c : calls_) {
    ++a.api_calls;
    a.prompt_tokens += c.prompt_tokens;
    a.completion_tokens += c.completion_tokens;
    a.cost_usd += c.cost_usd;
  }
  return a;
}

// ---------------------------------------------------------------- gateway

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, GatewayOptions opts, const Tokenizer& tok)
    : backend_(std::move(backend)), opts_(std::move(opts)), tok_(tok) {
  if (!backend_) throw ConfigError("gateway needs a backend");
  if (opts_.max_in_flight == 0) throw ConfigError("max_in_flight must be positive");
  if (opts_.max_retries < 0) throw ConfigError("max_retries must be non-negative");
  opts_.pricing.validate();
  if (!opts_.sleep) {
    opts_.sleep = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
  }
  slots_ = std::make_unique<std::counting_semaphore<>>(static_cast<std::ptrdiff_t>(opts_.max_in_flight));
}

ChatResponse Gateway::complete(const ChatRequest& req, CallLedger* ledger) {
  validate(req);
  const auto& spec = opts_.pricing.tiers.at(req.tier);

  BackendReply reply;
  for (int attempt = 0;; ++attempt) {
    slots_->acquire();
    try {
      reply = backend_->send(req, spec.model);
      slots_->release();
      break;
    } catch (const GatewayError& e) {
      slots_->release();
      if (!e.retryable()) throw;
      if (attempt >= opts_.max_retries) {
        throw GatewayError(std::string(e.what()) + " (gave up after " + std::to_string(attempt + 1) +
                           " attempts)");
      }
      double wait = opts_.backoff_s.empty()
                        ? 0.0
                        : opts_.backoff_s[std::min<std::size_t>(attempt, opts_.backoff_s.size() - 1)];
      opts_.sleep(wait);
    } catch (...) {
      slots_->release();
      throw;
    }
  }

  ChatResponse resp;
  resp.prompt_tokens = reply.prompt_tokens.value_or(static_cast<std::int64_t>(tok_.count(req.prompt)));
  resp.completion_tokens =
      reply.completion_tokens.value_or(static_cast<std::int64_t>(tok_.count(reply.text)));
  resp.text = std::move(reply.text);

  if (ledger) {
    ledger->record({req.role, req.tier, spec.model, resp.prompt_tokens, resp.completion_tokens,
                    call_cost(req.tier, static_cast<double>(resp.prompt_tokens),
                              static_cast<double>(resp.completion_tokens), opts_.pricing)});
  }
  return resp;
}

// ---------------------------------------------------------------- routing

RoutingTable RoutingTable::dynamic_default() {
  RoutingTable t;
  t.roles = {{AgentRole::validator, Tier::large},     {AgentRole::decomposer, Tier::small},
             {AgentRole::filter, Tier::large},        {AgentRole::sea, Tier::small},
             {AgentRole::refiner, Tier::large},       {AgentRole::generator, Tier::large},
             {AgentRole::direct_answer, Tier::small}, {AgentRole::judge, Tier::large}};
  t.generator_by_class = {{QueryClass::valid_small, Tier::small},
                          {QueryClass::valid_large, Tier::large},
                          {QueryClass::valid_reasoner, Tier::reasoner}};
  return t;
}

RoutingTable RoutingTable::uniform(Tier tier) {
  RoutingTable t;
  for (auto role : {AgentRole::validator, AgentRole::decomposer, AgentRole::filter, AgentRole::sea,
                    AgentRole::refiner, AgentRole::generator, AgentRole::direct_answer,
                    AgentRole::judge}) {
    t.roles[role] = tier;
  }
  for (auto cls : kAllQueryClasses) t.generator_by_class[cls] = tier;
  return t;
}

Tier route(AgentRole role, std::optional<QueryClass> cls, const RoutingTable& table) {
  if (role == AgentRole::generator && cls) {
    if (auto it = table.generator_by_class.find(*cls); it != table.generator_by_class.end()) {
      return it->second;
    }
  }
  auto it = table.roles.find(role);
  if (it == table.roles.end()) {
    throw ConfigError("routing table has no tier for role " + std::string(to_string(role)));
  }
  return it->second;
}

}  // namespace fairrag
