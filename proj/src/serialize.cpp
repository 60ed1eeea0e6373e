#include "fairrag/serialize.hpp"

#include "fairrag/errors.hpp"

namespace fairrag {

namespace {

template <typename T>
T required(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T optional_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

}  // namespace

void to_json(json& j, const Chunk& c) {
  j = json{{"id", c.id},
           {"text", c.text},
           {"source_url", c.source_url},
           {"token_count", c.token_count},
           {"kind", to_string(c.kind)}};
  if (c.embedding) j["embedding"] = *c.embedding;
}

void from_json(const json& j, Chunk& c) {
  c.id = required<std::string>(j, "id");
  c.text = required<std::string>(j, "text");
  c.source_url = optional_or<std::string>(j, "source_url", "");
  c.token_count = required<std::size_t>(j, "token_count");
  c.kind = parse_chunk_kind(required<std::string>(j, "kind"));
  if (auto it = j.find("embedding"); it != j.end() && !it->is_null()) {
    c.embedding = it->get<std::vector<double>>();
  } else {
    c.embedding.reset();
  }
}

void to_json(json& j, const SubQuery& q) {
  j = json{{"text", q.text}, {"origin", to_string(q.origin)}, {"iteration", q.iteration}};
}

void from_json(const json& j, SubQuery& q) {
  q.text = required<std::string>(j, "text");
  q.origin = parse_sub_query_origin(required<std::string>(j, "origin"));
  q.iteration = required<int>(j, "iteration");
}

void to_json(json& j, const SEAReport& r) {
  j = json{{"main_goal", r.main_goal},
           {"required_findings", r.required_findings},
           {"confirmed_findings", r.confirmed_findings},
           {"remaining_gaps", r.remaining_gaps},
           {"conclusion", r.conclusion},
           {"sufficient", r.sufficient}};
}

void from_json(const json& j, SEAReport& r) {
  r.main_goal = optional_or<std::string>(j, "main_goal", "");
  r.required_findings = optional_or<std::vector<std::string>>(j, "required_findings", {});
  r.confirmed_findings = optional_or<std::string>(j, "confirmed_findings", "");
  r.remaining_gaps = optional_or<std::string>(j, "remaining_gaps", "");
  r.conclusion = optional_or<std::string>(j, "conclusion", "");
  r.sufficient = required<bool>(j, "sufficient");
}

void to_json(json& j, const IterationRecord& r) {
  j = json{{"index", r.index},
           {"sub_queries", r.sub_queries},
           {"retrieved_ids", r.retrieved_ids},
           {"injected_ids", r.injected_ids},
           {"presented_ids", r.presented_ids},
           {"kept_ids", r.kept_ids},
           {"discarded_ids", r.discarded_ids},
           {"filter_batches", r.filter_batches},
           {"sea", r.sea}};
}

void from_json(const json& j, IterationRecord& r) {
  r.index = required<int>(j, "index");
  r.sub_queries = required<std::vector<SubQuery>>(j, "sub_queries");
  r.retrieved_ids = required<std::vector<std::vector<std::string>>>(j, "retrieved_ids");
  r.injected_ids = optional_or<std::vector<std::string>>(j, "injected_ids", {});
  r.presented_ids = optional_or<std::vector<std::string>>(j, "presented_ids", {});
  r.kept_ids = optional_or<std::vector<std::string>>(j, "kept_ids", {});
  r.discarded_ids = required<std::set<std::string>>(j, "discarded_ids");
  r.filter_batches = optional_or<int>(j, "filter_batches", 0);
  r.sea = required<SEAReport>(j, "sea");
}

void to_json(json& j, const Answer& a) {
  json disclaimers = json::array();
  for (auto d : a.disclaimers) disclaimers.push_back(to_string(d));
  j = json{{"text", a.text}, {"citations", a.citations}, {"disclaimers", disclaimers}};
}

void from_json(const json& j, Answer& a) {
  a.text = required<std::string>(j, "text");
  a.citations = optional_or<std::vector<int>>(j, "citations", {});
  a.disclaimers.clear();
  for (const auto& d : optional_or<std::vector<std::string>>(j, "disclaimers", {})) {
    a.disclaimers.insert(parse_disclaimer(d));
  }
}

void to_json(json& j, const CallRecord& c) {
  j = json{{"role", to_string(c.role)},
           {"tier", to_string(c.tier)},
           {"model", c.model},
           {"prompt_tokens", c.prompt_tokens},
           {"completion_tokens", c.completion_tokens},
           {"cost_usd", c.cost_usd}};
}

void from_json(const json& j, CallRecord& c) {
  c.role = parse_agent_role(required<std::string>(j, "role"));
  c.tier = parse_tier(required<std::string>(j, "tier"));
  c.model = optional_or<std::string>(j, "model", "");
  c.prompt_tokens = required<std::int64_t>(j, "prompt_tokens");
  c.completion_tokens = required<std::int64_t>(j, "completion_tokens");
  c.cost_usd = optional_or<double>(j, "cost_usd", 0.0);
}

void to_json(json& j, const Accounting& a) {
  j = json{{"api_calls", a.api_calls},
           {"prompt_tokens", a.prompt_tokens},
           {"completion_tokens", a.completion_tokens},
           {"cost_usd", a.cost_usd},
           {"latency_s", a.latency_s}};
}

void from_json(const json& j, Accounting& a) {
  a.api_calls = required<std::int64_t>(j, "api_calls");
  a.prompt_tokens = required<std::int64_t>(j, "prompt_tokens");
  a.completion_tokens = required<std::int64_t>(j, "completion_tokens");
  a.cost_usd = required<double>(j, "cost_usd");
  a.latency_s = required<double>(j, "latency_s");
}

void to_json(json& j, const StageFailure& f) {
  j = json{{"stage", f.stage}, {"message", f.message}, {"raw", f.raw}};
}

void from_json(const json& j, StageFailure& f) {
  f.stage = required<std::string>(j, "stage");
  f.message = optional_or<std::string>(j, "message", "");
  f.raw = optional_or<std::string>(j, "raw", "");
}

void to_json(json& j, const QueryTrace& t) {
  j = json{{"query", t.query},
           {"class", t.query_class ? json(to_string(*t.query_class)) : json(nullptr)},
           {"max_iter", t.max_iter},
           {"iterations", t.iterations},
           {"final_evidence", t.final_evidence},
           {"answer", t.answer ? json(*t.answer) : json(nullptr)},
           {"accounting", t.accounting},
           {"calls", t.calls},
           {"error", t.error ? json(*t.error) : json(nullptr)},
           {"violations", t.violations},
           {"warnings", t.warnings}};
}

void from_json(const json& j, QueryTrace& t) {
  t.query = required<std::string>(j, "query");
  if (auto it = j.find("class"); it != j.end() && !it->is_null()) {
    t.query_class = parse_query_class(it->get<std::string>());
  } else {
    t.query_class.reset();
  }
  t.max_iter = required<int>(j, "max_iter");
  t.iterations = required<std::vector<IterationRecord>>(j, "iterations");
  t.final_evidence = required<std::vector<Chunk>>(j, "final_evidence");
  if (auto it = j.find("answer"); it != j.end() && !it->is_null()) {
    t.answer = it->get<Answer>();
  } else {
    t.answer.reset();
  }
  t.accounting = required<Accounting>(j, "accounting");
  t.calls = optional_or<std::vector<CallRecord>>(j, "calls", {});
  if (auto it = j.find("error"); it != j.end() && !it->is_null()) {
    t.error = it->get<StageFailure>();
  } else {
    t.error.reset();
  }
  t.violations = optional_or<std::vector<std::string>>(j, "violations", {});
  t.warnings = optional_or<std::vector<std::string>>(j, "warnings", {});
}

std::string trace_to_jsonl(const QueryTrace& trace) { return json(trace).dump(); }

QueryTrace trace_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("trace is not valid JSON: ") + e.what());
  }
  return j.get<QueryTrace>();
}

}  // namespace fairrag
