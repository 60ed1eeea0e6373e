#include "fairrag/domain.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <utility>

#include "fairrag/errors.hpp"
#include "text_util.hpp"

namespace fairrag {

namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E value) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

template <typename E, std::size_t N>
std::optional<E> value_of(const NameTable<E, N>& table, std::string_view name) {
  for (const auto& [v, n] : table) {
    if (n == name) return v;
  }
  return std::nullopt;
}

constexpr NameTable<ChunkKind, 2> kChunkKinds{{
    {ChunkKind::encyclopedia, "encyclopedia"},
    {ChunkKind::qa, "qa"},
}};

constexpr NameTable<QueryClass, 6> kQueryClasses{{
    {QueryClass::valid_obvious, "VALID_OBVIOUS"},
    {QueryClass::valid_small, "VALID_SMALL"},
    {QueryClass::valid_large, "VALID_LARGE"},
    {QueryClass::valid_reasoner, "VALID_REASONER"},
    {QueryClass::out_of_scope_islamic, "OUT_OF_SCOPE_ISLAMIC"},
    {QueryClass::unethical, "UNETHICAL"},
}};

constexpr NameTable<Tier, 3> kTiers{{
    {Tier::small, "small"},
    {Tier::large, "large"},
    {Tier::reasoner, "reasoner"},
}};

constexpr NameTable<AgentRole, 8> kRoles{{
    {AgentRole::validator, "validator"},
    {AgentRole::decomposer, "decomposer"},
    {AgentRole::filter, "filter"},
    {AgentRole::sea, "sea"},
    {AgentRole::refiner, "refiner"},
    {AgentRole::generator, "generator"},
    {AgentRole::direct_answer, "direct_answer"},
    {AgentRole::judge, "judge"},
}};

constexpr NameTable<SubQueryOrigin, 2> kOrigins{{
    {SubQueryOrigin::decomposition, "decomposition"},
    {SubQueryOrigin::refinement, "refinement"},
}};

constexpr NameTable<Disclaimer, 4> kDisclaimers{{
    {Disclaimer::fatwa_warning, "fatwa_warning"},
    {Disclaimer::partial_evidence, "partial_evidence"},
    {Disclaimer::no_evidence, "no_evidence"},
    {Disclaimer::rejection, "rejection"},
}};

template <typename E, std::size_t N>
E parse_or_throw(const NameTable<E, N>& table, std::string_view text, const char* what) {
  if (auto v = value_of(table, text)) return *v;
  throw ValidationError(std::string("unknown ") + what + ": '" + std::string(text) + "'");
}

}  // namespace

std::string_view to_string(ChunkKind kind) { return name_of(kChunkKinds, kind); }
ChunkKind parse_chunk_kind(std::string_view text) {
  return parse_or_throw(kChunkKinds, text, "chunk kind");
}

std::string_view to_string(QueryClass cls) { return name_of(kQueryClasses, cls); }
std::optional<QueryClass> try_parse_query_class(std::string_view label) {
  return value_of(kQueryClasses, label);
}
QueryClass parse_query_class(std::string_view label) {
  return parse_or_throw(kQueryClasses, label, "query class");
}

std::string_view to_string(Tier tier) { return name_of(kTiers, tier); }
Tier parse_tier(std::string_view text) { return parse_or_throw(kTiers, text, "model tier"); }

void validate(const TierSpec& spec) {
  if (!(spec.input_price >= 0.0) || !(spec.output_price >= 0.0)) {
    throw ValidationError("tier prices must be non-negative (model '" + spec.model + "')");
  }
}

std::string_view to_string(AgentRole role) { return name_of(kRoles, role); }
AgentRole parse_agent_role(std::string_view text) {
  return parse_or_throw(kRoles, text, "agent role");
}

std::string_view to_string(SubQueryOrigin origin) { return name_of(kOrigins, origin); }
SubQueryOrigin parse_sub_query_origin(std::string_view text) {
  return parse_or_throw(kOrigins, text, "sub-query origin");
}

std::string_view to_string(Disclaimer d) { return name_of(kDisclaimers, d); }
Disclaimer parse_disclaimer(std::string_view text) {
  return parse_or_throw(kDisclaimers, text, "disclaimer");
}

SubQuery make_sub_query(std::string_view text, SubQueryOrigin origin, int iteration) {
  auto trimmed = detail::trim(text);
  if (trimmed.empty()) throw ValidationError("sub-query text is empty");
  if (iteration < 1) throw ValidationError("sub-query iteration must be positive");
  return SubQuery{std::string(trimmed), origin, iteration};
}

bool gaps_are_none(std::string_view gaps) {
  std::string s = detail::strip_decoration(gaps);
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == ';')) s.pop_back();
  s = std::string(detail::trim(s));
  return s.empty() || detail::iequals_ascii(s, "none") || detail::iequals_ascii(s, "n/a");
}

std::vector<std::string> validate_trace(const QueryTrace& trace,
                                        std::optional<std::size_t> chunk_token_limit) {
  std::vector<std::string> out;

  if (trace.max_iter < 1) {
    out.push_back("max_iter " + std::to_string(trace.max_iter) + " < 1");
  }
  if (static_cast<int>(trace.iterations.size()) > trace.max_iter) {
    out.push_back("iterations " + std::to_string(trace.iterations.size()) + " > max_iter " +
                  std::to_string(trace.max_iter));
  }

  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
    const auto& it = trace.iterations[i];
    if (it.index != static_cast<int>(i) + 1) {
      out.push_back("iteration " + std::to_string(i + 1) + " has index " +
                    std::to_string(it.index));
    }
    for (const auto& q : it.sub_queries) {
      if (detail::trim(q.text).empty()) {
        out.push_back("iteration " + std::to_string(it.index) + " has an empty sub-query");
      }
      if (q.iteration < 1) {
        out.push_back("sub-query '" + q.text + "' has non-positive iteration");
      }
    }
    for (const auto& ids : it.retrieved_ids) seen_ids.insert(ids.begin(), ids.end());
    seen_ids.insert(it.injected_ids.begin(), it.injected_ids.end());
    for (const auto& d : it.discarded_ids) {
      if (!seen_ids.contains(d)) {
        out.push_back("discarded id " + d + " in iteration " + std::to_string(it.index) +
                      " was never retrieved");
      }
    }
    if (it.sea.sufficient && !gaps_are_none(it.sea.remaining_gaps)) {
      out.push_back("iteration " + std::to_string(it.index) +
                    " SEA is sufficient but remaining_gaps is not None");
    }
  }

  std::set<std::string> evidence_ids;
  for (const auto& c : trace.final_evidence) {
    if (!evidence_ids.insert(c.id).second) {
      out.push_back("final_evidence contains duplicate id " + c.id);
    }
    if (chunk_token_limit && c.token_count > *chunk_token_limit) {
      out.push_back("chunk " + c.id + " token_count " + std::to_string(c.token_count) + " > " +
                    std::to_string(*chunk_token_limit));
    }
  }

  if (trace.answer) {
    const auto n = trace.final_evidence.size();
    for (int c : trace.answer->citations) {
      if (c < 1 || static_cast<std::size_t>(c) > n) {
        out.push_back("citation " + std::to_string(c) + " out of range 1.." + std::to_string(n));
      }
    }
  } else if (!trace.error) {
    out.push_back("trace has neither an answer nor an error");
  }

  const auto& acc = trace.accounting;
  if (acc.api_calls != static_cast<std::int64_t>(trace.calls.size())) {
    out.push_back("api_calls " + std::to_string(acc.api_calls) + " != recorded calls " +
                  std::to_string(trace.calls.size()));
  }
  std::int64_t prompt = 0;
  std::int64_t completion = 0;
  for (const auto& c : trace.calls) {
    prompt += c.prompt_tokens;
    completion += c.completion_tokens;
  }
  if (prompt != acc.prompt_tokens) {
    out.push_back("prompt_tokens " + std::to_string(acc.prompt_tokens) + " != sum over calls " +
                  std::to_string(prompt));
  }
  if (completion != acc.completion_tokens) {
    out.push_back("completion_tokens " + std::to_string(acc.completion_tokens) +
                  " != sum over calls " + std::to_string(completion));
  }
  if (!std::isfinite(acc.cost_usd) || acc.cost_usd < 0.0) {
    out.push_back("cost_usd is negative or not finite");
  }
  return out;
}

}  // namespace fairrag
