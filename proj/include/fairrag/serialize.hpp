#pragma once

// JSON forms of the domain types. Field names are snake_case and stable;
// trace files and the evaluation harness depend on them.

#include <json.hpp>

#include "fairrag/domain.hpp"

namespace fairrag {

using json = nlohmann::json;

void to_json(json& j, const Chunk& c);
void from_json(const json& j, Chunk& c);
void to_json(json& j, const SubQuery& q);
void from_json(const json& j, SubQuery& q);
void to_json(json& j, const SEAReport& r);
void from_json(const json& j, SEAReport& r);
void to_json(json& j, const IterationRecord& r);
void from_json(const json& j, IterationRecord& r);
void to_json(json& j, const Answer& a);
void from_json(const json& j, Answer& a);
void to_json(json& j, const CallRecord& c);
void from_json(const json& j, CallRecord& c);
void to_json(json& j, const Accounting& a);
void from_json(const json& j, Accounting& a);
void to_json(json& j, const StageFailure& f);
void from_json(const json& j, StageFailure& f);
void to_json(json& j, const QueryTrace& t);
void from_json(const json& j, QueryTrace& t);

/// Compact single-line JSON, suitable for JSONL output.
std::string trace_to_jsonl(const QueryTrace& trace);
QueryTrace trace_from_json(std::string_view text);

}  // namespace fairrag
