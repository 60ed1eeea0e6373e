#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "fairrag/econ.hpp"
#include "fairrag/gateway.hpp"
#include "fairrag/orchestrator.hpp"
#include "fairrag/retrieval.hpp"

namespace fairrag {

struct BackendConfig {
  std::string mode = "scripted";  // http | scripted
  std::string base_url;
  std::string api_key_env = "FAIRRAG_API_KEY";
  std::string script;             // scripted mode: JSONL rule file
  int max_in_flight = 8;
  int max_retries = 3;
  int connect_timeout_s = 10;
  int read_timeout_s = 300;

  void validate() const;
};

struct EmbeddingConfig {
  std::string provider = "hashing";  // hashing | http | none
  std::size_t dimension = 256;
  std::string base_url;
  std::string model;
  std::string api_key_env = "FAIRRAG_API_KEY";
};

struct Config {
  std::filesystem::path index_dir = "index";
  std::filesystem::path prompts_dir;  // empty: bundled prompts
  std::filesystem::path corpus;
  std::size_t chunk_tokens = kDefaultChunkTokens;
  Bm25Params bm25;
  int rrf_k = 60;
  EmbeddingConfig embedding;
  PipelineConfig pipeline;
  BackendConfig gateway;
  BackendConfig judge;
  Tier judge_tier = Tier::large;
  CostModel cost;
  double correctness_threshold = 4.0;

  void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Process environment lookup.
EnvLookup process_env();

/// Expands ${VAR} and ${VAR:-fallback}. An unset variable without a fallback
/// throws ConfigError.
std::string interpolate_env(std::string_view text, const EnvLookup& env);

/// INI text with [paths] [ingest] [pipeline] [routing] [gateway] [judge]
/// [econ] [eval] sections. Unknown sections or keys throw ConfigError.
Config parse_config(std::string_view text, const EnvLookup& env = process_env());
Config load_config(const std::filesystem::path& path, const EnvLookup& env = process_env());

/// Chat backend for `mode`; relative script paths resolve against `base_dir`.
std::shared_ptr<ChatBackend> make_backend(const BackendConfig& cfg, const EnvLookup& env = process_env(),
                                          const std::filesystem::path& base_dir = {});
GatewayOptions gateway_options(const BackendConfig& cfg, const CostModel& cost);

/// Null for provider "none".
std::unique_ptr<EmbeddingProvider> make_embedder(const EmbeddingConfig& cfg,
                                                 const EnvLookup& env = process_env());

}  // namespace fairrag
