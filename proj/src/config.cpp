#include "fairrag/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fairrag/errors.hpp"
#include "fairrag/ingest.hpp"
#include "text_util.hpp"

namespace fairrag {

namespace pt = boost::property_tree;

namespace {

std::string where(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

template <typename T>
T convert(const std::string& section, const std::string& key, const std::string& raw);

template <>
double convert(const std::string& section, const std::string& key, const std::string& raw) {
  try {
    std::size_t used = 0;
    double v = std::stod(raw, &used);
    if (used == raw.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(where(section, key) + ": expected a number, got '" + raw + "'");
}

template <>
long long convert(const std::string& section, const std::string& key, const std::string& raw) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(raw, &used);
    if (used == raw.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(where(section, key) + ": expected an integer, got '" + raw + "'");
}

template <>
bool convert(const std::string& section, const std::string& key, const std::string& raw) {
  const auto v = detail::to_lower_ascii(raw);
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError(where(section, key) + ": expected a boolean, got '" + raw + "'");
}

std::size_t non_negative(const std::string& section, const std::string& key, const std::string& raw) {
  auto v = convert<long long>(section, key, raw);
  if (v < 0) throw ConfigError(where(section, key) + " must be non-negative");
  return static_cast<std::size_t>(v);
}

Tier tier_value(const std::string& section, const std::string& key, const std::string& raw) {
  try {
    return parse_tier(detail::to_lower_ascii(raw));
  } catch (const Error&) {
    throw ConfigError(where(section, key) + ": unknown tier '" + raw + "'");
  }
}

// Walks one section, dispatching every key to `apply`; unknown keys are errors.
class Section {
 public:
  Section(std::string name, const pt::ptree& tree, const EnvLookup& env)
      : name_(std::move(name)), tree_(tree), env_(env) {}

  template <typename Apply>
  void each(Apply apply) const {
    for (const auto& [key, node] : tree_) {
      const std::string value(detail::trim(interpolate_env(node.data(), env_)));
      if (!apply(key, value)) throw ConfigError("unknown key " + where(name_, key));
    }
  }

  const std::string& name() const { return name_; }

 private:
  std::string name_;
  const pt::ptree& tree_;
  const EnvLookup& env_;
};

bool apply_backend(BackendConfig& b, const std::string& section, const std::string& key,
                   const std::string& v, CostModel* cost) {
  if (key == "mode") {
    b.mode = detail::to_lower_ascii(v);
    if (b.mode != "http" && b.mode != "scripted") throw ConfigError(where(section, key) + ": expected http or scripted");
  }
  else if (key == "base_url") b.base_url = v;
  else if (key == "api_key_env") b.api_key_env = v;
  else if (key == "script") b.script = v;
  else if (key == "max_in_flight") b.max_in_flight = static_cast<int>(non_negative(section, key, v));
  else if (key == "max_retries") b.max_retries = static_cast<int>(non_negative(section, key, v));
  else if (key == "connect_timeout_s") b.connect_timeout_s = static_cast<int>(non_negative(section, key, v));
  else if (key == "read_timeout_s") b.read_timeout_s = static_cast<int>(non_negative(section, key, v));
  else if (cost && detail::istarts_with(key, "model_")) {
    const Tier t = tier_value(section, key, key.substr(6));
    cost->tiers[t].model = v;
  } else {
    return false;
  }
  return true;
}

}  // namespace

void BackendConfig::validate() const {
  if (mode != "http" && mode != "scripted") {
    throw ConfigError("gateway mode must be http or scripted, got '" + mode + "'");
  }
  if (mode == "http" && base_url.empty()) throw ConfigError("http gateway needs base_url");
  if (mode == "scripted" && script.empty()) throw ConfigError("scripted gateway needs a script file");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be at least 1");
}

void Config::validate() const {
  if (chunk_tokens < kMinChunkTokens) {
    throw ConfigError("chunk_tokens must be at least " + std::to_string(kMinChunkTokens));
  }
  if (embedding.provider != "hashing" && embedding.provider != "http" && embedding.provider != "none") {
    throw ConfigError("embedding provider must be hashing, http or none");
  }
  if (embedding.provider != "none" && embedding.dimension == 0) {
    throw ConfigError("embedding dimension must be positive");
  }
  if (rrf_k <= 0) throw ConfigError("rrf_k must be positive");
  if (bm25.k1 < 0.0 || bm25.b < 0.0 || bm25.b > 1.0) throw ConfigError("bm25 needs k1 >= 0 and b in [0,1]");
  pipeline.validate();
  cost.validate();
  if (correctness_threshold < 1.0 || correctness_threshold > 5.0) {
    throw ConfigError("correctness threshold must lie in [1,5]");
  }
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

std::string interpolate_env(std::string_view text, const EnvLookup& env) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
      const auto close = text.find('}', i + 2);
      if (close == std::string_view::npos) throw ConfigError("unterminated ${ in '" + std::string(text) + "'");
      std::string_view inner = text.substr(i + 2, close - i - 2);
      std::optional<std::string_view> fallback;
      if (auto sep = inner.find(":-"); sep != std::string_view::npos) {
        fallback = inner.substr(sep + 2);
        inner = inner.substr(0, sep);
      }
      const std::string name(inner);
      if (name.empty()) throw ConfigError("empty variable name in '" + std::string(text) + "'");
      if (auto v = env(name)) {
        out += *v;
      } else if (fallback) {
        out += *fallback;
      } else {
        throw ConfigError("environment variable " + name + " is not set");
      }
      i = close + 1;
    } else {
      out += text[i++];
    }
  }
  return out;
}

Config parse_config(std::string_view text, const EnvLookup& env) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }

  Config c;
  std::optional<RoutingTable> routing;
  std::map<AgentRole, Tier> role_overrides;
  std::map<QueryClass, Tier> class_overrides;

  for (const auto& [name, node] : tree) {
    if (node.empty() && !node.data().empty()) throw ConfigError("key '" + name + "' outside any section");
    Section s(name, node, env);
    if (name == "paths") {
      s.each([&](const std::string& k, const std::string& v) {
        if (k == "index") c.index_dir = v;
        else if (k == "prompts") c.prompts_dir = v;
        else if (k == "corpus") c.corpus = v;
        else return false;
        return true;
      });
    } else if (name == "ingest") {
      s.each([&](const std::string& k, const std::string& v) {
        if (k == "chunk_tokens") c.chunk_tokens = non_negative(name, k, v);
        else if (k == "embedding") c.embedding.provider = detail::to_lower_ascii(v);
        else if (k == "dimension") c.embedding.dimension = non_negative(name, k, v);
        else if (k == "embedding_url") c.embedding.base_url = v;
        else if (k == "embedding_model") c.embedding.model = v;
        else if (k == "api_key_env") c.embedding.api_key_env = v;
        else if (k == "bm25_k1") c.bm25.k1 = convert<double>(name, k, v);
        else if (k == "bm25_b") c.bm25.b = convert<double>(name, k, v);
        else if (k == "rrf_k") c.rrf_k = static_cast<int>(convert<long long>(name, k, v));
        else return false;
        return true;
      });
    } else if (name == "pipeline") {
      auto& p = c.pipeline;
      s.each([&](const std::string& k, const std::string& v) {
        if (k == "max_iter") p.max_iter = static_cast<int>(convert<long long>(name, k, v));
        else if (k == "top_k") p.top_k_per_retriever = non_negative(name, k, v);
        else if (k == "top_n") p.top_n = non_negative(name, k, v);
        else if (k == "filter_batch_size") p.filter_batch_size = non_negative(name, k, v);
        else if (k == "filter_memoization") p.filter_memoization = convert<bool>(name, k, v);
        else if (k == "sparse_only_fallback") p.sparse_only_fallback = convert<bool>(name, k, v);
        else if (k == "parse_retries") p.parse_retries = static_cast<int>(non_negative(name, k, v));
        else if (k == "max_output_tokens") p.max_output_tokens = static_cast<int>(non_negative(name, k, v));
        else if (k == "temperature") p.temperature = convert<double>(name, k, v);
        else return false;
        return true;
      });
    } else if (name == "routing") {
      s.each([&](const std::string& k, const std::string& v) {
        if (k == "preset") {
          const auto preset = detail::to_lower_ascii(v);
          if (preset == "dynamic") routing = RoutingTable::dynamic_default();
          else if (detail::istarts_with(preset, "static_")) routing = RoutingTable::uniform(tier_value(name, k, preset.substr(7)));
          else throw ConfigError(where(name, k) + ": unknown preset '" + v + "'");
          return true;
        }
        if (detail::istarts_with(k, "generator_")) {
          std::string label = k.substr(10);
          for (auto& ch : label) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
          auto cls = try_parse_query_class(label);
          if (!cls) return false;
          class_overrides[*cls] = tier_value(name, k, v);
          return true;
        }
        try {
          role_overrides[parse_agent_role(k)] = tier_value(name, k, v);
        } catch (const ValidationError&) {
          return false;
        }
        return true;
      });
    } else if (name == "gateway" || name == "judge") {
      BackendConfig& b = name == "gateway" ? c.gateway : c.judge;
      s.each([&](const std::string& k, const std::string& v) {
        if (name == "judge" && k == "tier") {
          c.judge_tier = tier_value(name, k, v);
          return true;
        }
        return apply_backend(b, name, k, v, name == "gateway" ? &c.cost : nullptr);
      });
    } else if (name == "econ") {
      auto& lat = c.pipeline.latency;
      s.each([&](const std::string& k, const std::string& v) {
        if (k == "m") lat.m = convert<double>(name, k, v);
        else if (k == "h") lat.h = convert<double>(name, k, v);
        else if (k == "R" || k == "r") lat.R = convert<double>(name, k, v);
        else if (k == "input_share") c.cost.input_share = convert<double>(name, k, v);
        else if (detail::istarts_with(k, "mix_")) c.cost.mix[tier_value(name, k, k.substr(4))] = convert<double>(name, k, v);
        else if (detail::istarts_with(k, "price_")) {
          // price_<tier>_in / price_<tier>_out, $/Mtok
          const auto rest = k.substr(6);
          const auto us = rest.rfind('_');
          if (us == std::string::npos) return false;
          auto& spec = c.cost.tiers[tier_value(name, k, rest.substr(0, us))];
          const auto side = rest.substr(us + 1);
          if (side == "in") spec.input_price = convert<double>(name, k, v);
          else if (side == "out") spec.output_price = convert<double>(name, k, v);
          else return false;
        } else {
          return false;
        }
        return true;
      });
    } else if (name == "eval") {
      s.each([&](const std::string& k, const std::string& v) {
        if (k == "correctness_threshold") c.correctness_threshold = convert<double>(name, k, v);
        else return false;
        return true;
      });
    } else {
      throw ConfigError("unknown config section [" + name + "]");
    }
  }

  if (routing) c.pipeline.routing = *routing;
  for (auto [role, tier] : role_overrides) c.pipeline.routing.roles[role] = tier;
  for (auto [cls, tier] : class_overrides) c.pipeline.routing.generator_by_class[cls] = tier;
  c.validate();
  return c;
}

Config load_config(const std::filesystem::path& path, const EnvLookup& env) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Config c = parse_config(buf.str(), env);
  // Relative paths in the file are relative to the file.
  const auto base = path.parent_path();
  auto anchor = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  anchor(c.index_dir);
  anchor(c.prompts_dir);
  anchor(c.corpus);
  for (auto* b : {&c.gateway, &c.judge}) {
    if (!b->script.empty()) {
      std::filesystem::path p(b->script);
      anchor(p);
      b->script = p.string();
    }
  }
  return c;
}

std::shared_ptr<ChatBackend> make_backend(const BackendConfig& cfg, const EnvLookup& env,
                                          const std::filesystem::path& base_dir) {
  cfg.validate();
  if (cfg.mode == "scripted") {
    std::filesystem::path p(cfg.script);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return std::shared_ptr<ChatBackend>(ScriptedBackend::from_file(p));
  }
  HttpBackendConfig h;
  h.base_url = cfg.base_url;
  h.api_key = env(cfg.api_key_env).value_or("");
  h.connect_timeout_s = cfg.connect_timeout_s;
  h.read_timeout_s = cfg.read_timeout_s;
  return std::make_shared<HttpBackend>(std::move(h));
}

GatewayOptions gateway_options(const BackendConfig& cfg, const CostModel& cost) {
  GatewayOptions o;
  o.pricing = cost;
  o.max_retries = cfg.max_retries;
  o.max_in_flight = static_cast<std::size_t>(cfg.max_in_flight);
  return o;
}

std::unique_ptr<EmbeddingProvider> make_embedder(const EmbeddingConfig& cfg, const EnvLookup& env) {
  if (cfg.provider == "none") return nullptr;
  if (cfg.provider == "hashing") return std::make_unique<HashingEmbedder>(cfg.dimension);
  if (cfg.provider == "http") {
    if (cfg.base_url.empty() || cfg.model.empty()) {
      throw ConfigError("http embedding needs embedding_url and embedding_model");
    }
    return std::make_unique<HttpEmbedder>(cfg.base_url, cfg.model, cfg.dimension,
                                          env(cfg.api_key_env).value_or(""));
  }
  throw ConfigError("unknown embedding provider '" + cfg.provider + "'");
}

}  // namespace fairrag
