#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fairrag/agents.hpp"
#include "fairrag/gateway.hpp"
#include "fairrag/ingest.hpp"
#include "fairrag/orchestrator.hpp"
#include "fairrag/retrieval.hpp"

namespace fairrag::testing {

inline std::filesystem::path fixtures_dir() { return FAIRRAG_FIXTURES_DIR; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("fairrag_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc);
  out << text;
}

inline Chunk make_chunk(std::string id, std::string text, std::string url = "") {
  Chunk c;
  c.id = std::move(id);
  c.text = std::move(text);
  c.source_url = std::move(url);
  c.token_count = default_tokenizer().count(c.text);
  return c;
}

inline ScriptRule rule(std::optional<AgentRole> role, std::string match, std::string response) {
  return ScriptRule{std::move(match), std::move(response), role};
}

/// Gateway over a scripted backend that never sleeps.
inline std::unique_ptr<Gateway> scripted_gateway(std::vector<ScriptRule> rules) {
  GatewayOptions opts;
  opts.sleep = [](double) {};
  return std::make_unique<Gateway>(std::make_shared<ScriptedBackend>(std::move(rules)), opts);
}

inline const PromptLibrary& prompts() {
  static const PromptLibrary lib = PromptLibrary::load(PromptLibrary::default_dir());
  return lib;
}

/// Agent output builders.
inline std::string label(std::string_view l) { return "Selected Label:\n" + std::string(l); }

inline std::string queries(const std::vector<std::string>& qs, std::string_view header = "Optimized Queries:") {
  std::string out(header);
  for (const auto& q : qs) out += "\n- " + q;
  return out;
}

inline std::string sea(bool sufficient, std::string gaps = "") {
  if (gaps.empty()) gaps = sufficient ? "None." : "A: the missing fact.";
  return ".1 Mission Deconstruction:\n- **Main Goal:** answer the question.\n"
         "- **Required Findings:** A: the fact.\n"
         ".2 Intelligence Synthesis & Analysis:\n- **Confirmed Findings:** A: partial.\n"
         "- **Remaining Gaps:** " + gaps + "\n"
         ".3 Final Assessment:\n- **Conclusion:** assessed.\n- **Sufficient:** " +
         (sufficient ? "Yes" : "No");
}

/// Small Persian/English corpus whose documents share no vocabulary.
inline std::vector<Chunk> tiny_corpus() {
  return {make_chunk("a#0", "alpha apple apricot almond", "u:a"),
          make_chunk("b#0", "beta banana blueberry basil", "u:b"),
          make_chunk("c#0", "gamma cherry cranberry clove", "u:c"),
          make_chunk("d#0", "delta date durian dill", "u:d")};
}

/// Random lowercase-word corpus for property tests.
inline std::vector<Chunk> random_corpus(std::mt19937& rng, std::size_t docs, std::size_t vocab) {
  std::uniform_int_distribution<std::size_t> len(1, 30);
  std::uniform_int_distribution<std::size_t> word(0, vocab - 1);
  std::vector<Chunk> out;
  for (std::size_t d = 0; d < docs; ++d) {
    std::string text;
    const auto n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
      if (i) text += ' ';
      text += "w" + std::to_string(word(rng));
    }
    out.push_back(make_chunk("doc" + std::to_string(d), text));
  }
  return out;
}

}  // namespace fairrag::testing
