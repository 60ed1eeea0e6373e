#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairrag/domain.hpp"
#include "fairrag/tokenizer.hpp"

namespace fairrag {

/// Marker placed before the user's question in every qa chunk.
inline constexpr std::string_view kUserQuestionMarker = "(سؤال کاربر):";
/// Marker placed before the expert's answer body in every qa chunk.
inline constexpr std::string_view kExpertAnswerMarker = "(پاسخ کارشناس):";

inline constexpr std::size_t kMinChunkTokens = 16;

struct SourceDocument {
  std::string id;
  ChunkKind kind = ChunkKind::encyclopedia;
  std::string text;
  std::optional<std::string> question;
  std::string source_url;
};

/// Throws ValidationError when a qa document has no question or the id is empty.
void validate(const SourceDocument& doc);

/// Recursive chunking: blank-line paragraphs first, then sentence packing for
/// paragraphs over budget, then hard splits at token boundaries for single
/// over-long sentences. qa chunks carry the question prefix, which counts
/// toward `max_tokens`.
std::vector<Chunk> chunk_document(const SourceDocument& doc, std::size_t max_tokens,
                                  const Tokenizer& tok = default_tokenizer());

/// Body text of a chunk with any qa prefix removed.
std::string_view chunk_body(std::string_view chunk_text);

SourceDocument parse_source_document(std::string_view json_line);

struct CorpusLoadResult {
  std::vector<Chunk> chunks;
  std::size_t documents = 0;
  // "line N: reason" for every record skipped in lenient mode.
  std::vector<std::string> errors;
};

enum class LoadMode { strict, lenient };

/// Reads a JSONL corpus. Blank lines are skipped. In strict mode the first bad
/// record throws ValidationError naming its 1-based line number.
CorpusLoadResult load_corpus(const std::filesystem::path& path, std::size_t max_tokens,
                             const Tokenizer& tok = default_tokenizer(),
                             LoadMode mode = LoadMode::strict);

}  // namespace fairrag
