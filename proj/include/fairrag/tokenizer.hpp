#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fairrag {

/// A token is a byte range of the input. Ranges are ordered and disjoint.
struct Token {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool is_word = false;  // false for a single punctuation/symbol codepoint

  std::string_view view(std::string_view text) const { return text.substr(begin, end - begin); }
  bool operator==(const Token&) const = default;
};

/// Deterministic, pure text → token contract used for chunk budgets,
/// BM25 terms and local usage accounting.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::vector<Token> tokenize(std::string_view text) const = 0;

  std::size_t count(std::string_view text) const { return tokenize(text).size(); }

  /// Index/query terms: word tokens, Latin letters folded to lower case.
  std::vector<std::string> terms(std::string_view text) const;
};

/// Splits on whitespace and punctuation boundaries. Words are maximal runs of
/// letters, digits, combining marks and zero-width joiners (so Persian words
/// written with ZWNJ stay whole); every punctuation or symbol codepoint is a
/// token of its own. Invalid UTF-8 bytes are treated as word characters.
class UnicodeTokenizer final : public Tokenizer {
 public:
  std::vector<Token> tokenize(std::string_view text) const override;
};

const Tokenizer& default_tokenizer();

namespace unicode {

enum class CharClass { space, punct, word };

/// Decodes one codepoint at `pos`, advancing it. Malformed sequences yield the
/// single byte value and advance by one.
char32_t decode(std::string_view text, std::size_t& pos);
void append_utf8(std::string& out, char32_t cp);
CharClass classify(char32_t cp);
/// Lower-cases ASCII and Latin-1/Latin Extended-A capitals; other scripts untouched.
char32_t fold_latin(char32_t cp);

}  // namespace unicode

}  // namespace fairrag
