#include "fairrag/tokenizer.hpp"

namespace fairrag {

namespace unicode {

char32_t decode(std::string_view text, std::size_t& pos) {
  const auto b0 = static_cast<unsigned char>(text[pos]);
  auto cont = [&](std::size_t i) -> int {
    if (pos + i >= text.size()) return -1;
    auto b = static_cast<unsigned char>(text[pos + i]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++pos;
    return b0;
  }
  for (int i = 1; i < len; ++i) {
    int c = cont(static_cast<std::size_t>(i));
    if (c < 0) {
      ++pos;
      return b0;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  pos += static_cast<std::size_t>(len);
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

CharClass classify(char32_t cp) {
  if (cp < 0x80) {
    if (cp == ' ' || (cp >= 0x09 && cp <= 0x0D)) return CharClass::space;
    if (cp < 0x20 || cp == 0x7F) return CharClass::space;
    if ((cp >= '0' && cp <= '9') || (cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z') ||
        cp == '_') {
      return CharClass::word;
    }
    return CharClass::punct;
  }
  switch (cp) {
    case 0x0085: case 0x00A0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000: case 0xFEFF:
      return CharClass::space;
    // ZWNJ/ZWJ join Persian morphemes (e.g. "می‌شود").
    case 0x200C: case 0x200D:
      return CharClass::word;
    // Arabic-script punctuation: ، ؛ ؟ ٪ ٫ ٬ ٭ ۔ and the Arabic full stop.
    case 0x060C: case 0x060D: case 0x061B: case 0x061E: case 0x061F:
    case 0x066A: case 0x066B: case 0x066C: case 0x066D: case 0x06D4:
    case 0x06DD: case 0x06DE: case 0x06E9: case 0xFD3E: case 0xFD3F:
      return CharClass::punct;
    default:
      break;
  }
  if (cp >= 0x2000 && cp <= 0x200B) return CharClass::space;
  if (cp >= 0x00A1 && cp <= 0x00BF && cp != 0x00AA && cp != 0x00B2 && cp != 0x00B3 &&
      cp != 0x00B5 && cp != 0x00B9 && cp != 0x00BA && cp != 0x00BC && cp != 0x00BD &&
      cp != 0x00BE) {
    return CharClass::punct;
  }
  if (cp == 0x00D7 || cp == 0x00F7) return CharClass::punct;
  if (cp >= 0x2010 && cp <= 0x2027) return CharClass::punct;
  if (cp >= 0x2030 && cp <= 0x205E) return CharClass::punct;
  if (cp >= 0x20A0 && cp <= 0x20CF) return CharClass::punct;  // currency
  if (cp >= 0x2190 && cp <= 0x2BFF) return CharClass::punct;  // arrows, math, shapes
  if (cp >= 0x3001 && cp <= 0x303F) return CharClass::punct;
  if (cp >= 0xFE30 && cp <= 0xFE4F) return CharClass::punct;
  if (cp >= 0xFF01 && cp <= 0xFF0F) return CharClass::punct;
  if (cp >= 0x1F300 && cp <= 0x1FAFF) return CharClass::punct;  // emoji
  return CharClass::word;
}

char32_t fold_latin(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 32;
  if (cp >= 0x0100 && cp <= 0x017F && cp != 0x0130 && cp != 0x0131 && cp != 0x0138 &&
      cp != 0x0149 && cp != 0x0178 && cp != 0x017F) {
    // Latin Extended-A alternates upper/lower with a parity flip at U+0139..U+0148
    // and U+0179..U+017E.
    bool odd_upper = (cp >= 0x0139 && cp <= 0x0148) || (cp >= 0x0179 && cp <= 0x017E);
    bool is_upper = odd_upper ? (cp % 2 == 1) : (cp % 2 == 0);
    if (is_upper) return cp + 1;
  }
  return cp;
}

}  // namespace unicode

std::vector<Token> UnicodeTokenizer::tokenize(std::string_view text) const {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  bool in_word = false;
  std::size_t word_start = 0;
  while (pos < text.size()) {
    const std::size_t start = pos;
    const char32_t cp = unicode::decode(text, pos);
    switch (unicode::classify(cp)) {
      case unicode::CharClass::word:
        if (!in_word) {
          in_word = true;
          word_start = start;
        }
        break;
      case unicode::CharClass::space:
        if (in_word) tokens.push_back({word_start, start, true});
        in_word = false;
        break;
      case unicode::CharClass::punct:
        if (in_word) tokens.push_back({word_start, start, true});
        in_word = false;
        tokens.push_back({start, pos, false});
        break;
    }
  }
  if (in_word) tokens.push_back({word_start, text.size(), true});
  return tokens;
}

std::vector<std::string> Tokenizer::terms(std::string_view text) const {
  std::vector<std::string> out;
  for (const auto& tok : tokenize(text)) {
    if (!tok.is_word) continue;
    auto word = tok.view(text);
    std::string folded;
    folded.reserve(word.size());
    std::size_t pos = 0;
    bool only_joiners = true;
    while (pos < word.size()) {
      char32_t cp = unicode::decode(word, pos);
      if (cp != 0x200C && cp != 0x200D) only_joiners = false;
      unicode::append_utf8(folded, unicode::fold_latin(cp));
    }
    if (!only_joiners) out.push_back(std::move(folded));
  }
  return out;
}

const Tokenizer& default_tokenizer() {
  static const UnicodeTokenizer instance;
  return instance;
}

}  // namespace fairrag
