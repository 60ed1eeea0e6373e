#include "fairrag/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "fairrag/errors.hpp"
#include "text_util.hpp"

namespace fairrag {

namespace {

using json = nlohmann::json;

struct Span {
  std::size_t begin;
  std::size_t end;
};

bool is_blank(std::string_view line) { return detail::trim(line).empty(); }

// Paragraph spans separated by one or more blank lines, trimmed.
std::vector<Span> paragraph_spans(std::string_view text) {
  std::vector<Span> spans;
  std::size_t pos = 0;
  std::optional<std::size_t> para_begin;
  std::size_t para_end = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::size_t line_end = nl == std::string_view::npos ? text.size() : nl;
    auto line = text.substr(pos, line_end - pos);
    if (is_blank(line)) {
      if (para_begin) spans.push_back({*para_begin, para_end});
      para_begin.reset();
    } else {
      if (!para_begin) para_begin = pos;
      para_end = line_end;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (para_begin) spans.push_back({*para_begin, para_end});

  for (auto& s : spans) {
    while (s.begin < s.end && detail::is_ascii_space(text[s.begin])) ++s.begin;
    while (s.end > s.begin && detail::is_ascii_space(text[s.end - 1])) --s.end;
  }
  std::erase_if(spans, [](const Span& s) { return s.begin == s.end; });
  return spans;
}

bool is_sentence_terminator(char32_t cp) {
  return cp == '.' || cp == '!' || cp == '?' || cp == 0x061F /* ؟ */ || cp == 0x2026 /* … */ ||
         cp == 0x06D4 /* ۔ */;
}

bool is_space_cp(char32_t cp) { return unicode::classify(cp) == unicode::CharClass::space; }

// Sentence spans inside [span.begin, span.end): a sentence ends at a terminator
// that is followed by whitespace or the end of the span.
std::vector<Span> sentence_spans(std::string_view text, Span span) {
  std::vector<Span> out;
  std::size_t pos = span.begin;
  std::size_t start = span.begin;
  while (pos < span.end) {
    const char32_t cp = unicode::decode(text, pos);
    if (!is_sentence_terminator(cp)) continue;
    std::size_t peek = pos;
    bool boundary = peek >= span.end;
    if (!boundary) {
      std::size_t tmp = peek;
      boundary = is_space_cp(unicode::decode(text, tmp));
    }
    if (!boundary) continue;
    out.push_back({start, pos});
    // Skip the whitespace run.
    while (pos < span.end) {
      std::size_t tmp = pos;
      if (!is_space_cp(unicode::decode(text, tmp))) break;
      pos = tmp;
    }
    start = pos;
  }
  if (start < span.end) out.push_back({start, span.end});
  return out;
}

class Chunker {
 public:
  Chunker(std::string_view text, std::size_t budget, const Tokenizer& tok)
      : text_(text), budget_(budget), tok_(tok) {}

  std::vector<std::string> run() {
    for (const auto& para : paragraph_spans(text_)) {
      if (count(para) <= budget_) {
        emit(para);
      } else {
        pack_sentences(para);
      }
    }
    return std::move(pieces_);
  }

 private:
  std::size_t count(Span s) const { return tok_.count(text_.substr(s.begin, s.end - s.begin)); }

  void emit(Span s) { pieces_.emplace_back(text_.substr(s.begin, s.end - s.begin)); }

  void pack_sentences(Span para) {
    std::optional<Span> pack;
    for (const auto& sentence : sentence_spans(text_, para)) {
      if (pack) {
        Span extended{pack->begin, sentence.end};
        if (count(extended) <= budget_) {
          pack = extended;
          continue;
        }
        emit(*pack);
        pack.reset();
      }
      if (count(sentence) <= budget_) {
        pack = sentence;
      } else {
        hard_split(sentence);
      }
    }
    if (pack) emit(*pack);
  }

  void hard_split(Span sentence) {
    auto piece_text = text_.substr(sentence.begin, sentence.end - sentence.begin);
    auto tokens = tok_.tokenize(piece_text);
    std::size_t i = 0;
    while (i < tokens.size()) {
      std::size_t take = std::min(budget_, tokens.size() - i);
      // A custom tokenizer may not re-tokenize a substring identically; shrink until it fits.
      while (true) {
        Span s{sentence.begin + tokens[i].begin, sentence.begin + tokens[i + take - 1].end};
        if (take == 1 || count(s) <= budget_) {
          emit(s);
          break;
        }
        --take;
      }
      i += take;
    }
  }

  std::string_view text_;
  std::size_t budget_;
  const Tokenizer& tok_;
  std::vector<std::string> pieces_;
};

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : detail::trim(s)) {
    if (detail::is_ascii_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string qa_prefix(std::string_view question) {
  std::string p;
  p.append(kUserQuestionMarker);
  p.push_back(' ');
  p.append(question);
  p.push_back('\n');
  p.append(kExpertAnswerMarker);
  p.push_back(' ');
  return p;
}

// Shortens an over-long question so the prefix leaves at least a quarter of the
// budget for the answer body.
std::string fit_question(std::string question, std::size_t max_tokens, const Tokenizer& tok) {
  const std::size_t body_floor = std::max<std::size_t>(1, max_tokens / 4);
  const std::size_t prefix_cap = max_tokens - body_floor;
  if (tok.count(qa_prefix(question)) <= prefix_cap) return question;
  auto tokens = tok.tokenize(question);
  std::size_t keep = tokens.size();
  while (keep > 0) {
    --keep;
    std::string shorter = keep == 0 ? std::string() : question.substr(0, tokens[keep - 1].end);
    if (tok.count(qa_prefix(shorter)) <= prefix_cap) return shorter;
  }
  return {};
}

}  // namespace

void validate(const SourceDocument& doc) {
  if (detail::trim(doc.id).empty()) throw ValidationError("document id is empty");
  if (doc.kind == ChunkKind::qa && (!doc.question || detail::trim(*doc.question).empty())) {
    throw ValidationError("qa document '" + doc.id + "' has no question");
  }
}

std::vector<Chunk> chunk_document(const SourceDocument& doc, std::size_t max_tokens,
                                  const Tokenizer& tok) {
  if (max_tokens < kMinChunkTokens) {
    throw ValidationError("max_tokens must be at least " + std::to_string(kMinChunkTokens));
  }
  validate(doc);

  std::string prefix;
  std::size_t budget = max_tokens;
  if (doc.kind == ChunkKind::qa) {
    auto question = fit_question(collapse_whitespace(*doc.question), max_tokens, tok);
    prefix = qa_prefix(question);
    budget = max_tokens - tok.count(prefix);
  }

  auto pieces = Chunker(doc.text, budget, tok).run();

  std::vector<Chunk> chunks;
  chunks.reserve(pieces.size());
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    Chunk c;
    c.id = doc.id + "#" + std::to_string(k);
    c.text = prefix + pieces[k];
    c.source_url = doc.source_url;
    c.kind = doc.kind;
    c.token_count = tok.count(c.text);
    chunks.push_back(std::move(c));
  }
  return chunks;
}

std::string_view chunk_body(std::string_view chunk_text) {
  if (!chunk_text.starts_with(kUserQuestionMarker)) return chunk_text;
  std::string sep = "\n";
  sep.append(kExpertAnswerMarker);
  auto at = chunk_text.find(sep);
  if (at == std::string_view::npos) return chunk_text;
  auto body = chunk_text.substr(at + sep.size());
  if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
  return body;
}

SourceDocument parse_source_document(std::string_view json_line) {
  json j;
  try {
    j = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("record is not a JSON object");
  auto str_field = [&](const char* key, bool required) -> std::optional<std::string> {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
      if (required) throw ValidationError(std::string("missing field '") + key + "'");
      return std::nullopt;
    }
    if (!it->is_string()) throw ValidationError(std::string("field '") + key + "' is not a string");
    return it->get<std::string>();
  };
  SourceDocument doc;
  doc.id = *str_field("id", true);
  doc.kind = parse_chunk_kind(*str_field("kind", true));
  doc.text = *str_field("text", true);
  doc.question = str_field("question", false);
  doc.source_url = str_field("source_url", false).value_or("");
  validate(doc);
  return doc;
}

CorpusLoadResult load_corpus(const std::filesystem::path& path, std::size_t max_tokens,
                             const Tokenizer& tok, LoadMode mode) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file: " + path.string());

  CorpusLoadResult result;
  std::set<std::string> doc_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      auto doc = parse_source_document(line);
      if (!doc_ids.insert(doc.id).second) {
        throw ValidationError("duplicate document id '" + doc.id + "'");
      }
      auto chunks = chunk_document(doc, max_tokens, tok);
      result.chunks.insert(result.chunks.end(), std::make_move_iterator(chunks.begin()),
                           std::make_move_iterator(chunks.end()));
      ++result.documents;
    } catch (const ValidationError& e) {
      std::string msg = "line " + std::to_string(line_no) + ": " + e.what();
      if (mode == LoadMode::strict) throw ValidationError(msg);
      result.errors.push_back(std::move(msg));
    }
  }
  if (in.bad()) throw Error("I/O error while reading " + path.string());
  return result;
}

}  // namespace fairrag
