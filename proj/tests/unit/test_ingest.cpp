#include <doctest.h>

#include <random>

#include "fairrag/errors.hpp"
#include "fairrag/ingest.hpp"
#include "support.hpp"

using namespace fairrag;
using namespace fairrag::testing;

namespace {

std::vector<std::string> token_strings(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& t : default_tokenizer().tokenize(text)) out.emplace_back(t.view(text));
  return out;
}

// A sentence of `n` tokens: n-1 words and a full stop.
std::string sentence(std::mt19937& rng, std::size_t n) {
  static const std::vector<std::string> vocab = {"کتاب", "نماز", "قرآن", "علم", "حدیث", "alpha", "beta", "روزه"};
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::string s;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (i) s += ' ';
    s += vocab[pick(rng)];
  }
  return s + ".";
}

std::string paragraph(std::mt19937& rng, std::size_t tokens) {
  std::string p;
  while (tokens > 0) {
    const std::size_t n = std::min<std::size_t>(tokens, 20);
    if (!p.empty()) p += ' ';
    p += sentence(rng, n);
    tokens -= n;
  }
  return p;
}

void check_reconstruction(const SourceDocument& doc, const std::vector<Chunk>& chunks) {
  std::vector<std::string> joined;
  for (const auto& c : chunks) {
    auto t = token_strings(chunk_body(c.text));
    joined.insert(joined.end(), t.begin(), t.end());
  }
  CHECK(joined == token_strings(doc.text));
}

}  // namespace

TEST_SUITE("ingest") {
  TEST_CASE("200/200/500 paragraphs under a 378 budget") {
    std::mt19937 rng(3);
    SourceDocument doc;
    doc.id = "d";
    doc.text = paragraph(rng, 200) + "\n\n" + paragraph(rng, 200) + "\n\n" + paragraph(rng, 500);
    REQUIRE(default_tokenizer().count(doc.text) == 900);
    auto chunks = chunk_document(doc, 378);
    CHECK(chunks.size() >= 3);
    for (std::size_t k = 0; k < chunks.size(); ++k) {
      CHECK(chunks[k].token_count <= 378);
      CHECK(chunks[k].token_count == default_tokenizer().count(chunks[k].text));
      CHECK(chunks[k].id == "d#" + std::to_string(k));
    }
    check_reconstruction(doc, chunks);
  }

  TEST_CASE("short document is one chunk") {
    SourceDocument doc{"x", ChunkKind::encyclopedia, "یک جمله کوتاه.", std::nullopt, "https://u"};
    auto chunks = chunk_document(doc, 378);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].text == doc.text);
    CHECK(chunks[0].source_url == "https://u");
  }

  TEST_CASE("single over-long sentence is hard split") {
    std::string text;
    for (int i = 0; i < 100; ++i) text += "کلمه ";
    SourceDocument doc{"x", ChunkKind::encyclopedia, text, std::nullopt, ""};
    auto chunks = chunk_document(doc, 16);
    CHECK(chunks.size() == 7);
    for (const auto& c : chunks) CHECK(c.token_count <= 16);
    check_reconstruction(doc, chunks);
  }

  TEST_CASE("qa chunks carry both markers on every piece") {
    std::mt19937 rng(5);
    SourceDocument doc;
    doc.id = "qa1";
    doc.kind = ChunkKind::qa;
    doc.question = "حکم   روزه\nمسافر چیست؟";
    doc.text = paragraph(rng, 300) + "\n\n" + paragraph(rng, 300);
    auto chunks = chunk_document(doc, 120);
    REQUIRE(chunks.size() > 1);
    for (const auto& c : chunks) {
      CHECK(c.kind == ChunkKind::qa);
      CHECK(c.text.starts_with(std::string(kUserQuestionMarker) + " حکم روزه مسافر چیست؟\n"));
      CHECK(c.text.find(kExpertAnswerMarker) != std::string::npos);
      CHECK(c.token_count <= 120);
    }
    check_reconstruction(doc, chunks);
  }

  TEST_CASE("over-long question is shortened to leave room for the answer") {
    std::string q;
    for (int i = 0; i < 60; ++i) q += "پرسش ";
    SourceDocument doc{"q", ChunkKind::qa, "پاسخ کوتاه است.", q, ""};
    auto chunks = chunk_document(doc, 32);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].token_count <= 32);
    CHECK(chunks[0].text.find(kExpertAnswerMarker) != std::string::npos);
    CHECK(chunk_body(chunks[0].text) == "پاسخ کوتاه است.");
  }

  TEST_CASE("randomized corpus keeps every invariant") {
    std::mt19937 rng(2024);
    std::uniform_int_distribution<std::size_t> paras(1, 5);
    std::uniform_int_distribution<std::size_t> plen(1, 400);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<std::size_t> budget(16, 400);
    for (int d = 0; d < 20; ++d) {
      SourceDocument doc;
      doc.id = "r" + std::to_string(d);
      const auto n = paras(rng);
      for (std::size_t p = 0; p < n; ++p) {
        if (p) doc.text += "\n\n";
        doc.text += paragraph(rng, plen(rng));
      }
      if (coin(rng)) {
        doc.kind = ChunkKind::qa;
        doc.question = sentence(rng, 12);
      }
      const auto max = budget(rng);
      auto chunks = chunk_document(doc, max);
      CHECK_FALSE(chunks.empty());
      for (const auto& c : chunks) {
        CHECK(c.token_count <= max);
        if (doc.kind == ChunkKind::qa) {
          CHECK(c.text.starts_with(kUserQuestionMarker));
          CHECK(c.text.find(kExpertAnswerMarker) != std::string::npos);
        }
      }
      check_reconstruction(doc, chunks);
    }
  }

  TEST_CASE("validation") {
    CHECK_THROWS_AS(chunk_document({"", ChunkKind::encyclopedia, "t", std::nullopt, ""}, 378), ValidationError);
    CHECK_THROWS_AS(chunk_document({"x", ChunkKind::qa, "t", std::nullopt, ""}, 378), ValidationError);
    CHECK_THROWS_AS(chunk_document({"x", ChunkKind::encyclopedia, "t", std::nullopt, ""}, 15), ValidationError);
    CHECK_THROWS_AS(parse_source_document("{\"id\":\"x\",\"kind\":\"book\",\"text\":\"t\"}"), ValidationError);
    CHECK_THROWS_AS(parse_source_document("[1]"), ValidationError);
    auto doc = parse_source_document(R"({"id":"x","kind":"qa","text":"a","question":"q?","source_url":"u"})");
    CHECK(doc.kind == ChunkKind::qa);
    CHECK(*doc.question == "q?");
  }

  TEST_CASE("load_corpus strict and lenient") {
    TempDir dir;
    write_file(dir / "c.jsonl",
               "{\"id\":\"a\",\"kind\":\"encyclopedia\",\"text\":\"متن اول.\"}\n"
               "\n"
               "{\"id\":\"b\",\"kind\":\"qa\",\"text\":\"پاسخ\"}\n"
               "{\"id\":\"a\",\"kind\":\"encyclopedia\",\"text\":\"تکراری\"}\n"
               "{\"id\":\"c\",\"kind\":\"encyclopedia\",\"text\":\"متن سوم.\"}\n");
    try {
      load_corpus(dir / "c.jsonl", 378);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).starts_with("line 3:"));
    }
    auto r = load_corpus(dir / "c.jsonl", 378, default_tokenizer(), LoadMode::lenient);
    CHECK(r.documents == 2);
    CHECK(r.chunks.size() == 2);
    REQUIRE(r.errors.size() == 2);
    CHECK(r.errors[0].starts_with("line 3:"));
    CHECK(r.errors[1].starts_with("line 4:"));
    CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl", 378), Error);
  }

  TEST_CASE("empty corpus") {
    TempDir dir;
    write_file(dir / "e.jsonl", "");
    auto r = load_corpus(dir / "e.jsonl", 378);
    CHECK(r.documents == 0);
    CHECK(r.chunks.empty());
  }
}
