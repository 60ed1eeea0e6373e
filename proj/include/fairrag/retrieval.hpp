#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fairrag/domain.hpp"
#include "fairrag/tokenizer.hpp"

namespace fairrag {

inline constexpr int kIndexFormatVersion = 1;

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct IndexParams {
  Bm25Params bm25;
  int rrf_k = 60;
  // Expected embedding dimension; 0 means "take it from the first embedded chunk".
  std::size_t dimension = 0;
  std::string embedding_provider;  // recorded in the header, informational
};

struct Scored {
  std::string id;
  double score = 0.0;

  bool operator==(const Scored&) const = default;
};

/// Descending by score, ties by lexicographic id, no duplicate ids. Rank of
/// entry i is i + 1.
using RankedList = std::vector<Scored>;

/// True when the list satisfies the RankedList invariants.
bool is_well_formed(const RankedList& list);

struct Posting {
  std::uint32_t doc = 0;  // position in Index::chunks()
  std::uint32_t tf = 0;

  bool operator==(const Posting&) const = default;
};

/// Immutable in-process hybrid index: an inverted index for BM25 plus an
/// optional dense store. Safe for concurrent reads.
class Index {
 public:
  Index() = default;

  const std::vector<Chunk>& chunks() const { return chunks_; }
  std::size_t size() const { return chunks_.size(); }
  const Chunk* find(std::string_view id) const;
  const Chunk& at(std::string_view id) const;

  const IndexParams& params() const { return params_; }
  double avgdl() const { return avgdl_; }
  std::size_t length(std::size_t doc) const { return lengths_[doc]; }
  const std::vector<Posting>* postings(const std::string& term) const;
  const std::map<std::string, std::vector<Posting>>& inverted() const { return inverted_; }

  bool has_dense() const { return dimension_ > 0; }
  std::size_t dimension() const { return dimension_; }
  // Empty for an index without a dense store.
  const std::vector<double>& vector(std::size_t doc) const { return vectors_[doc]; }
  double norm(std::size_t doc) const { return norms_[doc]; }

  const Tokenizer& tokenizer() const { return *tok_; }

  bool operator==(const Index& other) const;

 private:
  friend Index build_index(std::vector<Chunk>, const IndexParams&, const Tokenizer&);
  friend Index load_index(const std::filesystem::path&, const Tokenizer&);

  void finish();

  IndexParams params_;
  const Tokenizer* tok_ = &default_tokenizer();
  std::vector<Chunk> chunks_;  // embeddings moved out into vectors_
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<Posting>> inverted_;
  std::vector<std::size_t> lengths_;
  double avgdl_ = 0.0;
  std::size_t dimension_ = 0;
  std::vector<std::vector<double>> vectors_;
  std::vector<double> norms_;
};

/// Deterministic build. Throws IndexError on a duplicate id or a vector whose
/// dimension disagrees with the others.
Index build_index(std::vector<Chunk> chunks, const IndexParams& params = {},
                  const Tokenizer& tok = default_tokenizer());

/// Writes header.json, chunks.jsonl, postings.jsonl and (with a dense store)
/// vectors.bin into `dir`, creating it if needed.
void save_index(const Index& index, const std::filesystem::path& dir);

/// Throws IndexError on a missing file, a format-version mismatch or
/// inconsistent contents.
Index load_index(const std::filesystem::path& dir, const Tokenizer& tok = default_tokenizer());

RankedList bm25_search(const Index& index, std::string_view query, std::size_t k);
RankedList dense_search(const Index& index, const std::vector<double>& query_vec, std::size_t k);

/// Reciprocal Rank Fusion: score(d) = Σ 1/(rrf_k + rank(d)) over lists holding d.
RankedList rrf_fuse(const std::vector<RankedList>& lists, int rrf_k);

/// Text → vector contract. Implementations must be deterministic and thread safe.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<double> embed(std::string_view text) const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::string name() const = 0;
};

/// Signed feature hashing of index terms, L2-normalised. Needs no model
/// weights, which makes it useful for tests and offline runs.
class HashingEmbedder final : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::size_t dimension = 256, const Tokenizer& tok = default_tokenizer());
  std::vector<double> embed(std::string_view text) const override;
  std::size_t dimension() const override { return dimension_; }
  std::string name() const override;

 private:
  std::size_t dimension_;
  const Tokenizer& tok_;
};

/// OpenAI-style /embeddings endpoint. Transport failures raise EmbeddingError.
class HttpEmbedder final : public EmbeddingProvider {
 public:
  HttpEmbedder(std::string base_url, std::string model, std::size_t dimension,
               std::string api_key = {});
  std::vector<double> embed(std::string_view text) const override;
  std::size_t dimension() const override { return dimension_; }
  std::string name() const override { return "http:" + model_; }

 private:
  std::string base_url_;
  std::string model_;
  std::size_t dimension_;
  std::string api_key_;
};

/// Fills every chunk's embedding from the provider.
void embed_chunks(std::vector<Chunk>& chunks, const EmbeddingProvider& provider);

struct HybridOptions {
  std::size_t top_k_per_retriever = 3;
  std::size_t top_n = 3;
  // Degrade to BM25 alone when the provider throws.
  bool sparse_only_fallback = true;
};

struct HybridResult {
  std::vector<Chunk> chunks;  // fused order, at most top_n
  RankedList sparse;
  RankedList dense;
  RankedList fused;
  bool used_fallback = false;
};

/// Top-k BM25 and top-k dense, RRF over both, first top_n of the fused list.
/// Without a dense store or provider the sparse list is fused alone.
HybridResult hybrid_retrieve(const Index& index, std::string_view sub_query,
                             const EmbeddingProvider* provider, const HybridOptions& opts = {});

}  // namespace fairrag
