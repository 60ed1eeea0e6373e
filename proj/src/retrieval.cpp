#include "fairrag/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "fairrag/errors.hpp"
#include "fairrag/serialize.hpp"
#include "http_util.hpp"

namespace fairrag {

namespace {

bool ranks_before(const Scored& a, const Scored& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

RankedList top_k(RankedList all, std::size_t k) {
  if (all.size() > k) {
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                      ranks_before);
    all.resize(k);
  } else {
    std::sort(all.begin(), all.end(), ranks_before);
  }
  return all;
}

double l2_norm(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

std::vector<std::string> unique_terms(const Tokenizer& tok, std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tok.terms(text)) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

bool is_well_formed(const RankedList& list) {
  std::vector<std::string_view> ids;
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (!std::isfinite(list[i].score)) return false;
    if (i > 0 && !ranks_before(list[i - 1], list[i])) return false;
    ids.push_back(list[i].id);
  }
  std::sort(ids.begin(), ids.end());
  return std::adjacent_find(ids.begin(), ids.end()) == ids.end();
}

const Chunk* Index::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &chunks_[it->second];
}

const Chunk& Index::at(std::string_view id) const {
  if (const Chunk* c = find(id)) return *c;
  throw IndexError("unknown chunk id '" + std::string(id) + "'");
}

const std::vector<Posting>* Index::postings(const std::string& term) const {
  auto it = inverted_.find(term);
  return it == inverted_.end() ? nullptr : &it->second;
}

bool Index::operator==(const Index& o) const {
  return params_.bm25.k1 == o.params_.bm25.k1 && params_.bm25.b == o.params_.bm25.b &&
         params_.rrf_k == o.params_.rrf_k && chunks_ == o.chunks_ && inverted_ == o.inverted_ &&
         lengths_ == o.lengths_ && dimension_ == o.dimension_ && vectors_ == o.vectors_;
}

void Index::finish() {
  by_id_.clear();
  for (std::size_t i = 0; i < chunks_.size(); ++i) {
    if (!by_id_.emplace(chunks_[i].id, i).second) {
      throw IndexError("duplicate chunk id '" + chunks_[i].id + "'");
    }
  }
  double total = 0.0;
  for (auto len : lengths_) total += static_cast<double>(len);
  avgdl_ = chunks_.empty() ? 0.0 : total / static_cast<double>(chunks_.size());
  vectors_.resize(chunks_.size());
  norms_.assign(chunks_.size(), 0.0);
  for (std::size_t i = 0; i < vectors_.size(); ++i) norms_[i] = l2_norm(vectors_[i]);
}

Index build_index(std::vector<Chunk> chunks, const IndexParams& params, const Tokenizer& tok) {
  if (params.rrf_k <= 0) throw IndexError("rrf_k must be positive");
  if (params.bm25.k1 < 0 || params.bm25.b < 0 || params.bm25.b > 1) {
    throw IndexError("BM25 parameters out of range");
  }
  Index index;
  index.params_ = params;
  index.tok_ = &tok;

  const bool any_vectors = std::any_of(chunks.begin(), chunks.end(),
                                       [](const Chunk& c) { return c.embedding.has_value(); });
  std::size_t dim = params.dimension;
  if (any_vectors) {
    for (const auto& c : chunks) {
      if (!c.embedding) throw IndexError("chunk '" + c.id + "' has no embedding");
      if (dim == 0) dim = c.embedding->size();
      if (c.embedding->size() != dim || dim == 0) {
        throw IndexError("chunk '" + c.id + "' embedding has dimension " +
                         std::to_string(c.embedding->size()) + ", index expects " +
                         std::to_string(dim));
      }
    }
  } else {
    dim = 0;
  }
  index.dimension_ = dim;
  index.params_.dimension = dim;

  index.lengths_.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    std::map<std::string, std::uint32_t> tf;
    auto terms = tok.terms(chunks[i].text);
    for (auto& t : terms) ++tf[t];
    for (auto& [term, f] : tf) {
      index.inverted_[term].push_back({static_cast<std::uint32_t>(i), f});
    }
    index.lengths_.push_back(terms.size());
    if (any_vectors) index.vectors_.push_back(std::move(*chunks[i].embedding));
    chunks[i].embedding.reset();
  }
  index.chunks_ = std::move(chunks);
  index.finish();
  return index;
}

void save_index(const Index& index, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const char* name, std::ios::openmode mode = std::ios::out) {
    std::ofstream f(dir / name, mode | std::ios::trunc);
    if (!f) throw IndexError("cannot write " + (dir / name).string());
    return f;
  };

  const auto& p = index.params();
  json header = {{"format_version", kIndexFormatVersion},
                 {"k1", p.bm25.k1},
                 {"b", p.bm25.b},
                 {"rrf_k", p.rrf_k},
                 {"dimension", index.dimension()},
                 {"embedding_provider", p.embedding_provider},
                 {"chunk_count", index.size()}};
  open("header.json") << header.dump(2) << '\n';

  {
    auto f = open("chunks.jsonl");
    for (const auto& c : index.chunks()) f << json(c).dump() << '\n';
  }
  {
    auto f = open("postings.jsonl");
    for (const auto& [term, list] : index.inverted()) {
      json pl = json::array();
      for (const auto& posting : list) pl.push_back({posting.doc, posting.tf});
      f << json{{"term", term}, {"postings", pl}}.dump() << '\n';
    }
  }
  std::error_code ec;
  fs::remove(dir / "vectors.bin", ec);
  if (index.has_dense()) {
    auto f = open("vectors.bin", std::ios::out | std::ios::binary);
    for (std::size_t i = 0; i < index.size(); ++i) {
      const auto& v = index.vector(i);
      f.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
    if (!f) throw IndexError("failed writing vectors.bin");
  }
}

Index load_index(const std::filesystem::path& dir, const Tokenizer& tok) {
  auto open = [&](const char* name, std::ios::openmode mode = std::ios::in) {
    std::ifstream f(dir / name, mode);
    if (!f) throw IndexError("cannot read " + (dir / name).string());
    return f;
  };

  json header;
  try {
    auto f = open("header.json");
    header = json::parse(f);
  } catch (const json::exception& e) {
    throw IndexError(std::string("bad index header: ") + e.what());
  }
  const int version = header.value("format_version", -1);
  if (version != kIndexFormatVersion) {
    throw IndexError("index format version " + std::to_string(version) + " is not supported (expected " +
                     std::to_string(kIndexFormatVersion) + ")");
  }

  Index index;
  index.tok_ = &tok;
  try {
    index.params_.bm25.k1 = header.at("k1").get<double>();
    index.params_.bm25.b = header.at("b").get<double>();
    index.params_.rrf_k = header.at("rrf_k").get<int>();
    index.params_.dimension = header.at("dimension").get<std::size_t>();
    index.params_.embedding_provider = header.value("embedding_provider", "");
    index.dimension_ = index.params_.dimension;

    auto cf = open("chunks.jsonl");
    std::string line;
    while (std::getline(cf, line)) {
      if (!line.empty()) index.chunks_.push_back(json::parse(line).get<Chunk>());
    }
    const std::size_t n = index.chunks_.size();
    if (n != header.at("chunk_count").get<std::size_t>()) {
      throw IndexError("chunk count disagrees with header");
    }

    index.lengths_.assign(n, 0);
    auto pf = open("postings.jsonl");
    while (std::getline(pf, line)) {
      if (line.empty()) continue;
      auto j = json::parse(line);
      auto& list = index.inverted_[j.at("term").get<std::string>()];
      for (const auto& pair : j.at("postings")) {
        Posting posting{pair.at(0).get<std::uint32_t>(), pair.at(1).get<std::uint32_t>()};
        if (posting.doc >= n) throw IndexError("posting references missing chunk");
        index.lengths_[posting.doc] += posting.tf;
        list.push_back(posting);
      }
    }
  } catch (const json::exception& e) {
    throw IndexError(std::string("corrupt index: ") + e.what());
  } catch (const ValidationError& e) {
    throw IndexError(std::string("corrupt index: ") + e.what());
  }

  if (index.dimension_ > 0) {
    auto vf = open("vectors.bin", std::ios::in | std::ios::binary);
    index.vectors_.assign(index.chunks_.size(), std::vector<double>(index.dimension_));
    for (auto& v : index.vectors_) {
      vf.read(reinterpret_cast<char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
      if (!vf) throw IndexError("vectors.bin is truncated");
    }
  }
  index.finish();
  return index;
}

RankedList bm25_search(const Index& index, std::string_view query, std::size_t k) {
  if (k == 0 || index.size() == 0) return {};
  const double n_docs = static_cast<double>(index.size());
  const double k1 = index.params().bm25.k1;
  const double b = index.params().bm25.b;
  const double avgdl = index.avgdl();

  std::vector<double> scores(index.size(), 0.0);
  std::vector<char> touched(index.size(), 0);
  // Term-at-a-time over distinct query terms in first-occurrence order.
  for (const auto& term : unique_terms(index.tokenizer(), query)) {
    const auto* list = index.postings(term);
    if (!list) continue;
    const double nt = static_cast<double>(list->size());
    const double idf = std::log(1.0 + (n_docs - nt + 0.5) / (nt + 0.5));
    for (const auto& p : *list) {
      const double tf = p.tf;
      const double dl = static_cast<double>(index.length(p.doc));
      scores[p.doc] += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * dl / avgdl));
      touched[p.doc] = 1;
    }
  }

  RankedList all;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (touched[i] && scores[i] > 0.0) all.push_back({index.chunks()[i].id, scores[i]});
  }
  return top_k(std::move(all), k);
}

RankedList dense_search(const Index& index, const std::vector<double>& query_vec, std::size_t k) {
  if (!index.has_dense()) {
    if (index.size() == 0) return {};
    throw IndexError("index has no dense store");
  }
  if (query_vec.size() != index.dimension()) {
    throw IndexError("query vector has dimension " + std::to_string(query_vec.size()) +
                     ", index expects " + std::to_string(index.dimension()));
  }
  if (k == 0) return {};
  const double qn = l2_norm(query_vec);
  RankedList all;
  all.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto& v = index.vector(i);
    const double dn = index.norm(i);
    double score = 0.0;
    if (qn > 0.0 && dn > 0.0) {
      double dot = 0.0;
      for (std::size_t d = 0; d < v.size(); ++d) dot += query_vec[d] * v[d];
      score = dot / (qn * dn);
    }
    all.push_back({index.chunks()[i].id, score});
  }
  return top_k(std::move(all), k);
}

RankedList rrf_fuse(const std::vector<RankedList>& lists, int rrf_k) {
  if (rrf_k <= 0) throw ValidationError("rrf_k must be positive");
  std::map<std::string, double> fused;
  for (const auto& list : lists) {
    std::set<std::string_view> seen;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!seen.insert(list[i].id).second) continue;
      fused[list[i].id] += 1.0 / (static_cast<double>(rrf_k) + static_cast<double>(i + 1));
    }
  }
  RankedList out;
  out.reserve(fused.size());
  for (auto& [id, score] : fused) out.push_back({id, score});
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

HashingEmbedder::HashingEmbedder(std::size_t dimension, const Tokenizer& tok)
    : dimension_(dimension), tok_(tok) {
  if (dimension == 0) throw ValidationError("embedding dimension must be positive");
}

std::string HashingEmbedder::name() const { return "hashing-" + std::to_string(dimension_); }

std::vector<double> HashingEmbedder::embed(std::string_view text) const {
  std::vector<double> v(dimension_, 0.0);
  for (const auto& term : tok_.terms(text)) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : term) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    v[h % dimension_] += (h >> 63) ? -1.0 : 1.0;
  }
  const double n = l2_norm(v);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
  return v;
}

HttpEmbedder::HttpEmbedder(std::string base_url, std::string model, std::size_t dimension,
                           std::string api_key)
    : base_url_(std::move(base_url)),
      model_(std::move(model)),
      dimension_(dimension),
      api_key_(std::move(api_key)) {
  if (dimension_ == 0) throw ValidationError("embedding dimension must be positive");
}

std::vector<double> HttpEmbedder::embed(std::string_view text) const {
  auto url = detail::split_url(base_url_);
  httplib::Client client(url.origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  json body = {{"model", model_}, {"input", std::string(text)}};
  auto res = client.Post(url.path_prefix + "/embeddings", headers, body.dump(), "application/json");
  if (!res) throw EmbeddingError("embedding request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw EmbeddingError("embedding endpoint returned HTTP " + std::to_string(res->status));
  }
  std::vector<double> v;
  try {
    v = json::parse(res->body).at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw EmbeddingError(std::string("malformed embedding response: ") + e.what());
  }
  if (v.size() != dimension_) {
    throw EmbeddingError("embedding has dimension " + std::to_string(v.size()) + ", expected " +
                         std::to_string(dimension_));
  }
  return v;
}

void embed_chunks(std::vector<Chunk>& chunks, const EmbeddingProvider& provider) {
  for (auto& c : chunks) c.embedding = provider.embed(c.text);
}

HybridResult hybrid_retrieve(const Index& index, std::string_view sub_query,
                             const EmbeddingProvider* provider, const HybridOptions& opts) {
  HybridResult result;
  if (index.size() == 0) return result;
  result.sparse = bm25_search(index, sub_query, opts.top_k_per_retriever);

  std::vector<RankedList> lists{result.sparse};
  if (provider && index.has_dense()) {
    try {
      if (provider->dimension() != index.dimension()) {
        throw EmbeddingError("provider dimension " + std::to_string(provider->dimension()) +
                             " does not match index dimension " + std::to_string(index.dimension()));
      }
      result.dense = dense_search(index, provider->embed(sub_query), opts.top_k_per_retriever);
      lists.push_back(result.dense);
    } catch (const std::exception& e) {
      if (!opts.sparse_only_fallback) {
        if (dynamic_cast<const EmbeddingError*>(&e)) throw;
        throw EmbeddingError(e.what());
      }
      result.used_fallback = true;
    }
  }

  result.fused = rrf_fuse(lists, index.params().rrf_k);
  for (std::size_t i = 0; i < result.fused.size() && i < opts.top_n; ++i) {
    result.chunks.push_back(index.at(result.fused[i].id));
  }
  return result;
}

}  // namespace fairrag
