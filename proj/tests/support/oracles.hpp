#pragma once

// Brute-force reference implementations. They read the raw chunk texts and
// vectors directly and share nothing with the index beyond the tokenizer.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fairrag/retrieval.hpp"

namespace fairrag::testing {

inline void sort_ranked(RankedList& list) {
  std::sort(list.begin(), list.end(), [](const Scored& a, const Scored& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
}

inline RankedList oracle_bm25(const std::vector<Chunk>& docs, const std::string& query, std::size_t k,
                              double k1 = 1.2, double b = 0.75) {
  const auto& tok = default_tokenizer();
  std::vector<std::vector<std::string>> terms;
  double total = 0;
  for (const auto& d : docs) {
    terms.push_back(tok.terms(d.text));
    total += static_cast<double>(terms.back().size());
  }
  if (docs.empty()) return {};
  const double n = static_cast<double>(docs.size());
  const double avgdl = total / n;

  std::vector<std::string> q;
  for (const auto& t : tok.terms(query)) {
    if (std::find(q.begin(), q.end(), t) == q.end()) q.push_back(t);
  }
  std::vector<double> score(docs.size(), 0.0);
  std::vector<bool> hit(docs.size(), false);
  for (const auto& t : q) {
    double df = 0;
    for (const auto& dt : terms) df += std::count(dt.begin(), dt.end(), t) > 0 ? 1 : 0;
    if (df == 0) continue;
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const double tf = static_cast<double>(std::count(terms[i].begin(), terms[i].end(), t));
      if (tf == 0) continue;
      const double dl = static_cast<double>(terms[i].size());
      score[i] += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * dl / avgdl));
      hit[i] = true;
    }
  }
  RankedList out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (hit[i] && score[i] > 0) out.push_back({docs[i].id, score[i]});
  }
  sort_ranked(out);
  if (out.size() > k) out.resize(k);
  return out;
}

inline RankedList oracle_cosine(const std::vector<Chunk>& docs, const std::vector<double>& q, std::size_t k) {
  auto norm = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  const double qn = norm(q);
  RankedList out;
  for (const auto& d : docs) {
    const auto& v = *d.embedding;
    const double dn = norm(v);
    double s = 0;
    if (qn > 0 && dn > 0) {
      double dot = 0;
      for (std::size_t i = 0; i < v.size(); ++i) dot += q[i] * v[i];
      s = dot / (qn * dn);
    }
    out.push_back({d.id, s});
  }
  sort_ranked(out);
  if (out.size() > k) out.resize(k);
  return out;
}

inline RankedList oracle_rrf(const std::vector<RankedList>& lists, int rrf_k) {
  std::map<std::string, double> acc;
  for (const auto& l : lists) {
    std::set<std::string> seen;
    for (std::size_t r = 0; r < l.size(); ++r) {
      if (seen.insert(l[r].id).second) acc[l[r].id] += 1.0 / (rrf_k + static_cast<double>(r + 1));
    }
  }
  RankedList out;
  for (const auto& [id, s] : acc) out.push_back({id, s});
  sort_ranked(out);
  return out;
}

inline bool same_ranking(const RankedList& a, const RankedList& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].id != b[i].id || a[i].score != b[i].score) return false;
  }
  return true;
}

}  // namespace fairrag::testing
