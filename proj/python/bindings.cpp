#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fairrag/config.hpp"
#include "fairrag/econ.hpp"
#include "fairrag/errors.hpp"
#include "fairrag/evalharness.hpp"
#include "fairrag/ingest.hpp"
#include "fairrag/orchestrator.hpp"
#include "fairrag/retrieval.hpp"
#include "fairrag/serialize.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace fairrag;

namespace {

// Domain values cross the boundary as plain dicts, via their JSON form.
py::object to_py(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

json from_py(const py::object& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

json verdict_json(const JudgeVerdict& v) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ScoreVerdict>) {
          return {{"score", x.score}, {"reasoning", x.reasoning}};
        } else if constexpr (std::is_same_v<T, FilterAuditVerdict>) {
          return {{"incorrectly_kept_ids", x.incorrectly_kept_ids},
                  {"incorrectly_discarded_ids", x.incorrectly_discarded_ids}};
        } else if constexpr (std::is_same_v<T, SufficiencyVerdict>) {
          return {{"is_sufficient", x.is_sufficient}, {"reasoning", x.reasoning}};
        } else if constexpr (std::is_same_v<T, ContextRelevanceVerdict>) {
          json scores = json::array();
          for (const auto& s : x.scores) scores.push_back({{"doc_id", s.doc_id}, {"score", s.score}});
          return {{"scores", scores}, {"mean", x.mean()}};
        } else if constexpr (std::is_same_v<T, FaithfulnessVerdict>) {
          return {{"verdict", to_string(x.verdict)}, {"reasoning", x.reasoning}};
        } else if constexpr (std::is_same_v<T, RelevanceCorrectnessVerdict>) {
          return {{"relevance_score", x.relevance_score},
                  {"correctness_score", x.correctness_score},
                  {"reasoning", x.reasoning}};
        } else if constexpr (std::is_same_v<T, NegativeRejectionVerdict>) {
          return {{"correctly_rejected", x.correctly_rejected}};
        } else if constexpr (std::is_same_v<T, NoiseRobustnessVerdict>) {
          return {{"is_robust", x.is_robust}, {"is_correct", x.is_correct}, {"reasoning", x.reasoning}};
        } else if constexpr (std::is_same_v<T, RankingVerdict>) {
          return {{"order", x.order}, {"reasoning", x.reasoning}};
        } else {
          return {{"category", to_string(x.category)},
                  {"reasoning", x.reasoning},
                  {"root_cause_analysis", x.root_cause_analysis},
                  {"suggested_improvement", x.suggested_improvement}};
        }
      },
      v);
}

py::list ranked(const RankedList& list) {
  py::list out;
  for (const auto& s : list) out.append(py::make_tuple(s.id, s.score));
  return out;
}

RankedList ranked_from(const std::vector<std::pair<std::string, double>>& items) {
  RankedList out;
  for (const auto& [id, score] : items) out.push_back({id, score});
  return out;
}

/// A pipeline bound to an index, a scripted or HTTP backend and a prompt set.
class Engine {
 public:
  Engine(const std::filesystem::path& index_dir, std::shared_ptr<ChatBackend> backend,
         std::optional<std::filesystem::path> prompts_dir, std::size_t hashing_dimension)
      : index_(load_index(index_dir)),
        prompts_(PromptLibrary::load(prompts_dir ? *prompts_dir : PromptLibrary::default_dir())),
        gateway_(std::move(backend)) {
    if (index_.has_dense()) embedder_ = std::make_unique<HashingEmbedder>(hashing_dimension);
  }

  py::object ask(const std::string& question, int max_iter, bool filter_memoization) {
    PipelineConfig config;
    config.max_iter = max_iter;
    config.filter_memoization = filter_memoization;
    PipelineContext ctx{index_, embedder_.get(), gateway_, prompts_};
    QueryTrace trace;
    {
      py::gil_scoped_release release;
      trace = run_query(question, config, ctx);
    }
    return to_py(json(trace));
  }

  std::size_t size() const { return index_.chunks().size(); }

 private:
  Index index_;
  PromptLibrary prompts_;
  Gateway gateway_;
  std::unique_ptr<EmbeddingProvider> embedder_;
};

}  // namespace

PYBIND11_MODULE(_fairrag, m) {
  m.doc() = "Iterative evidence-filtering RAG engine";

  // Translators run newest first, so the base class is registered first.
  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IndexError>(m, "IndexError", base.ptr());
  py::register_exception<GatewayError>(m, "GatewayError", base.ptr());

  // ingest
  m.def(
      "chunk_document",
      [](const py::dict& doc, std::size_t max_tokens) {
        SourceDocument d = parse_source_document(from_py(doc).dump());
        json out = json::array();
        for (const auto& c : chunk_document(d, max_tokens)) out.push_back(c);
        return to_py(out);
      },
      py::arg("doc"), py::arg("max_tokens") = kDefaultChunkTokens);
  m.def("count_tokens", [](const std::string& text) { return default_tokenizer().count(text); });
  m.def(
      "ingest",
      [](const std::filesystem::path& corpus, const std::filesystem::path& out_dir, std::size_t max_tokens,
         std::size_t dimension) {
        auto loaded = load_corpus(corpus, max_tokens);
        IndexParams params;
        if (dimension > 0) {
          HashingEmbedder e(dimension);
          embed_chunks(loaded.chunks, e);
          params.dimension = dimension;
          params.embedding_provider = e.name();
        }
        const auto n = loaded.chunks.size();
        save_index(build_index(std::move(loaded.chunks), params), out_dir);
        return py::make_tuple(loaded.documents, n);
      },
      py::arg("corpus"), py::arg("out_dir"), py::arg("max_tokens") = kDefaultChunkTokens,
      py::arg("dimension") = 256);

  // retrieval
  py::class_<Index>(m, "Index")
      .def_static(
          "build",
          [](const py::list& chunks, int rrf_k) {
            std::vector<Chunk> cs;
            for (const auto& c : chunks) cs.push_back(from_py(py::reinterpret_borrow<py::object>(c)).get<Chunk>());
            IndexParams p;
            p.rrf_k = rrf_k;
            return build_index(std::move(cs), p);
          },
          py::arg("chunks"), py::arg("rrf_k") = 60)
      .def_static("load", [](const std::filesystem::path& dir) { return load_index(dir); })
      .def("save", [](const Index& i, const std::filesystem::path& dir) { save_index(i, dir); })
      .def("__len__", [](const Index& i) { return i.chunks().size(); })
      .def("bm25", [](const Index& i, const std::string& q, std::size_t k) { return ranked(bm25_search(i, q, k)); },
           py::arg("query"), py::arg("k") = 3)
      .def("dense",
           [](const Index& i, const std::vector<double>& v, std::size_t k) { return ranked(dense_search(i, v, k)); },
           py::arg("vector"), py::arg("k") = 3);
  m.def(
      "rrf_fuse",
      [](const std::vector<std::vector<std::pair<std::string, double>>>& lists, int rrf_k) {
        std::vector<RankedList> ls;
        for (const auto& l : lists) ls.push_back(ranked_from(l));
        return ranked(rrf_fuse(ls, rrf_k));
      },
      py::arg("lists"), py::arg("rrf_k") = 60);

  // agent output parsers
  m.def("parse_validation", [](const std::string& raw) { return std::string(to_string(parse_validation(raw))); });
  m.def("parse_query_list", [](const std::string& raw) {
    std::vector<std::string> out;
    for (const auto& q : parse_query_list(raw, SubQueryOrigin::decomposition, 1)) out.push_back(q.text);
    return out;
  });
  m.def(
      "parse_filter",
      [](const std::string& raw, std::size_t batch_size) {
        std::set<std::string> ids;
        for (std::size_t i = 1; i <= batch_size; ++i) ids.insert("doc_" + std::to_string(i));
        auto v = parse_filter(raw, ids);
        return std::vector<std::string>(v.unhelpful_ids.begin(), v.unhelpful_ids.end());
      },
      py::arg("raw"), py::arg("batch_size") = 10);
  m.def("parse_sea", [](const std::string& raw) { return to_py(json(parse_sea(raw))); });
  m.def(
      "parse_answer", [](const std::string& raw, std::size_t n) { return to_py(json(parse_answer(raw, n))); },
      py::arg("raw"), py::arg("n_evidence"));
  m.def("parse_judge", [](const std::string& raw, const std::string& kind) {
    return to_py(verdict_json(parse_judge_json(raw, parse_judge_kind(kind))));
  });

  // econ
  m.def("blended_rate", [](const std::string& tier) { return blended_rate(parse_tier(tier)); });
  m.def("dynamic_rate", []() { return dynamic_rate(); });
  m.def("cost_per_query", &cost_per_query, py::arg("tokens"), py::arg("rate_per_mtok"));
  m.def(
      "predict_latency",
      [](double tokens, double calls, double mm, double h, double r) {
        return predict_latency(tokens, calls, LatencyModel{mm, h, r});
      },
      py::arg("tokens"), py::arg("calls"), py::arg("m") = 0.001866, py::arg("h") = 0.5, py::arg("R") = 1.0);
  m.def(
      "recover_model_time",
      [](double t, double calls) { return recover_model_time(t, calls); }, py::arg("t_measured"),
      py::arg("calls"));
  m.def("f1", &f1, py::arg("precision"), py::arg("recall"));
  m.def("failure_histogram", [](const std::vector<std::string>& raw) {
    auto h = failure_histogram(raw);
    py::dict out;
    for (const auto& [c, n] : h.counts) out[py::str(std::string(to_string(c)))] = py::make_tuple(n, h.percent(c));
    out["unclassified"] = py::make_tuple(h.unclassified, h.unclassified_percent());
    return out;
  });
  m.def("report", [](const std::filesystem::path& results) {
    return to_py(to_json(compute_metrics(load_results(results))));
  });

  // pipeline
  py::class_<Engine>(m, "Engine")
      .def(py::init([](const std::filesystem::path& index_dir, const std::filesystem::path& script,
                       std::optional<std::filesystem::path> prompts, std::size_t dimension) {
             return std::make_unique<Engine>(index_dir, std::shared_ptr<ChatBackend>(ScriptedBackend::from_file(script)),
                                             prompts, dimension);
           }),
           py::arg("index_dir"), py::arg("script"), py::arg("prompts_dir") = py::none(),
           py::arg("dimension") = 256)
      .def("ask", &Engine::ask, py::arg("question"), py::arg("max_iter") = 3,
           py::arg("filter_memoization") = true)
      .def("__len__", &Engine::size);
}
