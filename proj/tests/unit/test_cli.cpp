#include <doctest.h>

#include <sstream>

#include "fairrag/cli.hpp"
#include "fairrag/evalharness.hpp"
#include "support.hpp"

using namespace fairrag;
using namespace fairrag::testing;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fairrag");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

// Copies the case-study config next to a fresh index directory.
struct CaseStudy {
  TempDir dir;
  std::string config;

  CaseStudy() {
    const auto src = fixtures_dir() / "case_study";
    for (const char* f : {"corpus.jsonl", "script.jsonl"}) std::filesystem::copy_file(src / f, dir / f);
    write_file(dir / "fairrag.ini",
               "[paths]\nindex = index\n[ingest]\nembedding = none\n[pipeline]\nfilter_memoization = false\n"
               "[gateway]\nmode = scripted\nscript = script.jsonl\n");
    config = (dir / "fairrag.ini").string();
  }
  std::string question() const {
    auto q = read_file(fixtures_dir() / "case_study" / "question.txt");
    while (!q.empty() && q.back() == '\n') q.pop_back();
    return q;
  }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("ingest then ask") {
    CaseStudy cs;
    auto ingest = cli({"--config", cs.config, "ingest", (cs.dir / "corpus.jsonl").string()});
    REQUIRE(ingest.code == 0);
    CHECK(ingest.out.find("Indexed 4 documents as 4 chunks") != std::string::npos);

    const auto trace_path = (cs.dir / "trace.jsonl").string();
    auto ask = cli({"--config", cs.config, "ask", cs.question(), "--trace-out", trace_path});
    CAPTURE(ask.err);
    REQUIRE(ask.code == 0);
    CHECK(ask.out.find("Class: VALID_LARGE") != std::string::npos);
    CHECK(ask.out.find("Iteration 2") != std::string::npos);
    CHECK(ask.out.find("Citations: 4") != std::string::npos);
    CHECK(ask.out.find("Calls: 8") != std::string::npos);

    auto trace = nlohmann::json::parse(read_file(trace_path));
    CHECK(trace["iterations"].size() == 2);

    auto json_run = cli({"--config", cs.config, "--json", "ask", cs.question()});
    REQUIRE(json_run.code == 0);
    auto j = nlohmann::json::parse(json_run.out);
    CHECK(j["accounting"]["api_calls"] == 8);
    CHECK(j == trace);
  }

  TEST_CASE("ask reports an aborted stage with exit 1") {
    CaseStudy cs;
    REQUIRE(cli({"--config", cs.config, "ingest", (cs.dir / "corpus.jsonl").string()}).code == 0);
    write_file(cs.dir / "broken.jsonl", "{\"match\": \"\", \"response\": \"Selected Label:\\nVALID_LARGE\", "
                                        "\"role\": \"validator\"}\n");
    auto r = cli({"--config", cs.config, "ask", "anything", "--script", (cs.dir / "broken.jsonl").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("aborted in stage decomposer") != std::string::npos);
  }

  TEST_CASE("argument errors") {
    CHECK(cli({}).code != 0);
    CHECK(cli({"ask", "q", "--max-iter", "5"}).code != 0);
    CHECK(cli({"frobnicate"}).code != 0);
    auto missing = cli({"ingest", "/nonexistent/corpus.jsonl", "--out", "/tmp/x"});
    CHECK(missing.code == 1);
    CHECK(missing.err.rfind("error: ", 0) == 0);
  }

  TEST_CASE("report without results prints the reference tables") {
    auto text = cli({"report"});
    REQUIRE(text.code == 0);
    CHECK(text.out.find("Static Small") != std::string::npos);
    CHECK(text.out.find("Dynamic") != std::string::npos);
    CHECK(text.out.find("Reference") != std::string::npos);

    auto js = cli({"--json", "report"});
    REQUIRE(js.code == 0);
    auto j = nlohmann::json::parse(js.out);
    CHECK(j["metrics"].is_null());
    REQUIRE(j["cost"].size() == 4);
    // The text table shows the same numbers as the JSON.
    for (const auto& row : j["cost"]) {
      CHECK(text.out.find(row["label"].get<std::string>()) != std::string::npos);
      CHECK(text.out.find(row["cost_display"].get<std::string>()) != std::string::npos);
    }
  }

  TEST_CASE("report over an empty results file") {
    TempDir dir;
    write_file(dir / "empty.jsonl", "");
    auto r = cli({"report", (dir / "empty.jsonl").string()});
    CHECK(r.code == 0);
    auto j = nlohmann::json::parse(cli({"--json", "report", (dir / "empty.jsonl").string()}).out);
    CHECK(j["metrics"]["records"] == 0);
  }

  TEST_CASE("eval end to end with scripted judges") {
    CaseStudy cs;
    REQUIRE(cli({"--config", cs.config, "ingest", (cs.dir / "corpus.jsonl").string()}).code == 0);
    write_file(cs.dir / "judge.jsonl",
               "{\"match\": \"\", \"response\": \"{\\\"relevance_score\\\": 5, \\\"correctness_score\\\": 5}\"}\n");
    write_file(cs.dir / "fairrag.ini",
               read_file(cs.config) + "[judge]\nmode = scripted\nscript = judge.jsonl\n");
    nlohmann::json rec = {{"id", "cs"}, {"question", cs.question()}, {"ground_truth", "x"}, {"category", "obvious"}};
    write_file(cs.dir / "data.jsonl", rec.dump() + "\n");
    const auto results = (cs.dir / "results.jsonl").string();
    auto r = cli({"--config", cs.config, "--jobs", "1", "eval", (cs.dir / "data.jsonl").string(), "--out", results});
    CAPTURE(r.err);
    CHECK(r.code == 0);
    auto loaded = load_results(results);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].trace.iterations.size() == 2);

    auto rep = nlohmann::json::parse(cli({"--config", cs.config, "--json", "report", results}).out);
    CHECK(rep["metrics"]["correctness_acc"] == 1.0);
    CHECK(rep["cost"].back()["label"] == "This run");
    CHECK(rep["latency"].back()["label"] == "This run");
  }
}
