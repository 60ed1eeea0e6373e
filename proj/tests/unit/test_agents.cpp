#include <doctest.h>

#include "fairrag/agents.hpp"
#include "fairrag/errors.hpp"
#include "support.hpp"

using namespace fairrag;
using namespace fairrag::testing;

namespace {

// The text strictly between the first `from` and the following `to` in a
// bundled prompt, i.e. a worked example exactly as the prompt shows it.
std::string prompt_slice(const std::string& file, const std::string& from, const std::string& to) {
  const std::string text = read_file(PromptLibrary::default_dir() / file);
  auto a = text.find(from);
  REQUIRE(a != std::string::npos);
  a += from.size();
  auto b = text.find(to, a);
  REQUIRE(b != std::string::npos);
  return text.substr(a, b - a);
}

std::vector<std::string> texts(const std::vector<SubQuery>& qs) {
  std::vector<std::string> out;
  for (const auto& q : qs) out.push_back(q.text);
  return out;
}

}  // namespace

TEST_SUITE("agents") {
  TEST_CASE("validator labels") {
    CHECK(parse_validation("Selected Label:\nVALID_LARGE") == QueryClass::valid_large);
    CHECK(parse_validation("Selected Label: \"VALID_SMALL\"") == QueryClass::valid_small);
    CHECK(parse_validation("**Selected Label:**\n\n**VALID_REASONER**") == QueryClass::valid_reasoner);
    CHECK(parse_validation("some thinking\nSelected Label:\nOUT_OF_SCOPE_ISLAMIC\n") ==
          QueryClass::out_of_scope_islamic);
    CHECK(parse_validation("UNETHICAL") == QueryClass::unethical);
    CHECK(parse_validation("Selected Label:\nvalid_obvious.") == QueryClass::valid_obvious);
    CHECK_THROWS_AS(parse_validation("Selected Label:\nMAYBE"), ParseError);
    CHECK_THROWS_AS(parse_validation("I cannot decide"), ParseError);
  }

  TEST_CASE("decomposer example parses to its four queries") {
    const auto example = prompt_slice("decomposer.txt", "Optimized Queries (Output):", "--- END OF EXAMPLE ---");
    auto qs = parse_query_list("Optimized Queries:\n" + example, SubQueryOrigin::decomposition, 1);
    CHECK(texts(qs) == std::vector<std::string>{
                           "تفسیر مفهوم عدالت در قرآن توسط متفکران اسلامی",
                           "عدالت در حکومت از منظر فقه و فلسفه سیاسی اسلامی",
                           "تحلیل تاریخی کاربرد عدالت قرآنی در مدیریت جامعه",
                           "اندیشه سیاسی اسلامی و مفهوم عدالت",
                       });
    for (const auto& q : qs) {
      CHECK(q.origin == SubQueryOrigin::decomposition);
      CHECK(q.iteration == 1);
    }
  }

  TEST_CASE("refiner example parses to its three queries") {
    const auto example = prompt_slice("refiner.txt", "Your Output for Example:", "--- END OF EXAMPLE ---");
    auto qs = parse_query_list(example, SubQueryOrigin::refinement, 2);
    CHECK(texts(qs) ==
          std::vector<std::string>{"Surah Yusuf total verses", "Surah Yusuf verse count", "Surah Yusuf chapter length"});
    CHECK(qs[0].origin == SubQueryOrigin::refinement);
    CHECK(qs[0].iteration == 2);
  }

  TEST_CASE("query list bounds") {
    auto many = parse_query_list(queries({"a", "b", "c", "d", "e"}), SubQueryOrigin::decomposition, 1);
    CHECK(many.size() == 4);
    CHECK_THROWS_AS(parse_query_list("Optimized Queries:\n", SubQueryOrigin::decomposition, 1), ParseError);
    auto starred = parse_query_list("* one\n• two\n3) three", SubQueryOrigin::decomposition, 1);
    CHECK(texts(starred) == std::vector<std::string>{"one", "two", "three"});
  }

  TEST_CASE("filter example and None") {
    const std::set<std::string> batch = {"doc_1", "doc_2", "doc_3"};
    auto v = parse_filter("Unhelpful Document IDs: [doc_2], [doc_3]", batch);
    CHECK(v.unhelpful_ids == std::set<std::string>{"doc_2", "doc_3"});
    CHECK(v.warnings.empty());
    CHECK(parse_filter("Unhelpful Document IDs: None", batch).unhelpful_ids.empty());
    CHECK(parse_filter("None", batch).unhelpful_ids.empty());

    auto stray = parse_filter("[doc_2], [doc_9]", batch);
    CHECK(stray.unhelpful_ids == std::set<std::string>{"doc_2"});
    CHECK(stray.warnings.size() == 1);
    CHECK(parse_filter("[doc_02]", batch).unhelpful_ids == std::set<std::string>{"doc_2"});
    CHECK_THROWS_AS(parse_filter("all of them look fine", batch), ParseError);
  }

  TEST_CASE("SEA examples") {
    const auto ex1 = prompt_slice("sea.txt", "Your Output for Example 1:", "Example 2");
    auto r1 = parse_sea(ex1);
    CHECK_FALSE(r1.sufficient);
    CHECK(r1.remaining_gaps.find("Surah Al-Kafh") != std::string::npos);
    CHECK_FALSE(gaps_are_none(r1.remaining_gaps));
    CHECK(r1.main_goal.find("total number of verses") != std::string::npos);
    CHECK(r1.required_findings.size() >= 2);

    const auto ex2 = prompt_slice("sea.txt", "Your Output for Example 2:", "--- END");
    auto r2 = parse_sea(ex2);
    CHECK(r2.sufficient);
    CHECK(gaps_are_none(r2.remaining_gaps));
    CHECK(r2.conclusion.find("Masjid Bilal") != std::string::npos);

    CHECK(parse_sea(sea(false, "C: something")).sufficient == false);
    CHECK(parse_sea(sea(true)).sufficient == true);
    CHECK_THROWS_AS(parse_sea("- **Remaining Gaps:** None.\n- **Sufficient:** Perhaps"), ParseError);
    CHECK_THROWS_AS(parse_sea("no structure at all"), ParseError);
  }

  TEST_CASE("answer citations and disclaimers") {
    std::vector<std::string> warnings;
    auto a = parse_answer("A [2] then [1] and [1, 3] and [۴] and [5].", 4, &warnings);
    CHECK(a.citations == std::vector<int>{1, 2, 3, 4, 5});
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("citation 5") != std::string::npos);
    CHECK(parse_answer("no citations [x] [] here", 2).citations.empty());

    auto fatwa = parse_answer(std::string(sentinels::kFatwa) + ". [1]", 1);
    CHECK(fatwa.disclaimers.count(Disclaimer::fatwa_warning) == 1);
    auto none = parse_answer(std::string("منابع ") + std::string(sentinels::kNoEvidence), 0);
    CHECK(none.disclaimers.count(Disclaimer::no_evidence) == 1);
    auto partial = parse_answer(std::string(sentinels::kPartialEvidence) + " [1]", 1);
    CHECK(partial.disclaimers.count(Disclaimer::partial_evidence) == 1);
  }

  TEST_CASE("prompt rendering") {
    auto tpl = PromptTemplate::from_text("t", "Q: {user_query} / {evidence} / literal {} and {not an id}");
    CHECK(tpl.required == std::set<std::string>{"evidence", "user_query"});
    CHECK(render(tpl, {{"user_query", "{evidence}"}, {"evidence", "E"}}) ==
          "Q: {evidence} / E / literal {} and {not an id}");
    try {
      render(tpl, {{"user_query", "x"}});
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("evidence") != std::string::npos);
    }
  }

  TEST_CASE("bundled prompt library is complete") {
    const auto& lib = prompts();
    for (const char* name : {"validator", "decomposer", "filter", "sea", "refiner", "generator", "direct_answer",
                             "failure_analysis"}) {
      CHECK_MESSAGE(lib.contains(name), name);
    }
    for (auto kind : {JudgeKind::decomposition_score, JudgeKind::filter_audit, JudgeKind::sufficiency,
                      JudgeKind::refinement_score, JudgeKind::context_relevance, JudgeKind::faithfulness,
                      JudgeKind::relevance_correctness, JudgeKind::negative_rejection, JudgeKind::noise_robustness,
                      JudgeKind::iterative_ranking, JudgeKind::failure_mode}) {
      CHECK_MESSAGE(lib.contains(judge_template_name(kind)), judge_template_name(kind));
      CHECK(parse_judge_kind(to_string(kind)) == kind);
    }
    CHECK(lib.get("filter").required ==
          std::set<std::string>{"batch_number", "numbered_candidates_text_for_prompt", "original_query"});
    CHECK_THROWS(lib.get("nope"));
  }

  TEST_CASE("judge schemas accept documented shapes") {
    auto score = std::get<ScoreVerdict>(
        parse_judge_json("```json\n{\"score\": 4.5, \"reasoning\": \"good\"}\n```", JudgeKind::decomposition_score));
    CHECK(score.score == 4.5);
    CHECK(std::get<ScoreVerdict>(parse_judge_json("{\"score\": \"3\"}", JudgeKind::refinement_score)).score == 3.0);

    auto audit = std::get<FilterAuditVerdict>(parse_judge_json(
        "{\"incorrectly_kept_ids\": [\"a#0\"], \"incorrectly_discarded_ids\": []}", JudgeKind::filter_audit));
    CHECK(audit.incorrectly_kept_ids == std::vector<std::string>{"a#0"});
    CHECK(audit.incorrectly_discarded_ids.empty());

    auto suff = std::get<SufficiencyVerdict>(
        parse_judge_json("{\"reasoning\": \"r\", \"is_sufficient\": true}", JudgeKind::sufficiency));
    CHECK(suff.is_sufficient);

    auto rel = std::get<ContextRelevanceVerdict>(parse_judge_json(
        "{\"relevance_scores\": [{\"doc_id\": \"a#0\", \"score\": 5.0}, {\"doc_id\": \"b#0\", \"score\": 2.0}]}",
        JudgeKind::context_relevance));
    CHECK(rel.mean() == doctest::Approx(3.5));

    auto faith = std::get<FaithfulnessVerdict>(parse_judge_json(
        "{\"faithfulness_verdict\": \"Partially Faithful\", \"reasoning\": \"x\"}", JudgeKind::faithfulness));
    CHECK(faith.verdict == Faithfulness::partially);

    auto rc = std::get<RelevanceCorrectnessVerdict>(parse_judge_json(
        "{\"relevance_score\": 5.0, \"correctness_score\": 4.0, \"reasoning\": \"ok\"}",
        JudgeKind::relevance_correctness));
    CHECK(rc.correctness_score == 4.0);

    CHECK(std::get<NegativeRejectionVerdict>(
              parse_judge_json("{\"correctly_rejected\": false}", JudgeKind::negative_rejection))
              .correctly_rejected == false);

    auto noise = std::get<NoiseRobustnessVerdict>(parse_judge_json(
        "{\"is_robust\": true, \"is_correct\": false, \"reasoning\": \"\"}", JudgeKind::noise_robustness));
    CHECK(noise.is_robust);
    CHECK_FALSE(noise.is_correct);

    auto rank = std::get<RankingVerdict>(parse_judge_json(
        "{\"ranking\": \"iter_3,iter_4,iter_2,iter_1\", \"reasoning\": \"more helps\"}", JudgeKind::iterative_ranking));
    CHECK(rank.order == std::vector<int>{3, 4, 2, 1});

    auto fm = std::get<FailureModeVerdict>(parse_judge_json(
        "{\"failure_category\": \"Retrieval Failure\", \"reasoning\": \"a\", \"root_cause_analysis\": \"b\", "
        "\"suggested_improvement\": \"c\"}",
        JudgeKind::failure_mode));
    CHECK(fm.category == FailureCategory::retrieval);
    for (auto c : kAllFailureCategories) CHECK(parse_failure_category(to_string(c)) == c);
  }

  TEST_CASE("judge schemas reject violations") {
    auto rejects = [](const char* raw, JudgeKind kind) {
      try {
        parse_judge_json(raw, kind);
        return false;
      } catch (const ParseError& e) {
        return e.raw() == raw;
      }
    };
    CHECK(rejects("not json", JudgeKind::decomposition_score));
    CHECK(rejects("{\"reasoning\": \"x\"}", JudgeKind::decomposition_score));
    CHECK(rejects("{\"score\": 7}", JudgeKind::decomposition_score));
    CHECK(rejects("{\"score\": 0.5}", JudgeKind::refinement_score));
    CHECK(rejects("{\"is_sufficient\": \"maybe\"}", JudgeKind::sufficiency));
    CHECK(rejects("{\"faithfulness_verdict\": \"Mostly\"}", JudgeKind::faithfulness));
    CHECK(rejects("{\"ranking\": \"iter_1,iter_5\"}", JudgeKind::iterative_ranking));
    CHECK(rejects("{\"ranking\": \"iter_1,iter_1\"}", JudgeKind::iterative_ranking));
    CHECK(rejects("{\"failure_category\": \"Cosmic Rays\"}", JudgeKind::failure_mode));
    CHECK(rejects("{\"relevance_scores\": {}}", JudgeKind::context_relevance));
    CHECK(rejects("[1, 2]", JudgeKind::negative_rejection));
  }
}
