#include <doctest.h>

#include <cmath>
#include <random>

#include "cityvl/errors.hpp"
#include "cityvl/judge.hpp"

using namespace cityvl;

namespace {

std::vector<AttributeText> demo_evidence() {
  return {{AttributeKind::object,
           "News Center (Building, located at [21.2, 417.3, 36.9]m)",
           {0}},
          {AttributeKind::relation,
           "the parking lot sits northeast of the News Center",
           {0, 1}}};
}

}  // namespace

TEST_CASE("judge prompt carries the parts, the scale directive and no source") {
  const CompletionRequest req = build_judge_prompt(
      "the lot is northeast of the center", "the parking lot lies northeast",
      demo_evidence(), "judge-a");
  REQUIRE(req.user_parts.size() == 1);
  const std::string& body = req.user_parts[0].text;
  CHECK(body.find(kJudgeScaleDirective) != std::string::npos);
  CHECK(body.find("the lot is northeast of the center") != std::string::npos);
  CHECK(body.find("the parking lot lies northeast") != std::string::npos);
  for (const auto& attr : demo_evidence())
    CHECK(body.find(attr.text) != std::string::npos);
  CHECK(body.find("Justification") != std::string::npos);
  // Blindness: no added attribution fields.
  CHECK(body.find("source model") == std::string::npos);
  CHECK(req.system_text.find("model that produced") == std::string::npos);

  // An answer that itself names a model gains no extra attribution.
  const CompletionRequest req2 = build_judge_prompt(
      "produced by supermodel-9", "truth", demo_evidence(), "judge-a");
  const std::string& body2 = req2.user_parts[0].text;
  CHECK(body2.find("supermodel-9") != std::string::npos);  // answer content
  CHECK(body2.find("Source:") == std::string::npos);
}

TEST_CASE("judge output parsing") {
  SUBCASE("well-formed") {
    const JudgeScore s = parse_judge_output(
        "Logicality: 8\nReliability: 7\nJustification: grounded in evidence.");
    CHECK(s.logicality == 8.0);
    CHECK(s.reliability == 7.0);
    CHECK(s.justification == "grounded in evidence.");
  }
  SUBCASE("decimals and surrounding prose") {
    const JudgeScore s = parse_judge_output(
        "Overall view.\nLogicality: 7.5 out of 10\nReliability: 6.25\n"
        "Justification: the distances line up.\n");
    CHECK(s.logicality == 7.5);
    CHECK(s.reliability == 6.25);
  }
  SUBCASE("first occurrence wins") {
    const JudgeScore s = parse_judge_output(
        "Logicality: 4\nLogicality: 9\nReliability: 5\nJustification: x");
    CHECK(s.logicality == 4.0);
  }
  SUBCASE("out of range") {
    CHECK_THROWS_AS(parse_judge_output("Logicality: 11\nReliability: 5\n"
                                       "Justification: x"),
                    OutOfRange);
    CHECK_THROWS_AS(parse_judge_output("Logicality: 5\nReliability: -1\n"
                                       "Justification: x"),
                    OutOfRange);
  }
  SUBCASE("missing fields") {
    CHECK_THROWS_AS(parse_judge_output("Reliability: 5\nJustification: x"),
                    MissingField);
    CHECK_THROWS_AS(parse_judge_output("Logicality: 5\nJustification: x"),
                    MissingField);
    CHECK_THROWS_AS(parse_judge_output("Logicality: 5\nReliability: 5\n"),
                    MissingJustification);
    CHECK_THROWS_AS(parse_judge_output("Logicality: 5\nReliability: 5\n"
                                       "Justification:   "),
                    MissingJustification);
  }
}

TEST_CASE("formatting and parsing round-trip") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> score(0.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    JudgeScore s;
    s.logicality = std::round(score(rng) * 10.0) / 10.0;
    s.reliability = std::round(score(rng) * 10.0) / 10.0;
    s.justification = "case " + std::to_string(i);
    const JudgeScore back = parse_judge_output(format_judge_output(s));
    CHECK(back.logicality == s.logicality);
    CHECK(back.reliability == s.reliability);
    CHECK(back.justification == s.justification);
  }
}

TEST_CASE("aggregate_scores reproduces the evaluator-mean fixtures") {
  auto triple = [](double a, double b, double c) {
    return std::vector<JudgeScore>{
        {"e1", a, a, "x"}, {"e2", b, b, "x"}, {"e3", c, c, "x"}};
  };
  // Means at two-decimal display rounding.
  CHECK(round_display(aggregate_scores(triple(8.14, 8.28, 7.85)).first) == 8.09);
  CHECK(round_display(aggregate_scores(triple(7.06, 6.98, 6.81)).second) == 6.95);
  CHECK(round_display(aggregate_scores(triple(7.61, 7.39, 7.95)).first) == 7.65);

  // Identical inputs aggregate to themselves.
  const auto [ml, mr] = aggregate_scores(triple(6.4, 6.4, 6.4));
  CHECK(ml == doctest::Approx(6.4).epsilon(1e-12));
  CHECK(mr == doctest::Approx(6.4).epsilon(1e-12));
}

TEST_CASE("aggregate_scores is permutation invariant and bounded") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> score(0.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<JudgeScore> scores;
    double lo = 10.0, hi = 0.0;
    const std::size_t n = 1 + rng() % 6;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = score(rng);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      scores.push_back({"e" + std::to_string(i), v, 10.0 - v, "x"});
    }
    const auto [ml, mr] = aggregate_scores(scores);
    CHECK(ml >= lo - 1e-12);
    CHECK(ml <= hi + 1e-12);
    std::shuffle(scores.begin(), scores.end(), rng);
    const auto [ml2, mr2] = aggregate_scores(scores);
    CHECK(ml == doctest::Approx(ml2).epsilon(1e-12));
    CHECK(mr == doctest::Approx(mr2).epsilon(1e-12));
  }
}

TEST_CASE("evaluator correlation: trivial vectors and the formula oracle") {
  SUBCASE("identical vectors correlate at 1") {
    const std::vector<double> v = {1, 2, 3, 4, 5};
    const Matrix corr = evaluator_correlation({v, v});
    CHECK(corr.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("negated vectors correlate at -1") {
    const std::vector<double> v = {1, 2, 3, 4, 5};
    std::vector<double> neg;
    for (double x : v) neg.push_back(-x);
    const Matrix corr = evaluator_correlation({v, neg});
    CHECK(corr.at(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
  }
  SUBCASE("random 3x10 matches the covariance-formula oracle") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> score(0.0, 10.0);
    std::vector<std::vector<double>> s(3, std::vector<double>(10));
    for (auto& row : s)
      for (double& v : row) v = score(rng);
    const Matrix corr = evaluator_correlation(s);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(corr.at(i, i) == 1.0);
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(corr.at(i, j) == corr.at(j, i));
        CHECK(corr.at(i, j) >= -1.0 - 1e-12);
        CHECK(corr.at(i, j) <= 1.0 + 1e-12);
        if (i == j) continue;
        // Direct oracle: E[xy] form of the Pearson coefficient.
        double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
        const double n = 10.0;
        for (int t = 0; t < 10; ++t) {
          sx += s[i][t];
          sy += s[j][t];
          sxy += s[i][t] * s[j][t];
          sxx += s[i][t] * s[i][t];
          syy += s[j][t] * s[j][t];
        }
        const double num = sxy - sx * sy / n;
        const double den =
            std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n));
        CHECK(std::abs(corr.at(i, j) - num / den) <= 1e-9);
      }
    }
  }
  SUBCASE("degenerate vector is rejected") {
    CHECK_THROWS_AS(
        evaluator_correlation({{1, 1, 1}, {1, 2, 3}}), DegenerateVector);
  }
}
