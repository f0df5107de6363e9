#include <doctest.h>

#include <memory>

#include "cityvl/errors.hpp"
#include "cityvl/gateway.hpp"
#include "cityvl/qa.hpp"

using namespace cityvl;

namespace {

class ScriptedReply : public Transport {
 public:
  explicit ScriptedReply(std::string reply) : reply_(std::move(reply)) {}
  CompletionResponse send(const CompletionRequest&) override {
    ++calls;
    return {reply_, FinishReason::stop, 1, 1};
  }
  int calls = 0;

 private:
  std::string reply_;
};

class FailingTransport : public Transport {
 public:
  CompletionResponse send(const CompletionRequest&) override {
    throw TransportError("down", false);
  }
};

Gateway make_gateway(std::shared_ptr<Transport> t,
                     const std::string& model = "mock") {
  GatewayConfig gc;
  gc.model_id = model;
  gc.backoff_base_ms = 0;
  return Gateway(gc, std::move(t));
}

std::vector<AttributeText> demo_attrs() {
  return {{AttributeKind::object,
           "News Center (Building, located at [21.2, 417.3, 36.9]m)",
           {0}}};
}

QASample demo_sample(std::string question, std::string answer) {
  QASample s;
  s.sample_id = "riverside/ObjectCaption/tourist/t0/p0";
  s.task = TaskCategory::ObjectCaption;
  s.question = std::move(question);
  s.answer = std::move(answer);
  s.scene_id = "riverside";
  s.target_ids = {0};
  s.persona_name = "tourist";
  s.generator_model_id = "mock";
  return s;
}

}  // namespace

TEST_CASE("the shipped persona set covers the three roles with few-shots") {
  const auto& personas = default_personas();
  REQUIRE(personas.size() == 3);
  for (const auto& p : personas) {
    CHECK_FALSE(p.style_directive.empty());
    CHECK_FALSE(p.few_shot.empty());
  }
  CHECK(persona_by_name("tourist").name == "tourist");
  CHECK_THROWS_AS(persona_by_name("astronaut"), Error);
}

TEST_CASE("generation prompt carries every block in the fixed order") {
  const Persona& tourist = persona_by_name("tourist");
  std::vector<ContentPart> images;
  images.push_back(ContentPart::make_image({9, 9, 9}, "crop.png"));
  const CompletionRequest req = build_generation_prompt(
      TaskCategory::ObjectCaption, tourist, demo_attrs(), images, 3, "gen",
      0.7);

  CHECK(req.system_text.find(tourist.style_directive) != std::string::npos);
  CHECK(req.system_text.find("ObjectCaption") != std::string::npos);
  REQUIRE(req.user_parts.size() == 2);
  const std::string& body = req.user_parts[0].text;

  const auto few_shot_pos = body.find(tourist.few_shot[0].first);
  const auto attr_pos = body.find(demo_attrs()[0].text);
  const auto rules_pos = body.find("Instructions:");
  const auto count_pos = body.find("Produce exactly 3");
  REQUIRE(few_shot_pos != std::string::npos);
  REQUIRE(attr_pos != std::string::npos);
  REQUIRE(rules_pos != std::string::npos);
  REQUIRE(count_pos != std::string::npos);
  CHECK(few_shot_pos < attr_pos);
  CHECK(attr_pos < rules_pos);
  CHECK(rules_pos < count_pos);

  // The four instruction blocks.
  CHECK(body.find("Diversity:") != std::string::npos);
  CHECK(body.find("Truthfulness:") != std::string::npos);
  CHECK(body.find("Format:") != std::string::npos);
  CHECK(body.find("Contextual simulation:") != std::string::npos);

  // Image part attached; identical inputs give identical prompts.
  CHECK(req.user_parts[1].kind == ContentPart::Kind::image);
  const CompletionRequest again = build_generation_prompt(
      TaskCategory::ObjectCaption, tourist, demo_attrs(), images, 3, "gen",
      0.7);
  CHECK(req.request_key() == again.request_key());
}

TEST_CASE("tagged output parsing") {
  SUBCASE("single pair") {
    const auto pairs =
        parse_tagged_qa("<Question>Where?</Question><Answer>North.</Answer>");
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].first == "Where?");
    CHECK(pairs[0].second == "North.");
  }
  SUBCASE("two pairs with prose between them stay in order") {
    const auto pairs = parse_tagged_qa(
        "intro\n<Question>A?</Question>\n<Answer>1</Answer>\nchatter\n"
        "<Question>B?</Question> <Answer>2</Answer>\ntrailer");
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0] == std::pair<std::string, std::string>{"A?", "1"});
    CHECK(pairs[1] == std::pair<std::string, std::string>{"B?", "2"});
  }
  SUBCASE("inner whitespace is trimmed") {
    const auto pairs = parse_tagged_qa(
        "<Question>\n  Where is it?\n</Question><Answer>\tHere. </Answer>");
    CHECK(pairs[0].first == "Where is it?");
    CHECK(pairs[0].second == "Here.");
  }
  SUBCASE("question without an answer") {
    CHECK_THROWS_AS(parse_tagged_qa("<Question>Q</Question>"),
                    MalformedOutput);
  }
  SUBCASE("unclosed question carries its position") {
    try {
      parse_tagged_qa("xx<Question>Q");
      FAIL("expected MalformedOutput");
    } catch (const MalformedOutput& e) {
      CHECK(e.position() == 2);
    }
  }
  SUBCASE("answer before its question") {
    CHECK_THROWS_AS(
        parse_tagged_qa("<Answer>A</Answer><Question>Q</Question>"),
        MalformedOutput);
  }
  SUBCASE("nested tags are rejected") {
    CHECK_THROWS_AS(
        parse_tagged_qa("<Question>a <Answer>b</Answer></Question>"),
        MalformedOutput);
  }
  SUBCASE("no pairs at all") {
    CHECK_THROWS_AS(parse_tagged_qa("nothing here"), MalformedOutput);
    CHECK_THROWS_AS(parse_tagged_qa(""), MalformedOutput);
  }
  SUBCASE("parsed pairs never contain delimiter tags") {
    const auto pairs = parse_tagged_qa(
        "<Question>clean?</Question><Answer>clean.</Answer>");
    for (const auto& [q, a] : pairs) {
      for (const char* tag :
           {"<Question>", "</Question>", "<Answer>", "</Answer>"}) {
        CHECK(q.find(tag) == std::string::npos);
        CHECK(a.find(tag) == std::string::npos);
      }
    }
  }
}

TEST_CASE("diversify dedups and respects n") {
  SUBCASE("n = 0 makes no gateway call") {
    auto transport = std::make_shared<ScriptedReply>("unused");
    Gateway gw = make_gateway(transport);
    CHECK(diversify("Where is the nearest hospital?", 0, gw).empty());
    CHECK(transport->calls == 0);
  }
  SUBCASE("variants come back in order, minus duplicates and the original") {
    auto transport = std::make_shared<ScriptedReply>(
        "Which location in the city corresponds to the closest hospital?\n"
        "Which location in the city corresponds to the closest hospital?\n"
        "Where is the nearest hospital?\n"
        "Can you identify the hospital closest to this current place?\n");
    Gateway gw = make_gateway(transport);
    const auto variants = diversify("Where is the nearest hospital?", 3, gw);
    REQUIRE(variants.size() == 2);
    CHECK(variants[0] ==
          "Which location in the city corresponds to the closest hospital?");
    CHECK(variants[1] ==
          "Can you identify the hospital closest to this current place?");
  }
  SUBCASE("three identical paraphrases collapse to one") {
    auto transport = std::make_shared<ScriptedReply>(
        "Same phrasing?\nSame phrasing?\nSame phrasing?\n");
    Gateway gw = make_gateway(transport);
    CHECK(diversify("Other question?", 3, gw).size() == 1);
  }
}

TEST_CASE("local lexical pre-check flags tag residue without any gateway") {
  auto clean = std::make_shared<ScriptedReply>("No defects.");
  Gateway g1 = make_gateway(clean, "e1");
  Gateway g2 = make_gateway(clean, "e2");
  Gateway g3 = make_gateway(clean, "e3");
  const std::vector<Gateway*> gws = {&g1, &g2, &g3};

  const QASample bad =
      demo_sample("Where?", "here is <Answer> residue");
  const auto defects = quality_check(bad, demo_attrs(), gws);
  REQUIRE_FALSE(defects.empty());
  CHECK(defects[0].evaluator_model_id == "lexical-precheck");
  CHECK(defects[0].defect_class == DefectClass::TemplateArtifact);

  for (const char* residue : {"<Question", "</Question", "<Answer",
                              "</Answer", "{{", "}}"}) {
    const auto found = quality_check(
        demo_sample("Where?", std::string("x ") + residue + " y"),
        demo_attrs(), gws);
    bool flagged = false;
    for (const auto& d : found)
      if (d.evaluator_model_id == "lexical-precheck") flagged = true;
    CHECK_MESSAGE(flagged, "residue not flagged: " << residue);
  }

  const auto none =
      quality_check(demo_sample("Where?", "A clean answer."), demo_attrs(), gws);
  CHECK(none.empty());
}

TEST_CASE("evaluator defect lines are parsed; failures abstain") {
  auto flagger = std::make_shared<ScriptedReply>(
      "Defect: SceneInconsistency | the answer calls the building a "
      "hospital.");
  auto clean = std::make_shared<ScriptedReply>("No defects.");
  Gateway g1 = make_gateway(flagger, "e1");
  Gateway g2 = make_gateway(clean, "e2");
  Gateway g3 = make_gateway(std::make_shared<FailingTransport>(), "e3");

  const auto defects = quality_check(
      demo_sample("What is this?", "This Hospital is tall."), demo_attrs(),
      {&g1, &g2, &g3});
  REQUIRE(defects.size() == 1);
  CHECK(defects[0].defect_class == DefectClass::SceneInconsistency);
  CHECK(defects[0].evaluator_model_id == "e1");
  CHECK(defects[0].rationale.find("hospital") != std::string::npos);

  CHECK_THROWS_AS(
      quality_check(demo_sample("q", "a"), demo_attrs(), {&g1, &g2}), Error);
}

TEST_CASE("verdict aggregation: majority and privacy veto") {
  auto defect = [](const char* evaluator, DefectClass cls) {
    return DefectReport{evaluator, cls, "r"};
  };

  CHECK(aggregate_verdicts({}, 3) == QcStatus::kept);
  // 1 of 3 evaluators flagging a non-privacy defect is below the majority.
  CHECK(aggregate_verdicts({defect("e1", DefectClass::AmbiguousQuestion)}, 3) ==
        QcStatus::kept);
  // 2 of 3 flag: rejected.
  CHECK(aggregate_verdicts({defect("e1", DefectClass::AmbiguousQuestion),
                            defect("e2", DefectClass::UninformativeAnswer)},
                           3) == QcStatus::rejected);
  // The same evaluator flagging twice still counts once.
  CHECK(aggregate_verdicts({defect("e1", DefectClass::AmbiguousQuestion),
                            defect("e1", DefectClass::UninformativeAnswer)},
                           3) == QcStatus::kept);
  // Privacy is veto-class even from a single evaluator.
  CHECK(aggregate_verdicts({defect("e2", DefectClass::PrivacyRisk)}, 3) ==
        QcStatus::rejected);
  // ceil(n/2): one flag of two evaluators already rejects; two of four too.
  CHECK(aggregate_verdicts({defect("e1", DefectClass::SceneInconsistency)},
                           2) == QcStatus::rejected);
  CHECK(aggregate_verdicts({defect("e1", DefectClass::SceneInconsistency),
                            defect("e2", DefectClass::SceneInconsistency)},
                           4) == QcStatus::rejected);
  CHECK(aggregate_verdicts({defect("e1", DefectClass::SceneInconsistency)},
                           5) == QcStatus::kept);
}

TEST_CASE("samples serialize to json lines and back") {
  QASample s = demo_sample("Where?", "North.");
  s.qc_status = QcStatus::kept;
  s.defects.push_back({"e1", DefectClass::AmbiguousQuestion, "why"});
  const QASample back = qa_sample_from_json(qa_sample_to_json(s));
  CHECK(back.sample_id == s.sample_id);
  CHECK(back.task == s.task);
  CHECK(back.question == s.question);
  CHECK(back.answer == s.answer);
  CHECK(back.target_ids == s.target_ids);
  CHECK(back.qc_status == QcStatus::kept);
  REQUIRE(back.defects.size() == 1);
  CHECK(back.defects[0].defect_class == DefectClass::AmbiguousQuestion);
}
