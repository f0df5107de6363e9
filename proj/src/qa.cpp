#include "cityvl/qa.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <sstream>

#include <json.hpp>

#include "cityvl/errors.hpp"

namespace cityvl {

using nlohmann::json;

namespace {

const std::array<std::string, 3> kQcNames = {"pending", "kept", "rejected"};
const std::array<std::string, kDefectClassCount> kDefectNames = {
    "TemplateArtifact", "PrivacyRisk", "AmbiguousQuestion",
    "UninformativeAnswer", "SceneInconsistency"};

constexpr const char* kQuestionOpen = "<Question>";
constexpr const char* kQuestionClose = "</Question>";
constexpr const char* kAnswerOpen = "<Answer>";
constexpr const char* kAnswerClose = "</Answer>";

const std::array<std::string, 4> kAllTags = {kQuestionOpen, kQuestionClose,
                                             kAnswerOpen, kAnswerClose};

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<Persona> make_default_personas() {
  std::vector<Persona> out;

  Persona tourist;
  tourist.name = "tourist";
  tourist.style_directive =
      "You speak as a curious tourist exploring the city for the first time: "
      "casual wording, short questions about sights, landmarks and how to "
      "reach them.";
  tourist.few_shot = {
      {"What famous attractions can I visit near this area?",
       "Right around here you will find the News Center building, and a large "
       "parking lot sits just to its northeast if you are arriving by car."},
      {"Is the big building next to the parking lot worth a look?",
       "Yes, the News Center is the main landmark of this block; it stands "
       "about 45 meters from the parking lot, an easy walk."}};
  out.push_back(tourist);

  Persona official;
  official.name = "government official";
  official.style_directive =
      "You speak as a municipal official reviewing the district: formal "
      "register, analytical questions about layout, land use, zoning and "
      "compliance.";
  official.few_shot = {
      {"How does this district's building layout support current land-use "
       "requirements?",
       "The block separates commercial structures from the open parking area, "
       "keeping service access on the southwest side and leaving the required "
       "clearance between the two footprints."}};
  out.push_back(official);

  Persona staff;
  staff.name = "company staff";
  staff.style_directive =
      "You speak as an employee who works in this area: practical questions "
      "about commuting, parking, distances and day-to-day logistics.";
  staff.few_shot = {
      {"How far is the parking lot from my office building?",
       "The parking lot is roughly 45 meters northeast of the office "
       "building, about a one-minute walk."}};
  out.push_back(staff);

  return out;
}

}  // namespace

const std::vector<Persona>& default_personas() {
  static const std::vector<Persona> personas = make_default_personas();
  return personas;
}

const Persona& persona_by_name(const std::string& name) {
  for (const auto& p : default_personas())
    if (p.name == name) return p;
  throw Error("unknown persona '" + name + "'");
}

const std::string& qc_status_name(QcStatus s) {
  return kQcNames[static_cast<std::size_t>(s)];
}

QcStatus qc_status_from_name(const std::string& name) {
  for (std::size_t i = 0; i < kQcNames.size(); ++i)
    if (kQcNames[i] == name) return static_cast<QcStatus>(i);
  throw Error("unknown qc status '" + name + "'");
}

const std::string& defect_class_name(DefectClass d) {
  return kDefectNames[static_cast<std::size_t>(d)];
}

std::string qa_sample_to_json(const QASample& sample) {
  json j;
  j["sample_id"] = sample.sample_id;
  j["task"] = task_name(sample.task);
  j["question"] = sample.question;
  j["answer"] = sample.answer;
  j["scene_id"] = sample.scene_id;
  j["target_ids"] = sample.target_ids;
  j["persona"] = sample.persona_name;
  j["generator_model_id"] = sample.generator_model_id;
  j["qc_status"] = qc_status_name(sample.qc_status);
  auto& defects = j["defects"] = json::array();
  for (const auto& d : sample.defects)
    defects.push_back({{"evaluator", d.evaluator_model_id},
                       {"class", defect_class_name(d.defect_class)},
                       {"rationale", d.rationale}});
  return j.dump();
}

QASample qa_sample_from_json(const std::string& json_line) {
  const json j = json::parse(json_line);
  QASample s;
  s.sample_id = j.at("sample_id").get<std::string>();
  s.task = task_from_name(j.at("task").get<std::string>());
  s.question = j.at("question").get<std::string>();
  s.answer = j.at("answer").get<std::string>();
  s.scene_id = j.at("scene_id").get<std::string>();
  s.target_ids = j.at("target_ids").get<std::vector<ObjectId>>();
  s.persona_name = j.at("persona").get<std::string>();
  s.generator_model_id = j.at("generator_model_id").get<std::string>();
  s.qc_status = qc_status_from_name(j.at("qc_status").get<std::string>());
  for (const auto& d : j.at("defects")) {
    DefectReport rep;
    rep.evaluator_model_id = d.at("evaluator").get<std::string>();
    const std::string cls = d.at("class").get<std::string>();
    bool found = false;
    for (std::size_t i = 0; i < kDefectNames.size(); ++i)
      if (kDefectNames[i] == cls) {
        rep.defect_class = static_cast<DefectClass>(i);
        found = true;
      }
    if (!found) throw Error("unknown defect class '" + cls + "'");
    rep.rationale = d.at("rationale").get<std::string>();
    s.defects.push_back(rep);
  }
  return s;
}

CompletionRequest build_generation_prompt(
    TaskCategory task, const Persona& persona,
    const std::vector<AttributeText>& attributes,
    const std::vector<ContentPart>& images, std::size_t n_pairs,
    const std::string& model_id, double temperature) {
  if (n_pairs < 1) throw Error("n_pairs must be at least 1");
  if (attributes.empty()) throw Error("generation prompt needs attributes");
  if (persona.few_shot.empty())
    throw Error("persona '" + persona.name + "' has no few-shot examples");

  CompletionRequest req;
  req.model_id = model_id;
  req.temperature = temperature;
  req.system_text =
      "You write question/answer pairs about a 3D city scene for the task "
      "category '" +
      task_name(task) + "'. " + persona.style_directive;

  std::string body;
  body += "Example exchanges in this persona:\n";
  for (const auto& [q, a] : persona.few_shot)
    body += "Q: " + q + "\nA: " + a + "\n";
  body += "\nCity scene attributes:\n";
  for (const auto& attr : attributes) body += attr.text + "\n";

  body += "\nInstructions:\n";
  body +=
      "1. Diversity: vary wording and sentence structure across the "
      "questions; never repeat a phrasing.\n";
  body +=
      "2. Truthfulness: ground every statement in the scene attributes "
      "above; do not invent objects, names, coordinates or distances.\n";
  body += std::string("3. Format: wrap each question between ") +
          kQuestionOpen + " and " + kQuestionClose +
          " and each answer between " + kAnswerOpen + " and " + kAnswerClose +
          ".\n";
  body +=
      "4. Contextual simulation: stay in the persona '" + persona.name +
      "' described above for every pair.\n";
  body += "\nProduce exactly " + std::to_string(n_pairs) +
          " question/answer pairs.";

  req.user_parts.push_back(ContentPart::make_text(body));
  for (const auto& img : images) req.user_parts.push_back(img);
  return req;
}

std::vector<std::pair<std::string, std::string>> parse_tagged_qa(
    const std::string& raw) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::size_t pos = 0;

  auto check_inner = [&](const std::string& inner, std::size_t offset) {
    for (const auto& tag : kAllTags) {
      const auto hit = inner.find(tag);
      if (hit != std::string::npos)
        throw MalformedOutput("delimiter tag inside a pair body",
                              offset + hit);
    }
  };

  while (true) {
    const auto qopen = raw.find(kQuestionOpen, pos);
    const auto aopen = raw.find(kAnswerOpen, pos);
    if (aopen != std::string::npos &&
        (qopen == std::string::npos || aopen < qopen))
      throw MalformedOutput("answer precedes its question", aopen);
    if (qopen == std::string::npos) break;

    const auto qclose = raw.find(kQuestionClose, qopen);
    if (qclose == std::string::npos)
      throw MalformedOutput("question tag never closes", qopen);
    const std::size_t qstart = qopen + std::strlen(kQuestionOpen);
    const std::string question_raw = raw.substr(qstart, qclose - qstart);
    check_inner(question_raw, qstart);

    std::size_t after = qclose + std::strlen(kQuestionClose);
    while (after < raw.size() &&
           std::isspace(static_cast<unsigned char>(raw[after])))
      ++after;
    if (raw.compare(after, std::strlen(kAnswerOpen), kAnswerOpen) != 0)
      throw MalformedOutput("question is not immediately followed by an answer",
                            after);

    const std::size_t astart = after + std::strlen(kAnswerOpen);
    const auto aclose = raw.find(kAnswerClose, astart);
    if (aclose == std::string::npos)
      throw MalformedOutput("answer tag never closes", after);
    const std::string answer_raw = raw.substr(astart, aclose - astart);
    check_inner(answer_raw, astart);

    const std::string question = trim(question_raw);
    const std::string answer = trim(answer_raw);
    if (question.empty()) throw MalformedOutput("empty question", qstart);
    if (answer.empty()) throw MalformedOutput("empty answer", astart);
    pairs.emplace_back(question, answer);
    pos = aclose + std::strlen(kAnswerClose);
  }

  if (pairs.empty())
    throw MalformedOutput("no question/answer pairs found", 0);
  return pairs;
}

std::vector<std::string> diversify(const std::string& question, std::size_t n,
                                   Gateway& gateway) {
  if (n == 0) return {};

  CompletionRequest req;
  req.model_id = gateway.config().model_id;
  req.temperature = 0.7;
  req.system_text =
      "You rewrite questions into alternative phrasings that keep the exact "
      "same intent and answer.";
  req.user_parts.push_back(ContentPart::make_text(
      "Rewrite the following question in " + std::to_string(n) +
      " different ways, one per line, without numbering:\n" + question));

  const CompletionResponse resp = gateway.complete(req);

  std::vector<std::string> out;
  std::istringstream lines(resp.text);
  std::string line;
  while (std::getline(lines, line)) {
    std::string v = trim(line);
    // Tolerate bullet or numbered lists despite the directive.
    while (!v.empty() && (std::isdigit(static_cast<unsigned char>(v[0])) ||
                          v[0] == '.' || v[0] == ')' || v[0] == '-' ||
                          v[0] == '*')) {
      v.erase(0, 1);
      if (!v.empty() && v[0] == ' ') {
        v = trim(v);
        break;
      }
    }
    v = trim(v);
    if (v.empty() || v == question) continue;
    if (std::find(out.begin(), out.end(), v) != out.end()) continue;
    out.push_back(v);
    if (out.size() == n) break;
  }
  return out;
}

const std::vector<std::string>& lexical_residue_patterns() {
  // Prefix forms catch both intact tags and truncated residue.
  static const std::vector<std::string> patterns = {
      "<Question", "</Question", "<Answer", "</Answer", "{{", "}}"};
  return patterns;
}

namespace {

std::vector<DefectReport> parse_evaluator_output(const std::string& raw,
                                                 const std::string& model_id) {
  std::vector<DefectReport> out;
  std::istringstream lines(raw);
  std::string line;
  while (std::getline(lines, line)) {
    const std::string t = trim(line);
    if (t.rfind("Defect:", 0) != 0) continue;
    const std::string rest = trim(t.substr(7));
    const auto bar = rest.find('|');
    const std::string cls = trim(bar == std::string::npos ? rest
                                                          : rest.substr(0, bar));
    const std::string why =
        bar == std::string::npos ? "" : trim(rest.substr(bar + 1));
    for (std::size_t i = 0; i < kDefectClassCount; ++i) {
      if (defect_class_name(static_cast<DefectClass>(i)) == cls) {
        out.push_back({model_id, static_cast<DefectClass>(i), why});
        break;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<DefectReport> quality_check(
    const QASample& sample, const std::vector<AttributeText>& attributes,
    std::vector<Gateway*> gateways) {
  if (gateways.size() != 3)
    throw Error("quality_check expects exactly 3 evaluator gateways");

  std::vector<DefectReport> defects;

  // Local lexical pre-check, no gateway call.
  for (const auto& pattern : lexical_residue_patterns()) {
    const bool in_q = sample.question.find(pattern) != std::string::npos;
    const bool in_a = sample.answer.find(pattern) != std::string::npos;
    if (in_q || in_a)
      defects.push_back({"lexical-precheck", DefectClass::TemplateArtifact,
                         "raw residue '" + pattern + "' in " +
                             (in_q ? "question" : "answer")});
  }

  std::string body;
  body += "Question:\n" + sample.question + "\n\n";
  body += "Answer:\n" + sample.answer + "\n\n";
  body += "Scene attributes:\n";
  for (const auto& attr : attributes) body += attr.text + "\n";
  body +=
      "\nCheck the pair against this defect list:\n"
      "- TemplateArtifact: leftover generation markup or placeholder text.\n"
      "- PrivacyRisk: content that could identify or expose a person.\n"
      "- AmbiguousQuestion: the question is ill-posed or has no single "
      "referent.\n"
      "- UninformativeAnswer: the answer is empty of content, illogical or "
      "too short to be useful.\n"
      "- SceneInconsistency: the answer contradicts the scene attributes "
      "above.\n"
      "Report each finding on its own line as 'Defect: <Class> | <reason>'. "
      "If the pair is clean, reply exactly 'No defects.'";

  for (Gateway* gw : gateways) {
    CompletionRequest req;
    req.model_id = gw->config().model_id;
    req.temperature = 0.0;
    req.system_text =
        "You are a strict reviewer of question/answer pairs generated for 3D "
        "city scenes.";
    req.user_parts.push_back(ContentPart::make_text(body));
    try {
      const CompletionResponse resp = gw->complete(req);
      const auto found =
          parse_evaluator_output(resp.text, gw->config().model_id);
      defects.insert(defects.end(), found.begin(), found.end());
    } catch (const Error&) {
      // Evaluator abstains; no defect recorded.
    }
  }
  return defects;
}

QcStatus aggregate_verdicts(const std::vector<DefectReport>& defects,
                            std::size_t n_evaluators) {
  if (n_evaluators < 1) throw Error("need at least one evaluator");
  std::vector<std::string> flagged;
  for (const auto& d : defects) {
    if (d.defect_class == DefectClass::PrivacyRisk) return QcStatus::rejected;
    if (std::find(flagged.begin(), flagged.end(), d.evaluator_model_id) ==
        flagged.end())
      flagged.push_back(d.evaluator_model_id);
  }
  const std::size_t majority = (n_evaluators + 1) / 2;
  return flagged.size() >= majority ? QcStatus::rejected : QcStatus::kept;
}

}  // namespace cityvl
