#pragma once

#include <string>
#include <vector>

#include "cityvl/encoder.hpp"  // TaskCategory
#include "cityvl/gateway.hpp"
#include "cityvl/text_attrs.hpp"

namespace cityvl {

struct Persona {
  std::string name;
  std::string style_directive;
  std::vector<std::pair<std::string, std::string>> few_shot;  // (q, a)
};

// The shipped persona set; extensible through configuration.
const std::vector<Persona>& default_personas();
const Persona& persona_by_name(const std::string& name);

enum class QcStatus : std::uint8_t { pending, kept, rejected };
const std::string& qc_status_name(QcStatus s);
QcStatus qc_status_from_name(const std::string& name);

enum class DefectClass : std::uint8_t {
  TemplateArtifact,
  PrivacyRisk,
  AmbiguousQuestion,
  UninformativeAnswer,
  SceneInconsistency,
};
inline constexpr std::size_t kDefectClassCount = 5;
const std::string& defect_class_name(DefectClass d);

struct DefectReport {
  std::string evaluator_model_id;
  DefectClass defect_class = DefectClass::TemplateArtifact;
  std::string rationale;
};

struct QASample {
  std::string sample_id;
  TaskCategory task = TaskCategory::ObjectCaption;
  std::string question;
  std::string answer;
  std::string scene_id;
  std::vector<ObjectId> target_ids;  // empty for scene-level tasks
  std::string persona_name;
  std::string generator_model_id;
  QcStatus qc_status = QcStatus::pending;
  std::vector<DefectReport> defects;
};

std::string qa_sample_to_json(const QASample& sample);
QASample qa_sample_from_json(const std::string& json_line);

// Prompt with, in order: role directive with the persona style, few-shot
// demonstrations, the serialized scene attributes, the four instruction
// blocks (diversity, truthfulness, format, contextual simulation), and the
// requested pair count. Deterministic text for identical inputs.
CompletionRequest build_generation_prompt(
    TaskCategory task, const Persona& persona,
    const std::vector<AttributeText>& attributes,
    const std::vector<ContentPart>& images, std::size_t n_pairs,
    const std::string& model_id, double temperature);

// Every well-formed <Question>..</Question><Answer>..</Answer> pair in order,
// inner whitespace trimmed. Throws MalformedOutput (with byte position) when
// a tag opens without closing, an answer precedes its question, inner text
// contains a delimiter tag, or no pair is found.
std::vector<std::pair<std::string, std::string>> parse_tagged_qa(
    const std::string& raw);

// Up to n gateway paraphrases of `question`, original intent preserved;
// exact duplicates and copies of the original are dropped.
std::vector<std::string> diversify(const std::string& question, std::size_t n,
                                   Gateway& gateway);

// The raw-tag-residue patterns the local lexical pre-check scans for.
const std::vector<std::string>& lexical_residue_patterns();

// Three-evaluator cross check plus the local lexical pre-check. A gateway
// failure records that evaluator as abstaining rather than as a defect.
std::vector<DefectReport> quality_check(
    const QASample& sample, const std::vector<AttributeText>& attributes,
    std::vector<Gateway*> gateways);

// Rejected iff >= ceil(n/2) distinct evaluators reported at least one defect,
// or any evaluator reported PrivacyRisk (veto class).
QcStatus aggregate_verdicts(const std::vector<DefectReport>& defects,
                            std::size_t n_evaluators);

}  // namespace cityvl
