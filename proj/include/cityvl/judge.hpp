#pragma once

#include <string>
#include <vector>

#include "cityvl/gateway.hpp"
#include "cityvl/matrix.hpp"
#include "cityvl/text_attrs.hpp"

namespace cityvl {

// The literal rating directive every judge prompt carries; tests key on it.
inline constexpr const char* kJudgeScaleDirective =
    "Rate the generated answer for Logicality and Reliability, each on a "
    "scale from 0 to 10.";

struct JudgeScore {
  std::string evaluator_model_id;
  double logicality = 0.0;   // [0, 10]
  double reliability = 0.0;  // [0, 10]
  std::string justification;
};

struct EvaluationReport {
  std::string sample_id;
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  double meteor = 0.0;
  std::vector<JudgeScore> judges;
  double mean_logicality = 0.0;
  double mean_reliability = 0.0;
};

// Blind prompt: generated answer, ground truth, and scene evidence, with the
// scale directive and justification requirement; no source attribution is
// added.
CompletionRequest build_judge_prompt(const std::string& answer,
                                     const std::string& truth,
                                     const std::vector<AttributeText>& evidence,
                                     const std::string& judge_model_id);

// Extracts "Logicality:", "Reliability:" (first occurrence each) and the
// "Justification:" block. Throws MissingField / OutOfRange /
// MissingJustification.
JudgeScore parse_judge_output(const std::string& raw);

// Renders a score the way parse_judge_output reads it back.
std::string format_judge_output(const JudgeScore& score);

// Arithmetic means over evaluators: (mean logicality, mean reliability).
std::pair<double, double> aggregate_scores(const std::vector<JudgeScore>& scores);

// Pairwise Pearson correlation over per-evaluator score vectors on a common
// sample set; throws DegenerateVector on zero variance.
Matrix evaluator_correlation(const std::vector<std::vector<double>>& scores);

// Display convention for report tables: half-up rounding at two decimals.
double round_display(double v);

}  // namespace cityvl
