#include "cityvl/judge.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "cityvl/errors.hpp"

namespace cityvl {

CompletionRequest build_judge_prompt(const std::string& answer,
                                     const std::string& truth,
                                     const std::vector<AttributeText>& evidence,
                                     const std::string& judge_model_id) {
  if (answer.empty() || truth.empty() || evidence.empty())
    throw Error("judge prompt needs answer, ground truth and evidence");

  CompletionRequest req;
  req.model_id = judge_model_id;
  req.temperature = 0.0;
  req.system_text =
      "You are an independent evaluator of answers about 3D city scenes. "
      "Logicality measures internal coherence and valid reasoning; "
      "Reliability measures factual alignment with the scene evidence and "
      "the ground truth.";

  std::string body;
  body += "Generated answer:\n" + answer + "\n\n";
  body += "Ground truth:\n" + truth + "\n\n";
  body += "Scene evidence:\n";
  for (const auto& attr : evidence) body += attr.text + "\n";
  body += "\n";
  body += kJudgeScaleDirective;
  body +=
      " Then provide a concise justification for both scores.\n"
      "Reply exactly in this format:\n"
      "Logicality: <score>\nReliability: <score>\nJustification: <one or two "
      "sentences>";
  req.user_parts.push_back(ContentPart::make_text(body));
  return req;
}

namespace {

double parse_labeled_number(const std::string& raw, const std::string& label) {
  const auto pos = raw.find(label);
  if (pos == std::string::npos) throw MissingField(label);
  const char* start = raw.c_str() + pos + label.size();
  char* end = nullptr;
  const double v = std::strtod(start, &end);
  if (end == start) throw MissingField(label);
  return v;
}

std::string trim_copy(const std::string& s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace

JudgeScore parse_judge_output(const std::string& raw) {
  JudgeScore score;
  score.logicality = parse_labeled_number(raw, "Logicality:");
  score.reliability = parse_labeled_number(raw, "Reliability:");
  if (score.logicality < 0.0 || score.logicality > 10.0)
    throw OutOfRange("Logicality", score.logicality);
  if (score.reliability < 0.0 || score.reliability > 10.0)
    throw OutOfRange("Reliability", score.reliability);

  const std::string label = "Justification:";
  const auto pos = raw.find(label);
  if (pos == std::string::npos) throw MissingJustification();
  score.justification = trim_copy(raw.substr(pos + label.size()));
  if (score.justification.empty()) throw MissingJustification();
  return score;
}

std::string format_judge_output(const JudgeScore& score) {
  char buf[64];
  std::string out = "Logicality: ";
  std::snprintf(buf, sizeof(buf), "%g", score.logicality);
  out += buf;
  out += "\nReliability: ";
  std::snprintf(buf, sizeof(buf), "%g", score.reliability);
  out += buf;
  out += "\nJustification: " + score.justification;
  return out;
}

std::pair<double, double> aggregate_scores(
    const std::vector<JudgeScore>& scores) {
  if (scores.empty()) throw Error("aggregate_scores needs at least one score");
  double log_sum = 0.0, rel_sum = 0.0;
  for (const auto& s : scores) {
    log_sum += s.logicality;
    rel_sum += s.reliability;
  }
  const auto n = static_cast<double>(scores.size());
  return {log_sum / n, rel_sum / n};
}

Matrix evaluator_correlation(const std::vector<std::vector<double>>& scores) {
  const std::size_t e = scores.size();
  if (e < 2) throw Error("correlation needs at least two evaluators");
  const std::size_t n = scores.front().size();
  if (n < 2) throw Error("correlation needs at least two samples");
  for (const auto& v : scores)
    if (v.size() != n) throw ShapeMismatch("score vectors differ in length");

  std::vector<double> mean(e, 0.0), var(e, 0.0);
  for (std::size_t i = 0; i < e; ++i) {
    for (double v : scores[i]) mean[i] += v;
    mean[i] /= static_cast<double>(n);
    for (double v : scores[i]) var[i] += (v - mean[i]) * (v - mean[i]);
    if (var[i] == 0.0) throw DegenerateVector(i);
  }

  Matrix out(e, e, 0.0);
  for (std::size_t i = 0; i < e; ++i) {
    out.at(i, i) = 1.0;
    for (std::size_t j = i + 1; j < e; ++j) {
      double cov = 0.0;
      for (std::size_t t = 0; t < n; ++t)
        cov += (scores[i][t] - mean[i]) * (scores[j][t] - mean[j]);
      const double r = cov / std::sqrt(var[i] * var[j]);
      out.at(i, j) = r;
      out.at(j, i) = r;
    }
  }
  return out;
}

double round_display(double v) {
  return static_cast<double>(std::llround(v * 100.0)) / 100.0;
}

}  // namespace cityvl
