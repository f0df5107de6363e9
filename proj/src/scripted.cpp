#include "cityvl/scripted.hpp"

#include <array>
#include <sstream>
#include <string>
#include <vector>

#include "cityvl/hashing.hpp"
#include "cityvl/judge.hpp"
#include "cityvl/qa.hpp"

namespace cityvl {

namespace {

std::string user_text(const CompletionRequest& req) {
  std::string out;
  for (const auto& part : req.user_parts)
    if (part.kind == ContentPart::Kind::text) out += part.text;
  return out;
}

std::vector<std::string> section_lines(const std::string& body,
                                       const std::string& header,
                                       const std::string& terminator) {
  std::vector<std::string> out;
  const auto start = body.find(header);
  if (start == std::string::npos) return out;
  auto end = body.find(terminator, start);
  if (end == std::string::npos) end = body.size();
  std::istringstream in(body.substr(start + header.size(), end - start - header.size()));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

std::size_t parse_count(const std::string& body, const std::string& before,
                        std::size_t fallback) {
  const auto pos = body.find(before);
  if (pos == std::string::npos) return fallback;
  return static_cast<std::size_t>(
      std::strtoull(body.c_str() + pos + before.size(), nullptr, 10));
}

CompletionResponse make_response(std::string text,
                                 const CompletionRequest& req) {
  CompletionResponse resp;
  resp.input_tokens = (req.system_text.size() + user_text(req).size()) / 4;
  resp.output_tokens = text.size() / 4;
  resp.text = std::move(text);
  return resp;
}

const std::array<const char*, 6> kQuestionLeads = {
    "Could you describe", "What can you tell me about", "How would you "
    "characterize", "I would like to know more about", "Please explain",
    "What stands out about"};

const std::array<const char*, 5> kAnswerLeads = {
    "Looking at the scene,", "According to the recorded attributes,",
    "From the layout data,", "Going by the scene records,",
    "The scene attributes show that"};

std::string strip_trailing_period(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == ' ')) s.pop_back();
  return s;
}

std::string scripted_generation(const CompletionRequest& req,
                                std::uint64_t& rng) {
  const std::string body = user_text(req);
  const std::size_t n = parse_count(body, "Produce exactly ", 3);
  std::vector<std::string> attrs =
      section_lines(body, "City scene attributes:\n", "\nInstructions:");
  if (attrs.empty()) attrs.push_back("an unremarkable city block");

  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& attr = attrs[splitmix64(rng) % attrs.size()];
    const char* qlead = kQuestionLeads[splitmix64(rng) % kQuestionLeads.size()];
    const char* alead = kAnswerLeads[splitmix64(rng) % kAnswerLeads.size()];
    const std::string subject = strip_trailing_period(attr);
    out += "<Question>" + std::string(qlead) + " the area around " + subject +
           "?</Question>\n";
    out += "<Answer>" + std::string(alead) + " " + subject +
           ", and it sits within easy reach of the surrounding blocks." +
           "</Answer>\n";
  }
  return out;
}

std::string scripted_paraphrase(const CompletionRequest& req,
                                std::uint64_t& rng) {
  const std::string body = user_text(req);
  const std::size_t n = parse_count(body, "in ", 2);
  const auto nl = body.find('\n');
  std::string original =
      nl == std::string::npos ? body : body.substr(nl + 1);
  original = strip_trailing_period(original);
  if (!original.empty() && original.back() == '?') original.pop_back();

  static const std::array<const char*, 5> kPrefixes = {
      "Could you tell me,", "I was wondering,", "Quick question:",
      "Out of curiosity,", "Help me out here:"};
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    const char* prefix = kPrefixes[(splitmix64(rng) + i) % kPrefixes.size()];
    out += std::string(prefix) + " " + original + "?\n";
  }
  return out;
}

std::string scripted_quality_check(const CompletionRequest& req,
                                   std::uint64_t h) {
  const std::string body = user_text(req);
  for (const auto& pattern : lexical_residue_patterns())
    if (body.find("Answer:\n") != std::string::npos &&
        body.find(pattern, body.find("Answer:\n")) != std::string::npos)
      return "Defect: TemplateArtifact | leftover generation markup in the "
             "answer.";
  if (h % 11 == 0)
    return "Defect: AmbiguousQuestion | the question could refer to several "
           "objects in this scene.";
  if (h % 43 == 0)
    return "Defect: PrivacyRisk | the pair touches on an identifiable "
           "individual.";
  return "No defects.";
}

std::string scripted_judge(std::uint64_t h) {
  const double logicality = 5.0 + static_cast<double>(h % 46) / 10.0;
  const double reliability = 3.5 + static_cast<double>((h / 97) % 56) / 10.0;
  static const std::array<const char*, 4> kWhy = {
      "The answer follows the evidence and stays internally consistent.",
      "Mostly grounded, though one spatial claim is looser than the record.",
      "Coherent reasoning; the cited distances match the scene attributes.",
      "Sound structure, but the answer generalizes beyond the given "
      "attributes."};
  char buf[160];
  std::snprintf(buf, sizeof(buf), "Logicality: %.1f\nReliability: %.1f\n",
                logicality, reliability);
  return std::string(buf) + "Justification: " + kWhy[h % kWhy.size()];
}

std::string scripted_answer(const CompletionRequest& req, std::uint64_t& rng) {
  const std::string body = user_text(req);
  std::vector<std::string> attrs =
      section_lines(body, "Scene attributes:\n", "\nQuestion:");
  const auto qpos = body.find("Question: ");
  std::string question = qpos == std::string::npos
                             ? ""
                             : body.substr(qpos + 10, body.find('\n', qpos) - qpos - 10);
  std::string grounding =
      attrs.empty() ? "the recorded layout" : strip_trailing_period(attrs.front());
  const char* alead = kAnswerLeads[splitmix64(rng) % kAnswerLeads.size()];
  return std::string(alead) + " " + grounding +
         ", which answers the question directly.";
}

}  // namespace

CompletionResponse ScriptedTransport::send(const CompletionRequest& request) {
  const std::string key = request.request_key();
  std::uint64_t h = fnv1a64(key);
  std::uint64_t rng = h;

  const std::string& sys = request.system_text;
  const std::string body = user_text(request);
  std::string text;
  if (sys.find("You write question/answer pairs") != std::string::npos) {
    text = scripted_generation(request, rng);
  } else if (sys.find("You rewrite questions") != std::string::npos) {
    text = scripted_paraphrase(request, rng);
  } else if (sys.find("strict reviewer") != std::string::npos) {
    text = scripted_quality_check(request, h);
  } else if (body.find(kJudgeScaleDirective) != std::string::npos) {
    text = scripted_judge(h);
  } else if (sys.find("You answer questions about a 3D city scene") !=
             std::string::npos) {
    text = scripted_answer(request, rng);
  } else {
    text = "Understood.";
  }
  return make_response(std::move(text), request);
}

}  // namespace cityvl
