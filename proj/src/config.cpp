#include "cityvl/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cityvl/errors.hpp"
#include "cityvl/hashing.hpp"
#include "cityvl/qa.hpp"

namespace cityvl {

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string parse_quoted(const std::string& v, std::size_t line) {
  if (v.size() < 2 || v.front() != '"' || v.back() != '"')
    throw ConfigInvalid("line " + std::to_string(line) +
                        ": expected quoted string, got " + v);
  return v.substr(1, v.size() - 2);
}

TomlValue parse_value(const std::string& raw, std::size_t line) {
  const std::string v = trim(raw);
  if (v.empty())
    throw ConfigInvalid("line " + std::to_string(line) + ": empty value");
  if (v.front() == '"') return parse_quoted(v, line);
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.front() == '[') {
    if (v.back() != ']')
      throw ConfigInvalid("line " + std::to_string(line) + ": unclosed array");
    std::vector<std::string> items;
    std::string inner = v.substr(1, v.size() - 2);
    std::size_t pos = 0;
    while (pos < inner.size()) {
      auto comma = inner.find(',', pos);
      std::string item = trim(inner.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (!item.empty()) items.push_back(parse_quoted(item, line));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return items;
  }
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigInvalid("line " + std::to_string(line) + ": bad value " + v);
  }
}

}  // namespace

TomlTable parse_toml(const std::string& text) {
  TomlTable table;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigInvalid("line " + std::to_string(lineno) +
                            ": unclosed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigInvalid("line " + std::to_string(lineno) +
                            ": empty section name");
      table[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigInvalid("line " + std::to_string(lineno) +
                          ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigInvalid("line " + std::to_string(lineno) + ": empty key");
    table[section][key] = parse_value(line.substr(eq + 1), lineno);
  }
  return table;
}

namespace {

template <typename T>
T get_or(const TomlTable& t, const std::string& section,
         const std::string& key, T fallback) {
  auto sit = t.find(section);
  if (sit == t.end()) return fallback;
  auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return fallback;
  if (!std::holds_alternative<T>(kit->second))
    throw ConfigInvalid(section + "." + key + " has the wrong type");
  return std::get<T>(kit->second);
}

GatewaySpec gateway_from(const TomlTable& t, const std::string& section,
                         const GatewaySpec& defaults) {
  GatewaySpec g = defaults;
  g.model_id = get_or<std::string>(t, section, "model", g.model_id);
  g.endpoint = get_or<std::string>(t, section, "endpoint", g.endpoint);
  g.api_key_env = get_or<std::string>(t, section, "api_key_env", g.api_key_env);
  g.in_flight = static_cast<std::size_t>(
      get_or<double>(t, section, "in_flight", static_cast<double>(g.in_flight)));
  g.max_calls = static_cast<std::size_t>(get_or<double>(
      t, section, "max_calls", static_cast<double>(g.max_calls)));
  if (auto v = get_or<double>(t, section, "max_total_tokens", -1.0); v >= 0)
    g.max_total_tokens = static_cast<std::size_t>(v);
  g.backoff_base_ms = static_cast<std::size_t>(get_or<double>(
      t, section, "backoff_base_ms", static_cast<double>(g.backoff_base_ms)));
  return g;
}

}  // namespace

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot read config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_toml(text);
}

PipelineConfig PipelineConfig::from_toml(const std::string& text) {
  const TomlTable t = parse_toml(text);
  PipelineConfig c;
  c.source_text = text;

  c.scene_paths = get_or<std::vector<std::string>>(t, "run", "scenes", {});
  c.stages = get_or<std::vector<std::string>>(
      t, "run", "stages",
      {"ingest", "graph", "render", "serialize", "generate", "qc", "evaluate"});
  c.out_dir = get_or<std::string>(t, "run", "out", c.out_dir);
  c.seed = static_cast<std::uint64_t>(
      get_or<double>(t, "run", "seed", static_cast<double>(c.seed)));
  c.adjacency_radius =
      get_or<double>(t, "run", "adjacency_radius", c.adjacency_radius);
  c.max_relations = static_cast<std::size_t>(get_or<double>(
      t, "run", "max_relations", static_cast<double>(c.max_relations)));

  const auto task_names = get_or<std::vector<std::string>>(
      t, "generation", "tasks",
      {"ObjectCaption", "ObjectAnalysis", "RelationshipComputation",
       "SceneCaption"});
  for (const auto& name : task_names) {
    try {
      c.tasks.push_back(task_from_name(name));
    } catch (const Error& e) {
      throw ConfigInvalid(e.what());
    }
  }
  c.personas = get_or<std::vector<std::string>>(
      t, "generation", "personas",
      {"tourist", "government official", "company staff"});
  c.n_pairs = static_cast<std::size_t>(get_or<double>(
      t, "generation", "n_pairs", static_cast<double>(c.n_pairs)));
  c.n_diversify = static_cast<std::size_t>(get_or<double>(
      t, "generation", "n_diversify", static_cast<double>(c.n_diversify)));
  c.temperature = get_or<double>(t, "generation", "temperature", c.temperature);
  c.objects_per_scene = static_cast<std::size_t>(
      get_or<double>(t, "generation", "objects_per_scene",
                     static_cast<double>(c.objects_per_scene)));

  GatewaySpec base;
  base.model_id = "scripted-vlm";
  c.generator = gateway_from(t, "gateway.generator", base);
  for (int i = 1; i <= 3; ++i) {
    GatewaySpec jb;
    jb.model_id = "scripted-judge-" + std::to_string(i);
    c.judges.push_back(gateway_from(t, "gateway.judge" + std::to_string(i), jb));
  }

  // Custom personas: [persona.<name>] with style and "question | answer"
  // few-shot entries.
  for (const auto& [section, kv] : t) {
    if (section.rfind("persona.", 0) != 0) continue;
    Persona p;
    p.name = section.substr(8);
    p.style_directive = get_or<std::string>(t, section, "style", "");
    for (const auto& shot :
         get_or<std::vector<std::string>>(t, section, "few_shot", {})) {
      const auto bar = shot.find(" | ");
      if (bar == std::string::npos)
        throw ConfigInvalid(section + ".few_shot entries use 'question | answer'");
      p.few_shot.emplace_back(shot.substr(0, bar), shot.substr(bar + 3));
    }
    if (p.style_directive.empty() || p.few_shot.empty())
      throw ConfigInvalid(section + " needs style and at least one few_shot");
    c.custom_personas.push_back(std::move(p));
  }

  c.replay_fixture = get_or<std::string>(t, "run", "replay_fixture", "");
  c.record = get_or<bool>(t, "run", "record", false);
  c.record_path = get_or<std::string>(t, "run", "record_path", "");

  c.encoder.d = static_cast<std::size_t>(
      get_or<double>(t, "encoder", "d", static_cast<double>(c.encoder.d)));
  c.encoder.d_llm = static_cast<std::size_t>(get_or<double>(
      t, "encoder", "d_llm", static_cast<double>(c.encoder.d_llm)));
  c.encoder.l = static_cast<std::size_t>(
      get_or<double>(t, "encoder", "l", static_cast<double>(c.encoder.l)));
  c.encoder.c = static_cast<std::size_t>(
      get_or<double>(t, "encoder", "c", static_cast<double>(c.encoder.c)));
  c.encoder.k = static_cast<std::size_t>(
      get_or<double>(t, "encoder", "k", static_cast<double>(c.encoder.k)));
  c.encoder.seed = c.seed;
  c.demo_task = get_or<std::string>(t, "encoder", "demo_task", c.demo_task);
  const auto sel =
      get_or<std::vector<std::string>>(t, "encoder", "demo_selection", {});
  if (!sel.empty()) {
    c.demo_selection.clear();
    for (const auto& s : sel) c.demo_selection.push_back(std::stoull(s));
  }

  return c;
}

bool PipelineConfig::stage_requested(const std::string& name) const {
  return std::find(stages.begin(), stages.end(), name) != stages.end();
}

void PipelineConfig::validate(const std::vector<std::string>& available) const {
  if (scene_paths.empty()) throw ConfigInvalid("no scene paths configured");
  if (stages.empty()) throw ConfigInvalid("no stages requested");
  for (const auto& s : stages)
    if (std::find(stage_order().begin(), stage_order().end(), s) ==
        stage_order().end())
      throw ConfigInvalid("unknown stage '" + s + "'");

  auto have = [&](const std::string& s) {
    return stage_requested(s) ||
           std::find(available.begin(), available.end(), s) != available.end();
  };
  // Dependency chain; encode-demo hangs off ingest.
  const std::vector<std::pair<std::string, std::string>> deps = {
      {"graph", "ingest"},     {"render", "ingest"},
      {"serialize", "graph"},  {"generate", "serialize"},
      {"generate", "render"},  {"qc", "generate"},
      {"evaluate", "qc"},      {"encode-demo", "ingest"}};
  for (const auto& [stage, dep] : deps)
    if (stage_requested(stage) && !have(dep))
      throw ConfigInvalid("stage '" + stage + "' requires '" + dep +
                          "' to be requested or already complete");

  try {
    for (const auto& p : personas) resolve_persona(p);
    if (stage_requested("encode-demo")) task_from_name(demo_task);
  } catch (const Error& e) {
    throw ConfigInvalid(e.what());
  }
  if (judges.size() != 3) throw ConfigInvalid("exactly 3 judges required");
  if (n_pairs < 1) throw ConfigInvalid("n_pairs must be at least 1");
}

std::string PipelineConfig::config_hash() const {
  return sha256_hex(source_text);
}

const Persona& PipelineConfig::resolve_persona(const std::string& name) const {
  for (const auto& p : custom_personas)
    if (p.name == name) return p;
  return persona_by_name(name);
}

}  // namespace cityvl
