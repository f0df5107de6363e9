#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "cityvl/encoder.hpp"
#include "cityvl/qa.hpp"

namespace cityvl {

// Minimal TOML subset: [section] headers, key = value lines with string,
// number, boolean and string-array values, '#' comments.
using TomlValue = std::variant<std::string, double, bool, std::vector<std::string>>;
using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

TomlTable parse_toml(const std::string& text);

struct GatewaySpec {
  std::string model_id;
  std::string endpoint = "scripted";  // "scripted" or an http(s) base URL
  std::string api_key_env = "CITYVL_API_KEY";
  std::size_t in_flight = 4;
  std::size_t max_calls = 100000;
  std::size_t max_total_tokens = SIZE_MAX;
  std::size_t backoff_base_ms = 1000;
};

inline const std::vector<std::string>& stage_order() {
  static const std::vector<std::string> order = {
      "ingest", "graph", "render", "serialize",
      "generate", "qc", "evaluate", "encode-demo"};
  return order;
}

struct PipelineConfig {
  std::vector<std::string> scene_paths;
  std::vector<std::string> stages;  // subset of stage_order()
  std::string out_dir = "out";
  std::uint64_t seed = 0;

  double adjacency_radius = 120.0;
  std::size_t max_relations = 8;

  // QA generation.
  std::vector<TaskCategory> tasks;
  std::vector<std::string> personas;
  std::vector<Persona> custom_personas;  // [persona.<name>] sections
  std::size_t n_pairs = 5;
  std::size_t n_diversify = 2;
  double temperature = 0.7;
  std::size_t objects_per_scene = 2;  // object-level prompts per scene

  GatewaySpec generator;
  std::vector<GatewaySpec> judges;  // exactly 3

  // Replay / record.
  std::string replay_fixture;  // empty = live transports
  bool record = false;
  std::string record_path;

  EncoderConfig encoder;
  std::string demo_task = "ObjectCaption";
  std::vector<ObjectId> demo_selection = {0};

  // Raw config text, hashed into the manifest.
  std::string source_text;

  static PipelineConfig from_file(const std::filesystem::path& path);
  static PipelineConfig from_toml(const std::string& text);

  // Throws ConfigInvalid; `available` lists stages already complete on disk.
  void validate(const std::vector<std::string>& available) const;
  std::string config_hash() const;
  bool stage_requested(const std::string& name) const;
  // Custom persona if defined, else one of the shipped set.
  const Persona& resolve_persona(const std::string& name) const;
};

}  // namespace cityvl
