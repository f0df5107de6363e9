#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cityvl/config.hpp"
#include "cityvl/gateway.hpp"
#include "cityvl/judge.hpp"
#include "cityvl/qa.hpp"
#include "cityvl/scene_graph.hpp"

namespace cityvl {

struct StageRecord {
  std::string status;  // "complete"
  std::map<std::string, std::string> files;  // relpath -> sha256
  std::string digest;                        // digest over the file table
};

struct RunManifest {
  std::string run_id;
  std::string config_hash;
  std::string fixture_hash;  // empty outside replay mode
  std::string timestamp;
  std::uint64_t seed = 0;
  std::map<std::string, StageRecord> stages;
  std::map<std::string, std::size_t> task_counts;
  std::map<std::string, std::size_t> qc_counts;

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

// Deterministic evidence for a sample: the attribute texts its prompts and
// checks are grounded in. Re-derived from the scene rather than stored.
std::vector<AttributeText> sample_evidence(const CityScene& scene,
                                           const SceneGraph& graph,
                                           const QASample& sample,
                                           const PipelineConfig& cfg);

// Stage executor with content-addressed resume. Stages write under
// cfg.out_dir; the manifest lands at <out_dir>/manifest.json.
class PipelineRunner {
 public:
  explicit PipelineRunner(PipelineConfig cfg);

  // Runs every requested stage in order; skips stages whose recorded outputs
  // are intact and whose dependencies were not re-executed.
  RunManifest run();

  // Writes the per-task metric table, judge averages and the evaluator
  // correlation matrix; requires a completed evaluate stage.
  std::string report();

  const RunManifest& manifest() const { return manifest_; }
  Gateway& generator_gateway();

 private:
  PipelineConfig cfg_;
  RunManifest manifest_;
  std::shared_ptr<FixtureRecorder> recorder_;
  std::unique_ptr<Gateway> generator_;
  std::vector<std::unique_ptr<Gateway>> judges_;
  std::vector<std::string> executed_;

  void load_manifest();
  void save_manifest();
  std::string write_summary();
  bool stage_intact(const std::string& name) const;
  bool deps_stable(const std::string& name) const;
  void finish_stage(const std::string& name,
                    const std::vector<std::string>& rel_files);

  std::shared_ptr<Transport> make_transport(const GatewaySpec& spec);
  Gateway& judge_gateway(std::size_t i);

  void stage_ingest();
  void stage_graph();
  void stage_render();
  void stage_serialize();
  void stage_generate();
  void stage_qc();
  void stage_evaluate();
  void stage_encode_demo();

  std::vector<CityScene> load_canonical_scenes() const;
};

std::string evaluation_report_to_json(const EvaluationReport& report);
EvaluationReport evaluation_report_from_json(const std::string& line);

}  // namespace cityvl
