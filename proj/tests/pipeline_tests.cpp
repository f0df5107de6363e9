#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cityvl/config.hpp"
#include "cityvl/errors.hpp"
#include "cityvl/hashing.hpp"
#include "cityvl/pipeline.hpp"
#include "support/fixtures.hpp"
#include "support/pipeline_config.hpp"

using namespace cityvl;
using testsupport::fixture_path;
using testsupport::small_config_text;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing file " << p);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("cityvl_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("toml subset parsing") {
  const TomlTable t = parse_toml(
      "# comment\n[run]\nseed = 42\nname = \"abc\"\nflag = true\n"
      "list = [\"a\", \"b\"]\n[other]\nx = 1.5\n");
  CHECK(std::get<double>(t.at("run").at("seed")) == 42.0);
  CHECK(std::get<std::string>(t.at("run").at("name")) == "abc");
  CHECK(std::get<bool>(t.at("run").at("flag")) == true);
  CHECK(std::get<std::vector<std::string>>(t.at("run").at("list")).size() == 2);
  CHECK(std::get<double>(t.at("other").at("x")) == 1.5);

  CHECK_THROWS_AS(parse_toml("[run\n"), ConfigInvalid);
  CHECK_THROWS_AS(parse_toml("justtext\n"), ConfigInvalid);
  CHECK_THROWS_AS(parse_toml("[x]\nkey = [\"a\"\n"), ConfigInvalid);
}

TEST_CASE("config validation enforces the stage dependency chain") {
  PipelineConfig cfg = PipelineConfig::from_toml(small_config_text());
  cfg.stages = {"qc"};
  CHECK_THROWS_AS(cfg.validate({}), ConfigInvalid);
  // Available prior outputs satisfy the dependency.
  CHECK_NOTHROW(cfg.validate({"ingest", "graph", "render", "serialize",
                              "generate"}));
  cfg.stages = {"ingest", "graph", "render", "serialize", "generate", "qc"};
  CHECK_NOTHROW(cfg.validate({}));

  cfg.stages = {"warp"};
  CHECK_THROWS_AS(cfg.validate({}), ConfigInvalid);
  cfg.stages = {};
  CHECK_THROWS_AS(cfg.validate({}), ConfigInvalid);

  PipelineConfig bad = PipelineConfig::from_toml(small_config_text());
  bad.personas = {"astronaut"};
  CHECK_THROWS_AS(bad.validate({}), ConfigInvalid);

  CHECK_THROWS_AS(PipelineConfig::from_toml("[generation]\ntasks = [\"Nope\"]\n"),
                  ConfigInvalid);
}

TEST_CASE("sample evidence is deterministic and task-shaped") {
  const CityScene scene = testsupport::demo_scene();
  const SceneGraph graph = build_scene_graph(scene, 120.0);
  PipelineConfig cfg = PipelineConfig::from_toml(small_config_text());

  QASample obj;
  obj.task = TaskCategory::ObjectCaption;
  obj.target_ids = {0};
  const auto ev1 = sample_evidence(scene, graph, obj, cfg);
  const auto ev2 = sample_evidence(scene, graph, obj, cfg);
  REQUIRE(ev1.size() == ev2.size());
  for (std::size_t i = 0; i < ev1.size(); ++i)
    CHECK(ev1[i].text == ev2[i].text);
  CHECK(ev1[0].kind == AttributeKind::object);
  CHECK(ev1.size() == 1 + cfg.encoder.k);

  QASample sc;
  sc.task = TaskCategory::SceneCaption;
  const auto scene_ev = sample_evidence(scene, graph, sc, cfg);
  REQUIRE(scene_ev.size() == 1);
  CHECK(scene_ev[0].kind == AttributeKind::scene);

  QASample broken;
  broken.task = TaskCategory::ObjectCaption;
  CHECK_THROWS_AS(sample_evidence(scene, graph, broken, cfg), Error);
}

TEST_CASE("full scripted pipeline run completes and is reproducible") {
  TempDir dir_a("run_a"), dir_b("run_b");

  auto run_into = [&](const fs::path& out) {
    PipelineConfig cfg = PipelineConfig::from_toml(small_config_text());
    cfg.out_dir = out.string();
    PipelineRunner runner(std::move(cfg));
    return runner.run();
  };

  const RunManifest ma = run_into(dir_a.path);
  for (const char* stage : {"ingest", "graph", "render", "serialize",
                            "generate", "qc", "evaluate"}) {
    REQUIRE(ma.stages.count(stage) == 1);
    CHECK(ma.stages.at(stage).status == "complete");
  }

  // Dataset and report exist and the counts in the manifest line up.
  const std::string dataset = slurp(dir_a.path / "dataset/samples.jsonl");
  std::size_t lines = 0;
  for (char c : dataset)
    if (c == '\n') ++lines;
  std::size_t counted = 0;
  for (const auto& [task, n] : ma.task_counts) counted += n;
  CHECK(lines == counted);
  CHECK(ma.qc_counts.count("kept") == 1);

  // Every persisted verdict is consistent with the aggregation rule, and
  // kept samples either carry no defects or were overruled by it.
  {
    std::istringstream in(dataset);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const QASample s = qa_sample_from_json(line);
      CHECK(s.qc_status == aggregate_verdicts(s.defects, 3));
      if (s.qc_status == QcStatus::kept)
        for (const auto& d : s.defects)
          CHECK(d.defect_class != DefectClass::PrivacyRisk);
    }
  }

  // A second fresh run produces byte-identical artifacts.
  const RunManifest mb = run_into(dir_b.path);
  CHECK(slurp(dir_b.path / "dataset/samples.jsonl") == dataset);
  CHECK(slurp(dir_a.path / "eval/reports.jsonl") ==
        slurp(dir_b.path / "eval/reports.jsonl"));
  CHECK(ma.stages.at("qc").digest == mb.stages.at("qc").digest);
  CHECK(ma.stages.at("evaluate").digest == mb.stages.at("evaluate").digest);
}

TEST_CASE("a completed run resumes by skipping every stage") {
  TempDir dir("resume");
  PipelineConfig cfg = PipelineConfig::from_toml(small_config_text());
  cfg.out_dir = dir.path.string();

  PipelineRunner first(cfg);
  const RunManifest m1 = first.run();
  const std::string dataset1 = slurp(dir.path / "dataset/samples.jsonl");

  PipelineRunner second(cfg);
  const RunManifest m2 = second.run();
  CHECK(second.generator_gateway().upstream_calls() == 0);
  CHECK(slurp(dir.path / "dataset/samples.jsonl") == dataset1);
  for (const auto& [name, rec] : m1.stages)
    CHECK(m2.stages.at(name).digest == rec.digest);
}

TEST_CASE("record produces a fixture that replays to identical artifacts") {
  TempDir rec_dir("record"), replay_dir("replay");
  const fs::path fixture = rec_dir.path / "fixture.jsonl";

  {
    PipelineConfig cfg = PipelineConfig::from_toml(small_config_text());
    cfg.out_dir = (rec_dir.path / "out").string();
    cfg.record = true;
    cfg.record_path = fixture.string();
    PipelineRunner runner(std::move(cfg));
    runner.run();
  }
  REQUIRE(fs::exists(fixture));

  {
    PipelineConfig cfg = PipelineConfig::from_toml(small_config_text());
    cfg.out_dir = replay_dir.path.string();
    cfg.replay_fixture = fixture.string();
    PipelineRunner runner(std::move(cfg));
    CHECK(runner.generator_gateway().offline());
    const RunManifest m = runner.run();
    CHECK(m.fixture_hash == sha256_file_hex(fixture.string()));
    CHECK(slurp(replay_dir.path / "dataset/samples.jsonl") ==
          slurp(rec_dir.path / "out/dataset/samples.jsonl"));
  }
}

TEST_CASE("report writes summary tables from the evaluation stage") {
  TempDir dir("report");
  PipelineConfig cfg = PipelineConfig::from_toml(small_config_text());
  cfg.out_dir = dir.path.string();
  PipelineRunner runner(cfg);
  runner.run();

  PipelineRunner reporter(cfg);
  const std::string summary = reporter.report();
  CHECK(summary.find("Per-task metrics") != std::string::npos);
  CHECK(summary.find("ObjectCaption") != std::string::npos);
  CHECK(summary.find("Inter-evaluator correlation") != std::string::npos);
  CHECK(fs::exists(dir.path / "eval/summary.json"));
  CHECK(fs::exists(dir.path / "eval/summary.txt"));

  // Report without an evaluate stage is an error.
  TempDir empty("noreport");
  PipelineConfig cfg2 = PipelineConfig::from_toml(small_config_text());
  cfg2.out_dir = empty.path.string();
  PipelineRunner bare(cfg2);
  CHECK_THROWS_AS(bare.report(), StageMissing);
}

TEST_CASE("custom personas from config sections are usable in generation") {
  const std::string text = small_config_text() +
      "[persona.urban planner]\n"
      "style = \"You speak as an urban planner weighing land use.\"\n"
      "few_shot = [\"How is this block zoned? | Mixed commercial use.\"]\n";
  PipelineConfig cfg = PipelineConfig::from_toml(text);
  cfg.personas = {"urban planner"};
  CHECK_NOTHROW(cfg.validate({}));
  const Persona& p = cfg.resolve_persona("urban planner");
  CHECK(p.style_directive.find("urban planner") != std::string::npos);
  REQUIRE(p.few_shot.size() == 1);
  CHECK(p.few_shot[0].second == "Mixed commercial use.");
  CHECK(cfg.resolve_persona("tourist").name == "tourist");

  CHECK_THROWS_AS(PipelineConfig::from_toml(
                      "[persona.empty]\nstyle = \"x\"\n"),
                  ConfigInvalid);
}

TEST_CASE("encode-demo stage writes the shape and gradcheck report") {
  TempDir dir("demo");
  PipelineConfig cfg = PipelineConfig::from_toml(small_config_text());
  cfg.out_dir = dir.path.string();
  cfg.stages = {"ingest", "encode-demo"};
  cfg.demo_task = "ObjectCaption";
  cfg.demo_selection = {0};
  PipelineRunner runner(std::move(cfg));
  runner.run();
  const std::string report = slurp(dir.path / "encode_demo/report.json");
  CHECK(report.find("\"E_o\"") != std::string::npos);
  CHECK(report.find("attention_weights") != std::string::npos);
  CHECK(report.find("gradcheck") != std::string::npos);
  CHECK(report.find("\"E_r\"") != std::string::npos);

  // Scene-level demo zeroes the object and relationship branches.
  TempDir dir2("demo2");
  PipelineConfig cfg2 = PipelineConfig::from_toml(small_config_text());
  cfg2.out_dir = dir2.path.string();
  cfg2.stages = {"ingest", "encode-demo"};
  cfg2.demo_task = "SceneCaption";
  PipelineRunner runner2(std::move(cfg2));
  runner2.run();
  const std::string report2 = slurp(dir2.path / "encode_demo/report.json");
  CHECK(report2.find("\"E_o\": \"zero\"") != std::string::npos);
  CHECK(report2.find("\"E_r\": \"zero\"") != std::string::npos);
}
