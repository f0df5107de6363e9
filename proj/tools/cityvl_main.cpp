// cityvl command line: staged city-scene QA pipeline plus one-shot utilities.
//
// Exit codes: 0 success, 2 configuration error, 3 stage failure,
// 4 budget exceeded.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cityvl/bev.hpp"
#include "cityvl/config.hpp"
#include "cityvl/errors.hpp"
#include "cityvl/pipeline.hpp"
#include "cityvl/scene_graph.hpp"
#include "cityvl/text_attrs.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;
constexpr int kExitBudget = 4;

struct GlobalOpts {
  std::string config_path;
  std::string out_dir;
  std::string replay;
  long long seed = -1;
  bool record = false;
  bool dry_run = false;
};

cityvl::PipelineConfig load_config(const GlobalOpts& opts) {
  if (opts.config_path.empty())
    throw cityvl::ConfigInvalid("--config is required for this subcommand");
  cityvl::PipelineConfig cfg =
      cityvl::PipelineConfig::from_file(opts.config_path);
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (!opts.replay.empty()) cfg.replay_fixture = opts.replay;
  if (opts.record) cfg.record = true;
  if (opts.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(opts.seed);
    cfg.encoder.seed = cfg.seed;
  }
  return cfg;
}

struct DemoOpts {
  std::string task;
  std::vector<std::uint64_t> selection;
};

int run_stages(const GlobalOpts& opts, const std::vector<std::string>& stages,
               const DemoOpts* demo = nullptr) {
  cityvl::PipelineConfig cfg = load_config(opts);
  if (!stages.empty()) cfg.stages = stages;
  if (demo) {
    if (!demo->task.empty()) cfg.demo_task = demo->task;
    if (!demo->selection.empty()) cfg.demo_selection = demo->selection;
  }
  if (opts.dry_run) {
    cfg.validate({});
    std::cout << "config ok; would run:";
    for (const auto& s : cfg.stages) std::cout << " " << s;
    std::cout << "\n";
    return kExitOk;
  }
  const std::string out_dir = cfg.out_dir;
  cityvl::PipelineRunner runner(std::move(cfg));
  const cityvl::RunManifest manifest = runner.run();
  if (stages.size() == 1 && stages[0] == "encode-demo") {
    std::ifstream in(std::filesystem::path(out_dir) / "encode_demo/report.json");
    std::cout << in.rdbuf();
    return kExitOk;
  }
  std::cout << "run " << manifest.run_id << " complete; stages:";
  for (const auto& [name, rec] : manifest.stages)
    std::cout << " " << name << "=" << rec.status;
  std::cout << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"city-scale 3D vision-language data pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalOpts opts;
  app.add_option("--config", opts.config_path, "pipeline config file (toml)");
  app.add_option("--out", opts.out_dir, "output directory override");
  app.add_option("--seed", opts.seed, "seed override");
  app.add_option("--replay", opts.replay, "replay fixture (jsonl)");
  app.add_flag("--record", opts.record, "record gateway traffic to a fixture");
  app.add_flag("--dry-run", opts.dry_run, "validate and plan without running");

  std::vector<std::string> stage_cmds = {"ingest",   "graph",    "render",
                                         "serialize", "generate", "qc",
                                         "evaluate", "encode-demo"};
  DemoOpts demo;
  for (const auto& name : stage_cmds) {
    auto* cmd = app.add_subcommand(name, "run the " + name + " stage");
    if (name == "encode-demo") {
      cmd->add_option("--task", demo.task, "task category for the demo");
      cmd->add_option("--select", demo.selection, "target object ids");
    }
  }
  auto* cmd_run = app.add_subcommand("run", "run all configured stages");
  auto* cmd_report = app.add_subcommand(
      "report", "emit summary tables from a completed evaluate stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (cmd_report->parsed()) {
      cityvl::PipelineRunner runner(load_config(opts));
      std::cout << runner.report();
      return kExitOk;
    }
    if (cmd_run->parsed()) return run_stages(opts, {});
    for (const auto& name : stage_cmds)
      if (app.get_subcommand(name)->parsed()) {
        // A single-stage invocation still validates its dependency chain.
        return run_stages(opts, {name}, &demo);
      }
    return kExitConfig;
  } catch (const cityvl::BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const cityvl::ConfigInvalid& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const cityvl::StageMissing& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  } catch (const cityvl::StageFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
}
