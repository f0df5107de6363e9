// Regenerates the checked-in gateway fixture by running the pipeline against
// the scripted offline provider with recording enabled.
//
//   make_fixtures <config.toml> <out_dir> <fixture_path>

#include <cstdio>
#include <filesystem>
#include <string>

#include "cityvl/config.hpp"
#include "cityvl/pipeline.hpp"

int main(int argc, char** argv) {
  if (argc != 4) {
    std::fprintf(stderr, "usage: %s <config.toml> <out_dir> <fixture_path>\n",
                 argv[0]);
    return 2;
  }
  try {
    cityvl::PipelineConfig cfg = cityvl::PipelineConfig::from_file(argv[1]);
    cfg.out_dir = argv[2];
    cfg.record = true;
    cfg.record_path = argv[3];
    cfg.replay_fixture.clear();  // force the scripted transports
    std::filesystem::remove_all(cfg.out_dir);
    cityvl::PipelineRunner runner(std::move(cfg));
    runner.run();
    std::printf("fixture written to %s\n", argv[3]);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
