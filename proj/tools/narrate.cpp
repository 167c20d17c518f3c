#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "narrative/error.hpp"
#include "narrative/pipeline.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Options& opts) {
  cmd->add_option("-c,--config", opts.config, "JSON pipeline config")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", opts.out, "output directory (overrides the config)");
  cmd->add_option("--seed", opts.seed, "permutation seed (overrides the config)");
  cmd->add_flag("-v,--verbose", opts.verbose, "log stages and files to stderr");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correspondence analysis and chronological clustering of narrative text"};
  app.require_subcommand(1);
  Options opts;

  auto* run_cmd = app.add_subcommand("run", "run every stage and write manifest.json");
  add_common(run_cmd, opts);
  std::vector<std::pair<CLI::App*, narrative::Stage>> stage_cmds;
  for (auto [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"ingest", "normalize the source into units.jsonl"},
           {"table", "build and filter the unit-by-word table"},
           {"ca", "fit the correspondence analysis"},
           {"cluster", "sequence-constrained complete-link dendrogram"},
           {"segment", "permutation-test segmentation"},
           {"track", "distance series for tracked terms and dyads"},
           {"report", "eigenvalues and top contributors as text"}}) {
    auto* cmd = app.add_subcommand(name, help);
    add_common(cmd, opts);
    stage_cmds.emplace_back(cmd, *narrative::stage_from_name(name));
  }

  CLI11_PARSE(app, argc, argv);

  narrative::Logger log;
  if (opts.verbose) log = [](const std::string& line) { std::cerr << line << '\n'; };

  try {
    auto config = narrative::load_config(opts.config);
    if (!opts.out.empty()) config.output_dir = opts.out;
    if (opts.seed) config.seed = opts.seed;

    if (run_cmd->parsed()) {
      const auto manifest = narrative::run(config, log);
      if (opts.verbose) std::cerr << manifest.size() << " files in " << config.output_dir.string() << '\n';
      return 0;
    }
    for (const auto& [cmd, stage] : stage_cmds) {
      if (!cmd->parsed()) continue;
      narrative::run_stage(config, stage, log);
      narrative::write_manifest(config.output_dir);
      return 0;
    }
  } catch (const narrative::StageError& e) {
    std::cerr << "narrate: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "narrate: stage 'config': " << e.what() << '\n';
    return 1;
  }
  return 1;
}
