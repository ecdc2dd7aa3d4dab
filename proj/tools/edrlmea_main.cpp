// Command-line driver for the embedding pipeline: prepare the data splits,
// corrupt audio at exact SNRs, train the embedding stack, evaluate against
// the raw-feature baseline, and re-render reports.

#include <exception>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "edrlmea/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUserError = 1;
constexpr int kExitInternalError = 2;

edrlmea::pipeline::PipelineConfig load(const std::string& config_path,
                                       std::optional<std::uint64_t> seed_override) {
  auto config = edrlmea::pipeline::load_config(config_path);
  if (seed_override) {
    config.seed = *seed_override;
    config.edrl.seed = *seed_override;
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EDRL-MEA emotion embedding pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  app.add_option("-c,--config", config_path, "pipeline config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed_override, "override the config seed");

  auto* prepare = app.add_subcommand("prepare", "split, label and rebalance the feature table");
  auto* corrupt = app.add_subcommand("corrupt", "mix noise into clean WAVs at the target SNRs");
  auto* train = app.add_subcommand("train", "train EDRL, fit the alignment, grid-search the forest");
  auto* evaluate = app.add_subcommand("evaluate", "score baseline vs aligned embeddings per condition");
  auto* report = app.add_subcommand("report", "re-render the report table from report.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = load(config_path, seed_override);
    if (prepare->parsed()) {
      edrlmea::pipeline::cmd_prepare(config);
      std::cout << "prepared splits under " << (config.output_dir / "prepared").string() << "\n";
    } else if (corrupt->parsed()) {
      auto rows = edrlmea::pipeline::cmd_corrupt(config);
      std::cout << "wrote " << rows.size() << " corrupted files under "
                << config.corrupt_output_dir.string() << "\n";
    } else if (train->parsed()) {
      edrlmea::pipeline::cmd_train(config);
      std::cout << "models written under " << (config.output_dir / "models").string() << "\n";
    } else if (evaluate->parsed()) {
      auto rep = edrlmea::pipeline::cmd_evaluate(config);
      std::cout << edrlmea::eval::render_table(rep);
    } else if (report->parsed()) {
      std::cout << edrlmea::pipeline::cmd_report(config);
    }
    return kExitOk;
  } catch (const edrlmea::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternalError;
  }
}
