#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edrlmea/dataio.hpp"
#include "edrlmea/edrl.hpp"
#include "edrlmea/eval.hpp"
#include "edrlmea/forest.hpp"
#include "edrlmea/mea.hpp"
#include "edrlmea/noise.hpp"

namespace edrlmea::pipeline {

struct NoisyTableRef {
  std::string noise_id;
  double snr_db = 0.0;
  std::filesystem::path table;
};

struct WavRef {
  std::string id;
  std::filesystem::path path;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  dataio::Dimension dimension = dataio::Dimension::Arousal;
  double lambda = 2.5;
  std::filesystem::path output_dir;

  // data
  std::filesystem::path train_table;
  int feature_dim = 88;
  bool standardize = true;
  std::optional<char> group_delimiter;

  // splits
  double train_fraction = 0.8;
  double validation_fraction_of_train = 0.1;

  edrl::EdrlConfig edrl;
  mea::MbplsConfig mbpls;

  // forest grid
  forest::GridSpec grid = forest::default_grid();
  bool use_paper_grid = false;

  // evaluation
  std::optional<std::filesystem::path> clean_test;  // defaults to the held-out split
  std::vector<NoisyTableRef> noisy_tests;
  eval::Averaging averaging = eval::Averaging::Macro;
  std::vector<double> snr_levels{0.0, 5.0, 10.0, 15.0, 20.0};

  // corruption
  std::vector<WavRef> clean_wavs;
  std::vector<WavRef> noise_wavs;
  std::filesystem::path corrupt_output_dir;  // resolved under output_dir when relative
};

PipelineConfig config_from_json(const nlohmann::json& j,
                                const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const PipelineConfig& config);
std::string config_hash(const PipelineConfig& config);

// Stage outputs land under output_dir:
//   prepared/{fit,val,test}.csv, prepared/split_manifest.csv
//   models/{scaler,edrl,mbpls,forest}.json, models/grid_scores.csv
//   report/{report.csv,report.txt}
//   manifest.json (config hash, per-stage outputs + content hashes, timings)
void cmd_prepare(const PipelineConfig& config);
void cmd_train(const PipelineConfig& config);
eval::EvalReport cmd_evaluate(const PipelineConfig& config);
std::vector<noise::ManifestRow> cmd_corrupt(const PipelineConfig& config);
std::string cmd_report(const PipelineConfig& config);

}  // namespace edrlmea::pipeline
