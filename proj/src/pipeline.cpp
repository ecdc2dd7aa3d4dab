#include "edrlmea/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>

#include "edrlmea/csv.hpp"
#include "edrlmea/serialize.hpp"

namespace edrlmea::pipeline {

namespace {

using nlohmann::json;
using serialize::load_json;
using serialize::save_json;

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::filesystem::path& p) {
  return p.is_absolute() ? p : base / p;
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---- manifest ------------------------------------------------------------

json load_manifest(const PipelineConfig& config) {
  const auto path = config.output_dir / "manifest.json";
  if (!std::filesystem::exists(path))
    return json{{"config_hash", config_hash(config)},
                {"versions", {{"edrlmea", "0.1.0"}, {"checkpoint_format", 1}}},
                {"stages", json::object()}};
  json m = load_json(path);
  require(m.at("config_hash").get<std::string>() == config_hash(config), Errc::StageOrder,
          "existing run manifest was produced by a different config; use a fresh "
          "output_dir or restore the original config");
  return m;
}

void record_stage(const PipelineConfig& config, json& manifest, const std::string& stage,
                  const std::vector<std::filesystem::path>& outputs, double wall_seconds,
                  json extra = json::object()) {
  json entry;
  entry["completed"] = true;
  entry["wall_seconds"] = wall_seconds;
  json out = json::object();
  for (const auto& p : outputs)
    out[std::filesystem::relative(p, config.output_dir).generic_string()] =
        serialize::content_hash(p);
  entry["outputs"] = out;
  for (auto& [k, v] : extra.items()) entry[k] = v;
  manifest["stages"][stage] = entry;
  save_json(config.output_dir / "manifest.json", manifest);
}

void require_stage(const json& manifest, const std::string& stage, const std::string& needed_by) {
  if (!manifest.at("stages").contains(stage))
    fail(Errc::StageOrder, "stage '" + stage + "' must run before '" + needed_by + "'");
}

// ---- config --------------------------------------------------------------

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

}  // namespace

PipelineConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  require(j.contains("seed") && !j.at("seed").is_null(), Errc::InvalidConfig,
          "config must set an explicit seed");
  c.seed = j.at("seed").get<std::uint64_t>();
  c.dimension = dataio::parse_dimension(j.at("dimension").get<std::string>());
  c.lambda = get_or(j, "lambda", 2.5);
  c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());

  const json& data = j.at("data");
  c.train_table = resolve(base_dir, data.at("train_table").get<std::string>());
  c.feature_dim = get_or(data, "feature_dim", 88);
  c.standardize = get_or(data, "standardize", true);
  if (data.contains("group_delimiter") && !data.at("group_delimiter").is_null()) {
    const std::string d = data.at("group_delimiter").get<std::string>();
    require(d.size() == 1, Errc::InvalidConfig, "group_delimiter must be one character");
    c.group_delimiter = d[0];
  }

  if (j.contains("split")) {
    const json& split = j.at("split");
    c.train_fraction = get_or(split, "train_fraction", 0.8);
    c.validation_fraction_of_train = get_or(split, "validation_fraction_of_train", 0.1);
  }

  if (j.contains("edrl")) {
    const json& e = j.at("edrl");
    c.edrl.hidden_multiplier = get_or(e, "hidden_multiplier", c.edrl.hidden_multiplier);
    c.edrl.latent_multiplier = get_or(e, "latent_multiplier", c.edrl.latent_multiplier);
    c.edrl.kl_weight = get_or(e, "kl_weight", c.edrl.kl_weight);
    c.edrl.rho = get_or(e, "rho", c.edrl.rho);
    c.edrl.batch_size = get_or(e, "batch_size", c.edrl.batch_size);
    c.edrl.max_epochs = get_or(e, "max_epochs", c.edrl.max_epochs);
    c.edrl.patience = get_or(e, "patience", c.edrl.patience);
    c.edrl.min_delta = get_or(e, "min_delta", c.edrl.min_delta);
    c.edrl.learning_rate = get_or(e, "learning_rate", c.edrl.learning_rate);
    c.edrl.share_inter_latent = get_or(e, "share_inter_latent", true);
    c.edrl.concat_latent_output = get_or(e, "use_concat_latents", false);
  }
  c.edrl.seed = c.seed;

  if (j.contains("mbpls")) {
    const json& m = j.at("mbpls");
    c.mbpls.components = get_or(m, "components", c.mbpls.components);
    c.mbpls.max_nipals_iters = get_or(m, "max_nipals_iters", c.mbpls.max_nipals_iters);
    c.mbpls.tol = get_or(m, "tol", c.mbpls.tol);
    c.mbpls.scale_blocks = get_or(m, "scale_blocks", c.mbpls.scale_blocks);
  }

  if (j.contains("forest")) {
    const json& f = j.at("forest");
    c.use_paper_grid = get_or(f, "paper_grid", false);
    if (c.use_paper_grid) {
      c.grid = forest::paper_grid();
    } else {
      c.grid.n_estimators_values =
          get_or(f, "n_estimators", forest::default_grid().n_estimators_values);
      c.grid.max_depth_values =
          get_or(f, "max_depth", forest::default_grid().max_depth_values);
    }
  }

  if (j.contains("evaluate")) {
    const json& e = j.at("evaluate");
    if (e.contains("clean_test") && !e.at("clean_test").is_null())
      c.clean_test = resolve(base_dir, e.at("clean_test").get<std::string>());
    if (e.contains("noisy_tests")) {
      for (const auto& t : e.at("noisy_tests"))
        c.noisy_tests.push_back({t.at("noise_id").get<std::string>(),
                                 t.at("snr_db").get<double>(),
                                 resolve(base_dir, t.at("table").get<std::string>())});
    }
    c.averaging = eval::parse_averaging(get_or<std::string>(e, "averaging", "macro"));
    c.snr_levels = get_or(e, "snr_levels", c.snr_levels);
  }

  if (j.contains("corrupt")) {
    const json& co = j.at("corrupt");
    for (const auto& w : get_or(co, "clean_wavs", json::array()))
      c.clean_wavs.push_back(
          {w.at("id").get<std::string>(), resolve(base_dir, w.at("path").get<std::string>())});
    for (const auto& w : get_or(co, "noise_wavs", json::array()))
      c.noise_wavs.push_back(
          {w.at("id").get<std::string>(), resolve(base_dir, w.at("path").get<std::string>())});
    c.corrupt_output_dir =
        resolve(c.output_dir, get_or<std::string>(co, "output_dir", "corrupted"));
  } else {
    c.corrupt_output_dir = c.output_dir / "corrupted";
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return config_from_json(load_json(path), path.parent_path());
}

json config_to_json(const PipelineConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["dimension"] = dataio::dimension_name(c.dimension);
  j["lambda"] = c.lambda;
  j["output_dir"] = c.output_dir.generic_string();
  j["data"] = {{"train_table", c.train_table.generic_string()},
               {"feature_dim", c.feature_dim},
               {"standardize", c.standardize},
               {"group_delimiter",
                c.group_delimiter ? json(std::string(1, *c.group_delimiter)) : json(nullptr)}};
  j["split"] = {{"train_fraction", c.train_fraction},
                {"validation_fraction_of_train", c.validation_fraction_of_train}};
  j["edrl"] = {{"hidden_multiplier", c.edrl.hidden_multiplier},
               {"latent_multiplier", c.edrl.latent_multiplier},
               {"kl_weight", c.edrl.kl_weight},
               {"rho", c.edrl.rho},
               {"batch_size", c.edrl.batch_size},
               {"max_epochs", c.edrl.max_epochs},
               {"patience", c.edrl.patience},
               {"min_delta", c.edrl.min_delta},
               {"learning_rate", c.edrl.learning_rate},
               {"share_inter_latent", c.edrl.share_inter_latent},
               {"use_concat_latents", c.edrl.concat_latent_output}};
  j["mbpls"] = {{"components", c.mbpls.components},
                {"max_nipals_iters", c.mbpls.max_nipals_iters},
                {"tol", c.mbpls.tol},
                {"scale_blocks", c.mbpls.scale_blocks}};
  j["forest"] = {{"paper_grid", c.use_paper_grid},
                 {"n_estimators", c.grid.n_estimators_values},
                 {"max_depth", c.grid.max_depth_values}};
  json noisy = json::array();
  for (const auto& t : c.noisy_tests)
    noisy.push_back({{"noise_id", t.noise_id},
                     {"snr_db", t.snr_db},
                     {"table", t.table.generic_string()}});
  j["evaluate"] = {{"clean_test", c.clean_test ? json(c.clean_test->generic_string()) : json(nullptr)},
                   {"noisy_tests", noisy},
                   {"averaging", eval::averaging_name(c.averaging)},
                   {"snr_levels", c.snr_levels}};
  json cw = json::array(), nw = json::array();
  for (const auto& w : c.clean_wavs)
    cw.push_back({{"id", w.id}, {"path", w.path.generic_string()}});
  for (const auto& w : c.noise_wavs)
    nw.push_back({{"id", w.id}, {"path", w.path.generic_string()}});
  j["corrupt"] = {{"clean_wavs", cw},
                  {"noise_wavs", nw},
                  {"output_dir", c.corrupt_output_dir.generic_string()}};
  return j;
}

std::string config_hash(const PipelineConfig& config) {
  return serialize::string_hash(config_to_json(config).dump());
}

namespace {

// all validation problems collected, then reported at once
void validate_paths(const PipelineConfig& c, bool for_evaluate) {
  std::vector<std::string> problems;
  if (!std::filesystem::exists(c.train_table))
    problems.push_back("train_table not found: " + c.train_table.string());
  if (c.train_fraction <= 0.0 || c.train_fraction >= 1.0)
    problems.push_back("split.train_fraction must lie in (0,1)");
  if (c.validation_fraction_of_train <= 0.0 || c.validation_fraction_of_train >= 1.0)
    problems.push_back("split.validation_fraction_of_train must lie in (0,1)");
  if (for_evaluate) {
    if (c.clean_test && !std::filesystem::exists(*c.clean_test))
      problems.push_back("evaluate.clean_test not found: " + c.clean_test->string());
    for (const auto& t : c.noisy_tests)
      if (!std::filesystem::exists(t.table))
        problems.push_back("noisy test table not found: " + t.table.string());
  }
  if (!problems.empty()) {
    std::string joined;
    for (const auto& p : problems) joined += "\n  - " + p;
    fail(Errc::InvalidConfig, "config validation failed:" + joined);
  }
}

struct PreparedData {
  dataio::LabeledDataset fit;  // balanced
  dataio::LabeledDataset val;
  dataio::LabeledDataset test;
};

PreparedData load_prepared(const PipelineConfig& c) {
  const auto dir = c.output_dir / "prepared";
  PreparedData d;
  for (auto [name, slot] :
       {std::pair{"fit.csv", &d.fit}, {"val.csv", &d.val}, {"test.csv", &d.test}}) {
    const auto path = dir / name;
    require(std::filesystem::exists(path), Errc::StageOrder,
            "missing prepared output " + path.string() + "; run prepare first");
    *slot = dataio::make_labeled(dataio::load_feature_table(path, c.feature_dim),
                                 c.dimension, c.lambda);
  }
  return d;
}

// class order is fixed: block 0 <- NEG rows, block 1 <- POS rows
std::vector<Matrix> per_class_partitions(const Matrix& features,
                                         const std::vector<dataio::BinaryLabel>& labels) {
  std::vector<std::size_t> neg, pos;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] == dataio::BinaryLabel::Pos ? pos : neg).push_back(i);
  auto slice = [&](const std::vector<std::size_t>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), features.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
      out.row(static_cast<Eigen::Index>(i)) =
          features.row(static_cast<Eigen::Index>(rows[i]));
    return out;
  };
  return {slice(neg), slice(pos)};
}

Matrix aligned_embedding(const edrl::EdrlModel& model, const mea::MbplsModel& mbpls,
                         const Matrix& standardized) {
  return mea::predict(mbpls, edrl::embed(model, standardized));
}

void write_grid_csv(const std::filesystem::path& path, const forest::GridResult& grid) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"n_estimators", "max_depth", "macro_f1"});
  for (const auto& cell : grid.table)
    rows.push_back({std::to_string(cell.params.n_estimators),
                    std::to_string(cell.params.max_depth), csv::format_double(cell.macro_f1)});
  csv::write_file(path, rows);
}

}  // namespace

void cmd_prepare(const PipelineConfig& config) {
  validate_paths(config, false);
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(config.output_dir / "prepared");
  json manifest = load_manifest(config);

  dataio::FeatureTable table = dataio::load_feature_table(config.train_table, config.feature_dim);
  dataio::LabeledDataset all = dataio::make_labeled(table, config.dimension, config.lambda);

  dataio::SplitSpec spec;
  spec.train_fraction = config.train_fraction;
  spec.validation_fraction_of_train = config.validation_fraction_of_train;
  spec.seed = config.seed;
  spec.group_delimiter = config.group_delimiter;

  auto [train, test] = dataio::split_train_test(all, spec);
  auto [fit_raw, val] = dataio::split_validation(train, spec);
  dataio::LabeledDataset fit = dataio::undersample_majority(fit_raw, config.seed);

  const auto dir = config.output_dir / "prepared";
  dataio::save_feature_table(dir / "fit.csv", fit.table);
  dataio::save_feature_table(dir / "val.csv", val.table);
  dataio::save_feature_table(dir / "test.csv", test.table);

  std::vector<std::pair<std::string, std::string>> partitions;
  for (const auto& id : fit.table.ids) partitions.emplace_back(id, "fit");
  for (const auto& id : val.table.ids) partitions.emplace_back(id, "val");
  for (const auto& id : test.table.ids) partitions.emplace_back(id, "test");
  dataio::write_split_manifest(dir / "split_manifest.csv", partitions);

  auto count = [](const dataio::LabeledDataset& ds, dataio::BinaryLabel l) {
    return std::count(ds.labels.begin(), ds.labels.end(), l);
  };
  json extra;
  extra["counts"] = {
      {"fit_pos", count(fit, dataio::BinaryLabel::Pos)},
      {"fit_neg", count(fit, dataio::BinaryLabel::Neg)},
      {"val", val.labels.size()},
      {"test", test.labels.size()},
      {"dropped_by_undersampling", fit_raw.labels.size() - fit.labels.size()}};
  record_stage(config, manifest, "prepare",
               {dir / "fit.csv", dir / "val.csv", dir / "test.csv",
                dir / "split_manifest.csv"},
               elapsed_seconds(start), extra);
}

void cmd_train(const PipelineConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  json manifest = load_manifest(config);
  require_stage(manifest, "prepare", "train");
  PreparedData data = load_prepared(config);
  std::filesystem::create_directories(config.output_dir / "models");
  const auto dir = config.output_dir / "models";

  // preprocessing statistics come from the fit rows only
  dataio::CenterScaleStats scaler =
      dataio::center_scale_fit(data.fit.table.features, config.standardize);
  Matrix fit_std = dataio::center_scale_apply(scaler, data.fit.table.features);
  Matrix val_std = dataio::center_scale_apply(scaler, data.val.table.features);
  save_json(dir / "scaler.json", serialize::stats_to_json(scaler));

  const auto t_edrl = std::chrono::steady_clock::now();
  edrl::EdrlConfig edrl_cfg = config.edrl;
  edrl_cfg.seed = config.seed;
  edrl::EdrlModel model = edrl::build_edrl(config.feature_dim, 2, edrl_cfg);
  edrl::train_edrl(model, per_class_partitions(fit_std, data.fit.labels),
                   per_class_partitions(val_std, data.val.labels));
  save_json(dir / "edrl.json", serialize::edrl_to_json(model));
  const double edrl_seconds = elapsed_seconds(t_edrl);

  // alignment target is the (standardized) training input itself
  const auto t_mea = std::chrono::steady_clock::now();
  mea::MbplsModel mbpls = mea::fit_mbpls(edrl::embed(model, fit_std), fit_std, config.mbpls);
  save_json(dir / "mbpls.json", serialize::mbpls_to_json(mbpls));
  const double mea_seconds = elapsed_seconds(t_mea);

  const auto t_forest = std::chrono::steady_clock::now();
  dataio::LabeledDataset fit_aligned = data.fit;
  fit_aligned.table.features = mea::predict(mbpls, edrl::embed(model, fit_std));
  dataio::LabeledDataset val_aligned = data.val;
  val_aligned.table.features = mea::predict(mbpls, edrl::embed(model, val_std));

  forest::GridResult grid =
      forest::grid_search(fit_aligned, val_aligned, config.grid, config.seed);
  forest::RandomForestModel rf = forest::fit_forest(fit_aligned, grid.best, config.seed);
  save_json(dir / "forest.json", serialize::forest_to_json(rf));
  write_grid_csv(dir / "grid_scores.csv", grid);
  const double forest_seconds = elapsed_seconds(t_forest);

  json extra;
  extra["edrl_config"] = {{"batch_size", edrl_cfg.batch_size},
                          {"learning_rate", edrl_cfg.learning_rate},
                          {"max_epochs", edrl_cfg.max_epochs},
                          {"patience", edrl_cfg.patience},
                          {"best_epoch", model.best_epoch},
                          {"epochs_run", model.train_history.size()},
                          {"early_stopped", model.early_stopped}};
  {
    mea::ExplainedVariance ev = mea::explained_variance(mbpls);
    extra["mbpls"] = {{"components", mbpls.components},
                      {"response_variance_captured", ev.response.sum()},
                      {"truncated", mbpls.truncated}};
  }
  extra["forest_best"] = {{"n_estimators", grid.best.n_estimators},
                          {"max_depth", grid.best.max_depth},
                          {"validation_macro_f1", grid.best_score}};
  extra["stage_seconds"] = {
      {"edrl", edrl_seconds}, {"mea", mea_seconds}, {"forest", forest_seconds}};
  record_stage(config, manifest, "train",
               {dir / "scaler.json", dir / "edrl.json", dir / "mbpls.json",
                dir / "forest.json", dir / "grid_scores.csv"},
               elapsed_seconds(start), extra);
}

eval::EvalReport cmd_evaluate(const PipelineConfig& config) {
  validate_paths(config, true);
  const auto start = std::chrono::steady_clock::now();
  json manifest = load_manifest(config);
  require_stage(manifest, "train", "evaluate");
  PreparedData data = load_prepared(config);
  const auto dir = config.output_dir / "models";

  dataio::CenterScaleStats scaler = serialize::stats_from_json(load_json(dir / "scaler.json"));
  edrl::EdrlModel model = serialize::edrl_from_json(load_json(dir / "edrl.json"));
  mea::MbplsModel mbpls = serialize::mbpls_from_json(load_json(dir / "mbpls.json"));
  forest::RandomForestModel rf = serialize::forest_from_json(load_json(dir / "forest.json"));

  Matrix fit_std = dataio::center_scale_apply(scaler, data.fit.table.features);
  Matrix val_std = dataio::center_scale_apply(scaler, data.val.table.features);

  // Baseline shares the protocol end to end: same grid, same seed, raw
  // standardized features instead of the aligned embedding.
  dataio::LabeledDataset base_fit = data.fit;
  base_fit.table.features = fit_std;
  dataio::LabeledDataset base_val = data.val;
  base_val.table.features = val_std;
  forest::GridResult base_grid =
      forest::grid_search(base_fit, base_val, config.grid, config.seed);
  forest::RandomForestModel base_rf = forest::fit_forest(base_fit, base_grid.best, config.seed);
  save_json(dir / "baseline_forest.json", serialize::forest_to_json(base_rf));
  write_grid_csv(dir / "baseline_grid_scores.csv", base_grid);

  auto score_condition = [&](const dataio::LabeledDataset& ds)
      -> std::pair<double, double> {  // (baseline, system)
    Matrix std_features = dataio::center_scale_apply(scaler, ds.table.features);
    std::vector<dataio::BinaryLabel> base_preds, sys_preds;
    for (const auto& p : forest::predict_forest(base_rf, std_features))
      base_preds.push_back(p.label);
    Matrix aligned = aligned_embedding(model, mbpls, std_features);
    for (const auto& p : forest::predict_forest(rf, aligned)) sys_preds.push_back(p.label);
    return {eval::f1_score(base_preds, ds.labels, config.averaging),
            eval::f1_score(sys_preds, ds.labels, config.averaging)};
  };

  std::vector<eval::ConditionScore> baseline, system;
  auto push = [&](eval::Environment env, const std::string& noise_id,
                  std::optional<double> snr, const dataio::LabeledDataset& ds) {
    auto [b, s] = score_condition(ds);
    baseline.push_back({config.dimension, env, noise_id, snr, b});
    system.push_back({config.dimension, env, noise_id, snr, s});
  };

  if (config.clean_test) {
    dataio::LabeledDataset clean = dataio::make_labeled(
        dataio::load_feature_table(*config.clean_test, config.feature_dim), config.dimension,
        config.lambda);
    push(eval::Environment::Clean, "", std::nullopt, clean);
  } else {
    push(eval::Environment::Clean, "", std::nullopt, data.test);
  }

  for (const auto& ref : config.noisy_tests) {
    dataio::LabeledDataset noisy = dataio::make_labeled(
        dataio::load_feature_table(ref.table, config.feature_dim), config.dimension,
        config.lambda);
    push(eval::Environment::Noisy, ref.noise_id, ref.snr_db, noisy);
  }

  eval::EvalReport report =
      eval::build_report(baseline, system, config.snr_levels, config.averaging);
  std::filesystem::create_directories(config.output_dir / "report");
  eval::write_report_csv(config.output_dir / "report" / "report.csv", report);
  const std::string table = eval::render_table(report);
  {
    std::ofstream txt(config.output_dir / "report" / "report.txt", std::ios::binary);
    txt << table;
  }

  record_stage(config, manifest, "evaluate",
               {config.output_dir / "report" / "report.csv",
                config.output_dir / "report" / "report.txt",
                dir / "baseline_forest.json", dir / "baseline_grid_scores.csv"},
               elapsed_seconds(start),
               json{{"baseline_forest_best",
                     {{"n_estimators", base_grid.best.n_estimators},
                      {"max_depth", base_grid.best.max_depth}}},
                    {"averaging", eval::averaging_name(config.averaging)}});
  return report;
}

std::vector<noise::ManifestRow> cmd_corrupt(const PipelineConfig& config) {
  require(!config.clean_wavs.empty() && !config.noise_wavs.empty(), Errc::InvalidConfig,
          "corrupt needs clean_wavs and noise_wavs in the config");
  const auto start = std::chrono::steady_clock::now();
  json manifest = load_manifest(config);
  std::filesystem::create_directories(config.output_dir);

  noise::WavList clean, noises;
  for (const auto& w : config.clean_wavs) clean.emplace_back(w.id, w.path);
  for (const auto& w : config.noise_wavs) noises.emplace_back(w.id, w.path);
  auto rows = noise::corrupt_testset(clean, noises, config.snr_levels,
                                     config.corrupt_output_dir, config.seed);
  const auto manifest_path = config.corrupt_output_dir / "corruption_manifest.csv";
  noise::write_corruption_manifest(manifest_path, rows);
  record_stage(config, manifest, "corrupt", {manifest_path}, elapsed_seconds(start),
               json{{"files_written", rows.size()}});
  return rows;
}

std::string cmd_report(const PipelineConfig& config) {
  const auto path = config.output_dir / "report" / "report.csv";
  require(std::filesystem::exists(path), Errc::StageOrder,
          "no report at " + path.string() + "; run evaluate first");
  eval::EvalReport report = eval::read_report_csv(path);
  report.averaging = config.averaging;
  report.snr_levels = config.snr_levels;
  return eval::render_table(report);
}

}  // namespace edrlmea::pipeline
