// Python bindings for the main pipeline operations: label construction,
// undersampling, EDRL training/embedding, multiblock PLS alignment, the
// random forest, SNR mixing and F1 scoring.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "edrlmea/dataio.hpp"
#include "edrlmea/edrl.hpp"
#include "edrlmea/eval.hpp"
#include "edrlmea/forest.hpp"
#include "edrlmea/mea.hpp"
#include "edrlmea/noise.hpp"
#include "edrlmea/serialize.hpp"

namespace py = pybind11;
using namespace edrlmea;

namespace {

std::vector<dataio::BinaryLabel> to_labels(const std::vector<std::string>& names) {
  std::vector<dataio::BinaryLabel> labels;
  labels.reserve(names.size());
  for (const auto& n : names) {
    if (n == "POS") labels.push_back(dataio::BinaryLabel::Pos);
    else if (n == "NEG") labels.push_back(dataio::BinaryLabel::Neg);
    else fail(Errc::InvalidConfig, "label must be POS or NEG, got '" + n + "'");
  }
  return labels;
}

edrl::EdrlConfig edrl_config_from_kwargs(int hidden_multiplier, int latent_multiplier,
                                         double kl_weight, double rho, int batch_size,
                                         int max_epochs, int patience, double min_delta,
                                         double learning_rate, std::uint64_t seed,
                                         bool share_inter_latent, bool concat_latent_output) {
  edrl::EdrlConfig cfg;
  cfg.hidden_multiplier = hidden_multiplier;
  cfg.latent_multiplier = latent_multiplier;
  cfg.kl_weight = kl_weight;
  cfg.rho = rho;
  cfg.batch_size = batch_size;
  cfg.max_epochs = max_epochs;
  cfg.patience = patience;
  cfg.min_delta = min_delta;
  cfg.learning_rate = learning_rate;
  cfg.seed = seed;
  cfg.share_inter_latent = share_inter_latent;
  cfg.concat_latent_output = concat_latent_output;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_edrlmea, m) {
  m.doc() = "Emotion-disentangled representation learning with multiblock PLS alignment";

  py::register_exception<Error>(m, "EdrlmeaError");

  // ---- dataio ----
  m.def(
      "binarize_rating",
      [](double rating, double lambda) {
        return std::string(dataio::label_name(dataio::binarize_rating(rating, lambda)));
      },
      py::arg("rating"), py::arg("lambda_") = 2.5,
      "POS iff rating >= lambda, NEG otherwise");

  m.def(
      "map_categorical_to_av",
      [](const std::string& emotion) {
        auto [v, a] = dataio::map_categorical_to_av(dataio::parse_emotion(emotion));
        return std::make_pair(std::string(dataio::label_name(v)),
                              std::string(dataio::label_name(a)));
      },
      py::arg("emotion"), "Maps Anger/Happy/Neutral/Sad to (valence, arousal) labels");

  m.def(
      "undersample_majority",
      [](const Matrix& features, const std::vector<std::string>& labels, std::uint64_t seed) {
        dataio::LabeledDataset ds;
        ds.table.features = features;
        for (Eigen::Index i = 0; i < features.rows(); ++i)
          ds.table.ids.push_back("r" + std::to_string(i));
        ds.labels = to_labels(labels);
        dataio::LabeledDataset out = dataio::undersample_majority(ds, seed);
        std::vector<std::string> kept;
        for (const auto& l : out.labels) kept.emplace_back(dataio::label_name(l));
        return std::make_pair(out.table.features, kept);
      },
      py::arg("features"), py::arg("labels"), py::arg("seed"),
      "Balances classes by removing random majority rows");

  // ---- edrl ----
  py::class_<edrl::EdrlModel>(m, "EdrlModel")
      .def_property_readonly("input_dim", [](const edrl::EdrlModel& mdl) { return mdl.input_dim; })
      .def_property_readonly("class_count",
                             [](const edrl::EdrlModel& mdl) { return mdl.class_count; })
      .def_property_readonly("best_epoch", [](const edrl::EdrlModel& mdl) { return mdl.best_epoch; })
      .def_property_readonly("train_history",
                             [](const edrl::EdrlModel& mdl) { return mdl.train_history; })
      .def_property_readonly("val_history",
                             [](const edrl::EdrlModel& mdl) { return mdl.val_history; })
      .def("embed", [](const edrl::EdrlModel& mdl, const Matrix& x) { return edrl::embed(mdl, x); },
           py::arg("x"), "Per-block embeddings of every row; list of (n, N) arrays")
      .def("save",
           [](const edrl::EdrlModel& mdl, const std::filesystem::path& path) {
             serialize::save_json(path, serialize::edrl_to_json(mdl));
           },
           py::arg("path"));

  m.def(
      "train_edrl",
      [](const std::vector<Matrix>& per_class_train, const std::vector<Matrix>& per_class_val,
         int hidden_multiplier, int latent_multiplier, double kl_weight, double rho,
         int batch_size, int max_epochs, int patience, double min_delta, double learning_rate,
         std::uint64_t seed, bool share_inter_latent, bool concat_latent_output) {
        require(!per_class_train.empty(), Errc::InvalidConfig, "need per-class partitions");
        edrl::EdrlConfig cfg = edrl_config_from_kwargs(
            hidden_multiplier, latent_multiplier, kl_weight, rho, batch_size, max_epochs,
            patience, min_delta, learning_rate, seed, share_inter_latent, concat_latent_output);
        edrl::EdrlModel model =
            edrl::build_edrl(static_cast<int>(per_class_train.front().cols()),
                             static_cast<int>(per_class_train.size()), cfg);
        edrl::train_edrl(model, per_class_train, per_class_val);
        return model;
      },
      py::arg("per_class_train"), py::arg("per_class_val"), py::kw_only(),
      py::arg("hidden_multiplier") = 2, py::arg("latent_multiplier") = 2,
      py::arg("kl_weight") = 0.1, py::arg("rho") = 0.05, py::arg("batch_size") = 32,
      py::arg("max_epochs") = 500, py::arg("patience") = 10, py::arg("min_delta") = 1e-4,
      py::arg("learning_rate") = 1e-3, py::arg("seed") = 0,
      py::arg("share_inter_latent") = true, py::arg("concat_latent_output") = false,
      "Trains per-class autoencoder blocks with the shared inter latent layer");

  m.def("load_edrl",
        [](const std::filesystem::path& path) {
          return serialize::edrl_from_json(serialize::load_json(path));
        },
        py::arg("path"));

  // ---- mea ----
  py::class_<mea::MbplsModel>(m, "MbplsModel")
      .def_property_readonly("components",
                             [](const mea::MbplsModel& mdl) { return mdl.components; })
      .def_property_readonly("super_scores",
                             [](const mea::MbplsModel& mdl) { return mdl.super_scores; })
      .def_property_readonly("response_scores",
                             [](const mea::MbplsModel& mdl) { return mdl.response_scores; })
      .def_property_readonly("block_loadings",
                             [](const mea::MbplsModel& mdl) { return mdl.block_loadings; })
      .def_property_readonly("response_loadings",
                             [](const mea::MbplsModel& mdl) { return mdl.response_loadings; })
      .def_property_readonly("block_importance",
                             [](const mea::MbplsModel& mdl) { return mdl.block_importance; })
      .def_property_readonly("beta", [](const mea::MbplsModel& mdl) { return mdl.beta; })
      .def_property_readonly("truncated", [](const mea::MbplsModel& mdl) { return mdl.truncated; })
      .def("predict",
           [](const mea::MbplsModel& mdl, const std::vector<Matrix>& blocks) {
             return mea::predict(mdl, blocks);
           },
           py::arg("blocks"), "Aligned embedding for each row of the given blocks")
      .def("explained_variance",
           [](const mea::MbplsModel& mdl) {
             mea::ExplainedVariance ev = mea::explained_variance(mdl);
             return std::make_pair(ev.per_block, ev.response);
           })
      .def("save",
           [](const mea::MbplsModel& mdl, const std::filesystem::path& path) {
             serialize::save_json(path, serialize::mbpls_to_json(mdl));
           },
           py::arg("path"));

  m.def(
      "fit_mbpls",
      [](const std::vector<Matrix>& blocks, const Matrix& response, int components,
         int max_nipals_iters, double tol, bool scale_blocks) {
        mea::MbplsConfig cfg;
        cfg.components = components;
        cfg.max_nipals_iters = max_nipals_iters;
        cfg.tol = tol;
        cfg.scale_blocks = scale_blocks;
        return mea::fit_mbpls(blocks, response, cfg);
      },
      py::arg("blocks"), py::arg("response"), py::kw_only(), py::arg("components") = 20,
      py::arg("max_nipals_iters") = 500, py::arg("tol") = 1e-10,
      py::arg("scale_blocks") = true,
      "Multiblock PLS: latent variables maximizing block/response covariance");

  m.def("load_mbpls",
        [](const std::filesystem::path& path) {
          return serialize::mbpls_from_json(serialize::load_json(path));
        },
        py::arg("path"));

  // ---- forest ----
  py::class_<forest::RandomForestModel>(m, "RandomForestModel")
      .def_property_readonly("n_estimators",
                             [](const forest::RandomForestModel& mdl) {
                               return mdl.params.n_estimators;
                             })
      .def_property_readonly("max_depth",
                             [](const forest::RandomForestModel& mdl) {
                               return mdl.params.max_depth;
                             })
      .def("predict",
           [](const forest::RandomForestModel& mdl, const Matrix& rows) {
             std::vector<std::string> labels;
             Matrix probs(rows.rows(), 2);
             auto preds = forest::predict_forest(mdl, rows);
             for (std::size_t i = 0; i < preds.size(); ++i) {
               labels.emplace_back(dataio::label_name(preds[i].label));
               probs(static_cast<Eigen::Index>(i), 0) = preds[i].probability[0];
               probs(static_cast<Eigen::Index>(i), 1) = preds[i].probability[1];
             }
             return std::make_pair(labels, probs);
           },
           py::arg("rows"), "(labels, probabilities[NEG, POS]) per row")
      .def("save",
           [](const forest::RandomForestModel& mdl, const std::filesystem::path& path) {
             serialize::save_json(path, serialize::forest_to_json(mdl));
           },
           py::arg("path"));

  m.def(
      "fit_forest",
      [](const Matrix& features, const std::vector<std::string>& labels, int n_estimators,
         int max_depth, std::uint64_t seed) {
        return forest::fit_forest(features, to_labels(labels), {n_estimators, max_depth}, seed);
      },
      py::arg("features"), py::arg("labels"), py::kw_only(), py::arg("n_estimators") = 100,
      py::arg("max_depth") = 0, py::arg("seed") = 0,
      "Bagged Gini trees; max_depth=0 grows unlimited depth");

  m.def("load_forest",
        [](const std::filesystem::path& path) {
          return serialize::forest_from_json(serialize::load_json(path));
        },
        py::arg("path"));

  // ---- noise ----
  m.def(
      "mix_at_snr",
      [](const std::vector<double>& clean, const std::vector<double>& noise_samples,
         double snr_db, std::uint64_t seed, int sample_rate) {
        noise::Waveform c{clean, sample_rate};
        noise::Waveform n{noise_samples, sample_rate};
        noise::MixResult r = noise::mix_at_snr(c, n, {"py", snr_db, seed});
        return py::make_tuple(r.mixed.samples, r.gain, r.noise_offset);
      },
      py::arg("clean"), py::arg("noise"), py::arg("snr_db"), py::arg("seed") = 0,
      py::arg("sample_rate") = 16000,
      "(mixed, gain, noise_offset); achieved SNR equals snr_db exactly");

  m.def(
      "measure_snr",
      [](const std::vector<double>& clean, const std::vector<double>& noisy, int sample_rate) {
        return noise::measure_snr({clean, sample_rate}, {noisy, sample_rate});
      },
      py::arg("clean"), py::arg("noisy"), py::arg("sample_rate") = 16000);

  // ---- eval ----
  m.def(
      "f1_binary",
      [](const std::vector<std::string>& preds, const std::vector<std::string>& truth) {
        eval::F1Result r = eval::f1_binary(to_labels(preds), to_labels(truth));
        py::dict d;
        d["macro_f1"] = r.macro_f1;
        d["weighted_f1"] = r.weighted_f1;
        d["pos_f1"] = r.pos.f1;
        d["neg_f1"] = r.neg.f1;
        d["pos_precision"] = r.pos.precision;
        d["pos_recall"] = r.pos.recall;
        d["neg_precision"] = r.neg.precision;
        d["neg_recall"] = r.neg.recall;
        return d;
      },
      py::arg("preds"), py::arg("truth"),
      "Per-class precision/recall/F1 plus macro and weighted averages");

#ifdef VERSION_INFO
#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)
  m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif
}
