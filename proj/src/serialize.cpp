#include "edrlmea/serialize.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace edrlmea::serialize {

namespace {

constexpr int kFormatVersion = 1;

void check_version(const json& j, const char* what) {
  require(j.contains("format_version") && j["format_version"].get<int>() == kFormatVersion,
          Errc::InvalidConfig, std::string("unsupported ") + what + " checkpoint version");
}

nn::Activation activation_from_string(const std::string& s) {
  if (s == "relu") return nn::Activation::Relu;
  if (s == "linear") return nn::Activation::Linear;
  fail(Errc::InvalidConfig, "unknown activation tag '" + s + "'");
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  require(static_cast<Eigen::Index>(data.size()) == rows * cols, Errc::InvalidConfig,
          "matrix payload size mismatch");
  Matrix m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++];
  return m;
}

json vector_to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(data.data(), static_cast<Eigen::Index>(data.size()));
}

json layer_to_json(const nn::DenseLayer& layer) {
  return json{{"in", layer.in_dim()},
              {"out", layer.out_dim()},
              {"activation", layer.activation == nn::Activation::Relu ? "relu" : "linear"},
              {"weights", matrix_to_json(layer.weights)},
              {"bias", vector_to_json(layer.bias)}};
}

nn::DenseLayer layer_from_json(const json& j) {
  nn::DenseLayer layer;
  layer.activation = activation_from_string(j.at("activation").get<std::string>());
  layer.weights = matrix_from_json(j.at("weights"));
  layer.bias = vector_from_json(j.at("bias"));
  require(layer.weights.rows() == j.at("out").get<Eigen::Index>() &&
              layer.weights.cols() == j.at("in").get<Eigen::Index>() &&
              layer.bias.size() == layer.weights.rows(),
          Errc::InvalidConfig, "layer checkpoint dims are inconsistent");
  return layer;
}

namespace {

json config_to_json(const edrl::EdrlConfig& c) {
  return json{{"hidden_multiplier", c.hidden_multiplier},
              {"latent_multiplier", c.latent_multiplier},
              {"kl_weight", c.kl_weight},
              {"rho", c.rho},
              {"batch_size", c.batch_size},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"min_delta", c.min_delta},
              {"learning_rate", c.learning_rate},
              {"seed", c.seed},
              {"share_inter_latent", c.share_inter_latent},
              {"concat_latent_output", c.concat_latent_output}};
}

edrl::EdrlConfig config_from_json(const json& j) {
  edrl::EdrlConfig c;
  c.hidden_multiplier = j.at("hidden_multiplier").get<int>();
  c.latent_multiplier = j.at("latent_multiplier").get<int>();
  c.kl_weight = j.at("kl_weight").get<double>();
  c.rho = j.at("rho").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.patience = j.at("patience").get<int>();
  c.min_delta = j.at("min_delta").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.share_inter_latent = j.at("share_inter_latent").get<bool>();
  c.concat_latent_output = j.at("concat_latent_output").get<bool>();
  return c;
}

}  // namespace

json edrl_to_json(const edrl::EdrlModel& model) {
  json blocks = json::array();
  for (const auto& block : model.blocks) {
    json b;
    b["intra"] = {{"encoder", layer_to_json(*block.intra.encoder)},
                  {"latent", layer_to_json(*block.intra.latent)},
                  {"decoder", layer_to_json(*block.intra.decoder)}};
    json inter;
    inter["encoder"] = layer_to_json(*block.inter.encoder);
    if (model.config.share_inter_latent)
      inter["latent"] = "shared";
    else
      inter["latent"] = layer_to_json(*block.inter.latent);
    inter["decoder"] = layer_to_json(*block.inter.decoder);
    b["inter"] = inter;
    b["fusion"] = layer_to_json(*block.fusion);
    blocks.push_back(b);
  }
  return json{{"format_version", kFormatVersion},
              {"kind", "edrl"},
              {"input_dim", model.input_dim},
              {"class_count", model.class_count},
              {"config", config_to_json(model.config)},
              {"shared_latent", layer_to_json(*model.shared_latent)},
              {"blocks", blocks},
              {"train_history", model.train_history},
              {"val_history", model.val_history},
              {"best_epoch", model.best_epoch},
              {"early_stopped", model.early_stopped}};
}

edrl::EdrlModel edrl_from_json(const json& j) {
  check_version(j, "edrl");
  edrl::EdrlModel model;
  model.input_dim = j.at("input_dim").get<int>();
  model.class_count = j.at("class_count").get<int>();
  model.config = config_from_json(j.at("config"));
  model.shared_latent =
      std::make_shared<nn::DenseLayer>(layer_from_json(j.at("shared_latent")));
  for (const auto& b : j.at("blocks")) {
    edrl::EmotionBlock block;
    block.intra.encoder =
        std::make_shared<nn::DenseLayer>(layer_from_json(b.at("intra").at("encoder")));
    block.intra.latent =
        std::make_shared<nn::DenseLayer>(layer_from_json(b.at("intra").at("latent")));
    block.intra.decoder =
        std::make_shared<nn::DenseLayer>(layer_from_json(b.at("intra").at("decoder")));
    block.inter.encoder =
        std::make_shared<nn::DenseLayer>(layer_from_json(b.at("inter").at("encoder")));
    const json& lat = b.at("inter").at("latent");
    block.inter.latent = lat.is_string()
                             ? model.shared_latent
                             : std::make_shared<nn::DenseLayer>(layer_from_json(lat));
    block.inter.decoder =
        std::make_shared<nn::DenseLayer>(layer_from_json(b.at("inter").at("decoder")));
    block.fusion = std::make_shared<nn::DenseLayer>(layer_from_json(b.at("fusion")));
    model.blocks.push_back(std::move(block));
  }
  model.train_history = j.at("train_history").get<std::vector<std::vector<double>>>();
  model.val_history = j.at("val_history").get<std::vector<std::vector<double>>>();
  model.best_epoch = j.at("best_epoch").get<int>();
  model.early_stopped = j.at("early_stopped").get<bool>();
  return model;
}

json mbpls_to_json(const mea::MbplsModel& model) {
  json scalings = json::array();
  for (const auto& s : model.block_scaling)
    scalings.push_back({{"mean", vector_to_json(s.mean)}, {"scale", vector_to_json(s.scale)}});
  json residuals = json::array();
  for (const auto& e : model.block_residuals) residuals.push_back(matrix_to_json(e));
  return json{{"format_version", kFormatVersion},
              {"kind", "mbpls"},
              {"n_blocks", model.n_blocks},
              {"block_dims", model.block_dims},
              {"response_dim", model.response_dim},
              {"components", model.components},
              {"super_scores", matrix_to_json(model.super_scores)},
              {"response_scores", matrix_to_json(model.response_scores)},
              {"block_loadings", matrix_to_json(model.block_loadings)},
              {"response_loadings", matrix_to_json(model.response_loadings)},
              {"block_weights", matrix_to_json(model.block_weights)},
              {"stacked_weights", matrix_to_json(model.stacked_weights)},
              {"super_weights", matrix_to_json(model.super_weights)},
              {"block_importance", matrix_to_json(model.block_importance)},
              {"beta", matrix_to_json(model.beta)},
              {"block_scaling", scalings},
              {"response_mean", vector_to_json(model.response_mean)},
              {"component_converged", model.component_converged},
              {"truncated", model.truncated},
              {"block_residuals", residuals},
              {"regression_residual", matrix_to_json(model.regression_residual)},
              {"response_residual", matrix_to_json(model.response_residual)}};
}

mea::MbplsModel mbpls_from_json(const json& j) {
  check_version(j, "mbpls");
  mea::MbplsModel m;
  m.n_blocks = j.at("n_blocks").get<int>();
  m.block_dims = j.at("block_dims").get<std::vector<int>>();
  m.response_dim = j.at("response_dim").get<int>();
  m.components = j.at("components").get<int>();
  m.super_scores = matrix_from_json(j.at("super_scores"));
  m.response_scores = matrix_from_json(j.at("response_scores"));
  m.block_loadings = matrix_from_json(j.at("block_loadings"));
  m.response_loadings = matrix_from_json(j.at("response_loadings"));
  m.block_weights = matrix_from_json(j.at("block_weights"));
  m.stacked_weights = matrix_from_json(j.at("stacked_weights"));
  m.super_weights = matrix_from_json(j.at("super_weights"));
  m.block_importance = matrix_from_json(j.at("block_importance"));
  m.beta = matrix_from_json(j.at("beta"));
  for (const auto& s : j.at("block_scaling"))
    m.block_scaling.push_back({vector_from_json(s.at("mean")), vector_from_json(s.at("scale"))});
  m.response_mean = vector_from_json(j.at("response_mean"));
  m.component_converged = j.at("component_converged").get<std::vector<bool>>();
  m.truncated = j.at("truncated").get<bool>();
  for (const auto& e : j.at("block_residuals")) m.block_residuals.push_back(matrix_from_json(e));
  m.regression_residual = matrix_from_json(j.at("regression_residual"));
  m.response_residual = matrix_from_json(j.at("response_residual"));
  return m;
}

json forest_to_json(const forest::RandomForestModel& model) {
  json trees = json::array();
  for (const auto& tree : model.trees) {
    json nodes = json::array();
    for (const auto& n : tree.nodes)
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"counts", n.class_counts}});
    trees.push_back({{"nodes", nodes}});
  }
  return json{{"format_version", kFormatVersion},
              {"kind", "random_forest"},
              {"n_estimators", model.params.n_estimators},
              {"max_depth", model.params.max_depth},
              {"n_features", model.n_features},
              {"features_per_split", model.features_per_split},
              {"seed", model.seed},
              {"class_labels", {"NEG", "POS"}},
              {"trees", trees}};
}

forest::RandomForestModel forest_from_json(const json& j) {
  check_version(j, "random_forest");
  forest::RandomForestModel m;
  m.params.n_estimators = j.at("n_estimators").get<int>();
  m.params.max_depth = j.at("max_depth").get<int>();
  m.n_features = j.at("n_features").get<int>();
  m.features_per_split = j.at("features_per_split").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& t : j.at("trees")) {
    forest::DecisionTree tree;
    for (const auto& n : t.at("nodes")) {
      forest::TreeNode node;
      node.feature = n.at("feature").get<int>();
      node.threshold = n.at("threshold").get<double>();
      node.left = n.at("left").get<int>();
      node.right = n.at("right").get<int>();
      node.class_counts = n.at("counts").get<std::array<std::int64_t, 2>>();
      tree.nodes.push_back(node);
    }
    m.trees.push_back(std::move(tree));
  }
  return m;
}

json stats_to_json(const dataio::CenterScaleStats& stats) {
  return json{{"mean", vector_to_json(stats.mean)},
              {"scale", vector_to_json(stats.scale)},
              {"with_scaling", stats.with_scaling},
              {"constant_columns", stats.constant_columns}};
}

dataio::CenterScaleStats stats_from_json(const json& j) {
  dataio::CenterScaleStats stats;
  stats.mean = vector_from_json(j.at("mean"));
  stats.scale = vector_from_json(j.at("scale"));
  stats.with_scaling = j.at("with_scaling").get<bool>();
  stats.constant_columns = j.at("constant_columns").get<std::vector<int>>();
  return stats;
}

void save_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  require(out.good(), Errc::IoError, "write failed for " + path.string());
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::IoError, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::InvalidConfig, "malformed JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

std::string string_hash(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string content_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::IoError, "cannot open " + path.string() + " for hashing");
  std::ostringstream ss;
  ss << in.rdbuf();
  return string_hash(ss.str());
}

}  // namespace edrlmea::serialize
