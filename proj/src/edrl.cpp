#include "edrlmea/edrl.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace edrlmea::edrl {

namespace {

using nn::DenseLayer;
using nn::LayerCache;
using nn::LayerGrads;

struct BlockCache {
  LayerCache intra_enc, intra_lat, intra_dec;
  LayerCache inter_enc, inter_lat, inter_dec;
  LayerCache fusion;
};

struct BlockGrads {
  LayerGrads intra_enc, intra_lat, intra_dec;
  LayerGrads inter_enc, inter_lat, inter_dec;
  LayerGrads fusion;
};

BlockOutputs forward_with_cache(const EmotionBlock& block, const Matrix& x,
                                BlockCache* cache) {
  auto run = [&](const BranchAutoencoder& branch, LayerCache& enc, LayerCache& lat,
                 LayerCache& dec) {
    enc = nn::forward_cached(*branch.encoder, x);
    lat = nn::forward_cached(*branch.latent, enc.output);
    dec = nn::forward_cached(*branch.decoder, lat.output);
  };
  BlockCache local;
  BlockCache& c = cache ? *cache : local;
  run(block.intra, c.intra_enc, c.intra_lat, c.intra_dec);
  run(block.inter, c.inter_enc, c.inter_lat, c.inter_dec);

  Matrix concat(x.rows(), c.intra_dec.output.cols() + c.inter_dec.output.cols());
  concat << c.intra_dec.output, c.inter_dec.output;
  c.fusion = nn::forward_cached(*block.fusion, concat);

  BlockOutputs out;
  out.z_intra = c.intra_lat.output;
  out.z_inter = c.inter_lat.output;
  out.fused = c.fusion.output;
  return out;
}

// Backward through fusion, both decoders, latents (adding the KL taps) and
// encoders. grad_fused comes from the cosine term; grad_z_* from the KL
// terms, already weighted.
BlockGrads backward_block(const EmotionBlock& block, const BlockCache& cache,
                          const Matrix& grad_fused, const Matrix& grad_z_intra,
                          const Matrix& grad_z_inter) {
  BlockGrads g;
  Matrix grad_concat = nn::backward_layer(*block.fusion, cache.fusion, grad_fused, g.fusion);
  const Eigen::Index h = cache.intra_dec.output.cols();
  Matrix grad_dec_intra = grad_concat.leftCols(h);
  Matrix grad_dec_inter = grad_concat.rightCols(grad_concat.cols() - h);

  auto run = [&](const BranchAutoencoder& branch, const LayerCache& enc,
                 const LayerCache& lat, const LayerCache& dec, const Matrix& grad_dec_out,
                 const Matrix& grad_latent_tap, LayerGrads& genc, LayerGrads& glat,
                 LayerGrads& gdec) {
    Matrix grad_z = nn::backward_layer(*branch.decoder, dec, grad_dec_out, gdec);
    grad_z += grad_latent_tap;
    Matrix grad_enc_out = nn::backward_layer(*branch.latent, lat, grad_z, glat);
    nn::backward_layer(*branch.encoder, enc, grad_enc_out, genc);
  };
  run(block.intra, cache.intra_enc, cache.intra_lat, cache.intra_dec, grad_dec_intra,
      grad_z_intra, g.intra_enc, g.intra_lat, g.intra_dec);
  run(block.inter, cache.inter_enc, cache.inter_lat, cache.inter_dec, grad_dec_inter,
      grad_z_inter, g.inter_enc, g.inter_lat, g.inter_dec);
  return g;
}

struct LossWithGrads {
  nn::LossBreakdown breakdown;
  BlockGrads grads;
};

LossWithGrads loss_and_grads(const EmotionBlock& block, const Matrix& x,
                             const EdrlConfig& config) {
  BlockCache cache;
  BlockOutputs out = forward_with_cache(block, x, &cache);
  nn::CosineLoss cos = nn::cosine_loss(x, out.fused);
  nn::KlLoss kl_intra = nn::kl_sparsity(out.z_intra, config.rho);
  nn::KlLoss kl_inter = nn::kl_sparsity(out.z_inter, config.rho);

  LossWithGrads result;
  result.breakdown.cosine_term = cos.value;
  result.breakdown.kl_term = kl_intra.value + kl_inter.value;
  result.breakdown.total = cos.value + config.kl_weight * result.breakdown.kl_term;
  result.grads = backward_block(block, cache, cos.grad,
                                config.kl_weight * kl_intra.grad,
                                config.kl_weight * kl_inter.grad);
  return result;
}

std::vector<DenseLayer*> block_layers(EmotionBlock& block) {
  return {block.intra.encoder.get(), block.intra.latent.get(), block.intra.decoder.get(),
          block.inter.encoder.get(), block.inter.latent.get(), block.inter.decoder.get(),
          block.fusion.get()};
}

std::vector<nn::ParamView> block_params(EmotionBlock& block) {
  std::vector<nn::ParamView> views;
  for (DenseLayer* layer : block_layers(block)) {
    views.push_back(nn::flat(layer->weights));
    views.push_back(nn::flat(layer->bias));
  }
  return views;
}

std::vector<nn::GradView> grad_views(const BlockGrads& g) {
  std::vector<nn::GradView> views;
  for (const LayerGrads* lg : {&g.intra_enc, &g.intra_lat, &g.intra_dec, &g.inter_enc,
                               &g.inter_lat, &g.inter_dec, &g.fusion}) {
    views.push_back(nn::flat(lg->weights));
    views.push_back(nn::flat(lg->bias));
  }
  return views;
}

}  // namespace

EdrlModel build_edrl(int input_dim, int class_count, const EdrlConfig& config) {
  require(input_dim >= 1, Errc::InvalidConfig, "input_dim must be >= 1");
  require(class_count >= 2, Errc::InvalidConfig,
          "need at least 2 emotion classes, got " + std::to_string(class_count));
  require(config.hidden_multiplier >= 1 && config.latent_multiplier >= 1, Errc::InvalidConfig,
          "layer multipliers must be positive");

  const Eigen::Index n = input_dim;
  const Eigen::Index h = static_cast<Eigen::Index>(config.hidden_multiplier) * n;
  const Eigen::Index l = static_cast<Eigen::Index>(config.latent_multiplier) * h;

  EdrlModel model;
  model.input_dim = input_dim;
  model.class_count = class_count;
  model.config = config;

  auto layer = [&](Eigen::Index in, Eigen::Index out, nn::Activation act, std::uint64_t salt) {
    Rng rng = Rng::derive(config.seed, {0xed71, salt});
    return std::make_shared<DenseLayer>(nn::make_layer(in, out, act, rng));
  };

  model.shared_latent = layer(h, l, nn::Activation::Relu, 0xffff);

  for (int c = 0; c < class_count; ++c) {
    const std::uint64_t base = static_cast<std::uint64_t>(c) * 16;
    EmotionBlock block;
    block.intra.encoder = layer(n, h, nn::Activation::Relu, base + 1);
    block.intra.latent = layer(h, l, nn::Activation::Relu, base + 2);
    block.intra.decoder = layer(l, h, nn::Activation::Relu, base + 3);
    block.inter.encoder = layer(n, h, nn::Activation::Relu, base + 4);
    block.inter.latent = config.share_inter_latent
                             ? model.shared_latent
                             : layer(h, l, nn::Activation::Relu, base + 5);
    block.inter.decoder = layer(l, h, nn::Activation::Relu, base + 6);
    block.fusion = layer(2 * h, n, nn::Activation::Linear, base + 7);
    model.blocks.push_back(std::move(block));
  }
  return model;
}

BlockOutputs block_forward(const EmotionBlock& block, const Matrix& x) {
  return forward_with_cache(block, x, nullptr);
}

nn::LossBreakdown block_loss(const Matrix& x, const BlockOutputs& outputs,
                             const EdrlConfig& config) {
  require(x.rows() == outputs.fused.rows() && x.cols() == outputs.fused.cols(),
          Errc::ShapeMismatch, "outputs do not match the input batch");
  nn::LossBreakdown breakdown;
  breakdown.cosine_term = nn::cosine_loss(x, outputs.fused).value;
  breakdown.kl_term = nn::kl_sparsity(outputs.z_intra, config.rho).value +
                      nn::kl_sparsity(outputs.z_inter, config.rho).value;
  breakdown.total = breakdown.cosine_term + config.kl_weight * breakdown.kl_term;
  return breakdown;
}

void train_block_epoch(EdrlModel& model, int block_index, const Matrix& data,
                       nn::AdamState& optimizer, int epoch) {
  require(block_index >= 0 && block_index < model.class_count, Errc::InvalidConfig,
          "block index out of range");
  require(data.rows() >= 1, Errc::EmptyDataset, "empty class partition");
  require(data.cols() == model.input_dim, Errc::ShapeMismatch,
          "class partition width != model input dim");
  const EdrlConfig& cfg = model.config;
  const std::size_t n = static_cast<std::size_t>(data.rows());
  Rng order_rng = Rng::derive(cfg.seed, {0xba7c4, static_cast<std::uint64_t>(epoch),
                                         static_cast<std::uint64_t>(block_index)});
  std::vector<std::size_t> order = order_rng.permutation(n);
  const std::size_t bs = static_cast<std::size_t>(std::max(cfg.batch_size, 1));
  for (std::size_t start = 0; start < n; start += bs) {
    const std::size_t len = std::min(bs, n - start);
    Matrix batch(static_cast<Eigen::Index>(len), data.cols());
    for (std::size_t i = 0; i < len; ++i)
      batch.row(static_cast<Eigen::Index>(i)) =
          data.row(static_cast<Eigen::Index>(order[start + i]));
    LossWithGrads lg = loss_and_grads(model.blocks[block_index], batch, cfg);
    nn::adam_step(optimizer, block_params(model.blocks[block_index]), grad_views(lg.grads));
  }
}

void train_edrl(EdrlModel& model, const std::vector<Matrix>& per_class_train,
                const std::vector<Matrix>& per_class_val) {
  const int C = model.class_count;
  require(static_cast<int>(per_class_train.size()) == C &&
              static_cast<int>(per_class_val.size()) == C,
          Errc::ShapeMismatch, "need one train and one validation partition per class");
  for (int c = 0; c < C; ++c) {
    require(per_class_train[c].rows() >= 1 && per_class_val[c].rows() >= 1,
            Errc::EmptyDataset, "class " + std::to_string(c) + " has an empty partition");
    require(per_class_train[c].cols() == model.input_dim &&
                per_class_val[c].cols() == model.input_dim,
            Errc::ShapeMismatch, "class partition width != model input dim");
  }

  const EdrlConfig& cfg = model.config;
  nn::AdamConfig adam_cfg;
  adam_cfg.learning_rate = cfg.learning_rate;
  std::vector<nn::AdamState> optimizers(C, nn::AdamState{adam_cfg});

  model.train_history.clear();
  model.val_history.clear();
  model.best_epoch = -1;
  model.early_stopped = false;

  auto validation_total = [&]() {
    double total = 0.0;
    for (int c = 0; c < C; ++c)
      total += block_loss(per_class_val[c],
                          block_forward(model.blocks[c], per_class_val[c]), cfg)
                   .total;
    return total;
  };

  // Snapshot keyed by storage so the shared latent is captured once and
  // restored in place (aliasing preserved).
  auto snapshot = [&]() {
    std::map<DenseLayer*, DenseLayer> copy;
    for (auto& block : model.blocks)
      for (DenseLayer* layer : block_layers(block)) copy.emplace(layer, *layer);
    return copy;
  };
  auto restore = [&](const std::map<DenseLayer*, DenseLayer>& copy) {
    for (const auto& [ptr, value] : copy) *ptr = value;
  };

  double best_val = std::numeric_limits<double>::infinity();
  std::map<DenseLayer*, DenseLayer> best_params = snapshot();
  int bad_epochs = 0;
  const int patience_window = std::max(cfg.patience, 1);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    // blocks visited in class order; each sees only its own class's rows
    for (int c = 0; c < C; ++c)
      train_block_epoch(model, c, per_class_train[c], optimizers[c], epoch);

    std::vector<double> epoch_train(C), epoch_val(C);
    for (int c = 0; c < C; ++c) {
      epoch_train[c] = block_loss(per_class_train[c],
                                  block_forward(model.blocks[c], per_class_train[c]), cfg)
                           .total;
      epoch_val[c] = block_loss(per_class_val[c],
                                block_forward(model.blocks[c], per_class_val[c]), cfg)
                         .total;
    }
    model.train_history.push_back(epoch_train);
    model.val_history.push_back(epoch_val);

    double val_total = 0.0;
    for (double v : epoch_val) val_total += v;

    if (val_total < best_val - cfg.min_delta) {
      best_val = val_total;
      best_params = snapshot();
      model.best_epoch = epoch;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs >= patience_window) {
        model.early_stopped = true;
        break;
      }
    }
  }
  restore(best_params);
  if (model.best_epoch < 0) model.best_epoch = 0;
}

std::vector<Matrix> embed(const EdrlModel& model, const Matrix& x) {
  require(x.cols() == model.input_dim, Errc::ShapeMismatch,
          "input width " + std::to_string(x.cols()) + " != model input dim " +
              std::to_string(model.input_dim));
  std::vector<Matrix> outputs;
  outputs.reserve(model.blocks.size());
  for (const auto& block : model.blocks) {
    BlockOutputs out = block_forward(block, x);
    if (model.config.concat_latent_output) {
      Matrix concat(x.rows(), out.z_intra.cols() + out.z_inter.cols());
      concat << out.z_intra, out.z_inter;
      outputs.push_back(std::move(concat));
    } else {
      outputs.push_back(std::move(out.fused));
    }
  }
  return outputs;
}

double block_finite_diff_check(EmotionBlock& block, const Matrix& x,
                               const EdrlConfig& config, double epsilon) {
  require(epsilon > 0.0, Errc::InvalidEpsilon, "epsilon must be positive");
  LossWithGrads at_point = loss_and_grads(block, x, config);
  std::vector<nn::GradView> analytic = grad_views(at_point.grads);
  std::vector<nn::ParamView> params = block_params(block);

  auto total_loss = [&]() {
    BlockOutputs out = block_forward(block, x);
    return block_loss(x, out, config).total;
  };

  double max_rel = 0.0;
  for (std::size_t slot = 0; slot < params.size(); ++slot) {
    for (Eigen::Index i = 0; i < params[slot].size; ++i) {
      double& param = params[slot].data[i];
      const double saved = param;
      param = saved + epsilon;
      const double plus = total_loss();
      param = saved - epsilon;
      const double minus = total_loss();
      param = saved;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      max_rel = std::max(max_rel, nn::relative_error(analytic[slot].data[i], numeric));
    }
  }
  return max_rel;
}

}  // namespace edrlmea::edrl
