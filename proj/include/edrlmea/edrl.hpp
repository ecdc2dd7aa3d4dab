#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "edrlmea/nn.hpp"
#include "edrlmea/types.hpp"

namespace edrlmea::edrl {

struct EdrlConfig {
  int hidden_multiplier = 2;   // h = hidden_multiplier * N
  int latent_multiplier = 2;   // l = latent_multiplier * h
  double kl_weight = 0.1;
  double rho = 0.05;
  int batch_size = 32;
  int max_epochs = 500;
  int patience = 10;
  double min_delta = 1e-4;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  bool share_inter_latent = true;    // ablation switch
  bool concat_latent_output = false; // embed() yields [z_intra || z_inter] instead of fused
};

// Encoder -> latent -> decoder, all relu. The inter branch's latent layer is
// the one parameter set shared across every block.
struct BranchAutoencoder {
  std::shared_ptr<nn::DenseLayer> encoder;  // N -> h
  std::shared_ptr<nn::DenseLayer> latent;   // h -> l
  std::shared_ptr<nn::DenseLayer> decoder;  // l -> h
};

struct EmotionBlock {
  BranchAutoencoder intra;
  BranchAutoencoder inter;                 // inter.latent aliases the shared storage
  std::shared_ptr<nn::DenseLayer> fusion;  // 2h -> N, linear
};

struct EdrlModel {
  int input_dim = 0;
  int class_count = 0;
  EdrlConfig config;
  std::vector<EmotionBlock> blocks;
  std::shared_ptr<nn::DenseLayer> shared_latent;  // == blocks[c].inter.latent when sharing
  // per-epoch, per-block losses recorded during training
  std::vector<std::vector<double>> train_history;
  std::vector<std::vector<double>> val_history;
  int best_epoch = -1;
  bool early_stopped = false;
};

struct BlockOutputs {
  Matrix z_intra;  // n x l, latent activations
  Matrix z_inter;  // n x l
  Matrix fused;    // n x N
};

EdrlModel build_edrl(int input_dim, int class_count, const EdrlConfig& config);

BlockOutputs block_forward(const EmotionBlock& block, const Matrix& x);

nn::LossBreakdown block_loss(const Matrix& x, const BlockOutputs& outputs,
                             const EdrlConfig& config);

// One epoch of seeded minibatch updates for a single block: touches that
// block's private layers plus the shared inter latent, nothing else.
void train_block_epoch(EdrlModel& model, int block_index, const Matrix& data,
                       nn::AdamState& optimizer, int epoch);

// Alternating per-block epochs: within each epoch, block c runs its
// minibatches on X^c only, updating its private layers plus the shared
// inter latent. Early stopping watches the summed per-class validation loss;
// the best-epoch parameters are restored before returning.
void train_edrl(EdrlModel& model, const std::vector<Matrix>& per_class_train,
                const std::vector<Matrix>& per_class_val);

// Class-agnostic inference: every row through every block. Returns C
// matrices, each n x N (or n x 2l with concat_latent_output).
std::vector<Matrix> embed(const EdrlModel& model, const Matrix& x);

// Central-difference check of the full block loss (cosine + both KL taps)
// over all seven layer parameter sets; returns max relative error.
double block_finite_diff_check(EmotionBlock& block, const Matrix& x,
                               const EdrlConfig& config, double epsilon);

}  // namespace edrlmea::edrl
