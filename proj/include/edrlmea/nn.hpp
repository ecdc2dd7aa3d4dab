#pragma once

#include <functional>
#include <vector>

#include "edrlmea/error.hpp"
#include "edrlmea/rng.hpp"
#include "edrlmea/types.hpp"

namespace edrlmea::nn {

enum class Activation { Relu, Linear };

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::Relu;

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }
};

// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero bias.
DenseLayer make_layer(Eigen::Index in, Eigen::Index out, Activation act, Rng& rng);

// rows = activation(batch * W^T + b); batch is n x in
Matrix forward(const DenseLayer& layer, const Matrix& batch);

struct LayerCache {
  Matrix input;  // n x in
  Matrix pre;    // n x out, pre-activation
  Matrix output; // n x out
};

LayerCache forward_cached(const DenseLayer& layer, const Matrix& batch);

struct LayerGrads {
  Matrix weights;
  Vector bias;
};

// Given dL/d(output), accumulates parameter gradients and returns dL/d(input).
// Relu sub-gradient at exactly 0 is 0.
Matrix backward_layer(const DenseLayer& layer, const LayerCache& cache,
                      const Matrix& grad_output, LayerGrads& grads);

// Plain feed-forward stack; the generic substrate for the gradient checker
// and tests. The per-class blocks wire layers themselves.
struct DenseStack {
  std::vector<DenseLayer> layers;
};

struct StackCache {
  std::vector<LayerCache> layers;
};

Matrix stack_forward(const DenseStack& net, const Matrix& batch, StackCache* cache = nullptr);

// Exact reverse-mode gradients of the loss whose output-gradient is given.
// Requires the cache produced by stack_forward.
std::vector<LayerGrads> stack_backward(const DenseStack& net, const StackCache& cache,
                                       const Matrix& loss_grad);

struct LossValueGrad {
  double value = 0.0;
  Matrix grad;  // w.r.t. the prediction
};

// 1 - (x . x_hat)/(|x||x_hat|) per row, averaged over the batch.
// |x_hat| below 1e-12 is clamped to 1e-12 and flagged via `clamped`.
struct CosineLoss {
  double value = 0.0;
  Matrix grad;
  bool clamped = false;
};
CosineLoss cosine_loss(const Matrix& x, const Matrix& x_hat);

// Bernoulli sparsity KL on logistic-squashed activations:
//   sum_j rho*log(rho/rho_hat_j) + (1-rho)*log((1-rho)/(1-rho_hat_j)),
// rho_hat_j = batch mean of sigmoid(latent(:,j)), clamped to [1e-7, 1-1e-7].
struct KlLoss {
  double value = 0.0;
  Matrix grad;  // w.r.t. the raw latent batch
  bool clamped = false;
};
KlLoss kl_sparsity(const Matrix& latent_batch, double rho);

struct LossBreakdown {
  double cosine_term = 0.0;
  double kl_term = 0.0;  // unweighted
  double total = 0.0;    // cosine_term + kl_weight * kl_term
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moments are stored flat, one slot per registered parameter tensor, lazily
// sized on the first step.
struct AdamState {
  AdamConfig config{};
  long step_count = 0;
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;
};

struct ParamView {
  double* data = nullptr;
  Eigen::Index size = 0;
};
struct GradView {
  const double* data = nullptr;
  Eigen::Index size = 0;
  GradView() = default;
  GradView(const double* d, Eigen::Index s) : data(d), size(s) {}
  GradView(const ParamView& p) : data(p.data), size(p.size) {}  // NOLINT(implicit)
};

inline ParamView flat(Matrix& m) { return {m.data(), m.size()}; }
inline ParamView flat(Vector& v) { return {v.data(), v.size()}; }
inline GradView flat(const Matrix& m) { return {m.data(), m.size()}; }
inline GradView flat(const Vector& v) { return {v.data(), v.size()}; }

// Standard bias-corrected Adam over an ordered parameter list. The slot
// order must stay stable across steps.
void adam_step(AdamState& state, const std::vector<ParamView>& params,
               const std::vector<GradView>& grads);

// Central-difference check of stack_backward against `loss` over every
// parameter; returns the max relative error.
using LossFn = std::function<LossValueGrad(const Matrix& output)>;
double finite_diff_check(DenseStack& net, const Matrix& batch, double epsilon,
                         const LossFn& loss);

// shared helper for gradient comparison: |a-b| / max(1e-8, |a|+|b|)
inline double relative_error(double analytic, double numeric) {
  double denom = std::abs(analytic) + std::abs(numeric);
  return std::abs(analytic - numeric) / std::max(1e-8, denom);
}

}  // namespace edrlmea::nn
