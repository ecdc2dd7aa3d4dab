#include "edrlmea/nn.hpp"

#include <cmath>

namespace edrlmea::nn {

namespace {

constexpr double kNormClamp = 1e-12;
constexpr double kRhoClampLo = 1e-7;
constexpr double kRhoClampHi = 1.0 - 1e-7;

Matrix apply_activation(Activation act, const Matrix& pre) {
  if (act == Activation::Linear) return pre;
  return pre.cwiseMax(0.0);
}

// derivative w.r.t. pre-activation; relu'(0) := 0
Matrix activation_grad(Activation act, const Matrix& pre) {
  if (act == Activation::Linear) return Matrix::Ones(pre.rows(), pre.cols());
  return (pre.array() > 0.0).cast<double>();
}

}  // namespace

DenseLayer make_layer(Eigen::Index in, Eigen::Index out, Activation act, Rng& rng) {
  require(in >= 1 && out >= 1, Errc::InvalidConfig, "layer dims must be positive");
  DenseLayer layer;
  layer.activation = act;
  layer.weights.resize(out, in);
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  // fill in a fixed (row-major) order so the draw sequence is stable
  for (Eigen::Index r = 0; r < out; ++r)
    for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = rng.uniform(-bound, bound);
  layer.bias = Vector::Zero(out);
  return layer;
}

Matrix forward(const DenseLayer& layer, const Matrix& batch) {
  require(batch.cols() == layer.in_dim(), Errc::ShapeMismatch,
          "batch width " + std::to_string(batch.cols()) + " != layer input dim " +
              std::to_string(layer.in_dim()));
  Matrix pre = batch * layer.weights.transpose();
  pre.rowwise() += layer.bias.transpose();
  return apply_activation(layer.activation, pre);
}

LayerCache forward_cached(const DenseLayer& layer, const Matrix& batch) {
  require(batch.cols() == layer.in_dim(), Errc::ShapeMismatch,
          "batch width does not match layer input dim");
  LayerCache cache;
  cache.input = batch;
  cache.pre = batch * layer.weights.transpose();
  cache.pre.rowwise() += layer.bias.transpose();
  cache.output = apply_activation(layer.activation, cache.pre);
  return cache;
}

Matrix backward_layer(const DenseLayer& layer, const LayerCache& cache,
                      const Matrix& grad_output, LayerGrads& grads) {
  require(cache.input.size() > 0, Errc::MissingCache, "forward cache missing");
  require(grad_output.rows() == cache.pre.rows() && grad_output.cols() == cache.pre.cols(),
          Errc::ShapeMismatch, "grad_output shape does not match cached forward pass");
  Matrix grad_pre = grad_output.cwiseProduct(activation_grad(layer.activation, cache.pre));
  grads.weights = grad_pre.transpose() * cache.input;
  grads.bias = grad_pre.colwise().sum().transpose();
  return grad_pre * layer.weights;
}

Matrix stack_forward(const DenseStack& net, const Matrix& batch, StackCache* cache) {
  Matrix current = batch;
  if (cache) cache->layers.clear();
  for (const auto& layer : net.layers) {
    if (cache) {
      cache->layers.push_back(forward_cached(layer, current));
      current = cache->layers.back().output;
    } else {
      current = forward(layer, current);
    }
  }
  return current;
}

std::vector<LayerGrads> stack_backward(const DenseStack& net, const StackCache& cache,
                                       const Matrix& loss_grad) {
  require(cache.layers.size() == net.layers.size(), Errc::MissingCache,
          "cache does not match the layer stack");
  std::vector<LayerGrads> grads(net.layers.size());
  Matrix upstream = loss_grad;
  for (std::size_t i = net.layers.size(); i-- > 0;)
    upstream = backward_layer(net.layers[i], cache.layers[i], upstream, grads[i]);
  return grads;
}

CosineLoss cosine_loss(const Matrix& x, const Matrix& x_hat) {
  require(x.rows() == x_hat.rows() && x.cols() == x_hat.cols(), Errc::ShapeMismatch,
          "cosine loss operands must have identical shape");
  require(x.rows() >= 1, Errc::EmptyDataset, "cosine loss needs at least one row");
  CosineLoss result;
  result.grad = Matrix::Zero(x.rows(), x.cols());
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  double total = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double nx = x.row(r).norm();
    require(nx > 0.0, Errc::SilentSignal, "cosine loss target row has zero norm");
    double nh = x_hat.row(r).norm();
    if (nh < kNormClamp) {
      nh = kNormClamp;
      result.clamped = true;
    }
    const double dot = x.row(r).dot(x_hat.row(r));
    const double cosine = dot / (nx * nh);
    total += 1.0 - cosine;
    // d(1 - cos)/d x_hat = -x/(|x||x_hat|) + cos * x_hat/|x_hat|^2
    result.grad.row(r) =
        inv_n * (-x.row(r) / (nx * nh) + (cosine / (nh * nh)) * x_hat.row(r));
  }
  result.value = total * inv_n;
  return result;
}

KlLoss kl_sparsity(const Matrix& latent_batch, double rho) {
  require(rho > 0.0 && rho < 1.0, Errc::InvalidConfig, "rho must lie in (0,1)");
  require(latent_batch.rows() >= 1, Errc::EmptyDataset, "KL needs at least one row");
  KlLoss result;
  const Eigen::Index n = latent_batch.rows();
  const Eigen::Index units = latent_batch.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  Matrix squashed = (1.0 + (-latent_batch.array()).exp()).inverse();
  Vector rho_hat = squashed.colwise().mean();

  result.grad = Matrix::Zero(n, units);
  double total = 0.0;
  for (Eigen::Index j = 0; j < units; ++j) {
    double rh = rho_hat(j);
    bool clamped = false;
    if (rh < kRhoClampLo) { rh = kRhoClampLo; clamped = true; }
    if (rh > kRhoClampHi) { rh = kRhoClampHi; clamped = true; }
    result.clamped = result.clamped || clamped;
    total += rho * std::log(rho / rh) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - rh));
    if (clamped) continue;  // derivative through an active clamp is zero
    const double dkl = -rho / rh + (1.0 - rho) / (1.0 - rh);
    // d rho_hat_j / d z_ij = sigmoid'(z_ij) / n
    result.grad.col(j) =
        dkl * inv_n * (squashed.col(j).array() * (1.0 - squashed.col(j).array())).matrix();
  }
  result.value = total;
  return result;
}

void adam_step(AdamState& state, const std::vector<ParamView>& params,
               const std::vector<GradView>& grads) {
  require(params.size() == grads.size(), Errc::ShapeMismatch,
          "params and grads must pair up");
  if (state.first_moment.empty()) {
    state.first_moment.resize(params.size());
    state.second_moment.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.first_moment[i] = Vector::Zero(params[i].size);
      state.second_moment[i] = Vector::Zero(params[i].size);
    }
  }
  require(state.first_moment.size() == params.size(), Errc::ShapeMismatch,
          "parameter list changed between steps");

  for (std::size_t i = 0; i < grads.size(); ++i) {
    require(params[i].size == grads[i].size, Errc::ShapeMismatch, "grad size mismatch");
    Eigen::Map<const Vector> g(grads[i].data, grads[i].size);
    if (!g.allFinite()) fail(Errc::NonFiniteGradient, "gradient contains NaN/Inf");
  }

  const auto& cfg = state.config;
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count));

  for (std::size_t i = 0; i < params.size(); ++i) {
    require(state.first_moment[i].size() == params[i].size, Errc::ShapeMismatch,
            "moment shape does not match parameter shape");
    Eigen::Map<Vector> p(params[i].data, params[i].size);
    Eigen::Map<const Vector> g(grads[i].data, grads[i].size);
    Vector& m = state.first_moment[i];
    Vector& v = state.second_moment[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    p.array() -= cfg.learning_rate * (m.array() / bc1) /
                 ((v.array() / bc2).sqrt() + cfg.epsilon);
  }
}

double finite_diff_check(DenseStack& net, const Matrix& batch, double epsilon,
                         const LossFn& loss) {
  require(epsilon > 0.0, Errc::InvalidEpsilon, "epsilon must be positive");

  StackCache cache;
  Matrix out = stack_forward(net, batch, &cache);
  LossValueGrad at_point = loss(out);
  std::vector<LayerGrads> analytic = stack_backward(net, cache, at_point.grad);

  auto loss_value = [&]() { return loss(stack_forward(net, batch)).value; };

  double max_rel = 0.0;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    DenseLayer& layer = net.layers[li];
    auto probe = [&](double& param, double analytic_grad) {
      const double saved = param;
      param = saved + epsilon;
      const double plus = loss_value();
      param = saved - epsilon;
      const double minus = loss_value();
      param = saved;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      max_rel = std::max(max_rel, relative_error(analytic_grad, numeric));
    };
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        probe(layer.weights(r, c), analytic[li].weights(r, c));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
      probe(layer.bias(r), analytic[li].bias(r));
  }
  return max_rel;
}

}  // namespace edrlmea::nn
