#include "edrlmea/mea.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <string>

namespace edrlmea::mea {

namespace {

constexpr double kDegenerate = 1e-12;

// sign fixed so the largest-|entry| coordinate is positive
void orient_to_largest(Vector& v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v(imax) < 0.0) v = -v;
}

Vector dominant_left_singular_vector(const Matrix& m) {
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU);
  Vector u = svd.matrixU().col(0);
  orient_to_largest(u);
  return u;
}

ColumnScaling fit_scaling(const Matrix& m, bool with_scaling) {
  ColumnScaling s;
  s.mean = m.colwise().mean();
  s.scale = Vector::Ones(m.cols());
  if (with_scaling && m.rows() > 1) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double ss = (m.col(j).array() - s.mean(j)).square().sum();
      double sd = std::sqrt(ss / static_cast<double>(m.rows() - 1));
      s.scale(j) = sd < kDegenerate ? 1.0 : sd;
    }
  }
  return s;
}

Matrix apply_scaling(const ColumnScaling& s, const Matrix& m) {
  Matrix out = m.rowwise() - s.mean.transpose();
  out.array().rowwise() /= s.scale.transpose().array();
  return out;
}

}  // namespace

void deflate(Matrix& state, const Vector& t, const Vector& p) {
  require(state.rows() == t.size() && state.cols() == p.size(), Errc::ShapeMismatch,
          "deflation operands do not match the state shape");
  state.noalias() -= t * p.transpose();
}

MbplsModel fit_mbpls(const std::vector<Matrix>& blocks, const Matrix& response,
                     const MbplsConfig& config) {
  const int C = static_cast<int>(blocks.size());
  require(C >= 1, Errc::InvalidConfig, "need at least one predictor block");
  const Eigen::Index n = response.rows();
  require(n >= 2, Errc::TooFewRows, "need at least 2 training rows");

  int total_dim = 0;
  for (int b = 0; b < C; ++b) {
    require(blocks[b].rows() == n, Errc::ShapeMismatch,
            "block " + std::to_string(b) + " row count differs from the response");
    require(blocks[b].cols() >= 1, Errc::ShapeMismatch, "empty block");
    total_dim += static_cast<int>(blocks[b].cols());
  }
  const int k_max = static_cast<int>(std::min<Eigen::Index>(n - 1, total_dim));
  require(config.components >= 1 && config.components <= k_max, Errc::InvalidConfig,
          "components must lie in [1, min(n-1, total predictor columns)] = [1, " +
              std::to_string(k_max) + "]");

  MbplsModel model;
  model.n_blocks = C;
  model.response_dim = static_cast<int>(response.cols());
  for (const auto& blk : blocks) model.block_dims.push_back(static_cast<int>(blk.cols()));

  // centered/scaled working copies; Z0 kept for residual bookkeeping
  std::vector<Matrix> z(C);
  for (int b = 0; b < C; ++b) {
    model.block_scaling.push_back(fit_scaling(blocks[b], config.scale_blocks));
    z[b] = apply_scaling(model.block_scaling[b], blocks[b]);
  }
  model.response_mean = response.colwise().mean();
  Matrix f = response.rowwise() - model.response_mean.transpose();
  const Matrix response_centered = f;

  const int K = config.components;
  Matrix t_s(n, K), u_scores(n, K), p_load(total_dim, K);
  Matrix v_load(response.cols(), K);
  Matrix w_unit(total_dim, K), w_stack(total_dim, K);
  Matrix a_super(C, K);
  std::vector<bool> converged;

  std::vector<Eigen::Index> offsets(C);
  {
    Eigen::Index off = 0;
    for (int b = 0; b < C; ++b) {
      offsets[b] = off;
      off += blocks[b].cols();
    }
  }

  int extracted = 0;
  for (int k = 0; k < K; ++k) {
    if (f.norm() < kDegenerate) {
      model.truncated = true;
      break;
    }
    Vector u = dominant_left_singular_vector(f);

    Matrix block_scores(n, C);
    std::vector<Vector> wb(C);
    Vector a(C);
    Vector ts = Vector::Zero(n);
    Vector ts_prev;
    bool round_converged = false;
    bool degenerate = false;

    for (int iter = 0; iter < config.max_nipals_iters; ++iter) {
      for (int b = 0; b < C; ++b) {
        Vector w = z[b].transpose() * u;
        const double wn = w.norm();
        if (wn < kDegenerate) {
          degenerate = true;
          break;
        }
        wb[b] = w / wn;
        block_scores.col(b) = z[b] * wb[b];
      }
      if (degenerate) break;

      a = block_scores.transpose() * u;
      const double an = a.norm();
      if (an < kDegenerate) {
        degenerate = true;
        break;
      }
      a /= an;
      ts_prev = ts;
      ts = block_scores * a;

      Vector q = f.transpose() * ts;
      const double qn = q.norm();
      if (qn < kDegenerate) {
        degenerate = true;
        break;
      }
      q /= qn;
      u = f * q;

      if (iter > 0 && (ts - ts_prev).norm() < config.tol) {
        round_converged = true;
        break;
      }
    }

    const double tss = ts.squaredNorm();
    if (degenerate || tss < kDegenerate) {
      model.truncated = true;
      break;
    }

    // loadings against the current deflated state
    Vector p(total_dim);
    for (int b = 0; b < C; ++b)
      p.segment(offsets[b], blocks[b].cols()) = z[b].transpose() * ts / tss;
    Vector v = f.transpose() * ts / tss;

    t_s.col(k) = ts;
    u_scores.col(k) = u;
    p_load.col(k) = p;
    v_load.col(k) = v;
    a_super.col(k) = a;
    for (int b = 0; b < C; ++b) {
      w_unit.col(k).segment(offsets[b], blocks[b].cols()) = wb[b];
      w_stack.col(k).segment(offsets[b], blocks[b].cols()) = a(b) * wb[b];
    }
    converged.push_back(round_converged);

    for (int b = 0; b < C; ++b)
      z[b].noalias() -= ts * p.segment(offsets[b], blocks[b].cols()).transpose();
    f.noalias() -= ts * v.transpose();
    ++extracted;
  }

  require(extracted >= 1, Errc::InvalidConfig,
          "could not extract any component (degenerate inputs)");

  model.components = extracted;
  model.super_scores = t_s.leftCols(extracted);
  model.response_scores = u_scores.leftCols(extracted);
  model.block_loadings = p_load.leftCols(extracted);
  model.response_loadings = v_load.leftCols(extracted);
  model.block_weights = w_unit.leftCols(extracted);
  model.stacked_weights = w_stack.leftCols(extracted);
  model.super_weights = a_super.leftCols(extracted);
  model.component_converged = converged;

  // reproducible sign: flip each component so v_k's largest-|entry| is positive
  for (int k = 0; k < extracted; ++k) {
    Eigen::Index imax = 0;
    model.response_loadings.col(k).cwiseAbs().maxCoeff(&imax);
    if (model.response_loadings.col(k)(imax) < 0.0) {
      model.response_loadings.col(k) *= -1.0;
      model.block_loadings.col(k) *= -1.0;
      model.super_scores.col(k) *= -1.0;
      model.response_scores.col(k) *= -1.0;
      model.block_weights.col(k) *= -1.0;
      model.stacked_weights.col(k) *= -1.0;
      model.super_weights.col(k) *= -1.0;
    }
  }

  model.block_importance = model.super_weights.cwiseProduct(model.super_weights);

  // beta = W~ (P^T W~)^-1 V^T reproduces T_s V^T on the centered training data
  Matrix pw = model.block_loadings.transpose() * model.stacked_weights;
  Matrix beta_core = Eigen::CompleteOrthogonalDecomposition<Matrix>(pw).solve(
      model.response_loadings.transpose());
  model.beta = model.stacked_weights * beta_core;

  model.block_residuals = std::move(z);
  model.regression_residual = std::move(f);
  model.response_residual =
      response_centered - model.response_scores * model.response_loadings.transpose();
  return model;
}

Matrix predict(const MbplsModel& model, const std::vector<Matrix>& blocks) {
  require(static_cast<int>(blocks.size()) == model.n_blocks, Errc::ShapeMismatch,
          "expected " + std::to_string(model.n_blocks) + " blocks");
  const Eigen::Index n = blocks.front().rows();
  Matrix stacked(n, model.total_block_dim());
  Eigen::Index off = 0;
  for (int b = 0; b < model.n_blocks; ++b) {
    require(blocks[b].cols() == model.block_dims[b], Errc::ShapeMismatch,
            "block " + std::to_string(b) + " width mismatch");
    require(blocks[b].rows() == n, Errc::ShapeMismatch, "block row counts differ");
    stacked.middleCols(off, model.block_dims[b]) =
        apply_scaling(model.block_scaling[b], blocks[b]);
    off += model.block_dims[b];
  }
  Matrix out = stacked * model.beta;
  out.rowwise() += model.response_mean.transpose();
  return out;
}

Vector predict(const MbplsModel& model, const std::vector<Vector>& block_rows) {
  std::vector<Matrix> blocks;
  blocks.reserve(block_rows.size());
  for (const auto& row : block_rows) blocks.push_back(row.transpose());
  return predict(model, blocks).row(0).transpose();
}

ExplainedVariance explained_variance(const MbplsModel& model) {
  ExplainedVariance ev;
  const int C = model.n_blocks;
  const int K = model.components;
  ev.per_block = Matrix::Zero(C, K);
  ev.response = Vector::Zero(K);

  // total SS of the centered/scaled training data, reconstructed from the
  // orthogonal decomposition: sum_k |t|^2 |p|^2 + |E|^2
  Eigen::Index off = 0;
  for (int b = 0; b < C; ++b) {
    const int dim = model.block_dims[b];
    double total = model.block_residuals[b].squaredNorm();
    Vector comp(K);
    for (int k = 0; k < K; ++k) {
      comp(k) = model.super_scores.col(k).squaredNorm() *
                model.block_loadings.col(k).segment(off, dim).squaredNorm();
      total += comp(k);
    }
    if (total > 0.0) ev.per_block.row(b) = (comp / total).transpose();
    off += dim;
  }

  double total_resp = model.regression_residual.squaredNorm();
  Vector comp(K);
  for (int k = 0; k < K; ++k) {
    comp(k) = model.super_scores.col(k).squaredNorm() *
              model.response_loadings.col(k).squaredNorm();
    total_resp += comp(k);
  }
  if (total_resp > 0.0) ev.response = comp / total_resp;
  return ev;
}

}  // namespace edrlmea::mea
