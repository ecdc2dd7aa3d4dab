#pragma once

#include <vector>

#include "edrlmea/error.hpp"
#include "edrlmea/types.hpp"

namespace edrlmea::mea {

struct MbplsConfig {
  int components = 20;  // K
  int max_nipals_iters = 500;
  double tol = 1e-10;
  bool scale_blocks = true;  // blocks are always centered; unit variance when set
};

struct ColumnScaling {
  Vector mean;
  Vector scale;  // ones when scaling disabled
};

// Multiblock PLS fitted by NIPALS. Per component k: block weights w_b and
// block scores t_b = Z_b w_b; the super weight a combines the block scores
// into the super score t_sk; the response side supplies u_k. Blocks and
// response are deflated by t_sk against their loadings.
struct MbplsModel {
  int n_blocks = 0;
  std::vector<int> block_dims;
  int response_dim = 0;
  int components = 0;  // extracted; may be fewer than requested

  Matrix super_scores;       // T_s, n x K
  Matrix response_scores;    // U,   n x K
  Matrix block_loadings;     // P,   (sum dims) x K, stacked per block
  Matrix response_loadings;  // V,   response_dim x K
  Matrix block_weights;      // unit w_b stacked,   (sum dims) x K
  Matrix stacked_weights;    // a_b * w_b stacked,  (sum dims) x K
  Matrix super_weights;      // a,   C x K
  Matrix block_importance;   // a^2, C x K; columns sum to 1
  Matrix beta;               // (sum dims) x response_dim

  std::vector<ColumnScaling> block_scaling;
  Vector response_mean;

  std::vector<bool> component_converged;
  bool truncated = false;  // hit a degenerate direction before K components

  // training residuals, centered/scaled space
  std::vector<Matrix> block_residuals;  // E_c = Z_c - T_s P_c^T
  Matrix regression_residual;           // E   = X - T_s V^T
  Matrix response_residual;             // E_X = X - U V^T

  int total_block_dim() const {
    int total = 0;
    for (int d : block_dims) total += d;
    return total;
  }
};

MbplsModel fit_mbpls(const std::vector<Matrix>& blocks, const Matrix& response,
                     const MbplsConfig& config);

// state <- state - t p^T
void deflate(Matrix& state, const Vector& t, const Vector& p);

// Aligned embedding: center/scale the concatenated block row, multiply by
// beta, add back the response mean.
Vector predict(const MbplsModel& model, const std::vector<Vector>& block_rows);
Matrix predict(const MbplsModel& model, const std::vector<Matrix>& blocks);

struct ExplainedVariance {
  Matrix per_block;  // C x K, per-component fraction of block sum of squares
  Vector response;   // K
};
ExplainedVariance explained_variance(const MbplsModel& model);

}  // namespace edrlmea::mea
