#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "edrlmea/dataio.hpp"
#include "edrlmea/rng.hpp"
#include "edrlmea/types.hpp"

namespace edrlmea::forest {

using dataio::BinaryLabel;

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::array<std::int64_t, 2> class_counts{0, 0};  // [Neg, Pos], leaves only
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestParams {
  int n_estimators = 100;
  int max_depth = 0;  // 0 = unlimited
};

struct RandomForestModel {
  std::vector<DecisionTree> trees;
  ForestParams params;
  int n_features = 0;
  int features_per_split = 0;  // ceil(sqrt(N))
  std::uint64_t seed = 0;
};

// Bagged CART: per tree a bootstrap of n draws with replacement, Gini splits
// over ceil(sqrt(N)) candidate features per node, growth stops at max_depth,
// purity, or < 2 samples. Deterministic given the seed.
RandomForestModel fit_forest(const Matrix& features, const std::vector<BinaryLabel>& labels,
                             const ForestParams& params, std::uint64_t seed);
RandomForestModel fit_forest(const dataio::LabeledDataset& data, const ForestParams& params,
                             std::uint64_t seed);

// Test seam: grow a single tree on explicit bootstrap rows.
DecisionTree fit_tree(const Matrix& features, const std::vector<BinaryLabel>& labels,
                      const std::vector<std::size_t>& bootstrap_rows,
                      const ForestParams& params, int features_per_split, Rng& rng);

struct Prediction {
  BinaryLabel label = BinaryLabel::Neg;
  std::array<double, 2> probability{0.0, 0.0};  // [Neg, Pos], sums to 1
};

// Mean of per-tree leaf class frequencies; argmax with ties toward NEG.
Prediction predict_forest(const RandomForestModel& model, const Vector& x);
std::vector<Prediction> predict_forest(const RandomForestModel& model, const Matrix& rows);

struct GridSpec {
  std::vector<int> n_estimators_values;
  std::vector<int> max_depth_values;  // 0 = unlimited
};

// Desk-scale default: {100,200,400} x {4,8,16,unlimited}.
GridSpec default_grid();
// Full-scale sweep: n_estimators 500..5000 step 10, depth 2..40 step 2.
GridSpec paper_grid();

struct GridCell {
  ForestParams params;
  double macro_f1 = 0.0;
};

struct GridResult {
  ForestParams best;
  double best_score = 0.0;
  std::vector<GridCell> table;
};

// Every pair scored by validation macro-F1; ties broken toward fewer trees,
// then shallower depth (unlimited counts as deepest).
GridResult grid_search(const dataio::LabeledDataset& train,
                       const dataio::LabeledDataset& validation, const GridSpec& grid,
                       std::uint64_t seed);

}  // namespace edrlmea::forest
