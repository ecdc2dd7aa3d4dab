#include "edrlmea/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "edrlmea/eval.hpp"

namespace edrlmea::forest {

namespace {

double gini(std::int64_t neg, std::int64_t pos) {
  const double n = static_cast<double>(neg + pos);
  if (n <= 0.0) return 0.0;
  const double pn = static_cast<double>(neg) / n;
  const double pp = static_cast<double>(pos) / n;
  return 1.0 - pn * pn - pp * pp;
}

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = -1.0;
};

// better gain wins; exact ties resolved by smaller feature then threshold
bool improves(const SplitChoice& best, double gain, int feature, double threshold) {
  if (gain > best.gain) return true;
  if (gain < best.gain) return false;
  if (feature != best.feature) return feature < best.feature;
  return threshold < best.threshold;
}

struct TreeBuilder {
  const Matrix& x;
  const std::vector<BinaryLabel>& y;
  const ForestParams& params;
  int mtry;
  Rng& rng;
  DecisionTree tree;

  int build(std::vector<std::size_t>& rows, int depth) {
    std::int64_t neg = 0, pos = 0;
    for (std::size_t r : rows) (y[r] == BinaryLabel::Pos ? pos : neg) += 1;

    const bool at_depth_limit = params.max_depth > 0 && depth >= params.max_depth;
    const bool pure = neg == 0 || pos == 0;
    if (at_depth_limit || pure || rows.size() < 2) return make_leaf(neg, pos);

    // candidate features, iterated in ascending order for stable tie-breaks
    std::vector<std::size_t> candidates = rng.sample_without_replacement(
        static_cast<std::size_t>(x.cols()), static_cast<std::size_t>(mtry));

    const double parent = gini(neg, pos);
    const double total = static_cast<double>(rows.size());
    SplitChoice best;

    std::vector<std::pair<double, BinaryLabel>> ordered(rows.size());
    for (std::size_t f : candidates) {
      for (std::size_t i = 0; i < rows.size(); ++i)
        ordered[i] = {x(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(f)),
                      y[rows[i]]};
      std::sort(ordered.begin(), ordered.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      std::int64_t lneg = 0, lpos = 0;
      for (std::size_t i = 0; i + 1 < ordered.size(); ++i) {
        (ordered[i].second == BinaryLabel::Pos ? lpos : lneg) += 1;
        if (ordered[i].first == ordered[i + 1].first) continue;
        const double thr = ordered[i].first + 0.5 * (ordered[i + 1].first - ordered[i].first);
        const std::int64_t ln = lneg + lpos;
        const std::int64_t rn = static_cast<std::int64_t>(rows.size()) - ln;
        const double gain = parent -
                            (static_cast<double>(ln) / total) * gini(lneg, lpos) -
                            (static_cast<double>(rn) / total) * gini(neg - lneg, pos - lpos);
        if (!best.found || improves(best, gain, static_cast<int>(f), thr)) {
          best = {true, static_cast<int>(f), thr, gain};
        }
      }
    }
    if (!best.found || best.gain <= 0.0) return make_leaf(neg, pos);

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
      const double v = x(static_cast<Eigen::Index>(r), best.feature);
      (v <= best.threshold ? left_rows : right_rows).push_back(r);
    }
    if (left_rows.empty() || right_rows.empty()) return make_leaf(neg, pos);

    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({best.feature, best.threshold, -1, -1, {0, 0}});
    rows.clear();
    rows.shrink_to_fit();
    const int left_id = build(left_rows, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_id)].left = left_id;
    const int right_id = build(right_rows, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_id)].right = right_id;
    return node_id;
  }

  int make_leaf(std::int64_t neg, std::int64_t pos) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({-1, 0.0, -1, -1, {neg, pos}});
    return node_id;
  }
};

std::array<double, 2> tree_leaf_frequencies(const DecisionTree& tree, const Vector& x) {
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& nd = tree.nodes[static_cast<std::size_t>(node)];
    node = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  const auto& counts = tree.nodes[static_cast<std::size_t>(node)].class_counts;
  const double total = static_cast<double>(counts[0] + counts[1]);
  return {static_cast<double>(counts[0]) / total, static_cast<double>(counts[1]) / total};
}

void validate_training_input(const Matrix& features, const std::vector<BinaryLabel>& labels) {
  require(features.rows() >= 2, Errc::TooFewRows, "need at least 2 training rows");
  require(features.rows() == static_cast<Eigen::Index>(labels.size()), Errc::ShapeMismatch,
          "label count does not match row count");
  bool has_neg = false, has_pos = false;
  for (BinaryLabel l : labels) (l == BinaryLabel::Pos ? has_pos : has_neg) = true;
  require(has_neg && has_pos, Errc::SingleClassData, "training data has a single class");
}

// unlimited (0) orders as the deepest setting
long depth_rank(int max_depth) {
  return max_depth == 0 ? std::numeric_limits<long>::max() : max_depth;
}

}  // namespace

DecisionTree fit_tree(const Matrix& features, const std::vector<BinaryLabel>& labels,
                      const std::vector<std::size_t>& bootstrap_rows,
                      const ForestParams& params, int features_per_split, Rng& rng) {
  require(!bootstrap_rows.empty(), Errc::EmptyDataset, "empty bootstrap sample");
  TreeBuilder builder{features, labels, params, features_per_split, rng, {}};
  std::vector<std::size_t> rows = bootstrap_rows;
  builder.build(rows, 0);
  return std::move(builder.tree);
}

RandomForestModel fit_forest(const Matrix& features, const std::vector<BinaryLabel>& labels,
                             const ForestParams& params, std::uint64_t seed) {
  validate_training_input(features, labels);
  require(params.n_estimators >= 1, Errc::InvalidConfig, "n_estimators must be >= 1");
  require(params.max_depth >= 0, Errc::InvalidConfig, "max_depth must be >= 0");

  RandomForestModel model;
  model.params = params;
  model.n_features = static_cast<int>(features.cols());
  model.features_per_split = static_cast<int>(
      std::ceil(std::sqrt(static_cast<double>(model.n_features))));
  model.seed = seed;

  const std::size_t n = static_cast<std::size_t>(features.rows());
  model.trees.reserve(static_cast<std::size_t>(params.n_estimators));
  for (int t = 0; t < params.n_estimators; ++t) {
    Rng rng = Rng::derive(seed, {0xf03e57, static_cast<std::uint64_t>(t)});
    std::vector<std::size_t> bootstrap(n);
    for (std::size_t i = 0; i < n; ++i)
      bootstrap[i] = static_cast<std::size_t>(rng.below(n));
    model.trees.push_back(
        fit_tree(features, labels, bootstrap, params, model.features_per_split, rng));
  }
  return model;
}

RandomForestModel fit_forest(const dataio::LabeledDataset& data, const ForestParams& params,
                             std::uint64_t seed) {
  return fit_forest(data.table.features, data.labels, params, seed);
}

Prediction predict_forest(const RandomForestModel& model, const Vector& x) {
  require(!model.trees.empty(), Errc::InvalidConfig, "forest has no trees");
  require(x.size() == model.n_features, Errc::DimensionMismatch,
          "input width " + std::to_string(x.size()) + " != trained width " +
              std::to_string(model.n_features));
  Prediction pred;
  for (const auto& tree : model.trees) {
    auto freq = tree_leaf_frequencies(tree, x);
    pred.probability[0] += freq[0];
    pred.probability[1] += freq[1];
  }
  const double nt = static_cast<double>(model.trees.size());
  pred.probability[0] /= nt;
  pred.probability[1] /= nt;
  // tie resolves toward NEG, the lexicographically smaller label
  pred.label = pred.probability[1] > pred.probability[0] ? BinaryLabel::Pos : BinaryLabel::Neg;
  return pred;
}

std::vector<Prediction> predict_forest(const RandomForestModel& model, const Matrix& rows) {
  std::vector<Prediction> preds;
  preds.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    const Vector x = rows.row(r).transpose();
    preds.push_back(predict_forest(model, x));
  }
  return preds;
}

GridSpec default_grid() { return {{100, 200, 400}, {4, 8, 16, 0}}; }

GridSpec paper_grid() {
  GridSpec grid;
  for (int i = 50; i <= 500; ++i) grid.n_estimators_values.push_back(i * 10);
  for (int i = 1; i <= 20; ++i) grid.max_depth_values.push_back(2 * i);
  return grid;
}

GridResult grid_search(const dataio::LabeledDataset& train,
                       const dataio::LabeledDataset& validation, const GridSpec& grid,
                       std::uint64_t seed) {
  require(!grid.n_estimators_values.empty() && !grid.max_depth_values.empty(),
          Errc::InvalidConfig, "grid must be nonempty");
  GridResult result;
  bool first = true;
  for (int ne : grid.n_estimators_values) {
    for (int depth : grid.max_depth_values) {
      ForestParams params{ne, depth};
      RandomForestModel model = fit_forest(train, params, seed);
      std::vector<BinaryLabel> preds;
      preds.reserve(validation.labels.size());
      for (const auto& p : predict_forest(model, validation.table.features))
        preds.push_back(p.label);
      const double score = eval::f1_binary(preds, validation.labels).macro_f1;
      result.table.push_back({params, score});

      const bool better =
          first || score > result.best_score ||
          (score == result.best_score &&
           (params.n_estimators < result.best.n_estimators ||
            (params.n_estimators == result.best.n_estimators &&
             depth_rank(params.max_depth) < depth_rank(result.best.max_depth))));
      if (better) {
        result.best = params;
        result.best_score = score;
        first = false;
      }
    }
  }
  return result;
}

}  // namespace edrlmea::forest
