#include <doctest.h>

#include "edrlmea/forest.hpp"
#include "edrlmea/serialize.hpp"
#include "helpers.hpp"

using namespace edrlmea;
using dataio::BinaryLabel;

namespace {

double training_accuracy(const forest::RandomForestModel& model,
                         const dataio::LabeledDataset& ds) {
  auto preds = forest::predict_forest(model, ds.table.features);
  long correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i].label == ds.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

}  // namespace

TEST_SUITE("forest") {

TEST_CASE("separable data is memorized at unlimited depth") {
  Rng rng(201);
  auto ds = helpers::two_class_gaussians(40, 5, 6.0, rng);
  auto model = forest::fit_forest(ds, {50, 0}, 7);
  CHECK(training_accuracy(model, ds) == doctest::Approx(1.0));
}

TEST_CASE("same seed gives byte-equal serialized forests") {
  Rng rng(202);
  auto ds = helpers::two_class_gaussians(30, 4, 2.0, rng);
  auto a = forest::fit_forest(ds, {20, 6}, 99);
  auto b = forest::fit_forest(ds, {20, 6}, 99);
  CHECK(serialize::forest_to_json(a).dump() == serialize::forest_to_json(b).dump());
  auto c = forest::fit_forest(ds, {20, 6}, 100);
  CHECK(serialize::forest_to_json(a).dump() != serialize::forest_to_json(c).dump());
}

TEST_CASE("depth-1 stumps concentrate on the informative feature") {
  // feature 0 separates the classes on its own; the other two are noise
  Rng rng(203);
  dataio::LabeledDataset ds;
  const int n = 200, dim = 3;
  ds.table.features.resize(n, dim);
  for (int i = 0; i < n; ++i) {
    const bool positive = i % 2 == 0;
    ds.table.features(i, 0) = positive ? 2.0 + rng.uniform01() : -2.0 - rng.uniform01();
    for (int j = 1; j < dim; ++j) ds.table.features(i, j) = rng.normal();
    ds.table.ids.push_back("r" + std::to_string(i));
    ds.labels.push_back(positive ? BinaryLabel::Pos : BinaryLabel::Neg);
  }
  auto model = forest::fit_forest(ds, {100, 1}, 5);
  int informative_roots = 0;
  int split_roots = 0;
  for (const auto& tree : model.trees) {
    REQUIRE(!tree.nodes.empty());
    if (tree.nodes[0].feature >= 0) ++split_roots;
    if (tree.nodes[0].feature == 0) ++informative_roots;
  }
  CHECK(split_roots == 100);  // every tree splits
  // ceil(sqrt(3)) = 2 of 3 candidates per node; feature 0 wins whenever drawn,
  // which happens for 2 of the 3 possible candidate pairs
  CHECK(informative_roots > 50);
}

TEST_CASE("probabilities sum to one and agreeing trees give certainty") {
  Rng rng(204);
  auto ds = helpers::two_class_gaussians(40, 4, 8.0, rng);
  auto model = forest::fit_forest(ds, {30, 0}, 3);
  Vector far_positive = Vector::Constant(4, 8.0);
  auto pred = forest::predict_forest(model, far_positive);
  CHECK(pred.probability[0] + pred.probability[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pred.probability[1] == doctest::Approx(1.0));
  CHECK(pred.label == BinaryLabel::Pos);
}

TEST_CASE("prediction is invariant under tree reordering") {
  Rng rng(205);
  auto ds = helpers::two_class_gaussians(25, 3, 1.5, rng);
  auto model = forest::fit_forest(ds, {15, 4}, 11);
  Vector x = Vector::Constant(3, 0.75);
  auto before = forest::predict_forest(model, x);
  std::reverse(model.trees.begin(), model.trees.end());
  auto after = forest::predict_forest(model, x);
  CHECK(before.probability[0] == doctest::Approx(after.probability[0]).epsilon(1e-15));
  CHECK(before.label == after.label);
}

TEST_CASE("single-class training data is rejected") {
  dataio::LabeledDataset ds;
  ds.table.features = Matrix::Random(10, 3);
  for (int i = 0; i < 10; ++i) {
    ds.table.ids.push_back("r" + std::to_string(i));
    ds.labels.push_back(BinaryLabel::Pos);
  }
  CHECK_THROWS_WITH_AS(forest::fit_forest(ds, {10, 2}, 1),
                       doctest::Contains("SingleClassData"), Error);
}

TEST_CASE("injected bootstrap indices make duplicated datasets equivalent") {
  Rng rng(206);
  auto ds = helpers::two_class_gaussians(20, 3, 2.0, rng);

  // duplicate every row; bootstrap index multiset maps to the same sample
  dataio::LabeledDataset doubled;
  doubled.table.features.resize(80, 3);
  for (int i = 0; i < 40; ++i) {
    doubled.table.features.row(i) = ds.table.features.row(i);
    doubled.table.features.row(40 + i) = ds.table.features.row(i);
    doubled.labels.push_back(ds.labels[i]);
    doubled.table.ids.push_back(ds.table.ids[i] + "_a");
  }
  for (int i = 0; i < 40; ++i) {
    doubled.labels.push_back(ds.labels[i]);
    doubled.table.ids.push_back(ds.table.ids[i] + "_b");
  }

  std::vector<std::size_t> rows{0, 3, 5, 7, 11, 13, 21, 22, 30, 38};
  std::vector<std::size_t> rows_doubled = rows;
  for (auto& r : rows_doubled)
    if (r % 2 == 1) r += 40;  // same underlying samples via the duplicates

  forest::ForestParams params{1, 4};
  Rng tree_rng_a = Rng::derive(55, {1});
  Rng tree_rng_b = Rng::derive(55, {1});
  auto tree_a = forest::fit_tree(ds.table.features, ds.labels, rows, params, 2, tree_rng_a);
  auto tree_b = forest::fit_tree(doubled.table.features, doubled.labels, rows_doubled, params,
                                 2, tree_rng_b);
  REQUIRE(tree_a.nodes.size() == tree_b.nodes.size());
  for (std::size_t i = 0; i < tree_a.nodes.size(); ++i) {
    CHECK(tree_a.nodes[i].feature == tree_b.nodes[i].feature);
    CHECK(tree_a.nodes[i].threshold == doctest::Approx(tree_b.nodes[i].threshold));
  }
}

TEST_CASE("unlimited depth is at least as accurate as stumps on training data") {
  Rng rng(207);
  auto ds = helpers::two_class_gaussians(50, 6, 1.0, rng);
  auto deep = forest::fit_forest(ds, {40, 0}, 13);
  auto shallow = forest::fit_forest(ds, {40, 1}, 13);
  CHECK(training_accuracy(deep, ds) >= training_accuracy(shallow, ds));
}

TEST_CASE("grid search returns the single point of a 1-point grid") {
  Rng rng(208);
  auto train = helpers::two_class_gaussians(30, 4, 2.0, rng);
  auto val = helpers::two_class_gaussians(10, 4, 2.0, rng);
  forest::GridSpec grid{{50}, {4}};
  auto result = forest::grid_search(train, val, grid, 21);
  CHECK(result.best.n_estimators == 50);
  CHECK(result.best.max_depth == 4);
  CHECK(result.table.size() == 1);
}

TEST_CASE("grid search scores every cell") {
  Rng rng(209);
  auto train = helpers::two_class_gaussians(25, 3, 2.0, rng);
  auto val = helpers::two_class_gaussians(8, 3, 2.0, rng);
  forest::GridSpec grid{{10, 20}, {2, 4, 0}};
  auto result = forest::grid_search(train, val, grid, 22);
  CHECK(result.table.size() == 6);
}

TEST_CASE("paper grid bounds") {
  auto grid = forest::paper_grid();
  CHECK(grid.n_estimators_values.size() == 451);
  CHECK(grid.n_estimators_values.front() == 500);
  CHECK(grid.n_estimators_values.back() == 5000);
  CHECK(grid.n_estimators_values[1] - grid.n_estimators_values[0] == 10);
  CHECK(grid.max_depth_values.size() == 20);
  CHECK(grid.max_depth_values.front() == 2);
  CHECK(grid.max_depth_values.back() == 40);
  CHECK(grid.max_depth_values[1] - grid.max_depth_values[0] == 2);
}

TEST_CASE("forest json round-trip preserves predictions") {
  Rng rng(210);
  auto ds = helpers::two_class_gaussians(20, 4, 2.0, rng);
  auto model = forest::fit_forest(ds, {10, 4}, 31);
  auto loaded = serialize::forest_from_json(serialize::forest_to_json(model));
  Matrix probe = helpers::random_matrix(6, 4, rng, -2.0, 4.0);
  auto a = forest::predict_forest(model, probe);
  auto b = forest::predict_forest(loaded, probe);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].label == b[i].label);
    CHECK(a[i].probability[1] == doctest::Approx(b[i].probability[1]).epsilon(1e-15));
  }
}

}  // TEST_SUITE
