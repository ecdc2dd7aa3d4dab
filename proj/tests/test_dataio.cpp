#include <doctest.h>

#include <fstream>
#include <set>

#include "edrlmea/dataio.hpp"
#include "helpers.hpp"

using namespace edrlmea;
using dataio::BinaryLabel;
using dataio::Dimension;
using dataio::Emotion;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

dataio::LabeledDataset dataset_with_counts(long pos, long neg) {
  dataio::LabeledDataset ds;
  const long n = pos + neg;
  ds.table.features.resize(n, 1);
  for (long i = 0; i < n; ++i) {
    ds.table.features(i, 0) = static_cast<double>(i);
    ds.table.ids.push_back("u" + std::to_string(i));
    ds.labels.push_back(i < pos ? BinaryLabel::Pos : BinaryLabel::Neg);
  }
  ds.table.feature_names = {"f1"};
  return ds;
}

}  // namespace

TEST_SUITE("dataio") {

TEST_CASE("load_feature_table parses a small csv") {
  auto dir = helpers::temp_dir("load");
  write_text(dir / "t.csv",
             "id,f1,f2,f3\n"
             "a,1.0,2.0,3.0\n"
             "b,4,5,6\n"
             "c,-1e-2,0.5,2.25\n"
             "d,7,8,9\n");
  auto table = dataio::load_feature_table(dir / "t.csv", 3);
  CHECK(table.rows() == 4);
  CHECK(table.dim() == 3);
  CHECK(table.ids[1] == "b");
  CHECK(table.features(2, 0) == doctest::Approx(-0.01));
  CHECK_FALSE(table.valence.has_value());
}

TEST_CASE("load_feature_table accepts rating and emotion columns") {
  auto dir = helpers::temp_dir("load2");
  write_text(dir / "t.csv",
             "id,f1,f2,valence,arousal,emotion\n"
             "a,1,2,3.5,1.5,Happy\n"
             "b,3,4,2.0,4.0,Sad\n");
  auto table = dataio::load_feature_table(dir / "t.csv", 2);
  REQUIRE(table.valence.has_value());
  CHECK((*table.valence)(0) == doctest::Approx(3.5));
  CHECK((*table.arousal)(1) == doctest::Approx(4.0));
  CHECK(table.emotion[1] == "Sad");
}

TEST_CASE("load_feature_table rejects NaN cells") {
  auto dir = helpers::temp_dir("nan");
  write_text(dir / "t.csv", "id,f1,f2\na,1.0,NaN\n");
  CHECK_THROWS_WITH_AS(dataio::load_feature_table(dir / "t.csv", 2),
                       doctest::Contains("InvalidCell"), Error);
}

TEST_CASE("load_feature_table rejects wrong width") {
  auto dir = helpers::temp_dir("dim");
  std::string csv = "id";
  for (int j = 1; j <= 88; ++j) csv += ",f" + std::to_string(j);
  csv += "\nrow";
  for (int j = 0; j < 88; ++j) csv += ",0.5";
  csv += "\n";
  write_text(dir / "t.csv", csv);
  CHECK_THROWS_WITH_AS(dataio::load_feature_table(dir / "t.csv", 20),
                       doctest::Contains("DimensionMismatch"), Error);
}

TEST_CASE("load_feature_table rejects duplicate ids") {
  auto dir = helpers::temp_dir("dup");
  write_text(dir / "t.csv", "id,f1\na,1\na,2\n");
  CHECK_THROWS_WITH_AS(dataio::load_feature_table(dir / "t.csv", 1),
                       doctest::Contains("DuplicateId"), Error);
}

TEST_CASE("binarize_rating boundary") {
  CHECK(dataio::binarize_rating(2.5) == BinaryLabel::Pos);
  CHECK(dataio::binarize_rating(2.49) == BinaryLabel::Neg);
  CHECK(dataio::binarize_rating(1.0) == BinaryLabel::Neg);
  CHECK_THROWS_AS(dataio::binarize_rating(std::nan("")), Error);
}

TEST_CASE("binarize_rating is monotone") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    double r1 = rng.uniform(1.0, 5.0);
    double r2 = rng.uniform(1.0, 5.0);
    if (r1 > r2) std::swap(r1, r2);
    CHECK(static_cast<int>(dataio::binarize_rating(r1)) <=
          static_cast<int>(dataio::binarize_rating(r2)));
  }
}

TEST_CASE("categorical mapping") {
  auto anger = dataio::map_categorical_to_av(Emotion::Anger);
  CHECK(anger.first == BinaryLabel::Neg);   // V-
  CHECK(anger.second == BinaryLabel::Pos);  // A+
  auto neutral = dataio::map_categorical_to_av(Emotion::Neutral);
  CHECK(neutral.first == BinaryLabel::Pos);   // V+
  CHECK(neutral.second == BinaryLabel::Neg);  // A-
  auto happy = dataio::map_categorical_to_av(Emotion::Happy);
  CHECK(happy.first == BinaryLabel::Pos);
  CHECK(happy.second == BinaryLabel::Pos);
  auto sad = dataio::map_categorical_to_av(Emotion::Sad);
  CHECK(sad.first == BinaryLabel::Neg);
  CHECK(sad.second == BinaryLabel::Neg);
  CHECK_THROWS_AS(dataio::parse_emotion("Surprise"), Error);
}

TEST_CASE("split sizes and determinism") {
  auto ds = dataset_with_counts(5, 5);
  dataio::SplitSpec spec;
  spec.seed = 7;
  auto [train, test] = dataio::split_train_test(ds, spec);
  CHECK(train.labels.size() == 8);
  CHECK(test.labels.size() == 2);

  auto [train2, test2] = dataio::split_train_test(ds, spec);
  CHECK(train.table.ids == train2.table.ids);
  CHECK(test.table.ids == test2.table.ids);

  spec.seed = 8;
  auto [train3, test3] = dataio::split_train_test(ds, spec);
  CHECK(train3.labels.size() == 8);  // size stable across seeds, membership may differ
}

TEST_CASE("split rejects degenerate inputs") {
  auto one = dataset_with_counts(1, 0);
  dataio::SplitSpec spec;
  CHECK_THROWS_WITH_AS(dataio::split_train_test(one, spec), doctest::Contains("TooFewRows"),
                       Error);
  CHECK_THROWS_WITH_AS(dataio::split_validation(one, spec), doctest::Contains("TooFewRows"),
                       Error);
  auto empty = dataset_with_counts(0, 0);
  CHECK_THROWS_WITH_AS(dataio::split_train_test(empty, spec),
                       doctest::Contains("EmptyDataset"), Error);
}

TEST_CASE("validation split carves 10 percent") {
  auto ds = dataset_with_counts(50, 50);
  dataio::SplitSpec spec;
  spec.seed = 3;
  auto [fit, val] = dataio::split_validation(ds, spec);
  CHECK(fit.labels.size() == 90);
  CHECK(val.labels.size() == 10);
}

TEST_CASE("splits are disjoint and exhaustive") {
  Rng rng(5);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto ds = dataset_with_counts(17 + static_cast<long>(seed), 23);
    dataio::SplitSpec spec;
    spec.seed = seed;
    auto [train, test] = dataio::split_train_test(ds, spec);
    auto [fit, val] = dataio::split_validation(train, spec);
    std::set<std::string> all;
    for (const auto& part : {fit.table.ids, val.table.ids, test.table.ids})
      for (const auto& id : part) CHECK(all.insert(id).second);  // no overlap
    CHECK(all.size() == ds.table.ids.size());
  }
}

TEST_CASE("group-aware split keeps groups together") {
  dataio::LabeledDataset ds;
  const int speakers = 10, per_speaker = 6;
  ds.table.features.resize(speakers * per_speaker, 1);
  for (int s = 0; s < speakers; ++s)
    for (int u = 0; u < per_speaker; ++u) {
      const int i = s * per_speaker + u;
      ds.table.features(i, 0) = i;
      ds.table.ids.push_back("spk" + std::to_string(s) + "_utt" + std::to_string(u));
      ds.labels.push_back(i % 2 ? BinaryLabel::Pos : BinaryLabel::Neg);
    }
  ds.table.feature_names = {"f1"};
  dataio::SplitSpec spec;
  spec.seed = 9;
  spec.group_delimiter = '_';
  auto [train, test] = dataio::split_train_test(ds, spec);
  std::set<std::string> train_speakers, test_speakers;
  for (const auto& id : train.table.ids) train_speakers.insert(id.substr(0, id.find('_')));
  for (const auto& id : test.table.ids) test_speakers.insert(id.substr(0, id.find('_')));
  for (const auto& s : test_speakers) CHECK(train_speakers.count(s) == 0);
}

TEST_CASE("undersampling balances the paper counts") {
  auto arousal = dataset_with_counts(3480, 1995);
  auto balanced = dataio::undersample_majority(arousal, 42);
  long pos = std::count(balanced.labels.begin(), balanced.labels.end(), BinaryLabel::Pos);
  long neg = std::count(balanced.labels.begin(), balanced.labels.end(), BinaryLabel::Neg);
  CHECK(pos == 1995);
  CHECK(neg == 1995);

  auto valence = dataset_with_counts(2952, 2483);
  auto balanced_v = dataio::undersample_majority(valence, 42);
  pos = std::count(balanced_v.labels.begin(), balanced_v.labels.end(), BinaryLabel::Pos);
  neg = std::count(balanced_v.labels.begin(), balanced_v.labels.end(), BinaryLabel::Neg);
  CHECK(pos == 2483);
  CHECK(neg == 2483);
}

TEST_CASE("undersampling leaves balanced data untouched") {
  auto ds = dataset_with_counts(50, 50);
  auto out = dataio::undersample_majority(ds, 1);
  CHECK(out.table.ids == ds.table.ids);
}

TEST_CASE("undersampling output ids are a subset and deterministic") {
  auto ds = dataset_with_counts(40, 25);
  auto a = dataio::undersample_majority(ds, 123);
  auto b = dataio::undersample_majority(ds, 123);
  CHECK(a.table.ids == b.table.ids);
  std::set<std::string> input_ids(ds.table.ids.begin(), ds.table.ids.end());
  for (const auto& id : a.table.ids) CHECK(input_ids.count(id) == 1);
  // minority rows untouched
  long neg = std::count(a.labels.begin(), a.labels.end(), BinaryLabel::Neg);
  CHECK(neg == 25);

  auto single = dataset_with_counts(10, 0);
  CHECK_THROWS_WITH_AS(dataio::undersample_majority(single, 0),
                       doctest::Contains("SingleClassData"), Error);
}

TEST_CASE("center_scale basics") {
  Matrix m(3, 2);
  m << 1, 5, 2, 5, 3, 5;
  auto stats = dataio::center_scale_fit(m, true);
  Matrix out = dataio::center_scale_apply(stats, m);
  CHECK(out(0, 0) == doctest::Approx(-1.0));
  CHECK(out(1, 0) == doctest::Approx(0.0));
  CHECK(out(2, 0) == doctest::Approx(1.0));
  // constant column flagged with scale 1
  REQUIRE(stats.constant_columns.size() == 1);
  CHECK(stats.constant_columns[0] == 1);
  CHECK(stats.scale(1) == doctest::Approx(1.0));

  // held-out rows reuse the train mean
  Matrix held(1, 2);
  held << 10, 7;
  Matrix held_out = dataio::center_scale_apply(stats, held);
  CHECK(held_out(0, 0) == doctest::Approx((10.0 - 2.0) / stats.scale(0)));
  CHECK(held_out(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("feature table round-trips through save/load") {
  auto dir = helpers::temp_dir("roundtrip");
  Rng rng(2);
  auto ds = helpers::two_class_gaussians(6, 4, 1.0, rng);
  dataio::save_feature_table(dir / "t.csv", ds.table);
  auto loaded = dataio::load_feature_table(dir / "t.csv", 4);
  CHECK(loaded.ids == ds.table.ids);
  CHECK((loaded.features - ds.table.features).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

}  // TEST_SUITE
