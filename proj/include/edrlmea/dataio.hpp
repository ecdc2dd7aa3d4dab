#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edrlmea/error.hpp"
#include "edrlmea/types.hpp"

namespace edrlmea::dataio {

enum class BinaryLabel { Neg = 0, Pos = 1 };
enum class Dimension { Arousal, Valence };
enum class Emotion { Anger, Happy, Neutral, Sad };

const char* label_name(BinaryLabel l);
const char* dimension_name(Dimension d);
Dimension parse_dimension(const std::string& s);
Emotion parse_emotion(const std::string& s);

// Rows of N-dimensional acoustic feature vectors keyed by utterance id.
// Ratings / categorical emotion columns are carried through when the source
// file has them. Validated on load: finite cells, unique ids, exact width.
struct FeatureTable {
  std::vector<std::string> ids;
  Matrix features;  // n x N
  std::vector<std::string> feature_names;
  std::optional<Vector> valence;  // per-row averaged evaluator ratings
  std::optional<Vector> arousal;
  std::vector<std::string> emotion;  // empty when the column is absent

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

struct LabeledDataset {
  FeatureTable table;
  std::vector<BinaryLabel> labels;
  Dimension dimension = Dimension::Arousal;
};

struct SplitSpec {
  double train_fraction = 0.8;
  double validation_fraction_of_train = 0.1;
  std::uint64_t seed = 0;
  // When set, the id prefix up to the first occurrence of this character is a
  // group key (e.g. speaker); whole groups stay in one partition.
  std::optional<char> group_delimiter;
};

FeatureTable load_feature_table(const std::filesystem::path& path, int expected_dim);
void save_feature_table(const std::filesystem::path& path, const FeatureTable& table);

// POS iff rating >= lambda
BinaryLabel binarize_rating(double rating, double lambda = 2.5);

// (valence, arousal); Anger->(Neg,Pos) Sad->(Neg,Neg) Happy->(Pos,Pos) Neutral->(Pos,Neg)
std::pair<BinaryLabel, BinaryLabel> map_categorical_to_av(Emotion emotion);

// Builds labels for one dimension from the rating column when present,
// otherwise from the categorical emotion column.
LabeledDataset make_labeled(const FeatureTable& table, Dimension dim, double lambda = 2.5);

LabeledDataset take_rows(const LabeledDataset& ds, const std::vector<std::size_t>& rows);

std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& ds,
                                                           const SplitSpec& spec);
std::pair<LabeledDataset, LabeledDataset> split_validation(const LabeledDataset& train,
                                                           const SplitSpec& spec);

LabeledDataset undersample_majority(const LabeledDataset& ds, std::uint64_t seed);

struct CenterScaleStats {
  Vector mean;
  Vector scale;  // 1.0 where flagged constant
  bool with_scaling = true;
  std::vector<int> constant_columns;
};

// Fit on training rows only; apply reuses the fitted statistics.
CenterScaleStats center_scale_fit(const Matrix& features, bool with_scaling = true);
Matrix center_scale_apply(const CenterScaleStats& stats, const Matrix& features);

// Reproducibility audit: CSV of id,partition.
void write_split_manifest(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::string>>& id_partition);

}  // namespace edrlmea::dataio
