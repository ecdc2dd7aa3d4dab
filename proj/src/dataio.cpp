#include "edrlmea/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "edrlmea/csv.hpp"
#include "edrlmea/rng.hpp"

namespace edrlmea::dataio {

const char* label_name(BinaryLabel l) { return l == BinaryLabel::Pos ? "POS" : "NEG"; }

const char* dimension_name(Dimension d) {
  return d == Dimension::Arousal ? "arousal" : "valence";
}

Dimension parse_dimension(const std::string& s) {
  if (s == "arousal" || s == "A" || s == "a") return Dimension::Arousal;
  if (s == "valence" || s == "V" || s == "v") return Dimension::Valence;
  fail(Errc::InvalidConfig, "unknown dimension '" + s + "'");
}

Emotion parse_emotion(const std::string& s) {
  std::string lower;
  lower.reserve(s.size());
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "anger" || lower == "angry") return Emotion::Anger;
  if (lower == "happy" || lower == "happiness") return Emotion::Happy;
  if (lower == "neutral") return Emotion::Neutral;
  if (lower == "sad" || lower == "sadness") return Emotion::Sad;
  fail(Errc::UnsupportedCategory, "unsupported emotion category '" + s + "'");
}

FeatureTable load_feature_table(const std::filesystem::path& path, int expected_dim) {
  require(expected_dim >= 1, Errc::InvalidConfig, "expected_dim must be >= 1");
  auto rows = csv::read_file(path);
  require(!rows.empty(), Errc::EmptyDataset, "no header row in " + path.string());

  const auto& header = rows.front();
  require(!header.empty() && header[0] == "id", Errc::InvalidCell,
          "header must start with 'id' in " + path.string());

  // trailing optional columns: [valence, arousal] and/or [emotion]
  std::size_t ncols = header.size();
  bool has_emotion = ncols >= 2 && header[ncols - 1] == "emotion";
  std::size_t rating_end = has_emotion ? ncols - 1 : ncols;
  bool has_ratings = rating_end >= 3 && header[rating_end - 2] == "valence" &&
                     header[rating_end - 1] == "arousal";
  std::size_t n_features = (has_ratings ? rating_end - 2 : rating_end) - 1;

  if (static_cast<int>(n_features) != expected_dim)
    fail(Errc::DimensionMismatch,
         "feature table " + path.string() + " has " + std::to_string(n_features) +
             " feature columns, expected " + std::to_string(expected_dim));

  FeatureTable table;
  table.feature_names.assign(header.begin() + 1, header.begin() + 1 + n_features);
  const std::size_t n = rows.size() - 1;
  table.ids.reserve(n);
  table.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_features));
  Vector val(n), aro(n);
  std::unordered_set<std::string> seen;
  seen.reserve(n);

  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = rows[r + 1];
    const std::string where = path.filename().string() + ":" + std::to_string(r + 2);
    require(row.size() == ncols, Errc::InvalidCell,
            "row has " + std::to_string(row.size()) + " cells, expected " +
                std::to_string(ncols) + " at " + where);
    const std::string& id = row[0];
    require(!id.empty(), Errc::InvalidCell, "empty id at " + where);
    if (!seen.insert(id).second) fail(Errc::DuplicateId, "duplicate id '" + id + "' at " + where);
    table.ids.push_back(id);
    for (std::size_t j = 0; j < n_features; ++j)
      table.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          csv::parse_double(row[1 + j], where);
    if (has_ratings) {
      val(static_cast<Eigen::Index>(r)) = csv::parse_double(row[rating_end - 2], where);
      aro(static_cast<Eigen::Index>(r)) = csv::parse_double(row[rating_end - 1], where);
    }
    if (has_emotion) table.emotion.push_back(row[ncols - 1]);
  }
  if (has_ratings) {
    table.valence = std::move(val);
    table.arousal = std::move(aro);
  }
  return table;
}

void save_feature_table(const std::filesystem::path& path, const FeatureTable& table) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<std::size_t>(table.rows()) + 1);
  std::vector<std::string> header{"id"};
  header.insert(header.end(), table.feature_names.begin(), table.feature_names.end());
  bool has_ratings = table.valence.has_value() && table.arousal.has_value();
  if (has_ratings) {
    header.push_back("valence");
    header.push_back("arousal");
  }
  bool has_emotion = !table.emotion.empty();
  if (has_emotion) header.push_back("emotion");
  rows.push_back(std::move(header));

  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    std::vector<std::string> row{table.ids[static_cast<std::size_t>(r)]};
    for (Eigen::Index j = 0; j < table.dim(); ++j)
      row.push_back(csv::format_double(table.features(r, j)));
    if (has_ratings) {
      row.push_back(csv::format_double((*table.valence)(r)));
      row.push_back(csv::format_double((*table.arousal)(r)));
    }
    if (has_emotion) row.push_back(table.emotion[static_cast<std::size_t>(r)]);
    rows.push_back(std::move(row));
  }
  csv::write_file(path, rows);
}

BinaryLabel binarize_rating(double rating, double lambda) {
  require(std::isfinite(rating), Errc::NonFiniteValue, "rating is not finite");
  return rating >= lambda ? BinaryLabel::Pos : BinaryLabel::Neg;
}

std::pair<BinaryLabel, BinaryLabel> map_categorical_to_av(Emotion emotion) {
  switch (emotion) {
    case Emotion::Anger: return {BinaryLabel::Neg, BinaryLabel::Pos};
    case Emotion::Sad: return {BinaryLabel::Neg, BinaryLabel::Neg};
    case Emotion::Happy: return {BinaryLabel::Pos, BinaryLabel::Pos};
    case Emotion::Neutral: return {BinaryLabel::Pos, BinaryLabel::Neg};
  }
  fail(Errc::UnsupportedCategory, "unsupported emotion category");
}

LabeledDataset make_labeled(const FeatureTable& table, Dimension dim, double lambda) {
  LabeledDataset ds;
  ds.table = table;
  ds.dimension = dim;
  const std::size_t n = static_cast<std::size_t>(table.rows());
  ds.labels.reserve(n);

  const std::optional<Vector>& ratings =
      dim == Dimension::Arousal ? table.arousal : table.valence;
  if (ratings.has_value()) {
    for (std::size_t r = 0; r < n; ++r)
      ds.labels.push_back(binarize_rating((*ratings)(static_cast<Eigen::Index>(r)), lambda));
  } else if (!table.emotion.empty()) {
    for (std::size_t r = 0; r < n; ++r) {
      auto [v, a] = map_categorical_to_av(parse_emotion(table.emotion[r]));
      ds.labels.push_back(dim == Dimension::Arousal ? a : v);
    }
  } else {
    fail(Errc::InvalidCell, "table has neither rating nor emotion columns");
  }
  return ds;
}

LabeledDataset take_rows(const LabeledDataset& ds, const std::vector<std::size_t>& rows) {
  LabeledDataset out;
  out.dimension = ds.dimension;
  out.table.feature_names = ds.table.feature_names;
  out.table.features.resize(static_cast<Eigen::Index>(rows.size()), ds.table.dim());
  bool ratings = ds.table.valence.has_value();
  Vector val(rows.size()), aro(rows.size());
  bool emo = !ds.table.emotion.empty();
  out.labels.reserve(rows.size());
  out.table.ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::size_t r = rows[i];
    out.table.ids.push_back(ds.table.ids[r]);
    out.table.features.row(static_cast<Eigen::Index>(i)) =
        ds.table.features.row(static_cast<Eigen::Index>(r));
    if (ratings) {
      val(static_cast<Eigen::Index>(i)) = (*ds.table.valence)(static_cast<Eigen::Index>(r));
      aro(static_cast<Eigen::Index>(i)) = (*ds.table.arousal)(static_cast<Eigen::Index>(r));
    }
    if (emo) out.table.emotion.push_back(ds.table.emotion[r]);
    out.labels.push_back(ds.labels[r]);
  }
  if (ratings) {
    out.table.valence = std::move(val);
    out.table.arousal = std::move(aro);
  }
  return out;
}

namespace {

// Shared by the two split operations: deterministic shuffle, first
// ceil(fraction*n) rows to the first partition. Group-aware mode shuffles
// whole groups and fills the first partition greedily, so sizes are
// approximate there.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    const LabeledDataset& ds, double first_fraction, std::uint64_t seed,
    const std::optional<char>& group_delimiter, std::uint64_t salt) {
  const std::size_t n = ds.labels.size();
  Rng rng = Rng::derive(seed, {0x5911ull, salt});

  std::vector<std::size_t> first, second;
  const std::size_t target = static_cast<std::size_t>(
      std::ceil(first_fraction * static_cast<double>(n)));

  if (!group_delimiter.has_value()) {
    std::vector<std::size_t> order = rng.permutation(n);
    first.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(target));
    second.assign(order.begin() + static_cast<std::ptrdiff_t>(target), order.end());
  } else {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < n; ++r) {
      const std::string& id = ds.table.ids[r];
      auto pos = id.find(*group_delimiter);
      groups[pos == std::string::npos ? id : id.substr(0, pos)].push_back(r);
    }
    std::vector<const std::vector<std::size_t>*> order;
    order.reserve(groups.size());
    for (const auto& [_, members] : groups) order.push_back(&members);
    rng.shuffle(order);
    std::size_t assigned = 0;
    for (const auto* members : order) {
      auto& dst = assigned < target ? first : second;
      dst.insert(dst.end(), members->begin(), members->end());
      assigned += members->size();
    }
  }
  // stable row order within each partition
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {std::move(first), std::move(second)};
}

}  // namespace

std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& ds,
                                                           const SplitSpec& spec) {
  require(spec.train_fraction > 0.0 && spec.train_fraction < 1.0, Errc::InvalidConfig,
          "train_fraction must lie in (0,1)");
  const std::size_t n = ds.labels.size();
  if (n == 0) fail(Errc::EmptyDataset, "cannot split an empty dataset");
  if (n < 2) fail(Errc::TooFewRows, "need at least 2 rows to split, got " + std::to_string(n));
  auto [train_idx, test_idx] =
      split_indices(ds, spec.train_fraction, spec.seed, spec.group_delimiter, 1);
  return {take_rows(ds, train_idx), take_rows(ds, test_idx)};
}

std::pair<LabeledDataset, LabeledDataset> split_validation(const LabeledDataset& train,
                                                           const SplitSpec& spec) {
  require(spec.validation_fraction_of_train > 0.0 && spec.validation_fraction_of_train < 1.0,
          Errc::InvalidConfig, "validation_fraction_of_train must lie in (0,1)");
  const std::size_t n = train.labels.size();
  if (n == 0) fail(Errc::EmptyDataset, "cannot split an empty dataset");
  if (n < 2) fail(Errc::TooFewRows, "need at least 2 rows to split, got " + std::to_string(n));
  auto [fit_idx, val_idx] = split_indices(train, 1.0 - spec.validation_fraction_of_train,
                                          spec.seed, spec.group_delimiter, 2);
  return {take_rows(train, fit_idx), take_rows(train, val_idx)};
}

LabeledDataset undersample_majority(const LabeledDataset& ds, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t r = 0; r < ds.labels.size(); ++r)
    (ds.labels[r] == BinaryLabel::Pos ? pos : neg).push_back(r);
  if (pos.empty() || neg.empty())
    fail(Errc::SingleClassData, "undersampling needs both classes present");
  if (pos.size() == neg.size()) return ds;

  auto& majority = pos.size() > neg.size() ? pos : neg;
  const std::size_t keep = std::min(pos.size(), neg.size());
  Rng rng = Rng::derive(seed, {0xdecaf});
  std::vector<std::size_t> chosen = rng.sample_without_replacement(majority.size(), keep);
  std::vector<std::size_t> kept;
  kept.reserve(2 * keep);
  for (std::size_t i : chosen) kept.push_back(majority[i]);
  const auto& minority = pos.size() > neg.size() ? neg : pos;
  kept.insert(kept.end(), minority.begin(), minority.end());
  std::sort(kept.begin(), kept.end());
  return take_rows(ds, kept);
}

CenterScaleStats center_scale_fit(const Matrix& features, bool with_scaling) {
  require(features.rows() >= 1, Errc::EmptyDataset, "cannot fit statistics on 0 rows");
  CenterScaleStats stats;
  stats.with_scaling = with_scaling;
  stats.mean = features.colwise().mean();
  stats.scale = Vector::Ones(features.cols());
  const Eigen::Index n = features.rows();
  if (with_scaling) {
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
      double sd = 0.0;
      if (n > 1) {
        double ss = (features.col(j).array() - stats.mean(j)).square().sum();
        sd = std::sqrt(ss / static_cast<double>(n - 1));
      }
      if (sd < 1e-12) {
        stats.constant_columns.push_back(static_cast<int>(j));
        stats.scale(j) = 1.0;
      } else {
        stats.scale(j) = sd;
      }
    }
  }
  return stats;
}

Matrix center_scale_apply(const CenterScaleStats& stats, const Matrix& features) {
  require(features.cols() == stats.mean.size(), Errc::DimensionMismatch,
          "feature width does not match fitted statistics");
  Matrix out = features.rowwise() - stats.mean.transpose();
  if (stats.with_scaling) out.array().rowwise() /= stats.scale.transpose().array();
  return out;
}

void write_split_manifest(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::string>>& id_partition) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"id", "partition"});
  for (const auto& [id, part] : id_partition) rows.push_back({id, part});
  csv::write_file(path, rows);
}

}  // namespace edrlmea::dataio
