#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "edrlmea/dataio.hpp"
#include "edrlmea/rng.hpp"
#include "edrlmea/types.hpp"

namespace helpers {

using edrlmea::Matrix;
using edrlmea::Rng;
using edrlmea::Vector;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                            double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
  return m;
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                              double mean = 0.0, double stddev = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = mean + stddev * rng.normal();
  return m;
}

// two-class dataset: class 0 at the origin, class 1 shifted per dimension
inline edrlmea::dataio::LabeledDataset two_class_gaussians(int n_per_class, int dim,
                                                           double separation, Rng& rng) {
  edrlmea::dataio::LabeledDataset ds;
  ds.table.features.resize(2 * n_per_class, dim);
  for (int i = 0; i < 2 * n_per_class; ++i) {
    const bool positive = i >= n_per_class;
    for (int j = 0; j < dim; ++j)
      ds.table.features(i, j) = rng.normal() + (positive ? separation : 0.0);
    ds.table.ids.push_back("row" + std::to_string(i));
    ds.labels.push_back(positive ? edrlmea::dataio::BinaryLabel::Pos
                                 : edrlmea::dataio::BinaryLabel::Neg);
  }
  for (int j = 0; j < dim; ++j) ds.table.feature_names.push_back("f" + std::to_string(j + 1));
  return ds;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("edrlmea_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace helpers
