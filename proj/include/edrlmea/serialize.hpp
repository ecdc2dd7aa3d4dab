#pragma once

#include <filesystem>

#include <json.hpp>

#include "edrlmea/dataio.hpp"
#include "edrlmea/edrl.hpp"
#include "edrlmea/forest.hpp"
#include "edrlmea/mea.hpp"

namespace edrlmea::serialize {

using nlohmann::json;

json matrix_to_json(const Matrix& m);   // dims + row-major flat data
Matrix matrix_from_json(const json& j);
json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j);

json layer_to_json(const nn::DenseLayer& layer);
nn::DenseLayer layer_from_json(const json& j);

// The shared inter latent tensor is stored once and referenced by id from
// every block.
json edrl_to_json(const edrl::EdrlModel& model);
edrl::EdrlModel edrl_from_json(const json& j);

json mbpls_to_json(const mea::MbplsModel& model);
mea::MbplsModel mbpls_from_json(const json& j);

json forest_to_json(const forest::RandomForestModel& model);
forest::RandomForestModel forest_from_json(const json& j);

json stats_to_json(const dataio::CenterScaleStats& stats);
dataio::CenterScaleStats stats_from_json(const json& j);

void save_json(const std::filesystem::path& path, const json& j);
json load_json(const std::filesystem::path& path);

// FNV-1a over file bytes; stage outputs are recorded with this in the run
// manifest.
std::string content_hash(const std::filesystem::path& path);
std::string string_hash(const std::string& bytes);

}  // namespace edrlmea::serialize
