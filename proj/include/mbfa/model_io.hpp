#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mbfa/csv.hpp"
#include "mbfa/embedding.hpp"
#include "mbfa/errors.hpp"

namespace mbfa {

using Json = nlohmann::ordered_json;

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(Json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw ParseError(what + ": expected a non-empty array of rows");
  }
  const std::size_t cols = j.front().size();
  Vector data;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols) throw ParseError(what + ": ragged rows");
    for (const auto& v : row) {
      if (!v.is_number()) throw ParseError(what + ": non-numeric entry");
      data.push_back(v.get<double>());
    }
  }
  return Matrix(j.size(), cols, std::move(data));
}

inline Json model_to_json(const EmbeddingModel& model) {
  Json j;
  j["format"] = "mbfa-model";
  j["version"] = 1;
  j["method"] = to_string(model.method);
  j["d"] = model.d;
  j["reg"] = model.reg;
  j["view_dims"] = model.view_dims;
  j["view_names"] = model.view_names;
  j["eigenvalues"] = model.eigenvalues;
  j["means"] = model.means;
  Json projections = Json::array();
  for (const auto& w : model.projections) projections.push_back(matrix_to_json(w));
  j["projections"] = std::move(projections);
  return j;
}

inline EmbeddingModel model_from_json(const Json& j) {
  try {
    if (j.value("format", "") != "mbfa-model") throw ParseError("model: missing format tag");
    EmbeddingModel m;
    m.method = parse_method(j.at("method").get<std::string>());
    m.d = j.at("d").get<std::size_t>();
    m.reg = j.value("reg", 0.0);
    m.view_dims = j.at("view_dims").get<std::vector<std::size_t>>();
    m.view_names = j.value("view_names", std::vector<std::string>{});
    m.eigenvalues = j.at("eigenvalues").get<Vector>();
    m.means = j.at("means").get<std::vector<Vector>>();
    for (const auto& w : j.at("projections")) m.projections.push_back(matrix_from_json(w, "model projection"));

    const std::size_t c = m.view_dims.size();
    if (c < 2 || m.means.size() != c || m.projections.size() != c) {
      throw ParseError("model: view count mismatch between view_dims, means and projections");
    }
    if (m.eigenvalues.size() != m.d) throw ParseError("model: eigenvalue count differs from d");
    if (!m.view_names.empty() && m.view_names.size() != c) {
      throw ParseError("model: view_names count differs from view count");
    }
    for (std::size_t i = 0; i < c; ++i) {
      if (m.means[i].size() != m.view_dims[i] || m.projections[i].rows() != m.view_dims[i] ||
          m.projections[i].cols() != m.d) {
        throw ParseError("model: view " + std::to_string(i) + " has inconsistent dimensions");
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
}

inline void save_model(const std::filesystem::path& path, const EmbeddingModel& model) {
  write_text_file(path, model_to_json(model).dump(2) + "\n");
}

inline EmbeddingModel load_model(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace mbfa
