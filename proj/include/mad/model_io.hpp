#pragma once

// Model definition files. Layout (schema_version 1):
//   {"schema_version": 1, "kind": "gaussian_mixture",
//    "components": [{"weight": w, "mean": [..], "covariance": [row-major d*d]}]}
//   {"kind": "dirac_mixture", "atoms": [{"weight": c, "location": [..]}]}
//   {"kind": "degenerate_gaussian", "active_mean": [..], "active_covariance": [row-major],
//    "degenerate_dim": d2, "transform": {"rotation": [row-major d*d], "offset": [..]}}
//   {"kind": "product", "factors": [<model objects>]}
//   {"kind": "radial", "centers": [[x, y], ..], "radius": r, "variance": v,
//    "quadrature_points": n}
// schema_version is required at the top level only.

#include <string>

#include <json.hpp>

#include "mad/models.hpp"

namespace mad {

inline constexpr int kModelSchemaVersion = 1;

nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);

void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

/// Reads a JSON file, mapping I/O and parse failures onto kBadInput.
nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace mad
