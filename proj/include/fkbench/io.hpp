#pragma once

#include "fkbench/model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace fkbench {

/// Model file layout:
///   {"horizon": H, "dims": [d_0..d_H], "kernels": [[[row]...]...],
///    "potentials": [[...]...], "eta0": [...], "epsilons": [...]}
/// "epsilons" is optional and defaults to all zeros.
nlohmann::json model_to_json(const FeynmanKacModel& model, const McKeanSpec& spec);
void model_from_json(const nlohmann::json& j, FeynmanKacModel& model, McKeanSpec& spec);

/// Function file layout: {"values": [[...]...]}
nlohmann::json function_to_json(const TestFunction& f);
TestFunction function_from_json(const nlohmann::json& j);

nlohmann::json vector_to_json(const Vector& v);
nlohmann::json matrix_to_json(const Matrix& m);

/// Reads and parses a JSON file; errors name the path.
nlohmann::json read_json_file(const std::filesystem::path& path);

} // namespace fkbench
