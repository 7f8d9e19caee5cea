#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sdd/mlp.hpp"

namespace sdd {

// Doubles are written with 17 significant digits so parsing them back is an
// exact round-trip.
std::string format_g17(double v);

// Temp file + rename within the same directory; readers never observe a
// partially written file.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_text(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

// "sdd-mlp-v1" checkpoint body.
std::string mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& doc);

std::string json_array_g17(const std::vector<double>& values);

}  // namespace sdd
