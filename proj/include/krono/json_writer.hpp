#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace krono::io {

// Serializes with every floating-point value printed to 17 significant digits,
// so text round-trips to the same doubles. Non-finite values become null.
std::string dump_json(const nlohmann::json& value, int indent = 2);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& value);
nlohmann::json read_json_file(const std::filesystem::path& path);

// "%.17g"
std::string format_double(double value);

}  // namespace krono::io
