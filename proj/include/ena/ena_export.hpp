#pragma once

#include "ena/ena_extract.hpp"

#include <filesystem>
#include <string>

namespace ena {

std::string to_dot(const EnaGraph& graph);
nlohmann::json graph_to_json(const EnaGraph& graph);
EnaGraph graph_from_json(const nlohmann::json& doc);

const char* to_string(EdgeClass c);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace ena
