#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace qcoder {

// JSON Lines I/O: one record per line, UTF-8, trailing newline.
std::vector<nlohmann::json> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& records);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace qcoder
