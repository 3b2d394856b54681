#include "qcoder/jsonl.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qcoder/errors.hpp"

namespace qcoder {

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw StageError("cannot open JSONL file: " + path);
    }
    std::vector<nlohmann::json> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& records) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw StageError("cannot open JSONL file for writing: " + path);
    }
    for (const auto& r : records) {
        out << r.dump() << '\n';
    }
    if (!out) {
        throw StageError("write failed: " + path);
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StageError("cannot open file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw StageError("cannot open file for writing: " + path);
    }
    out << content;
    if (!out) {
        throw StageError("write failed: " + path);
    }
}

}  // namespace qcoder
