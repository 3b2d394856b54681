#pragma once

#include <string>
#include <string_view>

namespace qcoder {

// Hex-encoded SHA-256. Used for request hashes, content-addressed document
// ids, and artifact hashes in the run manifest.
std::string sha256_hex(std::string_view data);

// SHA-256 of a file's raw bytes. Throws StageError if the file cannot be read.
std::string sha256_file_hex(const std::string& path);

}  // namespace qcoder
