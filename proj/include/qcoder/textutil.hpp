#pragma once

#include <string>
#include <vector>

namespace qcoder {

// Lowercase alphanumeric token runs; everything else is a separator.
std::vector<std::string> tokenize_lower(const std::string& text);

std::string trim_copy(const std::string& s);
std::string to_lower_copy(const std::string& s);

// Naive sentence count: runs of text terminated by . ! or ? (a trailing
// unterminated fragment counts as one sentence).
int count_sentences(const std::string& text);

}  // namespace qcoder
