#include "qcoder/rng.hpp"

#include <string>

#include "qcoder/hash.hpp"

namespace qcoder {

std::uint64_t rng_below(std::mt19937_64& rng, std::uint64_t n) {
    // Rejection sampling over the top of the 64-bit stream; unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

double rng_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view stage_name) {
    std::string key = std::to_string(run_seed) + ":" + std::string(stage_name);
    std::string hex = sha256_hex(key);
    std::uint64_t out = 0;
    for (int i = 0; i < 16; ++i) {
        char c = hex[static_cast<std::size_t>(i)];
        out = (out << 4) | static_cast<std::uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
    }
    return out;
}

}  // namespace qcoder
