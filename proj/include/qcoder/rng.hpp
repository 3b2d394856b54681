#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace qcoder {

// Deterministic RNG helpers. std::uniform_int_distribution is
// implementation-defined, so bounded draws are built directly on the
// mt19937_64 stream to keep sampled plans identical across toolchains.

// Uniform draw in [0, n). n must be > 0.
std::uint64_t rng_below(std::mt19937_64& rng, std::uint64_t n);

// Uniform real in [0, 1).
double rng_unit(std::mt19937_64& rng);

// In-place Fisher-Yates shuffle driven by rng_below.
template <typename T>
void rng_shuffle(std::mt19937_64& rng, std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng_below(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

// Per-stage seed derived from the run seed and a stage name, so stages can be
// re-run in isolation without disturbing the streams of other stages.
std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view stage_name);

}  // namespace qcoder
