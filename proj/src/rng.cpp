#include "crbreak/rng.hpp"

namespace crbreak {

namespace {

constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t h = mix(master);
    std::uint64_t position = 0;
    for (std::uint64_t tag : tags) {
        ++position;
        h = mix(h ^ mix(tag + position * 0xD1B54A32D192ED03ULL));
    }
    return h;
}

}  // namespace crbreak
