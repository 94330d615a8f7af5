#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace crbreak {

/// Mixes a master seed with a list of tags (cell index, replication index,
/// stage, draw index ...) into an independent substream seed. The mapping
/// is a pure function, so results never depend on scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) noexcept;

/// SplitMix64 generator. Small state makes it cheap to spin up one stream
/// per draw.
class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    double normal() { return normal_(*this); }
    double uniform() { return uniform_(*this); }

private:
    std::uint64_t state_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
    boost::random::uniform_01<double> uniform_{};
};

// Stage tags used to derive substreams inside the inference pipelines.
namespace stage {
inline constexpr std::uint64_t cr_at_ls = 0x11;
inline constexpr std::uint64_t cr_at_gl = 0x12;
inline constexpr std::uint64_t gl_sampling = 0x13;
inline constexpr std::uint64_t bai_quantiles = 0x14;
inline constexpr std::uint64_t data = 0x21;
inline constexpr std::uint64_t methods = 0x22;
}  // namespace stage

}  // namespace crbreak
