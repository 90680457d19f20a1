#pragma once

#include <cstdint>
#include <random>

namespace fragcov {

/// Pipeline stages that draw randomness; each gets its own substream.
enum class Stage : std::uint64_t {
    Grid = 1,
    Paths = 2,
    Intervals = 3,
    Noise = 4,
    Solver = 5,
    Times = 6,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for (master, replication, stage). Distinct stages and replications
/// give statistically independent mt19937_64 streams.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t replication, Stage stage);

inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t replication, Stage stage)
{
    return std::mt19937_64(substream_seed(master, replication, stage));
}

} // namespace fragcov
