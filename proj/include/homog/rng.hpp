#pragma once

#include <cstdint>

// Counter-based random numbers. Every random quantity in the library is a pure
// function of a 64-bit key (derived from the master seed) and a counter, so a
// realization computes the same values no matter which worker runs it.

namespace homog {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Child seed for stream `index` of `parent`. Distinct indices give
/// statistically independent children.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
    return mix64(mix64(parent + kGolden) ^ mix64(index * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Sequential stream over counters 0, 1, 2, ... of one key.
class CounterStream {
public:
    explicit constexpr CounterStream(std::uint64_t key = 0) noexcept : key_(key) {}

    constexpr std::uint64_t next_u64() noexcept {
        return mix64(key_ + kGolden * (++counter_));
    }
    constexpr double uniform() noexcept { return to_unit(next_u64()); }

    constexpr std::uint64_t consumed() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace homog
